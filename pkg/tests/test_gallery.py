from fractions import Fraction

import numpy as np
import pytest

from nsbox import gallery
from nsbox.box import Scenario, is_nonsignalling, validate
from nsbox.locality import bell_value, chsh_functional, is_local

from conftest import CHSH, TRIPARTITE


def two_qubit_chsh_box():
    """Born-rule probabilities for |Phi+> with A = Z, X and B = (Z +- X)/sqrt(2)."""
    Z = np.array([[1, 0], [0, -1]])
    X = np.array([[0, 1], [1, 0]])
    phi = np.array([1, 0, 0, 1]) / np.sqrt(2)
    rho = np.outer(phi, phi)
    alice = [Z, X]
    bob = [(Z + X) / np.sqrt(2), (Z - X) / np.sqrt(2)]
    p = np.zeros((2, 2, 2, 2))
    for x in range(2):
        for y in range(2):
            for a in range(2):
                for b in range(2):
                    # outcome index 1 is the +1 eigenvalue
                    Pa = (np.eye(2) + (-1) ** a * alice[x]) / 2
                    Pb = (np.eye(2) + (-1) ** b * bob[y]) / 2
                    p[a, b, x, y] = np.trace(np.kron(Pa, Pb) @ rho)
    return p


def test_pr_entries():
    pr = gallery.pr_box()
    assert pr((1, 1), (1, 1)) == Fraction(1, 2)
    assert pr((1, 1), (2, 2)) == 0
    assert pr((1, 2), (2, 2)) == Fraction(1, 2)
    assert is_nonsignalling(pr)
    assert not is_local(pr).is_local


def test_tsirelson_matches_born_rule():
    oracle = two_qubit_chsh_box()
    box = gallery.tsirelson_box()
    assert np.max(np.abs(box.to_float() - oracle)) <= 1e-12
    assert abs(float(bell_value(box, chsh_functional())) - 2 * np.sqrt(2)) <= 1e-9
    assert abs(np.sum(oracle * chsh_functional().astype(float)) - 2 * np.sqrt(2)) <= 1e-12
    assert is_nonsignalling(box)
    assert not is_local(box).is_local


def test_deterministic_and_uniform():
    det = gallery.deterministic_box(CHSH, ((1, 1), (1, 1)))
    assert all(v == (1 if a == (1, 1) else 0) for a, x, v in det.items())
    uni = gallery.uniform_box(CHSH)
    assert all(v == Fraction(1, 4) for _, _, v in uni.items())
    assert is_local(det).is_local and is_local(uni).is_local


@pytest.mark.parametrize("strategy", [((1, 3), (1, 1)), ((1,), (1, 1)), ((1, 1),)])
def test_bad_strategy(strategy):
    with pytest.raises(ValueError):
        gallery.deterministic_box(CHSH, strategy)


@pytest.mark.parametrize("s", [CHSH, TRIPARTITE, Scenario((3, 2), (2, 3)), Scenario((1,), (2,))])
@pytest.mark.parametrize("seed", range(8))
def test_random_boxes_validate(s, seed):
    for make in (gallery.random_local_box, gallery.random_nonsignalling_box):
        b = make(s, seed)
        assert validate(b, require_nonnegative=True).ok
        assert is_nonsignalling(b)
        assert make(s, seed) == b


def test_random_local_is_local():
    for seed in range(10):
        assert is_local(gallery.random_local_box(TRIPARTITE, seed)).is_local


def test_corpus_contains_nonlocal_boxes():
    verdicts = [is_local(gallery.random_nonsignalling_box(CHSH, seed)).is_local for seed in range(30)]
    assert 0 < sum(verdicts) < len(verdicts)


def test_quasibox_has_negative_entries():
    negative = [not gallery.random_nonsignalling_quasibox(CHSH, seed).is_nonnegative for seed in range(20)]
    assert sum(negative) >= 15
