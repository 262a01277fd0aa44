"""Reference boxes and seeded random corpora."""
from __future__ import annotations

from fractions import Fraction
from math import prod

import numpy as np

from .box import Box, QuasiBox, Scenario, canonical_marginals, from_marginals, MarginalTable

__all__ = [
    "CHSH_SCENARIO",
    "pr_box",
    "tsirelson_box",
    "deterministic_box",
    "uniform_box",
    "random_strategy",
    "random_local_box",
    "random_nonsignalling_box",
    "random_nonsignalling_quasibox",
]

CHSH_SCENARIO = Scenario((2, 2), (2, 2))

# best rational approximation of 1/sqrt(2) with denominator below 1e8 (error ~1.2e-16)
INV_SQRT2 = Fraction(54608393, 77227930)


def _pr(a, x) -> Fraction:
    return Fraction(1, 2) if (a[0] - 1) ^ (a[1] - 1) == (x[0] - 1) * (x[1] - 1) else Fraction(0)


def pr_box() -> Box:
    return Box.from_function(CHSH_SCENARIO, _pr)


def tsirelson_box() -> Box:
    """Maximally entangled two-qubit box reaching CHSH value ``2*sqrt(2)``.

    ``p(a,b|x,y) = (1 + s E_xy) / 4`` with ``s = +1`` iff ``a == b`` and
    ``E_xy = -1/sqrt(2)`` only at ``x = y = 2``.
    """

    def p(a, x):
        corr = -INV_SQRT2 if x == (2, 2) else INV_SQRT2
        sign = 1 if a[0] == a[1] else -1
        return (1 + sign * corr) / 4

    return Box.from_function(CHSH_SCENARIO, p)


def _check_strategy(s: Scenario, strategy):
    strategy = tuple(tuple(int(v) for v in f) for f in strategy)
    if len(strategy) != s.n_parties:
        raise ValueError("a strategy needs one assignment per party")
    for k, f in enumerate(strategy):
        if len(f) != s.inputs[k]:
            raise ValueError(f"party {k + 1} assignment must list an outcome for each of its {s.inputs[k]} inputs")
        if any(not 1 <= v <= s.outputs[k] for v in f):
            raise ValueError(f"party {k + 1} assignment {f} leaves the outcome range 1..{s.outputs[k]}")
    return strategy


def deterministic_box(s: Scenario, strategy) -> Box:
    """Point-mass box; ``strategy[k][x-1]`` is party ``k``'s outcome on input ``x``."""
    strategy = _check_strategy(s, strategy)
    return Box.from_function(s, lambda a, x: Fraction(int(all(f[xk - 1] == ak for f, ak, xk in zip(strategy, a, x)))))


def uniform_box(s: Scenario) -> Box:
    return Box(s, np.full(s.shape, Fraction(1, prod(s.outputs)), dtype=object))


def random_strategy(s: Scenario, rng: np.random.Generator) -> tuple:
    return tuple(tuple(int(v) + 1 for v in rng.integers(0, A, size=X)) for A, X in zip(s.outputs, s.inputs))


def _mix(s: Scenario, boxes, weights) -> Box:
    table = sum((w * b.table for w, b in zip(weights, boxes)), np.full(s.shape, Fraction(0), dtype=object))
    return Box(s, table)


def random_local_box(s: Scenario, seed: int) -> Box:
    """Random convex mixture of at most 20 deterministic boxes."""
    rng = np.random.default_rng(seed)
    count = int(rng.integers(1, 21))
    raw = [int(w) for w in rng.integers(1, 101, size=count)]
    weights = [Fraction(w, sum(raw)) for w in raw]
    vertices = [deterministic_box(s, random_strategy(s, rng)) for _ in range(count)]
    return _mix(s, vertices, weights)


def _reference_box(s: Scenario, rng: np.random.Generator) -> Box:
    """PR correlations on a random binary pair of parties, deterministic elsewhere."""
    binary = [k for k in range(s.n_parties) if s.outputs[k] == 2 and s.inputs[k] == 2]
    if len(binary) < 2:
        return random_local_box(s, int(rng.integers(2**31)))
    i, j = sorted(int(k) for k in rng.choice(binary, size=2, replace=False))
    f = random_strategy(s, rng)

    def p(a, x):
        others = all(f[k][x[k] - 1] == a[k] for k in range(s.n_parties) if k not in (i, j))
        return _pr((a[i], a[j]), (x[i], x[j])) if others else Fraction(0)

    return Box.from_function(s, p)


def random_nonsignalling_box(s: Scenario, seed: int) -> Box:
    """Mixture ``t * local + (1 - t) * reference`` with rational ``t`` in [0, 1].

    The reference carries PR correlations whenever two parties are binary, so
    a good share of outputs are non-local.
    """
    rng = np.random.default_rng(seed)
    local = random_local_box(s, int(rng.integers(2**31)))
    reference = _reference_box(s, rng)
    t = Fraction(int(rng.integers(0, 101)), 100)
    return _mix(s, [local, reference], [t, 1 - t])


def random_nonsignalling_quasibox(s: Scenario, seed: int, max_shift: int = 1) -> QuasiBox:
    """Non-signalling quasibox obtained by shifting canonical coordinates of a random box.

    Shifts are rationals in ``[-max_shift, max_shift]`` with denominators up
    to 20, so the result usually has negative entries.
    """
    rng = np.random.default_rng(seed)
    base = canonical_marginals(random_nonsignalling_box(s, int(rng.integers(2**31))))
    entries = dict(base.entries)
    for key in entries:
        if key[0] and rng.random() < 0.5:
            den = int(rng.integers(1, 21))
            entries[key] += Fraction(int(rng.integers(-max_shift * den, max_shift * den + 1)), den)
    return from_marginals(MarginalTable(s, entries))
