import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nsbox import gallery
from nsbox.box import (
    Box,
    MarginalTable,
    QuasiBox,
    Scenario,
    SignallingError,
    StructuralError,
    canonical_marginals,
    from_marginals,
    is_nonsignalling,
    marginal,
    param_count,
    validate,
)

from conftest import CHSH, TRIPARTITE


def brute_marginal(q, S, a_S, x_S, completion):
    """Sum of q over outcomes of parties outside S, by explicit enumeration."""
    s = q.scenario
    total = Fraction(0)
    x = [completion[k] for k in range(s.n_parties)]
    for i, xi in zip(S, x_S):
        x[i - 1] = xi
    for a in s.output_tuples():
        if all(a[i - 1] == ai for i, ai in zip(S, a_S)):
            total += q(a, tuple(x))
    return total


scenarios = st.builds(
    lambda outs, ins: Scenario(outs, ins),
    st.shared(st.integers(1, 3), key="n").flatmap(lambda n: st.tuples(*[st.integers(1, 3)] * n)),
    st.shared(st.integers(1, 3), key="n").flatmap(lambda n: st.tuples(*[st.integers(1, 3)] * n)),
).filter(lambda s: np.prod(s.shape) <= 400)


class TestScenario:
    def test_rejects_bad_counts(self):
        with pytest.raises(ValueError):
            Scenario((2, 0), (2, 2))
        with pytest.raises(ValueError):
            Scenario((2,), (2, 2))
        with pytest.raises(ValueError):
            Scenario((), ())

    def test_parse(self):
        assert Scenario.parse("2,3/4,1") == Scenario((2, 3), (4, 1))
        assert str(Scenario((2, 3), (4, 1))) == "2,3/4,1"


class TestValidate:
    def test_pr_passes_and_is_nonnegative(self):
        report = validate(gallery.pr_box(), require_nonnegative=True)
        assert report.ok
        assert report.normalized and report.negatives == []

    def test_point_mass_passes(self):
        box = QuasiBox.from_function(CHSH, lambda a, x: int(a == (1, 1)))
        assert validate(box).ok

    def test_bad_column_sum(self):
        table = gallery.pr_box().table.copy()
        table[0, 0, 0, 0] = Fraction(3, 5)
        report = validate(QuasiBox(CHSH, table))
        assert not report.normalized
        assert report.normalization_failures == [((1, 1), Fraction(11, 10))]

    def test_negative_entries_reported_with_index(self):
        q = QuasiBox.from_function(Scenario((2,), (1,)), lambda a, x: 2 if a == (1,) else -1)
        report = validate(q, require_nonnegative=True)
        assert report.normalized and not report.ok
        assert report.negatives == [((2,), (1,), Fraction(-1))]

    def test_structural_errors(self):
        entries = {(a, x): Fraction(1, 4) for x in CHSH.input_tuples() for a in CHSH.output_tuples()}
        del entries[((1, 1), (2, 2))]
        entries[((3, 1), (1, 1))] = Fraction(0)
        with pytest.raises(StructuralError) as info:
            QuasiBox.from_entries(CHSH, entries)
        assert info.value.missing == [((1, 1), (2, 2))]
        assert info.value.extra == [((3, 1), (1, 1))]
        with pytest.raises(StructuralError):
            QuasiBox(CHSH, np.zeros((2, 2, 2)))

    def test_box_rejects_negative(self):
        with pytest.raises(ValueError):
            Box(Scenario((2,), (1,)), [[2], [-1]])


class TestNonSignalling:
    def test_pr(self):
        assert is_nonsignalling(gallery.pr_box())

    def test_signalling_witness(self):
        # party 1 outputs party 2's input; party 2 uniform
        box = QuasiBox.from_function(CHSH, lambda a, x: Fraction(int(a[0] == x[1]), 2))
        check = is_nonsignalling(box)
        assert not check
        w = check.witness
        assert w.party == 2  # summing party 2 out leaves party 1's marginal depending on x2
        assert w.x[1] != w.x_alt[1] and w.x[0] == w.x_alt[0]
        assert w.sum_x != w.sum_alt

    def test_signalling_witness_party_one(self):
        # party 2 outputs party 1's input; summing out party 1 is fine, party 2's marginal varies with x1
        box = QuasiBox.from_function(CHSH, lambda a, x: Fraction(int(a[1] == x[0]), 2))
        w = is_nonsignalling(box).witness
        assert w.party == 1 and w.other_outputs in {(1,), (2,)}

    @pytest.mark.parametrize("seed", range(5))
    def test_single_party_always_nonsignalling(self, seed):
        s = Scenario((3,), (4,))
        assert is_nonsignalling(gallery.random_local_box(s, seed))


class TestMarginal:
    def test_pr_single_party(self):
        pr = gallery.pr_box()
        for k in (1, 2):
            for x in (1, 2):
                assert marginal(pr, [k], [1], [x]) == Fraction(1, 2)

    def test_full_subset_is_entry(self):
        pr = gallery.pr_box()
        for a, x, v in pr.items():
            assert marginal(pr, [1, 2], a, x) == v

    def test_empty_subset_is_one(self):
        assert marginal(gallery.pr_box(), [], [], []) == 1

    def test_signalling_rejected(self):
        box = QuasiBox.from_function(CHSH, lambda a, x: Fraction(int(a[0] == x[1]), 2))
        with pytest.raises(SignallingError) as info:
            marginal(box, [1], [1], [1])
        assert info.value.witness.party == 2

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_enumeration_for_every_completion(self, seed):
        q = gallery.random_nonsignalling_quasibox(TRIPARTITE, seed)
        for S in [(1,), (2, 3), (1, 3)]:
            for a_S in itertools.product((1, 2), repeat=len(S)):
                for x_S in itertools.product((1, 2), repeat=len(S)):
                    value = marginal(q, S, a_S, x_S)
                    for completion in itertools.product((1, 2), repeat=3):
                        assert brute_marginal(q, S, a_S, x_S, completion) == value


class TestCanonicalMarginals:
    def test_pr(self):
        m = canonical_marginals(gallery.pr_box())
        assert len(m) == 9
        assert m[(), (), ()] == 1
        for x1, x2 in itertools.product((1, 2), repeat=2):
            expected = Fraction(0) if (x1, x2) == (2, 2) else Fraction(1, 2)
            assert m[(1, 2), (1, 1), (x1, x2)] == expected
        for k in (1, 2):
            for x in (1, 2):
                assert m[(k,), (1,), (x,)] == Fraction(1, 2)

    def test_uniform(self):
        s = Scenario((3, 2), (2, 2))
        m = canonical_marginals(gallery.uniform_box(s))
        pair_entries = [v for (S, _, _), v in m.entries.items() if S == (1, 2)]
        assert pair_entries and all(v == Fraction(1, 6) for v in pair_entries)

    def test_trivial_outputs(self):
        s = Scenario((1, 1), (3, 2))
        m = canonical_marginals(gallery.uniform_box(s))
        assert m.entries == {((), (), ()): Fraction(1)}

    def test_bad_table_keys(self):
        with pytest.raises(StructuralError):
            MarginalTable(CHSH, {((), (), ()): 1})


class TestFromMarginals:
    def test_pr_round_trip(self):
        pr = gallery.pr_box()
        assert from_marginals(canonical_marginals(pr)) == pr

    def test_zero_table_is_last_outcome_point_mass(self):
        s = Scenario((3, 2, 2), (2, 1, 3))
        entries = {k: Fraction(0) for k in MarginalTable.keys_for(s)}
        entries[((), (), ())] = Fraction(1)
        box = from_marginals(MarginalTable(s, entries))
        for a, x, v in box.items():
            assert v == (1 if a == s.outputs else 0)

    @pytest.mark.parametrize("seed", range(100))
    def test_quasibox_round_trip(self, seed):
        q = gallery.random_nonsignalling_quasibox(CHSH, seed)
        m = canonical_marginals(q)
        assert from_marginals(m) == q
        assert canonical_marginals(from_marginals(m)).entries == m.entries

    @settings(max_examples=40, deadline=None)
    @given(scenarios, st.integers(0, 2**32 - 1))
    def test_properties_on_random_scenarios(self, s, seed):
        q = gallery.random_nonsignalling_quasibox(s, seed)
        assert validate(q).normalized
        assert is_nonsignalling(q)
        m = canonical_marginals(q)
        assert len(m) == param_count(s)
        assert from_marginals(m) == q


class TestParamCount:
    @pytest.mark.parametrize(
        "s, count",
        [
            (Scenario((2, 2), (2, 2)), 9),
            (Scenario((1, 1, 1), (3, 2, 5)), 1),
            (Scenario((2, 2, 2), (2, 2, 2)), 27),
            (Scenario((3, 2), (2, 4)), 25),
        ],
    )
    def test_formula(self, s, count):
        assert param_count(s) == count
        assert len(MarginalTable.keys_for(s)) == count
