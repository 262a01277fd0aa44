from fractions import Fraction
from functools import reduce

import numpy as np
import pytest

from nsbox import gallery
from nsbox.classical import XI, ClassicalModel, Kind, Label, build_negative_measurements, build_negative_state, compress, evaluate
from nsbox.locality import is_local
from nsbox.quantum import DiagonalOperator, evaluate_trace, lift, verify
from nsbox.box import Scenario

from conftest import CHSH, TRIPARTITE

P = Label.pair


def dense_born(qm):
    """tr((M_1 (x) ... (x) M_N) rho) with explicit float matrices."""
    rho = qm.state.to_matrix()
    out = np.zeros(qm.scenario.shape)
    for x in qm.scenario.input_tuples():
        for a in qm.scenario.output_tuples():
            ops = [qm.measurement(k + 1, ak, xk).to_matrix() for k, (ak, xk) in enumerate(zip(a, x))]
            out[tuple(i - 1 for i in (*a, *x))] = np.trace(reduce(np.kron, ops) @ rho)
    return out


class TestLift:
    def test_negative_state_pr(self):
        qm = lift(build_negative_state(gallery.pr_box()))
        assert qm.state.dim == 25
        assert qm.dims == (5, 5)
        assert qm.state.trace() == 1
        assert qm.state.diag[qm.state.basis.index((XI, P(1, 1)))] == Fraction(-1, 2)

    def test_negative_measurement_entry(self):
        qm = lift(build_negative_measurements(gallery.pr_box()))
        for party in (1, 2):
            for x in (1, 2):
                op = qm.measurement(party, 2, x)
                assert op.diag[op.basis.index(P(1, x))] == -1

    def test_compressed_dimension(self):
        for build in (build_negative_measurements, build_negative_state):
            qm = lift(compress(build(gallery.pr_box())))
            assert qm.state.dim == 9

    def test_dense_matrices_agree(self):
        for build in (build_negative_measurements, build_negative_state):
            qm = lift(build(gallery.pr_box()))
            assert np.allclose(dense_born(qm), gallery.pr_box().to_float(), atol=1e-12)
            mats = [qm.state.to_matrix()] + [
                reduce(np.kron, [qm.measurement(1, 1, 1).to_matrix(), qm.measurement(2, 2, 2).to_matrix()])
            ]
            assert np.allclose(mats[0] @ mats[1], mats[1] @ mats[0])


class TestEvaluateTrace:
    @pytest.mark.parametrize("build", [build_negative_measurements, build_negative_state])
    def test_pr(self, build):
        assert evaluate_trace(lift(build(gallery.pr_box()))) == gallery.pr_box()

    def test_trivial_outputs(self):
        s = Scenario((1, 1), (2, 3))
        qm = lift(build_negative_state(gallery.uniform_box(s)))
        out = evaluate_trace(qm)
        assert all(v == 1 for _, _, v in out.items())

    @pytest.mark.parametrize("seed", range(5))
    def test_commutes_with_evaluate(self, seed):
        b = gallery.random_nonsignalling_box(TRIPARTITE, seed)
        for build in (build_negative_measurements, build_negative_state):
            for m in (build(b), compress(build(b))):
                assert evaluate_trace(lift(m)) == evaluate(m) == b


class TestVerify:
    def test_negative_measurements_report(self):
        r = verify(lift(build_negative_measurements(gallery.pr_box())))
        assert r.ok and r.complete and r.trace_ok and r.commuting
        assert r.state_positive and not r.measurements_positive
        assert {v for *_, v in r.negative_measurement_entries} == {-1}

    def test_negative_state_report(self):
        r = verify(lift(build_negative_state(gallery.pr_box())))
        assert r.ok and r.measurements_deterministic
        assert not r.state_positive
        assert Fraction(-1, 2) in {v for _, v in r.negative_state_entries}

    @pytest.mark.parametrize("strategy", [((1, 2), (2, 2)), ((2, 1), (1, 1))])
    def test_local_deterministic_box_still_negative(self, strategy):
        b = gallery.deterministic_box(CHSH, strategy)
        r = verify(lift(build_negative_state(b)))
        assert r.ok and not r.state_positive

    def test_broken_completeness_reported(self):
        qm = lift(build_negative_state(gallery.pr_box()))
        op = qm.measurements[(1, 1, 1)]
        qm.measurements[(1, 1, 1)] = DiagonalOperator(op.basis, [v * 2 for v in op.diag])
        r = verify(qm)
        assert r.completeness_failures == [(1, 1)]
        assert not r.ok

    def test_mismatched_basis_not_commuting(self):
        qm = lift(build_negative_state(gallery.pr_box()))
        op = qm.measurements[(2, 1, 1)]
        qm.measurements[(2, 1, 1)] = DiagonalOperator(tuple(reversed(op.basis)), op.diag)
        assert not verify(qm).commuting

    def test_positive_on_both_sides_means_local(self):
        # a proper hidden-variable model lifted: both positivity flags hold
        for seed in range(5):
            b = gallery.random_local_box(CHSH, seed)
            cert = is_local(b)
            strategies = list(cert.weights)
            spaces = [[P(i + 1, 1) for i in range(len(strategies))]] * 2
            # pair labels used as plain names; shared-lambda model: party k plays strategy j's assignment when lambda_1 = lambda_2 = j
            state = np.full((len(strategies),) * 2, Fraction(0), dtype=object)
            for j, f in enumerate(strategies):
                state[j, j] = cert.weights[f]
            responses = []
            for k in range(2):
                r = np.full((2, 2, len(strategies)), Fraction(0), dtype=object)
                for j, f in enumerate(strategies):
                    for x in range(2):
                        r[f[k][x] - 1, x, j] = Fraction(1)
                responses.append(r)
            qm = lift(ClassicalModel(CHSH, spaces, state, responses, Kind.GENERIC))
            report = verify(qm)
            assert report.local_form
            assert is_local(evaluate_trace(qm)).is_local
            assert evaluate_trace(qm) == b
