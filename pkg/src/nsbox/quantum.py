"""Commuting diagonal operator representations of the hidden-variable models.

Every hidden label becomes a basis vector, the hidden state becomes a
diagonal state operator and each response function becomes a diagonal
measurement operator. Since all operators are diagonal in one product
basis they commute, and the Born trace rule reduces to a weighted sum.
Full matrices are never built.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce

import numpy as np

from .box import QuasiBox, Scenario, to_fraction_array
from .classical import ClassicalModel, Kind

__all__ = ["DiagonalOperator", "QuantumModel", "VerifyReport", "lift", "evaluate_trace", "verify"]


@dataclass(frozen=True, eq=False)
class DiagonalOperator:
    basis: tuple  # labels (one party) or label tuples (joint space)
    diag: np.ndarray

    def __post_init__(self):
        diag = to_fraction_array(self.diag).ravel()
        if len(diag) != len(self.basis):
            raise ValueError(f"{len(diag)} diagonal entries for a {len(self.basis)}-dimensional basis")
        diag.flags.writeable = False
        object.__setattr__(self, "basis", tuple(self.basis))
        object.__setattr__(self, "diag", diag)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def trace(self) -> Fraction:
        return sum(self.diag, Fraction(0))

    def is_positive(self) -> bool:
        return all(v >= 0 for v in self.diag)

    def negative_entries(self) -> list:
        return [(b, v) for b, v in zip(self.basis, self.diag) if v < 0]

    def to_matrix(self) -> np.ndarray:
        """Dense float matrix; only meant for small cross-checks."""
        return np.diag(self.diag.astype(float))

    def __eq__(self, other):
        if not isinstance(other, DiagonalOperator):
            return NotImplemented
        return self.basis == other.basis and bool(np.all(self.diag == other.diag))

    __hash__ = None


class QuantumModel:
    """Diagonal state operator plus diagonal measurement operators.

    ``measurements`` maps 1-based ``(party, x, a)`` to the operator for
    outcome ``a`` of input ``x`` on that party's space.
    """

    def __init__(self, scenario: Scenario, bases, state: DiagonalOperator, measurements: dict, kind=Kind.GENERIC,
                 compressed=False):
        self.scenario = scenario
        self.bases = tuple(tuple(b) for b in bases)
        self.state = state
        self.measurements = dict(measurements)
        self.kind = Kind(kind)
        self.compressed = bool(compressed)
        expected = {
            (k + 1, x, a)
            for k in range(scenario.n_parties)
            for x in range(1, scenario.inputs[k] + 1)
            for a in range(1, scenario.outputs[k] + 1)
        }
        if set(self.measurements) != expected:
            raise ValueError("measurement operators must cover every (party, input, outcome)")
        if len(self.bases) != scenario.n_parties:
            raise ValueError("need one basis per party")

    @property
    def joint_basis(self) -> tuple:
        return tuple(itertools.product(*self.bases))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.bases)

    def measurement(self, party: int, a: int, x: int) -> DiagonalOperator:
        return self.measurements[(party, x, a)]

    def __repr__(self):
        return f"QuantumModel(kind={self.kind.value}, scenario={self.scenario}, dims={self.dims})"


def lift(m: ClassicalModel) -> QuantumModel:
    joint = tuple(itertools.product(*m.spaces))
    state = DiagonalOperator(joint, m.state.ravel())
    measurements = {}
    for k, r in enumerate(m.responses):
        for x in range(r.shape[1]):
            for a in range(r.shape[0]):
                measurements[(k + 1, x + 1, a + 1)] = DiagonalOperator(m.spaces[k], r[a, x, :])
    return QuantumModel(m.scenario, m.spaces, state, measurements, m.kind, m.compressed)


def evaluate_trace(qm: QuantumModel) -> QuasiBox:
    """Box ``tr((M_{a_1|x_1} (x) ... (x) M_{a_N|x_N}) rho)`` for every ``a, x``."""
    rho = qm.state.diag

    def entry(a, x):
        factors = [qm.measurements[(k + 1, xk, ak)].diag for k, (ak, xk) in enumerate(zip(a, x))]
        product_diag = reduce(np.multiply.outer, factors).ravel()
        return sum(product_diag * rho, Fraction(0))

    return QuasiBox.from_function(qm.scenario, entry)


@dataclass
class VerifyReport:
    completeness_failures: list = field(default_factory=list)  # (party, x)
    trace: Fraction = Fraction(1)
    state_positive: bool = True
    measurements_positive: bool = True
    measurements_deterministic: bool = True
    negative_state_entries: list = field(default_factory=list)  # (joint label, value)
    negative_measurement_entries: list = field(default_factory=list)  # (party, x, a, label, value)
    shared_basis: bool = True
    kind: Kind = Kind.GENERIC

    @property
    def complete(self) -> bool:
        return not self.completeness_failures

    @property
    def trace_ok(self) -> bool:
        return self.trace == 1

    @property
    def commuting(self) -> bool:
        # diagonal operators in one shared product basis commute pairwise
        return self.shared_basis

    @property
    def kind_positivity_ok(self) -> bool:
        if self.kind is Kind.NEGATIVE_MEASUREMENTS:
            return self.state_positive
        if self.kind is Kind.NEGATIVE_STATE:
            return self.measurements_positive
        return True

    @property
    def ok(self) -> bool:
        return self.complete and self.trace_ok and self.kind_positivity_ok and self.commuting

    @property
    def local_form(self) -> bool:
        """Both sides positive, so the model is an ordinary local hidden-variable model."""
        return self.state_positive and self.measurements_positive


def verify(qm: QuantumModel) -> VerifyReport:
    report = VerifyReport(kind=qm.kind)
    s = qm.scenario
    report.shared_basis = qm.state.basis == qm.joint_basis and all(
        op.basis == qm.bases[party - 1] for (party, _, _), op in qm.measurements.items()
    )
    for k in range(s.n_parties):
        for x in range(1, s.inputs[k] + 1):
            total = sum((qm.measurements[(k + 1, x, a)].diag for a in range(1, s.outputs[k] + 1)))
            if not np.all(total == 1):
                report.completeness_failures.append((k + 1, x))
    report.trace = qm.state.trace()
    report.negative_state_entries = qm.state.negative_entries()
    report.state_positive = not report.negative_state_entries
    for (party, x, a), op in sorted(qm.measurements.items()):
        for label, v in op.negative_entries():
            report.negative_measurement_entries.append((party, x, a, label, v))
        if any(v not in (0, 1) for v in op.diag):
            report.measurements_deterministic = False
    report.measurements_positive = not report.negative_measurement_entries
    return report
