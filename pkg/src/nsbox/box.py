"""Exact (quasi)box data model, non-signalling checks, marginals and the
canonical marginal parameterisation.

A box over a scenario with outcome counts ``A = (A_1, ..., A_N)`` and input
counts ``X = (X_1, ..., X_N)`` is stored as a numpy object array of
:class:`fractions.Fraction` with shape ``(A_1, ..., A_N, X_1, ..., X_N)``.
All indices exposed to callers are 1-based; the last outcome ``a_k = A_k``
is the one eliminated by the canonical coordinates.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import prod
from typing import Iterator, Mapping, Sequence

import numpy as np

__all__ = [
    "Scenario",
    "QuasiBox",
    "Box",
    "MarginalTable",
    "ValidationReport",
    "SignallingWitness",
    "NonSignallingCheck",
    "StructuralError",
    "SignallingError",
    "validate",
    "is_nonsignalling",
    "marginal",
    "canonical_marginals",
    "from_marginals",
    "param_count",
    "subsets",
    "to_fraction_array",
]


class StructuralError(ValueError):
    """Table entries missing or outside the scenario's index ranges."""

    def __init__(self, message, missing=(), extra=()):
        super().__init__(message)
        self.missing = list(missing)
        self.extra = list(extra)


class SignallingError(ValueError):
    """Raised when an operation needs a non-signalling box and did not get one."""

    def __init__(self, witness: "SignallingWitness"):
        super().__init__(f"box is signalling: {witness}")
        self.witness = witness


def to_fraction_array(values, shape=None) -> np.ndarray:
    flat = [v if isinstance(v, Fraction) else Fraction(v) for v in np.asarray(values, dtype=object).ravel()]
    out = np.empty(len(flat), dtype=object)
    out[:] = flat
    if shape is None:
        shape = np.shape(values)
    return out.reshape(shape)


@dataclass(frozen=True)
class Scenario:
    outputs: tuple[int, ...]
    inputs: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "outputs", tuple(int(a) for a in self.outputs))
        object.__setattr__(self, "inputs", tuple(int(x) for x in self.inputs))
        if len(self.outputs) == 0:
            raise ValueError("a scenario needs at least one party")
        if len(self.outputs) != len(self.inputs):
            raise ValueError("outputs and inputs must have one entry per party")
        if any(a < 1 for a in self.outputs) or any(x < 1 for x in self.inputs):
            raise ValueError("outcome and input counts must be positive")

    @property
    def n_parties(self) -> int:
        return len(self.outputs)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.outputs + self.inputs

    def output_tuples(self) -> Iterator[tuple[int, ...]]:
        """1-based output tuples, last party fastest."""
        return itertools.product(*(range(1, a + 1) for a in self.outputs))

    def input_tuples(self) -> Iterator[tuple[int, ...]]:
        return itertools.product(*(range(1, x + 1) for x in self.inputs))

    def __str__(self):
        return f"{','.join(map(str, self.outputs))}/{','.join(map(str, self.inputs))}"

    @classmethod
    def parse(cls, text: str) -> "Scenario":
        """Parse ``"2,2/2,2"`` (outputs/inputs)."""
        try:
            outs, ins = text.split("/")
            return cls(tuple(int(t) for t in outs.split(",")), tuple(int(t) for t in ins.split(",")))
        except ValueError as exc:
            raise ValueError(f"bad scenario {text!r}; expected e.g. '2,2/2,2'") from exc


class QuasiBox:
    """Conditional quasiprobability table ``q(a_1..a_N | x_1..x_N)``.

    Construction checks only the shape; normalisation and sign are reported
    by :func:`validate`.
    """

    def __init__(self, scenario: Scenario, table):
        table = np.asarray(table, dtype=object)
        if table.shape != scenario.shape:
            raise StructuralError(f"table shape {table.shape} does not match scenario shape {scenario.shape}")
        table = to_fraction_array(table)
        table.flags.writeable = False
        self.scenario = scenario
        self.table = table

    @classmethod
    def from_entries(cls, scenario: Scenario, entries: Mapping[tuple, object]):
        """Build from a mapping ``(a_tuple, x_tuple) -> value`` with 1-based tuples."""
        expected = {(a, x) for x in scenario.input_tuples() for a in scenario.output_tuples()}
        keys = {(tuple(a), tuple(x)) for a, x in entries}
        missing = sorted(expected - keys)
        extra = sorted(keys - expected)
        if missing or extra:
            raise StructuralError(
                f"{len(missing)} missing and {len(extra)} out-of-range entries"
                f" (first missing: {missing[:3]}, first extra: {extra[:3]})",
                missing,
                extra,
            )
        table = np.empty(scenario.shape, dtype=object)
        for (a, x), v in entries.items():
            table[tuple(i - 1 for i in (*a, *x))] = v
        return cls(scenario, table)

    @classmethod
    def from_function(cls, scenario: Scenario, func):
        """Build from ``func(a_tuple, x_tuple)`` evaluated on every 1-based index."""
        table = np.empty(scenario.shape, dtype=object)
        for x in scenario.input_tuples():
            for a in scenario.output_tuples():
                table[tuple(i - 1 for i in (*a, *x))] = func(a, x)
        return cls(scenario, table)

    def __call__(self, a: Sequence[int], x: Sequence[int]) -> Fraction:
        return self.table[tuple(i - 1 for i in (*a, *x))]

    def column(self, x: Sequence[int]) -> np.ndarray:
        """Outcome tensor ``q(. | x)`` with shape ``outputs``."""
        return self.table[(Ellipsis,) + tuple(i - 1 for i in x)]

    def items(self):
        for x in self.scenario.input_tuples():
            for a in self.scenario.output_tuples():
                yield a, x, self(a, x)

    @property
    def is_nonnegative(self) -> bool:
        return all(v >= 0 for v in self.table.ravel())

    def as_box(self) -> "Box":
        return Box(self.scenario, self.table)

    def to_float(self) -> np.ndarray:
        return self.table.astype(float)

    def __eq__(self, other):
        if not isinstance(other, QuasiBox):
            return NotImplemented
        return self.scenario == other.scenario and bool(np.all(self.table == other.table))

    __hash__ = None

    def __repr__(self):
        return f"{type(self).__name__}(scenario={self.scenario})"


class Box(QuasiBox):
    """A :class:`QuasiBox` whose entries are all non-negative."""

    def __init__(self, scenario: Scenario, table):
        super().__init__(scenario, table)
        if not self.is_nonnegative:
            bad = next((a, x, v) for a, x, v in self.items() if v < 0)
            raise ValueError(f"negative entry {bad[2]} at a={bad[0]}, x={bad[1]}")


@dataclass(frozen=True)
class ValidationReport:
    normalization: dict  # x tuple -> column sum
    negatives: list = field(default_factory=list)  # (a, x, value)
    checked_sign: bool = False

    @property
    def normalization_failures(self) -> list:
        return [(x, s) for x, s in self.normalization.items() if s != 1]

    @property
    def normalized(self) -> bool:
        return not self.normalization_failures

    @property
    def ok(self) -> bool:
        return self.normalized and not self.negatives


def validate(q: QuasiBox, require_nonnegative: bool = False) -> ValidationReport:
    n = q.scenario.n_parties
    sums = q.table.sum(axis=tuple(range(n)))
    normalization = {x: Fraction(sums[tuple(i - 1 for i in x)]) for x in q.scenario.input_tuples()}
    negatives = []
    if require_nonnegative:
        negatives = [(a, x, v) for a, x, v in q.items() if v < 0]
    return ValidationReport(normalization, negatives, require_nonnegative)


@dataclass(frozen=True)
class SignallingWitness:
    party: int  # 1-based
    other_outputs: tuple  # outcomes of the remaining parties, 1-based
    x: tuple
    x_alt: tuple
    sum_x: Fraction
    sum_alt: Fraction

    def __str__(self):
        return (
            f"party {self.party}: sum over its outcome with others at {self.other_outputs} "
            f"is {self.sum_x} at x={self.x} but {self.sum_alt} at x={self.x_alt}"
        )


@dataclass(frozen=True)
class NonSignallingCheck:
    ok: bool
    witness: SignallingWitness | None = None

    def __bool__(self):
        return self.ok


def is_nonsignalling(q: QuasiBox) -> NonSignallingCheck:
    n = q.scenario.n_parties
    for k in range(n):
        partial = q.table.sum(axis=k)
        xk_axis = n - 1 + k
        ref = np.take(partial, [0], axis=xk_axis)
        diff = np.argwhere(partial != ref)
        if len(diff):
            idx = tuple(int(i) for i in diff[0])
            ref_idx = idx[:xk_axis] + (0,) + idx[xk_axis + 1 :]
            others = tuple(i + 1 for i in idx[: n - 1])
            x_alt = tuple(i + 1 for i in idx[n - 1 :])
            x = x_alt[:k] + (1,) + x_alt[k + 1 :]
            return NonSignallingCheck(
                False,
                SignallingWitness(k + 1, others, x, x_alt, partial[ref_idx], partial[idx]),
            )
    return NonSignallingCheck(True)


def _require_nonsignalling(q: QuasiBox):
    check = is_nonsignalling(q)
    if not check:
        raise SignallingError(check.witness)


def _normalise_subset(S) -> tuple[int, ...]:
    S = tuple(sorted(int(i) for i in S))
    if len(set(S)) != len(S):
        raise ValueError(f"repeated party in subset {S}")
    return S


def marginal_tensor(q: QuasiBox, S: Sequence[int], completion: str = "first") -> np.ndarray:
    """Marginal ``q(a_S | x_S)`` as an array of shape ``(A_S..., X_S...)``.

    Inputs of parties outside ``S`` are fixed to 1 (``completion="first"``) or
    to their largest value (``"last"``). No signalling check is made.
    """
    n = q.scenario.n_parties
    S0 = [i - 1 for i in S]
    rest = [k for k in range(n) if k not in S0]
    t = q.table.sum(axis=tuple(rest)) if rest else q.table
    # t now has axes (A_S..., X_1..X_N)
    m = len(S0)
    index = [slice(None)] * m
    for k in range(n):
        if k in S0:
            index.append(slice(None))
        else:
            index.append(0 if completion == "first" else q.scenario.inputs[k] - 1)
    return np.asarray(t[tuple(index)], dtype=object).reshape(
        tuple(q.scenario.outputs[k] for k in S0) + tuple(q.scenario.inputs[k] for k in S0)
    )


def marginal(q: QuasiBox, S: Sequence[int], a_S: Sequence[int], x_S: Sequence[int]) -> Fraction:
    """Marginal ``q(a_S | x_S)`` with 1-based party indices in ``S``.

    Raises :class:`SignallingError` if ``q`` is signalling, since the value
    would then depend on the unused inputs.
    """
    S = _normalise_subset(S)
    if len(a_S) != len(S) or len(x_S) != len(S):
        raise ValueError("a_S and x_S must have one entry per party in S")
    _require_nonsignalling(q)
    idx = tuple(i - 1 for i in (*a_S, *x_S))
    value = marginal_tensor(q, S)[idx] if S else Fraction(sum(q.column((1,) * q.scenario.n_parties).ravel()))
    assert not S or marginal_tensor(q, S, "last")[idx] == value, "marginal depends on the completion"
    return Fraction(value)


def subsets(n: int) -> Iterator[tuple[int, ...]]:
    """All subsets of ``{1..n}`` as sorted tuples, by size then lexicographically."""
    for size in range(n + 1):
        yield from itertools.combinations(range(1, n + 1), size)


def _canonical_keys(s: Scenario):
    for S in subsets(s.n_parties):
        a_ranges = [range(1, s.outputs[i - 1]) for i in S]
        x_ranges = [range(1, s.inputs[i - 1] + 1) for i in S]
        for x_S in itertools.product(*x_ranges):
            for a_S in itertools.product(*a_ranges):
                yield S, a_S, x_S


@dataclass(frozen=True)
class MarginalTable:
    """Canonical coordinates ``q(a_S | x_S)`` with every ``a_i < A_i``.

    ``entries`` maps ``(S, a_S, x_S)`` to a Fraction; the empty subset key
    ``((), (), ())`` always maps to 1.
    """

    scenario: Scenario
    entries: dict

    def __post_init__(self):
        keys = list(_canonical_keys(self.scenario))
        if set(self.entries) != set(keys):
            missing = [k for k in keys if k not in self.entries]
            extra = [k for k in self.entries if k not in set(keys)]
            raise StructuralError(
                f"marginal table keys do not match the scenario ({len(missing)} missing, {len(extra)} extra)",
                missing,
                extra,
            )
        if self.entries[((), (), ())] != 1:
            raise ValueError("the empty-subset marginal must be 1")
        object.__setattr__(self, "entries", {k: Fraction(self.entries[k]) for k in keys})

    @staticmethod
    def keys_for(s: Scenario) -> list:
        return list(_canonical_keys(s))

    def vector(self) -> list:
        """Non-constant entries in canonical key order."""
        return [v for k, v in self.entries.items() if k[0]]

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, key):
        S, a_S, x_S = key
        return self.entries[(tuple(S), tuple(a_S), tuple(x_S))]


def canonical_marginals(q: QuasiBox) -> MarginalTable:
    _require_nonsignalling(q)
    s = q.scenario
    tensors = {S: marginal_tensor(q, S) for S in subsets(s.n_parties) if S}
    entries = {}
    for S, a_S, x_S in _canonical_keys(s):
        entries[(S, a_S, x_S)] = Fraction(tensors[S][tuple(i - 1 for i in (*a_S, *x_S))]) if S else Fraction(1)
    return MarginalTable(s, entries)


def from_marginals(m: MarginalTable) -> QuasiBox:
    """Rebuild the unique non-signalling quasibox with canonical marginals ``m``.

    Any marginal with some ``a_i = A_i`` is expanded as the marginal on
    ``S minus {i}`` less the sum over ``a_i < A_i``; this recursion bottoms
    out in canonical entries.
    """
    s = m.scenario
    cache: dict = {}

    def full(S, a_S, x_S):
        key = (S, a_S, x_S)
        if key in cache:
            return cache[key]
        j = next((j for j, i in enumerate(S) if a_S[j] == s.outputs[i - 1]), None)
        if j is None:
            value = m.entries[key]
        else:
            value = full(S[:j] + S[j + 1 :], a_S[:j] + a_S[j + 1 :], x_S[:j] + x_S[j + 1 :])
            for a in range(1, s.outputs[S[j] - 1]):
                value -= full(S, a_S[:j] + (a,) + a_S[j + 1 :], x_S)
        cache[key] = value
        return value

    everyone = tuple(range(1, s.n_parties + 1))
    return QuasiBox.from_function(s, lambda a, x: full(everyone, tuple(a), tuple(x)))


def param_count(s: Scenario) -> int:
    return prod((a - 1) * x + 1 for a, x in zip(s.outputs, s.inputs))
