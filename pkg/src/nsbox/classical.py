"""Quasi-classical hidden-variable models reproducing any non-signalling box.

Two constructions are provided:

* :func:`build_negative_measurements` keeps the hidden state a genuine
  probability distribution and lets the local response functions take
  negative values.
* :func:`build_negative_state` keeps the responses deterministic and lets
  the hidden state take negative values.

Both are evaluated by the same hidden-variable sum (:func:`evaluate`), and
either can be shrunk with :func:`compress`.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from math import prod
from typing import NamedTuple, Sequence

import numpy as np

from .box import QuasiBox, Scenario, SignallingError, is_nonsignalling, marginal_tensor, subsets, to_fraction_array

__all__ = [
    "Kind",
    "Label",
    "XI",
    "ETA",
    "ClassicalModel",
    "Negativity",
    "SampleEstimate",
    "build_negative_measurements",
    "build_negative_state",
    "compress",
    "evaluate",
    "negativity",
    "sample_signed",
]


class Kind(str, Enum):
    NEGATIVE_MEASUREMENTS = "neg-meas"
    NEGATIVE_STATE = "neg-state"
    # hand-built models: no sign constraint on either side
    GENERIC = "generic"


_LABEL_RE = re.compile(r"\[(\d+),(\d+)\]|xi|eta")


@dataclass(frozen=True)
class Label:
    """Hidden-variable value for one party: a pair ``[a,x]``, ``xi`` or ``eta``."""

    tag: str
    a: int = 0
    x: int = 0

    @classmethod
    def pair(cls, a: int, x: int) -> "Label":
        return cls("pair", a, x)

    def __str__(self):
        return f"[{self.a},{self.x}]" if self.tag == "pair" else self.tag

    def __repr__(self):
        return f"Label({self})"

    @classmethod
    def parse(cls, text: str) -> "Label":
        m = _LABEL_RE.fullmatch(text.strip())
        if m is None:
            raise ValueError(f"bad hidden label {text!r}")
        if m.group(1):
            return cls.pair(int(m.group(1)), int(m.group(2)))
        return XI if m.group(0) == "xi" else ETA

    @staticmethod
    def split(text: str) -> list["Label"]:
        """Parse a comma-joined label tuple such as ``"xi,[1,2]"``."""
        parts = [m.group(0) for m in _LABEL_RE.finditer(text)]
        if ",".join(parts) != text.replace(" ", ""):
            raise ValueError(f"bad hidden label tuple {text!r}")
        return [Label.parse(p) for p in parts]


XI = Label("xi")
ETA = Label("eta")


def _pair_labels(A: int, X: int) -> list[Label]:
    return [Label.pair(a, x) for a in range(1, A + 1) for x in range(1, X + 1)]


class ClassicalModel:
    """Hidden-variable model ``p'(a|x) = sum_l prod_k R_k(a_k|x_k,l_k) w(l)``.

    ``state`` is an object array of Fractions with one axis per party (axis
    ``k`` indexed by ``spaces[k]``); ``responses[k]`` has shape
    ``(A_k, X_k, len(spaces[k]))``.
    """

    def __init__(self, scenario: Scenario, spaces, state, responses, kind=Kind.GENERIC, compressed=False):
        self.scenario = scenario
        self.spaces = tuple(tuple(sp) for sp in spaces)
        self.kind = Kind(kind)
        self.compressed = bool(compressed)
        n = scenario.n_parties
        if len(self.spaces) != n or len(responses) != n:
            raise ValueError("need one hidden space and one response table per party")
        sizes = tuple(len(sp) for sp in self.spaces)
        state = to_fraction_array(state)
        if state.shape != sizes:
            raise ValueError(f"state shape {state.shape} does not match space sizes {sizes}")
        tables = []
        for k, r in enumerate(responses):
            r = to_fraction_array(r)
            expected = (scenario.outputs[k], scenario.inputs[k], sizes[k])
            if r.shape != expected:
                raise ValueError(f"response table of party {k + 1} has shape {r.shape}, expected {expected}")
            r.flags.writeable = False
            tables.append(r)
        state.flags.writeable = False
        self.state = state
        self.responses = tuple(tables)
        self._check()

    def _check(self):
        total = sum(self.state.ravel())
        if total != 1:
            raise ValueError(f"hidden state sums to {total}, not 1")
        for k, r in enumerate(self.responses):
            sums = r.sum(axis=0)
            if not np.all(sums == 1):
                x, l = np.argwhere(sums != 1)[0]
                raise ValueError(
                    f"party {k + 1} response is not normalised at x={x + 1}, label {self.spaces[k][l]}"
                )
        if self.kind is not Kind.GENERIC:
            for k, space in enumerate(self.spaces):
                A, X = self.scenario.outputs[k], self.scenario.inputs[k]
                if any(l.tag == "pair" and not (1 <= l.a <= A and 1 <= l.x <= X) for l in space):
                    raise ValueError(f"party {k + 1} has a pair label outside its {A} outcomes and {X} inputs")
        if self.kind is Kind.NEGATIVE_MEASUREMENTS and any(w < 0 for w in self.state.ravel()):
            raise ValueError("negative-measurement models need a non-negative hidden state")
        if self.kind is Kind.NEGATIVE_STATE:
            for r in self.responses:
                if any(v not in (0, 1) for v in r.ravel()):
                    raise ValueError("negative-state models need deterministic (0/1) responses")

    @property
    def sizes(self) -> tuple[int, ...]:
        return self.state.shape

    def weight(self, labels: Sequence[Label]) -> Fraction:
        return self.state[tuple(sp.index(l) for sp, l in zip(self.spaces, labels))]

    def response(self, party: int, a: int, x: int, label: Label) -> Fraction:
        """Response entry for 1-based ``party``, outcome ``a`` and input ``x``."""
        k = party - 1
        return self.responses[k][a - 1, x - 1, self.spaces[k].index(label)]

    def __repr__(self):
        return (
            f"ClassicalModel(kind={self.kind.value}, scenario={self.scenario}, "
            f"sizes={self.sizes}, compressed={self.compressed})"
        )


def _check_input(b: QuasiBox):
    check = is_nonsignalling(b)
    if not check:
        raise SignallingError(check.witness)


def _interleave(t: np.ndarray, m: int) -> np.ndarray:
    """Reorder axes ``(A_1..A_m, X_1..X_m)`` to ``(A_1, X_1, ..., A_m, X_m)`` and merge each pair."""
    order = [ax for k in range(m) for ax in (k, m + k)]
    t = np.transpose(t, order)
    return t.reshape(tuple(t.shape[2 * k] * t.shape[2 * k + 1] for k in range(m)))


def build_negative_measurements(b: QuasiBox) -> ClassicalModel:
    """Model with a probability state over pairs ``[a,x]`` and quasi responses.

    The state weight of ``([a_1,x_1], ..., [a_N,x_N])`` is
    ``b(a|x) / (X_1 ... X_N)``; party ``k`` answers ``a < A_k`` with weight
    ``X_k`` exactly when its label is ``[a, x_k]``, and puts the remainder on
    ``A_k``, which becomes ``1 - X_k`` on labels ``[a, x_k]`` with ``a < A_k``.
    """
    _check_input(b)
    s = b.scenario
    n = s.n_parties
    state = _interleave(b.table, n) / prod(s.inputs)
    responses = []
    for A, X in zip(s.outputs, s.inputs):
        r = np.full((A, X, A * X), Fraction(0), dtype=object)
        for x in range(X):
            for a in range(A - 1):
                r[a, x, a * X + x] = Fraction(X)
            r[A - 1, x, :] = 1 - r[: A - 1, x, :].sum(axis=0)
        responses.append(r)
    spaces = [_pair_labels(A, X) for A, X in zip(s.outputs, s.inputs)]
    return ClassicalModel(s, spaces, state, responses, Kind.NEGATIVE_MEASUREMENTS)


def build_negative_state(b: QuasiBox) -> ClassicalModel:
    """Model with deterministic responses and a quasiprobability state.

    Each party's labels are the pairs ``[a,x]`` plus ``xi``. For a label tuple
    whose non-``xi`` parties form the set ``S``, the weight is
    ``prod_{i not in S} (1 - X_i) * b(a_S | x_S)``. Label ``[a,x']`` answers
    ``a`` at input ``x'`` when ``a < A_k`` and ``A_k`` otherwise; ``xi`` always
    answers ``A_k``.
    """
    _check_input(b)
    s = b.scenario
    n = s.n_parties
    sizes = tuple(A * X + 1 for A, X in zip(s.outputs, s.inputs))
    state = np.full(sizes, Fraction(0), dtype=object)
    for S in subsets(n):
        S0 = [i - 1 for i in S]
        factor = prod(Fraction(1 - s.inputs[k]) for k in range(n) if k not in S0)
        block = _interleave(marginal_tensor(b, S), len(S)) if S else np.array(Fraction(1), dtype=object)
        index = tuple(slice(0, sizes[k] - 1) if k in S0 else sizes[k] - 1 for k in range(n))
        state[index] = block * factor
    responses = []
    for A, X in zip(s.outputs, s.inputs):
        r = np.full((A, X, A * X + 1), Fraction(0), dtype=object)
        for x in range(X):
            for a in range(A - 1):
                r[a, x, a * X + x] = Fraction(1)
            r[A - 1, x, :] = 1 - r[: A - 1, x, :].sum(axis=0)
        responses.append(r)
    spaces = [_pair_labels(A, X) + [XI] for A, X in zip(s.outputs, s.inputs)]
    return ClassicalModel(s, spaces, state, responses, Kind.NEGATIVE_STATE)


def compress(m: ClassicalModel) -> ClassicalModel:
    """Merge, per party, every label that always answers the last outcome.

    Mergeable labels are found from the response table, not their names.
    Their weights are summed into a single ``eta`` label. Already compressed
    models are returned unchanged.
    """
    if m.compressed:
        return m
    s = m.scenario
    state = m.state
    spaces, responses = [], []
    for k, r in enumerate(m.responses):
        A = s.outputs[k]
        last = np.array([Fraction(int(a == A - 1)) for a in range(A)], dtype=object)
        mergeable = [l for l in range(r.shape[2]) if all(np.all(r[:, x, l] == last) for x in range(r.shape[1]))]
        keep = [l for l in range(r.shape[2]) if l not in mergeable]
        if not mergeable:
            spaces.append(m.spaces[k])
            responses.append(r)
            continue
        merged = np.take(state, mergeable, axis=k).sum(axis=k, keepdims=True)
        state = np.concatenate([np.take(state, keep, axis=k), merged], axis=k)
        column = np.broadcast_to(last[:, None, None], (A, r.shape[1], 1))
        responses.append(np.concatenate([r[:, :, keep], column], axis=2))
        spaces.append([m.spaces[k][l] for l in keep] + [ETA])
    return ClassicalModel(s, spaces, state, responses, m.kind, compressed=True)


def evaluate(m: ClassicalModel) -> QuasiBox:
    s = m.scenario
    n = s.n_parties
    t = m.state
    for r in m.responses:
        # contract the leading hidden axis; the party's (A_k, X_k) axes go to the back
        t = np.tensordot(t, r, axes=([0], [2]))
    t = np.transpose(t, [2 * k for k in range(n)] + [2 * k + 1 for k in range(n)])
    out = QuasiBox(s, t)
    assert np.all(out.table.sum(axis=tuple(range(n))) == 1), "evaluate produced an unnormalised box"
    assert is_nonsignalling(out), "evaluate produced a signalling box"
    return out


class Negativity(NamedTuple):
    state: Fraction  # total |weight| on negative hidden states
    response: Fraction  # worst per-(party, input, label) negative response mass


def negativity(m: ClassicalModel) -> Negativity:
    state_neg = -sum((w for w in m.state.ravel() if w < 0), Fraction(0))
    response_neg = Fraction(0)
    for r in m.responses:
        neg = np.vectorize(lambda v: -v if v < 0 else Fraction(0), otypes=[object])(r).sum(axis=0)
        response_neg = max(response_neg, max(neg.ravel(), default=Fraction(0)))
    return Negativity(Fraction(state_neg), Fraction(response_neg))


@dataclass(frozen=True)
class SampleEstimate:
    x: tuple
    outcomes: list  # 1-based outcome tuples in canonical order
    mean: np.ndarray
    stderr: np.ndarray
    shots: int

    def as_dict(self) -> dict:
        return {a: (float(mu), float(se)) for a, mu, se in zip(self.outcomes, self.mean, self.stderr)}


def sample_signed(m: ClassicalModel, x: Sequence[int], shots: int, seed: int) -> SampleEstimate:
    """Monte Carlo estimate of ``evaluate(m)(. | x)`` by signed sampling.

    Hidden tuples are drawn from ``|w| / ||w||_1``; each draw contributes
    ``sign(w) ||w||_1 prod_k R_k(a_k|x_k,l_k)`` to every outcome ``a``.
    """
    if shots < 1:
        raise ValueError("shots must be at least 1")
    s = m.scenario
    x = tuple(int(i) for i in x)
    if len(x) != s.n_parties or any(not 1 <= xi <= X for xi, X in zip(x, s.inputs)):
        raise ValueError(f"input tuple {x} out of range for scenario {s}")
    rng = np.random.default_rng(seed)
    w = m.state.astype(float).ravel()
    norm = np.abs(w).sum()
    counts = rng.multinomial(shots, np.abs(w) / norm)

    # contribution of each hidden tuple to each outcome, shape (prod L, prod A)
    contrib = np.ones(())
    for k, r in enumerate(m.responses):
        contrib = np.multiply.outer(contrib, r[:, x[k] - 1, :].astype(float).T)
    n = s.n_parties
    contrib = np.transpose(contrib, [2 * k for k in range(n)] + [2 * k + 1 for k in range(n)])
    contrib = contrib.reshape(w.size, -1) * (np.sign(w) * norm)[:, None]

    mean = counts @ contrib / shots
    if shots > 1:
        var = (counts @ contrib**2 / shots - mean**2) * shots / (shots - 1)
        stderr = np.sqrt(np.clip(var, 0.0, None) / shots)
    else:
        stderr = np.zeros_like(mean)
    return SampleEstimate(x, list(s.output_tuples()), mean, stderr, shots)
