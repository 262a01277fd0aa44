"""Canonical JSON formats for boxes, marginal tables and models.

Rationals are written as ``"num/den"`` strings; readers also accept decimal
strings (converted exactly) and plain JSON numbers. Writers are canonical:
object keys are sorted and tuples follow the canonical enumeration, so a
read-write round trip is byte-identical.
"""
from __future__ import annotations

import itertools
import json
from fractions import Fraction
from math import prod

import numpy as np

from .box import MarginalTable, QuasiBox, Scenario, StructuralError
from .classical import ClassicalModel, Kind, Label
from .quantum import DiagonalOperator, QuantumModel

__all__ = [
    "ParseError",
    "format_rational",
    "parse_rational",
    "dumps",
    "loads",
    "box_to_dict",
    "box_from_dict",
    "marginals_to_dict",
    "marginals_from_dict",
    "model_to_dict",
    "model_from_dict",
    "quantum_to_dict",
    "quantum_from_dict",
]


class ParseError(ValueError):
    pass


def format_rational(v) -> str:
    v = Fraction(v)
    return f"{v.numerator}/{v.denominator}"


def parse_rational(v) -> Fraction:
    if isinstance(v, bool):
        raise ParseError(f"expected a rational, got {v!r}")
    if isinstance(v, (int, float, str)):
        try:
            return Fraction(str(v).strip()) if not isinstance(v, int) else Fraction(v)
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"bad rational {v!r}") from exc
    raise ParseError(f"expected a rational, got {v!r}")


def _tuple_key(t) -> str:
    return ",".join(str(i) for i in t)


def _parse_tuple(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.split(","))
    except ValueError as exc:
        raise ParseError(f"bad index tuple {text!r}") from exc


def _scenario_to_dict(s: Scenario) -> dict:
    return {"inputs": list(s.inputs), "outputs": list(s.outputs)}


def _scenario_from_dict(d) -> Scenario:
    try:
        return Scenario(tuple(d["outputs"]), tuple(d["inputs"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad scenario {d!r}: {exc}") from exc


def box_to_dict(q: QuasiBox) -> dict:
    s = q.scenario
    probs = {_tuple_key(x): [format_rational(v) for v in q.column(x).ravel()] for x in s.input_tuples()}
    return {"probabilities": probs, "scenario": _scenario_to_dict(s)}


def box_from_dict(d: dict) -> QuasiBox:
    if not isinstance(d, dict) or "scenario" not in d or "probabilities" not in d:
        raise ParseError("a box file needs 'scenario' and 'probabilities'")
    s = _scenario_from_dict(d["scenario"])
    probs = d["probabilities"]
    if not isinstance(probs, dict):
        raise ParseError("'probabilities' must be an object keyed by input tuple")
    expected = {_tuple_key(x): x for x in s.input_tuples()}
    missing = [k for k in expected if k not in probs]
    extra = [k for k in probs if k not in expected]
    if missing or extra:
        raise StructuralError(f"probabilities: missing input tuples {missing[:5]}, unexpected {extra[:5]}", missing, extra)
    n_out = prod(s.outputs)
    table = np.empty(s.shape, dtype=object)
    for key, x in expected.items():
        column = probs[key]
        if not isinstance(column, list) or len(column) != n_out:
            raise StructuralError(f"probabilities[{key!r}] must list {n_out} entries")
        try:
            values = [parse_rational(v) for v in column]
        except ParseError as exc:
            raise ParseError(f"probabilities[{key!r}]: {exc}") from exc
        table[(Ellipsis,) + tuple(i - 1 for i in x)] = np.array(values, dtype=object).reshape(s.outputs)
    return QuasiBox(s, table)


def _marginal_key(S, a_S, x_S) -> str:
    return "|".join(_tuple_key(t) for t in (S, a_S, x_S))


def marginals_to_dict(m: MarginalTable) -> dict:
    return {
        "marginals": {_marginal_key(*k): format_rational(v) for k, v in m.entries.items()},
        "scenario": _scenario_to_dict(m.scenario),
    }


def marginals_from_dict(d: dict) -> MarginalTable:
    s = _scenario_from_dict(d["scenario"])
    entries = {}
    for key, v in d["marginals"].items():
        parts = key.split("|")
        if len(parts) != 3:
            raise ParseError(f"bad marginal key {key!r}; expected 'S|a_S|x_S'")
        S, a_S, x_S = (_parse_tuple(p) if p else () for p in parts)
        entries[(S, a_S, x_S)] = parse_rational(v)
    return MarginalTable(s, entries)


def _label_key(labels) -> str:
    return ",".join(str(l) for l in labels)


def model_to_dict(m: ClassicalModel) -> dict:
    state = {_label_key(labels): format_rational(w) for labels, w in zip(itertools.product(*m.spaces), m.state.ravel())}
    responses = []
    for k, r in enumerate(m.responses):
        entries = {}
        for x in range(r.shape[1]):
            for a in range(r.shape[0]):
                for l, label in enumerate(m.spaces[k]):
                    entries[f"{a + 1}|{x + 1},{label}"] = format_rational(r[a, x, l])
        responses.append(entries)
    return {
        "compressed": m.compressed,
        "kind": m.kind.value,
        "responses": responses,
        "scenario": _scenario_to_dict(m.scenario),
        "spaces": [[str(l) for l in sp] for sp in m.spaces],
        "state": state,
        "type": "classical-model",
    }


def model_from_dict(d: dict) -> ClassicalModel:
    try:
        s = _scenario_from_dict(d["scenario"])
        spaces = [[Label.parse(t) for t in sp] for sp in d["spaces"]]
        sizes = tuple(len(sp) for sp in spaces)
        state = np.full(sizes, Fraction(0), dtype=object)
        for key, w in d["state"].items():
            labels = Label.split(key)
            state[tuple(sp.index(l) for sp, l in zip(spaces, labels))] = parse_rational(w)
        responses = []
        for k, entries in enumerate(d["responses"]):
            r = np.full((s.outputs[k], s.inputs[k], sizes[k]), Fraction(0), dtype=object)
            for key, v in entries.items():
                head, label = key.split(",", 1)
                a, x = (int(t) for t in head.split("|"))
                r[a - 1, x - 1, spaces[k].index(Label.parse(label))] = parse_rational(v)
            responses.append(r)
        return ClassicalModel(s, spaces, state, responses, Kind(d["kind"]), bool(d.get("compressed", False)))
    except (KeyError, IndexError, TypeError) as exc:
        raise ParseError(f"malformed classical model: {exc!r}") from exc


def quantum_to_dict(qm: QuantumModel) -> dict:
    s = qm.scenario
    measurements = []
    for k in range(s.n_parties):
        measurements.append(
            {
                f"{a}|{x}": [format_rational(v) for v in qm.measurements[(k + 1, x, a)].diag]
                for x in range(1, s.inputs[k] + 1)
                for a in range(1, s.outputs[k] + 1)
            }
        )
    return {
        "bases": [[str(l) for l in b] for b in qm.bases],
        "compressed": qm.compressed,
        "kind": qm.kind.value,
        "measurements": measurements,
        "scenario": _scenario_to_dict(s),
        "state": [format_rational(v) for v in qm.state.diag],
        "type": "quantum-model",
    }


def quantum_from_dict(d: dict) -> QuantumModel:
    try:
        s = _scenario_from_dict(d["scenario"])
        bases = [tuple(Label.parse(t) for t in b) for b in d["bases"]]
        joint = tuple(itertools.product(*bases))
        state = DiagonalOperator(joint, [parse_rational(v) for v in d["state"]])
        measurements = {}
        for k, ops in enumerate(d["measurements"]):
            for key, diag in ops.items():
                a, x = (int(t) for t in key.split("|"))
                measurements[(k + 1, x, a)] = DiagonalOperator(bases[k], [parse_rational(v) for v in diag])
        return QuantumModel(s, bases, state, measurements, Kind(d["kind"]), bool(d.get("compressed", False)))
    except (KeyError, IndexError, TypeError) as exc:
        raise ParseError(f"malformed quantum model: {exc!r}") from exc


def to_dict(obj) -> dict:
    if isinstance(obj, QuasiBox):
        return box_to_dict(obj)
    if isinstance(obj, MarginalTable):
        return marginals_to_dict(obj)
    if isinstance(obj, ClassicalModel):
        return model_to_dict(obj)
    if isinstance(obj, QuantumModel):
        return quantum_to_dict(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj) -> str:
    return json.dumps(to_dict(obj), indent=1) + "\n"


def loads(text: str):
    """Parse any of the four file kinds, dispatching on its fields."""
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(d, dict):
        raise ParseError("top-level value must be an object")
    kind = d.get("type")
    if kind == "classical-model":
        return model_from_dict(d)
    if kind == "quantum-model":
        return quantum_from_dict(d)
    if "marginals" in d:
        return marginals_from_dict(d)
    return box_from_dict(d)
