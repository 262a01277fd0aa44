"""Membership in the local polytope with exactly verified certificates.

The LP is solved in floating point (scipy/HiGHS) in canonical marginal
coordinates; whatever it proposes is converted to rationals and checked in
exact arithmetic before being returned. A local verdict carries convex
weights over deterministic strategies; a non-local verdict carries a Bell
functional together with its exact local bound and value on the box.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from math import prod

import numpy as np
from scipy.optimize import linprog

from .box import MarginalTable, QuasiBox, Scenario, SignallingError, canonical_marginals, is_nonsignalling
from .gallery import deterministic_box

__all__ = [
    "DEFAULT_TOL",
    "DEFAULT_CAP",
    "DENOMINATOR_CAP",
    "Local",
    "NonLocal",
    "VertexCapError",
    "UndecidedError",
    "vertex_count",
    "enumerate_vertices",
    "bell_value",
    "local_bound",
    "chsh_functional",
    "functional_from_marginal_coefficients",
    "is_local",
]

DEFAULT_TOL = 1e-9
DEFAULT_CAP = 10**6
DENOMINATOR_CAP = 10**9
# denominators tried in turn when rationalising LP output; small ones give readable certificates
_DENOMINATOR_LADDER = (1, 2, 4, 12, 100, 10**4, 10**6, DENOMINATOR_CAP)


class VertexCapError(ValueError):
    def __init__(self, count: int, cap: int):
        super().__init__(f"scenario has {count} deterministic strategies, above the cap of {cap}")
        self.count = count
        self.cap = cap


class UndecidedError(RuntimeError):
    """Neither a local nor a non-local certificate survived exact verification."""


@dataclass(frozen=True)
class Local:
    weights: dict  # joint strategy -> Fraction, positive entries only

    is_local = True
    verdict = "LOCAL"


@dataclass(frozen=True, eq=False)
class NonLocal:
    bell: np.ndarray  # functional table, same shape as the box table
    local_bound: Fraction
    box_value: Fraction
    lp_value: float | None = None  # float violation reported by the LP, if it produced the functional

    is_local = False
    verdict = "NONLOCAL"

    @property
    def violation(self) -> Fraction:
        return self.box_value - self.local_bound


def vertex_count(s: Scenario) -> int:
    return prod(A**X for A, X in zip(s.outputs, s.inputs))


def _party_strategies(A: int, X: int) -> list[tuple[int, ...]]:
    return list(itertools.product(range(1, A + 1), repeat=X))


def enumerate_vertices(s: Scenario, cap: int = DEFAULT_CAP) -> list[tuple]:
    """All joint deterministic strategies, as per-party tuples ``f_k[x-1] = a``."""
    count = vertex_count(s)
    if count > cap:
        raise VertexCapError(count, cap)
    per_party = [_party_strategies(A, X) for A, X in zip(s.outputs, s.inputs)]
    return list(itertools.product(*per_party))


def bell_value(b: QuasiBox, functional) -> Fraction:
    functional = np.asarray(functional, dtype=object)
    if functional.shape != b.scenario.shape:
        raise ValueError(f"functional shape {functional.shape} does not match box shape {b.scenario.shape}")
    return Fraction(sum((functional * b.table).ravel(), Fraction(0)))


def _vertex_values_float(functional: np.ndarray, s: Scenario) -> np.ndarray:
    """Functional value at every joint vertex (float), in enumeration order."""
    F = np.asarray(functional, dtype=float)
    per_party = [np.array(_party_strategies(A, X)) - 1 for A, X in zip(s.outputs, s.inputs)]
    values = np.zeros(tuple(len(p) for p in per_party))
    for x in s.input_tuples():
        outs = [p[:, xk - 1] for p, xk in zip(per_party, x)]
        values += F[np.ix_(*outs) + tuple(xk - 1 for xk in x)]
    return values.ravel()


def _vertex_value_exact(functional: np.ndarray, s: Scenario, strategy) -> Fraction:
    return sum(
        (functional[tuple(f[xk - 1] - 1 for f, xk in zip(strategy, x)) + tuple(xk - 1 for xk in x)]
         for x in s.input_tuples()),
        Fraction(0),
    )


def local_bound(functional, s: Scenario, cap: int = DEFAULT_CAP) -> Fraction:
    """Exact maximum of the functional over the local polytope.

    Vertices are screened in floating point; every vertex within 1e-6 of the
    float maximum is then evaluated exactly. The screening margin is far
    above the float error of these short sums.
    """
    functional = np.asarray(functional, dtype=object)
    vertices = enumerate_vertices(s, cap)
    values = _vertex_values_float(functional, s)
    candidates = np.flatnonzero(values >= values.max() - 1e-6)
    return max(_vertex_value_exact(functional, s, vertices[i]) for i in candidates)


def chsh_functional() -> np.ndarray:
    """CHSH expression ``E11 + E12 + E21 - E22`` as a table over ``(a1, a2, x1, x2)``."""
    F = np.empty((2, 2, 2, 2), dtype=object)
    for a1, a2, x1, x2 in itertools.product(range(2), repeat=4):
        F[a1, a2, x1, x2] = Fraction((-1) ** (a1 + a2 + x1 * x2))
    return F


def functional_from_marginal_coefficients(s: Scenario, coefficients: dict) -> np.ndarray:
    """Raw-table functional whose value on any non-signalling box is
    ``sum coefficients[key] * marginal(key)`` over canonical keys.

    Each marginal is read off with the inputs of the absent parties set to 1.
    """
    F = np.full(s.shape, Fraction(0), dtype=object)
    n = s.n_parties
    for (S, a_S, x_S), c in coefficients.items():
        if not S or c == 0:
            continue
        index = [slice(None)] * (2 * n)
        for i, a, x in zip(S, a_S, x_S):
            index[i - 1] = a - 1
            index[n + i - 1] = x - 1
        for k in range(n):
            if k + 1 not in S:
                index[n + k] = 0
        F[tuple(index)] += Fraction(c)
    return F


def _vertex_matrix(s: Scenario, keys: list) -> np.ndarray:
    """0/1 matrix of canonical coordinates (rows) at each joint vertex (columns)."""
    per_party = [np.array(_party_strategies(A, X)) for A, X in zip(s.outputs, s.inputs)]
    rows = []
    for S, a_S, x_S in keys:
        lookup = dict(zip(S, zip(a_S, x_S)))
        vecs = []
        for k, strategies in enumerate(per_party):
            if k + 1 in lookup:
                a, x = lookup[k + 1]
                vecs.append((strategies[:, x - 1] == a).astype(np.int64))
            else:
                vecs.append(np.ones(len(strategies), dtype=np.int64))
        rows.append(reduce(np.multiply.outer, vecs).ravel())
    return np.array(rows, dtype=np.int64).reshape(len(keys), -1)


def _solve_exact(M: list, rhs: list):
    """Gauss-Jordan over Fractions; free variables are set to 0. None if inconsistent."""
    m, n = len(M), len(M[0]) if M else 0
    A = [list(row) + [r] for row, r in zip(M, rhs)]
    pivots = []
    row = 0
    for col in range(n):
        pivot = next((r for r in range(row, m) if A[r][col] != 0), None)
        if pivot is None:
            continue
        A[row], A[pivot] = A[pivot], A[row]
        inv = 1 / A[row][col]
        A[row] = [v * inv for v in A[row]]
        for r in range(m):
            if r != row and A[r][col] != 0:
                f = A[r][col]
                A[r] = [v - f * w for v, w in zip(A[r], A[row])]
        pivots.append(col)
        row += 1
        if row == m:
            break
    if any(A[r][n] != 0 for r in range(row, m)):
        return None
    x = [Fraction(0)] * n
    for r, col in enumerate(pivots):
        x[col] = A[r][n]
    return x


def _reproduces(b: QuasiBox, vertices, weights: dict) -> bool:
    if any(w < 0 for w in weights.values()) or sum(weights.values()) != 1:
        return False
    total = np.full(b.scenario.shape, Fraction(0), dtype=object)
    for j, w in weights.items():
        total = total + w * deterministic_box(b.scenario, vertices[j]).table
    return bool(np.all(total == b.table))


def _local_certificate(b, vertices, V, p_exact, x_float, tol):
    for threshold in (0.0, tol):
        support = [int(j) for j in np.flatnonzero(x_float > threshold)]
        if not support:
            continue
        M = [[Fraction(int(V[i, j])) for j in support] for i in range(V.shape[0])] + [[Fraction(1)] * len(support)]
        sol = _solve_exact(M, list(p_exact) + [Fraction(1)])
        if sol is not None:
            weights = {j: w for j, w in zip(support, sol) if w != 0}
            if _reproduces(b, vertices, weights):
                return Local({vertices[j]: w for j, w in weights.items()})
    for cap in _DENOMINATOR_LADDER:
        weights = {int(j): Fraction(float(x_float[j])).limit_denominator(cap) for j in np.flatnonzero(x_float > 0)}
        weights = {j: w for j, w in weights.items() if w != 0}
        if _reproduces(b, vertices, weights):
            return Local({vertices[j]: w for j, w in weights.items()})
    return None


def _nonlocal_certificate(b, s, keys, c_float, lp_value, cap):
    for den in _DENOMINATOR_LADDER:
        coeffs = {k: Fraction(float(c)).limit_denominator(den) for k, c in zip(keys, c_float)}
        F = functional_from_marginal_coefficients(s, coeffs)
        value = bell_value(b, F)
        bound = local_bound(F, s, cap)
        if value > bound:
            return NonLocal(F, bound, value, lp_value)
    return None


def _highs_options(tol: float) -> dict:
    t = min(max(tol, 1e-10), 1e-7)
    return {"primal_feasibility_tolerance": t, "dual_feasibility_tolerance": t}


def is_local(b: QuasiBox, tol: float = DEFAULT_TOL, cap: int = DEFAULT_CAP, functional=None):
    """Decide whether ``b`` is a convex mixture of deterministic boxes.

    Returns :class:`Local` or :class:`NonLocal`; both are re-verified exactly.
    If ``functional`` is given it is tried first as the non-local witness.
    Raises :class:`UndecidedError` when no certificate survives verification.
    """
    check = is_nonsignalling(b)
    if not check:
        raise SignallingError(check.witness)
    s = b.scenario
    vertices = enumerate_vertices(s, cap)

    if functional is not None:
        F = np.asarray(functional, dtype=object)
        value, bound = bell_value(b, F), local_bound(F, s, cap)
        if value > bound:
            return NonLocal(F, bound, value)

    table: MarginalTable = canonical_marginals(b)
    keys = [k for k in table.entries if k[0]]
    p_exact = [table.entries[k] for k in keys]
    p = np.array([float(v) for v in p_exact])
    V = _vertex_matrix(s, keys)
    n_vert = len(vertices)
    options = _highs_options(tol)

    feas = linprog(
        np.zeros(n_vert),
        A_eq=np.vstack([V, np.ones((1, n_vert))]),
        b_eq=np.append(p, 1.0),
        bounds=(0, None),
        method="highs-ds",
        options=options,
    )
    if feas.status == 0:
        cert = _local_certificate(b, vertices, V, p_exact, feas.x, tol)
        if cert is not None:
            return cert

    # separating functional: max c.p - beta  s.t.  c.v_j <= beta for all vertices, |c| <= 1
    D = len(keys)
    objective = -np.append(p, -1.0)
    A_ub = np.hstack([V.T.astype(float), -np.ones((n_vert, 1))])
    sep = linprog(
        objective,
        A_ub=A_ub,
        b_ub=np.zeros(n_vert),
        bounds=[(-1, 1)] * D + [(None, None)],
        method="highs-ds",
        options=options,
    )
    if sep.status == 0 and -sep.fun > tol:
        cert = _nonlocal_certificate(b, s, keys, sep.x[:D], float(-sep.fun), cap)
        if cert is not None:
            return cert

    raise UndecidedError(
        f"undecided at tol={tol}: feasibility LP status {feas.status}, "
        f"separation LP status {sep.status} with violation {-sep.fun if sep.status == 0 else float('nan')}"
    )
