"""Discrete-time gain synthesis for the streaming differentiators.

Builds the one-step transition matrix of the sampled filter/estimator chain,
the observability matrix taken from its first coordinate, and the injection
gain vector that places the closed-loop eigenvalues at a desired set of
discrete poles.  Everything that depends only on the orders and the sampling
period is precomputed once into a `GainCache`; the per-sample work is then a
short product evaluation.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidOrder,
    NotConjugateClosed,
    SingularMatrix,
    UnstableRoot,
)
from .poly import CONJUGATE_PAIR_TOL, check_conjugate_closed

#: Default floor applied to |w1| before the fractional inverse power, i.e.
#: effectively no clamp beyond protecting against subnormal underflow.
W1_FLOOR = 1e-300

#: Relative residual accepted when solving the observability system.
SOLVE_RESIDUAL_TOL = 1e-12


@dataclass(frozen=True)
class TransitionMatrix:
    """One-step transition matrix of the sampled chain.

    The first ``n_f`` rows are the unit-diagonal/``tau``-superdiagonal filter
    chain (the last of them couples into the first estimator state); the
    bottom-right ``(n+1) x (n+1)`` block is the upper-triangular Taylor
    stepping matrix with entry ``tau**(j-i) / (j-i)!``.
    """

    entries: np.ndarray
    n: int
    n_f: int
    tau: float

    @property
    def m(self) -> int:
        return self.n + self.n_f

    @property
    def size(self) -> int:
        return self.m + 1


def transition_matrix(n: int, n_f: int, tau: float) -> TransitionMatrix:
    """Build the (m+1) x (m+1) transition matrix for orders ``n``, ``n_f``.

    Raises
    ------
    InvalidOrder
        If ``n_f < 1`` or ``n < 0`` or ``tau <= 0``.
    """
    if n_f < 1:
        raise InvalidOrder(f"filtering order must be >= 1, got {n_f}")
    if n < 0:
        raise InvalidOrder(f"derivative order must be >= 0, got {n}")
    if not tau > 0:
        raise InvalidOrder(f"sampling period must be positive, got {tau}")
    m1 = n + n_f + 1
    t = np.zeros((m1, m1))
    for i in range(n_f):
        t[i, i] = 1.0
        t[i, i + 1] = tau
    for i in range(n + 1):
        for j in range(i, n + 1):
            t[n_f + i, n_f + j] = tau ** (j - i) / math.factorial(j - i)
    t.flags.writeable = False
    return TransitionMatrix(entries=t, n=n, n_f=n_f, tau=tau)


def observability_matrix(trans: TransitionMatrix) -> np.ndarray:
    """Stack of the first row of successive transition powers.

    Row ``j`` equals ``e1^T @ T**j`` for ``j = 0..m``; the result is the
    matrix through which the injection gains are solved.
    """
    m1 = trans.size
    obs = np.zeros((m1, m1))
    row = np.zeros(m1)
    row[0] = 1.0
    for j in range(m1):
        obs[j] = row
        row = row @ trans.entries
    return obs


def solve_observability(obs: np.ndarray) -> np.ndarray:
    """Solve ``obs @ x = e_last`` and verify the relative residual.

    Raises
    ------
    SingularMatrix
        If the system is singular (e.g. the matrix was built with tau = 0)
        or the solve residual exceeds ``SOLVE_RESIDUAL_TOL`` relative to
        ``|obs| * |x|``.
    """
    m1 = obs.shape[0]
    rhs = np.zeros(m1)
    rhs[-1] = 1.0
    try:
        x = np.linalg.solve(obs, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrix(f"observability matrix is singular: {exc}") from exc
    scale = 1.0 + np.linalg.norm(obs, np.inf) * np.linalg.norm(x, np.inf)
    residual = np.linalg.norm(obs @ x - rhs, np.inf)
    if not np.isfinite(x).all() or residual > SOLVE_RESIDUAL_TOL * scale:
        raise SingularMatrix(
            f"observability solve residual {residual:.3e} exceeds tolerance"
        )
    return x


@dataclass(frozen=True)
class GainCache:
    """Everything tau-dependent, precomputed once per configuration.

    ``powers[j]`` is the j-th power of the transition matrix (j = 0..m+1),
    ``solve_col`` solves the observability system against the last unit
    vector, and ``deadbeat_gains`` are the injection gains for all discrete
    poles at the origin.  Immutable and shareable across threads.
    """

    n: int
    n_f: int
    tau: float
    trans: TransitionMatrix
    powers: tuple[np.ndarray, ...]
    solve_col: tuple[float, ...]
    deadbeat_gains: tuple[float, ...]
    # Sparse (col, value) row lists of the transition matrix, for the
    # per-sample product evaluation in plain Python floats.
    sparse_rows: tuple[tuple[tuple[int, float], ...], ...] = field(repr=False)

    @property
    def m(self) -> int:
        return self.n + self.n_f


def precompute(params) -> GainCache:
    """Build the `GainCache` for ``params`` (needs ``n``, ``n_f``, ``tau``).

    Accepts any object exposing those three attributes, in particular
    `smdiff.differentiators.DifferentiatorParams`.
    """
    n, n_f, tau = params.n, params.n_f, params.tau
    trans = transition_matrix(n, n_f, tau)
    obs = observability_matrix(trans)
    col = solve_observability(obs)
    m1 = trans.size
    powers = []
    mat = np.eye(m1)
    for _ in range(m1 + 1):
        frozen = mat.copy()
        frozen.flags.writeable = False
        powers.append(frozen)
        mat = mat @ trans.entries
    deadbeat = tuple((-(powers[m1] @ col)).tolist())
    rows = tuple(
        tuple((j, float(trans.entries[i, j])) for j in range(m1) if trans.entries[i, j] != 0.0)
        for i in range(m1)
    )
    return GainCache(
        n=n,
        n_f=n_f,
        tau=tau,
        trans=trans,
        powers=tuple(powers),
        solve_col=tuple(col.tolist()),
        deadbeat_gains=deadbeat,
        sparse_rows=rows,
    )


def matched_poles(
    roots: Sequence[complex], w1: float, tau: float, m: int, floor: float = W1_FLOOR
) -> tuple[complex, ...]:
    """Map continuous design roots to discrete poles at the current filter state.

    Each root ``b`` maps to ``exp(tau * |w1|**(-1/(m+1)) * b)``.  At
    ``w1 = 0`` the poles are defined as 0 exactly, the continuous limit of
    the map for roots in the open left half plane (which also keeps the
    gains finite on the sliding surface).  Output is exactly conjugate
    closed and strictly inside the unit circle for ``w1 != 0``.

    Raises
    ------
    UnstableRoot
        If any root has a non-negative real part.
    DimensionMismatch
        If ``len(roots) != m + 1``.
    """
    if len(roots) != m + 1:
        raise DimensionMismatch(f"need {m + 1} roots, got {len(roots)}")
    rts = [complex(r) for r in roots]
    for r in rts:
        if r.real >= 0.0:
            raise UnstableRoot(f"design root {r} must have negative real part")
    if w1 == 0.0:
        return (0.0 + 0.0j,) * (m + 1)
    scale = tau * max(abs(w1), floor) ** (-1.0 / (m + 1))
    out = []
    for r in rts:
        if r.imag == 0.0:
            out.append(complex(math.exp(scale * r.real), 0.0))
        elif r.imag > 0.0:
            out.append(cmath.exp(scale * r))
        else:
            # Mirror of the conjugate partner, so closure is exact even if
            # the libm sin/cos were not symmetric.
            out.append(cmath.exp(scale * r.conjugate()).conjugate())
    return tuple(out)


def _gains_product(poles, cache: GainCache):
    """Evaluate the placement gains as a factored polynomial product.

    Applies the factors ``(T - d_j I)`` of the desired characteristic
    polynomial successively to the cached observability solve column and
    negates.  The factored form is used instead of expanding coefficients
    because the solve column carries entries of widely different magnitude
    (graded like ``tau**(1-i)``); going through monomial coefficients
    cancels catastrophically when the poles cluster near 1, while each
    factor application here mixes only like-scaled terms.
    """
    rows = cache.sparse_rows
    m1 = cache.m + 1
    v = list(cache.solve_col)
    for d in poles:
        if isinstance(d, complex) and d.imag == 0.0:
            d = d.real
        v = [
            sum(val * v[j] for j, val in rows[i]) - d * v[i]
            for i in range(m1)
        ]
    return v


def injection_gains(poles: Sequence[complex], cache: GainCache) -> np.ndarray:
    """Injection gain vector placing the closed loop at ``poles``.

    The closed-loop matrix ``T + g @ e1^T`` then has characteristic
    polynomial ``prod_j (r - poles[j])``.  Poles must be conjugate closed so
    the gains come out real.

    Raises
    ------
    DimensionMismatch
        If ``len(poles) != m + 1``.
    NotConjugateClosed
        If the pole set is not conjugate closed.
    """
    if len(poles) != cache.m + 1:
        raise DimensionMismatch(f"need {cache.m + 1} poles, got {len(poles)}")
    check_conjugate_closed(poles)
    v = _gains_product([complex(d) for d in poles], cache)
    out = np.empty(cache.m + 1)
    scale = 1.0
    worst = 0.0
    for i, x in enumerate(v):
        if isinstance(x, complex):
            out[i] = -x.real
            worst = max(worst, abs(x.imag))
            scale = max(scale, abs(x))
        else:
            out[i] = -x
            scale = max(scale, abs(x))
    if worst > CONJUGATE_PAIR_TOL * scale:
        raise NotConjugateClosed(
            f"gain imaginary residue {worst:.3e} too large; poles not paired"
        )
    return out


def injection_gains_at(
    roots: Sequence[complex], w1: float, cache: GainCache, floor: float = W1_FLOOR
) -> tuple[float, ...]:
    """Gains for the current filter state: matched poles, then placement.

    Fast path used by the per-sample stepper; equivalent to
    ``injection_gains(matched_poles(roots, w1, ...), cache)`` but returns a
    plain tuple and skips re-validation.  For a repeated real design root the
    single real factor is applied ``m + 1`` times with real arithmetic.
    """
    if w1 == 0.0:
        return cache.deadbeat_gains
    m1 = cache.m + 1
    scale = cache.tau * max(abs(w1), floor) ** (-1.0 / m1)
    first = complex(roots[0])
    if first.imag == 0.0 and all(r == roots[0] for r in roots):
        d = math.exp(scale * first.real)
        v = _gains_product([d] * m1, cache)
        return tuple(-x for x in v)
    poles = []
    for r in roots:
        r = complex(r)
        if r.imag == 0.0:
            poles.append(math.exp(scale * r.real))
        elif r.imag > 0.0:
            poles.append(cmath.exp(scale * r))
        else:
            poles.append(cmath.exp(scale * r.conjugate()).conjugate())
    v = _gains_product(poles, cache)
    return tuple(-(x.real if isinstance(x, complex) else x) for x in v)


def closed_loop(trans: TransitionMatrix, gains: Sequence[float]) -> np.ndarray:
    """Closed-loop matrix ``T + g @ e1^T`` (gains added to the first column)."""
    g = np.asarray(gains, dtype=float)
    if g.shape != (trans.size,):
        raise DimensionMismatch(
            f"gain vector length {g.shape} does not match order {trans.size}"
        )
    e = trans.entries.copy()
    e[:, 0] += g
    return e


def closed_loop_eigenvalues(
    trans: TransitionMatrix, gains: Sequence[float]
) -> np.ndarray:
    """Eigenvalues of the closed loop, computed on a tau-graded similarity.

    The gain vector is graded like ``tau**(1-i)`` per row, so rescaling row
    ``i`` by ``tau**(i-1)`` gives a well-scaled similar matrix on which the
    QR eigensolver is accurate even for very small sampling periods.
    """
    e = closed_loop(trans, gains)
    m1 = trans.size
    d = np.array([trans.tau ** (1 - i) for i in range(1, m1 + 1)])
    balanced = e * (d[None, :] / d[:, None])
    return np.linalg.eigvals(balanced)
