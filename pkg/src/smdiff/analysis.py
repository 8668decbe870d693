"""Stability and accuracy analysis.

Discrete Lyapunov certificates for the frozen closed loop, the convergence
neighborhood bound factor, Taylor remainder bounds, pole-placement residuals
and trace error metrics.  The certificate machinery freezes the gain at a
grid of first-filter-state values: the step-to-step gain variation is not
covered by a single certificate, so the grid worst case is reported instead
of a uniform claim.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import synthesis
from .differentiators import DifferentiatorParams, resolve_roots
from .errors import InvalidQ, NoGroundTruth, UnstableMatrix

#: Residual tolerance of the Lyapunov solve, relative to |Q|.
LYAPUNOV_RESIDUAL_TOL = 1e-9

_LYAPUNOV_REL_TOL = 1e-12
_LYAPUNOV_MAX_ITER = 10 ** 6

#: Default log-spaced grid of frozen first-filter-state magnitudes.
DEFAULT_W1_GRID = tuple(np.logspace(-4.0, 2.0, 13).tolist())


def solve_discrete_lyapunov(e: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Solve ``E^T P E - P = -Q`` for symmetric positive definite P.

    Uses the fixed-point iteration ``P <- E^T P E + Q``, which converges
    geometrically whenever the spectral radius of E is below 1.  The
    iteration stops once the update falls below ``1e-12`` relative; the
    final residual is verified against `LYAPUNOV_RESIDUAL_TOL` * |Q|.

    Parameters
    ----------
    e : (n, n) array
        Schur stable matrix (spectral radius < 1).
    q : (n, n) array
        Symmetric positive definite weight.

    Returns
    -------
    P : (n, n) array, symmetric positive definite.

    Raises
    ------
    UnstableMatrix
        If the spectral radius of ``e`` is >= 1 - 1e-9.
    """
    e = np.asarray(e, dtype=float)
    q = np.asarray(q, dtype=float)
    rho = max(abs(np.linalg.eigvals(e))) if e.size else 0.0
    if rho >= 1.0 - 1e-9:
        raise UnstableMatrix(f"spectral radius {rho} is not below 1")
    p = q.copy()
    et = e.T
    for _ in range(_LYAPUNOV_MAX_ITER):
        nxt = et @ p @ e + q
        if np.max(np.abs(nxt - p)) <= _LYAPUNOV_REL_TOL * np.max(np.abs(nxt)):
            p = nxt
            break
        p = nxt
    p = 0.5 * (p + p.T)
    residual = np.linalg.norm(et @ p @ e - p + q, 2)
    if residual > LYAPUNOV_RESIDUAL_TOL * np.linalg.norm(q, 2):
        raise UnstableMatrix(
            f"Lyapunov residual {residual:.3e} did not reach tolerance"
        )
    return p


def convergence_bound_factor(e: np.ndarray, p: np.ndarray, q: np.ndarray) -> float:
    """Bound factor K = sqrt((s_max(E) + l_max(P)) / (l_min(Q) - 1)).

    ``s_max(E)`` is the largest singular value of E (E is not symmetric in
    general, so the spectral norm is the quantity the bounding inequality
    supports).  Requires ``l_min(Q) > 1``.

    Raises
    ------
    InvalidQ
        If the smallest eigenvalue of Q is <= 1.
    """
    q_min = float(np.linalg.eigvalsh(np.asarray(q, dtype=float))[0])
    if q_min <= 1.0:
        raise InvalidQ(f"smallest eigenvalue of Q must exceed 1, got {q_min}")
    s_max = float(np.linalg.svd(np.asarray(e, dtype=float), compute_uv=False)[0])
    p_max = float(np.linalg.eigvalsh(np.asarray(p, dtype=float))[-1])
    return math.sqrt((s_max + p_max) / (q_min - 1.0))


@dataclass(frozen=True)
class TaylorRemainderBound:
    """Per-order bounds on the sampled Taylor truncation term.

    Entry j of ``plain`` is ``lip * tau**(n+1-j) / (n+1-j)``; ``factorial``
    carries the classical Lagrange version with ``(n+1-j)!`` in the
    denominator.  The plain (larger) variant is the one used in bound
    checks; the factorial variant is reported alongside.
    """

    plain: tuple[float, ...]
    factorial: tuple[float, ...]

    def norm2(self) -> float:
        return math.sqrt(sum(v * v for v in self.plain))


def taylor_remainder_bound(lip: float, tau: float, n: int) -> TaylorRemainderBound:
    """Bounds on the truncation remainder for orders j = 0..n."""
    if lip <= 0 or tau <= 0:
        raise ValueError("lip and tau must be positive")
    plain = tuple(lip * tau ** (n + 1 - j) / (n + 1 - j) for j in range(n + 1))
    fact = tuple(lip * tau ** (n + 1 - j) / math.factorial(n + 1 - j) for j in range(n + 1))
    return TaylorRemainderBound(plain=plain, factorial=fact)


# ---------------------------------------------------------------------------
# trace metrics


@dataclass(frozen=True)
class ErrorMetrics:
    """Tail error summary of one run.

    ``tail_sup[j]`` is the sup of |sigma_j| over the trailing window,
    ``settling_step`` the first sample index after which no per-order error
    exceeds its tail sup by more than 5 percent, and
    ``tail_state_norm_sup`` the sup of ||(w, sigma)||_2 over the window.
    """

    tail_sup: tuple[float, ...]
    settling_step: int
    tail_start_k: int
    tail_state_norm_sup: float


def error_metrics(records: Sequence, settle_fraction: float = 0.3) -> ErrorMetrics:
    """Tail sup errors and settling step of a recorded run.

    Parameters
    ----------
    records : sequence of StepRecord
        Must carry ground truth (sigma populated).
    settle_fraction : float in (0, 1)
        Fraction of the run, from the end, used as the tail window.
    """
    if not records:
        raise NoGroundTruth("empty record list")
    if not 0.0 < settle_fraction < 1.0:
        raise ValueError("settle_fraction must lie in (0, 1)")
    for rec in records:
        if rec.sigma is None or rec.x is None:
            raise NoGroundTruth("records carry no ground truth")
    n1 = len(records[0].sigma)
    start = int(len(records) * (1.0 - settle_fraction))
    tail = records[start:]
    sups = [0.0] * n1
    norm_sup = 0.0
    for rec in tail:
        for j in range(n1):
            sups[j] = max(sups[j], abs(rec.sigma[j]))
        norm_sup = max(norm_sup, state_error_norm(rec))
    thresholds = [1.05 * s for s in sups]
    settle = records[0].k
    for rec in records:
        if any(abs(rec.sigma[j]) > thresholds[j] for j in range(n1)):
            settle = rec.k + 1
    return ErrorMetrics(
        tail_sup=tuple(sups),
        settling_step=settle,
        tail_start_k=tail[0].k,
        tail_state_norm_sup=norm_sup,
    )


def state_error_norm(record) -> float:
    """||(w, sigma)||_2 of one record."""
    return math.sqrt(
        sum(v * v for v in record.w) + sum(v * v for v in record.sigma)
    )


def observed_w1_range(records: Sequence) -> tuple[float, float]:
    """(min, max) of |w_1| over a recorded run."""
    lo, hi = math.inf, 0.0
    for rec in records:
        if not rec.w:
            raise NoGroundTruth("run has no filter states")
        a = abs(rec.w[0])
        lo, hi = min(lo, a), max(hi, a)
    return lo, hi


# ---------------------------------------------------------------------------
# pole placement residual


def pole_placement_residual(
    trans: synthesis.TransitionMatrix,
    gains: Sequence[float],
    poles: Sequence[complex],
) -> float:
    """Worst normalized characteristic-polynomial value at the target poles.

    Evaluates the closed-loop characteristic polynomial (in factored form,
    from the computed closed-loop eigenvalues) at every requested pole and
    normalizes by ``(1 + |d|)**(m+1)``.  Zero placement error gives values
    at roundoff level.
    """
    eigs = synthesis.closed_loop_eigenvalues(trans, gains)
    m1 = trans.size
    worst = 0.0
    for d in poles:
        d = complex(d)
        value = 1.0 + 0.0j
        for e in eigs:
            value *= d - e
        worst = max(worst, abs(value) / (1.0 + abs(d)) ** m1)
    return worst


# ---------------------------------------------------------------------------
# frozen-state certificates


@dataclass(frozen=True)
class LyapunovCertificate:
    """Stability certificate of the closed loop frozen at one |w_1| value."""

    w1: float
    spectral_radius: float
    K: float
    residual: float
    P: np.ndarray
    Q: np.ndarray

    def as_record(self) -> dict:
        """JSON-ready summary (w1, spectral_radius, K, residual)."""
        return {
            "w1": self.w1,
            "spectral_radius": self.spectral_radius,
            "K": self.K,
            "residual": self.residual,
        }


def certify(
    params: DifferentiatorParams,
    w1_grid: Sequence[float] = DEFAULT_W1_GRID,
    roots: Sequence[complex] | None = None,
) -> list[LyapunovCertificate]:
    """Lyapunov certificates of the frozen closed loop over a |w_1| grid.

    For each grid value the matched poles and gains are evaluated, the
    closed loop is checked for spectral radius below 1, and ``P`` is solved
    with ``Q = 2 I`` (the simplest admissible weight, smallest eigenvalue
    2 > 1).  The gain actually varies along trajectories; these are
    frozen-state certificates, reported per point.

    Raises
    ------
    UnstableMatrix
        If a grid point yields spectral radius >= 1.
    """
    if roots is None:
        roots = resolve_roots(params)
    cache = synthesis.precompute(params)
    q = 2.0 * np.eye(params.m + 1)
    out = []
    for w1 in w1_grid:
        poles = synthesis.matched_poles(roots, w1, params.tau, params.m)
        gains = synthesis.injection_gains(poles, cache)
        e = synthesis.closed_loop(cache.trans, gains)
        rho = float(max(abs(synthesis.closed_loop_eigenvalues(cache.trans, gains))))
        p = solve_discrete_lyapunov(e, q)
        residual = float(np.linalg.norm(e.T @ p @ e - p + q, 2))
        k = convergence_bound_factor(e, p, q)
        out.append(
            LyapunovCertificate(
                w1=float(w1), spectral_radius=rho, K=k, residual=residual, P=p, Q=q
            )
        )
    return out


def neighborhood_check(
    records: Sequence,
    params: DifferentiatorParams,
    roots: Sequence[complex] | None = None,
    w1_grid: Sequence[float] = DEFAULT_W1_GRID,
    settle_fraction: float = 0.3,
) -> dict:
    """Compare the settled error norm against the certified neighborhood.

    The certificate grid is restricted to the observed |w_1| range of the
    run; if the run never reaches the grid span (it converges below the
    smallest point), the nearest grid point above the observed maximum is
    used so the report is never empty.  The bound is
    ``K_max * ||remainder bound||_2`` with the plain-denominator remainder
    variant; the check passes when the error norm stays below the bound
    from the settling step onward.
    """
    if params.lipschitz is None:
        raise InvalidQ("neighborhood check needs the lipschitz bound")
    metrics = error_metrics(records, settle_fraction)
    lo, hi = observed_w1_range(records)
    selected = [g for g in w1_grid if lo <= g <= hi]
    if not selected:
        above = [g for g in w1_grid if g >= hi]
        selected = [min(above)] if above else [max(w1_grid)]
    certs = certify(params, selected, roots=roots)
    k_max = max(c.K for c in certs)
    h_norm = taylor_remainder_bound(params.lipschitz, params.tau, params.n).norm2()
    bound = k_max * h_norm
    settled_sup = 0.0
    for rec in records:
        if rec.k >= metrics.settling_step:
            settled_sup = max(settled_sup, state_error_norm(rec))
    return {
        "K_max": k_max,
        "h_bound_norm": h_norm,
        "bound": bound,
        "settled_state_norm_sup": settled_sup,
        "satisfied": settled_sup <= bound,
        "settling_step": metrics.settling_step,
        "w1_observed": [lo, hi],
        "w1_grid_used": [c.w1 for c in certs],
    }
