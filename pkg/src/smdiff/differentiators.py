"""Streaming differentiator state machines.

Three per-sample recursions behind a common shape: the eigenvalue-matching
discretization of the filtering differentiator (the main scheme), and two
explicit-Euler baselines (the standard sliding-mode differentiator and the
continuous filtering differentiator).

Each step consumes one measurement ``f_k`` and returns the successor state
plus the current derivative estimates.  States are plain value tuples, so a
step is deterministic and instances never share mutable data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

from . import poly, synthesis
from .errors import DimensionMismatch, InvalidOrder, NonFiniteState, UnstableRoot

#: Any state entry beyond this magnitude is treated as divergence.
FINITE_LIMIT = 1e12


@dataclass(frozen=True)
class RepeatedRoot:
    """All m+1 continuous design roots at the same negative real value."""

    value: float


@dataclass(frozen=True)
class FromCharPoly:
    """Take the design roots from the gain/Lipschitz characteristic polynomial."""


@dataclass(frozen=True)
class ExplicitRoots:
    """Continuous design roots given directly (conjugate closed, Re < 0)."""

    roots: tuple[complex, ...]


RootSpec = Union[RepeatedRoot, FromCharPoly, ExplicitRoots]


@dataclass(frozen=True)
class DifferentiatorParams:
    """Static configuration of one differentiator instance.

    n is the highest derivative order estimated, n_f the filtering order
    (>= 1 for the filtering variants, 0 for the standard baseline), tau the
    sampling period in seconds.  ``gains`` are the m+1 positive homogeneous
    gains and ``lipschitz`` the bound on the (n+1)-th signal derivative;
    both are required by the Euler baselines and by `FromCharPoly`, while
    the matching variant with repeated or explicit roots runs without them.
    """

    n: int
    n_f: int
    tau: float
    gains: tuple[float, ...] | None = None
    lipschitz: float | None = None
    root_spec: RootSpec = FromCharPoly()
    w1_floor: float = synthesis.W1_FLOOR

    def __post_init__(self):
        if self.n < 0:
            raise InvalidOrder(f"derivative order must be >= 0, got {self.n}")
        if self.n_f < 0:
            raise InvalidOrder(f"filtering order must be >= 0, got {self.n_f}")
        if not self.tau > 0:
            raise InvalidOrder(f"sampling period must be positive, got {self.tau}")
        if self.gains is not None:
            object.__setattr__(self, "gains", tuple(float(g) for g in self.gains))
            if len(self.gains) != self.m + 1:
                raise DimensionMismatch(
                    f"need {self.m + 1} gains for n={self.n}, n_f={self.n_f}; "
                    f"got {len(self.gains)}"
                )
            if any(g <= 0 for g in self.gains):
                raise DimensionMismatch("all gains must be positive")
        if self.lipschitz is not None and not self.lipschitz > 0:
            raise DimensionMismatch("lipschitz bound must be positive")
        if isinstance(self.root_spec, FromCharPoly) and (
            self.gains is None or self.lipschitz is None
        ):
            raise DimensionMismatch(
                "root_spec 'from_charpoly' needs both gains and lipschitz"
            )

    @property
    def m(self) -> int:
        return self.n + self.n_f


class FilterState(NamedTuple):
    """Live state of a running differentiator.

    w holds the n_f filter states, z the n+1 derivative estimates, k the
    step index and t the current time (t = t0 + k * tau).
    """

    w: tuple[float, ...]
    z: tuple[float, ...]
    k: int
    t: float


class Estimate(NamedTuple):
    """Derivative estimates z_0..z_n returned by one step."""

    derivatives: tuple[float, ...]


def init(params: DifferentiatorParams, f0_sample: float, t0: float = 0.0) -> FilterState:
    """Initial state: z_0 seeded with the first sample, everything else zero.

    Seeding z_0 shortens the transient without assuming any derivative is
    known at start-up.
    """
    return FilterState(
        w=(0.0,) * params.n_f,
        z=(float(f0_sample),) + (0.0,) * params.n,
        k=0,
        t=t0,
    )


def resolve_roots(params: DifferentiatorParams) -> tuple[complex, ...]:
    """Continuous design roots described by ``params.root_spec``.

    All roots must lie strictly in the left half plane; for `FromCharPoly`
    they are extracted from the characteristic polynomial built from the
    gains and the Lipschitz bound.

    Raises
    ------
    UnstableRoot
        If any resolved root has non-negative real part.
    """
    spec = params.root_spec
    if isinstance(spec, RepeatedRoot):
        roots: tuple[complex, ...] = (complex(spec.value),) * (params.m + 1)
    elif isinstance(spec, ExplicitRoots):
        if len(spec.roots) != params.m + 1:
            raise DimensionMismatch(
                f"need {params.m + 1} explicit roots, got {len(spec.roots)}"
            )
        poly.check_conjugate_closed(spec.roots)
        roots = tuple(complex(r) for r in spec.roots)
    elif isinstance(spec, FromCharPoly):
        char = poly.char_poly_from_gains(params.gains, params.lipschitz, params.m)
        roots = poly.find_roots(char)
    else:
        raise DimensionMismatch(f"unknown root spec {spec!r}")
    for r in roots:
        if r.real >= 0.0:
            raise UnstableRoot(f"design root {r} must have negative real part")
    return roots


def _check_finite(w, z, k):
    for v in w:
        if not (-FINITE_LIMIT < v < FINITE_LIMIT):
            raise NonFiniteState(f"filter state magnitude {v!r} at step {k}")
    for v in z:
        if not (-FINITE_LIMIT < v < FINITE_LIMIT):
            raise NonFiniteState(f"estimate magnitude {v!r} at step {k}")


def step_matching(
    state: FilterState,
    f_k: float,
    cache: synthesis.GainCache,
    roots: Sequence[complex],
) -> tuple[FilterState, Estimate]:
    """One sample of the eigenvalue-matching filtering differentiator.

    The discrete poles are re-matched from the current first filter state,
    the placement gains are evaluated from the cache, and the state advances
    by the exact sampled chain plus the gain injection driven by w_1.

    Raises
    ------
    NonFiniteState
        If any successor entry leaves the finite range (divergence).
    """
    n, n_f, tau = cache.n, cache.n_f, cache.tau
    w, z = state.w, state.z
    w1 = w[0]
    g = synthesis.injection_gains_at(roots, w1, cache)

    nw = [w[i] + tau * w[i + 1] + g[i] * w1 for i in range(n_f - 1)]
    nw.append(w[n_f - 1] + tau * (z[0] - f_k) + g[n_f - 1] * w1)
    nz = []
    for j in range(n + 1):
        acc = 0.0
        for l in range(n + 1 - j):
            acc += tau ** l / math.factorial(l) * z[j + l]
        nz.append(acc + g[n_f + j] * w1)
    _check_finite(nw, nz, state.k + 1)
    nstate = FilterState(tuple(nw), tuple(nz), state.k + 1, state.t + tau)
    return nstate, Estimate(nstate.z)


def _signed_power(x: float, e: float) -> float:
    """|x|**e * sign(x), with sign(0) taken as 0 (also for e == 0)."""
    if x > 0.0:
        return x ** e
    if x < 0.0:
        return -((-x) ** e)
    return 0.0


def step_standard_euler(
    state: FilterState, f_k: float, params: DifferentiatorParams
) -> tuple[FilterState, Estimate]:
    """Explicit Euler step of the standard sliding-mode differentiator.

    Requires ``n_f == 0`` and both gains and lipschitz set.  The injection
    into estimate j is ``-gains[n-j] * lip**((j+1)/(n+1))`` times the signed
    power ``(n-j)/(n+1)`` of the tracking error ``z_0 - f_k``.
    """
    if params.n_f != 0:
        raise InvalidOrder("standard differentiator runs with n_f = 0")
    if params.gains is None or params.lipschitz is None:
        raise DimensionMismatch("standard differentiator needs gains and lipschitz")
    n, tau, lam, lip = params.n, params.tau, params.gains, params.lipschitz
    z = state.z
    s0 = z[0] - f_k
    nz = []
    for j in range(n + 1):
        u = -lam[n - j] * lip ** ((j + 1) / (n + 1)) * _signed_power(s0, (n - j) / (n + 1))
        drift = z[j + 1] if j < n else 0.0
        nz.append(z[j] + tau * (drift + u))
    _check_finite((), nz, state.k + 1)
    nstate = FilterState((), tuple(nz), state.k + 1, state.t + tau)
    return nstate, Estimate(nstate.z)


def step_filtering_euler(
    state: FilterState, f_k: float, params: DifferentiatorParams
) -> tuple[FilterState, Estimate]:
    """Explicit Euler step of the continuous filtering differentiator.

    All m+1 rows carry the homogeneous injection
    ``-gains[m-r] * lip**((r+1)/(m+1))`` times the signed power
    ``(m-r)/(m+1)`` of w_1 (row index r from the top); the filter chain
    integrates downward and row n_f is driven by the tracking error.
    """
    if params.n_f < 1:
        raise InvalidOrder("filtering differentiator needs n_f >= 1")
    if params.gains is None or params.lipschitz is None:
        raise DimensionMismatch("filtering differentiator needs gains and lipschitz")
    n, n_f, tau = params.n, params.n_f, params.tau
    m = params.m
    lam, lip = params.gains, params.lipschitz
    w, z = state.w, state.z
    w1 = w[0]
    inj = [
        -lam[m - r] * lip ** ((r + 1) / (m + 1)) * _signed_power(w1, (m - r) / (m + 1))
        for r in range(m + 1)
    ]
    nw = [w[i] + tau * (inj[i] + w[i + 1]) for i in range(n_f - 1)]
    nw.append(w[n_f - 1] + tau * (inj[n_f - 1] + z[0] - f_k))
    nz = [z[j] + tau * (inj[n_f + j] + z[j + 1]) for j in range(n)]
    nz.append(z[n] + tau * inj[m])
    _check_finite(nw, nz, state.k + 1)
    nstate = FilterState(tuple(nw), tuple(nz), state.k + 1, state.t + tau)
    return nstate, Estimate(nstate.z)
