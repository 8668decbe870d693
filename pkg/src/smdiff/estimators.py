"""scikit-learn compatible wrappers around the streaming differentiators.

Each estimator treats a uniformly sampled signal as the input array and
returns the per-sample derivative estimates, so the differentiators compose
with sklearn pipelines and parameter search.  ``transform`` is causal: row k
is the estimate available at t_k, built from samples 0..k-1 (row 0 is the
seeded initial state).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from . import synthesis
from .differentiators import (
    DifferentiatorParams,
    ExplicitRoots,
    FromCharPoly,
    RepeatedRoot,
    init,
    resolve_roots,
    step_filtering_euler,
    step_matching,
    step_standard_euler,
)


def _as_sample_vector(X) -> np.ndarray:
    """Validate input as a finite 1-d sample vector (accepts (n, 1) arrays)."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-d sample vector, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError("need at least one sample")
    if not np.isfinite(arr).all():
        raise ValueError("samples must be finite")
    return arr


def _root_spec_from(roots):
    if isinstance(roots, str):
        if roots != "from-charpoly":
            raise ValueError(f"unknown roots spec {roots!r}")
        return FromCharPoly()
    if np.isscalar(roots):
        return RepeatedRoot(float(roots))
    return ExplicitRoots(tuple(complex(r) for r in roots))


class _StreamingDifferentiator(BaseEstimator, TransformerMixin):
    """Shared fit/transform plumbing; subclasses build params and steppers."""

    def fit(self, X=None, y=None):
        """Validate parameters and precompute whatever the stepper caches.

        X is accepted for pipeline compatibility and otherwise unused; the
        estimators carry no data-dependent state.
        """
        self.params_ = self._build_params()
        self._prepare()
        return self

    def transform(self, X) -> np.ndarray:
        """Run the differentiator over a sampled signal.

        Parameters
        ----------
        X : array-like, shape (n_samples,) or (n_samples, 1)
            Signal samples taken every ``tau`` seconds.

        Returns
        -------
        ndarray of shape (n_samples, n + 1)
            Row k holds the estimates of the signal and its first n
            derivatives at sample time k.
        """
        if not hasattr(self, "params_"):
            self.fit()
        samples = _as_sample_vector(X)
        state = init(self.params_, samples[0])
        out = np.empty((samples.size, self.params_.n + 1))
        for k, f_k in enumerate(samples):
            out[k] = state.z
            state, _ = self._step(state, float(f_k))
        return out

    def _build_params(self) -> DifferentiatorParams:
        raise NotImplementedError

    def _prepare(self):
        pass

    def _step(self, state, f_k):
        raise NotImplementedError


class MatchingFilteringDifferentiator(_StreamingDifferentiator):
    """Filtering differentiator discretized by eigenvalue matching.

    Parameters
    ----------
    n : int
        Highest derivative order to estimate.
    n_f : int
        Filtering order (>= 1).
    tau : float
        Sampling period in seconds.
    roots : float, sequence of complex, or "from-charpoly"
        A negative scalar places all continuous design roots there; a
        sequence gives them explicitly; "from-charpoly" derives them from
        ``gains`` and ``lipschitz``.
    gains, lipschitz : optional
        Homogeneous gain sequence and derivative bound; only needed for
        roots="from-charpoly".
    """

    def __init__(self, n=1, n_f=1, tau=1e-3, roots=-2.5, gains=None, lipschitz=None):
        self.n = n
        self.n_f = n_f
        self.tau = tau
        self.roots = roots
        self.gains = gains
        self.lipschitz = lipschitz

    def _build_params(self):
        return DifferentiatorParams(
            n=self.n,
            n_f=self.n_f,
            tau=self.tau,
            gains=None if self.gains is None else tuple(self.gains),
            lipschitz=self.lipschitz,
            root_spec=_root_spec_from(self.roots),
        )

    def _prepare(self):
        self.cache_ = synthesis.precompute(self.params_)
        self.roots_ = resolve_roots(self.params_)

    def _step(self, state, f_k):
        return step_matching(state, f_k, self.cache_, self.roots_)


class StandardEulerDifferentiator(_StreamingDifferentiator):
    """Euler-stepped standard sliding-mode differentiator (no filter states).

    Parameters
    ----------
    n : int
        Highest derivative order to estimate.
    tau : float
        Sampling period in seconds.
    gains : sequence of n + 1 positive floats
    lipschitz : float
        Bound on the (n+1)-th derivative of the signal.
    """

    def __init__(self, n=1, tau=1e-3, gains=None, lipschitz=None):
        self.n = n
        self.tau = tau
        self.gains = gains
        self.lipschitz = lipschitz

    def _build_params(self):
        return DifferentiatorParams(
            n=self.n,
            n_f=0,
            tau=self.tau,
            gains=None if self.gains is None else tuple(self.gains),
            lipschitz=self.lipschitz,
            root_spec=RepeatedRoot(-1.0),  # unused by the Euler stepper
        )

    def _step(self, state, f_k):
        return step_standard_euler(state, f_k, self.params_)


class FilteringEulerDifferentiator(_StreamingDifferentiator):
    """Euler-stepped filtering differentiator (baseline for the matching one).

    Parameters
    ----------
    n, n_f, tau : as in `MatchingFilteringDifferentiator`.
    gains : sequence of n + n_f + 1 positive floats
    lipschitz : float
    """

    def __init__(self, n=1, n_f=1, tau=1e-3, gains=None, lipschitz=None):
        self.n = n
        self.n_f = n_f
        self.tau = tau
        self.gains = gains
        self.lipschitz = lipschitz

    def _build_params(self):
        return DifferentiatorParams(
            n=self.n,
            n_f=self.n_f,
            tau=self.tau,
            gains=None if self.gains is None else tuple(self.gains),
            lipschitz=self.lipschitz,
            root_spec=RepeatedRoot(-1.0),  # unused by the Euler stepper
        )

    def _step(self, state, f_k):
        return step_filtering_euler(state, f_k, self.params_)
