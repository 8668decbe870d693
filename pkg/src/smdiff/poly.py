"""Real-coefficient polynomial algebra.

Monic polynomials are represented by their coefficients in ascending degree
order.  Root multisets are plain tuples of complex numbers and are required
to be closed under conjugation wherever a real polynomial is expected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConvergenceFailure, DimensionMismatch, NotConjugateClosed

#: Tolerance for pairing a root with the conjugate of another, relative to
#: the root magnitude.  Matches the polish tolerance of `find_roots`.
CONJUGATE_PAIR_TOL = 1e-9

#: Relative magnitude below which the imaginary residue of a coefficient
#: produced by conjugate-pair multiplication is dropped.
IMAG_RESIDUE_TOL = 1e-12

#: Normalized residual |p(r)| / (1 + |r|^deg) that a polished root must meet.
ROOT_RESIDUAL_TOL = 1e-9

_NEWTON_BUDGET = 24


@dataclass(frozen=True)
class RealPolynomial:
    """Polynomial with real coefficients, ascending degree order.

    ``coeffs[j]`` multiplies ``x**j``; the tuple has length ``degree + 1``.
    """

    coeffs: tuple[float, ...]

    def __post_init__(self):
        if len(self.coeffs) == 0:
            raise DimensionMismatch("polynomial needs at least one coefficient")
        if not all(math.isfinite(c) for c in self.coeffs):
            raise DimensionMismatch("polynomial coefficients must be finite")

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_monic(self) -> bool:
        return self.coeffs[-1] == 1.0

    def __call__(self, x):
        """Evaluate by Horner's rule; accepts real or complex scalars."""
        acc = 0.0 * x + self.coeffs[-1]
        for c in reversed(self.coeffs[:-1]):
            acc = acc * x + c
        return acc

    def derivative(self) -> "RealPolynomial":
        if self.degree == 0:
            return RealPolynomial((0.0,))
        return RealPolynomial(tuple(j * c for j, c in enumerate(self.coeffs) if j > 0))


def check_conjugate_closed(roots: Sequence[complex], tol: float = CONJUGATE_PAIR_TOL) -> None:
    """Raise `NotConjugateClosed` unless every non-real root has its
    conjugate present with matching multiplicity.

    Roots ``r`` and ``s`` are considered a pair when
    ``|r - conj(s)| < tol * (1 + |r|)``.
    """
    pending = [complex(r) for r in roots if abs(complex(r).imag) > tol * (1.0 + abs(complex(r).real))]
    while pending:
        r = pending.pop()
        best = None
        for i, s in enumerate(pending):
            if abs(r - s.conjugate()) < tol * (1.0 + abs(r)):
                best = i
                break
        if best is None:
            raise NotConjugateClosed(f"root {r} has no conjugate partner")
        pending.pop(best)


def coeffs_from_roots(roots: Sequence[complex]) -> RealPolynomial:
    """Monic real polynomial with the given conjugate-closed root multiset.

    Parameters
    ----------
    roots : sequence of complex
        Closed under conjugation (checked).

    Returns
    -------
    RealPolynomial
        Degree ``len(roots)``, monic.  Imaginary residue left over from
        pairing is dropped only while it stays below ``IMAG_RESIDUE_TOL``
        relative to the largest coefficient.
    """
    check_conjugate_closed(roots)
    coeffs = [1.0 + 0.0j]
    for r in roots:
        r = complex(r)
        nxt = [0.0 + 0.0j] * (len(coeffs) + 1)
        for i, c in enumerate(coeffs):
            nxt[i + 1] += c
            nxt[i] -= r * c
        coeffs = nxt
    scale = max(1.0, max(abs(c) for c in coeffs))
    residue = max(abs(c.imag) for c in coeffs)
    if residue > IMAG_RESIDUE_TOL * scale:
        raise NotConjugateClosed(
            f"imaginary residue {residue:.3e} exceeds {IMAG_RESIDUE_TOL:.0e} relative"
        )
    return RealPolynomial(tuple(c.real for c in coeffs))


def find_roots(p: RealPolynomial) -> tuple[complex, ...]:
    """All roots of a monic polynomial, polished and conjugate-closed.

    The roots are extracted as eigenvalues of the balanced companion matrix
    (LAPACK's QR iteration) and each is then polished by Newton steps until
    ``|p(r)| / (1 + |r|**deg) < ROOT_RESIDUAL_TOL``.  Output is sorted by
    (real, imag) so repeated calls are deterministic.

    Raises
    ------
    ConvergenceFailure
        If some root cannot be polished within the iteration budget.
    DimensionMismatch
        If the polynomial has degree < 1.
    """
    deg = p.degree
    if deg < 1:
        raise DimensionMismatch("cannot take roots of a constant polynomial")
    if p.coeffs[-1] == 0.0:
        raise DimensionMismatch("leading coefficient must be nonzero")
    monic = p.coeffs if p.is_monic else tuple(c / p.coeffs[-1] for c in p.coeffs)

    companion = np.zeros((deg, deg))
    if deg > 1:
        companion[1:, :-1] = np.eye(deg - 1)
    companion[:, -1] = [-c for c in monic[:-1]]
    raw = np.linalg.eigvals(companion)

    dp = RealPolynomial(monic).derivative()
    pm = RealPolynomial(monic)
    polished = []
    for r in raw:
        x = complex(r)
        ok = False
        for _ in range(_NEWTON_BUDGET):
            fx = pm(x)
            if abs(fx) / (1.0 + abs(x) ** deg) < ROOT_RESIDUAL_TOL:
                ok = True
                break
            dfx = dp(x)
            if dfx == 0:
                break
            x = x - fx / dfx
        if not ok:
            raise ConvergenceFailure(f"root polish stalled near {x}")
        polished.append(x)

    return _symmetrize_conjugates(polished)


def _symmetrize_conjugates(roots: list[complex]) -> tuple[complex, ...]:
    """Force exact conjugate symmetry on a numerically paired root list."""
    reals = []
    upper = []
    pending = []
    for r in roots:
        if abs(r.imag) <= CONJUGATE_PAIR_TOL * (1.0 + abs(r.real)):
            reals.append(complex(r.real, 0.0))
        else:
            pending.append(r)
    while pending:
        r = pending.pop()
        best, dist = None, math.inf
        for i, s in enumerate(pending):
            d = abs(r - s.conjugate())
            if d < dist:
                best, dist = i, d
        if best is None or dist > CONJUGATE_PAIR_TOL * (1.0 + abs(r)):
            raise ConvergenceFailure(f"extracted roots are not conjugate paired near {r}")
        s = pending.pop(best)
        mean = 0.5 * (r + s.conjugate())
        mean = complex(mean.real, abs(mean.imag))
        upper.append(mean)
    out = reals + [z for u in upper for z in (u, u.conjugate())]
    return tuple(sorted(out, key=lambda z: (z.real, z.imag)))


def char_poly_from_gains(gains: Sequence[float], lip: float, m: int) -> RealPolynomial:
    """Monic design polynomial whose roots set the error-dynamics spectrum.

    Coefficient of ``b**j`` is ``gains[j] * lip**((m + 1 - j) / (m + 1))``
    for ``j = 0..m``; the leading coefficient is 1.

    Parameters
    ----------
    gains : sequence of m+1 positive reals
    lip : positive real
        Bound on the highest derivative of the signal being differentiated.
    m : total order (derivative order plus filtering order)
    """
    if len(gains) != m + 1:
        raise DimensionMismatch(f"need {m + 1} gains, got {len(gains)}")
    if lip <= 0:
        raise DimensionMismatch("lip must be positive")
    if any(g <= 0 for g in gains):
        raise DimensionMismatch("all gains must be positive")
    coeffs = [gains[j] * lip ** ((m + 1 - j) / (m + 1)) for j in range(m + 1)]
    coeffs.append(1.0)
    return RealPolynomial(tuple(coeffs))


def eval_at_matrix(p: RealPolynomial, powers: Sequence[np.ndarray]) -> np.ndarray:
    """Evaluate ``sum_j coeffs[j] * powers[j]`` for cached matrix powers.

    ``powers[j]`` must be the j-th power of one square matrix, ``j`` running
    at least up to ``p.degree``.
    """
    if len(powers) < p.degree + 1:
        raise DimensionMismatch(
            f"need {p.degree + 1} matrix powers, got {len(powers)}"
        )
    shape = np.asarray(powers[0]).shape
    if len(shape) != 2 or shape[0] != shape[1]:
        raise DimensionMismatch("powers must be square matrices")
    acc = np.zeros(shape)
    for j, c in enumerate(p.coeffs):
        pw = np.asarray(powers[j])
        if pw.shape != shape:
            raise DimensionMismatch("ragged matrix power list")
        acc = acc + c * pw
    return acc
