import cmath
import math

import numpy as np
import pytest

from smdiff.errors import (
    DimensionMismatch,
    InvalidOrder,
    NotConjugateClosed,
    SingularMatrix,
    UnstableRoot,
)
from smdiff.poly import coeffs_from_roots
from smdiff.synthesis import (
    TransitionMatrix,
    closed_loop,
    closed_loop_eigenvalues,
    injection_gains,
    injection_gains_at,
    matched_poles,
    observability_matrix,
    precompute,
    solve_observability,
    transition_matrix,
)


class _Params:
    def __init__(self, n, n_f, tau):
        self.n, self.n_f, self.tau = n, n_f, tau


class TestTransitionMatrix:
    def test_n1_nf1(self):
        t = transition_matrix(1, 1, 0.1)
        assert np.allclose(
            t.entries, [[1, 0.1, 0], [0, 1, 0.1], [0, 0, 1]], atol=1e-15
        )

    def test_smallest_case(self):
        t = transition_matrix(0, 1, 0.25)
        assert np.allclose(t.entries, [[1, 0.25], [0, 1]], atol=1e-15)

    def test_taylor_block_entries(self):
        t = transition_matrix(3, 2, 0.01)
        assert t.entries.shape == (6, 6)
        # last filter row couples into the first estimate column with tau
        assert t.entries[1, 2] == 0.01
        row = t.entries[2, 2:]
        assert row == pytest.approx(
            (1.0, 0.01, 5e-5, 0.01 ** 3 / 6.0), rel=1e-12
        )
        assert t.entries[2, 5] == pytest.approx(1.6667e-7, rel=1e-4)
        # unit diagonal, upper triangular
        assert np.allclose(np.diag(t.entries), 1.0)
        assert np.allclose(np.tril(t.entries, -1), 0.0)

    def test_invalid_orders(self):
        with pytest.raises(InvalidOrder):
            transition_matrix(1, 0, 0.1)
        with pytest.raises(InvalidOrder):
            transition_matrix(-1, 1, 0.1)
        with pytest.raises(InvalidOrder):
            transition_matrix(1, 1, 0.0)


class TestObservability:
    def test_two_state_case(self):
        t = transition_matrix(0, 1, 0.5)
        obs = observability_matrix(t)
        assert np.allclose(obs, [[1, 0], [1, 0.5]], atol=1e-15)
        col = solve_observability(obs)
        assert col == pytest.approx([0.0, 2.0], abs=1e-15)

    def test_zero_tau_is_singular(self):
        frozen = np.eye(2)
        t = TransitionMatrix(entries=frozen, n=0, n_f=1, tau=0.0)
        with pytest.raises(SingularMatrix):
            solve_observability(observability_matrix(t))


class TestPrecompute:
    def test_solve_column_small_case(self):
        cache = precompute(_Params(0, 1, 0.5))
        assert cache.solve_col == pytest.approx([0.0, 2.0], abs=1e-15)

    def test_power_count(self):
        cache = precompute(_Params(3, 2, 0.01))
        assert len(cache.powers) == 7
        assert np.allclose(cache.powers[0], np.eye(6))
        for j in range(6):
            assert np.allclose(
                cache.powers[j + 1], cache.powers[j] @ cache.trans.entries
            )

    def test_solve_residual_definitional(self):
        for n, n_f, tau in [(0, 1, 0.5), (1, 1, 0.1), (3, 2, 0.01), (4, 3, 1e-3)]:
            cache = precompute(_Params(n, n_f, tau))
            obs = observability_matrix(cache.trans)
            col = np.array(cache.solve_col)
            rhs = np.zeros(n + n_f + 1)
            rhs[-1] = 1.0
            residual = np.linalg.norm(obs @ col - rhs, np.inf)
            scale = 1.0 + np.linalg.norm(obs, np.inf) * np.linalg.norm(col, np.inf)
            assert residual < 1e-12 * scale


class TestMatchedPoles:
    def test_zero_filter_state_gives_deadbeat(self):
        poles = matched_poles([-1.5] * 6, 0.0, 0.01, 5)
        assert poles == (0j,) * 6

    def test_repeated_real(self):
        poles = matched_poles([-1.5] * 6, 1.0, 0.01, 5)
        assert all(p == pytest.approx(math.exp(-0.015), rel=1e-12) for p in poles)
        assert poles[0].real == pytest.approx(0.985112, abs=1e-6)

    def test_complex_pair(self):
        poles = matched_poles([-1 + 1j, -1 - 1j], 1.0, 1.0, 1)
        expect = cmath.exp(-1 + 1j)
        assert poles[0] == pytest.approx(expect, rel=1e-12)
        assert poles[0] == pytest.approx(0.19877 + 0.30956j, abs=1e-5)
        assert poles[1] == poles[0].conjugate()

    def test_unstable_root_rejected(self):
        with pytest.raises(UnstableRoot):
            matched_poles([1.0, -1.0], 1.0, 0.1, 1)
        with pytest.raises(UnstableRoot):
            matched_poles([0.0, -1.0], 1.0, 0.1, 1)

    def test_length_checked(self):
        with pytest.raises(DimensionMismatch):
            matched_poles([-1.0], 1.0, 0.1, 1)

    def test_contraction_and_monotonicity(self):
        roots = [-2.8 + 2.7j, -2.8 - 2.7j, -0.3 + 0.37j, -0.3 - 0.37j, -1.1, -0.6]
        previous = None
        for w1 in (1e-6, 1e-3, 1.0, 1e3):
            poles = matched_poles(roots, w1, 0.01, 5)
            mags = sorted(abs(p) for p in poles)
            assert all(m < 1.0 for m in mags)
            if previous is not None:
                assert all(a > b for a, b in zip(mags, previous))
            previous = mags


class TestInjectionGains:
    def test_zero_when_poles_match_open_loop(self):
        # All open-loop eigenvalues sit at 1, so placing there needs no
        # injection; the factored evaluation returns an exact zero.
        for n, n_f, tau in [(0, 1, 0.5), (1, 1, 0.25)]:
            cache = precompute(_Params(n, n_f, tau))
            g = injection_gains([1.0] * (n + n_f + 1), cache)
            assert np.max(np.abs(g)) <= 1e-9

    def test_two_state_closed_form(self):
        # Hand algebra: gains = [(d1 + d2) - 2, -(1 - d1)(1 - d2) / tau];
        # trace and determinant of the closed loop must equal the pole sums.
        tau = 0.1
        cache = precompute(_Params(0, 1, tau))
        for d1, d2 in [(0.3, 0.7), (0.9, -0.2), (0.5 + 0.4j, 0.5 - 0.4j)]:
            g = injection_gains([d1, d2], cache)
            expect0 = (d1 + d2).real - 2.0
            expect1 = (-(1 - d1) * (1 - d2) / tau).real
            assert g == pytest.approx([expect0, expect1], rel=1e-12, abs=1e-12)
            e = closed_loop(cache.trans, g)
            assert np.trace(e) == pytest.approx((d1 + d2).real, rel=1e-12)
            assert np.linalg.det(e) == pytest.approx((d1 * d2).real, rel=1e-10, abs=1e-12)

    def test_deadbeat_two_state(self):
        cache = precompute(_Params(0, 1, 0.1))
        g = injection_gains([0.0, 0.0], cache)
        assert g == pytest.approx([-2.0, -10.0], rel=1e-12)
        assert cache.deadbeat_gains == pytest.approx([-2.0, -10.0], rel=1e-12)

    def test_dimension_mismatch(self):
        cache = precompute(_Params(0, 1, 0.1))
        with pytest.raises(DimensionMismatch):
            injection_gains([0.0, 0.0, 0.0], cache)

    def test_not_conjugate_closed(self):
        cache = precompute(_Params(0, 1, 0.1))
        with pytest.raises(NotConjugateClosed):
            injection_gains([0.5 + 0.1j, 0.5 + 0.1j], cache)


def random_stable_poles(m1, rng, min_sep=0.05):
    """Conjugate-closed pole sets inside the unit disk, separation guarded.

    Pole placement itself is exact for clustered poles, but verifying it
    through an eigensolve is not: near-coincident eigenvalues of the highly
    non-normal closed loop are inherently ill conditioned.  A minimum
    pairwise separation keeps the check about the gains, not about
    defective-eigenvalue conditioning.
    """
    while True:
        poles = []
        left = m1
        while left > 0:
            if left >= 2 and rng.random() < 0.5:
                radius = rng.random() * 0.999
                ang = rng.uniform(0.0, math.pi)
                z = radius * complex(math.cos(ang), math.sin(ang))
                poles += [z, z.conjugate()]
                left -= 2
            else:
                poles.append(complex(rng.uniform(-0.999, 0.999), 0.0))
                left -= 1
        sep = min(
            (abs(a - b) for i, a in enumerate(poles) for b in poles[i + 1:]),
            default=math.inf,
        )
        if sep >= min_sep:
            return poles


class TestPolePlacement:
    def test_random_placement_up_to_order_seven(self):
        rng = np.random.default_rng(3)
        for _ in range(150):
            m = int(rng.integers(1, 8))
            n_f = int(rng.integers(1, m + 1))
            tau = float(rng.choice([1e-3, 0.05, 1.0]))
            cache = precompute(_Params(m - n_f, n_f, tau))
            poles = random_stable_poles(m + 1, rng)
            g = injection_gains(poles, cache)
            assert np.all(np.isfinite(g))
            eigs = closed_loop_eigenvalues(cache.trans, g)
            pool = list(eigs)
            for d in poles:
                idx = min(range(len(pool)), key=lambda i: abs(pool[i] - d))
                assert abs(pool.pop(idx) - d) <= 1e-8 * (1 + abs(d))

    def test_fast_path_matches_generic(self):
        cache = precompute(_Params(3, 2, 0.01))
        roots_rep = (complex(-2.5),) * 6
        roots_mix = (
            -2.8 + 2.7j, -2.8 - 2.7j, -0.3 + 0.37j, -0.3 - 0.37j,
            complex(-1.1), complex(-0.6),
        )
        for roots in (roots_rep, roots_mix):
            for w1 in (0.0, 1e-6, 0.02, 3.0):
                fast = injection_gains_at(roots, w1, cache)
                poles = matched_poles(roots, w1, 0.01, 5)
                ref = injection_gains(poles, cache)
                assert fast == pytest.approx(ref, rel=1e-12, abs=1e-15)

    def test_gains_real_for_conjugate_closed_poles(self):
        rng = np.random.default_rng(5)
        cache = precompute(_Params(2, 1, 0.1))
        for _ in range(25):
            poles = random_stable_poles(4, rng)
            g = injection_gains(poles, cache)
            assert g.dtype == float
