import math

import numpy as np
import pytest

from smdiff.errors import ConvergenceFailure, DimensionMismatch, NotConjugateClosed
from smdiff.poly import (
    RealPolynomial,
    char_poly_from_gains,
    check_conjugate_closed,
    coeffs_from_roots,
    eval_at_matrix,
    find_roots,
)

GAINS_M5 = (1.1, 6.75, 20.26, 32.24, 23.72, 7.0)

# Printed design roots for the two simulation setups (4 decimals).
ROOTS_LIP2 = [
    -2.8072 + 2.7583j, -2.8072 - 2.7583j,
    -0.2725 + 0.3729j, -0.2725 - 0.3729j,
    -1.0831 + 0.0j, -0.6148 + 0.0j,
]
ROOTS_LIP320_FIVE = [
    -6.5408 + 6.4269j, -6.5408 - 6.4269j,
    -0.6348 + 0.8689j, -0.6348 - 0.8689j,
    -2.5235 + 0.0j,
]


def greedy_match(computed, expected):
    """Pair each expected value with its nearest computed partner."""
    pool = list(computed)
    pairs = []
    for e in expected:
        idx = min(range(len(pool)), key=lambda i: abs(pool[i] - e))
        pairs.append((pool.pop(idx), e))
    return pairs


class TestCoeffsFromRoots:
    def test_repeated_zero_roots(self):
        p = coeffs_from_roots([0.0, 0.0])
        assert p.coeffs == (0.0, 0.0, 1.0)

    def test_conjugate_pair(self):
        p = coeffs_from_roots([-1 + 1j, -1 - 1j])
        assert p.coeffs == pytest.approx((2.0, 2.0, 1.0), abs=1e-15)

    def test_sim1_fixture_coeffs(self):
        # Oracle: direct arithmetic gains[j] * lip**((m+1-j)/(m+1)) with
        # lip = 2; the printed roots reproduce these within their 4-decimal
        # resolution.
        expected = tuple(GAINS_M5[j] * 2.0 ** ((6 - j) / 6) for j in range(6)) + (1.0,)
        assert expected == pytest.approx((2.2, 12.027, 32.161, 45.594, 29.885, 7.857, 1.0), abs=2e-3)
        p = coeffs_from_roots(ROOTS_LIP2)
        assert p.coeffs == pytest.approx(expected, abs=1e-2)

    def test_missing_conjugate_raises(self):
        with pytest.raises(NotConjugateClosed):
            coeffs_from_roots([1j])
        with pytest.raises(NotConjugateClosed):
            coeffs_from_roots([1 + 2j, 1 + 2j, 1 - 2j])

    def test_check_helper_accepts_real_and_pairs(self):
        check_conjugate_closed([-1.0, 0.5 + 2j, 0.5 - 2j])


class TestFindRoots:
    def test_quadratic(self):
        roots = find_roots(RealPolynomial((2.0, 2.0, 1.0)))
        pairs = greedy_match(roots, [-1 + 1j, -1 - 1j])
        assert all(abs(c - e) < 1e-12 for c, e in pairs)

    def test_sim1_root_fixture(self):
        p = char_poly_from_gains(GAINS_M5, 2.0, 5)
        roots = find_roots(p)
        for computed, expected in greedy_match(roots, ROOTS_LIP2):
            assert abs(computed - expected) < 1e-3

    def test_sim2_root_fixture_and_suspected_typo(self):
        p = char_poly_from_gains(GAINS_M5, 320.0, 5)
        roots = find_roots(p)
        for computed, expected in greedy_match(roots, ROOTS_LIP320_FIVE):
            assert abs(computed - expected) < 1e-3
        # The sixth root follows from the scaling law: -0.6148 * (160)**(1/6).
        # The printed table lists -0.6348 for it, which duplicates the real
        # part of the complex pair; treated as a typo and logged, not failed.
        sixth = min(
            (r for r in roots if abs(r.imag) < 1e-9 and abs(r + 2.5235) > 0.5),
            key=lambda r: abs(r + 1.4325),
        )
        assert abs(sixth - (-1.4325)) < 1e-3
        print(
            f"note: sixth root computed {sixth.real:.4f}; printed value -0.6348 "
            "is inconsistent with the scaling law and is treated as a typo"
        )

    def test_degree_zero_rejected(self):
        with pytest.raises(DimensionMismatch):
            find_roots(RealPolynomial((1.0,)))

    def test_residual_post_condition(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            roots = rng.uniform(-3, 3, size=4)
            p = coeffs_from_roots(roots.tolist())
            out = find_roots(p)
            for r in out:
                assert abs(p(r)) / (1 + abs(r) ** p.degree) < 1e-9


class TestCharPolyFromGains:
    def test_unit_case(self):
        p = char_poly_from_gains((1.0, 1.0), 1.0, 1)
        assert p.coeffs == (1.0, 1.0, 1.0)

    def test_sim1_scalings(self):
        p = char_poly_from_gains(GAINS_M5, 2.0, 5)
        assert p.coeffs[0] == pytest.approx(2.2, abs=1e-12)
        assert p.coeffs[5] == pytest.approx(7.0 * 2.0 ** (1 / 6), rel=1e-12)
        assert p.coeffs[5] == pytest.approx(7.8572, abs=1e-4)

    def test_gain_count_mismatch(self):
        with pytest.raises(DimensionMismatch):
            char_poly_from_gains((1.0, 1.0, 1.0), 1.0, 1)

    def test_root_scaling_law(self):
        # Substituting b = lip**(1/(m+1)) * beta shows roots scale with
        # lip**(1/(m+1)); checked against independently computed root sets.
        r_small = find_roots(char_poly_from_gains(GAINS_M5, 2.0, 5))
        r_large = find_roots(char_poly_from_gains(GAINS_M5, 320.0, 5))
        factor = (320.0 / 2.0) ** (1.0 / 6.0)
        for computed, expected in greedy_match(r_large, [r * factor for r in r_small]):
            assert abs(computed - expected) <= 1e-9 * abs(expected)


class TestEvalAtMatrix:
    def test_identity_annihilates_r_minus_one(self):
        powers = [np.eye(3), np.eye(3)]
        out = eval_at_matrix(RealPolynomial((-1.0, 1.0)), powers)
        assert np.allclose(out, 0.0, atol=1e-15)

    def test_cayley_hamilton(self):
        m = np.array([[1.0, 0.1], [0.0, 1.0]])
        char = coeffs_from_roots([1.0, 1.0])  # (r - 1)^2
        powers = [np.eye(2), m, m @ m]
        out = eval_at_matrix(char, powers)
        assert np.allclose(out, 0.0, atol=1e-14)

    def test_square_of_shift(self):
        tau = 0.3
        m = np.array([[1.0, tau], [0.0, 1.0]])
        powers = [np.eye(2), m, m @ m]
        out = eval_at_matrix(RealPolynomial((0.0, 0.0, 1.0)), powers)
        assert np.allclose(out, [[1.0, 2 * tau], [0.0, 1.0]], atol=1e-15)

    def test_ragged_powers_rejected(self):
        with pytest.raises(DimensionMismatch):
            eval_at_matrix(RealPolynomial((0.0, 1.0)), [np.eye(2), np.eye(3)])
        with pytest.raises(DimensionMismatch):
            eval_at_matrix(RealPolynomial((0.0, 0.0, 1.0)), [np.eye(2), np.eye(2)])


class TestRoundTrip:
    def test_random_separated_sets(self):
        # Root recovery from coefficients is ill conditioned for clustered
        # roots (a k-fold root moves like eps**(1/k)), so the round-trip
        # property is exercised on sets with a modest minimum separation.
        rng = np.random.default_rng(2024)
        done = 0
        while done < 60:
            count = int(rng.integers(1, 9))
            roots = []
            left = count
            while left > 0:
                mag = 10.0 ** rng.uniform(-3, 3)
                if left >= 2 and rng.random() < 0.5:
                    ang = rng.uniform(0.1, math.pi - 0.1)
                    z = mag * complex(math.cos(ang), math.sin(ang))
                    roots += [z, z.conjugate()]
                    left -= 2
                else:
                    roots.append(complex(rng.choice([-1, 1]) * mag, 0.0))
                    left -= 1
            scale = max(abs(r) for r in roots)
            sep = min(
                (abs(a - b) for i, a in enumerate(roots) for b in roots[i + 1:]),
                default=math.inf,
            )
            if sep < 0.05 * scale:
                continue
            done += 1
            recovered = find_roots(coeffs_from_roots(roots))
            for computed, expected in greedy_match(recovered, roots):
                assert abs(computed - expected) <= 1e-6 * (1 + abs(expected))

    def test_coefficients_always_real(self):
        rng = np.random.default_rng(11)
        for _ in range(40):
            z = complex(rng.uniform(-2, 2), rng.uniform(0.01, 2))
            r = rng.uniform(-2, 2)
            p = coeffs_from_roots([z, z.conjugate(), r])
            assert all(isinstance(c, float) for c in p.coeffs)
