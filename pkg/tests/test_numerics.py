import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riskcert import (
    AccuracyError,
    InvalidInputError,
    QuadratureSpec,
    UnsupportedNormError,
    chaining_constant,
    complexity_tail_bound,
    complexity_tail_integral,
    entropy_integral,
    gaussian_spectral_factor,
    group_norm_pq,
    spectral_norm,
)

from _oracles import (
    composite_entropy_integral,
    composite_tail_integral,
    jacobi_svd_spectral_norm,
)

# Golden values produced by the composite Gauss-Legendre oracle in _oracles.py,
# cross-checked against 30-digit arbitrary-precision quadrature before freezing.
ENTROPY_AT_1 = 1.413860697665484
ENTROPY_AT_QUARTER = 0.5378482627237455
ENTROPY_AT_2 = 2.035288258294258
TAIL_QUAD_1_0 = 1.081710446465681
CHAINING_AT_1 = 1.162755369872505
SPECTRAL_FACTOR_1 = 1.8401886754134453
SPECTRAL_FACTOR_16 = 2.9885568098330424


class TestSpectralNorm:
    def test_diagonal(self):
        assert spectral_norm(np.diag([3.0, 1.0])) == pytest.approx(3.0, abs=1e-12)

    def test_zero_matrix(self):
        assert spectral_norm(np.zeros((4, 4))) == 0.0

    def test_matches_jacobi_oracle_small(self):
        rng = np.random.default_rng(11)
        for _ in range(5):
            a = rng.normal(size=(8, 8))
            assert spectral_norm(a) == pytest.approx(
                jacobi_svd_spectral_norm(a), rel=1e-10
            )

    def test_matches_jacobi_oracle_power_iteration_path(self):
        # 40 > 32 exercises the iterative branch
        rng = np.random.default_rng(12)
        a = rng.normal(size=(40, 40))
        got = spectral_norm(a, tol=1e-13, rng=np.random.default_rng(1))
        assert got == pytest.approx(jacobi_svd_spectral_norm(a), rel=1e-8)

    def test_rectangular(self):
        rng = np.random.default_rng(13)
        a = rng.normal(size=(5, 9))
        assert spectral_norm(a) == pytest.approx(jacobi_svd_spectral_norm(a), rel=1e-10)

    def test_scaling(self):
        rng = np.random.default_rng(14)
        a = rng.normal(size=(6, 6))
        base = spectral_norm(a)
        for alpha in (-2.0, 0.5):
            assert spectral_norm(alpha * a) == pytest.approx(abs(alpha) * base, rel=1e-12)

    def test_dominated_by_frobenius(self):
        rng = np.random.default_rng(15)
        for _ in range(10):
            a = rng.normal(size=(7, 7))
            assert spectral_norm(a) <= group_norm_pq(a, 2, 2) + 1e-12

    def test_nonfinite_rejected(self):
        with pytest.raises(InvalidInputError):
            spectral_norm(np.array([[1.0, np.nan], [0.0, 1.0]]))
        with pytest.raises(InvalidInputError):
            spectral_norm(np.array([[np.inf, 0.0], [0.0, 1.0]]))

    def test_bad_tol(self):
        with pytest.raises(InvalidInputError):
            spectral_norm(np.eye(2), tol=0.0)


class TestGroupNorm:
    def test_frobenius_identity(self):
        assert group_norm_pq(np.eye(2), 2, 2) == pytest.approx(math.sqrt(2.0))

    def test_two_inf_is_max_row_norm(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        assert group_norm_pq(a, 2, np.inf) == pytest.approx(5.0)

    def test_frobenius_definition(self):
        rng = np.random.default_rng(21)
        a = rng.normal(size=(4, 6))
        assert group_norm_pq(a, 2, 2) == pytest.approx(math.sqrt(np.sum(a * a)))

    def test_inf_two(self):
        a = np.array([[1.0, -3.0], [2.0, 0.5]])
        # per-row max abs, then |.|_2 across rows
        assert group_norm_pq(a, np.inf, 2) == pytest.approx(math.sqrt(9.0 + 4.0))

    def test_one_one_is_entry_sum(self):
        a = np.array([[1.0, -2.0], [3.0, -4.0]])
        assert group_norm_pq(a, 1, 1) == pytest.approx(10.0)

    def test_unsupported_pairs(self):
        with pytest.raises(UnsupportedNormError):
            group_norm_pq(np.eye(2), 0.5, 2)
        with pytest.raises(UnsupportedNormError):
            group_norm_pq(np.eye(2), 2, 0)
        with pytest.raises(UnsupportedNormError):
            group_norm_pq(np.eye(2), "fro", 2)

    @given(alpha=st.floats(-4, 4, allow_nan=False), seed=st.integers(0, 50))
    @settings(max_examples=40, deadline=None)
    def test_homogeneity(self, alpha, seed):
        a = np.random.default_rng(seed).normal(size=(3, 5))
        for p, q in ((1, 2), (2, 2), (2, np.inf), (np.inf, 2), (np.inf, np.inf)):
            assert group_norm_pq(alpha * a, p, q) == pytest.approx(
                abs(alpha) * group_norm_pq(a, p, q), rel=1e-12, abs=1e-12
            )


class TestEntropyIntegral:
    def test_zero(self):
        assert entropy_integral(0.0) == 0.0

    def test_golden_at_one(self):
        assert entropy_integral(1.0) == pytest.approx(ENTROPY_AT_1, abs=1e-10)

    def test_golden_small_and_large(self):
        assert entropy_integral(0.25) == pytest.approx(ENTROPY_AT_QUARTER, abs=1e-10)
        assert entropy_integral(2.0) == pytest.approx(ENTROPY_AT_2, abs=1e-10)

    def test_matches_oracle_on_grid(self):
        for a in (1e-4, 0.05, 0.7, 3.0, 10.0):
            assert entropy_integral(a) == pytest.approx(
                composite_entropy_integral(a), rel=1e-9
            )

    def test_monotone(self):
        assert entropy_integral(10.0) > entropy_integral(5.0)
        grid = [entropy_integral(a) for a in (0.1, 0.5, 1.0, 2.0, 4.0)]
        assert all(x < y for x, y in zip(grid, grid[1:]))

    def test_average_slope_decreasing(self):
        # integrand decreases, so I(a)/a decreases
        vals = [entropy_integral(a) / a for a in (0.25, 0.5, 1.0, 2.0, 4.0)]
        assert all(x > y for x, y in zip(vals, vals[1:]))

    def test_negative_rejected(self):
        with pytest.raises(InvalidInputError):
            entropy_integral(-1.0)
        with pytest.raises(InvalidInputError):
            entropy_integral(float("nan"))

    def test_nonconvergence_carries_best_estimate(self):
        starved = QuadratureSpec(abs_tol=1e-300, rel_tol=1e-15, max_subdivisions=1)
        with pytest.raises(AccuracyError) as exc:
            entropy_integral(5.0, quad=starved)
        assert math.isfinite(exc.value.best_estimate)
        assert exc.value.best_estimate > 0


class TestComplexityTail:
    def test_closed_form_at_1_0(self):
        assert complexity_tail_bound(1.0, 0.0) == pytest.approx(
            math.sqrt(math.log(2.0) + 1.0)
        )

    def test_quadrature_golden(self):
        assert complexity_tail_integral(1.0, 0.0) == pytest.approx(TAIL_QUAD_1_0, abs=1e-10)

    def test_bound_dominates_quadrature(self):
        for a in (0.5, 1.0, 2.0):
            for b in (0.0, 1.0, 5.0):
                bound = complexity_tail_bound(a, b)
                quad = complexity_tail_integral(a, b)
                assert bound >= quad
                assert quad == pytest.approx(composite_tail_integral(a, b), rel=1e-9)

    def test_strictly_increasing_in_b(self):
        vals = [complexity_tail_bound(1.5, b) for b in (0.0, 0.5, 1.0, 2.0)]
        assert all(x < y for x, y in zip(vals, vals[1:]))

    def test_invalid(self):
        with pytest.raises(InvalidInputError):
            complexity_tail_bound(0.0, 1.0)
        with pytest.raises(InvalidInputError):
            complexity_tail_bound(1.0, -0.5)
        with pytest.raises(InvalidInputError):
            complexity_tail_integral(-1.0, 0.0)


class TestScalarFactors:
    def test_chaining_constant_golden(self):
        assert chaining_constant(1) == pytest.approx(CHAINING_AT_1, abs=1e-12)

    def test_chaining_constant_formula(self):
        for n in (2, 17, 1000, 10**6):
            assert chaining_constant(n) == pytest.approx(
                math.log(math.e + math.log(2 * n**2) ** 2)
            )

    def test_chaining_monotone_and_above_one(self):
        grid = [1, 2, 10, 10**3, 10**6, 10**9]
        vals = [chaining_constant(n) for n in grid]
        assert all(x <= y for x, y in zip(vals, vals[1:]))
        assert chaining_constant(10**6) > chaining_constant(10**3)
        assert all(v > 1.0 for v in vals)

    def test_chaining_invalid(self):
        with pytest.raises(InvalidInputError):
            chaining_constant(0)
        with pytest.raises(InvalidInputError):
            chaining_constant(2.5)

    def test_spectral_factor_goldens(self):
        assert gaussian_spectral_factor(1) == pytest.approx(SPECTRAL_FACTOR_1, abs=1e-12)
        assert gaussian_spectral_factor(16) == pytest.approx(SPECTRAL_FACTOR_16, abs=1e-12)
        assert gaussian_spectral_factor(16) == pytest.approx(
            math.sqrt(2 * math.log(32 * math.e))
        )

    def test_spectral_factor_monotone_and_floor(self):
        vals = [gaussian_spectral_factor(m) for m in (1, 2, 4, 16, 64, 1024)]
        assert all(x < y for x, y in zip(vals, vals[1:]))
        assert vals[0] >= math.sqrt(2.0)

    def test_spectral_factor_invalid(self):
        with pytest.raises(InvalidInputError):
            gaussian_spectral_factor(0)


class TestQuadratureSpec:
    def test_validation(self):
        with pytest.raises(InvalidInputError):
            QuadratureSpec(abs_tol=0.0)
        with pytest.raises(InvalidInputError):
            QuadratureSpec(rel_tol=-1e-9)
        with pytest.raises(InvalidInputError):
            QuadratureSpec(max_subdivisions=0)
