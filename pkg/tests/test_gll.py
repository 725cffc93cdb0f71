"""GLL basis: frozen closed-form values plus the rule's invariants."""

import numpy as np
import pytest

from mdg import RangeError, gll_basis, legendre_eval

ALL_LX = list(range(2, 17))


class TestLegendreEval:
    def test_degree_zero(self):
        assert legendre_eval(0, 0.3) == (1.0, 0.0)

    def test_degree_one(self):
        assert legendre_eval(1, -0.5) == (-0.5, 1.0)

    def test_degree_two_closed_form(self):
        # L_2(x) = (3x^2 - 1)/2, L_2'(x) = 3x
        value, deriv = legendre_eval(2, 0.0)
        assert value == -0.5
        assert deriv == 0.0

    @pytest.mark.parametrize("n", [3, 5, 9])
    def test_against_numpy_polynomial(self, n):
        xs = np.linspace(-1.0, 1.0, 17)
        coeffs = np.zeros(n + 1)
        coeffs[n] = 1.0
        expect = np.polynomial.legendre.legval(xs, coeffs)
        expect_d = np.polynomial.legendre.legval(
            xs, np.polynomial.legendre.legder(coeffs)
        )
        value, deriv = legendre_eval(n, xs)
        np.testing.assert_allclose(value, expect, atol=1e-13)
        np.testing.assert_allclose(deriv, expect_d, atol=1e-12)

    def test_rejects_points_outside_interval(self):
        with pytest.raises(RangeError):
            legendre_eval(3, 1.5)

    def test_rejects_negative_degree(self):
        with pytest.raises(RangeError):
            legendre_eval(-1, 0.0)


class TestGllBasisFrozenValues:
    def test_lx2(self):
        b = gll_basis(2)
        np.testing.assert_array_equal(b.points, [-1.0, 1.0])
        np.testing.assert_array_equal(b.weights, [1.0, 1.0])
        np.testing.assert_allclose(
            b.deriv, [[-0.5, 0.5], [-0.5, 0.5]], atol=1e-15
        )

    def test_lx3(self):
        b = gll_basis(3)
        np.testing.assert_allclose(b.points, [-1.0, 0.0, 1.0], atol=1e-15)
        np.testing.assert_allclose(
            b.weights, [1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0], atol=1e-15
        )

    def test_lx4_interior_nodes(self):
        # Roots of L_3'(x) = (15x^2 - 3)/2 are +-1/sqrt(5).
        b = gll_basis(4)
        r = 1.0 / np.sqrt(5.0)
        np.testing.assert_allclose(b.points, [-1.0, -r, r, 1.0], atol=1e-15)

    def test_lx8_integrates_degree_12(self):
        b = gll_basis(8)
        quad = float(np.sum(b.weights * b.points**12))
        assert abs(quad - 2.0 / 13.0) <= 1e-12

    def test_range_errors(self):
        for bad in (1, 0, -3, 17, 40):
            with pytest.raises(RangeError):
                gll_basis(bad)


class TestGllBasisInvariants:
    @pytest.mark.parametrize("lx", ALL_LX)
    def test_endpoints_exact_and_increasing(self, lx):
        b = gll_basis(lx)
        assert b.order == lx - 1
        assert b.points[0] == -1.0
        assert b.points[-1] == 1.0
        assert np.all(np.diff(b.points) > 0)

    @pytest.mark.parametrize("lx", ALL_LX)
    def test_antisymmetry(self, lx):
        b = gll_basis(lx)
        np.testing.assert_allclose(b.points, -b.points[::-1], atol=1e-14)

    @pytest.mark.parametrize("lx", ALL_LX)
    def test_weights_symmetric_positive_sum_two(self, lx):
        b = gll_basis(lx)
        assert np.all(b.weights > 0)
        np.testing.assert_allclose(b.weights, b.weights[::-1], atol=1e-14)
        assert abs(float(np.sum(b.weights)) - 2.0) <= 1e-13

    @pytest.mark.parametrize("lx", ALL_LX)
    def test_deriv_row_sums_vanish(self, lx):
        b = gll_basis(lx)
        assert np.max(np.abs(b.deriv.sum(axis=1))) <= 1e-12

    @pytest.mark.parametrize("lx", ALL_LX)
    def test_quadrature_exact_to_degree_2n_minus_1(self, lx):
        b = gll_basis(lx)
        for m in range(0, 2 * (lx - 1)):
            quad = float(np.sum(b.weights * b.points**m))
            exact = 0.0 if m % 2 == 1 else 2.0 / (m + 1)
            assert abs(quad - exact) <= 1e-12, f"degree {m}"

    @pytest.mark.parametrize("lx", ALL_LX)
    def test_deriv_differentiates_monomials(self, lx):
        b = gll_basis(lx)
        for m in range(lx):
            expect = m * b.points ** (m - 1) if m > 0 else np.zeros(lx)
            got = b.deriv @ (b.points**m)
            assert np.max(np.abs(got - expect)) <= 1e-11, f"degree {m}"

    def test_deterministic(self):
        a, b = gll_basis(9), gll_basis(9)
        np.testing.assert_array_equal(a.points, b.points)
        np.testing.assert_array_equal(a.weights, b.weights)
        np.testing.assert_array_equal(a.deriv, b.deriv)

    def test_arrays_are_immutable(self):
        b = gll_basis(5)
        with pytest.raises(ValueError):
            b.points[0] = 0.0
