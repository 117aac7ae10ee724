import numpy as np
import pytest
from hypothesis import given, strategies as st

from linequiv.algebra import (NEG_INF, MatrixPolynomial as MP, mat_inv, naive_eval, poly_block, poly_eval,
                              poly_left_divide, poly_mul, poly_trim, random_poly, random_well_conditioned)
from linequiv.errors import DimensionMismatch, NumericallySingular, SingularLeadingCoefficient

from conftest import rel

seeds = st.integers(0, 2**32 - 1)


def test_eval_zero_and_constant():
    assert np.array_equal(poly_eval(MP.zeros(2, 3), 3.0), np.zeros((2, 3)))
    assert np.allclose(poly_eval(MP.identity(2), 7 + 2j), np.eye(2))


def test_eval_pencil_by_hand():
    A = np.eye(2)
    B = np.array([[0, 1], [1, 0]])
    assert np.allclose(poly_eval(MP.from_coeffs([B, A]), 2.0), [[2, 1], [1, 2]])


def test_zero_degree_is_neg_inf():
    assert MP.zeros(2, 2).degree == NEG_INF
    assert MP.from_coeffs([np.eye(2), np.zeros((2, 2))]).degree == 0


def test_mul_examples():
    Q = MP.from_coeffs([np.eye(2), np.ones((2, 2))])
    assert poly_mul(MP.zeros(2, 2), Q).is_zero
    p = poly_mul(MP.from_coeffs([[[1.0]], [[1.0]]]), MP.from_coeffs([[[-1.0]], [[1.0]]]))
    assert np.allclose(p.coeffs[:, 0, 0], [-1, 0, 1])


def test_mul_dimension_check():
    with pytest.raises(DimensionMismatch):
        poly_mul(MP.zeros(2, 3), MP.zeros(2, 2))


def test_left_divide_low_degree():
    rng = np.random.default_rng(0)
    N = random_poly(rng, 2, 2, 1)
    K, R = poly_left_divide(N, random_poly(rng, 2, 2, 3))
    assert K.is_zero and R.allclose(N, 0.0)


def test_left_divide_pencil_quotient():
    rng = np.random.default_rng(1)
    A = random_well_conditioned(rng, 2)
    D, Dh = rng.standard_normal((2, 2, 2))
    K, R = poly_left_divide(MP.from_coeffs([Dh, D]), MP.from_coeffs([np.zeros((2, 2)), A]))
    assert K.degree == 0
    assert np.allclose(K.coeff(0), D @ np.linalg.inv(A))
    assert np.allclose(R.coeff(0), Dh)


def test_left_divide_singular_lead():
    with pytest.raises(SingularLeadingCoefficient):
        poly_left_divide(MP.identity(2), MP.from_coeffs([np.eye(2), np.diag([1.0, 0.0])]))


def test_mat_inv_examples():
    assert np.allclose(mat_inv(np.eye(3)), np.eye(3))
    assert np.allclose(mat_inv(np.diag([2.0, 4.0])), np.diag([0.5, 0.25]))
    with pytest.raises(NumericallySingular):
        mat_inv(np.ones((2, 2)))


def test_trim_examples():
    A = np.arange(4.0).reshape(2, 2) + 1
    assert poly_trim(MP(np.stack([A, np.zeros((2, 2))]), 2, 2)).degree == 0
    assert poly_trim(MP(np.stack([A, 1e-16 * np.eye(2)]), 2, 2)).degree == 0
    Z = MP.zeros(2, 2)
    assert poly_trim(poly_trim(Z)).is_zero


def test_block_assembly():
    P = poly_block([[MP.identity(1), MP.zeros(1, 2)], [MP.zeros(2, 1), MP.monomial(np.eye(2), 2)]])
    assert P.shape == (3, 3) and P.degree == 2
    assert np.allclose(P(2.0), np.diag([1, 4, 4]))


@given(seeds, st.integers(0, 6), st.integers(1, 6), st.integers(1, 6))
def test_horner_matches_power_sum(seed, deg, r, c):
    rng = np.random.default_rng(seed)
    P = random_poly(rng, r, c, deg)
    lam = complex(*rng.uniform(-2, 2, 2))
    assert rel(poly_eval(P, lam), naive_eval(P, lam)) <= 1e-12


@given(seeds, st.integers(0, 5), st.integers(1, 3), st.integers(1, 4))
def test_division_reconstructs(seed, dn, dd, m):
    rng = np.random.default_rng(seed)
    N = random_poly(rng, m + 1, m, dn)
    Dv = MP.from_coeffs([rng.standard_normal((m, m)) for _ in range(dd)] + [random_well_conditioned(rng, m)])
    K, R = poly_left_divide(N, Dv)
    back = poly_mul(K, Dv) + R
    diff = max(np.abs(back.coeff(k) - N.coeff(k)).max() for k in range(max(dn, dd) + 1))
    assert diff <= 1e-10 * max(1.0, N.scale())
    assert R.is_zero or R.degree < Dv.degree


@given(seeds)
def test_mul_associative(seed):
    rng = np.random.default_rng(seed)
    P, Q, S = (random_poly(rng, 2, 2, int(rng.integers(0, 4))) for _ in range(3))
    a = poly_mul(poly_mul(P, Q), S)
    b = poly_mul(P, poly_mul(Q, S))
    lam = complex(*rng.uniform(-1.5, 1.5, 2))
    assert rel(a(lam), b(lam)) <= 1e-10


@given(seeds, st.integers(0, 5), st.floats(0, 1e-6))
def test_trim_idempotent(seed, deg, tol):
    rng = np.random.default_rng(seed)
    c = [rng.standard_normal((2, 2)) for _ in range(deg + 1)] + [tol * rng.standard_normal((2, 2))]
    P = MP.from_coeffs(c)
    t = poly_trim(P, 1e-7)
    assert poly_trim(t, 1e-7).coeffs.shape == t.coeffs.shape
    assert t.is_zero or t.degree <= P.degree
