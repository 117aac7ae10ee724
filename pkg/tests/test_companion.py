import numpy as np
import pytest
from hypothesis import given, strategies as st

from linequiv.algebra import MatrixPolynomial as MP, random_matrix, random_poly, random_well_conditioned
from linequiv.companion import (CompanionCase, CompanionSpec, bidiagonal_W, companion_embed, companion_linearize,
                                companion_matrix)
from linequiv.equivalence import verify_certificate
from linequiv.errors import DegreeTooHigh, DimensionMismatch, SingularLeadingCoefficient
from linequiv.pipeline import through_pencil
from linequiv.spectra import compare_spectra, det_poly_roots, eig_dense, lhs_oracle, spectral_check

from conftest import rel

seeds = st.integers(0, 2**31)


def lead_poly(rng, m, d):
    return MP.from_coeffs([random_matrix(rng, m, m) for _ in range(d)] + [random_well_conditioned(rng, m)])


def test_pencil_example_display():
    rng = np.random.default_rng(0)
    A, B = random_well_conditioned(rng, 2), random_matrix(rng, 2, 2)
    res, c = companion_linearize(CompanionSpec(MP.from_coeffs([B, A]), 1))
    Ai, I = np.linalg.inv(A), np.eye(2)
    assert np.allclose(res.T, -Ai @ B)
    assert res.case is CompanionCase.LTop and np.allclose(res.extra_block, A)
    for lam in (0.7 + 0.2j, -1.3j, 1.9):
        E = np.block([[I + B @ Ai / lam, B / lam], [Ai, I]])
        F = np.block([[Ai @ B + lam * I, Ai @ B], [I, I]])
        assert np.allclose(c.E(lam), E) and np.allclose(c.F(lam), F)
        lhs = np.block([[A * lam + B, np.zeros((2, 2))], [np.zeros((2, 2)), -lam * I]])
        mid = np.block([[A, np.zeros((2, 2))], [np.zeros((2, 2)), res.T - lam * I]])
        assert rel(lhs, E @ mid @ F) < 1e-10
    assert verify_certificate(c, tol=1e-10).passed


def test_scalar_quadratic():
    res, c = companion_linearize(CompanionSpec(MP.from_coeffs([[[-1.0]], [[0.0]], [[1.0]]]), 0))
    assert np.allclose(res.T, [[0, 1], [1, 0]])
    assert np.allclose(sorted(eig_dense(res.T).real), [-1, 1])
    assert c.excluded.points == ()


def test_cubic_l1_spectrum():
    P = lead_poly(np.random.default_rng(1), 3, 3)
    res, c = companion_linearize(CompanionSpec(P, 1))
    assert verify_certificate(c).passed
    assert res.T.shape == (9, 9)
    rep = spectral_check(c)
    assert rep.passed and len(rep.pairing) == 9


def test_l_cases_share_T_but_not_factors():
    P = lead_poly(np.random.default_rng(2), 2, 3)
    r0, c0 = companion_linearize(CompanionSpec(P, 0))
    r2, c2 = companion_linearize(CompanionSpec(P, 2))
    assert np.array_equal(r0.T, r2.T)
    assert not np.allclose(c0.E(1.0), c2.E(1.0))
    assert verify_certificate(c0).passed and verify_certificate(c2).passed
    assert c0.excluded.points == () and c2.excluded.points == (0j,)


def test_spec_checks():
    with pytest.raises(SingularLeadingCoefficient):
        companion_linearize(CompanionSpec(MP.from_coeffs([np.eye(2), np.diag([1.0, 0.0])]), 0))
    with pytest.raises(DimensionMismatch):
        CompanionSpec(MP.identity(2))
    with pytest.raises(ValueError):
        CompanionSpec(lead_poly(np.random.default_rng(0), 2, 2), 3)


def test_embed_decouples():
    rng = np.random.default_rng(3)
    P = lead_poly(rng, 2, 2)
    spec = CompanionSpec(P, 0)
    Z = MP.identity(1)
    c = companion_embed(spec, MP.zeros(1, 2), MP.zeros(2, 1), Z)
    res, inner = companion_linearize(spec)
    lam = 0.5 + 0.5j
    R = c.rhs.eval(lam)
    assert np.allclose(R[:4, :4], res.T - lam * np.eye(4))
    assert np.allclose(R[4:, :4], 0) and np.allclose(R[:4, 4:], 0) and np.allclose(R[4:, 4:], 1)


def test_embed_d2_l1_dims_2_1():
    rng = np.random.default_rng(4)
    spec = CompanionSpec(lead_poly(rng, 2, 2), 1)
    c = companion_embed(spec, random_poly(rng, 1, 2, 1), random_poly(rng, 2, 1, 2), lead_poly(rng, 1, 1))
    assert verify_certificate(c, tol=1e-9).passed
    assert spectral_check(through_pencil(c)).passed


def test_embed_l_top_constant_X():
    rng = np.random.default_rng(5)
    spec = CompanionSpec(lead_poly(rng, 2, 2), 2)
    X = MP.const(random_matrix(rng, 2, 1))
    c = companion_embed(spec, random_poly(rng, 1, 2, 1), X, lead_poly(rng, 1, 1))
    assert verify_certificate(c).passed


def test_embed_degree_check():
    rng = np.random.default_rng(6)
    spec = CompanionSpec(lead_poly(rng, 2, 2), 0)
    with pytest.raises(DegreeTooHigh):
        companion_embed(spec, random_poly(rng, 1, 2, 2), random_poly(rng, 2, 1, 1), MP.identity(1))


@given(seeds, st.integers(1, 4), st.integers(1, 3))
def test_T_independent_of_l(seed, d, m):
    P = lead_poly(np.random.default_rng(seed), m, d)
    Ts = [companion_linearize(CompanionSpec(P, l))[0].T for l in range(d + 1)]
    assert all(np.array_equal(Ts[0], T) for T in Ts[1:])


@given(seeds, st.integers(1, 3), st.integers(1, 3))
def test_eigenvalue_count(seed, d, m):
    P = lead_poly(np.random.default_rng(seed), m, d)
    res, c = companion_linearize(CompanionSpec(P, 0))
    assert len(eig_dense(res.T)) == d * m
    roots = det_poly_roots(c.lhs)
    assert len(roots) == d * m
    assert compare_spectra(eig_dense(res.T), roots).passed


@pytest.mark.parametrize("l", [1, 2, 3])
def test_W_vanishes_at_zero_with_order_l(l):
    m = 2
    W = bidiagonal_W(m, 4, l)
    a, b = abs(np.linalg.det(W(1e-2))), abs(np.linalg.det(W(1e-3)))
    slope = np.log10(a / b)
    assert abs(slope - l * m) < 1e-6


@given(seeds, st.integers(1, 3))
def test_negative_power_identity(seed, l):
    rng = np.random.default_rng(seed)
    m = 2
    Pt = [random_matrix(rng, m, m) for _ in range(l)]
    lam = complex(*rng.uniform(0.3, 2.0, 2))
    lhs = sum(Pt[k] / lam ** (l - k) for k in range(l))
    row = np.hstack([Pt[l - 1 - c] for c in range(l)])
    B = bidiagonal_W(m, l + 1, l)(lam)
    e1 = np.vstack([np.eye(m)] + [np.zeros((m, m))] * (l - 1))
    assert rel(lhs, -row @ np.linalg.solve(B, e1)) < 1e-12


def test_companion_matrix_layout():
    P = lead_poly(np.random.default_rng(7), 2, 3)
    T = companion_matrix(CompanionSpec(P, 0))
    Li = np.linalg.inv(P.lead)
    assert np.allclose(T[:2, :2], -Li @ P.coeff(2)) and np.allclose(T[:2, 4:], -Li @ P.coeff(0))
    assert np.allclose(T[2:4, :2], np.eye(2)) and np.allclose(T[4:, 2:4], np.eye(2))
    assert np.allclose(T[2:, 4:], 0)
