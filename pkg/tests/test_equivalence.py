import numpy as np
import pytest
from hypothesis import given, strategies as st

from linequiv import expr as X
from linequiv.algebra import MatrixPolynomial as MP, random_matrix, random_poly, random_well_conditioned
from linequiv.blockfun import BlockOperatorFunction
from linequiv.companion import CompanionSpec, companion_linearize
from linequiv.equivalence import (compose_certificates, corrupted, embed_corner, identity_certificate,
                                  permutation_certificate, sample_points, verify_certificate)
from linequiv.errors import SideConditionViolated, StructuralMismatch
from linequiv.instances import FAMILIES, companion_cert, schur_plan
from linequiv.schur_product import schur_extend


def _grid(rng, rows, cols, deg=1):
    return BlockOperatorFunction.from_polys([[random_poly(rng, r, c, deg) for c in cols] for r in rows])


def test_identity_certificate_is_exact():
    F = _grid(np.random.default_rng(0), [2, 1], [2, 1])
    rep = verify_certificate(identity_certificate(F))
    assert rep.passed and rep.max_residual == 0.0


def test_pencil_example_certificate():
    for s in range(5):
        rng = np.random.default_rng(s)
        A, B = random_well_conditioned(rng, 3), random_matrix(rng, 3, 3)
        _, c = companion_linearize(CompanionSpec(MP.from_coeffs([B, A]), 1))
        assert verify_certificate(c, tol=1e-10).passed


def test_corrupted_E_fails():
    c = companion_cert(np.random.default_rng(3), 2, 2, 1)
    assert verify_certificate(c).passed
    assert not verify_certificate(corrupted(c, 1e-2)).passed


def test_sampling_is_deterministic_and_avoids_excluded():
    c = schur_extend(schur_plan(np.random.default_rng(4)))
    a, b = verify_certificate(c, rng_seed=7), verify_certificate(c, rng_seed=7)
    assert a.sample_points == b.sample_points and a.factorization_residuals == b.factorization_residuals
    for lam in a.sample_points:
        assert 0.5 <= abs(lam) <= 2.0
        assert not c.excluded.near(lam, 1e-6)
    with pytest.raises(ValueError):
        verify_certificate(c, samples=0)
    pts = sample_points(50, 1)
    assert len(set(pts)) == 50


def test_compose_with_identity():
    c = companion_cert(np.random.default_rng(5), 2, 2, 0)
    both = compose_certificates(identity_certificate(c.lhs), c)
    lam = 0.9 - 0.3j
    assert np.allclose(both.E(lam), c.E(lam)) and np.allclose(both.F(lam), c.F(lam))


def test_compose_mismatch():
    rng = np.random.default_rng(6)
    c1 = companion_cert(rng, 2, 2, 0)
    c2 = companion_cert(rng, 2, 2, 0)
    with pytest.raises(StructuralMismatch):
        compose_certificates(c1, c2)


def test_permutation_certificate():
    F = _grid(np.random.default_rng(7), [1, 2, 3], [3, 1, 2])
    c = permutation_certificate(F, [2, 0, 1], [1, 2, 0])
    assert c.rhs[0, 0] is F[2, 1]
    assert verify_certificate(c).max_residual < 1e-15


def test_embed_trivial_side_pair():
    rng = np.random.default_rng(8)
    inner = companion_cert(rng, 2, 2, 0)
    Xb, Yb, Zb = _grid(rng, [2], [1]), _grid(rng, [1], [2]), _grid(rng, [1], [1])
    c = embed_corner(inner, Xb, Yb, Zb)
    assert verify_certificate(c).passed
    lam = 1.1 + 0.2j
    E, F = inner.E(lam), inner.F(lam)
    T = c.rhs.eval(lam)
    n = inner.rhs.shape[0]
    # upper corner is E^-1 X, lower corner is Y F^-1 (on the main coordinates)
    Xe = np.vstack([Xb.eval(lam), np.zeros((E.shape[0] - 2, 1))])
    assert np.allclose(T[:n, n:], np.linalg.solve(E, Xe)[inner.rhs_rows.argsort()[:n]])


def test_embed_identity_inner_gives_block():
    rng = np.random.default_rng(9)
    S = _grid(rng, [2], [2])
    Xb, Yb, Zb = _grid(rng, [2], [1]), _grid(rng, [1], [2]), _grid(rng, [1], [1])
    c = embed_corner(identity_certificate(S), Xb, Yb, Zb)
    lam = 0.7j + 0.1
    assert np.allclose(c.rhs.eval(lam), c.lhs.eval(lam))


def test_embed_rejects_bad_side_pair():
    rng = np.random.default_rng(10)
    inner = companion_cert(rng, 2, 1, 0)
    Xb, Yb, Zb = _grid(rng, [1], [1]), _grid(rng, [1], [1]), _grid(rng, [1], [1])
    with pytest.raises(SideConditionViolated):
        embed_corner(inner, Xb, Yb, Zb, side_E=X.const(np.ones((1, 2))))


def test_extension_structure():
    c = companion_cert(np.random.default_rng(11), 2, 2, 2)
    assert c.extension_structure == "interleaved"
    assert identity_certificate(c.lhs).extension_structure == "direct"


@given(st.integers(0, 2**31), st.sampled_from(sorted(FAMILIES)))
def test_every_family_verifies(seed, name):
    assert verify_certificate(FAMILIES[name](np.random.default_rng(seed))).passed


@given(st.integers(0, 2**31))
def test_composition_preserves_verification(seed):
    from linequiv.pipeline import through_pencil

    c1 = FAMILIES["schur_extend"](np.random.default_rng(seed))
    both = through_pencil(c1)
    assert verify_certificate(c1).passed
    assert verify_certificate(both, tol=1e-7).passed
