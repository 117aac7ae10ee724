import numpy as np
import pytest
from hypothesis import given, strategies as st

from linequiv.algebra import MatrixPolynomial as MP, poly_block, random_poly
from linequiv.blocklin import BlockPolySpec, block_companion, block_layout, block_T, degree_pad
from linequiv.companion import CompanionSpec, companion_linearize
from linequiv.equivalence import verify_certificate
from linequiv.errors import DiagonalDegreeViolation, SingularLeadingCoefficient
from linequiv.instances import block_spec, random_block_poly
from linequiv.spectra import compare_spectra, det_poly_roots, eig_dense, spectral_check

seeds = st.integers(0, 2**31)


def test_single_column_is_companion():
    grid = random_block_poly(np.random.default_rng(0), (2,), (3,))
    res, c = block_companion(BlockPolySpec(grid, (1,)))
    ref, _ = companion_linearize(CompanionSpec(grid[0][0], 1))
    assert np.array_equal(res.T, ref.T)
    assert verify_certificate(c).passed


def test_scalar_two_columns_cubic():
    s = lambda *c: MP.from_coeffs([np.array([[x]]) for x in c])
    grid = [[s(2.0, -1.0, 1.0), s(0.5)], [s(1.0, 3.0), s(-1.0, 1.0)]]
    res, c = block_companion(BlockPolySpec(grid))
    assert res.T.shape == (3, 3)
    # det = (lam^2 - lam + 2)(lam - 1) - 0.5 (3 lam + 1)
    cubic = np.polymul([1, -1, 2], [1, -1]) - np.array([0, 0, 1.5, 0.5])
    assert compare_spectra(eig_dense(res.T), np.roots(cubic), tol=1e-10).passed
    assert spectral_check(c).passed


def test_d32_l10():
    spec = BlockPolySpec(random_block_poly(np.random.default_rng(1), (2, 2), (3, 2)), (1, 0))
    res, c = block_companion(spec)
    assert verify_certificate(c, tol=1e-9).passed
    assert spectral_check(c).passed
    assert res.T.shape == (10, 10)


def test_top_index_uses_composition():
    spec = block_spec(np.random.default_rng(2), top=True)
    assert spec.L
    res, c = block_companion(spec)
    assert res.P_d_extra is not None
    assert verify_certificate(c).passed and spectral_check(c).passed


def test_explicit_and_compositional_agree():
    spec = BlockPolySpec(random_block_poly(np.random.default_rng(3), (1, 2), (2, 2)), (1, 0))
    r1, c1 = block_companion(spec, "explicit")
    r2, c2 = block_companion(spec, "compositional")
    assert np.array_equal(r1.T, r2.T)
    assert verify_certificate(c1).passed and verify_certificate(c2).passed
    with pytest.raises(ValueError):
        block_companion(block_spec(np.random.default_rng(0), top=True), "explicit")


def test_preconditions():
    rng = np.random.default_rng(4)
    grid = random_block_poly(rng, (1, 1), (2, 2))
    grid[1][0] = random_poly(rng, 1, 1, 2)
    with pytest.raises(DiagonalDegreeViolation):
        BlockPolySpec(grid)
    grid = random_block_poly(rng, (2, 1), (1, 1))
    grid[0][0] = MP.from_coeffs([np.eye(2), np.diag([1.0, 0.0])])
    with pytest.raises(SingularLeadingCoefficient):
        BlockPolySpec(grid)


def test_off_diagonal_blocks_only_first_row():
    spec = BlockPolySpec(random_block_poly(np.random.default_rng(5), (2, 1, 2), (2, 3, 2)))
    T = block_T(spec)
    layout, slots = block_layout(spec)
    for j in range(3):
        for i in range(3):
            if i == j:
                continue
            for s in slots[j][1:]:
                for t in slots[i]:
                    assert not np.any(T[np.ix_(layout.span(s), layout.span(t))])


def test_degree_pad():
    rng = np.random.default_rng(6)
    one = random_block_poly(rng, (2,), (2,))
    padded, k = degree_pad(one)
    assert k == 0 and padded[0][0] is one[0][0]
    grid = random_block_poly(rng, (1, 2), (2, 1))
    padded, k = degree_pad(grid)
    assert k == 2 and padded[1][1].degree == 2
    roots = det_poly_roots(BlockPolySpec(padded).as_function())
    assert np.sum(np.abs(roots) < 1e-6) == 2


@given(seeds)
def test_dimension_count(seed):
    spec = block_spec(np.random.default_rng(seed))
    res, _ = block_companion(spec)
    n = sum(d * m for d, m in zip(spec.d, spec.dims))
    assert res.T.shape == (n, n) and len(eig_dense(res.T)) == n


@given(seeds)
def test_column_swap_gives_similar_T(seed):
    rng = np.random.default_rng(seed)
    grid = random_block_poly(rng, (1, 2), (2, 1))
    swapped = [[grid[1][1], grid[1][0]], [grid[0][1], grid[0][0]]]
    a = eig_dense(block_companion(BlockPolySpec(grid))[0].T)
    b = eig_dense(block_companion(BlockPolySpec(swapped))[0].T)
    assert compare_spectra(a, b, tol=1e-8).passed


@given(seeds, st.integers(0, 2))
def test_flattened_problem_agrees(seed, l):
    rng = np.random.default_rng(seed)
    grid = random_block_poly(rng, (1, 2), (2, 2))
    flat = poly_block(grid)
    try:
        ref = companion_linearize(CompanionSpec(flat, l))[0].T
    except SingularLeadingCoefficient:
        return
    T = block_companion(BlockPolySpec(grid, (l, l)))[0].T
    assert compare_spectra(eig_dense(T), eig_dense(ref), tol=1e-6).passed


@given(seeds)
def test_W_order_at_zero(seed):
    spec = block_spec(np.random.default_rng(seed))
    res, _ = block_companion(spec)
    a, b = abs(np.linalg.det(res.W(1e-2))), abs(np.linalg.det(res.W(1e-3)))
    expected = sum(l * m for l, m in zip(spec.l, spec.dims))
    assert abs(np.log10(a / b) - expected) < 1e-6
