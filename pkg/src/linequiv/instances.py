"""Worked instances with closed forms, and seeded random families for sweeps.

The closed forms here are written out by hand from the block structure of
each instance; tests compare them against what the constructions produce.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import MatrixPolynomial, random_matrix, random_poly, random_well_conditioned
from .blockfun import BlockOperatorFunction, PolyEntry, ProductEntry, SchurEntry
from .reduction import random_dominant_grid, random_grid

MP = MatrixPolynomial

# block mask of the final pencil of the four-stage example (7 x 7 blocks)
FOUR_STAGE_MASK = np.array([
    [1, 0, 0, 0, 0, 1, 1],
    [1, 1, 1, 1, 0, 0, 0],
    [0, 1, 0, 0, 0, 0, 0],
    [0, 0, 1, 0, 0, 0, 0],
    [0, 0, 1, 0, 1, 1, 0],
    [0, 1, 1, 1, 1, 1, 0],
    [0, 0, 0, 0, 0, 1, 0],
])


# three-column reduction example


@dataclass
class ThreeColumn:
    """lam A, B, lam C / lam D + Dh, lam G, lam^2 H + Hh / J, 0, lam L."""
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    Dh: np.ndarray
    G: np.ndarray
    H: np.ndarray
    Hh: np.ndarray
    J: np.ndarray
    L: np.ndarray

    @staticmethod
    def random(rng: np.random.Generator, m: int = 2) -> "ThreeColumn":
        A = random_well_conditioned(rng, m)
        rest = [random_matrix(rng, m, m) for _ in range(8)]
        L = random_well_conditioned(rng, m)
        return ThreeColumn(A, *rest, L)

    def grid(self) -> list[list[MatrixPolynomial]]:
        z = np.zeros_like(self.A)
        return [[MP.from_coeffs([z, self.A]), MP.const(self.B), MP.from_coeffs([z, self.C])],
                [MP.from_coeffs([self.Dh, self.D]), MP.from_coeffs([z, self.G]),
                 MP.from_coeffs([self.Hh, z, self.H])],
                [MP.const(self.J), MP.zeros(*self.A.shape), MP.from_coeffs([z, self.L])]]

    def E(self) -> MatrixPolynomial:
        """The reducing factor in closed form."""
        m = self.A.shape[0]
        I, Z = np.eye(m), np.zeros((m, m))
        Ai, Li = np.linalg.inv(self.A), np.linalg.inv(self.L)
        S = (self.D - self.H @ Li @ self.J) @ Ai
        c0 = np.block([[I, Z, -self.C @ Li], [-S, I, S @ self.C @ Li], [Z, Z, I]])
        c1 = np.block([[Z, Z, Z], [Z, Z, -self.H @ Li], [Z, Z, Z]])
        return MP.from_coeffs([c0, c1])

    def reduced(self) -> MatrixPolynomial:
        m = self.A.shape[0]
        Z = np.zeros((m, m))
        Ai, Li = np.linalg.inv(self.A), np.linalg.inv(self.L)
        S = (self.D - self.H @ Li @ self.J) @ Ai
        c0 = np.block([[-self.C @ Li @ self.J, self.B, Z],
                       [self.Dh + S @ self.C @ Li @ self.J, -S @ self.B, self.Hh],
                       [self.J, Z, Z]])
        c1 = np.block([[self.A, Z, Z], [Z, self.G, Z], [Z, Z, self.L]])
        return MP.from_coeffs([c0, c1])


# four-stage example: product, Schur complement, one reduction step, block companion


@dataclass
class FourStage:
    M: np.ndarray
    N: list            # N0..N3
    P: list            # P0, P1
    A: np.ndarray
    B: np.ndarray
    C: list            # C0..C2
    D: list            # D0..D2
    Q: np.ndarray

    @staticmethod
    def random(rng: np.random.Generator, h: int = 2, k: int = 2) -> "FourStage":
        M = random_matrix(rng, h, h)
        N = [random_matrix(rng, h, h) for _ in range(3)] + [random_well_conditioned(rng, h)]
        P = [random_matrix(rng, h, k) for _ in range(2)]
        A = random_matrix(rng, k, h)
        B = random_matrix(rng, k, k)
        C = [random_matrix(rng, k, h) for _ in range(3)]
        while True:
            D = [random_matrix(rng, k, k) for _ in range(3)]
            Q = random_matrix(rng, k, k)
            if np.linalg.cond(D[2] @ Q) < 1e3:
                return FourStage(M, N, P, A, B, C, D, Q)

    @property
    def dims(self) -> tuple[int, int]:
        return self.M.shape[0], self.B.shape[0]

    def function(self) -> BlockOperatorFunction:
        h, k = self.dims
        Ih, Ik = np.eye(h), np.eye(k)
        zk = np.zeros((k, k))
        prod = ProductEntry((MP.from_coeffs([self.M, -Ih]), MP.from_coeffs(self.N)))
        schur = SchurEntry(MP.from_coeffs([np.zeros((k, h)), self.A]), MP.from_coeffs([self.B, -Ik]),
                           MP.from_coeffs(self.C), MP.from_coeffs(self.D))
        return BlockOperatorFunction([[prod, PolyEntry(MP.from_coeffs(self.P))],
                                      [schur, PolyEntry(MP.from_coeffs([zk, self.Q]))]])

    def T(self) -> np.ndarray:
        """The final pencil matrix in closed form, on the slots H, H^3, K, K^2."""
        h, k = self.dims
        N3i = np.linalg.inv(self.N[3])
        D2Qi = np.linalg.inv(self.D[2] @ self.Q)
        Kc = self.D[1] + self.D[2] @ self.B
        G = self.C[2] + self.D[2] @ self.A
        DB = self.D[2] @ self.B @ self.B + self.D[1] @ self.B + self.D[0]
        Zhh, Zhk, Zkh, Zkk = (np.zeros(s) for s in ((h, h), (h, k), (k, h), (k, k)))
        Ih, Ik = np.eye(h), np.eye(k)
        rows = [
            [self.M, Zhh, Zhh, Zhh, Zhk, self.P[1], self.P[0]],
            [N3i, -N3i @ self.N[2], -N3i @ self.N[1], -N3i @ self.N[0], Zhk, Zhk, Zhk],
            [Zhh, Ih, Zhh, Zhh, Zhk, Zhk, Zhk],
            [Zhh, Zhh, Ih, Zhh, Zhk, Zhk, Zhk],
            [Zkh, Zkh, self.A, Zkh, self.B, self.Q, Zkk],
            [Zkh, -D2Qi @ G, -D2Qi @ (self.C[1] + Kc @ self.A), -D2Qi @ self.C[0], -D2Qi @ DB,
             -D2Qi @ Kc @ self.Q, Zkk],
            [Zkh, Zkh, Zkh, Zkh, Zkk, Ik, Zkk],
        ]
        return np.block(rows)

    def with_singular_N3(self) -> "FourStage":
        N = list(self.N)
        N[3] = np.outer(N[3][:, 0], N[3][0, :])
        return FourStage(self.M, N, self.P, self.A, self.B, self.C, self.D, self.Q)


# random families


def random_grid_function(rng: np.random.Generator, dims, max_degree: int = 3, dominant: bool = False):
    grid = random_dominant_grid(rng, dims, max_degree) if dominant else random_grid(rng, dims, max_degree)
    return BlockOperatorFunction.from_polys(grid)


def random_block_poly(rng: np.random.Generator, dims, d) -> list[list[MatrixPolynomial]]:
    """Grid with diagonal degrees d and lower-degree off-diagonal entries (well-conditioned leads)."""
    n = len(dims)
    grid = []
    for j in range(n):
        row = []
        for i in range(n):
            if i == j:
                cs = [random_matrix(rng, dims[i], dims[i]) for _ in range(d[i])]
                row.append(MP.from_coeffs(cs + [random_well_conditioned(rng, dims[i])]))
            else:
                row.append(random_poly(rng, dims[j], dims[i], int(rng.integers(-1, d[i]))))
        grid.append(row)
    return grid


def planted_diagonal(roots_per_entry) -> BlockOperatorFunction:
    """diag(prod (lam - r)) with scalar entries, for oracle checks."""
    polys = []
    for rs in roots_per_entry:
        p = np.array([1.0 + 0j])
        for r in rs:
            p = np.convolve(p, [-r, 1.0])
        polys.append(MP.from_coeffs([np.array([[c]]) for c in p]))
    n = len(polys)
    return BlockOperatorFunction.from_polys(
        [[polys[i] if i == j else MP.zeros(1, 1) for i in range(n)] for j in range(n)])


# seeded certificate families, one builder per construction


def _poly_grid(rng, rows, cols, max_deg):
    return BlockOperatorFunction.from_polys(
        [[random_poly(rng, r, c, int(rng.integers(0, max_deg + 1))) for c in cols] for r in rows])


def _lead_poly(rng, m, d):
    return MP.from_coeffs([random_matrix(rng, m, m) for _ in range(d)] + [random_well_conditioned(rng, m)])


def schur_plan(rng, m=2, k=2, dD=2):
    from .schur_product import SchurLinearizationPlan
    return SchurLinearizationPlan(random_poly(rng, m, m, 2), random_poly(rng, m, k, 1),
                                  random_poly(rng, k, m, 1), _lead_poly(rng, k, dD))


def product_plan(rng, n=3, dims=(2, 2, 2, 2), max_deg=2):
    from .schur_product import ProductLinearizationPlan
    return ProductLinearizationPlan(tuple(
        MP.from_coeffs([random_matrix(rng, dims[t], dims[t + 1]) for _ in range(int(rng.integers(1, max_deg + 1)))]
                       + [random_matrix(rng, dims[t], dims[t + 1])]) for t in range(n)))


def _corner(rng, rows, cols, zdim=2):
    return (_poly_grid(rng, [rows], [zdim], 1), _poly_grid(rng, [zdim], [cols], 1),
            _poly_grid(rng, [zdim], [zdim], 2))


def fam_schur_extend(rng):
    from .schur_product import schur_extend
    return schur_extend(schur_plan(rng))


def fam_schur_embed(rng):
    from .schur_product import schur_embed
    p = schur_plan(rng)
    return schur_embed(p, *_corner(rng, p.A.rows, p.A.cols))


def fam_product_linearize(rng):
    from .schur_product import product_linearize
    return product_linearize(product_plan(rng))


def fam_product_embed(rng):
    from .schur_product import product_embed
    p = product_plan(rng, n=2, dims=(2, 2, 2))
    return product_embed(p, *_corner(rng, p.factors[0].rows, p.factors[-1].cols))


def companion_cert(rng, d=3, m=2, l=0):
    from .companion import CompanionSpec, companion_linearize
    return companion_linearize(CompanionSpec(_lead_poly(rng, m, d), l))[1]


def fam_companion_embed(rng, d=3, m=2, zdim=2):
    from .companion import CompanionSpec, companion_embed
    spec = CompanionSpec(_lead_poly(rng, m, d), int(rng.integers(0, d + 1)))
    Q = random_poly(rng, zdim, m, d - 1)
    X = random_poly(rng, m, zdim, int(rng.integers(0, d + 1)))
    Z = _lead_poly(rng, zdim, 1)
    return companion_embed(spec, Q, X, Z)


def block_spec(rng, dims=(2, 1, 2), d=(2, 3, 1), top=False):
    from .blocklin import BlockPolySpec
    grid = random_block_poly(rng, dims, d)
    if top:
        l = [int(rng.integers(0, di + 1)) for di in d]
        k = int(rng.integers(0, len(d)))
        l[k] = d[k]
    else:
        l = [int(rng.integers(0, di)) for di in d]
    return BlockPolySpec(grid, tuple(l))


def fam_block_companion(rng):
    from .blocklin import block_companion
    return block_companion(block_spec(rng))[1]


def fam_block_companion_top(rng):
    from .blocklin import block_companion
    return block_companion(block_spec(rng, top=True))[1]


def fam_reduce_same_space(rng):
    from .reduction import column_reduce_same_space, reduction_certificate
    return reduction_certificate(column_reduce_same_space(random_grid(rng, (2, 2, 2, 2), 3))[1])


def fam_reduce_general(rng):
    from .reduction import column_reduce_general, reduction_certificate
    return reduction_certificate(column_reduce_general(random_dominant_grid(rng, (1, 2, 3), 3))[1])


FAMILIES = {
    "schur_extend": fam_schur_extend,
    "schur_embed": fam_schur_embed,
    "product_linearize": fam_product_linearize,
    "product_embed": fam_product_embed,
    **{f"companion l={l}": (lambda rng, l=l: companion_cert(rng, 3, 2, l)) for l in range(4)},
    "companion_embed": fam_companion_embed,
    "block_companion L empty": fam_block_companion,
    "block_companion L nonempty": fam_block_companion_top,
    "column_reduce same-space": fam_reduce_same_space,
    "column_reduce general": fam_reduce_general,
}
