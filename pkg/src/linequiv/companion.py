"""Companion linearization of a matrix polynomial with a distinguished index l.

For l < d the polynomial extended by W(lam) is equivalent to T - lam; for
l = d the pencil itself has to be extended by the constant P_d.  The pencil T
is the same for every l; only E, F and W change.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from . import expr as X_
from .algebra import MatrixPolynomial, mat_inv, poly_block
from .blockfun import (EMPTY, ZERO_POINT, BlockOperatorFunction, PolyEntry, zero_entry)
from .equivalence import EquivalenceCertificate, embed_corner
from .errors import DegreeTooHigh, DimensionMismatch, NumericallySingular, SingularLeadingCoefficient


class CompanionCase(Enum):
    LZero = "l=0"
    LMiddle = "0<l<d"
    LTop = "l=d"


def invert_lead(M: np.ndarray, what: str = "leading coefficient") -> np.ndarray:
    try:
        return mat_inv(M)
    except NumericallySingular as e:
        raise SingularLeadingCoefficient(f"{what} is not invertible: {e}") from None


@dataclass(frozen=True, eq=False)
class CompanionSpec:
    P: MatrixPolynomial
    l: int = 0

    def __post_init__(self):
        if self.P.rows != self.P.cols:
            raise DimensionMismatch("companion form needs a square polynomial")
        if self.P.is_zero or self.P.degree < 1:
            raise DimensionMismatch("companion form needs degree >= 1")
        if not 0 <= self.l <= self.P.degree:
            raise ValueError(f"l must lie in 0..{self.P.degree}")

    @property
    def d(self) -> int:
        return self.P.degree

    @property
    def m(self) -> int:
        return self.P.rows

    @cached_property
    def lead_inv(self) -> np.ndarray:
        return invert_lead(self.P.lead)

    @cached_property
    def normalized(self) -> list[np.ndarray]:
        """P_d^{-1} P_i for i < d, then I."""
        out = [self.lead_inv @ self.P.coeff(i) for i in range(self.d)]
        return out + [np.eye(self.m, dtype=complex)]

    @property
    def case(self) -> CompanionCase:
        if self.l == 0:
            return CompanionCase.LZero
        return CompanionCase.LTop if self.l == self.d else CompanionCase.LMiddle


@dataclass(eq=False)
class CompanionResult:
    T: np.ndarray
    W: X_.Node
    case: CompanionCase
    extra_block: np.ndarray | None
    block_dims: list[int]


def companion_matrix(spec: CompanionSpec) -> np.ndarray:
    d, m = spec.d, spec.m
    T = np.zeros((d * m, d * m), complex)
    for c in range(d):
        T[:m, c * m:(c + 1) * m] = -spec.normalized[d - 1 - c]
    for r in range(1, d):
        T[r * m:(r + 1) * m, (r - 1) * m:r * m] = np.eye(m)
    return T


def bidiagonal_W(m: int, d: int, l: int) -> X_.Node:
    """diag(I on H^{d-1-l}, lower bidiagonal with -lam diagonal and I below, l blocks)."""
    nid = max(d - 1 - l, 0)
    k = nid + l
    grid = [[None] * k for _ in range(k)]
    for r in range(nid):
        grid[r][r] = X_.eye(m)
    for r in range(l):
        grid[nid + r][nid + r] = X_.lam_pow(1, m, -1.0)
        if r > 0:
            grid[nid + r][nid + r - 1] = X_.eye(m)
    return X_.block(grid, [m] * k, [m] * k)


# shared row builders (also used for the block companion)


def alpha_row(coeffs: list[np.ndarray], d: int, l: int) -> list[X_.Node]:
    """Entries c = 0..d-l-1 equal to -sum_{k=0}^{c} lam^k C_{d-c+k}.

    With C_d = P_d this is the first row of E_alpha; with C_d = 0 it is the
    side row built from a lower-degree polynomial.
    """
    out = []
    for c in range(d - l):
        P = MatrixPolynomial.from_coeffs([-coeffs[d - c + k] for k in range(c + 1)])
        out.append(X_.poly(P))
    return out


def beta_row(coeffs: list[np.ndarray], l: int) -> list[X_.Node]:
    """Entries c = 0..l-1 equal to sum_{k=0}^{l-c-1} C_k / lam^{l-c-k}."""
    out = []
    for c in range(l):
        e = l - c
        P = MatrixPolynomial.from_coeffs([coeffs[k] for k in range(e)])
        rows, cols = P.shape
        out.append(X_.mul(X_.lam_pow(-e, rows), X_.poly(P)))
    return out


def _pow_col(m: int, top: int, count: int) -> list[X_.Node]:
    """lam^top, lam^(top-1), ... (count entries) times I_m."""
    return [X_.lam_pow(top - r, m) for r in range(count)]


def _coeffs(P: MatrixPolynomial, d: int) -> list[np.ndarray]:
    return [P.coeff(i) for i in range(d + 1)]


def companion_factors(spec: CompanionSpec):
    """E(lam), F(lam) with P + W = E (rhs) F."""
    d, l, m = spec.d, spec.l, spec.m
    P = spec.P
    cs = _coeffs(P, d)
    I = lambda: X_.eye(m)
    if l < d:
        na = d - l
        Ea = [[None] * na for _ in range(na)]
        Ea[0] = alpha_row(cs, d, l)
        for r in range(1, na):
            for c in range(r, na):
                Ea[r][c] = X_.lam_pow(c - r, m)
        Fa = [[None] * na for _ in range(na)]
        for r, node in enumerate(_pow_col(m, d - 1, na)):
            Fa[r][0] = node
        for r in range(na - 1):
            Fa[r][r + 1] = I()
        if l == 0:
            return X_.block(Ea, [m] * na, [m] * na), X_.block(Fa, [m] * na, [m] * na)
        Eg = [row + [None] * l for row in Ea] + [[None] * (na + l) for _ in range(l)]
        Eg[0][na:] = beta_row(cs, l)
        for r in range(l):
            Eg[na + r][na + r] = I()
        Fg = [row + [None] * l for row in Fa] + [[None] * (na + l) for _ in range(l)]
        for r, node in enumerate(_pow_col(m, l - 1, l)):
            Fg[na + r][0] = node
        for r in range(l):
            Fg[na + r][na + r] = I()
        return X_.block(Eg, [m] * d, [m] * d), X_.block(Fg, [m] * d, [m] * d)
    # l == d
    Pd_inv = spec.lead_inv
    k = d + 1
    Eg = [[None] * k for _ in range(k)]
    Eg[0][0] = X_.mul(X_.lam_pow(-d, m), X_.poly(P), X_.const(Pd_inv))
    Eg[0][1:] = beta_row(cs, d)
    Eg[1][0] = X_.const(Pd_inv)
    for r in range(1, k):
        Eg[r][r] = I()
    Fg = [[None] * k for _ in range(k)]
    Fg[0][0] = X_.poly(MatrixPolynomial.from_coeffs(spec.normalized))
    for c in range(d):
        Fg[0][1 + c] = X_.const(spec.normalized[d - 1 - c])
    for r, node in enumerate(_pow_col(m, d - 1, d)):
        Fg[1 + r][0] = node
    for r in range(1, k):
        Fg[r][r] = I()
    return X_.block(Eg, [m] * k, [m] * k), X_.block(Fg, [m] * k, [m] * k)


def companion_linearize(spec: CompanionSpec):
    d, l, m = spec.d, spec.l, spec.m
    T = companion_matrix(spec)
    W = bidiagonal_W(m, d, l)
    E, F = companion_factors(spec)
    lhs = BlockOperatorFunction.single(PolyEntry(spec.P))
    rhs = BlockOperatorFunction.pencil(T, [m] * d)
    excluded = EMPTY if l == 0 else ZERO_POINT
    extra = None
    if spec.case is CompanionCase.LTop:
        extra = spec.P.lead.copy()
        order = np.concatenate([d * m + np.arange(m), np.arange(d * m)])
        cert = EquivalenceCertificate(lhs, rhs, W, X_.const(extra), E, F, excluded,
                                      rhs_rows=order, rhs_cols=order, label=f"companion(l={l})")
    else:
        cert = EquivalenceCertificate(lhs, rhs, W, None, E, F, excluded, label=f"companion(l={l})")
    return CompanionResult(T, W, spec.case, extra, [m] * d), cert


def _as_grid(x, rows=None, cols=None) -> BlockOperatorFunction:
    if isinstance(x, BlockOperatorFunction):
        return x
    if isinstance(x, MatrixPolynomial):
        return BlockOperatorFunction.single(PolyEntry(x))
    return BlockOperatorFunction.single(x)


def _grid_poly(G: BlockOperatorFunction) -> MatrixPolynomial:
    rows = []
    for row in G.entries:
        r = []
        for e in row:
            if e.kind == "polynomial":
                r.append(e.P)
            elif e.kind == "product":
                r.append(e.expand())
            else:
                raise TypeError(f"{e.kind} entry where a polynomial is required")
        rows.append(r)
    return poly_block(rows)


def companion_embed(spec: CompanionSpec, Q, Xb, Zb) -> EquivalenceCertificate:
    """[P X; Q Z] + W ~ [T-lam, -P_d^{-1}X e_1; Q_{d-1} .. Q_0, Z] (P_d + ... when l = d)."""
    Q, Xb, Zb = _as_grid(Q), _as_grid(Xb), _as_grid(Zb)
    d, l, m = spec.d, spec.l, spec.m
    if Q.col_dims != (m,) or Xb.row_dims != (m,):
        raise DimensionMismatch("Q must be a block column and X a block row over H")
    for row in Q.entries:
        e = row[0]
        deg = e.P.degree if e.kind == "polynomial" else (e.expand().degree if e.kind == "product" else None)
        if deg is None:
            raise TypeError("Q entries must be polynomial")
        if deg >= d:
            raise DegreeTooHigh(f"deg Q = {deg} >= d = {d}")
    res, inner = companion_linearize(spec)
    Qp = _grid_poly(Q)
    zr = Qp.rows
    qc = _coeffs(Qp, d)  # qc[d] is zero
    Pd_inv = spec.lead_inv

    if l < d:
        row = alpha_row(qc, d, l) + beta_row(qc, l)
        side_E = X_.block([row], [zr], [m] * d)
        side_F = None
    else:
        first = X_.mul(X_.lam_pow(-d, zr), X_.poly(Qp), X_.const(Pd_inv))
        side_E = X_.block([[first] + beta_row(qc, d)], [zr], [m] * (d + 1))
        x_poly = _grid_poly(Xb)
        top = X_.mul(X_.const(Pd_inv), X_.poly(x_poly))
        side_F = X_.block([[top], [X_.zeros(d * m, x_poly.cols)]], [m, d * m], [x_poly.cols])

    # closed-form corners; a non-polynomial X keeps the generic expression
    rhs_X = None
    if all(e.kind in ("polynomial", "product") for e in Xb.entries[0]):
        top_row = [PolyEntry(-Pd_inv @ (e.P if e.kind == "polynomial" else e.expand()))
                   for e in Xb.entries[0]]
        rhs_X = BlockOperatorFunction(
            [top_row] + [[zero_entry(m, c) for c in Zb.col_dims] for _ in range(d - 1)],
            [m] * d, Zb.col_dims)
    ro = np.concatenate([[0], np.cumsum(Q.row_dims)]).astype(int)
    rhs_Y = BlockOperatorFunction(
        [[PolyEntry(MatrixPolynomial.const(qc[d - 1 - c][ro[a]:ro[a + 1]])) for c in range(d)]
         for a in range(len(Q.row_dims))], Q.row_dims, [m] * d)
    return embed_corner(inner, Xb, Q, Zb, side_E, side_F, rhs_X=rhs_X, rhs_Y=rhs_Y,
                        extra_excluded=inner.excluded, label=f"companion-embed(l={l})")

