"""Equivalence certificates after operator function extension.

A certificate states  arr(S + W_S) = E . arr(T + W_T) . F  where + is the
block-diagonal sum and arr(.) is a fixed reordering of rows and columns.
The reordering is what lets an extension sit in the middle of a block matrix
instead of at the end; with the identity reordering the structure is the
plain direct sum.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import expr as X_
from .algebra import block_diag, rcond
from .blockfun import (EMPTY, BlockOperatorFunction, ExcludedSet, FunctionEntry, entries_equal)
from .errors import (DimensionMismatch, EvaluationAtExcludedPoint, ExcludedPointUnavoidable,
                     SideConditionViolated, StructuralMismatch)
from .expr import Node

EXCLUDED_RADIUS = 1e-6
MAX_REDRAWS = 100
COND_BOUND = 1e12
ANNULUS = (0.5, 2.0)


def _size(node: Node | None) -> int:
    return 0 if node is None else node.rows


@dataclass(eq=False)
class EquivalenceCertificate:
    lhs: BlockOperatorFunction
    rhs: BlockOperatorFunction
    w_lhs: Node | None
    w_rhs: Node | None
    E: Node
    F: Node
    excluded: ExcludedSet = EMPTY
    lhs_rows: np.ndarray | None = None
    lhs_cols: np.ndarray | None = None
    rhs_rows: np.ndarray | None = None
    rhs_cols: np.ndarray | None = None
    label: str = ""

    def __post_init__(self):
        nl_r = self.lhs.shape[0] + _size(self.w_lhs)
        nl_c = self.lhs.shape[1] + (0 if self.w_lhs is None else self.w_lhs.cols)
        nr_r = self.rhs.shape[0] + _size(self.w_rhs)
        nr_c = self.rhs.shape[1] + (0 if self.w_rhs is None else self.w_rhs.cols)
        if nl_r != nr_r or nl_c != nr_c:
            raise DimensionMismatch(
                f"extended sizes differ: lhs {nl_r}x{nl_c}, rhs {nr_r}x{nr_c}")
        if self.E.shape != (nl_r, nl_r) or self.F.shape != (nl_c, nl_c):
            raise DimensionMismatch(
                f"E {self.E.shape} / F {self.F.shape} do not match extended size {nl_r}x{nl_c}")
        for name, n in (("lhs_rows", nl_r), ("lhs_cols", nl_c), ("rhs_rows", nr_r), ("rhs_cols", nr_c)):
            v = getattr(self, name)
            v = np.arange(n) if v is None else np.asarray(v, dtype=int)
            if v.shape != (n,) or not np.array_equal(np.sort(v), np.arange(n)):
                raise DimensionMismatch(f"{name} is not a permutation of range({n})")
            setattr(self, name, v)

    @property
    def size(self) -> int:
        return self.E.rows

    @property
    def extension_structure(self) -> str:
        ident = all(np.array_equal(getattr(self, k), np.arange(len(getattr(self, k))))
                    for k in ("lhs_rows", "lhs_cols", "rhs_rows", "rhs_cols"))
        return "direct" if ident else "interleaved"

    def lhs_node(self) -> Node:
        return _arranged(X_.Fun(self.lhs), self.w_lhs, self.lhs_rows, self.lhs_cols)

    def rhs_node(self) -> Node:
        return _arranged(X_.Fun(self.rhs), self.w_rhs, self.rhs_rows, self.rhs_cols)

    def residual(self, lam, cache=None) -> tuple[float, float, float]:
        """(relative residual, cond E, cond F) at one point."""
        cache = {} if cache is None else cache
        L = _ext_value(self.lhs, self.w_lhs, self.lhs_rows, self.lhs_cols, lam, cache)
        R = _ext_value(self.rhs, self.w_rhs, self.rhs_rows, self.rhs_cols, lam, cache)
        e = X_.evaluate(self.E, lam, cache)
        f = X_.evaluate(self.F, lam, cache)
        res = np.linalg.norm(L - e @ R @ f) / max(1.0, np.linalg.norm(L))
        return float(res), _cond(e), _cond(f)


def _cond(m: np.ndarray) -> float:
    rc = rcond(m)
    return float("inf") if rc == 0 else 1.0 / rc


def _ext_value(fun, w, rows, cols, lam, cache):
    main = fun.eval(lam)
    full = main if w is None else block_diag(main, X_.evaluate(w, lam, cache))
    return full[np.ix_(rows, cols)]


def _arranged(main: Node, w: Node | None, rows, cols) -> Node:
    full = main if w is None else X_.direct_sum(main, w)
    if np.array_equal(rows, np.arange(len(rows))) and np.array_equal(cols, np.arange(len(cols))):
        return full
    return X_.select(full, rows, cols)


@dataclass
class VerificationReport:
    sample_points: list
    factorization_residuals: list
    E_conditions: list
    F_conditions: list
    max_residual: float
    passed: bool
    tol: float = 1e-8
    seed: int = 0

    def summary(self) -> str:
        return (f"{'PASS' if self.passed else 'FAIL'} max residual {self.max_residual:.3e} "
                f"(tol {self.tol:.1e}) max cond E {max(self.E_conditions, default=0):.2e} "
                f"F {max(self.F_conditions, default=0):.2e} over {len(self.sample_points)} points")


def sample_points(n: int, seed: int, excluded: ExcludedSet = EMPTY, radius: float = EXCLUDED_RADIUS,
                  annulus=ANNULUS, reject=None) -> list[complex]:
    """Area-uniform points in the annulus, redrawn near excluded points."""
    rng = np.random.default_rng(seed)
    r0, r1 = annulus
    out = []
    while len(out) < n:
        for _ in range(MAX_REDRAWS):
            r = np.sqrt(rng.uniform(r0 * r0, r1 * r1))
            lam = complex(r * np.exp(2j * np.pi * rng.uniform()))
            if excluded.near(lam, radius):
                continue
            if reject is not None and reject(lam):
                continue
            out.append(lam)
            break
        else:
            raise ExcludedPointUnavoidable(f"{MAX_REDRAWS} consecutive draws hit excluded points")
    return out


def verify_certificate(c: EquivalenceCertificate, samples: int = 20, tol: float = 1e-8,
                       rng_seed: int = 0, cond_bound: float = COND_BOUND) -> VerificationReport:
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(rng_seed)
    r0, r1 = ANNULUS
    pts, res, ce, cf = [], [], [], []
    while len(pts) < samples:
        for _ in range(MAX_REDRAWS):
            r = np.sqrt(rng.uniform(r0 * r0, r1 * r1))
            lam = complex(r * np.exp(2j * np.pi * rng.uniform()))
            if c.excluded.near(lam, EXCLUDED_RADIUS):
                continue
            try:
                rr, e, f = c.residual(lam)
            except EvaluationAtExcludedPoint:
                continue
            break
        else:
            raise ExcludedPointUnavoidable(f"{MAX_REDRAWS} consecutive draws hit excluded points")
        pts.append(lam)
        res.append(rr)
        ce.append(e)
        cf.append(f)
    mx = max(res)
    ok = bool(mx <= tol and max(ce) <= cond_bound and max(cf) <= cond_bound)
    return VerificationReport(pts, res, ce, cf, float(mx), ok, tol, rng_seed)


# basic certificates


def identity_certificate(F: BlockOperatorFunction, label: str = "identity") -> EquivalenceCertificate:
    r, c = F.shape
    return EquivalenceCertificate(F, F, None, None, X_.eye(r), X_.eye(c), F.excluded(), label=label)


def _scalar_perm(layout_dims: Sequence[int], block_perm: Sequence[int]) -> np.ndarray:
    off = np.concatenate([[0], np.cumsum(layout_dims)]).astype(int)
    return np.concatenate([np.arange(off[b], off[b + 1]) for b in block_perm]).astype(int) \
        if len(block_perm) else np.zeros(0, int)


def perm_matrix(idx: Sequence[int]) -> np.ndarray:
    """P with (P @ M) == M[idx]."""
    n = len(idx)
    P = np.zeros((n, n), complex)
    P[np.arange(n), np.asarray(idx, dtype=int)] = 1
    return P


def permutation_certificate(F: BlockOperatorFunction, row_perm: Sequence[int], col_perm: Sequence[int],
                            label: str = "permutation") -> EquivalenceCertificate:
    """F is equivalent to its block permutation G with G[a, b] = F[row_perm[a], col_perm[b]]."""
    G = F.permuted(row_perm, col_perm)
    ri = _scalar_perm(F.row_dims, row_perm)
    ci = _scalar_perm(F.col_dims, col_perm)
    Pr = perm_matrix(ri)          # G = Pr F Pc
    Pc = perm_matrix(ci).T
    return EquivalenceCertificate(F, G, None, None, X_.const(Pr.T), X_.const(Pc.T), F.excluded(),
                                  label=label)


# composition


def _inverse(p: np.ndarray) -> np.ndarray:
    inv = np.empty_like(p)
    inv[p] = np.arange(len(p))
    return inv


def _pad(node: Node, n: int) -> Node:
    return node if n == 0 else X_.direct_sum(node, X_.eye(n))


def compose_certificates(c1: EquivalenceCertificate, c2: EquivalenceCertificate,
                         label: str | None = None) -> EquivalenceCertificate:
    """Chain S ~ T1 (c1) with T1 ~ T2 (c2) into S ~ T2."""
    if not c1.rhs.structurally_equal(c2.lhs, tol=1e-12):
        raise StructuralMismatch("rhs of the first certificate differs from lhs of the second")
    nS_r, nS_c = c1.lhs.shape
    nT1_r, nT1_c = c1.rhs.shape
    nT2_r, nT2_c = c2.rhs.shape
    w1, v1, w2, v2 = c1.w_lhs, c1.w_rhs, c2.w_lhs, c2.w_rhs
    nW1, nV1, nW2, nV2 = _size(w1), _size(v1), _size(w2), _size(v2)
    nW1c = 0 if w1 is None else w1.cols
    nV1c = 0 if v1 is None else v1.cols
    nW2c = 0 if w2 is None else w2.cols
    nV2c = 0 if v2 is None else v2.cols

    def shift_ext(idx, n_main, n_insert):
        # indices into BD(main, ext) -> BD(main, inserted, ext)
        idx = np.asarray(idx)
        return np.where(idx < n_main, idx, idx + n_insert)

    # X = BD(T1, V1, W2)
    ar = np.concatenate([c1.rhs_rows, nT1_r + nV1 + np.arange(nW2)])
    ac = np.concatenate([c1.rhs_cols, nT1_c + nV1c + np.arange(nW2c)])
    br = np.concatenate([shift_ext(c2.lhs_rows, nT1_r, nV1), nT1_r + np.arange(nV1)])
    bc = np.concatenate([shift_ext(c2.lhs_cols, nT1_c, nV1c), nT1_c + np.arange(nV1c)])
    sig_r = _inverse(br)[ar]
    sig_c = _inverse(bc)[ac]
    Pr = perm_matrix(sig_r)
    Pc = perm_matrix(sig_c).T

    E = X_.mul(_pad(c1.E, nW2), X_.const(Pr) if not np.array_equal(sig_r, np.arange(len(sig_r)))
               else X_.eye(len(sig_r)), _pad(c2.E, nV1))
    F = X_.mul(_pad(c2.F, nV1c), X_.const(Pc) if not np.array_equal(sig_c, np.arange(len(sig_c)))
               else X_.eye(len(sig_c)), _pad(c1.F, nW2c))

    w_lhs = _join(w1, w2)
    w_rhs = _join(v2, v1)
    lhs_rows = np.concatenate([c1.lhs_rows, nS_r + nW1 + np.arange(nW2)])
    lhs_cols = np.concatenate([c1.lhs_cols, nS_c + nW1c + np.arange(nW2c)])
    rhs_rows = np.concatenate([c2.rhs_rows, nT2_r + nV2 + np.arange(nV1)])
    rhs_cols = np.concatenate([c2.rhs_cols, nT2_c + nV2c + np.arange(nV1c)])
    return EquivalenceCertificate(
        c1.lhs, c2.rhs, w_lhs, w_rhs, E, F, c1.excluded.union(c2.excluded),
        lhs_rows, lhs_cols, rhs_rows, rhs_cols,
        label or f"{c1.label} ; {c2.label}")


def _join(a: Node | None, b: Node | None) -> Node | None:
    if a is None:
        return b
    if b is None:
        return a
    return X_.direct_sum(a, b)


# corner embedding


def probe_points(excluded: ExcludedSet, n: int = 5, seed: int = 20240611) -> list[complex]:
    return sample_points(n, seed, excluded)


def _lift_rows(block_node: Node, n_main: int, n_ext: int, rows: np.ndarray) -> Node:
    """Rows of a main-space block placed into extended coordinates (ext rows zero)."""
    full = block_node if n_ext == 0 else X_.block([[block_node], [X_.zeros(n_ext, block_node.cols)]])
    if np.array_equal(rows, np.arange(len(rows))):
        return full
    return X_.select(full, rows, np.arange(block_node.cols))


def _lift_cols(block_node: Node, n_main: int, n_ext: int, cols: np.ndarray) -> Node:
    full = block_node if n_ext == 0 else X_.block([[block_node, X_.zeros(block_node.rows, n_ext)]])
    if np.array_equal(cols, np.arange(len(cols))):
        return full
    return X_.select(full, np.arange(block_node.rows), cols)


def _rel_norm(v: np.ndarray, *scales: np.ndarray) -> float:
    s = max([1.0] + [float(np.linalg.norm(x)) for x in scales])
    return float(np.linalg.norm(v)) / s


def embed_corner(inner: EquivalenceCertificate, Xb: BlockOperatorFunction, Yb: BlockOperatorFunction,
                 Zb: BlockOperatorFunction, side_E: Node | None = None, side_F: Node | None = None,
                 rhs_X: BlockOperatorFunction | None = None, rhs_Y: BlockOperatorFunction | None = None,
                 extra_excluded: ExcludedSet = EMPTY, tol: float = 1e-8,
                 label: str = "embed") -> EquivalenceCertificate:
    """Lift S ~ T to [S X; Y Z] ~ [T Xt; Yt Z].

    Xt = E^{-1} X - T Fs and Yt = Y F^{-1} - Es T, all in extended
    coordinates.  The side pair (Es, Fs) must satisfy
    Es E^{-1} X + Y F^{-1} Fs - Es T Fs = 0, which is checked at probe points.
    When closed forms rhs_X / rhs_Y are supplied they are checked against
    the generic expressions; otherwise the new blocks are kept as
    expression entries.
    """
    S, T = inner.lhs, inner.rhs
    if Xb.row_dims != S.row_dims or Yb.col_dims != S.col_dims:
        raise DimensionMismatch("X must share S's rows and Y its columns")
    if Xb.col_dims != Zb.col_dims or Yb.row_dims != Zb.row_dims:
        raise DimensionMismatch("X, Y and Z do not fit together")
    n = inner.size
    ncol = inner.F.rows
    zr, zc = Zb.shape
    nS_r, nS_c = S.shape
    nT_r, nT_c = T.shape
    side_E = side_E if side_E is not None else X_.zeros(zr, n)
    side_F = side_F if side_F is not None else X_.zeros(ncol, zc)
    if side_E.shape != (zr, n) or side_F.shape != (ncol, zc):
        raise DimensionMismatch(f"side factors {side_E.shape}, {side_F.shape}; expected {(zr, n)}, {(ncol, zc)}")

    Xe = _lift_rows(X_.Fun(Xb), nS_r, n - nS_r, inner.lhs_rows)
    Ye = _lift_cols(X_.Fun(Yb), nS_c, ncol - nS_c, inner.lhs_cols)
    Rext = inner.rhs_node()
    Einv_X = X_.mul(X_.inv(inner.E), Xe)
    Y_Finv = X_.mul(Ye, X_.inv(inner.F))
    Xt_ext = X_.add(Einv_X, X_.neg(X_.mul(Rext, side_F)))
    Yt_ext = X_.add(Y_Finv, X_.neg(X_.mul(side_E, Rext)))
    side_cond = X_.add(X_.mul(side_E, Einv_X), X_.mul(Y_Finv, side_F),
                       X_.neg(X_.mul(side_E, Rext, side_F)))

    # positions of T's rows/cols within extended coordinates
    rpos = _inverse(inner.rhs_rows)[:nT_r]
    cpos = _inverse(inner.rhs_cols)[:nT_c]
    r_ext_pos = _inverse(inner.rhs_rows)[nT_r:]
    c_ext_pos = _inverse(inner.rhs_cols)[nT_c:]

    excluded = inner.excluded.union(Xb.excluded()).union(Yb.excluded()).union(Zb.excluded()) \
        .union(extra_excluded)
    for lam in probe_points(excluded):
        cache = {}
        try:
            sc = X_.evaluate(side_cond, lam, cache)
            xt = X_.evaluate(Xt_ext, lam, cache)
            yt = X_.evaluate(Yt_ext, lam, cache)
        except EvaluationAtExcludedPoint:
            continue
        scale_ref = [Xb.eval(lam), Yb.eval(lam)]
        if _rel_norm(sc, *scale_ref, X_.evaluate(Rext, lam, cache)) > tol:
            raise SideConditionViolated(f"side condition residual {_rel_norm(sc, *scale_ref):.2e} at {lam}")
        if len(r_ext_pos) and _rel_norm(xt[r_ext_pos], xt) > tol:
            raise SideConditionViolated("corner block leaks into the rhs extension rows")
        if len(c_ext_pos) and _rel_norm(yt[:, c_ext_pos], yt) > tol:
            raise SideConditionViolated("corner block leaks into the rhs extension columns")
        if rhs_X is not None and _rel_norm(rhs_X.eval(lam) - xt[rpos], xt) > tol:
            raise SideConditionViolated("closed-form upper corner disagrees with E^-1 X - T Fs")
        if rhs_Y is not None and _rel_norm(rhs_Y.eval(lam) - yt[:, cpos], yt) > tol:
            raise SideConditionViolated("closed-form lower corner disagrees with Y F^-1 - Es T")

    if rhs_X is None:
        rhs_X = _function_grid(X_.select(Xt_ext, rpos, np.arange(zc)), T.row_dims, Zb.col_dims)
    if rhs_Y is None:
        rhs_Y = _function_grid(X_.select(Yt_ext, np.arange(zr), cpos), Zb.row_dims, T.col_dims)
    if rhs_X.row_dims != T.row_dims or rhs_X.col_dims != Zb.col_dims:
        raise DimensionMismatch("closed-form upper corner has the wrong layout")
    if rhs_Y.row_dims != Zb.row_dims or rhs_Y.col_dims != T.col_dims:
        raise DimensionMismatch("closed-form lower corner has the wrong layout")

    new_lhs = BlockOperatorFunction.from_blocks([[S, Xb], [Yb, Zb]])
    new_rhs = BlockOperatorFunction.from_blocks([[T, rhs_X], [rhs_Y, Zb]])

    def grow(idx, n_main, k):
        idx = np.asarray(idx)
        return np.concatenate([np.where(idx < n_main, idx, idx + k), n_main + np.arange(k)])

    E = X_.block([[inner.E, None], [side_E, X_.eye(zr)]], [n, zr], [n, zr])
    F = X_.block([[inner.F, side_F], [None, X_.eye(zc)]], [ncol, zc], [ncol, zc])
    return EquivalenceCertificate(
        new_lhs, new_rhs, inner.w_lhs, inner.w_rhs, E, F, excluded,
        grow(inner.lhs_rows, nS_r, zr), grow(inner.lhs_cols, nS_c, zc),
        grow(inner.rhs_rows, nT_r, zr), grow(inner.rhs_cols, nT_c, zc), label)


def _function_grid(node: Node, row_dims, col_dims) -> BlockOperatorFunction:
    ro = np.concatenate([[0], np.cumsum(row_dims)]).astype(int)
    co = np.concatenate([[0], np.cumsum(col_dims)]).astype(int)
    grid = []
    for i in range(len(row_dims)):
        row = []
        for j in range(len(col_dims)):
            row.append(FunctionEntry(X_.select(node, np.arange(ro[i], ro[i + 1]), np.arange(co[j], co[j + 1]))))
        grid.append(row)
    return BlockOperatorFunction(grid, row_dims, col_dims)


def corrupted(c: EquivalenceCertificate, delta: float = 1e-2, where=(0, 0)) -> EquivalenceCertificate:
    """Copy of c whose E has one entry perturbed (negative control)."""
    bump = np.zeros(c.E.shape, complex)
    bump[where] = delta
    E = X_.add(c.E, X_.const(bump))
    return EquivalenceCertificate(c.lhs, c.rhs, c.w_lhs, c.w_rhs, E, c.F, c.excluded,
                                  c.lhs_rows, c.lhs_cols, c.rhs_rows, c.rhs_cols, c.label + " (corrupted)")
