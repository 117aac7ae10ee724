"""Eigenvalues of the produced pencils and an independent determinant-root oracle.

The two routes share nothing: pencil eigenvalues come from the in-tree
Hessenberg-QR iteration below, oracle roots from LAPACK determinants at
interpolation nodes followed by a companion-matrix root solve.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .blockfun import EMPTY, BlockOperatorFunction, ExcludedSet, PolyEntry, polynomial_unfolding
from .errors import DegenerateDeterminant, NonConvergence, RationalEntryError

EPS = np.finfo(float).eps
ORACLE_RADIUS = 1.5
TRIM_REL = 1e-10
DEGENERATE_REL = 1e-11
HUNGARIAN_MAX = 64


# dense eigensolver


def hessenberg(A: np.ndarray) -> np.ndarray:
    H = np.array(A, dtype=complex)
    n = H.shape[0]
    for k in range(n - 2):
        x = H[k + 1 :, k]
        nx = np.linalg.norm(x)
        if nx == 0:
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x.copy()
        v[0] += phase * nx
        v /= np.linalg.norm(v)
        H[k + 1 :, :] -= 2.0 * np.outer(v, v.conj() @ H[k + 1 :, :])
        H[:, k + 1 :] -= 2.0 * np.outer(H[:, k + 1 :] @ v, v.conj())
        H[k + 2 :, k] = 0
    return H


def _wilkinson(a, b, c, d):
    tr = a + d
    det = a * d - b * c
    disc = np.sqrt(tr * tr / 4 - det)
    m1, m2 = tr / 2 + disc, tr / 2 - disc
    return m1 if abs(m1 - d) < abs(m2 - d) else m2


def _qr_sweep(Hs: np.ndarray, mu: complex) -> None:
    m = Hs.shape[0]
    Hs[np.diag_indices(m)] -= mu
    rots = []
    for k in range(m - 1):
        x, y = Hs[k, k], Hs[k + 1, k]
        r = np.hypot(abs(x), abs(y))
        if r == 0:
            c, s = 1.0, 0.0
        else:
            c, s = x / r, y / r
        G = np.array([[np.conj(c), np.conj(s)], [-s, c]])
        Hs[k : k + 2, k:] = G @ Hs[k : k + 2, k:]
        Hs[k + 1, k] = 0
        rots.append(G)
    for k, G in enumerate(rots):
        Hs[: k + 2, k : k + 2] = Hs[: k + 2, k : k + 2] @ G.conj().T
    Hs[np.diag_indices(m)] += mu


def eig_dense(A, max_iter_per_eig: int = 60) -> np.ndarray:
    """All eigenvalues of a square matrix by shifted QR on the Hessenberg form."""
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("eig_dense needs a square matrix")
    n = A.shape[0]
    if n == 0:
        return np.zeros(0, complex)
    H = hessenberg(A)
    scale = max(np.abs(H).max(), np.finfo(float).tiny)
    eigs = []
    hi = n - 1
    it = 0
    while hi >= 0:
        if hi == 0:
            eigs.append(H[0, 0])
            break
        lo = hi
        while lo > 0:
            ref = abs(H[lo, lo]) + abs(H[lo - 1, lo - 1])
            if ref == 0:
                ref = scale
            if abs(H[lo, lo - 1]) <= EPS * ref:
                H[lo, lo - 1] = 0
                break
            lo -= 1
        if lo == hi:
            eigs.append(H[hi, hi])
            hi -= 1
            it = 0
            continue
        it += 1
        if it > max_iter_per_eig:
            raise NonConvergence(f"QR iteration stalled at index {hi}")
        if it % 11 == 0:
            mu = H[hi, hi] + 0.75 * abs(H[hi, hi - 1]) * np.exp(1j * it)
        else:
            mu = _wilkinson(H[hi - 1, hi - 1], H[hi - 1, hi], H[hi, hi - 1], H[hi, hi])
        blk = H[lo : hi + 1, lo : hi + 1]
        _qr_sweep(blk, mu)
        H[lo : hi + 1, lo : hi + 1] = blk
    return np.array(eigs[::-1], dtype=complex)


# determinant oracle


def _degree_bound(F: BlockOperatorFunction) -> int:
    polys = F.polys()
    nr, nc = F.grid_shape

    def deg(p):
        return p.degree if not p.is_zero else -1

    col = sum(max(max(deg(polys[j][i]) for j in range(nr)), 0) * F.col_dims[i] for i in range(nc))
    row = sum(max(max(deg(polys[j][i]) for i in range(nc)), 0) * F.row_dims[j] for j in range(nr))
    return min(col, row)


def _polynomial_form(F: BlockOperatorFunction) -> BlockOperatorFunction:
    rows = []
    for row in F.entries:
        r = []
        for e in row:
            if e.kind == "polynomial":
                r.append(e)
            elif e.kind == "product":
                r.append(PolyEntry(e.expand()))
            else:
                raise RationalEntryError(f"{e.kind} entry has no polynomial determinant")
        rows.append(r)
    return BlockOperatorFunction(rows, F.row_dims, F.col_dims)


def det_coefficients(F: BlockOperatorFunction, max_degree_hint: int | None = None) -> np.ndarray:
    """Ascending coefficients of det F(lam), fitted by interpolation on a circle."""
    if F.shape[0] != F.shape[1]:
        raise ValueError("determinant of a non-square block function")
    F = _polynomial_form(F)
    bound = _degree_bound(F)
    if max_degree_hint is not None:
        bound = min(bound, int(max_degree_hint))
    N = 1
    while N <= bound:
        N *= 2
    nodes = ORACLE_RADIUS * np.exp(2j * np.pi * np.arange(N) / N)
    vals = np.empty(N, complex)
    hadamard = 0.0
    for k, z in enumerate(nodes):
        M = F.eval(z)
        vals[k] = np.linalg.det(M)
        hadamard = max(hadamard, float(np.prod(np.linalg.norm(M, axis=1))))
    if np.max(np.abs(vals)) <= DEGENERATE_REL * max(hadamard, 1e-300):
        raise DegenerateDeterminant("det F(lam) vanishes identically on the interpolation circle")
    coef = np.fft.fft(vals) / N / ORACLE_RADIUS ** np.arange(N)
    return coef[: bound + 1]


def det_poly_roots(F: BlockOperatorFunction, max_degree_hint: int | None = None) -> np.ndarray:
    c = det_coefficients(F, max_degree_hint)
    big = np.max(np.abs(c))
    keep = np.abs(c) > TRIM_REL * big
    hi = int(np.max(np.nonzero(keep)))
    lo = int(np.min(np.nonzero(keep)))
    core = c[lo : hi + 1]
    roots = np.roots(core[::-1]) if len(core) > 1 else np.zeros(0, complex)
    return np.concatenate([np.zeros(lo, complex), roots.astype(complex)])


# comparison


@dataclass
class SpectrumReport:
    pencil_eigs: np.ndarray
    oracle_roots: np.ndarray
    excluded_discarded: list
    pairing: list  # (pencil value, oracle value, distance)
    max_pair_distance: float
    unmatched_pencil: list
    unmatched_oracle: list
    passed: bool
    tol: float = 1e-6

    def summary(self) -> str:
        return (f"{'PASS' if self.passed else 'FAIL'} {len(self.pairing)} pairs, max distance "
                f"{self.max_pair_distance:.3e} (tol {self.tol:.1e}), unmatched "
                f"{len(self.unmatched_pencil)}/{len(self.unmatched_oracle)}, "
                f"discarded {len(self.excluded_discarded)}")


def _dist(a, b):
    return abs(a - b) / max(1.0, abs(a), abs(b))


def compare_spectra(pencil_eigs, oracle_roots, excluded: ExcludedSet = EMPTY, tol: float = 1e-6,
                    radius: float = 1e-6) -> SpectrumReport:
    pe = np.asarray(pencil_eigs, dtype=complex).ravel()
    orc = np.asarray(oracle_roots, dtype=complex).ravel()
    dropped = []

    def keep(v):
        out = []
        for x in v:
            if excluded.near(x, radius):
                dropped.append(complex(x))
            else:
                out.append(complex(x))
        return np.array(out, dtype=complex)

    a, b = keep(pe), keep(orc)
    pairs = []
    used_a, used_b = set(), set()
    if len(a) and len(b):
        if max(len(a), len(b)) <= HUNGARIAN_MAX:
            cost = np.array([[_dist(x, y) for y in b] for x in a])
            ri, ci = linear_sum_assignment(cost)
            for i, j in zip(ri, ci):
                pairs.append((a[i], b[j], float(cost[i, j])))
                used_a.add(i)
                used_b.add(j)
        else:
            cand = sorted((_dist(x, y), i, j) for i, x in enumerate(a) for j, y in enumerate(b))
            for d, i, j in cand:
                if i in used_a or j in used_b:
                    continue
                pairs.append((a[i], b[j], float(d)))
                used_a.add(i)
                used_b.add(j)
    ua = [complex(a[i]) for i in range(len(a)) if i not in used_a]
    ub = [complex(b[j]) for j in range(len(b)) if j not in used_b]
    mx = max((p[2] for p in pairs), default=0.0)
    ok = not ua and not ub and mx <= tol
    return SpectrumReport(pe, orc, dropped, pairs, float(mx), ua, ub, bool(ok), tol)


# certificate-level check


def pencil_matrix(F: BlockOperatorFunction) -> np.ndarray:
    """T from a block function equal to T - lam (monic linear)."""
    from .algebra import poly_block

    P = poly_block(F.polys())
    if P.degree > 1 or not np.allclose(P.coeff(1), -np.eye(P.rows), atol=1e-14):
        raise ValueError("block function is not a monic pencil T - lam")
    return P.coeff(0)


def lhs_oracle(F: BlockOperatorFunction, max_degree_hint: int | None = None):
    """Oracle roots of a block function plus the points to discard."""
    has_schur = any(e.kind == "schur" for row in F.entries for e in row)
    if has_schur:
        G, excl = polynomial_unfolding(F)
    else:
        G, excl = _polynomial_form(F), EMPTY
    return det_poly_roots(G, max_degree_hint), excl


def spectral_check(cert, tol: float = 1e-6) -> SpectrumReport:
    T = pencil_matrix(cert.rhs)
    eigs = eig_dense(T)
    roots, excl = lhs_oracle(cert.lhs)
    return compare_spectra(eigs, roots, cert.excluded.union(excl), tol)
