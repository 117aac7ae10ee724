"""From a block function with product and Schur entries to a monic pencil.

Stages, each a certificate composed onto the previous one:

1. every product or Schur entry is expanded in place (moved to the top-left
   corner, embedded, moved back), until the grid is polynomial;
2. the polynomial grid is column reduced;
3. reduced columns holding only a constant diagonal block are split off as
   a constant extension;
4. the rest is linearized by the block companion form.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import expr as X_
from .algebra import MatrixPolynomial, poly_block
from .blockfun import EMPTY, BlockOperatorFunction
from .blocklin import BlockCompanionResult, BlockPolySpec, block_companion
from .companion import invert_lead
from .equivalence import EquivalenceCertificate, compose_certificates, permutation_certificate
from .errors import DiagonalDegreeViolation, DimensionMismatch, LinearizationError, StageFailed
from .reduction import ReductionTrace, column_reduce, reduction_certificate
from .schur_product import (ProductLinearizationPlan, SchurLinearizationPlan, product_embed,
                            schur_embed)


@dataclass(eq=False)
class Stage:
    name: str
    cert: EquivalenceCertificate
    grid_shape: tuple[int, int]


@dataclass(eq=False)
class Linearization:
    cert: EquivalenceCertificate
    companion: BlockCompanionResult
    reduction: ReductionTrace
    stages: list = field(default_factory=list)

    @property
    def T(self) -> np.ndarray:
        return self.companion.T

    def block_mask(self) -> np.ndarray:
        """Zero/nonzero pattern of T over the layout of one block per companion slot."""
        off = self.companion.layout.offsets
        nb = len(self.companion.layout)
        M = np.zeros((nb, nb), dtype=int)
        for a in range(nb):
            for b in range(nb):
                M[a, b] = int(np.any(self.T[off[a]:off[a + 1], off[b]:off[b + 1]] != 0))
        return M


def _compose(cert, step):
    return step if cert is None else compose_certificates(cert, step)


def _put_back(n_new: int, pos: int, n_rest: int) -> list[int]:
    """Order that moves the first n_new blocks to position pos among n_rest others."""
    return [n_new + t for t in range(pos)] + list(range(n_new)) + [n_new + t for t in range(pos, n_rest)]


def expand_entry(G: BlockOperatorFunction, j: int, i: int) -> EquivalenceCertificate:
    """Replace the product or Schur entry (j, i) by its unfolding, in place."""
    e = G[j, i]
    nr, nc = G.grid_shape
    rows = [j] + [a for a in range(nr) if a != j]
    cols = [i] + [b for b in range(nc) if b != i]
    c1 = permutation_certificate(G, rows, cols, label=f"move ({j},{i})")
    H = c1.rhs
    Xb = H.submatrix([0], range(1, nc))
    Yb = H.submatrix(range(1, nr), [0])
    Zb = H.submatrix(range(1, nr), range(1, nc))
    if e.kind == "product":
        c2 = product_embed(ProductLinearizationPlan.from_entry(e), Xb, Yb, Zb)
    elif e.kind == "schur":
        c2 = schur_embed(SchurLinearizationPlan.from_entry(e), Xb, Yb, Zb)
    else:
        raise TypeError(f"entry ({j},{i}) is {e.kind}, nothing to expand")
    R = c2.rhs
    gr = R.grid_shape[0] - (nr - 1)
    gc = R.grid_shape[1] - (nc - 1)
    c3 = permutation_certificate(R, _put_back(gr, j, nr - 1), _put_back(gc, i, nc - 1),
                                 label=f"restore ({j},{i})")
    return compose_certificates(compose_certificates(c1, c2), c3, label=f"expand {e.kind} at ({j},{i})")


def split_constant_columns(grid, cols: Sequence[int]) -> EquivalenceCertificate:
    """Certificate that a reduced grid equals (rest + constant diagonal blocks) times a unipotent factor.

    Each listed column must hold only its diagonal entry, a constant
    invertible block P_ii.  Then P = arr(rest + diag P_ii) (I + N), where
    row i of N is P_ii^-1 P_ij off the listed columns, so the listed
    columns leave the problem as a constant extension.
    """
    n = len(grid)
    cz = sorted(set(cols))
    keep = [i for i in range(n) if i not in cz]
    dims = [grid[i][i].rows for i in range(n)]
    for i in cz:
        if grid[i][i].is_zero or grid[i][i].degree != 0:
            raise DiagonalDegreeViolation(f"column {i} is not a constant diagonal column")
        if any(not grid[j][i].is_zero for j in range(n) if j != i):
            raise DiagonalDegreeViolation(f"column {i} has off-diagonal entries")
    invs = {i: invert_lead(grid[i][i].lead, f"constant diagonal block {i}") for i in cz}
    lhs = BlockOperatorFunction.from_polys(grid)
    rest = BlockOperatorFunction.from_polys([[grid[j][i] for i in keep] for j in keep])
    W = X_.block([[X_.const(grid[i][i].lead) if i == k else None for k in cz] for i in cz],
                 [dims[i] for i in cz], [dims[i] for i in cz])
    Fg = []
    for j in range(n):
        row = []
        for i in range(n):
            if i == j:
                row.append(MatrixPolynomial.identity(dims[i]))
            elif j in invs and i not in invs:
                row.append(invs[j] @ grid[j][i])
            else:
                row.append(MatrixPolynomial.zeros(dims[j], dims[i]))
        Fg.append(row)
    F = X_.poly(poly_block(Fg))
    order = keep + cz
    pos = np.concatenate([[0], np.cumsum([dims[i] for i in order])]).astype(int)
    where = {b: np.arange(pos[t], pos[t + 1]) for t, b in enumerate(order)}
    idx = np.concatenate([where[i] for i in range(n)])
    return EquivalenceCertificate(lhs, rest, None, W, X_.eye(sum(dims)), F, EMPTY, None, None, idx, idx,
                                  label=f"split constant columns {cz}")


def _next_compound(G: BlockOperatorFunction):
    for j, row in enumerate(G.entries):
        for i, e in enumerate(row):
            if e.kind in ("product", "schur"):
                return j, i
    return None


def _run(stage: str, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except LinearizationError as e:
        raise StageFailed(stage, e) from e


def linearize(F: BlockOperatorFunction, l: Sequence[int] | None = None, algorithm: str = "general",
              repair: bool = True) -> Linearization:
    """Certificate that F, suitably extended, is equivalent to T - lam.

    l holds one index per column of the reduced polynomial grid (zeros by
    default).  Function entries are not accepted.
    """
    for row in F.entries:
        for e in row:
            if e.kind == "function":
                raise TypeError("function entries cannot be linearized")
    stages: list[Stage] = []
    cert = None
    G = F
    while (hit := _next_compound(G)) is not None:
        j, i = hit
        kind = G[j, i].kind
        c = _run(f"{kind} expansion at ({j},{i})", expand_entry, G, j, i)
        stages.append(Stage(f"{kind} expansion at ({j},{i})", c, c.rhs.grid_shape))
        cert = _compose(cert, c)
        G = c.rhs
    polys = G.polys()
    _, trace = _run("column reduction", column_reduce, polys, algorithm, repair)
    c = reduction_certificate(trace)
    stages.append(Stage(f"column reduction ({algorithm})", c, c.rhs.grid_shape))
    cert = _compose(cert, c)

    final = trace.final
    n = len(final)
    lv = tuple(l) if l is not None else (0,) * n
    if len(lv) != n:
        raise StageFailed("block companion", DimensionMismatch(f"{len(lv)} indices l for {n} reduced columns"))
    for i in range(n):
        if final[i][i].is_zero:
            raise StageFailed("block companion", DiagonalDegreeViolation(
                f"reduced diagonal entry {i} is zero"))
    const = [i for i in range(n) if final[i][i].degree == 0]
    if const:
        if len(const) == n:
            raise StageFailed("block companion", DiagonalDegreeViolation(
                "every reduced column is constant; nothing to linearize"))
        c = _run("constant column split", split_constant_columns, final, const)
        stages.append(Stage("constant column split", c, c.rhs.grid_shape))
        cert = _compose(cert, c)
        final = c.rhs.polys()
        lv = tuple(lv[i] for i in range(n) if i not in const)
    spec = _run("block companion", BlockPolySpec, final, lv)
    result, c = _run("block companion", block_companion, spec)
    stages.append(Stage("block companion", c, c.rhs.grid_shape))
    cert = compose_certificates(cert, c, label="linearization")
    return Linearization(cert, result, trace, stages)


def through_pencil(cert: EquivalenceCertificate, algorithm: str = "general") -> EquivalenceCertificate:
    """cert itself if its rhs is a monic pencil, else cert composed with a linearization of its rhs."""
    from .spectra import pencil_matrix

    try:
        pencil_matrix(cert.rhs)
        return cert
    except (TypeError, ValueError):
        pass
    return compose_certificates(cert, linearize(cert.rhs, algorithm=algorithm).cert, label=cert.label + " -> pencil")
