"""Expression DAG for matrix-valued functions of lam.

Factor matrices that mix polynomial parts, negative powers of lam and
pointwise inverses are built as small graphs and evaluated exactly at a point.
Evaluation is memoized per call, so shared sub-expressions are computed once.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .algebra import MatrixPolynomial, cmatrix, poly_eval, rcond
from .errors import DimensionMismatch, EvaluationAtExcludedPoint

INV_RCOND = 1e-12


class Node:
    shape: tuple[int, int]
    children: tuple["Node", ...] = ()

    @property
    def rows(self) -> int:
        return self.shape[0]

    @property
    def cols(self) -> int:
        return self.shape[1]

    def _eval(self, lam, cache) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def __call__(self, lam) -> np.ndarray:
        return evaluate(self, lam)

    def __matmul__(self, other):
        return mul(self, other)

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, neg(other))

    def __neg__(self):
        return neg(self)


def evaluate(node: Node, lam, cache: dict | None = None) -> np.ndarray:
    if cache is None:
        cache = {}
    key = id(node)
    hit = cache.get(key)
    if hit is not None:
        return hit[1]
    val = node._eval(lam, cache)
    # keep the node alive alongside its value so ids stay unique
    cache[key] = (node, val)
    return val


class Const(Node):
    def __init__(self, m):
        self.value = cmatrix(m)
        self.shape = self.value.shape

    def _eval(self, lam, cache):
        return self.value


class Eye(Node):
    def __init__(self, n: int):
        self.shape = (n, n)

    def _eval(self, lam, cache):
        return np.eye(self.shape[0], dtype=complex)


class Zeros(Node):
    def __init__(self, rows: int, cols: int):
        self.shape = (rows, cols)

    def _eval(self, lam, cache):
        return np.zeros(self.shape, complex)


class LamPow(Node):
    """coef * lam**k * I_n for any integer k."""

    def __init__(self, k: int, n: int, coef: complex = 1.0):
        self.k = int(k)
        self.coef = complex(coef)
        self.shape = (n, n)

    def _eval(self, lam, cache):
        if self.k < 0 and lam == 0:
            raise EvaluationAtExcludedPoint("negative power of lam at lam = 0")
        return self.coef * complex(lam) ** self.k * np.eye(self.shape[0], dtype=complex)


class Poly(Node):
    def __init__(self, P: MatrixPolynomial):
        self.poly = P
        self.shape = P.shape

    def _eval(self, lam, cache):
        return poly_eval(self.poly, lam)


class Fun(Node):
    """Wraps any object with .shape and .eval(lam), e.g. a block function."""

    def __init__(self, fn):
        self.fn = fn
        self.shape = tuple(fn.shape)

    def _eval(self, lam, cache):
        return self.fn.eval(lam)


class Block(Node):
    def __init__(self, grid: Sequence[Sequence[Node | None]], row_dims=None, col_dims=None):
        nr = len(grid)
        nc = len(grid[0]) if nr else 0
        rd = list(row_dims) if row_dims is not None else [None] * nr
        cd = list(col_dims) if col_dims is not None else [None] * nc
        for i, row in enumerate(grid):
            if len(row) != nc:
                raise DimensionMismatch("ragged block grid")
            for j, b in enumerate(row):
                if b is None:
                    continue
                if rd[i] is None:
                    rd[i] = b.rows
                if cd[j] is None:
                    cd[j] = b.cols
                if (rd[i], cd[j]) != b.shape:
                    raise DimensionMismatch(f"block ({i},{j}) is {b.shape}, slot is {(rd[i], cd[j])}")
        if any(d is None for d in rd) or any(d is None for d in cd):
            raise DimensionMismatch("empty block row/column needs explicit dims")
        self.grid = [list(r) for r in grid]
        self.row_dims, self.col_dims = rd, cd
        self.shape = (sum(rd), sum(cd))
        self.children = tuple(b for r in grid for b in r if b is not None)

    def _eval(self, lam, cache):
        out = np.zeros(self.shape, complex)
        r0 = 0
        for i, row in enumerate(self.grid):
            c0 = 0
            for j, b in enumerate(row):
                if b is not None and not isinstance(b, Zeros):
                    out[r0 : r0 + self.row_dims[i], c0 : c0 + self.col_dims[j]] = evaluate(b, lam, cache)
                c0 += self.col_dims[j]
            r0 += self.row_dims[i]
        return out


class Add(Node):
    def __init__(self, *terms: Node):
        shapes = {t.shape for t in terms}
        if len(shapes) != 1:
            raise DimensionMismatch(f"cannot add shapes {shapes}")
        self.children = tuple(terms)
        self.shape = terms[0].shape

    def _eval(self, lam, cache):
        out = evaluate(self.children[0], lam, cache).copy()
        for t in self.children[1:]:
            out += evaluate(t, lam, cache)
        return out


class Scale(Node):
    def __init__(self, arg: Node, c: complex):
        self.children = (arg,)
        self.c = complex(c)
        self.shape = arg.shape

    def _eval(self, lam, cache):
        return self.c * evaluate(self.children[0], lam, cache)


class Inv(Node):
    """Pointwise inverse; refuses near-singular values."""

    def __init__(self, arg: Node):
        if arg.rows != arg.cols:
            raise DimensionMismatch("inverse of a non-square node")
        self.children = (arg,)
        self.shape = arg.shape
        self.min_rcond = float("inf")

    def check(self, a: np.ndarray) -> None:
        rc = rcond(a)
        self.min_rcond = min(self.min_rcond, rc)
        if rc < INV_RCOND:
            raise EvaluationAtExcludedPoint(f"inverse node is singular here (rcond {rc:.2e})")

    def _eval(self, lam, cache):
        a = evaluate(self.children[0], lam, cache)
        self.check(a)
        return np.linalg.solve(a, np.eye(a.shape[0], dtype=complex))


class Mul(Node):
    """Left-to-right product.  Inv factors are applied with a linear solve."""

    def __init__(self, *factors: Node):
        for a, b in zip(factors, factors[1:]):
            if a.cols != b.rows:
                raise DimensionMismatch(f"cannot multiply {a.shape} by {b.shape}")
        self.children = tuple(factors)
        self.shape = (factors[0].rows, factors[-1].cols)

    def _eval(self, lam, cache):
        fs = self.children
        last = fs[-1]
        acc = evaluate(last, lam, cache)
        for f in reversed(fs[:-1]):
            if isinstance(f, Inv):
                a = evaluate(f.children[0], lam, cache)
                f.check(a)
                acc = np.linalg.solve(a, acc)
            else:
                acc = evaluate(f, lam, cache) @ acc
        return acc


class Select(Node):
    """Sub-matrix picked by explicit row/column index lists."""

    def __init__(self, arg: Node, rows: Sequence[int], cols: Sequence[int]):
        self.children = (arg,)
        self.ridx = np.asarray(rows, dtype=int)
        self.cidx = np.asarray(cols, dtype=int)
        self.shape = (len(self.ridx), len(self.cidx))

    def _eval(self, lam, cache):
        return evaluate(self.children[0], lam, cache)[np.ix_(self.ridx, self.cidx)]


# builders that keep graphs small


def const(m) -> Node:
    m = cmatrix(m)
    if not np.any(m):
        return Zeros(*m.shape)
    return Const(m)


def eye(n: int) -> Node:
    return Eye(n)


def zeros(rows: int, cols: int) -> Node:
    return Zeros(rows, cols)


def lam_pow(k: int, n: int, coef: complex = 1.0) -> Node:
    if coef == 0:
        return Zeros(n, n)
    if k == 0 and coef == 1:
        return Eye(n)
    return LamPow(k, n, coef)


def poly(P: MatrixPolynomial) -> Node:
    if P.is_zero:
        return Zeros(*P.shape)
    if P.degree == 0:
        return Const(P.coeffs[0])
    return Poly(P)


def add(*terms: Node) -> Node:
    live = [t for t in terms if not isinstance(t, Zeros)]
    if not live:
        return terms[0]
    if len(live) == 1:
        if any(t.shape != live[0].shape for t in terms):
            raise DimensionMismatch("cannot add mismatched shapes")
        return live[0]
    return Add(*live)


def neg(a: Node) -> Node:
    if isinstance(a, Zeros):
        return a
    if isinstance(a, Scale):
        return scale(a.children[0], -a.c)
    return Scale(a, -1.0)


def scale(a: Node, c: complex) -> Node:
    if c == 0:
        return Zeros(*a.shape)
    if c == 1:
        return a
    if isinstance(a, Zeros):
        return a
    return Scale(a, c)


def mul(*factors: Node) -> Node:
    for a, b in zip(factors, factors[1:]):
        if a.cols != b.rows:
            raise DimensionMismatch(f"cannot multiply {a.shape} by {b.shape}")
    shape = (factors[0].rows, factors[-1].cols)
    if any(isinstance(f, Zeros) for f in factors):
        return Zeros(*shape)
    live = [f for f in factors if not isinstance(f, Eye)]
    if not live:
        return Eye(shape[0])
    if len(live) == 1:
        return live[0]
    return Mul(*live)


def inv(a: Node) -> Node:
    return Inv(a)


def block(grid, row_dims=None, col_dims=None) -> Node:
    return Block(grid, row_dims, col_dims)


def direct_sum(*nodes: Node) -> Node:
    nodes = [n for n in nodes if n.rows or n.cols]
    if len(nodes) == 1:
        return nodes[0]
    k = len(nodes)
    grid = [[nodes[i] if i == j else None for j in range(k)] for i in range(k)]
    return Block(grid, [n.rows for n in nodes], [n.cols for n in nodes])


def select(a: Node, rows, cols) -> Node:
    return Select(a, rows, cols)


def walk(root: Node) -> list[Node]:
    """Topological order (children before parents), each node once."""
    seen: set[int] = set()
    order: list[Node] = []
    stack = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for ch in reversed(node.children):
            if id(ch) not in seen:
                stack.append((ch, False))
    return order


def inverse_nodes(root: Node) -> list[Inv]:
    return [n for n in walk(root) if isinstance(n, Inv)]
