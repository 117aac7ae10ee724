"""Dense complex matrices and matrix polynomials.

A matrix polynomial is stored as a coefficient stack of shape (k, rows, cols)
in ascending degree.  The zero polynomial has k == 0 and degree NEG_INF.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, NumericallySingular, SingularLeadingCoefficient

NEG_INF = float("-inf")

TRIM_TOL = 1e-12
INVERTIBLE_RCOND = 1e-10


def cmatrix(a, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    """Coerce to a 2-d complex array, rejecting non-finite entries."""
    m = np.array(a, dtype=complex)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got shape {m.shape}")
    if rows is not None and m.shape[0] != rows or cols is not None and m.shape[1] != cols:
        raise DimensionMismatch(f"expected {rows}x{cols}, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def rcond(a: np.ndarray) -> float:
    """Reciprocal 2-norm condition number (0 for singular or empty-rank input)."""
    a = np.asarray(a)
    if a.size == 0:
        return 1.0
    s = np.linalg.svd(a, compute_uv=False)
    if s[0] == 0 or not np.isfinite(s[0]):
        return 0.0
    return float(s[-1] / s[0])


def mat_inv(a, threshold: float = INVERTIBLE_RCOND) -> np.ndarray:
    a = cmatrix(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"cannot invert a {a.shape} matrix")
    if a.shape[0] == 0:
        return a.copy()
    rc = rcond(a)
    if rc <= threshold:
        raise NumericallySingular(f"reciprocal condition {rc:.3e} <= {threshold:.1e}")
    return np.linalg.inv(a)


def _coef_norm(c: np.ndarray) -> float:
    return float(np.max(np.abs(c))) if c.size else 0.0


@dataclass(frozen=True, eq=False)
class MatrixPolynomial:
    """P(lam) = sum_i lam**i * coeffs[i]."""

    coeffs: np.ndarray
    rows: int
    cols: int

    __array_ufunc__ = None  # so ndarray @ poly defers to __rmatmul__

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 3 or c.shape[1:] != (self.rows, self.cols):
            raise DimensionMismatch(f"coefficient stack {c.shape} vs {self.rows}x{self.cols}")
        if not np.all(np.isfinite(c)):
            raise ValueError("polynomial has non-finite coefficients")
        k = c.shape[0]
        s = max((_coef_norm(x) for x in c), default=0.0)
        while k > 0 and _coef_norm(c[k - 1]) <= TRIM_TOL * s:
            k -= 1
        c = c[:k].copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    # constructors

    @classmethod
    def from_coeffs(cls, coeffs: Sequence, rows: int | None = None, cols: int | None = None):
        mats = [cmatrix(c) for c in coeffs]
        if not mats:
            if rows is None or cols is None:
                raise DimensionMismatch("empty coefficient list needs explicit dims")
            return cls.zeros(rows, cols)
        r, c = mats[0].shape
        if rows is not None and rows != r or cols is not None and cols != c:
            raise DimensionMismatch("coefficient shape disagrees with declared dims")
        for m in mats:
            if m.shape != (r, c):
                raise DimensionMismatch("coefficients must share one shape")
        return cls(np.stack(mats), r, c)

    @classmethod
    def zeros(cls, rows: int, cols: int):
        return cls(np.zeros((0, rows, cols), complex), rows, cols)

    @classmethod
    def const(cls, m):
        m = cmatrix(m)
        return cls(m[None], *m.shape)

    @classmethod
    def identity(cls, n: int):
        return cls.const(np.eye(n))

    @classmethod
    def monomial(cls, m, k: int):
        """lam**k * m"""
        m = cmatrix(m)
        c = np.zeros((k + 1,) + m.shape, complex)
        c[k] = m
        return cls(c, *m.shape)

    @classmethod
    def pencil(cls, T, scale: complex = 1.0):
        """T - scale*lam."""
        T = cmatrix(T)
        return cls(np.stack([T, -scale * np.eye(T.shape[0])]), *T.shape)

    # basic properties

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def degree(self):
        return self.coeffs.shape[0] - 1 if self.coeffs.shape[0] else NEG_INF

    @property
    def is_zero(self) -> bool:
        return self.coeffs.shape[0] == 0

    def coeff(self, k: int) -> np.ndarray:
        if 0 <= k < self.coeffs.shape[0]:
            return self.coeffs[k]
        return np.zeros((self.rows, self.cols), complex)

    @property
    def lead(self) -> np.ndarray:
        if self.is_zero:
            raise ValueError("zero polynomial has no leading coefficient")
        return self.coeffs[-1]

    def scale(self) -> float:
        return max((_coef_norm(c) for c in self.coeffs), default=0.0)

    def __call__(self, lam) -> np.ndarray:
        return poly_eval(self, lam)

    def __repr__(self):
        return f"MatrixPolynomial({self.rows}x{self.cols}, degree={self.degree})"

    # arithmetic

    def _padded(self, k: int) -> np.ndarray:
        out = np.zeros((k, self.rows, self.cols), complex)
        out[: self.coeffs.shape[0]] = self.coeffs
        return out

    def __add__(self, other):
        other = as_poly(other, self.shape)
        if other.shape != self.shape:
            raise DimensionMismatch(f"{self.shape} + {other.shape}")
        k = max(self.coeffs.shape[0], other.coeffs.shape[0])
        return MatrixPolynomial(self._padded(k) + other._padded(k), self.rows, self.cols)

    __radd__ = __add__

    def __neg__(self):
        return MatrixPolynomial(-self.coeffs, self.rows, self.cols)

    def __sub__(self, other):
        return self + (-as_poly(other, self.shape))

    def __rsub__(self, other):
        return as_poly(other, self.shape) + (-self)

    def __mul__(self, s):
        if isinstance(s, (int, float, complex, np.number)):
            return MatrixPolynomial(self.coeffs * s, self.rows, self.cols)
        return NotImplemented

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, MatrixPolynomial):
            return poly_mul(self, other)
        return poly_mul(self, MatrixPolynomial.const(other))

    def __rmatmul__(self, other):
        return poly_mul(MatrixPolynomial.const(other), self)

    def shift(self, k: int):
        """lam**k * P for k >= 0."""
        if k < 0:
            raise ValueError("negative shift")
        if self.is_zero:
            return self
        pad = np.zeros((k, self.rows, self.cols), complex)
        return MatrixPolynomial(np.concatenate([pad, self.coeffs]), self.rows, self.cols)

    def allclose(self, other, tol: float = 1e-10) -> bool:
        k = max(self.coeffs.shape[0], other.coeffs.shape[0])
        a, b = self._padded(k), other._padded(k)
        s = max(1.0, self.scale(), other.scale())
        return bool(np.max(np.abs(a - b), initial=0.0) <= tol * s)


def as_poly(x, shape=None) -> MatrixPolynomial:
    if isinstance(x, MatrixPolynomial):
        return x
    if shape is not None and np.isscalar(x):
        if x == 0:
            return MatrixPolynomial.zeros(*shape)
        return MatrixPolynomial.const(x * np.eye(shape[0], shape[1]))
    return MatrixPolynomial.const(x)


def poly_eval(P: MatrixPolynomial, lam) -> np.ndarray:
    out = np.zeros((P.rows, P.cols), complex)
    for c in P.coeffs[::-1]:
        out = out * lam + c
    return out


def poly_mul(P: MatrixPolynomial, Q: MatrixPolynomial) -> MatrixPolynomial:
    if P.cols != Q.rows:
        raise DimensionMismatch(f"cannot multiply {P.shape} by {Q.shape}")
    if P.is_zero or Q.is_zero:
        return MatrixPolynomial.zeros(P.rows, Q.cols)
    kp, kq = P.coeffs.shape[0], Q.coeffs.shape[0]
    out = np.zeros((kp + kq - 1, P.rows, Q.cols), complex)
    for i in range(kp):
        out[i : i + kq] += np.einsum("ab,kbc->kac", P.coeffs[i], Q.coeffs)
    return poly_trim(MatrixPolynomial(out, P.rows, Q.cols), TRIM_TOL, scale=P.scale() * Q.scale())


def poly_trim(P: MatrixPolynomial, tol: float = TRIM_TOL, scale: float | None = None) -> MatrixPolynomial:
    """Drop trailing coefficients whose max-norm is <= tol*scale.

    scale defaults to the largest coefficient norm of P itself.  Callers that
    form P by cancellation pass the operand scale instead.
    """
    if tol < 0:
        raise ValueError("tol must be non-negative")
    if P.is_zero:
        return P
    s = P.scale() if scale is None else max(scale, P.scale())
    k = P.coeffs.shape[0]
    while k > 0 and _coef_norm(P.coeffs[k - 1]) <= tol * s:
        k -= 1
    if k == P.coeffs.shape[0]:
        return P
    return MatrixPolynomial(P.coeffs[:k], P.rows, P.cols)


def poly_left_divide(N: MatrixPolynomial, Dv: MatrixPolynomial, tol: float = TRIM_TOL):
    """Return (K, R) with N = K @ Dv + R and deg R < deg Dv."""
    if Dv.rows != Dv.cols:
        raise DimensionMismatch("divisor must be square")
    if N.cols != Dv.cols:
        raise DimensionMismatch(f"cannot divide {N.shape} by {Dv.shape}")
    if Dv.is_zero:
        raise SingularLeadingCoefficient("division by the zero polynomial")
    dd = Dv.degree
    lead = Dv.lead
    rc = rcond(lead)
    if rc <= INVERTIBLE_RCOND:
        raise SingularLeadingCoefficient(
            f"leading coefficient of divisor has reciprocal condition {rc:.3e}")
    if N.is_zero or N.degree < dd:
        return MatrixPolynomial.zeros(N.rows, Dv.rows), N
    lead_inv = np.linalg.inv(lead)
    rem = N._padded(N.coeffs.shape[0])
    kdeg = N.degree - dd
    K = np.zeros((kdeg + 1, N.rows, Dv.rows), complex)
    ref = N.scale()
    for t in range(N.degree, dd - 1, -1):
        top = rem[t]
        if _coef_norm(top) <= tol * ref:
            rem[t] = 0
            continue
        kt = top @ lead_inv
        K[t - dd] = kt
        rem[t - dd : t + 1] -= np.einsum("ab,kbc->kac", kt, Dv.coeffs)
        rem[t] = 0
    R = poly_trim(MatrixPolynomial(rem[:dd], N.rows, N.cols), tol, scale=ref)
    return MatrixPolynomial(K, N.rows, Dv.rows), R


def poly_block(grid: Sequence[Sequence[MatrixPolynomial]]) -> MatrixPolynomial:
    """Assemble a grid of polynomials into one polynomial."""
    k = max((p.coeffs.shape[0] for row in grid for p in row), default=0)
    rows = [row[0].rows for row in grid]
    cols = [p.cols for p in grid[0]]
    out = np.zeros((k, sum(rows), sum(cols)), complex)
    r0 = 0
    for i, row in enumerate(grid):
        c0 = 0
        for j, p in enumerate(row):
            if p.shape != (rows[i], cols[j]):
                raise DimensionMismatch(f"block ({i},{j}) has shape {p.shape}")
            out[: p.coeffs.shape[0], r0 : r0 + rows[i], c0 : c0 + cols[j]] = p.coeffs
            c0 += cols[j]
        r0 += rows[i]
    return MatrixPolynomial(out, sum(rows), sum(cols))


def block_diag(*mats: np.ndarray) -> np.ndarray:
    r = sum(m.shape[0] for m in mats)
    c = sum(m.shape[1] for m in mats)
    out = np.zeros((r, c), complex)
    i = j = 0
    for m in mats:
        out[i : i + m.shape[0], j : j + m.shape[1]] = m
        i += m.shape[0]
        j += m.shape[1]
    return out


def random_matrix(rng: np.random.Generator, rows: int, cols: int, complex_: bool = True) -> np.ndarray:
    m = rng.standard_normal((rows, cols))
    if complex_:
        m = m + 1j * rng.standard_normal((rows, cols))
    return m.astype(complex)


def random_well_conditioned(rng: np.random.Generator, n: int, min_rcond: float = 1e-2) -> np.ndarray:
    """Random square matrix whose reciprocal condition exceeds min_rcond."""
    while True:
        m = random_matrix(rng, n, n)
        if rcond(m) > min_rcond:
            return m


def random_poly(rng: np.random.Generator, rows: int, cols: int, degree: int) -> MatrixPolynomial:
    if degree < 0:
        return MatrixPolynomial.zeros(rows, cols)
    return MatrixPolynomial.from_coeffs([random_matrix(rng, rows, cols) for _ in range(degree + 1)])


def naive_eval(P: MatrixPolynomial, lam) -> np.ndarray:
    return sum((lam**i * c for i, c in enumerate(P.coeffs)), np.zeros(P.shape, complex))


def degrees_of(polys: Iterable[MatrixPolynomial]):
    return [p.degree for p in polys]
