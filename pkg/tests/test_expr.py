import numpy as np
import pytest

from linequiv import expr as X
from linequiv.algebra import MatrixPolynomial as MP
from linequiv.errors import DimensionMismatch, EvaluationAtExcludedPoint


def test_lam_powers_and_scale():
    n = X.lam_pow(-2, 2, 3.0)
    assert np.allclose(n(2.0), 0.75 * np.eye(2))
    assert np.allclose(X.scale(X.eye(2), 2j)(1.0), 2j * np.eye(2))


def test_negative_power_at_zero():
    with pytest.raises(EvaluationAtExcludedPoint):
        X.lam_pow(-1, 1)(0.0)


def test_block_mul_add_inv():
    A = np.array([[2.0, 1.0], [0.0, 3.0]])
    M = X.block([[X.const(A), None], [None, X.poly(MP.pencil(np.eye(1)))]], [2, 1], [2, 1])
    v = M(0.5)
    assert np.allclose(v[:2, :2], A) and np.isclose(v[2, 2], 0.5)
    assert np.allclose((X.inv(X.const(A)) @ X.const(A))(0.0), np.eye(2))
    assert np.allclose((X.const(A) - X.const(A))(1.0), 0)


def test_singular_inverse_reports_excluded():
    with pytest.raises(EvaluationAtExcludedPoint):
        X.inv(X.poly(MP.pencil(np.eye(2))))(1.0)


def test_shapes_checked():
    with pytest.raises(DimensionMismatch):
        X.mul(X.eye(2), X.eye(3))
    with pytest.raises(DimensionMismatch):
        X.add(X.eye(2), X.zeros(2, 3))


def test_select_and_walk():
    A = np.arange(9.0).reshape(3, 3)
    s = X.select(X.const(A), [2, 0], [1])
    assert np.allclose(s(0), A[[2, 0]][:, [1]])
    root = X.mul(X.inv(X.const(np.eye(3) + A)), X.const(A))
    assert len(X.inverse_nodes(root)) == 1
    assert len(X.walk(root)) >= 3


def test_shared_subexpression_evaluated_once():
    calls = []

    class Counting(X.Const):
        def _eval(self, lam, cache):
            calls.append(lam)
            return super()._eval(lam, cache)

    c = Counting(np.eye(2))
    X.add(c, X.mul(c, c))(1.0)
    assert len(calls) == 1
