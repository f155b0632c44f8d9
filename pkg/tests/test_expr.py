"""Whitelisted expression evaluator: correctness, duals, and rejection of
anything outside the arithmetic subset."""

import math

import pytest

from vhckit.dual import Dual, eps, real
from vhckit.expr import (ExpressionError, compile_expression, compile_matrix,
                         compile_vector)


def test_basic_evaluation():
    f = compile_expression("sin(x) * y + y**2", ["x", "y"])
    assert f([0.5, 2.0]) == pytest.approx(math.sin(0.5) * 2.0 + 4.0)


def test_constants_and_pi():
    f = compile_expression("g * cos(pi)", ["q"], {"g": 9.81})
    assert f([0.0]) == pytest.approx(-9.81)


def test_unary_and_division():
    f = compile_expression("-x / (1 + x)", ["x"])
    assert f([1.0]) == pytest.approx(-0.5)


def test_dual_propagation():
    f = compile_expression("exp(2*x)", ["x"])
    d = f([Dual(0.3, 1.0)])
    assert real(d) == pytest.approx(math.exp(0.6))
    assert eps(d) == pytest.approx(2.0 * math.exp(0.6), rel=1e-12)


def test_vector_and_matrix():
    v = compile_vector(["x", "x + y"], ["x", "y"])
    assert v([1.0, 2.0]) == pytest.approx([1.0, 3.0])
    M = compile_matrix([["1", "0"], ["0", "x"]], ["x"])
    assert M([3.0])[1][1] == pytest.approx(3.0)
    assert M([3.0])[0][0] == pytest.approx(1.0)


@pytest.mark.parametrize("src", [
    "__import__('os')",
    "x.__class__",
    "open('f')",
    "lambda: 1",
    "[1,2]",
    "x if y else 0",
    "unknown_name",
    "x @ y",
])
def test_rejects_non_whitelisted(src):
    with pytest.raises(ExpressionError):
        f = compile_expression(src, ["x", "y"])
        f([1.0, 2.0])


def test_rejects_bad_syntax():
    with pytest.raises(ExpressionError):
        compile_expression("1 +", ["x"])
