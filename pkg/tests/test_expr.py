import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lambdaode.algebra import preset
from lambdaode.expr import ExprError, algebra_function, module_function, rhs_function
from lambdaode.module import coordinatewise, regular

DUAL = regular(preset("dual_numbers"))
T = np.array([0.0, 0.5, 1.0])


def test_algebra_valued_expression():
    np.testing.assert_allclose(algebra_function("1 + x*eps", DUAL)(T), [[1, 0], [1, 0.5], [1, 1]])


def test_module_valued_expression():
    np.testing.assert_allclose(module_function("2*e1 - x*e2", DUAL)(T), [[2, 0], [2, -0.5], [2, -1]])


def test_algebra_element_acts_on_module_element():
    # eps . e1 = e2 in the regular dual module
    np.testing.assert_allclose(module_function("eps*e1", DUAL)(T), np.tile([0.0, 1.0], (3, 1)))


def test_rhs_uses_the_unknown():
    G = rhs_function("-eps*f", DUAL)
    f = np.tile([1.0, 2.0], (3, 1))
    np.testing.assert_allclose(G(T, f), np.tile([0.0, -1.0], (3, 1)))


def test_product_of_unknowns_only_in_one_dimension():
    G = rhs_function("-f*f", regular(preset("reals")))
    np.testing.assert_allclose(G(T, np.full((3, 1), 2.0)), np.full((3, 1), -4.0))
    with pytest.raises(ExprError):
        rhs_function("f*f", DUAL)(T, np.ones((3, 2)))


def test_scalar_functions_and_constants():
    V = coordinatewise(preset("product", 3))
    a = algebra_function("(1+x)*p1 + 2*p2 + cos(x)*p3", V)(T)
    np.testing.assert_allclose(a, np.column_stack([1 + T, 2 + 0 * T, np.cos(T)]))
    np.testing.assert_allclose(module_function("exp(-pi*x)*e1", V)(T)[:, 0], np.exp(-np.pi * T))


def test_complex_literals_on_complex_algebra():
    C = regular(preset("complex_over_reals"))
    np.testing.assert_allclose(algebra_function("1 + 2*i", C)(T), np.tile([1.0, 2.0], (3, 1)))


@pytest.mark.parametrize("src", [
    '__import__("os")', "x.real", "lambda: 1", "q", "e3", "sin(eps)", "e1*e2", "e1 + eps", "f", "[1, 2]", "",
])
def test_rejected_expressions(src):
    with pytest.raises(ExprError):
        module_function(src, DUAL)(T)


def test_wrong_kind_for_context_is_rejected():
    with pytest.raises(ExprError):
        algebra_function("e1", DUAL)(T)


@settings(max_examples=30, deadline=None)
@given(a=st.floats(-5, 5), b=st.floats(-5, 5))
def test_arithmetic_matches_numpy(a, b):
    got = algebra_function(f"({a!r})*x + ({b!r})*x**2 + eps", DUAL)(T)
    np.testing.assert_allclose(got[:, 0], a * T + b * T ** 2, atol=1e-12)
    np.testing.assert_allclose(got[:, 1], 1.0)
