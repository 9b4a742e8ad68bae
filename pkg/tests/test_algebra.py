import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lambdaode.algebra import PRESET_NAMES, FiniteDimAlgebra, check_axioms, preset, random_elements


def all_presets():
    return [preset(n, 3 if n == "product" else None) for n in PRESET_NAMES]


@pytest.mark.parametrize("A", all_presets(), ids=lambda A: A.name)
def test_presets_satisfy_axioms(A):
    rep = check_axioms(A)
    assert rep.passed, rep.to_dict()
    assert rep["associativity"].violation <= 1e-12


def test_dual_numbers_products():
    A = preset("dual_numbers")
    eps = A.basis(1)
    np.testing.assert_array_equal(A.multiply(eps, eps), [0.0, 0.0])
    # (a + b eps)(c + d eps) = ac + (ad + bc) eps
    np.testing.assert_allclose(A.multiply([2.0, 3.0], [5.0, 7.0]), [10.0, 29.0])
    assert A.sigma_of([2.0, 3.0]) == 2.0


def test_complex_over_reals_multiplication_matches_python_complex():
    A = preset("complex_over_reals")
    z, w = 1.5 - 2.0j, -0.25 + 3.0j
    got = A.multiply([z.real, z.imag], [w.real, w.imag])
    assert complex(*got) == pytest.approx(z * w)
    # sigma is the identification with C and is multiplicative
    assert A.sigma_of([z.real, z.imag]) == pytest.approx(z)


def test_product_algebra_is_componentwise():
    A = preset("product", 4)
    x, y = np.arange(1.0, 5.0), np.array([2.0, -1.0, 0.5, 3.0])
    np.testing.assert_allclose(A.multiply(x, y), x * y)
    np.testing.assert_allclose(A.unit, np.ones(4))
    assert preset("product(2)").dim == 2


def test_p_norm_default_is_l1():
    A = preset("dual_numbers")
    assert A.p_norm([3.0, -4.0]) == pytest.approx(7.0)
    assert preset("dual_numbers", p=2.0).p_norm([3.0, -4.0]) == pytest.approx(5.0)


def test_left_matrix_agrees_with_multiply():
    rng = np.random.default_rng(3)
    for A in all_presets():
        x, y = random_elements(A, 2, rng)
        np.testing.assert_allclose(A.left_matrix(x) @ y, A.multiply(x, y), atol=1e-14)


def test_broken_structure_is_reported():
    # a 2-dim algebra with e1 e1 = e2 only: no unit, not associative-unital
    c = np.zeros((2, 2, 2))
    c[0, 0, 1] = 1.0
    A = FiniteDimAlgebra(c, np.array([1.0, 0.0]), np.array([1.0, 0.0]))
    rep = check_axioms(A)
    assert not rep.passed
    assert not rep["unit"].passed


def test_non_multiplicative_sigma_is_reported():
    A = preset("dual_numbers")
    bad = FiniteDimAlgebra(A.structure, A.unit, np.array([1.0, 1.0]))
    rep = check_axioms(bad)
    assert not rep["sigma_multiplicative"].passed


def test_shape_validation():
    with pytest.raises(ValueError):
        FiniteDimAlgebra(np.zeros((2, 2, 3)), np.ones(2), np.ones(2))
    with pytest.raises(ValueError):
        preset("octonions")


@settings(max_examples=40, deadline=None)
@given(name=st.sampled_from(list(PRESET_NAMES)), seed=st.integers(0, 2**32 - 1))
def test_associativity_unit_and_sigma_hom_on_random_elements(name, seed):
    A = preset(name, 3 if name == "product" else None)
    rng = np.random.default_rng(seed)
    x, y, z = random_elements(A, 3, rng)
    lhs = A.multiply(A.multiply(x, y), z)
    rhs = A.multiply(x, A.multiply(y, z))
    np.testing.assert_allclose(lhs, rhs, atol=1e-12 * (1 + np.abs(lhs).max()))
    np.testing.assert_allclose(A.multiply(A.unit, x), x, atol=1e-14)
    np.testing.assert_allclose(A.multiply(x, A.unit), x, atol=1e-14)
    assert A.sigma_of(A.multiply(x, y)) == pytest.approx(A.sigma_of(x) * A.sigma_of(y), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_p1_norm_is_submultiplicative_for_dual_numbers(seed):
    A = preset("dual_numbers")
    x, y = random_elements(A, 2, np.random.default_rng(seed))
    assert A.p_norm(A.multiply(x, y)) <= A.p_norm(x) * A.p_norm(y) + 1e-12
