import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from derham_range.mobius import (
    DegenerateMatrixError,
    Matrix2,
    PoleError,
    apply,
    compose,
    derivative,
    fixed_points,
    generators,
    transpose,
    x_param,
)

SQRT3 = math.sqrt(3)


def frac_generators(u2: Fraction, x: Fraction):
    """Generators in exact arithmetic from u^2 and x_u."""
    q = u2 * x * x
    return (x, Fraction(0), -q, Fraction(1)), (Fraction(0), x, -q, 1 - q)


def frac_apply(A, z):
    a, b, c, d = A
    return (a * z + b) / (c * z + d)


@pytest.mark.parametrize("u, expected", [(1.0, 0.5), (SQRT3, 1 / 3), (0.0, 1.0)])
def test_x_param_values(u, expected):
    assert x_param(u) == pytest.approx(expected, abs=1e-15)


def test_x_param_root_relation_on_log_grid():
    for u in np.logspace(-3, 3, 61):
        x = x_param(u)
        assert 0 < x <= 1
        assert abs(2 * u * u * x * x + x - 1) <= 1e-12


def test_x_param_rejects_negative():
    with pytest.raises(ValueError):
        x_param(-0.1)


def test_generators_u1():
    A0, A1 = generators(1.0)
    assert A0.entries() == (0.5, 0.0, -0.25, 1.0)
    assert A1.entries() == (0.0, 0.5, -0.25, 0.75)


def test_generators_sqrt3_right_map_is_one_over_two_minus_z():
    A1 = generators(SQRT3)[1]
    for z in (0.0, 0.25, 0.5, 0.9, 1.0):
        assert apply(A1, z) == pytest.approx(1 / (2 - z), abs=1e-15)


def test_generators_reject_zero():
    with pytest.raises(ValueError, match="point mass"):
        generators(0.0)


@pytest.mark.parametrize("u", [0.01, 0.3, 1.0, 1.7, 2.0, 10.0])
def test_join_condition(u):
    A0, A1 = generators(u)
    x = x_param(u)
    join = x / (1 - u * u * x * x)
    assert apply(A0, 1.0) == pytest.approx(join, rel=1e-15)
    assert apply(A1, 0.0) == pytest.approx(join, rel=1e-15)


@pytest.mark.parametrize("u", [0.01, 0.3, 1.0, SQRT3, 2.0])
def test_maps_send_unit_interval_into_itself_increasingly(u):
    A0, A1 = generators(u)
    grid = np.linspace(0, 1, 201)
    for A in (A0, A1):
        vals = [apply(A, z) for z in grid]
        # raw matrix form is exact only up to an ulp
        assert all(-1e-15 <= v <= 1 + 1e-15 for v in vals)
        assert all(derivative(A, z) > 0 for z in grid)
    assert apply(A0, 0.0) == 0.0
    assert apply(A1, 1.0) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("u", [0.01, 1.0, 2.0, 10.0, 1000.0])
def test_complement_form_steps_stay_in_unit_interval(u):
    # the evaluators step (z, 1 - z) through positive-term formulas
    from derham_range.derham_cdf import _step

    x = x_param(u)
    q = u * u * x * x
    grid = np.linspace(0, 1, 201)
    for bit in (0, 1):
        z, w = _step(x, q, bit, grid, 1 - grid)
        assert np.all((0 <= z) & (z <= 1))
        assert np.all((0 <= w) & (w <= 1 + 1e-15))
        assert np.all(np.diff(z) >= 0)
        assert np.allclose(z + w, 1, atol=1e-15)
    assert _step(x, q, 0, 0.0, 1.0) == pytest.approx((0.0, 1.0), abs=1e-15)
    assert _step(x, q, 1, 1.0, 0.0) == (1.0, 0.0)


def test_apply_examples():
    A0, _ = generators(1.0)
    assert apply(A0, 1.0) == pytest.approx(2 / 3, abs=1e-15)
    assert apply(generators(SQRT3)[1], 0.0) == pytest.approx(0.5, abs=1e-15)
    assert apply(Matrix2.identity(), 0.37) == 0.37


def test_apply_pole():
    A = Matrix2(1.0, 0.0, 1.0, -0.5)
    with pytest.raises(PoleError) as info:
        apply(A, 0.5)
    assert info.value.z == 0.5


def test_zero_determinant_rejected():
    with pytest.raises(ValueError):
        Matrix2(1.0, 2.0, 2.0, 4.0)
    with pytest.raises(ValueError):
        Matrix2(float("nan"), 0.0, 0.0, 1.0)


def test_compose_examples():
    A0, A1 = generators(1.0)
    assert compose(A0, Matrix2.identity()) == A0
    AA = compose(A0, A0)
    assert apply(AA, 0.0) == 0.0
    assert apply(AA, 1.0) == pytest.approx(2 / 5, abs=1e-15)
    assert apply(compose(A1, A0), 1.0) == pytest.approx(6 / 7, abs=1e-15)
    # exact-arithmetic oracle for the same three values
    F0, F1 = frac_generators(Fraction(1), Fraction(1, 2))
    assert frac_apply(F0, frac_apply(F0, Fraction(1))) == Fraction(2, 5)
    assert frac_apply(F1, frac_apply(F0, Fraction(1))) == Fraction(6, 7)


@settings(max_examples=60, deadline=None)
@given(
    u=st.floats(0.05, 5.0),
    word=st.lists(st.integers(0, 1), min_size=1, max_size=20),
)
def test_compose_is_functional_composition(u, word):
    gens = generators(u)
    P = Matrix2.identity()
    for bit in word:
        P = compose(P, gens[bit])
    for z in (0.0, 0.37, 1.0):
        v = z
        for bit in reversed(word):
            v = apply(gens[bit], v)
        assert apply(P, z) == pytest.approx(v, abs=1e-12)


def test_transpose():
    S = Matrix2(1.0, 2.0, 2.0, 3.0)
    assert transpose(S) == S
    assert transpose(generators(1.0)[0]).entries() == (0.5, -0.25, 0.0, 1.0)
    A = Matrix2(1.0, 2.0, 3.0, 5.0)
    assert transpose(transpose(A)) == A


def test_derivative_examples():
    assert derivative(Matrix2.identity(), 0.3) == 1.0
    A1 = generators(SQRT3)[1]
    assert derivative(A1, 0.0) == pytest.approx(0.25, abs=1e-15)
    assert derivative(A1, 1.0) == pytest.approx(1.0, abs=1e-14)


def test_derivative_matches_finite_difference():
    A0, A1 = generators(2.0)
    h = 1e-6
    for A in (A0, A1):
        for z in (0.1, 0.5, 0.9):
            fd = (apply(A, z + h) - apply(A, z - h)) / (2 * h)
            assert derivative(A, z) == pytest.approx(fd, rel=1e-8)


def test_right_map_contraction_threshold():
    grid = np.linspace(0, 1, 501)
    for u in (0.2, 1.0, 1.5, 1.73):
        A1 = generators(u)[1]
        assert max(derivative(A1, z) for z in grid) < 1
    for u in (1.74, 2.0, 5.0):
        assert derivative(generators(u)[1], 1.0) > 1


@pytest.mark.parametrize("u", [0.3, 1.0, 2.0, 5.0])
def test_right_map_fixed_points(u):
    x = x_param(u)
    other = 1 / (u * u * x)
    roots = fixed_points(generators(u)[1])
    assert roots == pytest.approx(sorted([1.0, other]), abs=1e-12)


def test_fixed_points_examples():
    assert fixed_points(generators(1.0)[1]) == pytest.approx((1.0, 2.0), abs=1e-14)
    assert fixed_points(generators(SQRT3)[1]) == pytest.approx((1.0, 1.0), abs=1e-7)
    assert fixed_points(Matrix2(0.0, -1.0, 1.0, 0.0)) == ()  # rotation, no real fixed point
    with pytest.raises(DegenerateMatrixError):
        fixed_points(Matrix2(2.0, 0.0, 0.0, 2.0))


def test_mpmath_entries_share_the_code():
    import mpmath

    with mpmath.workdps(40):
        A0, A1 = generators(mpmath.mpf(1))
        assert apply(A0, mpmath.mpf(1)) == mpmath.mpf(2) / 3
        assert isinstance(apply(A1, mpmath.mpf(0)), mpmath.mpf)
