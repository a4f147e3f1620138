import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thinlap import (
    ProblemParams,
    Regime,
    RegimeError,
    alpha_star,
    classify_regime,
    dirichlet_sharpness_holds,
    extension_constant,
    fractional_order,
    harnack_exponent_b,
    lanczos_gamma,
    sphere_area,
)

GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0
SQRT13_ROOT = (1.0 + math.sqrt(13.0)) / 2.0


def test_regime_classification():
    assert classify_regime(-1.0, 2) is Regime.MID_RANGE
    assert classify_regime(1.0, 2) is Regime.SUPERDEGENERATE
    assert classify_regime(-2.0, 2) is Regime.SUPERSINGULAR
    # boundaries land on the closed sides
    assert classify_regime(0.0, 2) is Regime.SUPERDEGENERATE
    assert classify_regime(-3.0, 3) is Regime.SUPERSINGULAR


def test_regime_requires_codimension_two():
    with pytest.raises(RegimeError):
        classify_regime(0.0, 1)


def test_gamma_matches_stdlib():
    xs = np.concatenate([np.linspace(0.05, 0.95, 19), np.linspace(1.0, 25.0, 49)])
    for x in xs:
        assert lanczos_gamma(float(x)) == pytest.approx(math.gamma(float(x)), rel=1e-13)


def test_gamma_pole_raises():
    with pytest.raises(ValueError):
        lanczos_gamma(0.0)
    with pytest.raises(ValueError):
        lanczos_gamma(-2.0)


def test_alpha_star_reference_values():
    for n in (2, 3, 4, 5):
        assert alpha_star(0.0, n) == pytest.approx(1.0, abs=1e-12)
    assert alpha_star(-1.0, 2) == pytest.approx(GOLDEN, abs=1e-12)
    assert alpha_star(-3.0, 4) == pytest.approx(SQRT13_ROOT, abs=1e-12)


def test_alpha_star_is_positive_quadratic_root():
    # independent oracle: alpha_star is the largest root of
    # t^2 - (2-a-n) t - (n-1) = 0
    rng = np.random.default_rng(42)
    for _ in range(50):
        a = float(rng.uniform(-6.0, 4.0))
        n = int(rng.integers(2, 7))
        roots = np.roots([1.0, -(2.0 - a - n), -(n - 1.0)])
        assert alpha_star(a, n) == pytest.approx(float(np.max(roots.real)), rel=1e-12)
        assert alpha_star(a, n) > 0.0


def test_alpha_star_decreasing_in_a():
    for n in (2, 3, 4, 5, 6):
        grid = np.arange(-6.0, 4.0, 0.125)
        vals = [alpha_star(float(a), n) for a in grid]
        assert all(y < x for x, y in zip(vals, vals[1:]))


def test_alpha_star_exceeds_gradient_threshold_in_low_midrange():
    # needed so gradient estimates close below the cap when a+n < 1
    for total in np.arange(0.05, 1.0, 0.05):
        for n in (2, 3, 4):
            a = float(total - n)
            assert alpha_star(a, n) > 1.0 - a - n


def test_fractional_order():
    assert fractional_order(-1.0, 2) == pytest.approx(0.5, abs=1e-15)
    assert fractional_order(-0.5, 2) == pytest.approx(0.25, abs=1e-15)
    with pytest.raises(RegimeError, match="superdegenerate"):
        fractional_order(0.0, 2)
    with pytest.raises(RegimeError, match="supersingular"):
        fractional_order(-2.0, 2)


def test_harnack_exponent():
    assert harnack_exponent_b(-1.0, 2) == pytest.approx(1.0, abs=1e-15)
    assert harnack_exponent_b(-3.0, 4) == pytest.approx(-1.0, abs=1e-15)
    with pytest.raises(RegimeError):
        harnack_exponent_b(1.0, 2)
    # b + n = 4 - a - n stays above 2 on the whole domain
    rng = np.random.default_rng(3)
    for _ in range(40):
        n = int(rng.integers(2, 7))
        a = float(rng.uniform(-8.0, 2.0 - n - 1e-9))
        assert harnack_exponent_b(a, n) + n > 2.0


def test_extension_constant_values():
    assert extension_constant(-1.0, 2) == pytest.approx(1.0, abs=1e-10)
    assert extension_constant(-2.0, 3) == pytest.approx(1.0, abs=1e-10)
    # independent gamma-function oracle for a+n = 3/2
    oracle = math.sqrt(2.0) * math.gamma(0.75) / math.gamma(0.25)
    assert extension_constant(-0.5, 2) == pytest.approx(oracle, rel=1e-12)
    assert extension_constant(-0.5, 2) == pytest.approx(0.47799, abs=5e-6)
    with pytest.raises(RegimeError):
        extension_constant(0.0, 2)


def test_extension_constant_codimension_one_form():
    # 2^{a+n-1} Gamma((a+n)/2)/Gamma((2-a-n)/2) written through s
    for total in (0.25, 0.5, 1.0, 1.5, 1.75):
        s = 0.5 * (2.0 - total)
        via_s = 2.0 ** (1.0 - 2.0 * s) * math.gamma(1.0 - s) / math.gamma(s)
        assert extension_constant(total - 2.0, 2) == pytest.approx(via_s, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(
    total=st.floats(min_value=0.05, max_value=1.95),
    n1=st.integers(min_value=2, max_value=6),
    n2=st.integers(min_value=2, max_value=6),
)
def test_extension_constant_depends_on_sum_only(total, n1, n2):
    c1 = extension_constant(total - n1, n1)
    c2 = extension_constant(total - n2, n2)
    assert abs(c1 - c2) <= 1e-12 * max(1.0, abs(c1))


def test_dirichlet_sharpness_examples():
    assert dirichlet_sharpness_holds(-3.0, 4) is True
    assert dirichlet_sharpness_holds(-1.0, 2) is False
    assert dirichlet_sharpness_holds(-2.0, 3) is False
    with pytest.raises(RegimeError):
        dirichlet_sharpness_holds(1.0, 2)


def test_sharpness_equivalent_to_exponent_comparison():
    # n-1 > 2(2-a-n)^2  iff  alpha_star(b, n) > 2-a-n, quarter steps
    for n in range(2, 7):
        for a in np.arange(-6.0, 2.0, 0.25):
            a = float(a)
            if a + n >= 2:
                continue
            flag = dirichlet_sharpness_holds(a, n)
            b = harnack_exponent_b(a, n)
            assert flag == (alpha_star(b, n) > 2.0 - a - n)


def test_problem_params_validation_and_determinism():
    with pytest.raises(RegimeError):
        ProblemParams(d=3, n=1, a=0.0)
    with pytest.raises(RegimeError):
        ProblemParams(d=2, n=3, a=0.0)
    p = ProblemParams(d=3, n=2, a=-1.0)
    q = ProblemParams(d=3, n=2, a=-1.0)
    # derived scalars are pure functions of the triple
    assert p.alpha_star == q.alpha_star
    assert p.s == q.s == 0.5
    assert p.b == q.b == 1.0
    assert p.extension_constant == q.extension_constant
    assert p.x_dims == 1
    assert p.alpha_star_ratio == pytest.approx(alpha_star(1.0, 2), abs=0.0)


def test_sphere_area():
    assert sphere_area(2) == pytest.approx(2.0 * math.pi, rel=1e-14)
    assert sphere_area(3) == pytest.approx(4.0 * math.pi, rel=1e-14)
    assert sphere_area(4) == pytest.approx(2.0 * math.pi**2, rel=1e-14)
