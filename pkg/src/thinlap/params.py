"""Exponent and constant algebra for the weight pair (a, n).

The operator under study is div(|y|^a grad u) in R^d = R^{d-n} x R^n,
whose coefficient degenerates (a > 0) or blows up (a < 0) on the thin
manifold {|y| = 0} of codimension n >= 2.  Everything the rest of the
package needs about the parameters is a closed-form function of (a, n)
and lives here: the capacity regime of the thin set, the fractional
order s = (2-a-n)/2, the ratio-equation exponent b = 4-a-2n, the
regularity cap alpha_star, and the Dirichlet-to-Neumann constant
d_{a,n}.  All functions are pure and deterministic; recomputing any
derived quantity yields bit-identical values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import RegimeError


class Regime(Enum):
    """Capacity regime of the thin manifold for the weight |y|^a.

    The weighted capacity of {|y|=0} is infinite for a+n <= 0 (solutions
    are forced to vanish there), positive and locally finite in the
    mid-range 0 < a+n < 2 (both Dirichlet and flux data can be imposed),
    and zero for a+n >= 2 (no boundary condition can be imposed at all).
    """

    SUPERSINGULAR = "supersingular"
    MID_RANGE = "mid-range"
    SUPERDEGENERATE = "superdegenerate"


def _check_codimension(n: int) -> None:
    if int(n) != n or n < 2:
        raise RegimeError(f"codimension n must be an integer >= 2, got {n!r}")


def classify_regime(a: float, n: int) -> Regime:
    """Classify (a, n) by the sum a+n.

    Thresholds are compared exactly: a+n = 0 is supersingular and
    a+n = 2 is superdegenerate; the mid-range is the open interval.
    """
    _check_codimension(n)
    total = a + n
    if total <= 0:
        return Regime.SUPERSINGULAR
    if total >= 2:
        return Regime.SUPERDEGENERATE
    return Regime.MID_RANGE


def _require_midrange(a: float, n: int, what: str) -> None:
    regime = classify_regime(a, n)
    if regime is not Regime.MID_RANGE:
        raise RegimeError(
            f"{what} requires the mid-range regime 0 < a+n < 2; "
            f"got a+n = {a + n:g} ({regime.value})"
        )


def alpha_star(a: float, n: int) -> float:
    """Homogeneity exponent capping the regularity of conormal solutions.

    Positive root of alpha^2 - (2-a-n) alpha - (n-1) = 0,

        alpha_* = ((2-a-n) + sqrt((2-a-n)^2 + 4(n-1))) / 2,

    realized by the lowest non-axisymmetric homogeneous solution
    |y|^{alpha_*-1} y_j.  Always > 0 since n >= 2.
    """
    _check_codimension(n)
    q = 2.0 - a - n
    return 0.5 * (q + math.sqrt(q * q + 4.0 * (n - 1)))


def fractional_order(a: float, n: int) -> float:
    """Fractional order s = (2-a-n)/2 in (0,1); mid-range only."""
    _require_midrange(a, n, "fractional order s")
    return 0.5 * (2.0 - a - n)


def harnack_exponent_b(a: float, n: int) -> float:
    """Weight exponent b = 4-a-2n of the equation solved by u / |y|^{2-a-n}.

    Defined for a+n < 2 (where the quotient construction makes sense);
    note b+n = 4-a-n > 2, so the ratio equation is always superdegenerate.
    """
    _check_codimension(n)
    if a + n >= 2:
        raise RegimeError(
            f"ratio exponent b requires a+n < 2; got a+n = {a + n:g} "
            f"({classify_regime(a, n).value})"
        )
    return 4.0 - a - 2.0 * n


def extension_constant(a: float, n: int) -> float:
    """Dirichlet-to-Neumann normalization d_{a,n} for the extension.

        d_{a,n} = 2^{a+n-1} Gamma((a+n)/2) / Gamma((2-a-n)/2),

    which under s = (2-a-n)/2 equals the codimension-one constant
    2^{1-2s} Gamma(1-s)/Gamma(s).  Mid-range only; always positive.
    """
    _require_midrange(a, n, "extension constant d_{a,n}")
    total = a + n
    return (
        2.0 ** (total - 1.0)
        * lanczos_gamma(0.5 * total)
        / lanczos_gamma(0.5 * (2.0 - total))
    )


def dirichlet_sharpness_holds(a: float, n: int) -> bool:
    """Whether n-1 > 2(2-a-n)^2, i.e. alpha_star(b, n) > 2-a-n.

    When true, the Hoelder regularity of the quotient u/|y|^{2-a-n}
    transfers the sharp C^{2-a-n} regularity to Dirichlet solutions
    themselves.  Requires a+n < 2.
    """
    _check_codimension(n)
    if a + n >= 2:
        raise RegimeError(
            f"Dirichlet sharpness test requires a+n < 2; got a+n = {a + n:g}"
        )
    q = 2.0 - a - n
    return n - 1 > 2.0 * q * q


def sphere_area(n: int) -> float:
    """Surface measure |S^{n-1}| = 2 pi^{n/2} / Gamma(n/2)."""
    _check_codimension(n)
    return 2.0 * math.pi ** (0.5 * n) / lanczos_gamma(0.5 * n)


# Lanczos approximation with g = 7 and 9 coefficients; accurate to about
# 15 significant digits on the positive real axis, which comfortably
# exceeds the 12 digits the constants here require.
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def lanczos_gamma(x: float) -> float:
    """Gamma function via the Lanczos series, with reflection for x < 1/2.

    The only special function the package needs.  Poles (x a non-positive
    integer) raise instead of returning inf.
    """
    if x <= 0 and x == math.floor(x):
        raise ValueError(f"gamma pole at non-positive integer x = {x:g}")
    if x < 0.5:
        # Gamma(x) Gamma(1-x) = pi / sin(pi x)
        return math.pi / (math.sin(math.pi * x) * lanczos_gamma(1.0 - x))
    x -= 1.0
    series = _LANCZOS_COEF[0]
    for i in range(1, len(_LANCZOS_COEF)):
        series += _LANCZOS_COEF[i] / (x + i)
    t = x + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * t ** (x + 0.5) * math.exp(-t) * series


@dataclass(frozen=True)
class ProblemParams:
    """The triple (d, n, a) plus every derived scalar.

    d is the ambient dimension, n the codimension of the thin manifold
    (2 <= n <= d), and a the weight exponent.  Derived quantities are
    exposed as properties so they can never drift out of sync with the
    triple.
    """

    d: int
    n: int
    a: float

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise RegimeError(f"dimension d must be an integer >= 2, got {self.d!r}")
        if int(self.n) != self.n or not (2 <= self.n <= self.d):
            raise RegimeError(
                f"codimension n must satisfy 2 <= n <= d = {self.d}, got {self.n!r}"
            )
        if not math.isfinite(self.a):
            raise RegimeError(f"weight exponent a must be finite, got {self.a!r}")

    @property
    def x_dims(self) -> int:
        """Dimension d-n of the thin manifold."""
        return self.d - self.n

    @property
    def a_plus_n(self) -> float:
        return self.a + self.n

    @property
    def regime(self) -> Regime:
        return classify_regime(self.a, self.n)

    @property
    def reduced_weight_exponent(self) -> float:
        """Exponent a+n-1 of the reduced radial weight r^{a+n-1}."""
        return self.a + self.n - 1.0

    @property
    def s(self) -> float:
        return fractional_order(self.a, self.n)

    @property
    def b(self) -> float:
        return harnack_exponent_b(self.a, self.n)

    @property
    def alpha_star(self) -> float:
        return alpha_star(self.a, self.n)

    @property
    def alpha_star_ratio(self) -> float:
        """Regularity cap alpha_star(b, n) of the quotient equation."""
        return alpha_star(harnack_exponent_b(self.a, self.n), self.n)

    @property
    def extension_constant(self) -> float:
        return extension_constant(self.a, self.n)

    @property
    def sharp_dirichlet(self) -> bool:
        return dirichlet_sharpness_holds(self.a, self.n)

    @property
    def omega_n(self) -> float:
        return sphere_area(self.n)

    @property
    def characteristic_exponent(self) -> float:
        """Exponent 2-a-n of the model solution |y|^{2-a-n}."""
        return 2.0 - self.a - self.n
