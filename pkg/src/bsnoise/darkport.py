"""Dark-port statistics for a nearly fully reflecting splitter, gamma = pi/2 + delta.

With a strong coherent field the port-1 state reduces to a single squeezed
coherent state ``S(zeta) D(-alpha*delta*kappa)|0>``, so its photon statistics
follow from the single-mode amplitudes ``f_n`` alone.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .distribution import DEFAULT_NORM_TOL, MarginalDistribution
from .errors import GridTooSmall
from .numerics import SqueezeParam, fock_amplitudes, normalize_phase

__all__ = [
    "DarkPortParams",
    "KappaValue",
    "dark_distribution",
    "dark_moments",
    "kappa",
    "optimal_r",
    "phase_delta",
]

OPTIMAL_R_BRACKET = (0.0, 5.0)
OPTIMAL_R_TOL = 1e-8
MAX_N = 20000


@dataclass(frozen=True)
class DarkPortParams:
    """``alpha_delta_sq`` is |alpha*delta|^2; ``phi`` is the coherent phase."""

    alpha_delta_sq: float
    squeeze: SqueezeParam
    phi: float = 0.0
    delta: float = 0.0

    def __post_init__(self):
        if not self.alpha_delta_sq >= 0.0:
            raise ValueError(f"alpha_delta_sq must be >= 0, got {self.alpha_delta_sq!r}")

    @classmethod
    def from_field(cls, alpha_mag: float, delta: float, squeeze: SqueezeParam, phi: float = 0.0):
        return cls((alpha_mag * delta) ** 2, squeeze, phi, delta)

    @property
    def angle(self) -> float:
        """theta - 2 phi, the only phase the statistics depend on."""
        return self.squeeze.theta - 2.0 * self.phi

    @property
    def beta(self) -> complex:
        """Coherent argument ``-alpha*delta*kappa`` (delta > 0 branch)."""
        k = kappa(self.squeeze.r, self.angle)
        return -math.sqrt(self.alpha_delta_sq) * cmath.exp(1j * self.phi) * k.value


@dataclass(frozen=True)
class KappaValue:
    modulus: float
    phase: float

    @property
    def value(self) -> complex:
        return cmath.rect(self.modulus, self.phase)


def kappa(r: float, angle: float) -> KappaValue:
    """``cosh r + e^{i angle} sinh r`` as modulus and phase."""
    if not r >= 0.0:
        raise ValueError(f"r must be >= 0, got {r!r}")
    z = math.cosh(r) + cmath.exp(1j * angle) * math.sinh(r)
    # cos(angle) = -1 exactly gives e^{-r} with a tiny imaginary part; keep phase 0
    return KappaValue(abs(z), normalize_phase(cmath.phase(z)) if z.imag != 0 else 0.0)


def phase_delta(r: float, theta: float, phi: float) -> complex:
    """Global phase term; it drops out of every counting statistic."""
    if not r >= 0.0:
        raise ValueError(f"r must be >= 0, got {r!r}")
    return -0.5 * math.sin(theta - 2.0 * phi) * cmath.exp(-2j * phi) * math.sinh(2.0 * r)


def dark_moments(p: DarkPortParams) -> tuple[float, float]:
    """Analytic mean and variance of the dark-port photon number."""
    r = p.squeeze.r
    a = p.alpha_delta_sq
    ang = p.angle
    lam = kappa(r, ang).phase
    ch2, sh2 = math.cosh(2 * r), math.sinh(2 * r)
    k2 = ch2 + math.cos(ang) * sh2
    mean = a * k2 * (ch2 - math.cos(ang - 2 * lam) * sh2) + math.sinh(r) ** 2
    var = (
        a * k2 * (math.cosh(4 * r) - math.cos(ang - 2 * lam) * math.sinh(4 * r))
        + 2.0 * (math.sinh(r) * math.cosh(r)) ** 2
    )
    return mean, var


def _initial_n_max(p: DarkPortParams) -> int:
    mean, var = dark_moments(p)
    return max(16, int(mean + 12.0 * math.sqrt(var) + 20))


def dark_distribution(
    p: DarkPortParams,
    n_max: int | None = None,
    norm_tol: float = DEFAULT_NORM_TOL,
    *,
    grow: bool = True,
) -> MarginalDistribution:
    """Port-1 photon-number distribution.

    ``n_max=None`` picks a bound from the analytic moments.  With ``grow`` the
    bound is enlarged until the missing probability is below ``norm_tol``;
    otherwise :class:`GridTooSmall` is raised.
    """
    if not norm_tol > 0:
        raise ValueError("norm_tol must be > 0")
    n = _initial_n_max(p) if n_max is None else int(n_max)
    if n < 0:
        raise ValueError("n_max must be >= 0")
    previous = math.inf
    while True:
        probs = np.abs(fock_amplitudes(p.squeeze, p.beta, n)) ** 2
        defect = 1.0 - math.fsum(probs)
        if defect <= norm_tol:
            return MarginalDistribution.from_probs(probs, port=1)
        if not grow or n >= MAX_N or defect >= 0.5 * previous:
            # a doubling that does not halve the defect means the remainder is
            # rounding in the amplitudes, not mass above n
            raise GridTooSmall(
                f"{defect:.3e} of the dark-port probability is missing at n={n} "
                f"(tolerance {norm_tol:.1e})",
                defect=defect,
            )
        previous = defect
        n = min(MAX_N, 2 * n)


def _variance_slope(r: float, a: float) -> float:
    # derivative of a e^{-2r} + 2 sinh^2 r cosh^2 r
    return -2.0 * a * math.exp(-2.0 * r) + math.sinh(4.0 * r)


def optimal_r(alpha_delta_sq: float, *, tol: float = OPTIMAL_R_TOL) -> float:
    """Squeezing that minimizes the dark-port variance at theta = 2 phi.

    The slope of the variance is strictly increasing in r, so bisection on
    its sign change is certified.
    """
    if not alpha_delta_sq > 0:
        raise ValueError(f"alpha_delta_sq must be > 0, got {alpha_delta_sq!r}")
    lo, hi = OPTIMAL_R_BRACKET
    if _variance_slope(hi, alpha_delta_sq) <= 0:
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _variance_slope(mid, alpha_delta_sq) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
