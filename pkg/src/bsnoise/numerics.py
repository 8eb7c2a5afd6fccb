"""Log-domain complex arithmetic, Hermite polynomials and squeezed-coherent
Fock amplitudes.

Magnitudes of ``H_n`` and of the unnormalized amplitudes ``f_n`` grow like
``sqrt(n!)`` and overflow double precision well before ``n = 1000``.  Every
quantity here is therefore carried as a natural logarithm of the modulus plus
a phase.  Internally the pair is packed into one Python/numpy complex number
``log_mag + 1j * phase`` (a "complex log"), which makes products additions and
keeps the vectorised paths cheap; :class:`LogComplex` is the public scalar
form.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.special import gammaln

__all__ = [
    "COHERENT_LIMIT_R",
    "CoherentParam",
    "LogComplex",
    "SqueezeParam",
    "fock_amplitudes",
    "fock_coeff",
    "fock_logs",
    "hermite_logs",
    "hermite_seq",
    "logc_mul",
    "logc_sum",
    "normalize_phase",
]

# Below this squeezing factor the coherent limit of f_n is used: the general
# expression is 0/0 at r = 0.
COHERENT_LIMIT_R = 1e-8

_NEG_INF = float("-inf")


def normalize_phase(phase: float) -> float:
    """Map an angle into (-pi, pi]."""
    wrapped = math.pi - math.fmod(math.pi - phase, 2.0 * math.pi)
    if wrapped > math.pi:
        wrapped -= 2.0 * math.pi
    elif wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


@dataclass(frozen=True)
class LogComplex:
    """Complex number ``exp(log_mag) * exp(1j * phase)``.

    ``log_mag = -inf`` encodes an exact zero; its phase is then 0.
    """

    log_mag: float
    phase: float = 0.0

    def __post_init__(self):
        if math.isnan(self.log_mag) or math.isnan(self.phase):
            raise ValueError("LogComplex components must not be NaN")
        if self.log_mag == _NEG_INF:
            object.__setattr__(self, "phase", 0.0)
        else:
            object.__setattr__(self, "phase", normalize_phase(self.phase))

    @classmethod
    def zero(cls) -> "LogComplex":
        return cls(_NEG_INF, 0.0)

    @classmethod
    def from_complex(cls, z: complex) -> "LogComplex":
        if z == 0:
            return cls.zero()
        return cls(math.log(abs(z)), cmath.phase(z))

    @classmethod
    def from_log(cls, w: complex) -> "LogComplex":
        """Build from a packed complex log ``log|z| + 1j*arg z``."""
        w = complex(w)
        if w.real == _NEG_INF:
            return cls.zero()
        return cls(w.real, w.imag)

    @property
    def is_zero(self) -> bool:
        return self.log_mag == _NEG_INF

    def to_log(self) -> complex:
        return complex(self.log_mag, self.phase)

    def to_complex(self) -> complex:
        if self.is_zero:
            return 0j
        return cmath.rect(math.exp(self.log_mag), self.phase)

    def __mul__(self, other: "LogComplex") -> "LogComplex":
        return logc_mul(self, other)

    def __abs__(self) -> float:
        return 0.0 if self.is_zero else math.exp(self.log_mag)


@dataclass(frozen=True)
class SqueezeParam:
    """Squeezing parameter ``zeta = r * exp(1j * theta)``."""

    r: float
    theta: float = 0.0

    def __post_init__(self):
        if not self.r >= 0.0:
            raise ValueError(f"squeezing factor must be >= 0, got {self.r!r}")
        object.__setattr__(self, "theta", normalize_phase(self.theta))

    @classmethod
    def from_signed(cls, sigma: float, theta: float) -> "SqueezeParam":
        """Squeezing by ``sigma * exp(1j*theta)`` with a possibly negative sigma."""
        if sigma < 0.0:
            return cls(-sigma, theta + math.pi)
        return cls(sigma, theta)

    @property
    def zeta(self) -> complex:
        return cmath.rect(self.r, self.theta)


@dataclass(frozen=True)
class CoherentParam:
    """Coherent amplitude ``alpha = mag * exp(1j * phase)``."""

    mag: float
    phase: float = 0.0

    def __post_init__(self):
        if not self.mag >= 0.0:
            raise ValueError(f"coherent amplitude modulus must be >= 0, got {self.mag!r}")

    @classmethod
    def from_complex(cls, alpha: complex) -> "CoherentParam":
        return cls(abs(alpha), cmath.phase(alpha))

    @property
    def alpha(self) -> complex:
        return cmath.rect(self.mag, self.phase)

    @property
    def mean_photons(self) -> float:
        return self.mag * self.mag


def logc_mul(a: LogComplex, b: LogComplex) -> LogComplex:
    if a.is_zero or b.is_zero:
        return LogComplex.zero()
    return LogComplex(a.log_mag + b.log_mag, a.phase + b.phase)


def logc_sum(terms: Iterable[LogComplex]) -> LogComplex:
    """Sum complex numbers given in log form.

    The largest modulus is factored out before exponentiating, and the scaled
    real and imaginary parts are accumulated with :func:`math.fsum`, so the
    result does not depend on the order of ``terms``.  A sum that cancels to
    within rounding of its largest term is returned as exact zero.
    """
    terms = [t for t in terms if not t.is_zero]
    if not terms:
        return LogComplex.zero()
    top = max(t.log_mag for t in terms)
    re = []
    im = []
    for t in terms:
        scale = math.exp(t.log_mag - top)
        re.append(scale * math.cos(t.phase))
        im.append(scale * math.sin(t.phase))
    s = complex(math.fsum(re), math.fsum(im))
    if abs(s) <= 4.0 * len(terms) * np.finfo(float).eps:
        return LogComplex.zero()
    return LogComplex(top + math.log(abs(s)), cmath.phase(s))


def _log(z: complex) -> complex:
    return complex(_NEG_INF, 0.0) if z == 0 else cmath.log(z)


def _lse2(a: complex, b: complex) -> complex:
    """log(exp(a) + exp(b)) for packed complex logs."""
    if a.real == _NEG_INF:
        return b
    if b.real == _NEG_INF:
        return a
    top = max(a.real, b.real)
    s = cmath.exp(a - top) + cmath.exp(b - top)
    if s == 0:
        return complex(_NEG_INF, 0.0)
    return top + cmath.log(s)


def hermite_logs(x: complex, n_max: int) -> np.ndarray:
    """Packed complex logs of ``H_0(x) .. H_{n_max}(x)`` (physicists' Hermite)."""
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    x = complex(x)
    out = np.empty(n_max + 1, dtype=complex)
    out[0] = 0j
    if n_max == 0:
        return out
    log2x = _log(2.0 * x)
    out[1] = log2x
    for n in range(1, n_max):
        t1 = log2x + out[n] if log2x.real != _NEG_INF else complex(_NEG_INF, 0.0)
        t2 = complex(math.log(2.0 * n), math.pi) + out[n - 1]
        out[n + 1] = _lse2(t1, t2)
    return out


def hermite_seq(x: complex, n_max: int) -> list[LogComplex]:
    """``H_0(x) .. H_{n_max}(x)`` via the three-term recurrence in log form."""
    return [LogComplex.from_log(w) for w in hermite_logs(x, n_max)]


def fock_logs(zeta: SqueezeParam, beta: complex, n_max: int) -> np.ndarray:
    """Packed complex logs of ``f_0 .. f_{n_max}``.

    The state ``S(zeta) D(beta)|0>`` has Fock amplitude ``f_n / sqrt(n!)``
    at level ``n``.
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    beta = complex(beta)
    n = np.arange(n_max + 1)
    r, theta = zeta.r, zeta.theta
    if r < COHERENT_LIMIT_R:
        # f_n -> beta**n * exp(-|beta|^2 / 2)
        lb = _log(beta)
        out = np.full(n_max + 1, complex(_NEG_INF, 0.0))
        out[0] = complex(-0.5 * abs(beta) ** 2, 0.0)
        if lb.real != _NEG_INF:
            out = n * lb + complex(-0.5 * abs(beta) ** 2, 0.0)
        return out
    t = math.tanh(r)
    x = beta * cmath.exp(-0.5j * theta) / math.sqrt(math.sinh(2.0 * r))
    logs_h = hermite_logs(x, n_max)
    # (e^{i theta} tanh r)^{n/2} on the principal branch, fixed by theta
    power = 0.5 * n * complex(math.log(t), theta)
    gauss = -0.5 * (abs(beta) ** 2 - cmath.exp(-1j * theta) * beta * beta * t)
    const = gauss - 0.5 * math.log(math.cosh(r))
    out = power - 0.5 * n * math.log(2.0) + const + logs_h
    out[np.isneginf(logs_h.real)] = complex(_NEG_INF, 0.0)
    return out


def fock_coeff(zeta: SqueezeParam, beta: complex, n_max: int) -> list[LogComplex]:
    """``f_0 .. f_{n_max}`` as :class:`LogComplex` values."""
    return [LogComplex.from_log(w) for w in fock_logs(zeta, beta, n_max)]


def fock_amplitudes(zeta: SqueezeParam, beta: complex, n_max: int) -> np.ndarray:
    """Normalized Fock amplitudes ``<n|S(zeta) D(beta)|0>`` for n <= n_max."""
    logs = fock_logs(zeta, beta, n_max)
    logs = logs - 0.5 * gammaln(np.arange(n_max + 1) + 1.0)
    return _exp_logs(logs)


def _exp_logs(logs: np.ndarray) -> np.ndarray:
    out = np.zeros(logs.shape, dtype=complex)
    live = np.isfinite(logs.real)
    out[live] = np.exp(logs[live])
    return out


def log_factorials(n_max: int, dtype=float) -> np.ndarray:
    """``log(k!)`` for k = 0..n_max, accumulated in ``dtype``."""
    logs = np.zeros(n_max + 1, dtype=dtype)
    if n_max > 0:
        logs[1:] = np.cumsum(np.log(np.arange(1, n_max + 1, dtype=dtype)))
    return logs


def log_terms_sum(logs: Sequence[complex]) -> complex:
    """Vectorised companion of :func:`logc_sum` on packed complex logs."""
    logs = np.asarray(logs, dtype=complex).ravel()
    live = logs[np.isfinite(logs.real)]
    if live.size == 0:
        return complex(_NEG_INF, 0.0)
    top = live.real.max()
    s = np.exp(live - top)
    total = complex(math.fsum(s.real), math.fsum(s.imag))
    if abs(total) <= 4.0 * live.size * np.finfo(float).eps:
        return complex(_NEG_INF, 0.0)
    return top + cmath.log(total)
