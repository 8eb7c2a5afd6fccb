"""Disentangling coefficients of the beam-splitter squeeze generator.

The output-state generator ``r*A`` is rewritten as the ordered product

    exp(r*A) = exp(sT*t12) exp(sS*s12) exp(s1*s1_) exp(s2*s2_)

and, because the four generators close into a Lie algebra with a faithful
2x2 real representation, the coefficients follow from equating two 2x2
matrices.  The four resulting equations are solved by damped Newton iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence

__all__ = [
    "DisentangleCoeffs",
    "lhs_matrix",
    "linearized",
    "reconstruct_residual",
    "rhs_matrix",
    "solve",
]

SOLVE_TOL = 1e-12
MAX_ITER = 100
CONTINUATION_STEP = 0.1


@dataclass(frozen=True)
class DisentangleCoeffs:
    sigma1: float
    sigma2: float
    sigmaS: float
    sigmaT: float

    @classmethod
    def zero(cls) -> "DisentangleCoeffs":
        return cls(0.0, 0.0, 0.0, 0.0)

    def as_array(self) -> np.ndarray:
        return np.array([self.sigma1, self.sigma2, self.sigmaS, self.sigmaT])

    @classmethod
    def from_array(cls, x) -> "DisentangleCoeffs":
        return cls(*(float(v) + 0.0 for v in x))  # + 0.0 folds -0.0

    @property
    def entangling(self) -> bool:
        return self.sigmaS != 0.0 or self.sigmaT != 0.0

    def without_entangling(self) -> "DisentangleCoeffs":
        return DisentangleCoeffs(self.sigma1, self.sigma2, 0.0, 0.0)


def lhs_matrix(gamma: float, r: float) -> np.ndarray:
    """``exp(r*A) = I + (e^r - 1) A``; A is idempotent."""
    if r < 0:
        raise ValueError(f"r must be >= 0, got {r!r}")
    s, c = math.sin(gamma), math.cos(gamma)
    a = np.array([[s * s, -c * s], [-c * s, c * c]])
    return np.eye(2) + math.expm1(r) * a


def rhs_matrix(coeffs: DisentangleCoeffs) -> np.ndarray:
    e1, e2 = math.exp(coeffs.sigma1), math.exp(coeffs.sigma2)
    chs, shs = math.cosh(coeffs.sigmaS), math.sinh(coeffs.sigmaS)
    ct, st = math.cos(coeffs.sigmaT), math.sin(coeffs.sigmaT)
    return np.array(
        [
            [e1 * (st * shs + ct * chs), -e2 * (st * chs + ct * shs)],
            [e1 * (st * chs - ct * shs), -e2 * (st * shs - ct * chs)],
        ]
    )


def _jacobian(x: np.ndarray) -> np.ndarray:
    """d(rhs entries, row-major) / d(sigma1, sigma2, sigmaS, sigmaT)."""
    s1, s2, sS, sT = x
    e1, e2 = math.exp(s1), math.exp(s2)
    chs, shs = math.cosh(sS), math.sinh(sS)
    ct, st = math.cos(sT), math.sin(sT)
    # rows: (0,0), (0,1), (1,0), (1,1)
    return np.array(
        [
            [e1 * (st * shs + ct * chs), 0.0,
             e1 * (st * chs + ct * shs), e1 * (ct * shs - st * chs)],
            [0.0, -e2 * (st * chs + ct * shs),
             -e2 * (st * shs + ct * chs), -e2 * (ct * chs - st * shs)],
            [e1 * (st * chs - ct * shs), 0.0,
             e1 * (st * shs - ct * chs), e1 * (ct * chs + st * shs)],
            [0.0, -e2 * (st * shs - ct * chs),
             -e2 * (st * chs - ct * shs), -e2 * (ct * shs + st * chs)],
        ]
    )


def reconstruct_residual(coeffs: DisentangleCoeffs, gamma: float, r: float) -> float:
    """Max-norm of ``lhs_matrix(gamma, r) - rhs_matrix(coeffs)``."""
    return float(np.max(np.abs(lhs_matrix(gamma, r) - rhs_matrix(coeffs))))


def linearized(delta: float, r: float) -> DisentangleCoeffs:
    """First-order coefficients at ``gamma = pi/2 + delta``."""
    return DisentangleCoeffs(r, 0.0, -delta * math.sinh(r), delta * (1.0 - math.cosh(r)))


def _seed(gamma: float, r: float) -> np.ndarray:
    if gamma <= 3.0 * math.pi / 8.0:
        # interpolates the closed forms at gamma = 0, pi/4 and pi/2
        s2 = math.sin(gamma) ** 2
        return np.array([r * s2, r * (1.0 - s2), 0.5 * r * math.sin(2.0 * gamma), 0.0])
    return linearized(gamma - math.pi / 2.0, r).as_array()


def _newton(gamma, r, x0, tol=SOLVE_TOL, max_iter=MAX_ITER):
    target = lhs_matrix(gamma, r).ravel()

    def residual(x):
        return rhs_matrix(DisentangleCoeffs.from_array(x)).ravel() - target

    x = np.array(x0, dtype=float)
    f = residual(x)
    norm = np.max(np.abs(f))
    for _ in range(max_iter):
        if norm <= tol:
            return x, norm
        try:
            step = np.linalg.solve(_jacobian(x), -f)
        except np.linalg.LinAlgError:
            return x, norm
        lam = 1.0
        while lam > 1e-6:
            trial = x + lam * step
            if abs(trial[3]) < math.pi / 2:
                f_trial = residual(trial)
                n_trial = np.max(np.abs(f_trial))
                if n_trial < norm or n_trial <= tol:
                    break
            lam *= 0.5
        else:
            return x, norm
        x, f, norm = trial, f_trial, n_trial
    return x, norm


def solve(gamma: float, r: float, *, tol: float = SOLVE_TOL) -> DisentangleCoeffs:
    """Disentangling coefficients for beam-splitter angle ``gamma``, squeeze ``r``.

    Raises :class:`NoConvergence` if neither the direct Newton run nor a
    continuation in ``r`` from 0 reaches ``tol``.
    """
    if not r >= 0.0:
        raise ValueError(f"r must be >= 0, got {r!r}")
    if not math.isfinite(gamma):
        raise ValueError(f"gamma must be finite, got {gamma!r}")
    if r == 0.0:
        return DisentangleCoeffs.zero()
    x, res = _newton(gamma, r, _seed(gamma, r), tol)
    if res <= tol:
        return DisentangleCoeffs.from_array(x)

    x = np.zeros(4)
    n_steps = max(1, math.ceil(r / CONTINUATION_STEP))
    for k in range(1, n_steps + 1):
        rk = r * k / n_steps
        x, res = _newton(gamma, rk, x, tol)
        if res > tol:
            raise NoConvergence(gamma, rk, res)
    return DisentangleCoeffs.from_array(x)
