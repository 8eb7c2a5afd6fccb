"""Joint photon-number distribution at the two beam-splitter output ports.

The output state is a product of two squeezed coherent states acted on by the
two entangling factors ``exp(sigmaT*t12)`` and ``exp(sigmaS*s12)``.  Both are
expanded in normal-ordered form, which turns each Fock amplitude into a
quadruple series over ``m1..m4``:

* ``m1`` -- pair annihilation ``(b1 b2)^m1`` from the two-mode squeeze factor,
* ``m2`` -- pair creation ``(b1+ b2+)^m2``,
* ``m3`` -- photon hop 2 -> 1 from the mode-mixing factor,
* ``m4`` -- photon hop 1 -> 2.

:func:`joint_prob` evaluates that series term by term for one cell.
:func:`full_grid` evaluates the same series for a whole grid by contracting
one index at a time (the four sums are nested, so each can be applied as a
linear map on the table of partial sums), which costs O(T^3) instead of
O(T^6) for a grid of total photon number T.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .disentangle import DisentangleCoeffs, solve
from .errors import ConsistencyError, CutoffTooSmall, GridTooSmall
from .numerics import (
    CoherentParam,
    SqueezeParam,
    fock_amplitudes,
    fock_logs,
    log_factorials,
    log_terms_sum,
)

__all__ = [
    "BeamSplitterParams",
    "CoeffBlock",
    "JointDistribution",
    "MarginalDistribution",
    "auto_grid",
    "full_grid",
    "joint_prob",
    "marginal",
    "no_entangle_grid",
    "solver_angle",
]

DEFAULT_NORM_TOL = 1e-6
M1_START = 16
M1_LIMIT = 4096
# m1 blocks stop once their probability contribution drops below this
# fraction of the normalization tolerance
TAIL_FRACTION = 1e-3

_LD = np.longdouble
_CLD = np.clongdouble
_NEG_INF = float("-inf")


def solver_angle(gamma: float) -> float:
    """Fold ``gamma`` into [0, pi/2] without changing the photon statistics.

    ``P(gamma)`` has period pi (both output amplitudes flip sign) and is even
    in ``gamma`` (a parity flip of mode 2), so ``P(gamma) = P(pi - gamma)``.
    """
    g = math.fmod(gamma, math.pi)
    if g < 0.0:
        g += math.pi
    if g > math.pi / 2.0:
        g = math.pi - g
    return g


@dataclass(frozen=True)
class BeamSplitterParams:
    """Coherent input in port 1, squeezed vacuum in port 2, splitter angle.

    ``coeffs`` are the disentangling coefficients at :attr:`angle`, the folded
    splitter angle that all internal formulas use.
    """

    alpha: CoherentParam
    squeeze: SqueezeParam
    gamma: float
    coeffs: DisentangleCoeffs

    @classmethod
    def build(cls, alpha, squeeze, gamma: float) -> "BeamSplitterParams":
        if not isinstance(alpha, CoherentParam):
            alpha = CoherentParam.from_complex(complex(alpha))
        if not isinstance(squeeze, SqueezeParam):
            squeeze = SqueezeParam(float(squeeze))
        return cls(alpha, squeeze, float(gamma), solve(solver_angle(gamma), squeeze.r))

    @property
    def angle(self) -> float:
        return solver_angle(self.gamma)

    @property
    def beta1(self) -> complex:
        return self.alpha.alpha * math.cos(self.angle)

    @property
    def beta2(self) -> complex:
        return self.alpha.alpha * math.sin(self.angle)

    @property
    def mean_total(self) -> float:
        """Mean total photon number, conserved by the beam splitter."""
        return self.alpha.mean_photons + math.sinh(self.squeeze.r) ** 2

    def port_squeeze(self, port: int) -> SqueezeParam:
        sigma = self.coeffs.sigma1 if port == 1 else self.coeffs.sigma2
        return SqueezeParam.from_signed(sigma, self.squeeze.theta)

    def without_entangling(self) -> "BeamSplitterParams":
        return BeamSplitterParams(
            self.alpha, self.squeeze, self.gamma, self.coeffs.without_entangling()
        )


@dataclass(frozen=True)
class CoeffBlock:
    """Series coefficients, as printed alongside the joint distribution.

    The normal-ordered expansions put a minus sign on the pair-annihilation
    and on the 2 -> 1 hop operators; :func:`joint_prob` applies that sign as
    ``(-1)**(m1 + m3)`` rather than folding it into ``nuS``/``nuT``.
    """

    lambdaS: complex
    muS: float
    nuS: complex
    lambdaT: float
    muT: float
    nuT: float
    beta1: complex
    beta2: complex

    @classmethod
    def from_params(cls, params: BeamSplitterParams) -> "CoeffBlock":
        c = params.coeffs
        if not abs(c.sigmaT) < math.pi / 2:
            raise ValueError(f"|sigmaT| must be < pi/2, got {c.sigmaT!r}")
        theta = params.squeeze.theta
        ts = math.tanh(c.sigmaS)
        tt = math.tan(c.sigmaT)
        return cls(
            lambdaS=cmath.exp(1j * theta) * ts,
            muS=-2.0 * math.log(math.cosh(c.sigmaS)),
            nuS=cmath.exp(-1j * theta) * ts,
            lambdaT=tt,
            muT=-2.0 * math.log(math.cos(c.sigmaT)),
            nuT=tt,
            beta1=params.beta1,
            beta2=params.beta2,
        )


@dataclass
class JointDistribution:
    """``probs[n1, n2]`` for n1 <= n1_max, n2 <= n2_max."""

    n1_max: int
    n2_max: int
    probs: np.ndarray
    truncation_defect: float
    params: Optional[BeamSplitterParams] = None
    m1_cutoff: Optional[int] = None
    source: str = "engine"
    meta: dict = field(default_factory=dict)

    @property
    def total(self) -> float:
        return float(self.probs.sum())

    def port_mean(self, port: int) -> float:
        return marginal(self, port).mean


@dataclass(frozen=True)
class MarginalDistribution:
    probs: np.ndarray
    mean: float
    variance: float
    port: int

    @classmethod
    def from_probs(cls, probs, port: int) -> "MarginalDistribution":
        probs = np.asarray(probs, dtype=float)
        n = np.arange(probs.size, dtype=float)
        mean = math.fsum(n * probs)
        # centred second pass: E[n^2] - mean^2 cancels badly for bright ports
        var = math.fsum((n - mean) ** 2 * probs)
        return cls(probs, mean, var, port)

    @property
    def total(self) -> float:
        return float(self.probs.sum())


def marginal(joint: JointDistribution, port: int) -> MarginalDistribution:
    if port not in (1, 2):
        raise ValueError(f"port must be 1 or 2, got {port!r}")
    probs = joint.probs.sum(axis=1 if port == 1 else 0)
    return MarginalDistribution.from_probs(probs, port)


# -- single cell -------------------------------------------------------------

def _pow_log(log_base: complex, m: np.ndarray) -> np.ndarray:
    """``m * log_base`` with ``0 * log(0) = 0``."""
    if log_base.real == _NEG_INF:
        return np.where(m == 0, 0j, complex(_NEG_INF, 0.0))
    return m * log_base


def _clog(z: complex) -> complex:
    return complex(_NEG_INF, 0.0) if z == 0 else cmath.log(z)


def _cell_logs(params, block, n1, n2, m1_lo, m1_hi, f1, f2, lf):
    """Packed complex logs of every term with m1 in [m1_lo, m1_hi]."""
    m1 = np.arange(m1_lo, m1_hi + 1)
    l_nuS, l_lamS = _clog(block.nuS), _clog(block.lambdaS)
    l_nuT, l_lamT = _clog(block.nuT), _clog(block.lambdaT)
    m1_part = _pow_log(l_nuS, m1) - lf[m1] + 1j * math.pi * m1
    chunks = []
    for m4 in range(n2 + 1):
        for m3 in range(n1 + m4 + 1):
            top2 = min(n1 - m3 + m4, n2 + m3 - m4)
            m2 = np.arange(top2 + 1)
            big1 = n1 - m3 + m4 - m2
            big2 = n2 + m3 - m4 - m2
            outer = (
                _pow_log(l_nuT, np.array(m3)) + _pow_log(l_lamT, np.array(m4))
                + 1j * math.pi * m3
                - lf[m3] - lf[m4]
                + lf[n1 + m4] - lf[n2 - m4] + lf[n2 + m3 - m4]
                + block.muT * (-n1 + n2 - 2 * m4) / 2.0
            )
            per_m2 = (
                _pow_log(l_lamS, m2) - lf[m2] - lf[big1] - lf[big2]
                + block.muS * (1 + n1 + n2 - 2 * m2) / 2.0
            )
            fpart = f1[big1[:, None] + m1[None, :]] + f2[big2[:, None] + m1[None, :]]
            terms = outer + per_m2[:, None] + m1_part[None, :] + fpart
            chunks.append(terms.ravel())
    return np.concatenate(chunks)


def joint_prob(
    params: BeamSplitterParams,
    n1: int,
    n2: int,
    m1_cutoff: int,
    *,
    tail_tol: float = 1e-10,
) -> float:
    """``P(n1, n2)`` from the quadruple series with ``m1 <= m1_cutoff``.

    The terms are summed in log form.  The contribution of the upper half of
    the m1 range is used as a tail estimate; :class:`CutoffTooSmall` is raised
    when it could move the probability by more than ``tail_tol``.
    """
    if n1 < 0 or n2 < 0 or m1_cutoff < 0:
        raise ValueError("n1, n2 and m1_cutoff must be >= 0")
    block = CoeffBlock.from_params(params)
    kmax = n1 + n2 + m1_cutoff
    f1 = fock_logs(params.port_squeeze(1), block.beta1, kmax)
    f2 = fock_logs(params.port_squeeze(2), block.beta2, kmax)
    lf = log_factorials(kmax)

    split = m1_cutoff // 2
    if m1_cutoff == 0:
        head = _cell_logs(params, block, n1, n2, 0, 0, f1, f2, lf)
        tail = np.array([], dtype=complex)
        if block.nuS != 0:
            raise CutoffTooSmall("m1_cutoff=0 with a nonzero two-mode squeeze factor")
    else:
        head = _cell_logs(params, block, n1, n2, 0, split, f1, f2, lf)
        tail = _cell_logs(params, block, n1, n2, split + 1, m1_cutoff, f1, f2, lf)

    log_pref = 0.5 * (lf[n2] - lf[n1])
    total = log_terms_sum(np.concatenate([head, tail]))
    if total.real == _NEG_INF:
        return 0.0
    prob = math.exp(2.0 * (total.real + log_pref))
    if tail.size:
        t = log_terms_sum(tail)
        if t.real != _NEG_INF:
            amp = math.exp(total.real + log_pref)
            blk = math.exp(t.real + log_pref)
            if blk * (2.0 * amp + blk) > tail_tol:
                raise CutoffTooSmall(
                    f"m1 tail at ({n1}, {n2}) may shift P by {blk * (2 * amp + blk):.2e} "
                    f"> {tail_tol:.1e}; raise m1_cutoff above {m1_cutoff}"
                )
    return prob


# -- whole grid --------------------------------------------------------------

class _Engine:
    """Index-by-index contraction of the series on a (T+1)x(T+1) table.

    Only cells with n1 + n2 <= T are exact (the mode-mixing factor preserves
    the total photon number, the pair factors only feed higher totals), so
    everything outside that triangle is zeroed as it is produced.
    Accumulation is in extended precision: the alternating m1 series cancels
    strongly for large photon numbers.
    """

    def __init__(self, params: BeamSplitterParams, total: int):
        self.params = params
        self.T = total
        c = params.coeffs
        theta = _LD(params.squeeze.theta)
        self.theta = theta
        self.tS = np.tanh(_LD(c.sigmaS))
        self.log_cosh = np.log(np.cosh(_LD(c.sigmaS)))
        self.tT = np.tan(_LD(c.sigmaT))
        self.log_cos = np.log(np.cos(_LD(c.sigmaT)))
        idx = np.arange(total + 1)
        self.tri = (idx[:, None] + idx[None, :]) <= total
        self._kmax = -1
        self._grow_tables(total + M1_START)

    def _grow_tables(self, kmax):
        if kmax <= self._kmax:
            return
        p = self.params
        self.f1 = fock_amplitudes(p.port_squeeze(1), p.beta1, kmax).astype(_CLD)
        self.f2 = fock_amplitudes(p.port_squeeze(2), p.beta2, kmax).astype(_CLD)
        self.lf = log_factorials(kmax + self.T + 1, dtype=_LD)
        self._kmax = kmax

    @staticmethod
    def _scalar_power(mag, phase, m, lf):
        """``(mag * e^{i phase})**m / m!`` in extended precision."""
        if m == 0:
            return _CLD(1.0)
        if mag == 0:
            return _CLD(0.0)
        lm = m * np.log(np.abs(_LD(mag))) - lf[m]
        ph = m * _LD(phase) + (m * _LD(np.pi) if mag < 0 else _LD(0))
        return np.exp(lm) * (np.cos(ph) + _CLD(1j) * np.sin(ph))

    def pair_annihilation(self, m_lo: int, m_hi: int) -> np.ndarray:
        """Partial sums over m1 in [m_lo, m_hi] applied to the product state."""
        T = self.T
        self._grow_tables(T + m_hi)
        lf = self.lf
        j = np.arange(T + 1)
        out = np.zeros((T + 1, T + 1), dtype=_CLD)
        for m in range(m_lo, m_hi + 1):
            # coefficient of (b1 b2)^m: (-e^{-i theta} tanh sigmaS)^m / m!
            c = self._scalar_power(-self.tS, -self.theta, m, lf)
            if c == 0:
                continue
            w = np.exp(0.5 * (lf[j + m] - lf[j]))
            out += c * (w[:, None] * np.outer(self.f1[m:m + T + 1], self.f2[m:m + T + 1]) * w[None, :])
        out[~self.tri] = 0
        return out

    def pair_creation(self, psi: np.ndarray) -> np.ndarray:
        """Apply ``exp(mu_S (1+n1+n2)/2)`` then the ``(b1+ b2+)^m2`` series."""
        T = self.T
        lf = self.lf
        out = np.zeros_like(psi)
        # cosh^-(1 + p1 + p2 - 2m) = cosh^-1 * cosh^2m * cosh^-p1 * cosh^-p2
        for m in range(T // 2 + 1):
            c = self._scalar_power(self.tS, self.theta, m, lf)
            if c == 0:
                continue
            c = c * np.exp(2 * m * self.log_cosh)
            p = np.arange(m, T + 1)
            v = np.exp(0.5 * (lf[p] - lf[p - m]))
            out[m:, m:] += c * (v[:, None] * psi[: T + 1 - m, : T + 1 - m] * v[None, :])
        scale = np.exp(-self.log_cosh * np.arange(T + 1))
        out *= np.exp(-self.log_cosh) * np.outer(scale, scale)
        out[~self.tri] = 0
        return out

    def mode_mixing(self, psi: np.ndarray) -> np.ndarray:
        """Apply the normal-ordered mode-mixing factor (m3, then m4 series)."""
        T = self.T
        lf = self.lf
        if self.tT == 0:
            return psi.copy()
        hop = np.zeros_like(psi)
        for m in range(T + 1):
            # coefficient of (b1+ b2)^m: (-tan sigmaT)^m / m!
            c = self._scalar_power(-self.tT, 0.0, m, lf)
            q1 = np.arange(m, T + 1)
            q2 = np.arange(0, T + 1 - m)
            a = np.exp(0.5 * (lf[q1] - lf[q1 - m]))
            b = np.exp(0.5 * (lf[q2 + m] - lf[q2]))
            hop[m:, : T + 1 - m] += c * (a[:, None] * psi[: T + 1 - m, m:] * b[None, :])
        q = np.arange(T + 1)
        hop *= np.exp(self.log_cos * (q[:, None] - q[None, :]))
        hop[~self.tri] = 0
        out = np.zeros_like(psi)
        for m in range(T + 1):
            # coefficient of (b1 b2+)^m: tan(sigmaT)^m / m!
            c = self._scalar_power(self.tT, 0.0, m, lf)
            n1 = np.arange(0, T + 1 - m)
            n2 = np.arange(m, T + 1)
            a = np.exp(0.5 * (lf[n1 + m] - lf[n1]))
            b = np.exp(0.5 * (lf[n2] - lf[n2 - m]))
            out[: T + 1 - m, m:] += c * (a[:, None] * hop[m:, : T + 1 - m] * b[None, :])
        out[~self.tri] = 0
        return out


def _tri_norm(psi: np.ndarray) -> float:
    return float(np.sqrt(np.sum(np.abs(psi) ** 2)))


def _finish(probs, n1_max, n2_max, norm_tol, **kw) -> JointDistribution:
    if np.any(probs < 0):
        worst = float(probs.min())
        if worst < -1e-12:
            raise ConsistencyError(f"negative probability {worst:.3e}")
        probs = np.clip(probs, 0.0, None)
    raw = 1.0 - float(probs.sum())
    dist = JointDistribution(n1_max, n2_max, probs, max(raw, 0.0), **kw)
    if raw > norm_tol:
        raise GridTooSmall(
            f"{raw:.3e} of the probability lies outside the {n1_max}x{n2_max} grid "
            f"(tolerance {norm_tol:.1e})",
            defect=raw,
        ).with_partial(dist)
    if raw < -norm_tol:
        raise ConsistencyError(f"grid total exceeds 1 by {-raw:.3e}")
    return dist


def _with_partial(self, dist):
    self.partial = dist
    return self


GridTooSmall.with_partial = _with_partial
GridTooSmall.partial = None


def full_grid(
    params: BeamSplitterParams,
    n1_max: int,
    n2_max: int,
    norm_tol: float = DEFAULT_NORM_TOL,
) -> JointDistribution:
    """All ``P(n1, n2)`` with n1 <= n1_max, n2 <= n2_max.

    The m1 series is extended in doubling blocks (16, 32, 64, ...) until the
    last block can change the total probability by less than
    ``1e-3 * norm_tol``.  If the grid total is still short of 1 by more than
    ``norm_tol`` the missing mass lies outside the grid and
    :class:`GridTooSmall` is raised; its ``partial`` attribute carries the
    computed grid.
    """
    if not norm_tol > 0:
        raise ValueError("norm_tol must be > 0")
    if n1_max < 0 or n2_max < 0:
        raise ValueError("grid bounds must be >= 0")
    if not params.coeffs.entangling:
        return _product_grid(params, n1_max, n2_max, norm_tol, source="engine")

    eng = _Engine(params, n1_max + n2_max)
    acc = np.zeros((eng.T + 1, eng.T + 1), dtype=_CLD)
    lo, hi = 0, M1_START
    while True:
        blk = eng.pair_creation(eng.pair_annihilation(lo, hi))
        nb, na = _tri_norm(blk), _tri_norm(acc)
        acc += blk
        if lo > 0 and nb * (2.0 * na + nb) <= TAIL_FRACTION * norm_tol:
            break
        if hi >= M1_LIMIT:
            raise CutoffTooSmall(
                f"m1 series not converged at m1={hi}: last block moves the total "
                f"probability by up to {nb * (2 * na + nb):.2e}"
            )
        lo, hi = hi + 1, 2 * hi
    amps = eng.mode_mixing(acc)[: n1_max + 1, : n2_max + 1]
    probs = np.abs(amps).astype(float) ** 2
    return _finish(probs, n1_max, n2_max, norm_tol, params=params, m1_cutoff=hi)


def _product_grid(params, n1_max, n2_max, norm_tol, source):
    p1 = np.abs(fock_amplitudes(params.port_squeeze(1), params.beta1, n1_max)) ** 2
    p2 = np.abs(fock_amplitudes(params.port_squeeze(2), params.beta2, n2_max)) ** 2
    return _finish(np.outer(p1, p2), n1_max, n2_max, norm_tol, params=params, m1_cutoff=0,
                   source=source)


def no_entangle_grid(
    params: BeamSplitterParams,
    n1_max: int,
    n2_max: int,
    norm_tol: float = DEFAULT_NORM_TOL,
) -> JointDistribution:
    """Baseline with both entangling factors dropped.

    The output is then the product of two squeezed coherent states with
    squeeze arguments ``e^{i theta} sigma1`` and ``e^{i theta} sigma2``.
    """
    return _product_grid(params.without_entangling(), n1_max, n2_max, norm_tol,
                         source="no-entangle")


# -- grid sizing -------------------------------------------------------------

def _squeezed_vacuum_probs(r: float, n_max: int) -> np.ndarray:
    amp = fock_amplitudes(SqueezeParam(r), 0.0, n_max)
    return np.abs(amp) ** 2


def _port_tail_guess(params: BeamSplitterParams, port: int, tol: float, cap: int) -> int:
    """Smallest n whose tail is below ``tol`` in a thinned-input model.

    Port ``k`` receives Poisson(|beta_k|^2) coherent photons plus a binomial
    share of the squeezed-vacuum photons; this ignores interference, so it is
    only a starting size for :func:`auto_grid`.
    """
    r = params.squeeze.r
    s2 = math.sin(params.angle) ** 2
    share = s2 if port == 1 else 1.0 - s2
    beta = params.beta1 if port == 1 else params.beta2
    sq = _squeezed_vacuum_probs(r, cap)
    n = np.arange(cap + 1)
    from scipy.stats import binom, poisson

    thinned = np.zeros(cap + 1)
    for total in np.nonzero(sq > 1e-300)[0]:
        thinned[: total + 1] += sq[total] * binom.pmf(n[: total + 1], total, share)
    coh = poisson.pmf(n, abs(beta) ** 2)
    mixed = np.convolve(thinned, coh)[: cap + 1]
    tail = 1.0 - np.cumsum(mixed)
    below = np.nonzero(tail <= tol)[0]
    return int(below[0]) if below.size else cap


def auto_grid(
    params: BeamSplitterParams,
    norm_tol: float = DEFAULT_NORM_TOL,
    *,
    entangle: bool = True,
    max_total: int = 400,
) -> JointDistribution:
    """:func:`full_grid` (or the baseline) on a grid grown until it holds
    all but ``norm_tol`` of the probability."""
    compute = full_grid if entangle else no_entangle_grid
    guess_tol = 0.1 * norm_tol
    n1 = max(8, _port_tail_guess(params, 1, guess_tol, max_total))
    n2 = max(8, _port_tail_guess(params, 2, guess_tol, max_total))
    while True:
        try:
            return compute(params, n1, n2, norm_tol)
        except GridTooSmall as exc:
            if n1 + n2 >= max_total:
                raise
            probs = exc.partial.probs
            edge1 = probs[-3:, :].sum()
            edge2 = probs[:, -3:].sum()
            if edge1 >= edge2:
                n1 = int(n1 * 1.25) + 4
            else:
                n2 = int(n2 * 1.25) + 4
            if n1 + n2 > max_total:
                scale = max_total / (n1 + n2)
                n1, n2 = int(n1 * scale), int(n2 * scale)
