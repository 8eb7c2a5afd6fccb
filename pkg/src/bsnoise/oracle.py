"""Brute-force reference: dense operators on a truncated two-mode Fock space.

Basis state ``|n1, n2>`` sits at index ``n1*(cutoff+1) + n2``.  Every unitary
is the matrix exponential of a truncated anti-Hermitian generator, so it is
exactly unitary on the truncated space; what truncation costs instead is
accuracy near the cutoff, which is tracked as the weight that reaches the
outermost photon-number shell.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.linalg import expm

from .distribution import BeamSplitterParams, JointDistribution
from .errors import TruncationExceeded
from .numerics import CoherentParam, SqueezeParam

__all__ = [
    "FockOperator",
    "FockSpace",
    "FockState",
    "TRUNCATION_BUDGET",
    "beamsplitter",
    "displacement",
    "mode_mixer",
    "mode_mixer_factored",
    "mode_ops",
    "number_operator",
    "read_golden",
    "simulate",
    "squeeze",
    "two_mode_squeeze",
    "two_mode_squeeze_factored",
    "write_golden",
]

TRUNCATION_BUDGET = 1e-7
# extra levels used when preparing single-mode input states
PAD = 40


@dataclass(frozen=True)
class FockSpace:
    cutoff: int

    def __post_init__(self):
        if self.cutoff < 1:
            raise ValueError(f"cutoff must be >= 1, got {self.cutoff!r}")

    @property
    def levels(self) -> int:
        return self.cutoff + 1

    @property
    def dim(self) -> int:
        return self.levels ** 2

    def index(self, n1: int, n2: int) -> int:
        if not (0 <= n1 <= self.cutoff and 0 <= n2 <= self.cutoff):
            raise IndexError(f"({n1}, {n2}) outside cutoff {self.cutoff}")
        return n1 * self.levels + n2

    def numbers(self) -> tuple[np.ndarray, np.ndarray]:
        """Photon numbers (n1, n2) of every basis index."""
        n = np.arange(self.levels)
        return np.repeat(n, self.levels), np.tile(n, self.levels)

    def shell_mask(self) -> np.ndarray:
        n1, n2 = self.numbers()
        return (n1 == self.cutoff) | (n2 == self.cutoff)

    def interior_mask(self, margin: int = 4) -> np.ndarray:
        n1, n2 = self.numbers()
        return (n1 <= self.cutoff - margin) & (n2 <= self.cutoff - margin)


@dataclass
class FockState:
    space: FockSpace
    amplitudes: np.ndarray
    truncation_defect: float = 0.0

    @classmethod
    def vacuum(cls, space: FockSpace) -> "FockState":
        v = np.zeros(space.dim, dtype=complex)
        v[0] = 1.0
        return cls(space, v)

    @classmethod
    def basis(cls, space: FockSpace, n1: int, n2: int) -> "FockState":
        v = np.zeros(space.dim, dtype=complex)
        v[space.index(n1, n2)] = 1.0
        return cls(space, v)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def amplitude(self, n1: int, n2: int) -> complex:
        return complex(self.amplitudes[self.space.index(n1, n2)])

    def probabilities(self) -> np.ndarray:
        """``P[n1, n2]`` on the (cutoff+1)^2 box."""
        lv = self.space.levels
        return (np.abs(self.amplitudes) ** 2).reshape(lv, lv)

    def shell_weight(self) -> float:
        return float(np.sum(np.abs(self.amplitudes[self.space.shell_mask()]) ** 2))


@dataclass
class FockOperator:
    space: FockSpace
    matrix: np.ndarray

    def __matmul__(self, other):
        if isinstance(other, FockOperator):
            return FockOperator(self.space, self.matrix @ other.matrix)
        if isinstance(other, FockState):
            return self.apply(other, check=False)
        return NotImplemented

    def __add__(self, other: "FockOperator") -> "FockOperator":
        return FockOperator(self.space, self.matrix + other.matrix)

    def __sub__(self, other: "FockOperator") -> "FockOperator":
        return FockOperator(self.space, self.matrix - other.matrix)

    def scale(self, c: complex) -> "FockOperator":
        return FockOperator(self.space, c * self.matrix)

    def dagger(self) -> "FockOperator":
        return FockOperator(self.space, self.matrix.conj().T)

    def apply(self, state: FockState, *, check: bool = True,
              budget: float = TRUNCATION_BUDGET) -> FockState:
        """``self |state>``; with ``check``, fail if the result leans on the cutoff."""
        out = FockState(self.space, self.matrix @ state.amplitudes, state.truncation_defect)
        shell = out.shell_weight()
        out.truncation_defect = max(out.truncation_defect, shell)
        if check and shell > budget:
            raise TruncationExceeded(
                f"weight {shell:.2e} on the cutoff shell exceeds {budget:.1e}; "
                f"raise the cutoff above {self.space.cutoff}"
            )
        return out

    @classmethod
    def identity(cls, space: FockSpace) -> "FockOperator":
        return cls(space, np.eye(space.dim, dtype=complex))


def _ladder(levels: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, levels, dtype=float)), 1).astype(complex)


def _embed(space: FockSpace, single: np.ndarray, mode: int) -> np.ndarray:
    eye = np.eye(space.levels)
    if mode == 1:
        return np.kron(single, eye)
    if mode == 2:
        return np.kron(eye, single)
    raise ValueError(f"mode must be 1 or 2, got {mode!r}")


def mode_ops(space: FockSpace, mode: int) -> tuple[FockOperator, FockOperator]:
    """Annihilation and creation operators of one mode."""
    a = _embed(space, _ladder(space.levels), mode)
    return FockOperator(space, a), FockOperator(space, a.conj().T.copy())


def number_operator(space: FockSpace, mode: Optional[int] = None) -> FockOperator:
    """``n1``, ``n2``, or their sum when ``mode`` is None."""
    n1, n2 = space.numbers()
    diag = {1: n1, 2: n2, None: n1 + n2}[mode]
    return FockOperator(space, np.diag(diag.astype(complex)))


def _displacement_single(levels: int, alpha: complex) -> np.ndarray:
    a = _ladder(levels)
    return expm(alpha * a.conj().T - np.conj(alpha) * a)


def _squeeze_single(levels: int, zeta: complex) -> np.ndarray:
    a = _ladder(levels)
    ad = a.conj().T
    return expm(0.5 * np.conj(zeta) * (a @ a) - 0.5 * zeta * (ad @ ad))


def displacement(space: FockSpace, mode: int, alpha: complex) -> FockOperator:
    """``exp(alpha b+ - alpha* b)`` on one mode."""
    return FockOperator(space, _embed(space, _displacement_single(space.levels, alpha), mode))


def squeeze(space: FockSpace, mode: int, zeta: SqueezeParam) -> FockOperator:
    """``exp(zeta*/2 b^2 - zeta/2 b+^2)`` on one mode."""
    return FockOperator(space, _embed(space, _squeeze_single(space.levels, zeta.zeta), mode))


def _sectors(space: FockSpace, conserved: str = "sum"):
    """Basis indices with fixed n1 + n2 (or fixed n1 - n2), ordered by n1.

    Neighbours inside a block differ by one step of the corresponding ladder
    (a photon hop for the sum, a photon pair for the difference).
    """
    n1, n2 = space.numbers()
    key = n1 + n2 if conserved == "sum" else n1 - n2
    for k in np.unique(key):
        idx = np.nonzero(key == k)[0]
        yield idx, n1[idx], n2[idx]


def _hop_block(n1, n2) -> np.ndarray:
    """``b1+ b2`` on a fixed-sum block: (k, N-k) -> (k+1, N-k-1)."""
    return np.diag(np.sqrt((n1[:-1] + 1.0) * n2[:-1]), -1)


def _pair_block(n1, n2) -> np.ndarray:
    """``b1+ b2+`` on a fixed-difference block: (k, k-d) -> (k+1, k-d+1)."""
    return np.diag(np.sqrt((n1[:-1] + 1.0) * (n2[:-1] + 1.0)), -1)


def _rotation_blocks(space: FockSpace, angle: float):
    """``exp(angle (b1+ b2 - b1 b2+))`` restricted to each fixed-sum block.

    The generator conserves n1 + n2, so the truncated exponential is block
    diagonal and never needs the full dense generator.
    """
    for idx, n1, n2 in _sectors(space):
        hop = _hop_block(n1, n2)
        yield idx, expm(angle * (hop - hop.T))


def _blocks_to_matrix(space: FockSpace, blocks) -> np.ndarray:
    out = np.zeros((space.dim, space.dim), dtype=complex)
    for idx, block in blocks:
        out[np.ix_(idx, idx)] = block
    return out


def _apply_blocks(blocks, amplitudes: np.ndarray) -> np.ndarray:
    out = np.zeros_like(amplitudes)
    for idx, block in blocks:
        out[idx] = block @ amplitudes[idx]
    return out


def beamsplitter(space: FockSpace, gamma: float) -> FockOperator:
    """``U = exp(gamma (b1+ b2 - b1 b2+))``, so that U+ b1 U = cos g b1 + sin g b2."""
    return FockOperator(space, _blocks_to_matrix(space, _rotation_blocks(space, gamma)))


def mode_mixer(space: FockSpace, sigma: float) -> FockOperator:
    """``exp(sigma t12)`` with ``t12 = b1 b2+ - b1+ b2``."""
    return FockOperator(space, _blocks_to_matrix(space, _rotation_blocks(space, -sigma)))


def mode_mixer_factored(space: FockSpace, sigma: float) -> FockOperator:
    """Normal-ordered product form of :func:`mode_mixer`, |sigma| < pi/2."""
    t = math.tan(sigma)
    log_cos = math.log(math.cos(sigma))

    def blocks():
        for idx, n1, n2 in _sectors(space):
            hop = _hop_block(n1, n2)
            middle = np.diag(np.exp((n1 - n2) * log_cos))
            yield idx, expm(t * hop.T) @ middle @ expm(-t * hop)

    return FockOperator(space, _blocks_to_matrix(space, blocks()))


def two_mode_squeeze(space: FockSpace, sigma: float, theta: float) -> FockOperator:
    """``exp(sigma s12)`` with ``s12 = e^{i theta} b1+ b2+ - e^{-i theta} b1 b2``."""
    ph = cmath.exp(1j * theta)

    def blocks():
        for idx, n1, n2 in _sectors(space, "difference"):
            up = _pair_block(n1, n2)
            yield idx, expm(sigma * (ph * up - ph.conjugate() * up.T))

    return FockOperator(space, _blocks_to_matrix(space, blocks()))


def two_mode_squeeze_factored(space: FockSpace, sigma: float, theta: float) -> FockOperator:
    """Normal-ordered product form of :func:`two_mode_squeeze`."""
    ph = cmath.exp(1j * theta)
    t = math.tanh(sigma)
    log_cosh = math.log(math.cosh(sigma))

    def blocks():
        for idx, n1, n2 in _sectors(space, "difference"):
            up = _pair_block(n1, n2)
            middle = np.diag(np.exp(-(1 + n1 + n2) * log_cosh))
            yield idx, expm(ph * t * up) @ middle @ expm(-ph.conjugate() * t * up.T)

    return FockOperator(space, _blocks_to_matrix(space, blocks()))


def _input_state(space: FockSpace, alpha: complex, zeta: SqueezeParam) -> FockState:
    """``D1(alpha) S2(zeta)|0,0>`` prepared on a padded single-mode space."""
    big = space.levels + PAD
    vac = np.zeros(big, dtype=complex)
    vac[0] = 1.0
    mode1 = (_displacement_single(big, alpha) @ vac)[: space.levels]
    mode2 = (_squeeze_single(big, zeta.zeta) @ vac)[: space.levels]
    return FockState(space, np.kron(mode1, mode2))


def simulate(
    alpha,
    zeta: SqueezeParam,
    gamma: float,
    cutoff: int,
    *,
    budget: float = TRUNCATION_BUDGET,
) -> JointDistribution:
    """Output distribution of the beam splitter by direct state-vector simulation.

    The splitter conserves n1 + n2, so every cell with n1 + n2 <= cutoff is
    exact; the rest of the box is zeroed and ``truncation_defect`` is the
    probability that did not land in that triangle.
    """
    if not isinstance(alpha, CoherentParam):
        alpha = CoherentParam.from_complex(complex(alpha))
    space = FockSpace(cutoff)
    psi = _input_state(space, alpha.alpha, zeta)
    psi.amplitudes = _apply_blocks(_rotation_blocks(space, gamma), psi.amplitudes)
    probs = psi.probabilities()
    n = np.arange(space.levels)
    probs[(n[:, None] + n[None, :]) > cutoff] = 0.0
    defect = 1.0 - math.fsum(probs.ravel())
    if defect > budget:
        raise TruncationExceeded(
            f"{defect:.2e} of the probability lies above n1+n2={cutoff} "
            f"(budget {budget:.1e}); raise the cutoff"
        )
    return JointDistribution(
        cutoff, cutoff, probs, max(defect, 0.0),
        params=BeamSplitterParams.build(alpha, zeta, gamma), source="oracle",
        meta={"cutoff": cutoff},
    )


# -- golden files ------------------------------------------------------------

def write_golden(path, dist: JointDistribution, *, phi: Optional[float] = None) -> None:
    p = dist.params
    header = (
        f"# cutoff={dist.meta.get('cutoff', dist.n1_max)}, alpha={p.alpha.mag:.15g}, "
        f"r={p.squeeze.r:.15g}, theta={p.squeeze.theta:.15g}, gamma={p.gamma:.15g}"
    )
    if phi is None:
        phi = p.alpha.phase
    header += f", phi={phi:.15g}"
    lines = [header, "n1,n2,probability"]
    for n1 in range(dist.n1_max + 1):
        for n2 in range(dist.n2_max + 1):
            lines.append(f"{n1},{n2},{dist.probs[n1, n2]:.15g}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_golden(path) -> tuple[dict, np.ndarray]:
    """Header values and the probability box of a golden file."""
    meta: dict = {}
    rows = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            for item in line[1:].split(","):
                key, _, value = item.partition("=")
                meta[key.strip()] = float(value)
        elif line and not line.startswith("n1"):
            n1, n2, prob = line.split(",")
            rows.append((int(n1), int(n2), float(prob)))
    size = int(meta["cutoff"]) + 1
    probs = np.zeros((size, size))
    for n1, n2, prob in rows:
        probs[n1, n2] = prob
    return meta, probs
