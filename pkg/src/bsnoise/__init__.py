"""Photon-counting statistics behind a beam splitter fed by a coherent state
and a squeezed vacuum."""

__version__ = "0.1.0"

from .darkport import DarkPortParams, dark_distribution, dark_moments, kappa, optimal_r
from .disentangle import DisentangleCoeffs, solve
from .distribution import (
    BeamSplitterParams,
    JointDistribution,
    MarginalDistribution,
    auto_grid,
    full_grid,
    joint_prob,
    marginal,
    no_entangle_grid,
)
from .errors import (
    BsNoiseError,
    ConsistencyError,
    CutoffTooSmall,
    GridTooSmall,
    NoConvergence,
    TruncationExceeded,
)
from .numerics import CoherentParam, LogComplex, SqueezeParam
