import math

import numpy as np
import pytest
from scipy.stats import poisson

from bsnoise import (
    BeamSplitterParams,
    CoherentParam,
    ConsistencyError,
    CutoffTooSmall,
    GridTooSmall,
    SqueezeParam,
    auto_grid,
    full_grid,
    joint_prob,
    marginal,
    no_entangle_grid,
)
from bsnoise.distribution import CoeffBlock, MarginalDistribution, solver_angle
from bsnoise.numerics import fock_amplitudes
from bsnoise.oracle import simulate


def params(alpha_sq, r, gamma, theta=0.0, phi=0.0):
    return BeamSplitterParams.build(
        CoherentParam(math.sqrt(alpha_sq), phi), SqueezeParam(r, theta), gamma
    )


def test_coeff_block_values():
    p = params(2.0, 0.6, 0.7, theta=0.4)
    b = CoeffBlock.from_params(p)
    c = p.coeffs
    assert b.lambdaS == pytest.approx(np.exp(0.4j) * math.tanh(c.sigmaS))
    assert b.nuS == pytest.approx(np.exp(-0.4j) * math.tanh(c.sigmaS))
    assert b.muS <= 0
    assert b.lambdaT == b.nuT == pytest.approx(math.tan(c.sigmaT))
    assert b.muT == pytest.approx(-2 * math.log(math.cos(c.sigmaT)))
    assert b.beta1 == pytest.approx(math.sqrt(2) * math.cos(0.7))
    assert b.beta2 == pytest.approx(math.sqrt(2) * math.sin(0.7))


@pytest.mark.parametrize("gamma,expected", [
    (0.3, 0.3), (math.pi / 2, math.pi / 2), (2.5, math.pi - 2.5), (-0.6, 0.6),
    (math.pi + 0.2, 0.2), (-math.pi / 2 - 0.1, math.pi / 2 - 0.1),
])
def test_solver_angle(gamma, expected):
    assert solver_angle(gamma) == pytest.approx(expected)


def test_joint_prob_poisson_product_at_r0():
    p = params(3.0, 0.0, 0.5)
    b1, b2 = 3.0 * math.cos(0.5) ** 2, 3.0 * math.sin(0.5) ** 2
    for n1, n2 in [(0, 0), (2, 1), (4, 3)]:
        assert joint_prob(p, n1, n2, 0) == pytest.approx(
            poisson.pmf(n1, b1) * poisson.pmf(n2, b2), rel=1e-12)


def test_joint_prob_full_reflection():
    r = 0.5
    p = params(2.0, r, math.pi / 2, theta=0.3)
    sv = np.abs(fock_amplitudes(SqueezeParam(r, 0.3), 0.0, 10)) ** 2
    for n1, n2 in [(0, 0), (2, 1), (4, 3), (1, 2)]:
        assert joint_prob(p, n1, n2, 8) == pytest.approx(sv[n1] * poisson.pmf(n2, 2.0), abs=1e-15)


def test_joint_prob_matches_oracle():
    o = simulate(1.0, SqueezeParam(0.3, 0.0), math.pi / 8, 24)
    p = params(1.0, 0.3, math.pi / 8)
    for n1 in range(11):
        for n2 in range(11 - n1):
            assert abs(joint_prob(p, n1, n2, 40) - o.probs[n1, n2]) <= 1e-6


@pytest.mark.parametrize("theta,gamma", [(math.pi / 3, 0.7), (1.0, 1.3), (-2.0, 2.4)])
def test_joint_prob_phase_conventions(theta, gamma):
    o = simulate(math.sqrt(2.0), SqueezeParam(0.4, theta), gamma, 24)
    p = params(2.0, 0.4, gamma, theta=theta)
    for n1, n2 in [(0, 0), (1, 0), (0, 1), (2, 3), (4, 1), (1, 5)]:
        assert abs(joint_prob(p, n1, n2, 40) - o.probs[n1, n2]) <= 1e-10


def test_joint_prob_cutoff_too_small():
    p = params(4.0, 1.0, math.pi / 4)
    with pytest.raises(CutoffTooSmall):
        joint_prob(p, 3, 3, 2)


def test_full_grid_coherent_tail():
    d = full_grid(params(20.0, 0.0, math.pi / 4), 60, 60)
    assert d.truncation_defect <= 1e-8


def test_full_grid_normalised_at_r07():
    d = full_grid(params(20.0, 0.7, math.pi / 4), 60, 60)
    assert abs(d.total - 1) <= 1e-6
    assert np.all(d.probs >= 0)


def test_full_grid_too_small_reports_mass():
    # at gamma = pi/8, r = 1.5 about 2e-5 of the probability lies beyond 80x80
    with pytest.raises(GridTooSmall) as info:
        full_grid(params(20.0, 1.5, math.pi / 8), 80, 80)
    assert 1e-5 < info.value.defect < 5e-5
    assert info.value.partial.probs.shape == (81, 81)


def test_full_grid_matches_joint_prob():
    p = params(2.0, 0.5, 0.9, theta=0.7)
    d = full_grid(p, 12, 12, norm_tol=1e-3)
    for n1, n2 in [(0, 0), (3, 2), (7, 5), (12, 0), (0, 12)]:
        assert d.probs[n1, n2] == pytest.approx(joint_prob(p, n1, n2, 60), abs=1e-14)


def test_full_grid_validation():
    p = params(1.0, 0.2, 0.4)
    with pytest.raises(ValueError):
        full_grid(p, 5, 5, norm_tol=0.0)
    with pytest.raises(ValueError):
        full_grid(p, -1, 5)


def test_marginal_poisson_half():
    m = marginal(full_grid(params(20.0, 0.0, math.pi / 4), 60, 60), 1)
    assert m.mean == pytest.approx(10.0, abs=1e-6)
    assert m.variance == pytest.approx(10.0, abs=1e-5)


def test_marginal_squeezing_effect_at_r07():
    m = marginal(auto_grid(params(20.0, 0.7, math.pi / 4)), 1)
    assert m.variance < 10.0
    assert m.mean > 10.0


def test_marginal_rejects_bad_port():
    d = full_grid(params(1.0, 0.0, 0.3), 10, 10)
    with pytest.raises(ValueError):
        marginal(d, 3)


def test_marginal_moments_recomputable():
    m = MarginalDistribution.from_probs([0.2, 0.5, 0.3], 1)
    assert m.mean == pytest.approx(1.1)
    assert m.variance == pytest.approx(0.49)


@pytest.mark.parametrize("r", [0.0, 0.7])
def test_no_entangle_equals_full_at_full_reflection(r):
    p = params(3.0, r, math.pi / 2)
    a = full_grid(p, 40, 40)
    b = no_entangle_grid(p, 40, 40)
    assert np.array_equal(a.probs, b.probs)


def test_no_entangle_equals_full_at_r0():
    p = params(3.0, 0.0, 0.6)
    assert np.array_equal(full_grid(p, 25, 25).probs, no_entangle_grid(p, 25, 25).probs)


def test_no_entangle_is_product_of_squeezed_states():
    p = params(4.0, 0.8, 0.5, theta=0.3)
    d = no_entangle_grid(p, 40, 40)
    c = p.coeffs
    f1 = fock_amplitudes(SqueezeParam.from_signed(c.sigma1, 0.3), p.beta1, 40)
    f2 = fock_amplitudes(SqueezeParam.from_signed(c.sigma2, 0.3), p.beta2, 40)
    assert np.allclose(d.probs, np.outer(abs(f1) ** 2, abs(f2) ** 2), atol=1e-15)


def test_baseline_differs_when_entangled():
    p = params(4.0, 0.8, math.pi / 4)
    a = full_grid(p, 40, 40)
    b = no_entangle_grid(p, 40, 40)
    assert np.max(np.abs(a.probs - b.probs)) > 1e-3


def test_auto_grid_conservation():
    p = params(20.0, 1.0, math.pi / 8)
    d = auto_grid(p, 1e-8)
    total = marginal(d, 1).mean + marginal(d, 2).mean
    assert total == pytest.approx(20 + math.sinh(1.0) ** 2, rel=1e-6)


def test_gamma_symmetries():
    base = full_grid(params(2.0, 0.4, 0.5, theta=0.8), 15, 15, norm_tol=1e-4).probs
    for g in (-0.5, math.pi - 0.5, math.pi + 0.5):
        other = full_grid(params(2.0, 0.4, g, theta=0.8), 15, 15, norm_tol=1e-4).probs
        assert np.max(np.abs(other - base)) < 1e-14
    # the folded angles agree with the oracle run at the raw angle
    o = simulate(math.sqrt(2.0), SqueezeParam(0.4, 0.8), math.pi - 0.5, 24)
    assert np.max(np.abs(o.probs[:16, :16] - base)[np.add.outer(range(16), range(16)) <= 24]) < 1e-12


def test_consistency_error_type():
    assert issubclass(ConsistencyError, RuntimeError)
