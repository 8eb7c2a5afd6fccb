import math

import numpy as np
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from bsnoise import BeamSplitterParams, CoherentParam, SqueezeParam, full_grid, marginal
from bsnoise.darkport import kappa, optimal_r
from bsnoise.disentangle import reconstruct_residual, solve
from bsnoise.numerics import LogComplex, fock_amplitudes, hermite_seq, logc_sum
from bsnoise.oracle import _displacement_single, _squeeze_single, simulate

SLOW = settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])

finite = st.floats(-3.0, 3.0, allow_nan=False)
angle = st.floats(-math.pi, math.pi, allow_nan=False)


@given(finite, finite, st.integers(0, 60))
def test_hermite_parity(re, im, n):
    x = complex(re, im)
    a = hermite_seq(x, n)[n]
    b = hermite_seq(-x, n)[n]
    if a.is_zero:
        assert b.is_zero
        return
    ratio = b.to_complex() / a.to_complex()
    assert abs(ratio - (-1) ** n) <= 1e-10


@given(st.lists(st.tuples(st.floats(-50, 50), angle), min_size=1, max_size=12), st.randoms())
def test_logc_sum_permutation_invariant(pairs, rnd):
    terms = [LogComplex(m, p) for m, p in pairs]
    shuffled = terms[:]
    rnd.shuffle(shuffled)
    top = max(m for m, _ in pairs)

    def scaled(z):
        # compare relative to the largest term so huge magnitudes stay finite
        return 0j if z.is_zero else complex(math.cos(z.phase), math.sin(z.phase)) * math.exp(z.log_mag - top)

    assert abs(scaled(logc_sum(terms)) - scaled(logc_sum(shuffled))) <= 1e-12 * len(terms)


@given(st.floats(0.0, 1.2), angle)
def test_squeezed_vacuum_normalised(r, theta):
    p = np.abs(fock_amplitudes(SqueezeParam(r, theta), 0.0, 400)) ** 2
    assert abs(math.fsum(p) - 1.0) <= 1e-10


@SLOW
@given(st.floats(0.0, 0.8), angle, st.floats(0.0, 2.0), angle)
def test_fock_coefficients_match_oracle(r, theta, mag, phase):
    beta = mag * complex(math.cos(phase), math.sin(phase))
    zeta = SqueezeParam(r, theta)
    levels = 120
    vac = np.zeros(levels, dtype=complex)
    vac[0] = 1.0
    ref = _squeeze_single(levels, zeta.zeta) @ (_displacement_single(levels, beta) @ vac)
    got = fock_amplitudes(zeta, beta, 20)
    assert np.max(np.abs(got - ref[:21])) <= 1e-6


@given(st.floats(0.0, math.pi / 2), st.floats(0.0, 2.0))
def test_solver_invariants(gamma, r):
    c = solve(gamma, r)
    assert reconstruct_residual(c, gamma, r) <= 1e-10
    assert abs(c.sigma1 + c.sigma2 - r) <= 1e-10
    assert abs(c.sigmaT) < math.pi / 2


@SLOW
@given(st.floats(0.0, 2.0), angle, st.floats(0.0, 0.5), angle, st.floats(-math.pi, math.pi))
def test_engine_matches_oracle(amag, phi, r, theta, gamma):
    alpha = CoherentParam(amag, phi)
    zeta = SqueezeParam(r, theta)
    ref = simulate(alpha, zeta, gamma, 24)
    eng = full_grid(BeamSplitterParams.build(alpha, zeta, gamma), 24, 24, norm_tol=1.0)
    n = np.arange(25)
    tri = (n[:, None] + n[None, :]) <= 24
    assert np.max(np.abs(eng.probs - ref.probs)[tri]) <= 1e-6


@SLOW
@given(st.floats(0.0, 4.0), st.floats(0.0, 1.0), st.floats(0.05, math.pi / 2 - 0.05))
def test_photon_number_conserved(asq, r, gamma):
    p = BeamSplitterParams.build(CoherentParam(math.sqrt(asq)), SqueezeParam(r), gamma)
    d = full_grid(p, 60, 60, norm_tol=1e-8)
    total = marginal(d, 1).mean + marginal(d, 2).mean
    assert abs(total - (asq + math.sinh(r) ** 2)) <= 1e-6 * max(1.0, asq + math.sinh(r) ** 2)


@given(st.floats(0.0, 3.0), st.floats(-2 * math.pi, 2 * math.pi))
def test_kappa_modulus_identity(r, ang):
    k = kappa(r, ang)
    want = math.cosh(2 * r) + math.cos(ang) * math.sinh(2 * r)
    assert abs(k.modulus ** 2 - want) <= 1e-12 * want


@given(st.floats(1e-3, 1e5), st.floats(1e-3, 1e5))
def test_optimal_r_monotone(a, b):
    assume(a != b)
    lo, hi = sorted((a, b))
    assert optimal_r(lo) <= optimal_r(hi)
