"""Acceptance gate: one block of tests per criterion, at the required tolerances."""
import cmath
import math

import numpy as np
import pytest

from halfplane import (DomainExit, KoenigsMap, NewtonDiverged, SampleGrid, abel_residual,
                       affine, analytic_extension, arg_envelope, characterize_composition,
                       check_range_halfplane, class_g, compose, composition_operator,
                       dissipativity_pairing, e_n, envelope_bounds, evolve, moebius_threshold,
                       hp_norm, moebius, moebius_gamma, moebius_log_bound, phi_test, power,
                       sector_of_analyticity, trajectory, verify_containment)
from halfplane.flow import flow_map
from halfplane.hardy import BlackBoxOperator, HardyFunction

AFFINE = [affine(1), affine(1 + 1j), affine(2 - 0.5j)]
POWERS = [power(0.25), power(0.5), power(0.75)]
MOEBIUS = [moebius(0, 1), moebius(1, 3)]
CLASSG = [class_g(0.5, 1, "1"), class_g(1.5, 1)]
CATALOG = AFFINE + POWERS + MOEBIUS + CLASSG


def _points(rng, n, re=(0.05, 5.0), im=(-5.0, 5.0)):
    return [complex(rng.uniform(*re), rng.uniform(*im)) for _ in range(n)]


# -- 1 -----------------------------------------------------------------------

@pytest.mark.criterion(1)
@pytest.mark.parametrize("g", AFFINE + POWERS, ids=str)
def test_flow_matches_closed_form(g):
    rng = np.random.default_rng(11)
    for z0 in _points(rng, 50):
        t = rng.uniform(0, 5)
        ref = g.oracle(t, 0.0, z0)
        assert abs(evolve(g, z0, t) - ref) <= 1e-8 * (1 + abs(ref))


# -- 2 -----------------------------------------------------------------------

@pytest.mark.criterion(2)
@pytest.mark.parametrize("a,b", [(0, 1), (1, 3)])
def test_moebius_flow_equation_residual(a, b):
    g = moebius(a, b)
    rng = np.random.default_rng(22)
    for z in _points(rng, 25):
        t = rng.uniform(0, 5)
        F = evolve(g, z, t)
        res = F + (b - a) * cmath.log(F + a) - t - z - (b - a) * cmath.log(z + a)
        assert abs(res) <= 1e-7


# -- 3 -----------------------------------------------------------------------

@pytest.mark.criterion(3)
@pytest.mark.parametrize("g", CATALOG, ids=str)
def test_abel_residual(g):
    m = KoenigsMap(g)
    rng = np.random.default_rng(33)
    for z in _points(rng, 25):
        assert abel_residual(m, z, rng.uniform(0, 5)) <= 1e-7


# -- 4 -----------------------------------------------------------------------

@pytest.mark.criterion(4)
@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75])
def test_power_sector(alpha):
    s = sector_of_analyticity(power(alpha))
    assert abs(s.theta1 - math.pi * alpha / 2) <= 5e-3
    assert abs(s.theta2 - math.pi * alpha / 2) <= 5e-3


@pytest.mark.criterion(4)
def test_affine_sector():
    s = sector_of_analyticity(affine(cmath.exp(1j * math.pi / 6)))
    assert abs(s.theta1 - 2 * math.pi / 3) <= 5e-3
    assert abs(s.theta2 - math.pi / 3) <= 5e-3


# -- 5 -----------------------------------------------------------------------

EXTENDABLE = POWERS + [affine(1), affine(cmath.exp(0.3j))]


@pytest.mark.criterion(5)
@pytest.mark.parametrize("g", EXTENDABLE, ids=str)
def test_extension_matches_ray_flow(g):
    sector = sector_of_analyticity(g)
    m = KoenigsMap(g)
    rng = np.random.default_rng(55)
    for i, z in enumerate(_points(rng, 20, re=(0.2, 4.0), im=(-3.0, 3.0))):
        theta = sector.interior_angle(0.8 if i % 2 else -0.8)
        t = rng.uniform(0.1, 2.0)
        F = analytic_extension(m, z, t * cmath.exp(1j * theta))
        assert abs(F - evolve(g, z, t, theta)) <= 1e-6


@pytest.mark.criterion(5)
@pytest.mark.parametrize("g", EXTENDABLE, ids=str)
def test_extension_is_additive(g):
    sector = sector_of_analyticity(g)
    m = KoenigsMap(g)
    rng = np.random.default_rng(56)
    for z in _points(rng, 10, re=(0.2, 4.0), im=(-3.0, 3.0)):
        z1 = rng.uniform(0.1, 1.5) * cmath.exp(1j * sector.interior_angle(0.8))
        z2 = rng.uniform(0.1, 1.5) * cmath.exp(1j * sector.interior_angle(-0.8))
        lhs = analytic_extension(m, analytic_extension(m, z, z2), z1)
        assert abs(lhs - analytic_extension(m, z, z1 + z2)) <= 1e-6


@pytest.mark.criterion(5)
def test_outside_sector_probes_fail_both_ways():
    probes = []
    for g in POWERS + [affine(1)]:
        edge = sector_of_analyticity(g).theta2
        for z in (1, 0.5 + 0.5j, 2 - 1j, 0.3, 1 + 3j):
            for theta in (edge + 0.3, -edge - 0.3):
                probes.append((g, z, 30.0 * cmath.exp(1j * theta)))
    consistent = 0
    for g, z, zeta in probes:
        try:
            analytic_extension(KoenigsMap(g), z, zeta)
            diverged = False
        except NewtonDiverged:
            diverged = True
        try:
            evolve(g, z, abs(zeta), cmath.phase(zeta))
            exited = False
        except DomainExit:
            exited = True
        consistent += diverged and exited
    assert consistent >= 0.9 * len(probes)


# -- 6 -----------------------------------------------------------------------

START_POINTS = [1, 1 + 1j, 3 - 1j, 0.2 + 5j, 0.05 - 0.3j, 10 + 10j, 0.5, 2 + 0.1j, 0.01 + 1j, 4 - 4j]


@pytest.mark.criterion(6)
@pytest.mark.parametrize("g", CATALOG, ids=str)
def test_trajectories_stay_inside_envelope(g):
    for z0 in START_POINTS:
        tr = trajectory(g, z0, 20.0, 201)
        u_max = max(float(tr.z.real.max()), z0.real + 1e-6) * (1 + 1e-9)
        bound = envelope_bounds(g, z0, u_max, 101)
        assert verify_containment(bound, tr).ok


@pytest.mark.criterion(6)
@pytest.mark.parametrize("a,b", [(0, 1), (1, 3)])
@pytest.mark.parametrize("z", [1, 1 + 2j, 3 - 1j])
def test_moebius_log_bound_holds(a, b, z):
    tr = trajectory(moebius(a, b), z, 20.0, 401)
    for F in tr.z:
        assert abs(F.imag - complex(z).imag) <= moebius_log_bound(a, b, z, F) + 1e-6


# -- 7 -----------------------------------------------------------------------

@pytest.mark.criterion(7)
@pytest.mark.parametrize("p", [1.5, 2.0, 4.0])
def test_unit_norm_test_functions(p):
    for phi in (e_n(0, p), e_n(1, p), phi_test(2.0, 1, p), phi_test(0.3 + 2j, 3, p)):
        assert abs(hp_norm(phi).value - 1) <= 1e-6


@pytest.mark.criterion(7)
@pytest.mark.parametrize("p", [1.5, 2.0, 4.0])
@pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
def test_dilation_norm_law(p, t):
    lam = math.exp(t)
    norm = hp_norm(compose(e_n(0, p), lambda z: lam * np.asarray(z))).value
    assert abs(norm - math.exp(-t / p)) <= 1e-6


# -- 8 -----------------------------------------------------------------------

@pytest.mark.criterion(8)
def test_pairing_constant_generator_value():
    pr = dissipativity_pairing(affine(1), 2.0, 1, 2.0)
    assert abs(pr.quadrature_value - (-7 / 6)) <= 1e-9
    assert abs(pr.closed_form - (-7 / 6)) <= 1e-12


@pytest.mark.criterion(8)
def test_pairing_random_draws():
    rng = np.random.default_rng(88)
    for _ in range(20):
        g = CATALOG[rng.integers(len(CATALOG))]
        a = complex(rng.uniform(0.2, 3.0), rng.uniform(-2.0, 2.0))
        n = int(rng.integers(1, 4))
        p = float(rng.uniform(1.5, 4.0))
        pr = dissipativity_pairing(g, a, n, p)
        assert abs(pr.quadrature_value - pr.closed_form) <= 1e-6 * abs(pr.closed_form)
        assert pr.closed_form.real <= 1e-12


@pytest.mark.criterion(8)
@pytest.mark.parametrize("g", CATALOG, ids=str)
def test_pairing_is_dissipative_for_generators(g):
    assert check_range_halfplane(g).ok
    for a in (2.0, 0.5 + 1j, 3 - 2j):
        for n in (1, 2):
            assert dissipativity_pairing(g, a, n, 2.0).quadrature_value.real <= 1e-9


# -- 9 -----------------------------------------------------------------------

KNOWN_MAPS = {
    "shift": lambda z: np.asarray(z) + 1,
    "dilation": lambda z: 2 * np.asarray(z),
    "power flow": lambda z: power(0.5).oracle(1.0, 0.0, z),
    "moebius flow": flow_map(moebius(1, 3), 0.7),
    "affine flow": lambda z: affine(1 + 1j).oracle(2.0, 0.0, z),
}


@pytest.mark.criterion(9)
@pytest.mark.parametrize("name", KNOWN_MAPS)
@pytest.mark.parametrize("p", [1.5, 2.0, 4.0])
def test_composition_operators_pass(name, p):
    rep = characterize_composition(composition_operator(KNOWN_MAPS[name], p), N=6)
    assert rep.is_composition, rep.failures
    assert max(rep.residuals.values()) <= 1e-8


@pytest.mark.criterion(9)
@pytest.mark.parametrize("n_bad", [1, 3, 6])
def test_perturbed_operator_fails(n_bad):
    p = 2.0
    T = composition_operator(KNOWN_MAPS["shift"], p)
    e0 = e_n(0, p)

    def action(n):
        img = T.image(n)
        if n != n_bad:
            return img
        return HardyFunction(lambda z: img(z) + 1e-3 * e0(z), p)

    rep = characterize_composition(BlackBoxOperator(action, p), N=6)
    assert not rep.is_composition
    assert any(f.startswith(f"c: n={n_bad}") for f in rep.failures)


@pytest.mark.criterion(9)
def test_averaging_operator_fails():
    p = 2.0
    T = BlackBoxOperator(lambda n: HardyFunction(lambda z: 0.5 * (e_n(n, p)(z) + e_n(0, p)(z)), p), p)
    assert not characterize_composition(T, N=6).is_composition


# -- 10 ----------------------------------------------------------------------

REFINED_IM = 257


@pytest.mark.criterion(10)
@pytest.mark.parametrize("a,b", [(0, 1), (1, 3)])
@pytest.mark.parametrize("k", [0.1, 1.0, 4.5, 10.0])
def test_restricted_gamma_matches_formula(a, b, k):
    env = arg_envelope(moebius(a, b), k, SampleGrid.default(k, n_im=REFINED_IM))
    exact = float(moebius_gamma(a, b, k))
    assert abs(env.gamma1 - exact) <= 1e-3
    assert abs(env.gamma2 - exact) <= 1e-3


@pytest.mark.criterion(10)
@pytest.mark.parametrize("a,b", [(0, 1), (1, 3), (0.5, 4)])
@pytest.mark.parametrize("eps", [0.1, 0.3, math.pi / 6])
def test_threshold_narrows_envelope(a, b, eps):
    k = moebius_threshold(a, b, eps) * 1.001 + 1e-9
    env = arg_envelope(moebius(a, b), k, SampleGrid.default(k, n_im=REFINED_IM))
    assert max(env.gamma1, env.gamma2) <= eps
