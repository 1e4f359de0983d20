import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bgkmix.mixture_model import (
    ConstraintViolation,
    DegenerateDensity,
    MixtureParams,
    NonPositive,
    NonPositiveTemperature,
    VelocityGrid,
    check_constraints,
    delta_lower_bound,
    equilibrium,
    gauss_hermite_grid,
    maxwellian,
    mixture_temperatures,
    mixture_velocities,
    moments,
    nonlinear_rhs,
    sample_admissible,
    trapezoid_grid,
    validate,
)
from strategies import admissible_params

SQRT_2PI = math.sqrt(2 * math.pi)


# -- validate ---------------------------------------------------------------

def test_boundary_example_is_valid_and_eligible():
    p = validate(MixtureParams(delta=1.0, gamma=0.0, alpha=0.5))
    assert p.theorem_eligible
    assert p.raw() == MixtureParams(delta=1.0, gamma=0.0, alpha=0.5)


def test_delta_below_bound_is_rejected():
    assert delta_lower_bound(1.0, 1.0, 1.0) == 0.0
    with pytest.raises(ConstraintViolation) as info:
        validate(MixtureParams(delta=-0.5))
    names = [c.name for c in info.value.violations]
    assert any(n.startswith("delta >=") for n in names)
    bad = next(c for c in info.value.violations if c.name.startswith("delta >="))
    assert bad.rhs == 0.0 and bad.lhs == -0.5


def test_negative_gamma_rejected():
    with pytest.raises(ConstraintViolation) as info:
        validate(MixtureParams(gamma=-0.1))
    assert any(c.name == "gamma >= 0" for c in info.value.violations)


def test_all_violations_reported_together():
    with pytest.raises(ConstraintViolation) as info:
        validate(MixtureParams(gamma=-0.1, alpha=1.5, nu12=0.1))
    names = {c.name for c in info.value.violations}
    assert {"gamma >= 0", "alpha <= 1", "nu12 = epsilon*nu21"} <= names


def test_nonpositive_mass_flagged():
    checks = check_constraints(MixtureParams(m1=0.0))
    bad = [c for c in checks if not c.ok]
    assert bad and bad[0].kind == "non_positive"


def test_non_normalized_params_valid_but_not_eligible():
    p = validate(MixtureParams(nu11=1.0))
    assert not p.theorem_eligible


def test_nonfinite_rejected():
    with pytest.raises(ValueError):
        validate(MixtureParams(m1=float("nan")))


def test_digest_stable_and_sensitive():
    assert MixtureParams().digest() == MixtureParams().digest()
    assert MixtureParams().digest() != MixtureParams(delta=0.4).digest()


# -- maxwellian / equilibrium -------------------------------------------------

def test_maxwellian_peak():
    assert maxwellian(1, 0, 1, 1, 0) == pytest.approx(1 / SQRT_2PI, rel=1e-15)


@given(st.floats(-2, 2), st.floats(0.1, 3), st.floats(0.1, 5), st.floats(-5, 5))
def test_maxwellian_linear_in_density(u, T, m, v):
    assert maxwellian(2, u, T, m, v) == pytest.approx(2 * maxwellian(1, u, T, m, v), rel=1e-14)


def test_maxwellian_quadrature():
    g = gauss_hermite_grid(128, 2.0)
    assert abs(g.integrate(maxwellian(1.3, 0.2, 0.7, 2, g.nodes)) - 1.3) < 1e-10


@pytest.mark.parametrize("bad", [(0, 0, 1, 1), (1, 0, 0, 1), (1, 0, 1, -1)])
def test_maxwellian_rejects_nonpositive(bad):
    n, u, T, m = bad
    with pytest.raises(NonPositive):
        maxwellian(n, u, T, m, 0.0)


def test_standard_maxwellian_quadrature_both_grids():
    for grid in (gauss_hermite_grid(128), gauss_hermite_grid(400, 3.0), trapezoid_grid(801, 12.0)):
        assert abs(grid.integrate(maxwellian(1, 0, 1, 1, grid.nodes)) - 1) < 1e-12


def test_grid_rejects_unsorted_nodes():
    with pytest.raises(ValueError):
        VelocityGrid(np.array([0.0, -1.0]), np.array([1.0, 1.0]))


def test_equilibrium_examples():
    p = MixtureParams()
    assert equilibrium(p, 1, 0.0) == pytest.approx(1 / SQRT_2PI)
    q = MixtureParams(m1=4.0)
    assert equilibrium(q, 1, 0.0) == pytest.approx(2 * equilibrium(p, 1, 0.0))


def test_equilibrium_moments(asymmetric):
    for s in (1, 2):
        g = gauss_hermite_grid(128, asymmetric.mass(s))
        st_ = moments(equilibrium(asymmetric, s, g.nodes), g, asymmetric.mass(s))
        assert st_.n == pytest.approx(asymmetric.n_inf(s), abs=1e-10)
        assert abs(st_.u) < 1e-10
        assert st_.T == pytest.approx(1.0, abs=1e-10)


# -- mixture velocities and temperatures ---------------------------------------

def test_velocity_examples():
    p = MixtureParams(delta=1.0)
    assert mixture_velocities(p, 0.3, -0.7) == (0.3, -0.7)
    q = MixtureParams(delta=0.0)
    u12, u21 = mixture_velocities(q, 0.3, -0.7)
    assert u12 == pytest.approx(-0.7) and u21 == pytest.approx(0.3)
    assert mixture_velocities(MixtureParams(), 0.4, 0.4) == pytest.approx((0.4, 0.4))


def test_temperature_examples():
    p = MixtureParams(alpha=1.0, gamma=0.0)
    assert mixture_temperatures(p, 0.1, 0.5, 1.7, 0.3)[0] == pytest.approx(1.7)
    q = MixtureParams(epsilon=0.5, nu12=0.25, alpha=0.3)
    T12, T21 = mixture_temperatures(q, 0.2, 0.2, 1.5, 0.5)
    assert T12 == pytest.approx(0.3 * 1.5 + 0.7 * 0.5)
    assert T21 == pytest.approx(0.5 * 0.7 * 1.5 + (1 - 0.5 * 0.7) * 0.5)
    assert mixture_temperatures(q, 0.4, 0.4, 0.9, 0.9) == pytest.approx((0.9, 0.9))


def test_temperature_rejects_nonpositive_input():
    with pytest.raises(NonPositiveTemperature):
        mixture_temperatures(MixtureParams(), 0, 0, -1.0, 1.0)


@settings(max_examples=300)
@given(admissible_params(normalized=False), st.floats(-3, 3), st.floats(-3, 3),
       st.floats(0.05, 5), st.floats(0.05, 5))
def test_momentum_and_energy_exchange_balance(p, u1, u2, T1, T2):
    # the cross-collision terms carry weights nu12 n2 and nu21 n1 = nu12 n1 / eps; after dividing
    # by nu12 n1 n2 / eps the exchanged momentum and energy are weighted by eps and 1
    u12, u21 = mixture_velocities(p, u1, u2)
    T12, T21 = mixture_temperatures(p, u1, u2, T1, T2)
    e = p.epsilon
    mom = e * p.m1 * (u12 - u1) + p.m2 * (u21 - u2)
    scale = max(1.0, p.m1 * abs(u1) + p.m2 * abs(u2))
    assert abs(mom) <= 1e-12 * scale
    energy = (e * (p.m1 * u12 ** 2 + T12 - p.m1 * u1 ** 2 - T1)
              + (p.m2 * u21 ** 2 + T21 - p.m2 * u2 ** 2 - T2))
    escale = max(1.0, p.m1 * u1 ** 2 + p.m2 * u2 ** 2 + T1 + T2)
    assert abs(energy) <= 1e-12 * escale * 10


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.05, 5), st.floats(0.05, 5))
def test_density_weighted_balance_when_n1_equals_eps_n2(u1, u2, T1, T2):
    eps, n2 = 0.5, 1.2
    p = MixtureParams(m1=1.0, m2=2.0, epsilon=eps, nu21=0.5, nu12=0.25, delta=0.4, alpha=0.3,
                      gamma=0.1, n_inf_1=eps * n2, n_inf_2=n2)
    n1 = p.n_inf_1
    u12, u21 = mixture_velocities(p, u1, u2)
    T12, T21 = mixture_temperatures(p, u1, u2, T1, T2)
    lhs = p.m1 * n1 * u12 + p.m2 * n2 * u21
    rhs = p.m1 * n1 * u1 + p.m2 * n2 * u2
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)
    e_after = 0.5 * (p.m1 * n1 * u12 ** 2 + p.m2 * n2 * u21 ** 2) + 0.5 * (n1 * T12 + n2 * T21)
    e_before = 0.5 * (p.m1 * n1 * u1 ** 2 + p.m2 * n2 * u2 ** 2) + 0.5 * (n1 * T1 + n2 * T2)
    assert e_after == pytest.approx(e_before, rel=1e-12, abs=1e-12)


def test_temperatures_positive_on_random_draws():
    rng = np.random.default_rng(7)
    fails = 0
    for _ in range(10_000):
        p = sample_admissible(rng, normalized=False)
        u1, u2 = rng.uniform(-5, 5, size=2)
        T1, T2 = np.exp(rng.uniform(np.log(1e-3), np.log(1e2), size=2))
        T12, T21 = mixture_temperatures(p, u1, u2, T1, T2)
        fails += not (T12 > 0 and T21 > 0)
    assert fails == 0


@given(admissible_params())
def test_sampled_params_are_admissible(p):
    v = validate(p)
    assert v.theorem_eligible


# -- moments and nonlinear rhs --------------------------------------------------

@pytest.mark.parametrize("args", [(1, 0, 1, 1), (1, 0.3, 0.5, 2)])
def test_moments_of_maxwellian(args):
    n, u, T, m = args
    g = gauss_hermite_grid(128, m / T)
    st_ = moments(maxwellian(n, u, T, m, g.nodes + 0.0), g, m)
    # shifted Maxwellians need a grid that covers them; 128 nodes do
    assert (st_.n, st_.u, st_.T) == pytest.approx((n, u, T), abs=1e-10)


def test_moments_homogeneity():
    g = gauss_hermite_grid(128, 1.0)
    f = maxwellian(1.1, 0.2, 0.8, 1.0, g.nodes)
    a, b = moments(f, g, 1.0), moments(2 * f, g, 1.0)
    assert b.n == pytest.approx(2 * a.n)
    assert (b.u, b.T) == pytest.approx((a.u, a.T))


def test_moments_degenerate():
    g = gauss_hermite_grid(32)
    with pytest.raises(DegenerateDensity):
        moments(np.zeros(32), g, 1.0)


def test_nonlinear_rhs_vanishes_on_common_maxwellians(asymmetric):
    p = asymmetric
    g = gauss_hermite_grid(128, 1.0)
    f1 = maxwellian(0.8, 0.1, 1.2, p.m1, g.nodes)
    f2 = maxwellian(1.4, 0.1, 1.2, p.m2, g.nodes)
    Q1, Q2 = nonlinear_rhs(p, f1, f2, g)
    assert np.max(np.abs(Q1)) < 1e-12 and np.max(np.abs(Q2)) < 1e-12


def test_nonlinear_rhs_conservation(asymmetric):
    p = asymmetric
    g = trapezoid_grid(1601, 14.0)
    f1 = maxwellian(1.3, 0.4, 1.1, p.m1, g.nodes) + maxwellian(0.2, -1.0, 0.4, p.m1, g.nodes)
    f2 = maxwellian(0.7, -0.2, 0.8, p.m2, g.nodes)
    Q1, Q2 = nonlinear_rhs(p, f1, f2, g)
    v = g.nodes
    assert abs(g.integrate(Q1)) < 1e-10
    assert abs(g.integrate(Q2)) < 1e-10
    assert abs(g.integrate(v * (p.m1 * Q1 + p.m2 * Q2))) < 1e-10
    assert abs(g.integrate(v * v * (p.m1 * Q1 + p.m2 * Q2))) < 1e-10
