"""Linearization of the mixture model around the global equilibrium.

A perturbation ``h_k = f_k - f_k^inf`` enters the collision terms only through
six moments ``(sigma1, sigma2, mu1, mu2, tau1, tau2)``.  The linearized
collision operator is therefore ``sum_j profile_j(v) * moment_j - rate * h``,
where each profile is a polynomial times the equilibrium Maxwellian.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .mixture_model import (
    MixtureParams,
    VelocityGrid,
    equilibrium,
    maxwellian,
    mixture_temperatures,
    mixture_velocities,
)

MOMENT_NAMES = ("sigma1", "sigma2", "mu1", "mu2", "tau1", "tau2")


@dataclass(frozen=True)
class PerturbationMoments:
    sigma: complex
    mu: complex
    tau: complex

    def as_array(self) -> np.ndarray:
        return np.array([self.sigma, self.mu, self.tau])


def perturbation_moments(h, grid: VelocityGrid, m: float) -> PerturbationMoments:
    v = grid.nodes
    return PerturbationMoments(grid.integrate(h), grid.integrate(v * h), m * grid.integrate(v * v * h))


Poly = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class DerivativeTable:
    """Partial derivatives of a Maxwellian w.r.t. the six perturbation moments.

    Each entry is ``coeffs[name](v) * f^inf(v)``; ``coeffs`` holds the
    polynomial prefactors.
    """

    target: str
    species: int
    params: MixtureParams
    coeffs: dict

    def derivative(self, name: str, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        return self.coeffs[name](v) * equilibrium(self.params, self.species, v)

    def d_sigma1(self, v):
        return self.derivative("sigma1", v)

    def d_sigma2(self, v):
        return self.derivative("sigma2", v)

    def d_mu1(self, v):
        return self.derivative("mu1", v)

    def d_mu2(self, v):
        return self.derivative("mu2", v)

    def d_tau1(self, v):
        return self.derivative("tau1", v)

    def d_tau2(self, v):
        return self.derivative("tau2", v)

    def perturbed(self, name: str, amount: float) -> "DerivativeTable":
        """Copy with ``amount`` added to one polynomial prefactor (fault injection)."""
        base = self.coeffs[name]
        coeffs = dict(self.coeffs)
        coeffs[name] = lambda v: base(v) + amount
        return replace(self, coeffs=coeffs)


def _zero(v):
    return np.zeros_like(v)


def self_derivative_table(p: MixtureParams, species: int) -> DerivativeTable:
    m, n = p.mass(species), p.n_inf(species)
    own = {
        "sigma": lambda v: (1.5 - 0.5 * m * v * v) / n,
        "mu": lambda v: m * v / n,
        "tau": lambda v: (-0.5 + 0.5 * m * v * v) / n,
    }
    coeffs = {name: _zero for name in MOMENT_NAMES}
    for key, fn in own.items():
        coeffs[f"{key}{species}"] = fn
    return DerivativeTable(f"M{species}", species, p, coeffs)


def m12_derivative_table(p: MixtureParams) -> DerivativeTable:
    m1, n1, n2 = p.m1, p.n_inf_1, p.n_inf_2
    a, d = p.alpha, p.delta
    coeffs = {
        "sigma1": lambda v: (1.0 + 0.5 * a * (1.0 - m1 * v * v)) / n1,
        "sigma2": lambda v: 0.5 * (1.0 - a) * (1.0 - m1 * v * v) / n2,
        "mu1": lambda v: d * m1 * v / n1,
        "mu2": lambda v: (1.0 - d) * m1 * v / n2,
        "tau1": lambda v: 0.5 * a * (m1 * v * v - 1.0) / n1,
        "tau2": lambda v: 0.5 * (1.0 - a) * (m1 * v * v - 1.0) / n2,
    }
    return DerivativeTable("M12", 1, p, coeffs)


def m21_derivative_table(p: MixtureParams) -> DerivativeTable:
    m1, m2, n1, n2 = p.m1, p.m2, p.n_inf_1, p.n_inf_2
    ea = p.epsilon * (1.0 - p.alpha)
    ed = p.epsilon * (1.0 - p.delta)
    coeffs = {
        "sigma1": lambda v: 0.5 * ea * (1.0 - m2 * v * v) / n1,
        "sigma2": lambda v: (1.0 + 0.5 * (1.0 - ea) * (1.0 - m2 * v * v)) / n2,
        "mu1": lambda v: ed * m1 * v / n1,
        "mu2": lambda v: (1.0 - m1 / m2 * ed) * m2 * v / n2,
        "tau1": lambda v: 0.5 * ea * (m2 * v * v - 1.0) / n1,
        "tau2": lambda v: 0.5 * (1.0 - ea) * (m2 * v * v - 1.0) / n2,
    }
    return DerivativeTable("M21", 2, p, coeffs)


# ---------------------------------------------------------------------------
# exact Maxwellians as functions of the perturbation moments


def _species_state(p: MixtureParams, species: int, sigma, mu, tau):
    m, n_inf = p.mass(species), p.n_inf(species)
    n = n_inf + sigma
    u = mu / n
    pressure = n_inf + tau - m * mu * mu / n
    return n, u, pressure / n


def exact_maxwellians(p: MixtureParams, x, v1, v2) -> dict[str, np.ndarray]:
    """``M1, M2, M12, M21`` at moment vector ``x`` (ordered as ``MOMENT_NAMES``)."""
    s1, s2, mu1, mu2, t1, t2 = x
    n1, u1, T1 = _species_state(p, 1, s1, mu1, t1)
    n2, u2, T2 = _species_state(p, 2, s2, mu2, t2)
    u12, u21 = mixture_velocities(p, u1, u2)
    T12, T21 = mixture_temperatures(p, u1, u2, T1, T2)
    return {
        "M1": maxwellian(n1, u1, T1, p.m1, v1),
        "M2": maxwellian(n2, u2, T2, p.m2, v2),
        "M12": maxwellian(n1, u12, T12, p.m1, v1),
        "M21": maxwellian(n2, u21, T21, p.m2, v2),
    }


def derivative_errors(p: MixtureParams, step: float = 1e-5, v=None, tables=None) -> dict:
    """Relative error of every table entry against central differences.

    Returns ``{(target, moment): error}``.  The error is the sup-norm
    difference divided by ``max(|table|_inf, |f^inf|_inf / n_inf_j)`` so
    identically-zero entries are still measured on a meaningful scale.
    """
    if not 1e-7 <= step <= 1e-3:
        raise ValueError("step must lie in [1e-7, 1e-3]")
    if v is None:
        v = np.linspace(-6.0, 6.0, 241)
    v1 = v / np.sqrt(p.m1)
    v2 = v / np.sqrt(p.m2)
    if tables is None:
        tables = [self_derivative_table(p, 1), self_derivative_table(p, 2),
                  m12_derivative_table(p), m21_derivative_table(p)]
    scales = np.array([p.n_inf_1, p.n_inf_2,
                       p.n_inf_1 / np.sqrt(p.m1), p.n_inf_2 / np.sqrt(p.m2),
                       p.n_inf_1, p.n_inf_2])
    errors = {}
    for j, name in enumerate(MOMENT_NAMES):
        hstep = step * scales[j]
        xp = np.zeros(6)
        xm = np.zeros(6)
        xp[j] = hstep
        xm[j] = -hstep
        plus = exact_maxwellians(p, xp, v1, v2)
        minus = exact_maxwellians(p, xm, v1, v2)
        n_j = p.n_inf_1 if name.endswith("1") else p.n_inf_2
        for table in tables:
            vs = v1 if table.species == 1 else v2
            fd = (plus[table.target] - minus[table.target]) / (2.0 * hstep)
            exact = table.derivative(name, vs)
            feq = equilibrium(p, table.species, vs)
            denom = max(np.max(np.abs(exact)), np.max(feq) / n_j)
            errors[(table.target, name)] = float(np.max(np.abs(fd - exact)) / denom)
    return errors


def check_derivatives_fd(p: MixtureParams, step: float = 1e-5, v=None, tables=None) -> float:
    """Worst relative error of the M12/M21 tables against finite differences."""
    if tables is None:
        tables = [m12_derivative_table(p), m21_derivative_table(p)]
    return max(derivative_errors(p, step, v, tables).values())


# ---------------------------------------------------------------------------
# linearized collision operator


def relaxation_rate(p: MixtureParams, species: int) -> float:
    if species == 1:
        return p.nu11 * p.n_inf_1 + p.nu12 * p.n_inf_2
    return p.nu22 * p.n_inf_2 + p.nu21 * p.n_inf_1


def collision_profiles(p: MixtureParams, species: int, v) -> np.ndarray:
    """Array ``(6, len(v))``: coefficient of each moment in the gain term of species."""
    v = np.asarray(v, dtype=float)
    if species == 1:
        parts = [(p.nu11 * p.n_inf_1, self_derivative_table(p, 1)),
                 (p.nu12 * p.n_inf_2, m12_derivative_table(p))]
    else:
        parts = [(p.nu22 * p.n_inf_2, self_derivative_table(p, 2)),
                 (p.nu21 * p.n_inf_1, m21_derivative_table(p))]
    out = np.zeros((6, v.size))
    for weight, table in parts:
        for j, name in enumerate(MOMENT_NAMES):
            out[j] += weight * table.derivative(name, v)
    return out


def moment_vector(p: MixtureParams, h1, h2, grid1: VelocityGrid, grid2: VelocityGrid) -> np.ndarray:
    a = perturbation_moments(h1, grid1, p.m1)
    b = perturbation_moments(h2, grid2, p.m2)
    return np.array([a.sigma, b.sigma, a.mu, b.mu, a.tau, b.tau])


def linearized_rhs(p: MixtureParams, h1, h2, grid1: VelocityGrid,
                   grid2: VelocityGrid | None = None, k: int = 0):
    """Right-hand side of the linearized system for one Fourier mode.

    With ``k=0`` (default) only the collision part is returned; otherwise the
    transport term ``-i k (2 pi / L) v h`` is included as well.
    """
    grid2 = grid1 if grid2 is None else grid2
    h1 = np.asarray(h1)
    h2 = np.asarray(h2)
    x = moment_vector(p, h1, h2, grid1, grid2)
    R1 = x @ collision_profiles(p, 1, grid1.nodes) - relaxation_rate(p, 1) * h1
    R2 = x @ collision_profiles(p, 2, grid2.nodes) - relaxation_rate(p, 2) * h2
    if k:
        kappa = 2.0 * np.pi * k / p.L
        R1 = R1 - 1j * kappa * grid1.nodes * h1
        R2 = R2 - 1j * kappa * grid2.nodes * h2
    return R1, R2
