"""Brute-force velocity-grid discretization of one Fourier mode.

Used only to cross-check the Hermite solver.  Unknowns are point values of
``h_1`` and ``h_2``; moments are taken by quadrature, so the collision
operator becomes ``diag(-rate) + profiles^T @ moment_rows`` (rank <= 12 plus
diagonal).  Nothing from the Hermite machinery is used to build it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .linearization import collision_profiles, relaxation_rate
from .mixture_model import MixtureParams, VelocityGrid, gauss_hermite_grid, trapezoid_grid
from .spectral_galerkin import SpectralField, evolve, mode_moments, reconstruct_mode


class GridTooCoarse(ValueError):
    pass


@dataclass(frozen=True)
class GridGenerator:
    k: int
    grids: tuple[VelocityGrid, VelocityGrid]
    B: np.ndarray
    collision: np.ndarray

    @property
    def sizes(self) -> tuple[int, int]:
        return len(self.grids[0]), len(self.grids[1])

    def split(self, h):
        n1 = len(self.grids[0])
        return h[..., :n1], h[..., n1:]


def default_grids(p: MixtureParams, n_v: int = 400, kind: str = "gauss-hermite"):
    if kind == "gauss-hermite":
        return gauss_hermite_grid(n_v, p.m1), gauss_hermite_grid(n_v, p.m2)
    if kind == "trapezoid":
        v_max = 10.0 / math.sqrt(min(p.m1, p.m2))
        g = trapezoid_grid(n_v, v_max)
        return g, g
    raise ValueError(f"unknown grid kind {kind!r}")


def check_resolution(grid: VelocityGrid, mass: float, per_width: int = 8) -> None:
    """Require ``per_width`` nodes per thermal speed ``sqrt(2/mass)`` and coverage to 6 speeds."""
    width = math.sqrt(2.0 / mass)
    v = grid.nodes
    bulk = v[np.abs(v) <= width]
    if bulk.size < 2 or np.max(np.diff(bulk)) > width / per_width:
        raise GridTooCoarse(f"grid spacing too large for thermal width {width:.3g}")
    if v[0] > -6.0 * width or v[-1] < 6.0 * width:
        raise GridTooCoarse(f"grid does not cover +-6 thermal speeds ({6 * width:.3g})")


def moment_rows(p: MixtureParams, grids) -> np.ndarray:
    """Quadrature functionals (6, N1+N2) for ``sigma1, sigma2, mu1, mu2, tau1, tau2``."""
    g1, g2 = grids
    n1 = len(g1)
    rows = np.zeros((6, n1 + len(g2)))
    rows[0, :n1] = g1.weights
    rows[1, n1:] = g2.weights
    rows[2, :n1] = g1.weights * g1.nodes
    rows[3, n1:] = g2.weights * g2.nodes
    rows[4, :n1] = p.m1 * g1.weights * g1.nodes ** 2
    rows[5, n1:] = p.m2 * g2.weights * g2.nodes ** 2
    return rows


def oracle_generator(p: MixtureParams, k: int, grid=None) -> GridGenerator:
    """Assemble ``B = -i k (2 pi/L) diag(v) + collision`` on a velocity grid.

    ``grid`` may be one shared :class:`VelocityGrid`, a pair (one per
    species) or ``None`` for mass-scaled Gauss-Hermite grids of 400 nodes.
    """
    if grid is None:
        grids = default_grids(p)
    elif isinstance(grid, VelocityGrid):
        grids = (grid, grid)
    else:
        grids = tuple(grid)
    check_resolution(grids[0], p.m1)
    check_resolution(grids[1], p.m2)
    profiles = np.concatenate([collision_profiles(p, 1, grids[0].nodes),
                               collision_profiles(p, 2, grids[1].nodes)], axis=1)
    rates = np.concatenate([np.full(len(grids[0]), relaxation_rate(p, 1)),
                            np.full(len(grids[1]), relaxation_rate(p, 2))])
    collision = profiles.T @ moment_rows(p, grids) - np.diag(rates)
    kappa = 2.0 * math.pi * k / p.L
    v = np.concatenate([grids[0].nodes, grids[1].nodes])
    B = collision - 1j * kappa * np.diag(v)
    return GridGenerator(k, grids, B, collision)


def oracle_evolve(g: GridGenerator, h0, t: float):
    if t < 0:
        raise ValueError("t must be nonnegative")
    return expm(g.B * t) @ np.asarray(h0, dtype=complex)


def grid_moments(p: MixtureParams, g: GridGenerator, h) -> np.ndarray:
    return moment_rows(p, g.grids) @ h


def _weighted_norm(p: MixtureParams, grids, h, s_cut: float = 8.0) -> float:
    """Norm in ``L^2((f^inf/n_inf)^{-1} dv)`` over ``|sqrt(m) v| <= s_cut``.

    Beyond the cut the inverse weight amplifies round-off in ``h`` by more
    than ``e^32``, so those nodes are left out.
    """
    total = 0.0
    n1 = len(grids[0])
    for grid, part, mass in ((grids[0], h[:n1], p.m1), (grids[1], h[n1:], p.m2)):
        s2 = mass * grid.nodes ** 2
        keep = s2 <= s_cut ** 2
        inv_weight = math.sqrt(2.0 * math.pi / mass) * np.exp(0.5 * s2[keep])
        total += float(np.sum(grid.weights[keep] * inv_weight * np.abs(part[keep]) ** 2))
    return math.sqrt(total)


@dataclass
class ComparisonReport:
    k: int
    t: float
    M: int
    n_v: tuple[int, int]
    moment_error: float
    profile_error: float
    spectral_moments: np.ndarray
    oracle_moments: np.ndarray

    def to_dict(self) -> dict:
        pack = lambda z: [[float(c.real), float(c.imag)] for c in z]  # noqa: E731
        return {
            "k": self.k, "t": self.t, "M": self.M, "n_v": list(self.n_v),
            "moment_error": self.moment_error, "profile_error": self.profile_error,
            "spectral_moments": pack(self.spectral_moments),
            "oracle_moments": pack(self.oracle_moments),
        }


def _rel(a, b) -> float:
    scale = max(np.linalg.norm(a), np.linalg.norm(b))
    return 0.0 if scale == 0 else float(np.linalg.norm(a - b) / scale)


def compare(fld: SpectralField, p: MixtureParams, k: int, t: float, grid=None,
            transport: str = "mass-scaled") -> ComparisonReport:
    """Evolve mode ``k`` both ways and report relative moment / profile discrepancies."""
    g = oracle_generator(p, k, grid)
    g1, g2 = g.grids
    h1, h2 = reconstruct_mode(fld, k, g1.nodes, g2.nodes)
    h_grid = oracle_evolve(g, np.concatenate([h1, h2]), t)
    single = SpectralField(p, fld.M, k, np.zeros((k + 1, fld.M + 1), complex),
                           np.zeros((k + 1, fld.M + 1), complex))
    single.hhat1[k] = fld.hhat1[k]
    single.hhat2[k] = fld.hhat2[k]
    later = evolve(single, t, transport=transport)
    s1, s2 = mode_moments(later.mode(k), p)
    spec_m = np.array([s1.sigma, s2.sigma, s1.mu, s2.mu, s1.tau, s2.tau], dtype=complex)
    grid_m = grid_moments(p, g, h_grid)
    r1, r2 = reconstruct_mode(later, k, g1.nodes, g2.nodes)
    h_spec = np.concatenate([r1, r2])
    denom = max(_weighted_norm(p, g.grids, h_spec), _weighted_norm(p, g.grids, h_grid))
    prof = 0.0 if denom == 0 else _weighted_norm(p, g.grids, h_spec - h_grid) / denom
    return ComparisonReport(k, float(t), fld.M, g.sizes, _rel(spec_m, grid_m), float(prof),
                            spec_m, grid_m)
