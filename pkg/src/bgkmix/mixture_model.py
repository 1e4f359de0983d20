"""Two-species BGK mixture: parameters, Maxwellians and the nonlinear collision terms.

Everything is one-dimensional in velocity.  The mixture Maxwellians ``M12`` and
``M21`` take their mean velocities and temperatures from interpolations of the
species values, tuned so that particle number, total momentum and total energy
are conserved by the collision operator.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, fields

import numpy as np
from scipy.special import roots_hermitenorm

SQRT_2PI = math.sqrt(2.0 * math.pi)

PARAM_KEYS = (
    "m1", "m2", "nu11", "nu12", "nu21", "nu22",
    "epsilon", "delta", "alpha", "gamma", "n_inf_1", "n_inf_2", "L",
)


class NonPositive(ValueError):
    """A quantity that must be strictly positive was not."""


class NonPositiveTemperature(NonPositive):
    pass


class DegenerateDensity(ValueError):
    pass


@dataclass(frozen=True)
class Check:
    """One admissibility test: ``lhs <relation> rhs``."""

    name: str
    lhs: float
    rhs: float
    relation: str
    ok: bool
    kind: str = "constraint"

    def describe(self) -> str:
        status = "ok" if self.ok else "VIOLATED"
        return f"{self.name}: {self.lhs:.17g} {self.relation} {self.rhs:.17g} [{status}]"


class ConstraintViolation(ValueError):
    """Raised by :func:`validate`; carries every failed :class:`Check`."""

    def __init__(self, violations: list[Check]):
        self.violations = list(violations)
        super().__init__("; ".join(v.describe() for v in self.violations))


@dataclass(frozen=True)
class MixtureParams:
    m1: float = 1.0
    m2: float = 1.0
    nu11: float = 0.5
    nu12: float = 0.5
    nu21: float = 0.5
    nu22: float = 0.5
    epsilon: float = 1.0
    delta: float = 0.5
    alpha: float = 0.5
    gamma: float = 0.0
    n_inf_1: float = 1.0
    n_inf_2: float = 1.0
    L: float = 2.0 * math.pi

    @classmethod
    def from_mapping(cls, mapping) -> "MixtureParams":
        unknown = set(mapping) - set(PARAM_KEYS)
        if unknown:
            raise KeyError(f"unknown parameter keys: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in mapping.items()})

    def as_dict(self) -> dict[str, float]:
        return {f.name: float(getattr(self, f.name)) for f in fields(MixtureParams)}

    def digest(self) -> str:
        blob = json.dumps(self.as_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    @property
    def mass_ratio(self) -> float:
        return self.m1 / self.m2

    def mass(self, species: int) -> float:
        return self.m1 if species == 1 else self.m2

    def n_inf(self, species: int) -> float:
        return self.n_inf_1 if species == 1 else self.n_inf_2

    def normalization(self) -> tuple[float, float]:
        """Row sums ``nu11 n1 + nu12 n2`` and ``nu22 n2 + nu21 n1``."""
        return (
            self.nu11 * self.n_inf_1 + self.nu12 * self.n_inf_2,
            self.nu22 * self.n_inf_2 + self.nu21 * self.n_inf_1,
        )


@dataclass(frozen=True)
class ValidatedParams(MixtureParams):
    theorem_eligible: bool = False

    def raw(self) -> MixtureParams:
        return MixtureParams(**self.as_dict())


def delta_lower_bound(m1: float, m2: float, epsilon: float) -> float:
    r = m1 / m2 * epsilon
    return (r - 1.0) / (1.0 + r)


def gamma_upper_bound(m1: float, m2: float, epsilon: float, delta: float) -> float:
    r = m1 / m2 * epsilon
    return m1 * (1.0 - delta) * ((1.0 + r) * delta + 1.0 - r)


def check_constraints(p: MixtureParams, rtol: float = 1e-12) -> list[Check]:
    """Evaluate every admissibility constraint; nothing is raised here."""
    checks = []
    for name in ("m1", "m2", "n_inf_1", "n_inf_2", "L"):
        val = float(getattr(p, name))
        checks.append(Check(f"{name} > 0", val, 0.0, ">", val > 0, kind="non_positive"))
    for name in ("nu11", "nu12", "nu21", "nu22"):
        val = float(getattr(p, name))
        checks.append(Check(f"{name} >= 0", val, 0.0, ">=", val >= 0))
    checks.append(Check("epsilon > 0", p.epsilon, 0.0, ">", p.epsilon > 0))
    checks.append(Check("epsilon <= 1", p.epsilon, 1.0, "<=", p.epsilon <= 1))
    rhs = p.epsilon * p.nu21
    same = math.isclose(p.nu12, rhs, rel_tol=rtol, abs_tol=1e-300)
    checks.append(Check("nu12 = epsilon*nu21", p.nu12, rhs, "==", same))
    checks.append(Check("alpha >= 0", p.alpha, 0.0, ">=", p.alpha >= 0))
    checks.append(Check("alpha <= 1", p.alpha, 1.0, "<=", p.alpha <= 1))
    checks.append(Check("gamma >= 0", p.gamma, 0.0, ">=", p.gamma >= 0))
    if p.m1 > 0 and p.m2 > 0 and p.epsilon > 0:
        lo = delta_lower_bound(p.m1, p.m2, p.epsilon)
        checks.append(Check("delta >= (eps*m1/m2 - 1)/(1 + eps*m1/m2)", p.delta, lo, ">=",
                            p.delta >= lo - rtol * max(1.0, abs(lo))))
        hi = gamma_upper_bound(p.m1, p.m2, p.epsilon, p.delta)
        checks.append(Check("gamma <= m1(1-delta)[(1+eps*m1/m2)delta + 1 - eps*m1/m2]",
                            p.gamma, hi, "<=", p.gamma <= hi + rtol * max(1.0, abs(hi))))
    checks.append(Check("delta <= 1", p.delta, 1.0, "<=", p.delta <= 1))
    return checks


def theorem_checks(p: MixtureParams, rtol: float = 1e-12) -> list[Check]:
    r1, r2 = p.normalization()
    return [
        Check("nu11*n_inf_1 + nu12*n_inf_2 = 1", r1, 1.0, "==", math.isclose(r1, 1.0, rel_tol=rtol)),
        Check("nu22*n_inf_2 + nu21*n_inf_1 = 1", r2, 1.0, "==", math.isclose(r2, 1.0, rel_tol=rtol)),
    ]


def validate(raw: MixtureParams) -> ValidatedParams:
    """Check admissibility and return a :class:`ValidatedParams`.

    The decay-theorem normalization only sets ``theorem_eligible``; it is not
    a hard constraint.
    """
    values = raw.as_dict()
    bad = [k for k, v in values.items() if not math.isfinite(v)]
    if bad:
        raise ValueError(f"non-finite parameters: {bad}")
    violations = [c for c in check_constraints(raw) if not c.ok]
    if violations:
        raise ConstraintViolation(violations)
    eligible = all(c.ok for c in theorem_checks(raw))
    return ValidatedParams(**values, theorem_eligible=eligible)


# ---------------------------------------------------------------------------
# velocity grids


@dataclass(frozen=True)
class VelocityGrid:
    """Quadrature nodes and weights for integrals ``int f(v) dv``."""

    nodes: np.ndarray
    weights: np.ndarray
    kind: str = "gauss-hermite"
    scale_mass: float = 1.0

    def __post_init__(self):
        if self.nodes.shape != self.weights.shape or self.nodes.ndim != 1:
            raise ValueError("nodes and weights must be 1-d arrays of equal length")
        if np.any(np.diff(self.nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if np.any(self.weights < 0):
            raise ValueError("weights must be nonnegative")

    def __len__(self) -> int:
        return self.nodes.size

    def integrate(self, values):
        return np.asarray(values) @ self.weights


def hermite_functions(s: np.ndarray, order: int) -> np.ndarray:
    """Rows ``He_m(s) exp(-s^2/4) / sqrt(m!)`` for ``m < order``; bounded for any s."""
    s = np.asarray(s, dtype=float)
    out = np.empty((order,) + s.shape)
    out[0] = np.exp(-0.25 * s * s)
    if order > 1:
        out[1] = s * out[0]
    for m in range(1, order - 1):
        out[m + 1] = (s * out[m] - math.sqrt(m) * out[m - 1]) / math.sqrt(m + 1)
    return out


def gauss_hermite_grid(n: int = 128, mass: float = 1.0) -> VelocityGrid:
    """Gauss-Hermite rule for ``dv`` with nodes matched to a mass-``mass`` Maxwellian.

    Weights come from the Christoffel function of the Hermite functions, so
    they stay finite where the textbook weight times ``exp(s^2/2)`` would
    overflow (n of a few hundred).
    """
    s, _ = roots_hermitenorm(n)
    christoffel = np.sum(hermite_functions(s, n) ** 2, axis=0)
    w = SQRT_2PI / christoffel / math.sqrt(mass)
    return VelocityGrid(s / math.sqrt(mass), w, "gauss-hermite", float(mass))


def trapezoid_grid(n: int, v_max: float) -> VelocityGrid:
    v = np.linspace(-v_max, v_max, n)
    w = np.full(n, v[1] - v[0])
    w[[0, -1]] *= 0.5
    return VelocityGrid(v, w, "trapezoid", 1.0)


# ---------------------------------------------------------------------------
# Maxwellians and moments


@dataclass(frozen=True)
class MacroState:
    n: float
    u: float
    T: float


def maxwellian(n, u, T, m, v):
    if np.any(np.asarray(n) <= 0) or np.any(np.asarray(T) <= 0) or np.any(np.asarray(m) <= 0):
        raise NonPositive(f"maxwellian needs n, T, m > 0 (got n={n}, T={T}, m={m})")
    v = np.asarray(v)
    return n * np.sqrt(m / (2.0 * np.pi * T)) * np.exp(-m * (v - u) ** 2 / (2.0 * T))


def equilibrium(p: MixtureParams, species: int, v):
    return maxwellian(p.n_inf(species), 0.0, 1.0, p.mass(species), v)


def mixture_velocities(p: MixtureParams, u1, u2):
    u12 = p.delta * u1 + (1.0 - p.delta) * u2
    u21 = u2 - p.mass_ratio * p.epsilon * (1.0 - p.delta) * (u2 - u1)
    return u12, u21


def mixture_temperatures(p: MixtureParams, u1, u2, T1, T2):
    if np.any(np.asarray(T1) <= 0) or np.any(np.asarray(T2) <= 0):
        raise NonPositiveTemperature(f"species temperatures must be positive (T1={T1}, T2={T2})")
    du2 = np.abs(u1 - u2) ** 2
    eps, d, r = p.epsilon, p.delta, p.mass_ratio
    T12 = p.alpha * T1 + (1.0 - p.alpha) * T2 + p.gamma * du2
    coef = eps * p.m1 * (1.0 - d) * (r * eps * (d - 1.0) + d + 1.0) - eps * p.gamma
    T21 = coef * du2 + eps * (1.0 - p.alpha) * T1 + (1.0 - eps * (1.0 - p.alpha)) * T2
    return T12, T21


def moments(f, grid: VelocityGrid, m: float, tol: float = 1e-300) -> MacroState:
    n = grid.integrate(f)
    if not n > tol:
        raise DegenerateDensity(f"number density {n} is not positive")
    v = grid.nodes
    u = grid.integrate(v * f) / n
    T = m * grid.integrate((v - u) ** 2 * f) / n
    return MacroState(float(n), float(u), float(T))


def nonlinear_rhs(p: MixtureParams, f1, f2, grid1: VelocityGrid, grid2: VelocityGrid | None = None):
    """Collision terms ``(Q1, Q2)`` of the nonlinear model, sampled on the grids of f1, f2."""
    grid2 = grid1 if grid2 is None else grid2
    s1 = moments(f1, grid1, p.m1)
    s2 = moments(f2, grid2, p.m2)
    u12, u21 = mixture_velocities(p, s1.u, s2.u)
    T12, T21 = mixture_temperatures(p, s1.u, s2.u, s1.T, s2.T)
    v1, v2 = grid1.nodes, grid2.nodes
    M1 = maxwellian(s1.n, s1.u, s1.T, p.m1, v1)
    M12 = maxwellian(s1.n, u12, T12, p.m1, v1)
    M2 = maxwellian(s2.n, s2.u, s2.T, p.m2, v2)
    M21 = maxwellian(s2.n, u21, T21, p.m2, v2)
    Q1 = p.nu11 * s1.n * (M1 - f1) + p.nu12 * s2.n * (M12 - f1)
    Q2 = p.nu22 * s2.n * (M2 - f2) + p.nu21 * s1.n * (M21 - f2)
    return Q1, Q2


def sample_admissible(rng: np.random.Generator, normalized: bool = True) -> MixtureParams:
    """Random admissible parameters; with ``normalized`` the decay-theorem sums equal 1."""
    m1, m2 = np.exp(rng.uniform(np.log(0.2), np.log(5.0), size=2))
    eps = rng.uniform(0.1, 1.0)
    n1, n2 = rng.uniform(0.3, 3.0, size=2)
    lo = delta_lower_bound(m1, m2, eps)
    delta = rng.uniform(lo, 1.0)
    gamma = rng.uniform(0.0, 1.0) * max(0.0, gamma_upper_bound(m1, m2, eps, delta))
    alpha = rng.uniform(0.0, 1.0)
    if normalized:
        nu21 = rng.uniform(0.1, 0.9) * min(1.0 / (eps * n2), 1.0 / n1)
        nu12 = eps * nu21
        nu11 = (1.0 - nu12 * n2) / n1
        nu22 = (1.0 - nu21 * n1) / n2
    else:
        nu11, nu21, nu22 = rng.uniform(0.0, 2.0, size=3)
        nu12 = eps * nu21
    L = rng.uniform(1.0, 4.0 * math.pi)
    return MixtureParams(float(m1), float(m2), float(nu11), float(nu12), float(nu21), float(nu22),
                         float(eps), float(delta), float(alpha), float(gamma), float(n1), float(n2),
                         float(L))
