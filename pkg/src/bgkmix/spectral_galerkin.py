"""Fourier x Hermite Galerkin reduction of the linearized mixture system.

Species ``i`` is expanded in ``g_{i,m}(v) = He_m(sqrt(m_i) v) / sqrt(m!) * f_i^inf(v) / n_inf_i``,
orthonormal in ``L^2((f_i^inf / n_inf_i)^{-1} dv)``.  Each Fourier mode ``k``
then evolves independently under a ``2(M+1)`` square generator ``A_k``.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .linearization import PerturbationMoments
from ._parallel import ordered_map
from .mixture_model import (
    SQRT_2PI,
    MixtureParams,
    VelocityGrid,
    gauss_hermite_grid,
    hermite_functions,
)

TRANSPORT_CONVENTIONS = ("mass-scaled", "paper-literal")


class OrderOutOfRange(IndexError):
    pass


class AliasingWarning(UserWarning):
    pass


class StepSizeTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class HermiteBasis:
    species: int
    mass: float
    n_inf: float
    M: int

    @classmethod
    def for_species(cls, p: MixtureParams, species: int, M: int) -> "HermiteBasis":
        return cls(species, p.mass(species), p.n_inf(species), M)

    def evaluate(self, v) -> np.ndarray:
        """All basis functions at ``v``; shape ``(M+1,) + v.shape``."""
        s = math.sqrt(self.mass) * np.asarray(v, dtype=float)
        # He_m(s) e^{-s^2/2} / sqrt(m!) = hermite_function * e^{-s^2/4}
        phi = hermite_functions(s, self.M + 1)
        return phi * (np.exp(-0.25 * s * s) * math.sqrt(self.mass) / SQRT_2PI)

    def projector(self, grid: VelocityGrid) -> np.ndarray:
        """Rows ``W_j He_m(s_j)/sqrt(m!)`` so that ``projector @ h`` gives coefficients."""
        s = math.sqrt(self.mass) * grid.nodes
        phi = hermite_functions(s, self.M + 1)
        return phi * (grid.weights * np.exp(0.25 * s * s))


def basis_eval(b: HermiteBasis, m: int, v):
    if not 0 <= m <= b.M:
        raise OrderOutOfRange(f"order {m} outside 0..{b.M}")
    return b.evaluate(v)[m]


@dataclass(frozen=True)
class CouplingMatrices:
    L11: np.ndarray
    L12: np.ndarray
    L13: np.ndarray
    L14: np.ndarray
    L21: np.ndarray
    L22: np.ndarray
    L23: np.ndarray
    L24: np.ndarray


def transport_matrix(M: int, mass: float = 1.0) -> np.ndarray:
    off = np.sqrt(np.arange(1, M + 1)) / math.sqrt(mass)
    return np.diag(off, 1) + np.diag(off, -1)


def _diag(M: int, head, tail: float = 1.0) -> np.ndarray:
    d = np.full(M + 1, tail)
    d[: min(len(head), M + 1)] = head[: M + 1]
    return np.diag(d)


def coupling_matrices(p: MixtureParams, M: int, transport: str = "mass-scaled") -> CouplingMatrices:
    if transport not in TRANSPORT_CONVENTIONS:
        raise ValueError(f"unknown transport convention {transport!r}")
    if transport == "mass-scaled":
        L11, L21 = transport_matrix(M, p.m1), transport_matrix(M, p.m2)
    else:
        L11 = L21 = transport_matrix(M)
    d, a, eps = p.delta, p.alpha, p.epsilon
    r, rn = p.m1 / p.m2, p.n_inf_1 / p.n_inf_2
    sr = math.sqrt(r)
    L12 = _diag(M, [0.0, 0.0, 0.0])
    L13 = _diag(M, [0.0, 1.0 - d, 1.0 - a])
    L14 = _diag(M, [0.0, (1.0 - d) * rn * sr, (1.0 - a) * rn], tail=0.0)
    L23 = _diag(M, [0.0, r * eps * (1.0 - d), eps * (1.0 - a)])
    L24 = _diag(M, [0.0, sr * eps * (1.0 - d) / rn, eps * (1.0 - a) / rn], tail=0.0)
    return CouplingMatrices(L11, L12.copy(), L13, L14, L21, L12.copy(), L23, L24)


@dataclass(frozen=True)
class ModeGenerator:
    k: int
    A: np.ndarray


def mode_generator(p: MixtureParams, M: int, k: int, transport: str = "mass-scaled",
                   mats: CouplingMatrices | None = None) -> ModeGenerator:
    if k < 0:
        raise ValueError("mode index must be nonnegative")
    c = mats if mats is not None else coupling_matrices(p, M, transport)
    kappa = 2.0 * math.pi * k / p.L
    a11 = -1j * kappa * c.L11 - p.nu11 * p.n_inf_1 * c.L12 - p.nu12 * p.n_inf_2 * c.L13
    a12 = p.nu12 * p.n_inf_2 * c.L14
    a21 = p.nu21 * p.n_inf_1 * c.L24
    a22 = -1j * kappa * c.L21 - p.nu22 * p.n_inf_2 * c.L22 - p.nu21 * p.n_inf_1 * c.L23
    return ModeGenerator(k, np.block([[a11, a12], [a21, a22]]).astype(complex))


def spectral_abscissa(A: np.ndarray) -> float:
    return float(np.max(np.linalg.eigvals(A).real))


# ---------------------------------------------------------------------------
# fields


@dataclass(frozen=True)
class ModeState:
    k: int
    hhat1: np.ndarray
    hhat2: np.ndarray

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.hhat1, self.hhat2])


@dataclass
class SpectralField:
    """Coefficients ``hhat_i[k, m]`` for ``k = 0..K``; negative k are conjugates."""

    params: MixtureParams
    M: int
    K: int
    hhat1: np.ndarray
    hhat2: np.ndarray
    meta: dict = field(default_factory=dict)

    @classmethod
    def zeros(cls, p: MixtureParams, M: int, K: int) -> "SpectralField":
        shape = (K + 1, M + 1)
        return cls(p, M, K, np.zeros(shape, complex), np.zeros(shape, complex))

    def copy(self) -> "SpectralField":
        return SpectralField(self.params, self.M, self.K, self.hhat1.copy(), self.hhat2.copy(),
                             dict(self.meta))

    @property
    def modes(self) -> list[ModeState]:
        return [self.mode(k) for k in range(self.K + 1)]

    def mode(self, k: int) -> ModeState:
        return ModeState(k, self.hhat1[k], self.hhat2[k])

    def stacked(self) -> np.ndarray:
        """Array ``(K+1, 2(M+1))`` of ``(hhat1; hhat2)`` per mode."""
        return np.concatenate([self.hhat1, self.hhat2], axis=1)

    def with_stacked(self, y: np.ndarray) -> "SpectralField":
        n = self.M + 1
        return SpectralField(self.params, self.M, self.K, y[:, :n].copy(), y[:, n:].copy(),
                             dict(self.meta))


def project(p: MixtureParams, h1fn, h2fn, M: int, K: int, n_x: int | None = None,
            n_v: int = 128) -> SpectralField:
    """Fourier-Hermite coefficients of ``h_i(x, v)`` (vectorized callables)."""
    n_x = n_x or 2 * (K + 1)
    if n_x < 2 * K + 1:
        raise ValueError("need at least 2K+1 spatial samples")
    x = np.arange(n_x) * p.L / n_x
    out = []
    for species, fn in ((1, h1fn), (2, h2fn)):
        basis = HermiteBasis.for_species(p, species, M)
        grid = gauss_hermite_grid(n_v, basis.mass)
        vals = np.asarray(fn(x[:, None], grid.nodes[None, :]), dtype=complex)
        vals = np.broadcast_to(vals, (n_x, grid.nodes.size))
        fourier = np.fft.fft(vals, axis=0)[: K + 1] / n_x
        out.append(fourier @ basis.projector(grid).T)
    fld = SpectralField(p, M, K, out[0], out[1])
    energy = mode_energy(fld)
    total = energy[0] + 2.0 * energy[1:].sum()
    if K > 0 and total > 0 and 2.0 * energy[K] > 0.01 * total:
        warnings.warn(f"top Fourier shell k={K} holds {2 * energy[K] / total:.1%} of the energy",
                      AliasingWarning, stacklevel=2)
    return fld


def mode_energy(fld: SpectralField) -> np.ndarray:
    return np.sum(np.abs(fld.hhat1) ** 2 + np.abs(fld.hhat2) ** 2, axis=1)


def _reconstruct_complex(fld: SpectralField, x, v):
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    ks = np.arange(-fld.K, fld.K + 1)
    phase = np.exp(1j * 2.0 * np.pi / fld.params.L * np.outer(x, ks))
    out = []
    for species, coeffs in ((1, fld.hhat1), (2, fld.hhat2)):
        full = np.concatenate([np.conj(coeffs[:0:-1]), coeffs], axis=0)
        g = HermiteBasis.for_species(fld.params, species, fld.M).evaluate(v)
        out.append(phase @ full @ g)
    return out[0], out[1]


def reconstruct(fld: SpectralField, x, v):
    """Sample ``h_1, h_2`` on the tensor grid ``x`` by ``v``; arrays ``(len(x), len(v))``."""
    h1, h2 = _reconstruct_complex(fld, x, v)
    return h1.real, h2.real


def reconstruct_mode(fld: SpectralField, k: int, v1, v2):
    """Velocity profile ``h_{i,k}(v)`` of a single Fourier mode."""
    b1 = HermiteBasis.for_species(fld.params, 1, fld.M)
    b2 = HermiteBasis.for_species(fld.params, 2, fld.M)
    return fld.hhat1[k] @ b1.evaluate(v1), fld.hhat2[k] @ b2.evaluate(v2)


def mode_moments(ms: ModeState, p: MixtureParams):
    if ms.hhat1.size < 3:
        raise ValueError("need at least orders 0..2")
    out = []
    for coeffs, m in ((ms.hhat1, p.m1), (ms.hhat2, p.m2)):
        out.append(PerturbationMoments(coeffs[0], coeffs[1] / math.sqrt(m),
                                       math.sqrt(2.0) * coeffs[2] + coeffs[0]))
    return out[0], out[1]


def normalize_field(fld: SpectralField) -> SpectralField:
    """Project mode 0 onto data with zero counts, total momentum and total energy.

    Mode 0 is also made real.  Other modes are left untouched.
    """
    out = fld.copy()
    p = fld.params
    a, b = out.hhat1[0].real.copy(), out.hhat2[0].real.copy()
    a[0] = b[0] = 0.0
    if fld.M >= 1:
        s1, s2 = math.sqrt(p.m1), math.sqrt(p.m2)
        c = (s1 * a[1] + s2 * b[1]) / (p.m1 + p.m2)
        a[1] -= c * s1
        b[1] -= c * s2
    if fld.M >= 2:
        mean = 0.5 * (a[2] + b[2])
        a[2] -= mean
        b[2] -= mean
    out.hhat1[0] = a
    out.hhat2[0] = b
    return out


def random_field(p: MixtureParams, M: int, K: int, seed: int = 0, k_max: int | None = None,
                 m_max: int = 6, decay: float = 0.7) -> SpectralField:
    """Normalized random field, band-limited to ``k <= k_max`` and orders ``<= m_max``."""
    rng = np.random.default_rng(seed)
    k_max = K if k_max is None else min(k_max, K)
    m_max = min(m_max, M)
    fld = SpectralField.zeros(p, M, K)
    amp = decay ** np.arange(m_max + 1)
    for k in range(k_max + 1):
        for target in (fld.hhat1, fld.hhat2):
            z = rng.normal(size=m_max + 1) + 1j * rng.normal(size=m_max + 1)
            target[k, : m_max + 1] = amp * z / (1.0 + k)
    return normalize_field(fld)


def momentum_exchange_field(p: MixtureParams, M: int, K: int, amplitude: float = 1.0) -> SpectralField:
    """Mode-0 momentum exchange between the species with zero total momentum."""
    fld = SpectralField.zeros(p, M, K)
    fld.hhat1[0, 1] = amplitude * math.sqrt(p.m2)
    fld.hhat2[0, 1] = -amplitude * math.sqrt(p.m1)
    return fld


def momentum_exchange_rate(p: MixtureParams) -> float:
    """Exact decay rate of :func:`momentum_exchange_field` coefficients."""
    return p.nu12 * (1.0 - p.delta) * (p.n_inf_2 + p.n_inf_1 * p.m1 / p.m2)


# ---------------------------------------------------------------------------
# time evolution


def _frozen_rows(A: np.ndarray) -> np.ndarray:
    return np.flatnonzero(~np.any(A, axis=1))


def propagator(A: np.ndarray, t: float) -> np.ndarray:
    """``exp(A t)``, with rows of A that vanish identically kept as exact identity rows."""
    E = expm(A * t)
    frozen = _frozen_rows(A)
    E[frozen] = 0.0
    E[frozen, frozen] = 1.0
    return E


def rk4_advance(A: np.ndarray, y: np.ndarray, t: float, dt: float, bound: float = 2.5) -> np.ndarray:
    if dt <= 0:
        raise ValueError("dt must be positive")
    if dt * np.linalg.norm(A, 2) > bound:
        raise StepSizeTooLarge(f"dt*|A| = {dt * np.linalg.norm(A, 2):.3g} exceeds {bound}")
    n = int(math.ceil(t / dt - 1e-12))
    h = t / n if n else 0.0
    for _ in range(n):
        k1 = A @ y
        k2 = A @ (y + 0.5 * h * k1)
        k3 = A @ (y + 0.5 * h * k2)
        k4 = A @ (y + h * k3)
        y = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def generators(p: MixtureParams, M: int, K: int, transport: str = "mass-scaled") -> list[np.ndarray]:
    mats = coupling_matrices(p, M, transport)
    return [mode_generator(p, M, k, transport, mats).A for k in range(K + 1)]


def evolve(fld: SpectralField, t: float, method: str = "expm", dt: float | None = None,
           transport: str = "mass-scaled") -> SpectralField:
    """Advance every Fourier mode by time ``t`` (``method`` is ``"expm"`` or ``"rk4"``)."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    y = fld.stacked()
    out = np.empty_like(y)
    for k, A in enumerate(generators(fld.params, fld.M, fld.K, transport)):
        if method == "expm":
            out[k] = propagator(A, t) @ y[k]
        elif method == "rk4":
            if dt is None:
                raise ValueError("rk4 needs dt")
            out[k] = rk4_advance(A, y[k], t, dt)
        else:
            raise ValueError(f"unknown method {method!r}")
    return fld.with_stacked(out)


def trajectory(fld: SpectralField, times, transport: str = "mass-scaled") -> np.ndarray:
    """Exact-exponential states at ``times``; array ``(len(times), K+1, 2(M+1))``.

    Uniformly spaced times reuse one step propagator per mode.
    """
    times = np.asarray(times, dtype=float)
    y0 = fld.stacked()
    out = np.empty((times.size,) + y0.shape, dtype=complex)
    steps = np.diff(times)
    uniform = times.size > 1 and np.allclose(steps, steps[0], rtol=1e-12, atol=0)

    def one(item):
        k, A = item
        if uniform:
            step = propagator(A, steps[0])
            y = propagator(A, times[0]) @ y0[k]
            for i in range(times.size):
                out[i, k] = y
                y = step @ y
        else:
            for i, t in enumerate(times):
                out[i, k] = propagator(A, t) @ y0[k]

    ordered_map(one, enumerate(generators(fld.params, fld.M, fld.K, transport)))
    return out


# ---------------------------------------------------------------------------
# file format


def save_field(fld: SpectralField, path) -> None:
    """Columnar text: ``#`` header lines, then one row per (k, species)."""
    n = fld.M + 1
    cols = ["k", "species"] + [f"{part}{m}" for m in range(n) for part in ("re", "im")]
    lines = [
        "# bgkmix spectral field v1",
        f"# M={fld.M} K={fld.K} L={fld.params.L!r} params_hash={fld.params.digest()}",
        "# params=" + json.dumps(fld.params.as_dict(), sort_keys=True),
        ",".join(cols),
    ]
    for k in range(fld.K + 1):
        for species, coeffs in ((1, fld.hhat1), (2, fld.hhat2)):
            vals = np.empty(2 * n)
            vals[0::2] = coeffs[k].real
            vals[1::2] = coeffs[k].imag
            lines.append(f"{k},{species}," + ",".join(f"{x:.17e}" for x in vals))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_field(path) -> SpectralField:
    header = {}
    params = None
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("# params="):
                params = MixtureParams.from_mapping(json.loads(line[len("# params="):]))
            elif line.startswith("# M="):
                header = dict(item.split("=", 1) for item in line[2:].split())
            elif line and not line.startswith("#") and not line.startswith("k,"):
                rows.append([float(x) for x in line.split(",")])
    if params is None or not header:
        raise ValueError(f"{path}: missing field header")
    M, K = int(header["M"]), int(header["K"])
    if header.get("params_hash") != params.digest():
        raise ValueError(f"{path}: params hash mismatch")
    fld = SpectralField.zeros(params, M, K)
    for row in rows:
        k, species = int(row[0]), int(row[1])
        vals = np.asarray(row[2:])
        target = fld.hhat1 if species == 1 else fld.hhat2
        target[k] = vals[0::2] + 1j * vals[1::2]
    return fld
