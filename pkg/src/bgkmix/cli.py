"""Command line entry point: validate, simulate, certify, compare, decay-check.

Configuration is an INI file (``key = value`` lines under sections).  A
named preset supplies the starting values, the file overrides the preset and
command line flags override the file.  Every document written embeds the
fully resolved configuration and a sha256 of its own content; nothing
time-dependent is recorded, so reruns are byte-identical.

Exit codes: 0 success, 1 validation failure, 2 runtime error,
3 certification failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .grid_oracle import compare, default_grids
from .hypocoercivity import (
    EntropyParams,
    NotTheoremEligible,
    SearchFailed,
    certify,
    entropy_of_states,
    mode_abscissas,
    verify_decay,
)
from .linearization import check_derivatives_fd
from .mixture_model import (
    PARAM_KEYS,
    ConstraintViolation,
    MixtureParams,
    check_constraints,
    theorem_checks,
    validate,
)
from .spectral_galerkin import (
    ModeState,
    SpectralField,
    evolve,
    load_field,
    mode_moments,
    momentum_exchange_field,
    random_field,
    trajectory,
)

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME, EXIT_CERT = 0, 1, 2, 3

INITIAL_PRESETS = ("zero", "single-mode", "random", "file")

_ASYM_N1, _ASYM_N2, _ASYM_NU12, _ASYM_NU21 = 1.5, 0.7, 0.2, 0.6

PRESETS = {
    "symmetric": {},
    "asymmetric": {
        "params": {
            "m1": 1.0, "m2": 3.0, "epsilon": 1.0 / 3.0,
            "nu12": _ASYM_NU12, "nu21": _ASYM_NU21,
            "nu11": (1.0 - _ASYM_NU12 * _ASYM_N2) / _ASYM_N1,
            "nu22": (1.0 - _ASYM_NU21 * _ASYM_N1) / _ASYM_N2,
            "delta": 0.3, "alpha": 0.2, "gamma": 0.05,
            "n_inf_1": _ASYM_N1, "n_inf_2": _ASYM_N2, "L": 4.0 * math.pi,
        },
    },
    "degenerate": {"params": {"delta": 1.0, "alpha": 1.0}},
}


@dataclass
class RunConfig:
    preset: str = "symmetric"
    seed: int = 0
    params: MixtureParams = field(default_factory=MixtureParams)
    transport: str = "mass-scaled"
    # truncation
    M: int = 16
    K: int = 32
    # time
    t_end: float = 10.0
    samples: int = 101
    integrator: str = "expm"
    dt: float = 0.01
    # entropy
    weight_scheme: str = "inverse-density"
    eparams: tuple | None = None
    budget: int = 200
    # initial data
    initial: str = "random"
    initial_file: str = ""
    amplitude: float = 1.0
    k_max: int = 4
    m_max: int = 6
    # oracle comparison
    compare_ks: tuple = (0, 1, 2, 4)
    compare_t: float = 1.0
    compare_M: int = 40
    n_v: int = 400
    grid: str = "gauss-hermite"
    # validation
    fd_step: float = 1e-5
    fd_tol: float = 1e-5
    # output
    out: str = "bgkmix-out"
    per_mode: bool = False

    def to_sections(self) -> dict:
        ep = self.eparams
        return {
            "run": {"preset": self.preset, "seed": self.seed},
            "params": self.params.as_dict(),
            "model": {"transport": self.transport},
            "truncation": {"M": self.M, "K": self.K},
            "time": {"t_end": self.t_end, "samples": self.samples,
                     "integrator": self.integrator, "dt": self.dt},
            "entropy": {"weight_scheme": self.weight_scheme, "budget": self.budget,
                        "alpha_tilde": None if ep is None else ep[0],
                        "beta": None if ep is None else ep[1],
                        "gamma_tilde": None if ep is None else ep[2]},
            "initial": {"preset": self.initial, "file": self.initial_file,
                        "amplitude": self.amplitude, "k_max": self.k_max, "m_max": self.m_max},
            "compare": {"ks": list(self.compare_ks), "t": self.compare_t, "M": self.compare_M,
                        "n_v": self.n_v, "grid": self.grid},
            "validate": {"fd_step": self.fd_step, "fd_tol": self.fd_tol},
            "output": {"dir": self.out, "per_mode": self.per_mode},
        }


# (section, key) -> (attribute, parser)
def _bool(text: str) -> bool:
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _ints(text: str) -> tuple:
    return tuple(int(x) for x in str(text).replace(",", " ").split())


_FIELDS = {
    ("run", "seed"): ("seed", int),
    ("model", "transport"): ("transport", str),
    ("truncation", "M"): ("M", int),
    ("truncation", "K"): ("K", int),
    ("time", "t_end"): ("t_end", float),
    ("time", "samples"): ("samples", int),
    ("time", "integrator"): ("integrator", str),
    ("time", "dt"): ("dt", float),
    ("entropy", "weight_scheme"): ("weight_scheme", str),
    ("entropy", "budget"): ("budget", int),
    ("initial", "preset"): ("initial", str),
    ("initial", "file"): ("initial_file", str),
    ("initial", "amplitude"): ("amplitude", float),
    ("initial", "k_max"): ("k_max", int),
    ("initial", "m_max"): ("m_max", int),
    ("compare", "ks"): ("compare_ks", _ints),
    ("compare", "t"): ("compare_t", float),
    ("compare", "M"): ("compare_M", int),
    ("compare", "n_v"): ("n_v", int),
    ("compare", "grid"): ("grid", str),
    ("validate", "fd_step"): ("fd_step", float),
    ("validate", "fd_tol"): ("fd_tol", float),
    ("output", "dir"): ("out", str),
    ("output", "per_mode"): ("per_mode", _bool),
}
_EP_KEYS = ("alpha_tilde", "beta", "gamma_tilde")


def apply_settings(cfg: RunConfig, settings: dict) -> RunConfig:
    """Apply ``{section: {key: text}}`` on top of ``cfg``."""
    params = cfg.params.as_dict()
    updates = {}
    ep = list(cfg.eparams) if cfg.eparams is not None else [None, None, None]
    for section, values in settings.items():
        for key, raw in values.items():
            if section == "run" and key == "preset":
                continue
            if section == "params":
                if key not in PARAM_KEYS:
                    raise KeyError(f"unknown parameter {key!r}")
                params[key] = float(raw)
            elif section == "entropy" and key in _EP_KEYS:
                ep[_EP_KEYS.index(key)] = None if raw in (None, "", "none") else float(raw)
            elif (section, key) in _FIELDS:
                attr, parse = _FIELDS[(section, key)]
                updates[attr] = parse(raw)
            else:
                raise KeyError(f"unknown config key [{section}] {key}")
    if any(x is not None for x in ep):
        if any(x is None for x in ep):
            raise ValueError("alpha_tilde, beta and gamma_tilde must be given together")
        updates["eparams"] = tuple(ep)
    return replace(cfg, params=MixtureParams(**params), **updates)


def _check_config(cfg: RunConfig) -> None:
    if cfg.preset not in PRESETS:
        raise KeyError(f"unknown preset {cfg.preset!r}; choose from {sorted(PRESETS)}")
    if cfg.initial not in INITIAL_PRESETS:
        raise KeyError(f"unknown initial preset {cfg.initial!r}; choose from {INITIAL_PRESETS}")
    if cfg.initial == "file" and not cfg.initial_file:
        raise ValueError("initial preset 'file' needs [initial] file")
    if cfg.integrator not in ("expm", "rk4"):
        raise ValueError(f"unknown integrator {cfg.integrator!r}")
    if cfg.samples < 2:
        raise ValueError("need at least two samples")


def _read_ini(path) -> dict:
    parser = configparser.ConfigParser()
    parser.optionxform = str
    with open(path) as fh:
        parser.read_file(fh)
    return {s: dict(parser[s]) for s in parser.sections()}


def resolve_config(args: argparse.Namespace) -> RunConfig:
    file_settings = _read_ini(args.config) if args.config else {}
    preset = args.preset or file_settings.get("run", {}).get("preset", "symmetric")
    if preset not in PRESETS:
        raise KeyError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    cfg = apply_settings(RunConfig(preset=preset), PRESETS[preset])
    cfg = apply_settings(cfg, file_settings)
    overrides: dict = {}
    for item in args.set or []:
        key, _, value = item.partition("=")
        section, _, name = key.strip().partition(".")
        if not name:
            raise ValueError(f"--set expects section.key=value, got {item!r}")
        overrides.setdefault(section, {})[name] = value.strip()
    cfg = apply_settings(cfg, overrides)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.out is not None:
        cfg = replace(cfg, out=args.out)
    if args.initial is not None:
        cfg = replace(cfg, initial=args.initial)
    if args.paper_literal_transport:
        cfg = replace(cfg, transport="paper-literal")
    _check_config(cfg)
    return cfg


# ---------------------------------------------------------------------------
# output


def _plain(obj):
    """JSON-ready copy: numpy scalars unwrapped, non-finite floats as strings."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False)


def write_document(cfg: RunConfig, command: str, result: dict, status: str) -> Path:
    body = _plain({"command": command, "status": status, "seed": cfg.seed,
                   "config": cfg.to_sections(), "result": result})
    body["content_hash"] = hashlib.sha256(_dumps(body).encode()).hexdigest()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{command.replace('-', '_')}.json"
    path.write_text(_dumps(body) + "\n")
    return path


def _fmt(x: float) -> str:
    return f"{x:.16e}"


def write_trace(path: Path, columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(float(x)) for x in row])
    text = buf.getvalue()
    path.write_text(text)
    return hashlib.sha256(text.encode()).hexdigest()


# ---------------------------------------------------------------------------
# shared pieces


def initial_field(cfg: RunConfig, M: int | None = None, K: int | None = None) -> SpectralField:
    p = cfg.params
    M = cfg.M if M is None else M
    K = cfg.K if K is None else K
    if cfg.initial == "zero":
        return SpectralField.zeros(p, M, K)
    if cfg.initial == "single-mode":
        return momentum_exchange_field(p, M, K, cfg.amplitude)
    if cfg.initial == "random":
        fld = random_field(p, M, K, seed=cfg.seed, k_max=cfg.k_max, m_max=cfg.m_max)
        fld.hhat1 *= cfg.amplitude
        fld.hhat2 *= cfg.amplitude
        return fld
    fld = load_field(cfg.initial_file)
    if fld.params.digest() != p.digest():
        raise ValueError(f"{cfg.initial_file} was written for parameters {fld.params.digest()}, "
                         f"run uses {p.digest()}")
    return fld


def _certificate(cfg: RunConfig):
    ep = None
    if cfg.eparams is not None:
        ep = EntropyParams(*cfg.eparams, weight_scheme=cfg.weight_scheme)
    return certify(cfg.params, cfg.M, cfg.K, search_budget=cfg.budget, seed=cfg.seed,
                   eparams=ep, weight_scheme=cfg.weight_scheme, transport=cfg.transport)


def _states(cfg: RunConfig, fld: SpectralField, times: np.ndarray) -> np.ndarray:
    if cfg.integrator == "expm":
        return trajectory(fld, times, cfg.transport)
    out = np.empty((times.size,) + fld.stacked().shape, dtype=complex)
    cur, t_prev = fld, 0.0
    for i, t in enumerate(times):
        cur = evolve(cur, t - t_prev, method="rk4", dt=cfg.dt, transport=cfg.transport)
        out[i] = cur.stacked()
        t_prev = t
    return out


# ---------------------------------------------------------------------------
# commands


def cmd_validate(cfg: RunConfig) -> int:
    p = cfg.params
    checks = check_constraints(p)
    failed = [c for c in checks if not c.ok]
    result = {"checks": [asdict(c) for c in checks],
              "theorem_checks": [asdict(c) for c in theorem_checks(p)]}
    try:
        vp = validate(p)
    except ConstraintViolation:
        for c in failed:
            print(f"constraint violated: {c.describe()}")
        result["valid"] = False
        write_document(cfg, "validate", result, "invalid")
        return EXIT_INVALID
    fd = check_derivatives_fd(p, step=cfg.fd_step)
    result.update(valid=True, theorem_eligible=vp.theorem_eligible, fd_max_error=fd,
                  fd_ok=bool(fd <= cfg.fd_tol))
    print(f"valid; theorem-eligible={vp.theorem_eligible}")
    print(f"derivative check max relative error: {fd:.3e}")
    if fd > cfg.fd_tol:
        print(f"warning: derivative check error {fd:.3e} exceeds {cfg.fd_tol:.1e}")
    write_document(cfg, "validate", result, "ok")
    return EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    validate(cfg.params)
    fld = initial_field(cfg)
    times = np.linspace(0.0, cfg.t_end, cfg.samples)
    cert = None
    if all(c.ok for c in theorem_checks(cfg.params)):
        cert = _certificate(cfg)
        ep, C_tilde = cert.eparams, cert.C_tilde
    else:
        ep = EntropyParams(*(cfg.eparams or (0.3, 0.3, 0.3)), weight_scheme=cfg.weight_scheme)
        C_tilde = float("nan")
    states = _states(cfg, fld, times)
    e, per_mode = entropy_of_states(cfg.params, ep, fld.M, states)
    bound = e[0] * np.exp(-C_tilde * times)
    n = fld.M + 1
    cols = ["t", "e", "e_bound"]
    moment_cols = []
    for s in (1, 2):
        cols += [f"sigma{s}", f"mu{s}", f"tau{s}"]
    for i in range(times.size):
        a, b = mode_moments_row(cfg.params, states[i, 0], n)
        moment_cols.append(a + b)
    rows = [[t, ei, bi] + mc for t, ei, bi, mc in zip(times, e, bound, moment_cols)]
    if cfg.per_mode:
        cols += [f"e_k{k}" for k in range(fld.K + 1)]
        rows = [r + list(pm) for r, pm in zip(rows, per_mode)]
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    digest = write_trace(out / "trace.csv", cols, rows)
    result = {"trace": "trace.csv", "trace_sha256": digest,
              "certificate": None if cert is None else cert.to_dict()}
    if cert is not None:
        result["decay"] = verify_decay(times, e, C_tilde).to_dict()
    write_document(cfg, "simulate", result, "ok")
    print(f"wrote {out / 'trace.csv'} ({times.size} samples)")
    return EXIT_OK


def mode_moments_row(p: MixtureParams, y: np.ndarray, n: int):
    """Real parts of ``(sigma, mu, tau)`` per species from stacked mode-0 coefficients."""
    s1, s2 = mode_moments(ModeState(0, y[:n], y[n:]), p)
    return ([float(np.real(s1.sigma)), float(np.real(s1.mu)), float(np.real(s1.tau))],
            [float(np.real(s2.sigma)), float(np.real(s2.mu)), float(np.real(s2.tau))])


def cmd_certify(cfg: RunConfig) -> int:
    validate(cfg.params)
    try:
        cert = _certificate(cfg)
    except SearchFailed as exc:
        result = {"error": str(exc), "best": asdict(exc.best), "mu": exc.mu}
        write_document(cfg, "certify", result, "search-failed")
        print(f"certification failed: {exc}", file=sys.stderr)
        return EXIT_CERT
    absc = mode_abscissas(cfg.params, cfg.M, cfg.K, cfg.transport)
    result = {"certificate": cert.to_dict(), "max_abscissa_k_ge_1": max(absc[1:]),
              "abscissas": absc}
    status = "degenerate" if cert.degenerate else "ok"
    write_document(cfg, "certify", result, status)
    print(f"mu={cert.mu:.6g} C={cert.C:.6g} C_tilde={cert.C_tilde:.6g}"
          + (" (degenerate)" if cert.degenerate else ""))
    return EXIT_OK


def cmd_compare(cfg: RunConfig) -> int:
    validate(cfg.params)
    K = max(cfg.compare_ks)
    fld = initial_field(replace(cfg, k_max=K), M=cfg.compare_M, K=K)
    grids = default_grids(cfg.params, cfg.n_v, cfg.grid)
    reports = [compare(fld, cfg.params, k, cfg.compare_t, grids, cfg.transport).to_dict()
               for k in cfg.compare_ks]
    worst = max(r["moment_error"] for r in reports)
    write_document(cfg, "compare", {"reports": reports, "max_moment_error": worst}, "ok")
    for r in reports:
        print(f"k={r['k']}: moment error {r['moment_error']:.3e}, profile error {r['profile_error']:.3e}")
    return EXIT_OK


def cmd_decay_check(cfg: RunConfig) -> int:
    validate(cfg.params)
    try:
        cert = _certificate(cfg)
    except SearchFailed as exc:
        write_document(cfg, "decay-check", {"error": str(exc), "best": asdict(exc.best)},
                       "search-failed")
        print(f"certification failed: {exc}", file=sys.stderr)
        return EXIT_CERT
    fld = initial_field(cfg)
    times = np.linspace(0.0, cfg.t_end, cfg.samples)
    e, _ = entropy_of_states(cfg.params, cert.eparams, fld.M, _states(cfg, fld, times))
    absc = mode_abscissas(cfg.params, cfg.M, cfg.K, cfg.transport)
    report = verify_decay(times, e, cert.C_tilde, abscissas=absc)
    result = {"certificate": cert.to_dict(), "decay": report.to_dict()}
    write_document(cfg, "decay-check", result, "ok" if report.satisfied else "bound-violated")
    print(f"C_tilde={cert.C_tilde:.6g} fitted={report.fitted_rate:.6g} satisfied={report.satisfied}")
    return EXIT_OK if report.satisfied else EXIT_CERT


COMMANDS = {
    "validate": cmd_validate,
    "simulate": cmd_simulate,
    "certify": cmd_certify,
    "compare": cmd_compare,
    "decay-check": cmd_decay_check,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bgkmix", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="INI file with run settings")
    ap.add_argument("--preset", help=f"named parameter preset {sorted(PRESETS)}")
    ap.add_argument("--seed", type=int, help="seed for random data and the optimizer ([run] seed)")
    ap.add_argument("--out", help="output directory ([output] dir)")
    ap.add_argument("--initial", choices=INITIAL_PRESETS, help="initial data ([initial] preset)")
    ap.add_argument("--paper-literal-transport", action="store_true",
                    help="use the unscaled transport coefficients ([model] transport)")
    ap.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                    help="override one config value (repeatable)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
    except (KeyError, ValueError, OSError, configparser.Error) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        return COMMANDS[args.command](cfg)
    except (ConstraintViolation, NotTheoremEligible) as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
