import csv
import hashlib
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from bgkmix import cli
from bgkmix.mixture_model import delta_lower_bound
from bgkmix.spectral_galerkin import momentum_exchange_rate, random_field, save_field

FAST = ["--set", "truncation.M=8", "--set", "truncation.K=8", "--set", "entropy.budget=40",
        "--set", "time.samples=41"]


def run(tmp_path, *args, name="out"):
    out = tmp_path / name
    code = cli.main([*args, "--out", str(out)])
    return code, out


def doc(out, command):
    return json.loads((out / f"{command.replace('-', '_')}.json").read_text())


def read_trace(out):
    with open(out / "trace.csv") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def test_validate_symmetric(tmp_path, capsys):
    code, out = run(tmp_path, "validate")
    assert code == 0
    d = doc(out, "validate")
    assert d["result"]["theorem_eligible"] is True and d["status"] == "ok"
    assert "derivative check max relative error" in capsys.readouterr().out


def test_validate_delta_out_of_range(tmp_path, capsys):
    code, out = run(tmp_path, "validate", "--preset", "asymmetric", "--set", "params.delta=-0.95")
    assert code == 1
    bound = delta_lower_bound(1.0, 3.0, 1.0 / 3.0)
    assert f"{bound:.17g}" in capsys.readouterr().out
    assert doc(out, "validate")["result"]["valid"] is False


def test_validate_fd_warning_is_soft(tmp_path, capsys, monkeypatch):
    monkeypatch.setattr(cli, "check_derivatives_fd", lambda p, step: 1e-3)
    code, out = run(tmp_path, "validate")
    assert code == 0
    assert "warning" in capsys.readouterr().out
    assert doc(out, "validate")["result"]["fd_ok"] is False


def test_simulate_zero(tmp_path):
    code, out = run(tmp_path, "simulate", "--initial", "zero", *FAST)
    assert code == 0
    cols, data = read_trace(out)
    assert cols[:3] == ["t", "e", "e_bound"]
    assert cols[3:] == ["sigma1", "mu1", "tau1", "sigma2", "mu2", "tau2"]
    assert not np.any(data[:, 1:])


def test_simulate_single_mode_matches_closed_form(tmp_path):
    code, out = run(tmp_path, "simulate", "--initial", "single-mode", "--preset", "asymmetric", *FAST,
                    "--set", "initial.amplitude=0.5")
    assert code == 0
    cols, data = read_trace(out)
    p = cli.resolve_config(cli.build_parser().parse_args(["simulate", "--preset", "asymmetric"])).params
    lam = momentum_exchange_rate(p)
    t = data[:, 0]
    mu1 = 0.5 * math.sqrt(p.m2) / math.sqrt(p.m1) * np.exp(-lam * t)
    mu2 = -0.5 * math.sqrt(p.m1) / math.sqrt(p.m2) * np.exp(-lam * t)
    e = (0.25 * p.m2 / p.n_inf_1 + 0.25 * p.m1 / p.n_inf_2) * np.exp(-2 * lam * t)
    assert np.max(np.abs(data[:, cols.index("mu1")] - mu1)) < 1e-10
    assert np.max(np.abs(data[:, cols.index("mu2")] - mu2)) < 1e-10
    assert np.max(np.abs(data[:, 1] - e)) < 1e-10


def test_simulate_random_is_byte_identical(tmp_path):
    args = ["simulate", "--seed", "17", *FAST]
    code, out = run(tmp_path, *args)
    first = ((out / "trace.csv").read_bytes(), (out / "simulate.json").read_bytes())
    code2, _ = run(tmp_path, *args)
    assert code == code2 == 0
    assert ((out / "trace.csv").read_bytes(), (out / "simulate.json").read_bytes()) == first
    code3, out3 = run(tmp_path, "simulate", "--seed", "18", *FAST, name="other")
    assert (out3 / "trace.csv").read_bytes() != first[0]


def test_simulate_bound_flag_matches_trace(tmp_path):
    code, out = run(tmp_path, "simulate", "--preset", "asymmetric", "--seed", "2", *FAST)
    cols, data = read_trace(out)
    d = doc(out, "simulate")
    flag = bool(np.all(data[:, 1] <= 1.01 * data[:, 2]))
    assert d["result"]["decay"]["satisfied"] is flag


def test_simulate_per_mode_columns(tmp_path):
    code, out = run(tmp_path, "simulate", *FAST, "--set", "output.per_mode=true")
    cols, data = read_trace(out)
    assert cols[-1] == "e_k8"
    assert np.allclose(data[:, 9:].sum(axis=1), data[:, 1], rtol=1e-12)


def test_csv_uses_17_digits(tmp_path):
    run(tmp_path, "simulate", *FAST)
    line = (tmp_path / "out" / "trace.csv").read_text().splitlines()[2]
    mantissa = line.split(",")[1].split("e")[0].replace("-", "").replace(".", "")
    assert len(mantissa) == 17


def test_simulate_from_file(tmp_path):
    cfg = cli.resolve_config(cli.build_parser().parse_args(["simulate"]))
    fld = random_field(cfg.params, 8, 8, seed=1)
    path = tmp_path / "init.csv"
    save_field(fld, path)
    code, out = run(tmp_path, "simulate", "--initial", "file", "--set", f"initial.file={path}", *FAST)
    assert code == 0
    _, data = read_trace(out)
    assert data[0, 1] > 0


def test_missing_initial_file_is_runtime_error(tmp_path):
    code, _ = run(tmp_path, "simulate", "--initial", "file", "--set", "initial.file=/nonexistent.csv", *FAST)
    assert code == 2


def test_certify_symmetric(tmp_path):
    code, out = run(tmp_path, "certify")
    cert = doc(out, "certify")["result"]["certificate"]
    assert code == 0
    assert cert["mu"] > 0 and cert["C_tilde"] > 0
    assert cert["mu"] == pytest.approx(0.09831311, rel=1e-6)
    assert cert["C_tilde"] == min(cert["C"], 2 * cert["mu"])


def test_certify_degenerate(tmp_path):
    code, out = run(tmp_path, "certify", "--preset", "degenerate", *FAST)
    d = doc(out, "certify")
    assert code == 0 and d["status"] == "degenerate"
    cert = d["result"]["certificate"]
    assert cert["C"] == 0 and cert["C_tilde"] == 0 and cert["degenerate"] is True


def test_certify_search_failure(tmp_path):
    code, out = run(tmp_path, "certify", *FAST, "--set", "entropy.budget=0")
    assert code == 3
    d = doc(out, "certify")
    assert d["status"] == "search-failed"
    assert d["result"]["best"]["alpha_tilde"] == 0.3


def test_certify_not_eligible(tmp_path):
    code, _ = run(tmp_path, "certify", *FAST, "--set", "params.nu11=1.0")
    assert code == 1


def test_certify_fixed_eparams(tmp_path):
    code, out = run(tmp_path, "certify", *FAST, "--set", "entropy.alpha_tilde=0.1",
                    "--set", "entropy.beta=0.15", "--set", "entropy.gamma_tilde=0.25")
    cert = doc(out, "certify")["result"]["certificate"]
    assert cert["eparams"]["beta"] == 0.15 and cert["mu"] > 0


def test_compare(tmp_path):
    code, out = run(tmp_path, "compare", "--set", "compare.ks=0,2", "--set", "compare.M=16",
                    "--set", "compare.grid=trapezoid", "--set", "compare.n_v=321")
    d = doc(out, "compare")
    assert code == 0
    assert [r["k"] for r in d["result"]["reports"]] == [0, 2]
    assert d["result"]["max_moment_error"] < 1e-6


def test_decay_check(tmp_path):
    code, out = run(tmp_path, "decay-check", "--preset", "asymmetric", *FAST)
    d = doc(out, "decay-check")
    assert code == 0 and d["result"]["decay"]["satisfied"] is True
    assert len(d["result"]["decay"]["abscissas"]) == 9


def test_config_file_and_flag_precedence(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[run]\npreset = asymmetric\nseed = 5\n\n[params]\ngamma = 0.01\n\n"
                   "[truncation]\nM = 8\nK = 4\n")
    args = cli.build_parser().parse_args(["simulate", "--config", str(ini), "--seed", "9"])
    cfg = cli.resolve_config(args)
    assert cfg.preset == "asymmetric" and cfg.seed == 9 and cfg.params.gamma == 0.01
    assert cfg.params.m2 == 3.0 and (cfg.M, cfg.K) == (8, 4)
    args = cli.build_parser().parse_args(["simulate", "--config", str(ini), "--paper-literal-transport"])
    assert cli.resolve_config(args).transport == "paper-literal"


def test_unknown_preset_and_key(tmp_path):
    assert run(tmp_path, "validate", "--preset", "nope")[0] == 1
    assert run(tmp_path, "validate", "--set", "params.zeta=1")[0] == 1


def test_seed_and_config_embedded(tmp_path):
    code, out = run(tmp_path, "validate", "--seed", "42")
    d = doc(out, "validate")
    assert d["seed"] == 42 and d["config"]["run"]["seed"] == 42
    body = {k: v for k, v in d.items() if k != "content_hash"}
    text = json.dumps(body, sort_keys=True, indent=2, allow_nan=False)
    assert hashlib.sha256(text.encode()).hexdigest() == d["content_hash"]


def test_thread_count_does_not_change_output(tmp_path, monkeypatch):
    monkeypatch.setenv("BGKMIX_THREADS", "1")
    _, out = run(tmp_path, "decay-check", *FAST)
    first = (out / "decay_check.json").read_bytes()
    monkeypatch.setenv("BGKMIX_THREADS", "4")
    run(tmp_path, "decay-check", *FAST)
    assert (out / "decay_check.json").read_bytes() == first


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "bgkmix", "validate", "--out", str(tmp_path)],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "theorem-eligible=True" in res.stdout
