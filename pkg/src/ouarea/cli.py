"""Command-line front end: configure, run and persist experiments.

Configuration comes from an optional JSON file (schema_version 1, unknown keys
rejected) plus command-line overrides; every run writes its CSV outputs and a
manifest with the resolved config, seeds, generator tags, timings, pass/fail
flags and content hashes.  Exit status: 0 all declared assertions pass, 2 an
assertion failed, 1 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import defaults, manifest
from .area import WindowPair, area_component, hs_norm, plain_area_component, scaled_tensor
from .fractional import FracQuadConfig
from .noise import CovarianceSpec, sample_qfbm
from .spectrum import SpectrumConfig, eigenvalue
from .studies import (bdg_check, convergence_study, level1_rate_study, moment_suite,
                      multinomial_bound_check, stationarity_check)

log = logging.getLogger("ouarea")


class UsageError(Exception):
    pass


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); the contract wants 1
        raise UsageError(message)


_COMMON_KEYS = {"schema_version", "seed", "out"}

_COMMAND_KEYS = {
    "sample": {"hurst", "level", "horizon", "modes", "generator"},
    "area": {"hurst", "level", "horizon", "modes", "kappa", "spectrum_coeff", "spectrum_dim",
             "eigenvalues", "weights", "covariance_decay", "window", "generator"},
    "chen": {"hurst", "level", "horizon", "modes", "cases", "spectrum_coeff", "spectrum_dim",
             "tolerance", "generator"},
    "convergence": {"hurst", "levels", "ref_level", "seed_count", "modes", "kappa", "beta",
                    "horizon", "spectrum_coeff", "spectrum_dim", "covariance_decay", "generator"},
    "moments": {"level", "samples", "modes", "kappa", "p", "i", "j", "k", "widths", "horizon",
                "spectrum_coeff", "spectrum_dim", "covariance_decay"},
    "stationarity": {"hurst", "level", "cases", "ensemble_samples", "ensemble_level", "horizon",
                     "modes", "kappa", "spectrum_coeff", "spectrum_dim", "covariance_decay",
                     "generator"},
    "bdg": {"p_values", "level", "samples", "horizon"},
    "multinomial": {"p_max", "m_max"},
    "frak-oracle": {"hurst", "level", "horizon", "modes", "kappa", "max_kernel_arg", "beta",
                    "alpha", "gauss_nodes", "edge_nodes", "spectrum_coeff", "spectrum_dim",
                    "covariance_decay", "tolerance", "generator"},
    "level1": {"hurst", "beta", "levels", "ref_level", "seed_count", "horizon"},
    "report": set(),
}

_DEFAULTS = {
    "schema_version": 1,
    "seed": 0,
    "hurst": 0.5,
    "horizon": defaults.HORIZON,
    "level": 6,
    "levels": list(range(4, 10)),
    "ref_level": 12,
    "seed_count": 20,
    "modes": {"I": defaults.SPECTRUM_MODES, "J": defaults.NOISE_MODES},
    "kappa": defaults.KAPPA,
    "beta": None,
    "spectrum_coeff": defaults.SPECTRUM_COEFF,
    "spectrum_dim": defaults.SPECTRUM_DIM,
    "covariance_decay": defaults.COVARIANCE_DECAY,
    "eigenvalues": None,
    "weights": None,
    "window": [0.0, 0.5],
    "cases": 100,
    "samples": 10_000,
    "ensemble_samples": 10_000,
    "ensemble_level": 6,
    "p": 1,
    "i": 1,
    "j": 1,
    "k": 2,
    "widths": [0.125, 0.25, 0.5],
    "p_values": [1, 2],
    "p_max": 4,
    "m_max": 8,
    "max_kernel_arg": 10.0,
    "alpha": None,
    "gauss_nodes": 12,
    "edge_nodes": 96,
    "tolerance": None,
    "generator": "auto",
}


def _parse_levels(text: str):
    if ".." in text:
        lo, hi = text.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(v) for v in text.split(",")]


def load_config(path: str) -> dict:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}")
    if isinstance(raw, dict) and "config" in raw and "tool" in raw:
        raw = raw["config"]  # accept a manifest verbatim for replay
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    return raw


def resolve_config(command: str, file_config: dict, args) -> dict:
    allowed = _COMMON_KEYS | _COMMAND_KEYS[command]
    unknown = set(file_config) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys for {command}: {sorted(unknown)}")
    version = file_config.get("schema_version", 1)
    if version != 1:
        raise ConfigError(f"unsupported schema_version {version}")
    cfg = {k: _DEFAULTS[k] for k in allowed if k in _DEFAULTS}
    cfg["schema_version"] = 1
    cfg.update(file_config)
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    if getattr(args, "hurst", None) is not None and "hurst" in allowed:
        cfg["hurst"] = args.hurst
    if getattr(args, "levels", None) is not None and "levels" in allowed:
        cfg["levels"] = _parse_levels(args.levels)
    if getattr(args, "modes", None) is not None and "modes" in allowed:
        try:
            i_cnt, j_cnt = (int(v) for v in args.modes.split(","))
        except ValueError:
            raise ConfigError(f"--modes expects 'I,J', got {args.modes!r}")
        cfg["modes"] = {"I": i_cnt, "J": j_cnt}
    if getattr(args, "kappa", None) is not None and "kappa" in allowed:
        cfg["kappa"] = args.kappa
    if getattr(args, "beta", None) is not None and "beta" in allowed:
        cfg["beta"] = args.beta
    if getattr(args, "out", None) is not None:
        cfg["out"] = args.out
    cfg.setdefault("out", os.path.join(os.environ.get("OUAREA_OUT", "runs"), command))
    if isinstance(cfg.get("modes"), list):
        cfg["modes"] = {"I": int(cfg["modes"][0]), "J": int(cfg["modes"][1])}
    return cfg


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "pass" if value else "fail"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def _spectrum_from(cfg) -> SpectrumConfig:
    if cfg.get("eigenvalues"):
        return SpectrumConfig(np.asarray(cfg["eigenvalues"], dtype=float), kappa=cfg.get("kappa", defaults.KAPPA))
    return SpectrumConfig.power_law(cfg["modes"]["I"], coeff=cfg["spectrum_coeff"],
                                    dim=cfg["spectrum_dim"], kappa=cfg.get("kappa", defaults.KAPPA))


def _covariance_from(cfg) -> CovarianceSpec:
    if cfg.get("weights"):
        return CovarianceSpec(np.asarray(cfg["weights"], dtype=float))
    return CovarianceSpec.power_law(cfg["modes"]["J"], decay=cfg["covariance_decay"])


def _study_outputs(report, out: Path, csv_name: str, header, rows):
    csv_path = write_csv(out / csv_name, header, rows)
    report_path = out / "report.json"
    report_path.write_text(report.to_json() + "\n", encoding="utf-8")
    return [csv_path, report_path]


# ---------------------------------------------------------------- runners


def _run_sample(cfg, out: Path):
    cov = _covariance_from(cfg)
    path = sample_qfbm(cov, cfg["hurst"], cfg["level"], cfg["horizon"], seed=cfg["seed"],
                       generator=cfg["generator"])
    header = ["t"] + [f"mode_{j}" for j in range(path.mode_count)]
    rows = [[t] + list(path.values[:, m]) for m, t in enumerate(path.times)]
    files = [write_csv(out / "path.csv", header, rows)]
    checks = {"sampled": {"passed": True, "observed": path.generator_tag}}
    return checks, files, [path.generator_tag], {}


def _run_area(cfg, out: Path):
    spec = _spectrum_from(cfg)
    cov = _covariance_from(cfg)
    path = sample_qfbm(cov, cfg["hurst"], cfg["level"], cfg["horizon"], seed=cfg["seed"],
                       generator=cfg["generator"])
    w = WindowPair.from_times(cfg["window"][0], cfg["window"][1], path.step)
    tensor = scaled_tensor(path, spec, cov, w)
    scaled = tensor.scaled()
    rows = []
    for i in range(spec.mode_count):
        for j in range(cov.mode_count):
            for k in range(cov.mode_count):
                rows.append([i + 1, j + 1, k + 1, w.s, w.t,
                             tensor.components[i, j, k], scaled[i, j, k]])
    files = [write_csv(out / "tensor.csv", ["i", "j", "k", "s", "t", "unscaled", "scaled"], rows)]
    norm = hs_norm(tensor)
    checks = {"finite_norm": {"passed": bool(np.isfinite(norm)), "observed": norm}}
    return checks, files, [path.generator_tag], {"hs_norm": norm}


def _run_chen(cfg, out: Path):
    from .area import chen_residual
    spec = _spectrum_from(cfg)
    tol = cfg["tolerance"] if cfg["tolerance"] is not None else defaults.TOLERANCES["chen_rel"]
    cov = CovarianceSpec.power_law(cfg["modes"]["J"])
    pick = np.random.default_rng(np.random.SeedSequence(entropy=int(cfg["seed"]), spawn_key=(99,)))
    n_cells = 2 ** cfg["level"]
    rows = []
    worst = 0.0
    tags = set()
    all_ok = True
    for case in range(cfg["cases"]):
        path = sample_qfbm(cov, cfg["hurst"], cfg["level"], cfg["horizon"],
                           seed=cfg["seed"] + case, generator=cfg["generator"])
        tags.add(path.generator_tag)
        i = int(pick.integers(1, spec.mode_count + 1))
        j = int(pick.integers(0, cov.mode_count))
        k = int(pick.integers(0, cov.mode_count))
        m_s = int(pick.integers(0, n_cells - 1))
        m_t = int(pick.integers(m_s + 1, n_cells + 1))
        m_tau = int(pick.integers(m_s, m_t + 1))
        lam = eigenvalue(spec, i)
        s, tau, t = (m * path.step for m in (m_s, m_tau, m_t))
        res = chen_residual(path, lam, j, k, s, tau, t)
        whole = area_component(path, lam, j, k, WindowPair(m_s, m_t, path.step))
        scale = 1.0 + abs(whole)
        ok = abs(res) <= tol * scale
        all_ok = all_ok and ok
        worst = max(worst, abs(res) / scale)
        rows.append([case, i, j + 1, k + 1, s, tau, t, whole, res, abs(res) / scale, ok])
    files = [write_csv(out / "chen.csv",
                       ["case", "i", "j", "k", "s", "tau", "t", "area", "residual",
                        "scaled_residual", "pass"], rows)]
    checks = {"chen_identity": {"passed": all_ok, "observed": worst, "tolerance": tol}}
    return checks, files, sorted(tags), {}


def _run_convergence(cfg, out: Path):
    spec = _spectrum_from(cfg)
    cov = _covariance_from(cfg)
    report = convergence_study(spectrum=spec, cov=cov, hurst=cfg["hurst"], levels=cfg["levels"],
                               ref_level=cfg["ref_level"], seeds=cfg["seed_count"],
                               seed=cfg["seed"], horizon=cfg["horizon"], beta=cfg["beta"],
                               generator=cfg["generator"])
    rows = list(zip(report.metrics["levels"], report.metrics["delta"],
                    report.metrics["rms_error"], report.metrics["field_norm"]))
    files = _study_outputs(report, out, "convergence.csv",
                           ["level", "delta", "rms_error", "field_norm"], rows)
    return report.checks, files, [], {"fits": report.fits}


def _run_level1(cfg, out: Path):
    report = level1_rate_study(hurst=cfg["hurst"], beta=cfg["beta"], levels=cfg["levels"],
                               ref_level=cfg["ref_level"], seeds=cfg["seed_count"],
                               seed=cfg["seed"], horizon=cfg["horizon"])
    rows = list(zip(report.metrics["levels"], report.metrics["delta"],
                    report.metrics["sup_error"], report.metrics["holder_error"]))
    files = _study_outputs(report, out, "level1.csv",
                           ["level", "delta", "sup_error", "holder_error"], rows)
    return report.checks, files, [], {"fits": report.fits}


def _run_moments(cfg, out: Path):
    spec = _spectrum_from(cfg)
    cov = _covariance_from(cfg)
    report = moment_suite(spectrum=spec, cov=cov, i=cfg["i"], j=cfg["j"], k=cfg["k"],
                          p=cfg["p"], level=cfg["level"], samples=cfg["samples"],
                          seed=cfg["seed"], horizon=cfg["horizon"], widths=tuple(cfg["widths"]))
    rows = [["width", w, m, ci[0], ci[1]]
            for w, m, ci in zip(report.metrics["width"], report.metrics["norm_moment"],
                                report.metrics["norm_moment_ci"])]
    rows += [["diff_delta", d, m, "", ""]
             for d, m in zip(report.metrics["diff_delta"], report.metrics["diff_moment"])]
    files = _study_outputs(report, out, "moments.csv",
                           ["metric", "x", "value", "ci_lo", "ci_hi"], rows)
    return report.checks, files, [], {"fits": report.fits}


def _run_stationarity(cfg, out: Path):
    spec = _spectrum_from(cfg)
    cov = _covariance_from(cfg)
    report = stationarity_check(spectrum=spec, cov=cov, hurst=cfg["hurst"], level=cfg["level"],
                                cases=cfg["cases"], seed=cfg["seed"], horizon=cfg["horizon"],
                                ensemble_samples=cfg["ensemble_samples"],
                                ensemble_level=cfg["ensemble_level"], generator=cfg["generator"])
    rows = [[r["case"], r["tau"], r["s"], r["t"], r["error"]] for r in report.metrics["cases"]]
    files = _study_outputs(report, out, "stationarity.csv",
                           ["case", "tau", "s", "t", "error"], rows)
    return report.checks, files, [], {"ks_statistic": report.metrics["ks_statistic"]}


def _run_bdg(cfg, out: Path):
    rows = []
    checks = {}
    reports = []
    for p in cfg["p_values"]:
        rep = bdg_check(p=int(p), horizon=cfg["horizon"], level=cfg["level"],
                        samples=cfg["samples"], seed=cfg["seed"])
        reports.append(rep)
        m = rep.metrics
        ok = rep.checks["bound_holds"]["passed"]
        rows.append([p, m["lhs"], m["lhs_se"], m["rhs_analytic"], m["rhs_mc"], ok])
        checks[f"bound_holds_p{p}"] = rep.checks["bound_holds"]
    files = [write_csv(out / "bdg.csv", ["p", "lhs", "lhs_se", "rhs_analytic", "rhs_mc", "pass"], rows)]
    report_path = out / "report.json"
    report_path.write_text(json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True) + "\n",
                           encoding="utf-8")
    files.append(report_path)
    return checks, files, [], {}


def _run_multinomial(cfg, out: Path):
    report = multinomial_bound_check(p_max=cfg["p_max"], m_max=cfg["m_max"])
    rows = [[r["p"], r["M"], r["sum"], r["bound"], r["passed"]] for r in report.metrics["rows"]]
    files = _study_outputs(report, out, "multinomial.csv", ["p", "M", "sum", "bound", "pass"], rows)
    return report.checks, files, [], {}


def _run_frak_oracle(cfg, out: Path):
    from .fractional import correction_report, default_alpha
    spec = _spectrum_from(cfg)
    cov = _covariance_from(cfg)
    path = sample_qfbm(cov, cfg["hurst"], cfg["level"], cfg["horizon"], seed=cfg["seed"],
                       generator=cfg["generator"])
    w = WindowPair(0, path.step_count, path.step)
    beta = cfg["beta"] if cfg["beta"] is not None else cfg["hurst"] - defaults.BETA_OFFSET
    alpha = cfg["alpha"] if cfg["alpha"] is not None else default_alpha(beta)
    quad = FracQuadConfig(alpha=alpha, gauss_nodes=cfg["gauss_nodes"], edge_nodes=cfg["edge_nodes"])
    tol_default = defaults.TOLERANCES["fractional_oracle_rel"]
    tol_stiff = defaults.TOLERANCES["fractional_oracle_rel_stiff"]
    threshold = defaults.TOLERANCES["fractional_stiff_threshold"]
    rows = []
    all_ok = True
    worst = 0.0
    for i in range(1, spec.mode_count + 1):
        lam = eigenvalue(spec, i)
        x = lam * path.step
        if x > cfg["max_kernel_arg"]:
            continue
        tol = cfg["tolerance"] if cfg["tolerance"] is not None else \
            (tol_default if x <= threshold else tol_stiff)
        for j in range(cov.mode_count):
            for k in range(cov.mode_count):
                closed = plain_area_component(path, j, k, w) - area_component(path, lam, j, k, w)
                rep = correction_report(path, lam, j, k, w, quad)
                err = abs(rep.refined - closed) / (1.0 + abs(closed))
                ok = err <= tol and rep.converged
                all_ok = all_ok and ok
                worst = max(worst, err)
                rows.append([i, j + 1, k + 1, x, closed, rep.refined, err, rep.converged, ok])
    files = [write_csv(out / "frak_oracle.csv",
                       ["i", "j", "k", "kernel_arg", "closed_form", "fractional", "scaled_error",
                        "converged", "pass"], rows)]
    checks = {"fractional_oracle": {"passed": all_ok, "observed": worst,
                                    "tolerance": cfg["tolerance"] or tol_default}}
    return checks, files, [path.generator_tag], {}


_RUNNERS = {
    "sample": _run_sample,
    "area": _run_area,
    "chen": _run_chen,
    "convergence": _run_convergence,
    "level1": _run_level1,
    "moments": _run_moments,
    "stationarity": _run_stationarity,
    "bdg": _run_bdg,
    "multinomial": _run_multinomial,
    "frak-oracle": _run_frak_oracle,
}


def build_parser() -> _Parser:
    parser = _Parser(prog="ouarea", description=__doc__.splitlines()[0])
    parser.add_argument("--quiet", action="store_true", help="suppress progress logging")
    parser.add_argument("--json-logs", action="store_true", help="emit log lines as JSON")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in _RUNNERS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", help="JSON config file (or a manifest to replay)")
        p.add_argument("--seed", type=int)
        p.add_argument("--hurst", type=float)
        p.add_argument("--levels", help="comma list or lo..hi range")
        p.add_argument("--modes", help="I,J mode counts")
        p.add_argument("--kappa", type=float)
        p.add_argument("--beta", type=float)
        p.add_argument("--out", help="output directory")
        p.add_argument("--threads", type=int, default=None,
                       help="cap internal parallelism (results never depend on it)")
    rep = sub.add_parser("report", help="merge run manifests into one summary")
    rep.add_argument("manifests", nargs="+", help="manifest.json files to merge")
    rep.add_argument("--out", help="output directory")
    return parser


def _setup_logging(args):
    handler = logging.StreamHandler(sys.stderr)
    if getattr(args, "json_logs", False):
        class _JsonFormatter(logging.Formatter):
            def format(self, record):
                return json.dumps({"level": record.levelname.lower(), "msg": record.getMessage()})
        handler.setFormatter(_JsonFormatter())
    else:
        handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(logging.WARNING if getattr(args, "quiet", False) else logging.INFO)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    _setup_logging(args)
    if args.command == "report":
        out = Path(args.out or os.path.join(os.environ.get("OUAREA_OUT", "runs"), "report"))
        out.mkdir(parents=True, exist_ok=True)
        try:
            merged = manifest.merge_manifests(args.manifests)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 1
        (out / "report.json").write_text(json.dumps(merged, indent=2, sort_keys=True) + "\n",
                                         encoding="utf-8")
        log.info("merged %d manifests; passed=%s", len(merged["reports"]), merged["passed"])
        return 0 if merged["passed"] else 2
    try:
        file_cfg = load_config(args.config) if args.config else {}
        cfg = resolve_config(args.command, file_cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    checks, files, tags, extra = _RUNNERS[args.command](cfg, out)
    elapsed = time.perf_counter() - t0
    outputs = [manifest.file_entry(f, out) for f in files]
    doc = manifest.build_manifest(args.command, cfg, checks, outputs,
                                  {"total": elapsed}, tags, extra)
    manifest.write_manifest(doc, out)
    passed = doc["passed"]
    log.info("%s finished in %.2fs; passed=%s; outputs in %s", args.command, elapsed, passed, out)
    return 0 if passed else 2


if __name__ == "__main__":
    sys.exit(main())
