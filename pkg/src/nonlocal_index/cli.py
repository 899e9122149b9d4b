"""Command-line experiment runner.

Each subcommand reads an optional YAML config, runs one verification driver,
prints a table (or JSON with ``--json``) and writes ``<name>.json`` under
``--out``.  Exit codes: 0 all checks pass, 1 a check failed, 2 config error,
3 numerical-stability error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .errors import ConfigError, DomainError, NonlocalIndexError, NumericalStabilityError, PreconditionError

SCHEMA_VERSION = 1
EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3

EXPERIMENTS = ("eta", "spectral-flow", "index", "defect", "lefschetz", "hirzebruch",
               "homotopy-scan", "kproj-verify", "sl-check")
SECTIONS = ("operator", "covering", "grid", "tolerances", "params", "expect", "output")


@dataclass
class ExperimentConfig:
    experiment: str
    name: str = ""
    seed: int = 0
    operator: dict = field(default_factory=dict)
    covering: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    expect: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a mapping")
        unknown = set(data) - {"experiment", "name", "seed", *SECTIONS}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kind = data.get("experiment")
        if kind not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {kind!r}; expected one of {EXPERIMENTS}")
        for key in SECTIONS:
            if not isinstance(data.get(key, {}), dict):
                raise ConfigError(f"section {key!r} must be a mapping")
        try:
            seed = int(data.get("seed", 0))
            tolerances = {k: float(v) for k, v in data.get("tolerances", {}).items()}
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad numeric value: {exc}") from None
        if any(not v > 0 for v in tolerances.values()):
            raise ConfigError("tolerances must be positive")
        cfg = cls(kind, str(data.get("name") or kind), seed,
                  **{k: dict(data.get(k, {})) for k in SECTIONS if k != "tolerances"},
                  tolerances=tolerances)
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(str(exc)) from None
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from None
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    def digest(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(canon.encode()).hexdigest()

    def tol(self, key, default):
        return self.tolerances.get(key, default)


@dataclass
class RunReport:
    config: ExperimentConfig
    checks: list
    payload: dict
    wall_clock: float = 0.0
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and bool(self.checks) and all(c["passed"] for c in self.checks)

    def to_dict(self, with_clock: bool = True) -> dict:
        out = {"schema_version": SCHEMA_VERSION, "tool_version": __version__,
               "experiment": self.config.experiment, "name": self.config.name,
               "config_digest": self.config.digest(), "config": self.config.to_dict(),
               "passed": self.passed, "checks": self.checks, "payload": self.payload,
               "error": self.error}
        if with_clock:
            out["wall_clock_seconds"] = self.wall_clock
        return out

    def table(self) -> str:
        lines = [f"{self.config.experiment}  {self.config.name}  digest {self.config.digest()[:12]}"]
        for c in self.checks:
            lines.append(f"  {'PASS' if c['passed'] else 'FAIL'}  {c['name']:<36} value={_fmt(c['value'])}"
                         f"  tol={_fmt(c.get('tolerance'))}")
        if self.error:
            lines.append(f"  ERROR {self.error}")
        lines.append(f"  overall: {'PASS' if self.passed else 'FAIL'}  ({self.wall_clock:.2f} s)")
        return "\n".join(lines)


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _check(name, passed, value=None, tolerance=None):
    return {"name": name, "passed": bool(passed), "value": _plain(value), "tolerance": tolerance}


def _plain(v):
    """JSON-safe copy: numpy scalars to Python, complex to [re, im]."""
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return _plain(v.tolist())
    if isinstance(v, (complex, np.complexfloating)):
        return [float(v.real), float(v.imag)]
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


# ------------------------------------------------------------- config helpers

def _coefficient(v):
    if isinstance(v, (list, tuple)):
        return complex(float(v[0]), float(v[1]))
    return complex(v) if isinstance(v, complex) else float(v)


def operator_from_config(section: dict, cutoff_key="fourier_cutoff", default_cutoff=64):
    from .discretize import OperatorSpec
    try:
        K = int(section.get(cutoff_key, default_cutoff))
        holonomy = float(section.get("holonomy", 0.0))
        if "trig" in section:
            coeffs = {int(m): _coefficient(c) for m, c in section["trig"].items()}
            return OperatorSpec.from_trig(coeffs, holonomy=holonomy, fourier_cutoff=K)
        return OperatorSpec.constant(float(section.get("constant", 0.0)), holonomy=holonomy, fourier_cutoff=K)
    except NonlocalIndexError as exc:
        raise ConfigError(f"invalid operator: {exc}") from None
    except (TypeError, ValueError, AttributeError) as exc:
        raise ConfigError(f"invalid operator section: {exc}") from None


def covering_from_config(section: dict, base_points: int):
    from .covering import build_covering
    try:
        return build_covering(int(section.get("sheets", 2)), base_points,
                              trivial=bool(section.get("trivial", False)))
    except NonlocalIndexError as exc:
        raise ConfigError(f"invalid covering: {exc}") from None


# ------------------------------------------------------------- experiments

def run_eta(cfg: ExperimentConfig):
    from .discretize import assemble_tangential
    from .spectral import eigendecompose, eta_closed_form, eta_regularized
    spec = operator_from_config(cfg.operator)
    res = eta_regularized(eigendecompose(assemble_tangential(spec)))
    tol = cfg.tol("value", 1e-6)
    if "value" in cfg.expect:
        ref = float(cfg.expect["value"])
    elif spec.max_frequency == 0 and spec.rank == 1:
        ref = eta_closed_form(float(np.real(spec.mean_potential[0, 0])) + spec.holonomy).value
    else:
        ref = None
    checks = [] if ref is None else [_check("eta matches reference", abs(res.value - ref) <= tol,
                                            res.value - ref, tol)]
    checks.append(_check("estimated error within tolerance", res.estimated_error <= tol, res.estimated_error, tol))
    return checks, {"eta": res.to_dict(), "aps_value": res.aps_value, "reference": ref}


def run_spectral_flow(cfg: ExperimentConfig):
    from .discretize import assemble_tangential
    from .spectral import spectral_flow
    spec = operator_from_config(cfg.operator, default_cutoff=32)
    p = cfg.params
    a0, a1, steps = float(p.get("a_start", 0.25)), float(p.get("a_end", 1.25)), int(p.get("steps", 41))
    path = [assemble_tangential(spec.with_changes(potential={**spec.potential, 0: spec.mean_potential + a * np.eye(spec.rank)}))
            for a in np.linspace(a0, a1, steps)]
    eps = cfg.tol("eps", 1e-8)
    sf = spectral_flow(path, eps=eps)
    count = lambda H: int(np.sum(np.linalg.eigvalsh(H.matrix) >= -eps / 2))
    ref = int(cfg.expect.get("flow", count(path[-1]) - count(path[0])))
    return [_check("spectral flow matches endpoint count", sf == ref, sf, 0)], {"flow": sf, "reference": ref}


def run_index(cfg: ExperimentConfig):
    from .bvp import Condition, CylinderProblem, mode_index_oracle, numerical_index, spectral_count_index
    from .discretize import assemble_tangential
    g, p = cfg.grid, cfg.params
    K, N_t, T = int(g.get("bvp_cutoff", 24)), int(g.get("N_t", 24)), float(g.get("length", 4.0))
    start_spec = operator_from_config(cfg.operator, default_cutoff=K)
    end_spec = operator_from_config(p["end_operator"], default_cutoff=K) if "end_operator" in p else None
    start = Condition(str(p.get("start", "aps")), eps=cfg.tol("eps", 1e-6))
    end = Condition(str(p.get("end", "aps")), eps=cfg.tol("eps", 1e-6))

    def make(k):
        A0 = assemble_tangential(start_spec.with_changes(fourier_cutoff=k))
        A1 = None if end_spec is None else assemble_tangential(end_spec.with_changes(fourier_cutoff=k))
        return CylinderProblem(A0, start, end, T, A1, rebuild=make, cutoff=k)

    problem = make(K)
    res = numerical_index(problem.assemble(N_t))
    if problem.product_type:
        ref, oracle = mode_index_oracle(problem), "mode"
    elif start.kind == end.kind == "aps":
        ref, oracle = spectral_count_index(problem, start.eps), "spectral-count"
    else:
        ref, oracle = None, None
    checks = [_check("index stable under refinement", res.stable, res.rank_gap, 1e4)]
    if ref is not None:
        checks.append(_check(f"index matches {oracle} oracle", res.index == ref, res.index, 0))
    return checks, {"index": res.to_dict(), "oracle": ref}


def run_defect(cfg: ExperimentConfig):
    from .invariants import CoveredCylinder, ind_tilde, relative_eta
    g = cfg.grid
    K = int(g.get("bvp_cutoff", 24))
    base = operator_from_config(cfg.operator)
    end = operator_from_config(cfg.params["end_operator"]) if "end_operator" in cfg.params else None
    cm = covering_from_config(cfg.covering, 2 * K + 1)
    geo = CoveredCylinder(base, cm, end, float(g.get("length", 4.0)), K, int(g.get("eta_cutoff", 64)),
                          int(g.get("N_t", 24)))
    rep = ind_tilde(geo)
    rel = relative_eta(base.with_changes(fourier_cutoff=int(g.get("eta_cutoff", 64))), cm)
    tol = cfg.tol("value", 1e-6)
    checks = []
    if "relative_eta" in cfg.expect:
        ref = float(cfg.expect["relative_eta"])
        checks.append(_check("relative eta matches reference", abs(rel - ref) <= tol, rel - ref, tol))
    if "ind_tilde" in cfg.expect:
        d = rep.ind_tilde.distance(float(cfg.expect["ind_tilde"]))
        checks.append(_check("ind_tilde matches reference mod n", d <= cfg.tol("congruence", 1e-4), d, 1e-4))
    recon = (rep.ind_aps + rep.eta_cover.aps_value - cm.sheets * rep.eta_base.aps_value)
    d = rep.ind_tilde.distance(recon)
    checks.append(_check("defect reassembles from its parts", d <= max(rep.error_budget, 1e-12), d,
                         rep.error_budget))
    return checks, {"defect": rep.to_dict(), "relative_eta": rel}


def run_lefschetz(cfg: ExperimentConfig):
    from .invariants import DiskModel, check_lefschetz_congruence
    checks, payload = [], {}
    for n in cfg.params.get("sheets", [2, 3]):
        rep = check_lefschetz_congruence(DiskModel(int(n), cutoff=int(cfg.grid.get("bvp_cutoff", 24))),
                                         tol=cfg.tol("congruence", 1e-4))
        checks.append(_check(f"congruence mod {n}", rep.passed, rep.values["distance"], 1e-4))
        payload[str(n)] = rep.values
    return checks, payload


def run_hirzebruch(cfg: ExperimentConfig):
    from .invariants import hirzebruch_model_check, random_anticommuting_pair
    rng = np.random.default_rng(cfg.seed)
    trials, max_dim = int(cfg.params.get("trials", 100)), int(cfg.params.get("max_dim", 16))
    ok, records = 0, []
    for _ in range(trials):
        d = 2 * int(rng.integers(1, max_dim // 2 + 1))
        k = 2 * int(rng.integers(0, d // 2 + 1))
        A, G = random_anticommuting_pair(d, k, rng)
        rep = hirzebruch_model_check(A, G)
        good = rep.passed and rep.values["index"] == k // 2
        ok += good
        records.append({"dim": d, "dim_ker_A": k, "index": rep.values["index"], "passed": good})
    return [_check("index equals half the kernel dimension", ok == trials, ok, trials)], {"trials": records}


def run_homotopy_scan(cfg: ExperimentConfig):
    from .invariants import homotopy_scan
    p = cfg.params
    a = np.linspace(float(p.get("a_start", 0.25)), float(p.get("a_end", 1.25)), int(p.get("samples", 21)))
    rep = homotopy_scan(a, n=int(cfg.covering.get("sheets", 2)), a_ref=float(p.get("a_ref", 0.25)),
                        tol=cfg.tol("congruence", 1e-4), bvp_cutoff=int(cfg.grid.get("bvp_cutoff", 24)),
                        eta_cutoff=int(cfg.grid.get("eta_cutoff", 64)), N_t=int(cfg.grid.get("N_t", 24)))
    checks = [_check("unreduced defect jumps only by multiples of n", rep.passed, rep.values["jumps"], 1e-4),
              _check("reduced defect constant", rep.values["reduced_spread"] <= 1e-4,
                     rep.values["reduced_spread"], 1e-4)]
    return checks, rep.values


def run_kproj(cfg: ExperimentConfig):
    from .covering import build_covering
    from .kproj import ProjectionFamily, embedded_ingredients, random_unitary_symbol, verify_projection_family
    p = cfg.params
    rng = np.random.default_rng(cfg.seed)
    N, L, k = int(p.get("N", 3)), int(p.get("L", 4)), int(p.get("k", 2))
    unitary = bool(p.get("unitary", True))
    cm = build_covering(int(cfg.covering.get("sheets", 2)), 9)
    expect_pass = bool(cfg.expect.get("passed", unitary))
    checks, payload = [], []
    for i in range(int(p.get("trials", 1))):
        sym = random_unitary_symbol(k, rng)
        if not unitary:
            skew = np.eye(k) + np.triu(np.ones((k, k)), 1)
            sym = (lambda s: lambda x, xi: skew @ s(x, xi))(sym)
        ing = embedded_ingredients(N, L, k, sym, normalize=unitary, rng=rng)
        rep = verify_projection_family(ProjectionFamily(ing, cm, str(p.get("variant", "continuous"))),
                                       num_xi=int(cfg.grid.get("num_xi", 257)), num_t=int(cfg.grid.get("num_t", 101)))
        checks.append(_check(f"trial {i} {'passes' if expect_pass else 'fails (control)'}",
                             rep.passed == expect_pass, rep.idempotency, 1e-12))
        payload.append(rep.to_dict())
    return checks, {"reports": payload}


def run_sl_check(cfg: ExperimentConfig):
    from .symbols import (BUILTINS, brute_force_lopatinskii, builtin_pair, check_shapiro_lopatinskii,
                          homotopy_min_singular_value, projection_of)
    pairs = cfg.params.get("pairs") or [
        {"name": "aps_model", "side": "positive"}, {"name": "aps_model", "side": "negative"},
        {"name": "reflecting_boundary", "variant": "invariant"},
        {"name": "reflecting_boundary", "variant": "wrong_side"},
        {"name": "dbar_disk", "side": "positive"}, {"name": "dbar_disk", "side": "negative"}]
    checks, payload = [], []
    for entry in pairs:
        entry = dict(entry)
        name = entry.pop("name", None)
        if name not in BUILTINS:
            raise ConfigError(f"unknown built-in symbol {name!r}")
        try:
            a, b = builtin_pair(name, **entry)
        except (TypeError, NonlocalIndexError) as exc:
            raise ConfigError(f"bad parameters for {name}: {exc}") from None
        rep = check_shapiro_lopatinskii(a, b)
        brute = brute_force_lopatinskii(a, b)
        label = f"{name}({','.join(f'{k}={v}' for k, v in sorted(entry.items()))})"
        checks.append(_check(f"{label} agrees with brute force", rep.elliptic == brute, rep.elliptic, None))
        record = {"pair": label, "elliptic": rep.elliptic, "brute_force": brute,
                  "min_singular_value": rep.min_singular_value}
        if rep.elliptic:
            smin = homotopy_min_singular_value(a, projection_of(b))
            checks.append(_check(f"{label} homotopy invertible", smin > cfg.tol("homotopy", 1e-8), smin, 1e-8))
            record["homotopy_min_singular_value"] = smin
        payload.append(record)
    return checks, {"pairs": payload}


RUNNERS = {"eta": run_eta, "spectral-flow": run_spectral_flow, "index": run_index, "defect": run_defect,
           "lefschetz": run_lefschetz, "hirzebruch": run_hirzebruch, "homotopy-scan": run_homotopy_scan,
           "kproj-verify": run_kproj, "sl-check": run_sl_check}


def run(cfg: ExperimentConfig) -> RunReport:
    """Run one experiment.  Config errors propagate; numerical errors become a failed report."""
    t0 = time.perf_counter()
    try:
        checks, payload = RUNNERS[cfg.experiment](cfg)
        report = RunReport(cfg, checks, _plain(payload))
    except KeyError as exc:
        raise ConfigError(f"missing config entry {exc}") from None
    except NumericalStabilityError as exc:
        report = RunReport(cfg, [], {}, error=f"{type(exc).__name__}: {exc}")
    except (DomainError, PreconditionError) as exc:
        raise ConfigError(f"{type(exc).__name__}: {exc}") from None
    report.wall_clock = time.perf_counter() - t0
    return report


def exit_code(report: RunReport) -> int:
    if report.error is not None:
        return EXIT_NUMERICAL
    return EXIT_PASS if report.passed else EXIT_FAIL


# ------------------------------------------------------------- suite report

CSV_FIELDS = ("config", "experiment", "n", "parameters", "key", "value", "tolerance", "passed")


def report_suite(directory, out=None) -> tuple[str, int, int]:
    """Run every ``*.yaml``/``*.yml`` config in ``directory``; returns (csv text, passes, rows)."""
    paths = sorted(p for p in Path(directory).iterdir() if p.suffix in (".yaml", ".yml"))
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    passes = 0
    for path in paths:
        cfg = ExperimentConfig.load(path)
        rep = run(cfg)
        if out is not None:
            _write_json(rep, out)
        first = rep.checks[0] if rep.checks else {"name": "error", "value": rep.error, "tolerance": None}
        writer.writerow({"config": path.name, "experiment": cfg.experiment,
                         "n": cfg.covering.get("sheets", ""),
                         "parameters": json.dumps({**cfg.operator, **cfg.params}, sort_keys=True, default=str),
                         "key": first["name"], "value": json.dumps(first["value"], default=str),
                         "tolerance": first["tolerance"], "passed": rep.passed})
        passes += rep.passed
    return buf.getvalue(), passes, len(paths)


def _write_json(report: RunReport, out):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{report.config.name}.json"
    path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    return path


# ------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nonlocal-index", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in (*EXPERIMENTS, "report"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="YAML config (a directory of configs for 'report')")
        sp.add_argument("--out", help="directory for JSON/CSV artifacts")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--json", action="store_true", help="print the JSON report instead of a table")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "report":
            if not args.config or not Path(args.config).is_dir():
                raise ConfigError("report needs --config DIR")
            text, passes, total = report_suite(args.config, args.out)
            if args.out:
                Path(args.out).mkdir(parents=True, exist_ok=True)
                (Path(args.out) / "report.csv").write_text(text)
            sys.stdout.write(text)
            print(f"# {passes}/{total} passed", file=sys.stderr)
            return EXIT_PASS if passes == total else EXIT_FAIL
        cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig(args.command)
        if cfg.experiment != args.command:
            raise ConfigError(f"config is for {cfg.experiment!r}, not {args.command!r}")
        if args.seed is not None:
            cfg.seed = args.seed
        report = run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out or cfg.output.get("dir")
    if out:
        _write_json(report, out)
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True) if args.json else report.table())
    return exit_code(report)


if __name__ == "__main__":
    sys.exit(main())
