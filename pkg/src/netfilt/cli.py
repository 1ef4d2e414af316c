"""Command-line front end.

    netfilt gen-graph --topology er --p 100 --dbar 4 --seed 7 --out DIR
    netfilt check-conditions --topology ba --q 0.5 --n 50 --q-sweep 0.05:1.5:30 --rho-grid --out DIR
    netfilt run-experiment --config configs/topologies.json --out DIR

Exit codes: 0 success, 1 usage error, 2 runtime or domain error.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, _rng
from .experiment import ConfigError, ExperimentConfig, ResultTable, manifest_json, run_sample_size_sweep
from .graph import GraphError, format_edge_list, generate, read_edge_list
from .lasso import BACKEND
from .model import ModelError, build_simple, load_model
from .theory import (
    DomainError, check_condition3, q_sweep, rho, rho_condition, sparsity_limit, theorem2_check,
)

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _write(out: Path, name: str, text: str, digests: dict) -> None:
    data = text.encode()
    (out / name).write_bytes(data)
    digests[name] = hashlib.sha256(data).hexdigest()


def _write_manifest(out: Path, command: str, argv, started: str, digests: dict, extra: dict) -> None:
    manifest = {
        "command": command,
        "argv": list(argv),
        "version": __version__,
        "kernel": BACKEND,
        "started": started,
        "finished": _now(),
        "outputs": digests,
        **extra,
    }
    (out / "manifest.json").write_text(manifest_json(manifest) + "\n")


# -- config parsing -----------------------------------------------------------

def _coerce(value: str):
    try:
        return json.loads(value)
    except json.JSONDecodeError:
        pass
    if "," in value:
        return [_coerce(v.strip()) for v in value.split(",") if v.strip()]
    return value


def parse_config_text(text: str) -> dict:
    """JSON object, or ``key=value`` lines (``#`` comments, comma lists)."""
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            d = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise UsageError(f"bad JSON config: {exc}") from exc
        return d
    d = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        d[key] = _coerce(value)
    return d


def _parse_q_values(spec: str) -> list[float]:
    """``start:stop:num`` (inclusive linspace) or a comma list."""
    try:
        if ":" in spec:
            a, b, k = spec.split(":")
            return [float(x) for x in np.linspace(float(a), float(b), int(k))]
        return [float(x) for x in spec.split(",")]
    except ValueError as exc:
        raise UsageError(f"bad --q-sweep value {spec!r}") from exc


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(r[h]) if not isinstance(r[h], bool) else str(r[h]).lower() for h in header])
    return buf.getvalue()


# -- commands -----------------------------------------------------------------

def cmd_gen_graph(args) -> int:
    started = _now()
    g = generate(args.topology, args.p, args.dbar, _rng.substream(args.seed, _rng.GRAPH))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    digests = {}
    _write(out, args.name, format_edge_list(g), digests)
    _write_manifest(out, "gen-graph", args.argv, started, digests, {
        "seed": args.seed, "config": {"topology": args.topology, "p": args.p, "d_bar": args.dbar},
    })
    return EXIT_OK


def _condition_rows(reports):
    rows = []
    for rep in reports:
        rows.append({
            "condition": rep.name + (f"[{rep.inputs['variant']}]" if "variant" in rep.inputs else ""),
            "lhs": rep.lhs, "rhs": rep.rhs, "satisfied": rep.satisfied,
            "applicable": rep.applicable, "note": rep.note,
        })
    return rows


def cmd_check_conditions(args) -> int:
    started = _now()
    if args.model:
        m = load_model(args.model)
        g = m.graph
        q = m.params.get("q")
    else:
        g = read_edge_list(args.graph) if args.graph else \
            generate(args.topology, args.p, args.dbar, _rng.substream(args.seed, _rng.GRAPH))
        q = args.q
        m = build_simple(g, q)
    n = args.n
    S = int((m.B != 0).sum(axis=1).max()) if m.p else 0
    reports = [check_condition3(m, n), rho_condition(S, n, m.p)] if m.p > 1 else [check_condition3(m, n)]
    if g is not None and q is not None:
        reports += [theorem2_check(g, q, n, "printed"), theorem2_check(g, q, n, "corrected")]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    digests = {}
    header = ["condition", "lhs", "rhs", "satisfied", "applicable", "note"]
    _write(out, "conditions.csv", _csv(header, _condition_rows(reports)), digests)
    inputs = {"n": n, "p": m.p, "S": S, "q": q, "sigma2": m.sigma2,
              "graph": args.graph or args.model or {"topology": args.topology, "p": args.p,
                                                    "d_bar": args.dbar, "seed": args.seed},
              "reports": [{"name": r.name, **{k: v for k, v in r.inputs.items()}} for r in reports]}
    _write(out, "inputs.json", json.dumps(inputs, indent=1, sort_keys=True, default=float) + "\n", digests)
    if args.q_sweep:
        if g is None:
            raise UsageError("--q-sweep needs a graph")
        rows = q_sweep(g, _parse_q_values(args.q_sweep), n)
        _write(out, "q_sweep.csv", _csv(list(rows[0]), rows), digests)
    if args.rho_grid:
        rows = []
        for ratio in args.np_ratios:
            for r in np.geomspace(1e-6, 0.19, args.rho_points):
                rows.append({"n_over_p": ratio, "r": float(r), "rho": rho(float(r), ratio, 1.0)})
        _write(out, "rho_grid.csv", _csv(["n_over_p", "r", "rho"], rows), digests)
        limits = [{"n_over_p": ratio, "r_limit": sparsity_limit(ratio, 1.0)} for ratio in args.np_ratios]
        _write(out, "rho_limits.csv", _csv(["n_over_p", "r_limit"], limits), digests)
    _write_manifest(out, "check-conditions", args.argv, started, digests, {"seed": args.seed})
    return EXIT_OK


def experiment_runs(cfg: dict, seed=None, threads=None) -> list[tuple[ExperimentConfig, list[int]]]:
    """Expand a parsed config (optionally with ``runs`` and ``n_values``) into run settings."""
    cfg = dict(cfg)
    runs = cfg.pop("runs", None) or [{}]
    base_n = cfg.pop("n_values", None)
    out = []
    for override in runs:
        d = {**cfg, **override}
        n_values = d.pop("n_values", base_n)
        if seed is not None:
            d["seed"] = seed
        if threads is not None:
            d["threads"] = threads
        c = ExperimentConfig.from_dict(d)
        out.append((c, [int(v) for v in n_values] if n_values else [c.n]))
    names = [c.name for c, _ in out]
    if len(set(names)) != len(names):
        raise UsageError("run names must be unique")
    return out


def load_config_runs(path, overrides=(), seed=None, threads=None):
    """Read a config file, apply ``KEY=VALUE`` overrides, and expand it into runs."""
    text = Path(path).read_text() if path else ""
    cfg = parse_config_text(text) if text.strip() else {}
    for item in overrides:
        cfg.update(parse_config_text(item))
    try:
        return cfg, experiment_runs(cfg, seed, threads)
    except (ConfigError, TypeError) as exc:
        raise UsageError(str(exc)) from exc


def cmd_run_experiment(args) -> int:
    started = _now()
    cfg, runs = load_config_runs(args.config, args.set or [], args.seed, args.threads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    digests = {}
    run_manifests = {}
    for c, n_values in runs:
        res = run_sample_size_sweep(c, n_values)
        _write(out, f"{c.name}.csv", res.table.to_csv(), digests)
        if len(n_values) > 1:
            for n in n_values:
                sub = ResultTable([r for r in res.table.rows if r.n == n])
                _write(out, f"{c.name}_n{n}.csv", sub.to_csv(), digests)
        if args.outcomes:
            _write(out, f"{c.name}_outcomes.csv", res.outcomes_csv(), digests)
        run_manifests[c.name] = res.manifest
    _write_manifest(out, "run-experiment", args.argv, started, digests, {
        "config": cfg, "runs": run_manifests,
    })
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="netfilt", description="Network filtering for target detection.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-graph", help="generate a random graph as an edge list")
    g.add_argument("--topology", choices=("er", "ba", "geometric"), required=True)
    g.add_argument("--p", type=int, default=100)
    g.add_argument("--dbar", type=float, default=4.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default=".")
    g.add_argument("--name", default="graph.txt")
    g.set_defaults(func=cmd_gen_graph)

    c = sub.add_parser("check-conditions", help="evaluate the closed-form conditions")
    src = c.add_mutually_exclusive_group()
    src.add_argument("--graph", help="edge-list file")
    src.add_argument("--model", help="model JSON file")
    c.add_argument("--topology", choices=("er", "ba", "geometric"), default="geometric")
    c.add_argument("--p", type=int, default=100)
    c.add_argument("--dbar", type=float, default=4.0)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--q", type=float, default=0.5)
    c.add_argument("--n", type=int, default=50)
    c.add_argument("--q-sweep", help="start:stop:num or comma list of q values")
    c.add_argument("--rho-grid", action="store_true", help="write rho(r) over r in [1e-6, 0.19]")
    c.add_argument("--np-ratios", type=lambda s: [float(x) for x in s.split(",")], default=[0.2, 0.5, 1.0])
    c.add_argument("--rho-points", type=int, default=200)
    c.add_argument("--out", default=".")
    c.set_defaults(func=cmd_check_conditions)

    r = sub.add_parser("run-experiment", help="Monte Carlo mis-detection experiment")
    r.add_argument("--config", help="JSON or key=value file")
    r.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config entry")
    r.add_argument("--seed", type=int)
    r.add_argument("--threads", type=int)
    r.add_argument("--out", default=".")
    r.add_argument("--outcomes", action="store_true", help="also write per-replicate outcomes")
    r.set_defaults(func=cmd_run_experiment)
    return p


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    args.argv = argv
    try:
        return args.func(args)
    except (UsageError, FileNotFoundError) as exc:
        print(f"netfilt: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, ModelError, GraphError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"netfilt: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
