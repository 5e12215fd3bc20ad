"""Command-line entry point: simulations, closed forms, sweeps, fits and checks.

Every run writes its data file plus ``<name>.manifest.json`` next to it.  Data
files hold no wall-clock information, so repeating a command reproduces them
byte for byte.  Nonlinearity strengths are given as g; G is derived and echoed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import closedform as cf
from .dynamics import (
    Controls,
    GammaPolicy,
    IntegrationError,
    Nonlinearity,
    SearchConfig,
    find_gamma_numeric,
    integrate,
    measure_width,
)
from .graphs import FamilySpec, SrgParams, build_graph, collapse, equitable_partition, srg_check
from .oracle import compare, full_integrate, within_class_spread
from .resources import fit_power_law
from .spectral import overlap_sweep, sweep_csv


class UsageError(ValueError):
    pass


def fmt(x) -> str:
    return f"{x:.12g}"


def _round_floats(obj):
    if isinstance(obj, float):
        return float(fmt(obj))
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    if isinstance(obj, np.generic):
        return _round_floats(obj.item())
    return obj


def dump_json(obj) -> str:
    return json.dumps(_round_floats(obj), sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------- shared argument groups

def _srg_tuple(text: str) -> tuple[int, int, int, int]:
    try:
        parts = tuple(int(p) for p in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError("--srg expects N,k,lambda,mu") from exc
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("--srg expects N,k,lambda,mu")
    return parts


def add_output_args(p):
    p.add_argument("--out-dir", default=".", help="directory for data and manifest files")
    p.add_argument("--name", default=None, help="file stem (default: subcommand name)")


def add_graph_args(p):
    p.add_argument("--family", choices=["complete", "paley", "square_lattice", "latin_square",
                                         "triangular", "hypercube", "petersen", "srg"], default="complete")
    p.add_argument("--n", type=int, default=None, help="size parameter (N, q, t or n by family)")
    p.add_argument("--srg", type=_srg_tuple, default=None, help="explicit SRG parameters N,k,lambda,mu")
    p.add_argument("--marked-count", type=int, default=1)


def add_sim_args(p):
    add_graph_args(p)
    p.add_argument("--nl", choices=["linear", "cubic", "cubic_quintic", "loglinear"], default="linear")
    p.add_argument("--g-coeff", type=float, default=0.0, help="nonlinearity coefficient g")
    p.add_argument("--policy", default="fixed",
                   choices=["fixed", "cubic-critical", "general-critical", "srg-c1", "srg-c2",
                            "srg-c2-prime", "suff-complete-critical", "numeric-table"])
    p.add_argument("--gamma0", default=None, help="fixed gamma, or 'auto' for the numeric balanced-overlap value")
    p.add_argument("--gamma-L", dest="gamma_L", default=None, help="linear gamma for suff-complete-critical ('auto' allowed)")
    p.add_argument("--gamma-table", default=None, help="CSV with columns t,gamma for numeric-table")
    p.add_argument("--t-end", type=float, required=False, default=None)
    p.add_argument("--sample-dt", type=float, default=0.01)
    p.add_argument("--rel-tol", type=float, default=1e-10)
    p.add_argument("--abs-tol", type=float, default=1e-12)
    p.add_argument("--max-step", type=float, default=math.inf)


def _graph_fields(args):
    if args.family == "srg":
        if args.srg is None:
            raise UsageError("--family srg needs --srg N,k,lambda,mu")
        return dict(family="srg", size_param=None, srg=args.srg)
    if args.srg is not None:
        return dict(family="srg", size_param=None, srg=args.srg)
    if args.family != "petersen" and args.n is None:
        raise UsageError(f"--family {args.family} needs --n")
    return dict(family=args.family, size_param=None if args.family == "petersen" else args.n, srg=None)


def _resolve_gamma(text, cfg_wo_policy: SearchConfig) -> float:
    if text is None:
        raise UsageError("missing gamma value")
    if text == "auto":
        return find_gamma_numeric(cfg_wo_policy.collapsed())
    return float(text)


def build_config(args) -> SearchConfig:
    gf = _graph_fields(args)
    nl = Nonlinearity(args.nl, args.g_coeff)
    controls = Controls(args.rel_tol, args.abs_tol, args.max_step, args.sample_dt)
    base = SearchConfig(gf["family"], gf["size_param"], args.marked_count, nl,
                        GammaPolicy("fixed", {"gamma0": 0.0}), controls, gf["srg"])
    base.collapsed()  # validates the graph description before any gamma work
    kind = args.policy.replace("-", "_")
    if kind == "fixed":
        params = {"gamma0": _resolve_gamma(args.gamma0, base)}
    elif kind == "suff_complete_critical":
        params = {"gamma_L": _resolve_gamma(args.gamma_L, base)}
    elif kind == "numeric_table":
        if not args.gamma_table:
            raise UsageError("numeric-table needs --gamma-table")
        data = np.loadtxt(args.gamma_table, delimiter=",", skiprows=1, ndmin=2)
        params = {"t": data[:, 0].tolist(), "gamma": data[:, 1].tolist()}
    else:
        params = {}
    cfg = SearchConfig(base.family, base.size_param, base.marked_count, nl, GammaPolicy(kind, params),
                       controls, base.srg)
    return cfg


def _derived(cfg: SearchConfig) -> dict:
    cg = cfg.collapsed()
    n, k = cg.n_vertices, cg.marked_count
    return {"N": n, "k": k, "g": cfg.nonlinearity.g, "G": cfg.nonlinearity.g / (k * (n - k))}


# ---------------------------------------------------------------- subcommands

def cmd_simulate(args, bloch: bool = False):
    cfg = build_config(args)
    if args.t_end is None:
        raise UsageError("--t-end is required")

    def run():
        traj = integrate(cfg, args.t_end)
        text = traj.to_csv()
        if bloch:
            if traj.probs.shape[1] != 2:
                raise UsageError("bloch needs a two-class (complete graph) configuration")
            rows = text.rstrip("\n").split("\n")
            out = [rows[0] + ",bx,by,bz"]
            for i, row in enumerate(rows[1:]):
                c0, c1 = traj.amplitudes[i]
                nrm = math.sqrt(abs(c0) ** 2 + abs(c1) ** 2)
                bx, by, bz = cf.bloch_coords(c0 / nrm, c1 / nrm)
                out.append(row + "," + ",".join(fmt(v) for v in (bx, by, bz)))
            text = "\n".join(out) + "\n"
        return {"csv": text}

    return {"config": cfg.to_dict(), "derived": _derived(cfg)}, run


CLOSED_FORM_OPS = (
    "linear_prob", "cubic_prob", "cubic_time_of_prob", "cubic_runtime", "cubic_width",
    "general_runtime", "general_width_leading", "cq_runtime", "log_runtime_numeric",
    "log_runtime_bounds", "exp_integral_e1", "log_width_lower_bound",
    "repulsive_stationary_points", "srg_prediction",
)


def cmd_closed_form(args):
    op = args.op
    n, k, g, eps = args.n, args.k, args.g_coeff, args.epsilon

    def need(**vals):
        for key, v in vals.items():
            if v is None:
                raise UsageError(f"{op} needs --{key.replace('_', '-')}")

    if op in ("exp_integral_e1",):
        need(x=args.x)
    elif op == "srg_prediction":
        need(srg=args.srg)
    else:
        need(n=n)

    def run():
        p = lambda: cf.CompleteSearchParams(n, k, g, eps)
        if op == "linear_prob":
            need(t=args.t)
            res = cf.linear_prob(n, args.t)
        elif op == "cubic_prob":
            need(t=args.t)
            res = cf.cubic_prob(p(), args.t)
        elif op == "cubic_time_of_prob":
            need(x=args.x)
            res = cf.cubic_time_of_prob(p(), args.x)
        elif op == "cubic_runtime":
            res = cf.cubic_runtime(p())
        elif op == "cubic_width":
            res = {"exact": cf.cubic_width(p(), "exact"), "leading": cf.cubic_width(p(), "leading")}
        elif op == "general_runtime":
            res = cf.general_runtime(Nonlinearity(args.nl, g), n, k)
        elif op == "general_width_leading":
            res = cf.general_width_leading(Nonlinearity(args.nl, g), n, k, eps)
        elif op == "cq_runtime":
            res = cf.cq_runtime(n, k, g)
        elif op == "log_runtime_numeric":
            res = cf.log_runtime_numeric(n, k, g)
        elif op == "log_runtime_bounds":
            res = cf.log_runtime_bounds(n, k, g)
        elif op == "exp_integral_e1":
            res = cf.exp_integral_e1(args.x)
        elif op == "log_width_lower_bound":
            res = cf.log_width_lower_bound(n, k, g, eps)
        elif op == "repulsive_stationary_points":
            res = cf.repulsive_stationary_points(n, k, g / (k * (n - k)))
        else:
            pr = cf.srg_prediction(SrgParams(*args.srg))
            res = {f: getattr(pr, f) for f in ("case", "gamma", "e_plus", "e_minus", "norm_A", "gap",
                                                "t_star", "amplitude")}
        inputs = {"N": n, "k": k, "g": g, "epsilon": eps, "x": args.x, "t": args.t, "nl": args.nl,
                  "srg": list(args.srg) if args.srg else None}
        if n is not None and k is not None and 1 <= k < n:
            inputs["G"] = g / (k * (n - k))
        return {"json": dump_json({"op": op, "inputs": inputs, "result": float(res) if isinstance(res, (float, np.floating)) else res})}

    return {"op": op}, run


def _parse_values(text: str) -> list[float]:
    """Comma list, or start:stop:step (stop inclusive)."""
    if ":" in text:
        a, b, s = (float(v) for v in text.split(":"))
        if s <= 0 or b < a:
            raise UsageError(f"bad range {text!r}")
        count = int(math.floor((b - a) / s + 1e-9)) + 1
        return [a + i * s for i in range(count)]
    return [float(v) for v in text.split(",") if v.strip()]


_EXPR_NAMES = {"log": math.log, "sqrt": math.sqrt, "exp": math.exp, "pi": math.pi, "log2": math.log2}


def _eval_expr(expr: str, **vals) -> float:
    return float(eval(expr, {"__builtins__": {}}, {**_EXPR_NAMES, **vals}))  # noqa: S307 - restricted namespace


SWEEP_OPS = ("cubic_runtime", "cq_runtime", "log_runtime_numeric", "general_runtime", "measured_width",
             "measured_peak")


def _sweep_task(task):
    idx, op, n, k, g, nl, eps, staging = task
    if op == "cubic_runtime":
        val = cf.cubic_runtime(cf.CompleteSearchParams(n, k, g))
    elif op == "cq_runtime":
        val = cf.cq_runtime(n, k, g)
    elif op == "log_runtime_numeric":
        val = cf.log_runtime_numeric(n, k, g)
    elif op == "general_runtime":
        val = cf.general_runtime(Nonlinearity(nl, g), n, k)
    else:
        nn, kk = int(round(n)), int(round(k))
        policy = GammaPolicy("fixed", {"gamma0": 1 / nn}) if nl == "linear" else GammaPolicy("general_critical")
        cfg = SearchConfig("complete", nn, kk, Nonlinearity(nl, g), policy, Controls(sample_dt=0.01))
        t_guess = math.pi * math.sqrt(nn / kk) / 2
        if nl != "linear":
            t_guess = cf.general_runtime(Nonlinearity(nl, g), nn, kk)
        res = measure_width(cfg, eps, t_end=1.6 * t_guess)
        val = res["width"] if op == "measured_width" else res["t_peak"]
    line = ",".join(fmt(v) for v in (n, k, g, val)) + "\n"
    path = Path(staging) / f"{idx:06d}.csv"
    path.write_text(line)
    return str(path)


def cmd_sweep(args):
    ns = _parse_values(args.n_values)
    if args.op not in SWEEP_OPS:
        raise UsageError(f"unknown sweep op {args.op!r}")
    tasks_spec = []
    for n in ns:
        k = _eval_expr(args.k_expr, N=n) if args.k_expr else float(args.k)
        gs = [_eval_expr(args.g_expr, N=n, k=k)] if args.g_expr else _parse_values(args.g_values)
        for g in gs:
            tasks_spec.append((n, k, g))
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")

    def run():
        with tempfile.TemporaryDirectory() as staging:
            tasks = [(i, args.op, n, k, g, args.nl, args.epsilon, staging) for i, (n, k, g) in enumerate(tasks_spec)]
            if args.jobs == 1:
                paths = [_sweep_task(t) for t in tasks]
            else:
                with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                    paths = list(pool.map(_sweep_task, tasks))
            body = "".join(Path(p).read_text() for p in sorted(paths))
        return {"csv": "N,k,g,value\n" + body}

    return {"op": args.op, "k_expr": args.k_expr, "g_expr": args.g_expr, "n_values": args.n_values,
            "jobs": args.jobs}, run


def cmd_fit(args):
    path = Path(args.input)
    if not path.exists():
        raise UsageError(f"no such file {path}")
    rows = list(csv.DictReader(io.StringIO(path.read_text())))
    if not rows:
        raise UsageError("input has no rows")
    col = args.column or list(rows[0].keys())[-1]
    if col not in rows[0] or "N" not in rows[0]:
        raise UsageError(f"input needs columns N and {col}")
    pts = [(float(r["N"]), float(r[col])) for r in rows]

    def run():
        fit = fit_power_law(pts)
        report = {"points": [list(p) for p in pts], **fit, "recipe": args.recipe or f"fit of {col} against N"}
        return {"json": dump_json(report)}

    return {"input": str(path), "column": col}, run


def cmd_validate_graph(args):
    if args.srg is None and args.family is None:
        raise UsageError("validate-graph needs --srg or --family")

    def run():
        out = {}
        if args.srg is not None:
            out["srg"] = list(args.srg)
            out.update(srg_check(SrgParams(*args.srg)))
        if args.family is not None:
            spec = FamilySpec(args.family, None if args.family == "petersen" else args.n)
            g = build_graph(spec)
            a = np.asarray(g.adjacency, dtype=int)
            classes = equitable_partition(a, [0])
            equitable = all(
                len(set(a[np.ix_(ci, cj)].sum(axis=1).tolist())) == 1 for ci in classes for cj in classes
            )
            cg = collapse(g, [0])
            out["family"] = g.name
            out["params"] = list(g.params.as_tuple()) if g.params else None
            if g.params:
                out.update(srg_check(g.params))
            out["class_sizes"] = list(cg.class_sizes)
            out["equitable"] = bool(equitable)
            out["reduced_adjacency"] = cg.reduced_adjacency.tolist()
        return {"json": dump_json(out)}

    return {"srg": args.srg, "family": args.family, "n": args.n}, run


def cmd_compare_oracle(args):
    cfg = build_config(args)
    if args.t_end is None:
        raise UsageError("--t-end is required")
    if cfg.family == "srg":
        raise UsageError("compare-oracle needs a constructible --family")
    spec = FamilySpec(cfg.family, cfg.size_param)
    graph = build_graph(spec)
    if graph.n_vertices > 5000:
        raise UsageError("full integration limited to N <= 5000")
    marked = list(range(cfg.marked_count))

    def run():
        red = integrate(cfg, args.t_end)
        full = full_integrate(graph, marked, cfg.nonlinearity, cfg.policy, args.t_end, cfg.controls)
        classes = collapse(graph, marked).classes
        rep = compare(full, red, classes)
        rep["within_class_spread"] = within_class_spread(full, classes)
        return {"json": dump_json(rep)}

    return {"config": cfg.to_dict()}, run


def cmd_overlap_sweep(args):
    gf = _graph_fields(args)
    cfg = SearchConfig(gf["family"], gf["size_param"], args.marked_count, srg=gf["srg"])
    cg = cfg.collapsed()
    grid = np.linspace(args.gamma_min, args.gamma_max, args.n_gamma)

    def run():
        return {"csv": sweep_csv(overlap_sweep(cg, grid))}

    return {"graph": gf, "gamma_min": args.gamma_min, "gamma_max": args.gamma_max, "n_gamma": args.n_gamma}, run


# ---------------------------------------------------------------- parser and driver

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nlqsearch", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", default=None, help="JSON file whose keys mirror the flags")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate one trajectory")
    add_sim_args(p)
    add_output_args(p)

    p = sub.add_parser("bloch", help="trajectory with Bloch-sphere columns (two-class runs)")
    add_sim_args(p)
    add_output_args(p)

    p = sub.add_parser("closed-form", help="evaluate a closed-form result")
    p.add_argument("--op", required=True, choices=CLOSED_FORM_OPS)
    p.add_argument("--n", type=float, default=None)
    p.add_argument("--k", type=float, default=1)
    p.add_argument("--g-coeff", type=float, default=0.0)
    p.add_argument("--epsilon", type=float, default=cf.DEFAULT_EPSILON)
    p.add_argument("--x", type=float, default=None)
    p.add_argument("--t", type=float, default=None)
    p.add_argument("--nl", choices=["linear", "cubic", "cubic_quintic", "loglinear"], default="cubic")
    p.add_argument("--srg", type=_srg_tuple, default=None)
    add_output_args(p)

    p = sub.add_parser("sweep", help="evaluate a runtime or width over a grid of N and g")
    p.add_argument("--op", required=True, choices=SWEEP_OPS)
    p.add_argument("--n-values", required=True, help="comma list or start:stop:step")
    p.add_argument("--k", type=float, default=1)
    p.add_argument("--k-expr", default=None, help="expression in N, e.g. 'N**0.25'")
    p.add_argument("--g-values", default="0")
    p.add_argument("--g-expr", default=None, help="expression in N and k, e.g. 'N**0.125/log(N/k)'")
    p.add_argument("--nl", choices=["linear", "cubic", "cubic_quintic", "loglinear"], default="cubic")
    p.add_argument("--epsilon", type=float, default=cf.DEFAULT_EPSILON)
    p.add_argument("--jobs", type=int, default=1)
    add_output_args(p)

    p = sub.add_parser("fit", help="power-law fit of a sweep output")
    p.add_argument("--input", required=True)
    p.add_argument("--column", default=None)
    p.add_argument("--recipe", default=None)
    add_output_args(p)

    p = sub.add_parser("validate-graph", help="SRG feasibility and equitable-partition audit")
    p.add_argument("--srg", type=_srg_tuple, default=None)
    p.add_argument("--family", default=None, choices=["complete", "paley", "square_lattice", "latin_square",
                                                      "triangular", "hypercube", "petersen"])
    p.add_argument("--n", type=int, default=None)
    add_output_args(p)

    p = sub.add_parser("compare-oracle", help="reduced vs full-space integration")
    add_sim_args(p)
    add_output_args(p)

    p = sub.add_parser("overlap-sweep", help="gap and eigenvector overlaps against gamma")
    add_graph_args(p)
    p.add_argument("--gamma-min", type=float, required=True)
    p.add_argument("--gamma-max", type=float, required=True)
    p.add_argument("--n-gamma", type=int, default=101)
    add_output_args(p)
    return parser


HANDLERS = {
    "simulate": cmd_simulate,
    "bloch": lambda a: cmd_simulate(a, bloch=True),
    "closed-form": cmd_closed_form,
    "sweep": cmd_sweep,
    "fit": cmd_fit,
    "validate-graph": cmd_validate_graph,
    "compare-oracle": cmd_compare_oracle,
    "overlap-sweep": cmd_overlap_sweep,
}


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            overrides = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            parser.error(f"cannot read --config: {exc}")
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = set(overrides) - known
        if unknown:
            parser.error(f"unknown config keys: {sorted(unknown)}")
        sub.set_defaults(**overrides)
        args = parser.parse_args(argv)
    return parser, args


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        parser, args = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    started = time.perf_counter()
    try:
        resolved, job = HANDLERS[args.command](args)
    except (UsageError, ValueError) as exc:
        parser.print_usage(sys.stderr)
        print(f"nlqsearch {args.command}: error: {exc}", file=sys.stderr)
        return 2
    try:
        result = job()
    except UsageError as exc:
        print(f"nlqsearch {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (IntegrationError, ValueError, ArithmeticError) as exc:
        print(f"nlqsearch {args.command}: numerical failure: {exc}", file=sys.stderr)
        return 1
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = args.name or args.command
    outputs = []
    for ext, text in result.items():
        path = out_dir / f"{stem}.{ext}"
        path.write_text(text)
        outputs.append(str(path))
    manifest = {
        "command": args.command,
        "argv": argv,
        "resolved": _round_floats(resolved),
        "outputs": outputs,
        "wall_time_s": time.perf_counter() - started,
        "version": __version__,
        "nlq_seed": os.environ.get("NLQ_SEED"),
    }
    (out_dir / f"{stem}.manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=2, default=str) + "\n")
    for path in outputs:
        print(path)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
