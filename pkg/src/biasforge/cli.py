"""Command-line front end: transform construction, sampling, density
tabulation, verification suites and distance-bound experiments.

Structured inputs are JSON, numeric tables are CSV.  Exit codes: 0 on
success, 2 on input validation failure (machine-readable error JSON on
stderr), 1 on internal error.  The environment variable BIASFORGE_SEED
supplies the default seed when --seed is omitted.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys

import numpy as np

from .errors import BiasforgeError, InputError
from .distributions import (
    Distribution,
    RandomSource,
    catalog_families,
    dist_from_json,
    moment,
    sample,
)
from .polynomials import NodeSet, PiecewisePoly, Polynomial
from .transform import SignChangeSpec
from .higher import ChainRecipe, bias_to_order
from .stein import first_order_bound, first_order_coupling_stats
from .verify import run_suite

DEFAULT_SEED = 12345
_SIGN_RE = re.compile(r"^sign\(x([+-][0-9.eE+-]+)?\)$")

BUILTIN_BIAS = ("identity", "x", "x-plus", "sign(x-a)", "x-mean")


# ---------------------------------------------------------------------------
# parsing helpers
# ---------------------------------------------------------------------------

def _parse_json(text: str, what: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON for {what}: {exc}") from exc


def parse_distribution(text: str) -> Distribution:
    return dist_from_json(_parse_json(text, "distribution"))


def parse_nodes(text: str | None) -> tuple:
    if text is None:
        return None
    obj = _parse_json(text, "nodes")
    if not isinstance(obj, list):
        raise InputError("nodes must be a JSON array")
    return tuple(float(x) for x in obj)


def parse_bias(text: str, dist: Distribution | None = None):
    """Named built-in biasing functions, or a piecewise-polynomial JSON
    object {"pieces": [{"interval": [l, r], "coeffs": [...]}]}.

    Returns (callable, default_nodes or None, kink locations).
    """
    text = text.strip()
    if text == "identity":
        return (lambda x: np.ones_like(np.asarray(x, dtype=float)), (), ())
    if text == "x":
        return (lambda x: np.asarray(x, dtype=float), (0.0,), ())
    if text == "x-plus":
        return (lambda x: np.maximum(np.asarray(x, dtype=float), 0.0), None, (0.0,))
    m = _SIGN_RE.match(text)
    if m:
        shift = m.group(1)
        a = -float(shift) if shift else 0.0  # "sign(x-1.5)" carries "-1.5"
        return (lambda x: np.sign(np.asarray(x, dtype=float) - a), (a,), (a,))
    if text == "x-mean":
        if dist is None:
            raise InputError("x-mean needs a distribution to center on")
        mu = moment(dist, 1)
        return (lambda x: np.asarray(x, dtype=float) - mu, (mu,), ())
    if text.startswith("{"):
        obj = _parse_json(text, "bias")
        pieces = obj.get("pieces")
        if not pieces:
            raise InputError("piecewise bias needs a nonempty 'pieces' list")
        breaks = []
        polys = [Polynomial(())]
        last = None
        for piece in sorted(pieces, key=lambda p: p["interval"][0]):
            lo, hi = (float(v) for v in piece["interval"])
            if not lo < hi:
                raise InputError("piece interval must satisfy l < r")
            if last is not None and lo < last:
                raise InputError("piece intervals must not overlap")
            if last is None or lo > last:
                breaks.append(lo)
                if last is not None:
                    polys.append(Polynomial(()))
            poly = Polynomial(tuple(float(c) for c in piece["coeffs"]))
            polys.append(poly)
            breaks.append(hi)
            last = hi
        polys.append(Polynomial(()))
        return (PiecewisePoly(tuple(breaks), tuple(polys)), None, tuple(breaks))
    raise InputError(f"unknown bias {text!r}; built-ins: {', '.join(BUILTIN_BIAS)}")


def build_spec(bias_text: str, nodes_text: str | None, dist: Distribution) -> SignChangeSpec:
    fn, default_nodes, kinks = parse_bias(bias_text, dist)
    nodes = parse_nodes(nodes_text)
    if nodes is None:
        if default_nodes is None:
            raise InputError(f"bias {bias_text!r} needs explicit --nodes")
        nodes = default_nodes
    return SignChangeSpec(fn, NodeSet(nodes), kinks=kinks, label=bias_text)


def _seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return int(args.seed)
    return int(os.environ.get("BIASFORGE_SEED", DEFAULT_SEED))


def _emit(payload: dict, out: str | None):
    text = json.dumps(payload, indent=2, default=float)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _write_csv(path: str | None, header: str, rows):
    lines = [header] + [",".join(v if isinstance(v, str) else f"{v:.17g}" for v in row)
                        for row in rows]
    text = "\n".join(lines) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------

def _cmd_catalog(args) -> int:
    _emit({
        "families": catalog_families(),
        "bias_functions": list(BUILTIN_BIAS),
        "bias_piecewise_format": {"pieces": [{"interval": ["l", "r"], "coeffs": ["c0", "c1"]}]},
        "distribution_formats": ["{'family': name, 'params': {...}}",
                                 "{'atoms': [[x, p], ...]}",
                                 "{'empirical_csv': 'samples.csv'}",
                                 "{'mixture': {'components': [...], 'weights': [...]}}"],
        "suites": ["exact", "mc", "ambi", "fixed-point"],
    }, getattr(args, "out", None))
    return 0


def _build_transform(args):
    dist = parse_distribution(args.dist)
    spec = build_spec(args.bias, args.nodes, dist)
    m = args.m if args.m is not None else spec.k
    transform = bias_to_order(dist, spec, int(m), rng=RandomSource(_seed(args)))
    return dist, spec, int(m), transform


def _cmd_transform(args) -> int:
    dist, spec, m, transform = _build_transform(args)
    report = {
        "k": spec.k,
        "m": m,
        "nodes": list(spec.nodes),
        "alpha": transform.alpha,
        "beta": transform.beta,
        "support": [transform.law.lo, transform.law.hi],
        "seed": _seed(args),
    }
    if isinstance(transform.recipe, ChainRecipe):
        report["chain_normalizers"] = list(transform.recipe.step_normalizers)
    _emit(report, args.out)
    return 0


def _cmd_sample(args) -> int:
    dist = parse_distribution(args.dist)
    rng = RandomSource(_seed(args))
    if args.bias is None:
        draws = sample(dist, rng, args.n)
    else:
        spec = build_spec(args.bias, args.nodes, dist)
        m = args.m if args.m is not None else spec.k
        transform = bias_to_order(dist, spec, int(m))
        draws = transform.sample(args.n, rng)
    _write_csv(args.out, "x", [(float(v),) for v in draws])
    return 0


def _cmd_density(args) -> int:
    dist = parse_distribution(args.dist)
    lo, hi, pts = float(args.grid[0]), float(args.grid[1]), int(args.grid[2])
    if pts < 2:
        raise InputError("grid needs at least 2 points")
    if not lo < hi:
        raise InputError("grid needs lo < hi")
    ts = np.linspace(lo, hi, pts)
    if args.bias is None:
        if dist.density is None:
            raise InputError("this distribution has no density; supply --bias")
        vals = np.asarray(dist.density(ts), dtype=float)
    else:
        spec = build_spec(args.bias, args.nodes, dist)
        m = args.m if args.m is not None else spec.k
        transform = bias_to_order(dist, spec, int(m))
        vals = np.asarray(transform.density(ts), dtype=float)
    _write_csv(args.out, "t,p", list(zip(ts.tolist(), vals.tolist())))
    return 0


def _cmd_verify(args) -> int:
    report = run_suite(args.suite, seed=_seed(args), n=args.n)
    _emit(report, args.out)
    return 0 if report["passed"] else 1


def _cmd_distance(args) -> int:
    text = args.experiment
    if text.startswith("@"):
        with open(text[1:]) as fh:
            text = fh.read()
    exp = _parse_json(text, "experiment")
    for key in ("test_distribution", "operator", "constants"):
        if key not in exp:
            raise InputError(f"experiment spec needs {key!r}")
    X = dist_from_json(exp["test_distribution"])
    target = dist_from_json(exp["target"]) if "target" in exp else None
    op = exp["operator"]
    if int(op.get("order", 1)) != 1:
        raise InputError("distance experiments support first-order operators")
    fn, default_nodes, kinks = parse_bias(op["bias"], X)
    nodes = tuple(op["nodes"]) if "nodes" in op else default_nodes
    if nodes is None:
        raise InputError("operator needs sign-change nodes")
    spec = SignChangeSpec(fn, NodeSet(nodes), kinks=kinks, label=op["bias"])
    n = int(exp.get("n_samples", 100_000))
    seed = int(exp.get("seed", _seed(args)))
    coupling = exp.get("coupling", "independent")

    stats = first_order_coupling_stats(X, spec, n, seed, coupling=coupling)
    db = first_order_bound(stats["coupling_gap"], stats["alpha"], stats["b_mean"],
                           exp["constants"], f_at_node=exp.get("f_at_node"))
    report = {
        "order": 1,
        "coupling": coupling,
        "n_samples": n,
        "seed": seed,
        "target": exp.get("target"),
        "constants": list(db.constants),
        "coupling_gap": db.coupling_gap,
        "alpha_dev": db.alpha_dev,
        "b_mean": stats["b_mean"],
        "bound": db.bound,
        "ingredient_se": {"coupling_gap": stats["coupling_gap_se"],
                          "alpha": stats["alpha_se"], "b_mean": stats["b_mean_se"]},
    }
    _emit(report, args.out)
    if args.out_csv:
        rows = [("coupling_gap", stats["coupling_gap"], stats["coupling_gap_se"]),
                ("alpha", stats["alpha"], stats["alpha_se"]),
                ("b_mean", stats["b_mean"], stats["b_mean_se"]),
                ("bound", db.bound, float("nan"))]
        _write_csv(args.out_csv, "ingredient,estimate,se", rows)
    _ = target
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="biasforge",
                                     description="sign-change biased distributional transforms")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("catalog", help="list built-in distributions and biasing functions")
    p.add_argument("--out")
    p.set_defaults(handler=_cmd_catalog)

    def add_transform_args(p, need_bias=True):
        p.add_argument("--dist", required=True, help="distribution JSON")
        if need_bias:
            p.add_argument("--bias", required=True, help="bias name or piecewise JSON")
        else:
            p.add_argument("--bias", default=None)
        p.add_argument("--nodes", default=None, help="JSON array of sign-change nodes")
        p.add_argument("--m", type=int, default=None, help="derivative order (default: k)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None)

    for name in ("transform", "bias-km"):
        p = sub.add_parser(name, help="construct a transform and report its normalizers")
        add_transform_args(p)
        p.add_argument("--k", type=int, default=None,
                       help="expected sign-change count (checked against --nodes)")
        p.set_defaults(handler=_cmd_transform_checked)

    p = sub.add_parser("sample", help="draw from a distribution or its transform")
    add_transform_args(p, need_bias=False)
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(handler=_cmd_sample)

    p = sub.add_parser("density", help="tabulate a density on a grid as CSV")
    add_transform_args(p, need_bias=False)
    p.add_argument("--grid", nargs=3, required=True, metavar=("LO", "HI", "POINTS"))
    p.set_defaults(handler=_cmd_density)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("--suite", required=True, choices=("exact", "mc", "ambi", "fixed-point"))
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--out", default=None)
    p.set_defaults(handler=_cmd_verify)

    p = sub.add_parser("distance", help="coupling-based distance bound experiment")
    p.add_argument("--experiment", required=True,
                   help="experiment JSON (inline, or @path to a file)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--out-csv", default=None)
    p.set_defaults(handler=_cmd_distance)

    return parser


def _cmd_transform_checked(args) -> int:
    if args.k is not None:
        nodes = parse_nodes(args.nodes) or ()
        if len(nodes) != args.k:
            raise InputError(f"--k {args.k} does not match {len(nodes)} nodes")
    return _cmd_transform(args)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.handler(args)
    except BiasforgeError as exc:
        json.dump({"error": {"type": type(exc).__name__, "message": str(exc)}},
                  sys.stderr)
        sys.stderr.write("\n")
        return 2
    except Exception as exc:  # internal error
        json.dump({"error": {"type": "InternalError",
                             "message": f"{type(exc).__name__}: {exc}"}}, sys.stderr)
        sys.stderr.write("\n")
        return 1


def main() -> None:
    sys.exit(run())
