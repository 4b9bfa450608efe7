"""Command-line interface.

Every subcommand reads a model from ``--config`` (JSON) and/or ``--V`` /
``--alpha``; command-line flags override the file, which overrides the
defaults.  Output is CSV on stdout (or ``--out``), preceded by one
``# schema: vmcoal.<command>/<version>`` line; ``--json`` writes the same
rows as a JSON document instead.

Exit codes: 0 success, 1 tolerance failure in ``compare``, 2 invalid input,
3 solver did not converge.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import branching, coalescent_sim, graph_sim, lambert_euler, smoluchowski
from .census import merge
from .errors import ModelError, NoConvergence, SizeOverflow
from .model import ModelParams, classify, gelation_time, spectral_radius

SCHEMA_VERSION = 1
COMPARE_ABS_TOL = 1e-6

DEFAULTS = {
    "t": [],
    "nmax": None,
    "n": 10_000,
    "seed": 0,
    "replicas": 1,
    "out": None,
    "json": False,
}

EXIT_OK, EXIT_TOLERANCE, EXIT_INVALID, EXIT_NOCONV = 0, 1, 2, 3


class UsageError(ValueError):
    pass


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


class Table:
    def __init__(self, name, header):
        self.schema = f"vmcoal.{name}/{SCHEMA_VERSION}"
        self.header = list(header)
        self.rows = []
        self.notes = []

    def add(self, *row):
        self.rows.append(list(row))

    def render(self, as_json: bool) -> str:
        if as_json:
            doc = {
                "schema": self.schema,
                "rows": [
                    {h: (float(v) if isinstance(v, np.floating) else int(v) if isinstance(v, np.integer) else v)
                     for h, v in zip(self.header, r)}
                    for r in self.rows
                ],
            }
            if self.notes:
                doc["notes"] = self.notes
            return json.dumps(doc, indent=2) + "\n"
        buf = io.StringIO()
        buf.write(f"# schema: {self.schema}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for r in self.rows:
            w.writerow([_fmt(v) for v in r])
        for note in self.notes:
            buf.write("# " + " ".join(f"{k}={_fmt(v)}" for k, v in note.items()) + "\n")
        return buf.getvalue()


# ----------------------------------------------------------------- config

def load_config(args) -> tuple[ModelParams, dict]:
    cfg = {}
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}")
        if not isinstance(cfg, dict):
            raise ModelError("config must be a JSON object", "$")
    model_cfg = {k: cfg[k] for k in ("k", "V", "alpha") if k in cfg}
    for key in ("V", "alpha"):
        raw = getattr(args, key)
        if raw is not None:
            try:
                model_cfg[key] = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise UsageError(f"--{key} is not valid JSON: {exc}")
            model_cfg.pop("k", None)
    if "V" not in model_cfg and "alpha" not in model_cfg:
        raise UsageError("no model given: use --config or --V/--alpha")
    params = ModelParams.from_config(model_cfg)

    run = dict(DEFAULTS)
    for key in DEFAULTS:
        if key in cfg:
            run[key] = cfg[key]
    if not isinstance(run["t"], list):
        run["t"] = [run["t"]]
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None and val is not False and val != []:
            run[key] = val
    _check_run(run)
    return params, run


def _check_run(run):
    for i, t in enumerate(run["t"]):
        if isinstance(t, bool) or not isinstance(t, (int, float)) or not math.isfinite(t) or t < 0:
            raise ModelError(f"expected a finite time >= 0, got {t!r}", f"$.t[{i}]")
    for key, lo in (("nmax", 1), ("n", 1), ("replicas", 0), ("seed", 0)):
        v = run[key]
        if v is None and key == "nmax":
            continue
        if isinstance(v, bool) or not isinstance(v, int) or v < lo:
            raise ModelError(f"expected an integer >= {lo}, got {v!r}", f"$.{key}")


def _times(run, positive=True, single=False):
    ts = [float(t) for t in run["t"]]
    if not ts:
        raise UsageError("at least one --t is required")
    if positive and any(t <= 0 for t in ts):
        raise UsageError("times must be > 0 for this command")
    if single and len(ts) != 1:
        raise UsageError("this command takes exactly one --t")
    return ts


def _k_cols(prefix, k):
    return [f"{prefix}_{i + 1}" for i in range(k)]


# --------------------------------------------------------------- commands

def cmd_geltime(params, run, args):
    rho = spectral_radius(params.base_matrix())
    tgel = gelation_time(params)
    tab = Table("geltime", ["t_gel", "rho", "t", "rho_t", "region"])
    ts = [float(t) for t in run["t"]]
    if not ts:
        tab.add(tgel, rho, "", "", "")
    for t in ts:
        reg = classify(params, t)
        tab.add(tgel, rho, t, reg.rho, reg.region.value)
    return tab, EXIT_OK


def cmd_invert(params, run, args):
    tab = Table("invert", ["t", *_k_cols("y", params.k), "iterations", "residual", "region"])
    for t in _times(run):
        r = lambert_euler.invert(params, t)
        tab.add(t, *r.y, r.iterations, r.residual, r.region.region.value)
    return tab, EXIT_OK


def cmd_mass(params, run, args):
    tab = Table("mass", ["t", *_k_cols("mass", params.k), "tail_bound"])
    for t in _times(run):
        mass, tail = smoluchowski.total_mass(params, t, run["nmax"])
        tab.add(t, *mass, tail)
    return tab, EXIT_OK


def cmd_clusters(params, run, args):
    (t,) = _times(run, positive=False, single=True)
    nmax = run["nmax"] or smoluchowski.default_nmax(params.k)
    X = smoluchowski.size_array(params.k, nmax)
    tab = Table("clusters", [*_k_cols("x", params.k), "zeta"])
    for x, z in zip(X, smoluchowski.zeta_batch(params, X, t)):
        tab.add(*x.tolist(), float(z))
    return tab, EXIT_OK


def cmd_extinction(params, run, args):
    (t,) = _times(run, single=True)
    m = branching.mean_matrix(params, t)
    tab = Table("extinction", ["method", *_k_cols("eta", params.k), "residual_or_tail", "n_replicas"])
    fp = branching.extinction_fixed_point(m)
    tab.add("fixed_point", *fp.eta, fp.residual, 0)
    eta, tail = branching.extinction_series(params, t, run["nmax"])
    tab.add("series", *eta, tail, 0)
    if run["replicas"] > 0 and args.monte_carlo:
        est = [
            branching.estimate_extinction(
                m, i, run["replicas"], run["seed"],
                args.max_generations, args.population_cap,
            )
            for i in range(params.k)
        ]
        tab.add(
            "monte_carlo",
            *[e.frequency for e in est],
            max(e.sigma() for e in est),
            run["replicas"],
        )
    return tab, EXIT_OK


def cmd_sim_branching(params, run, args):
    (t,) = _times(run, single=True)
    m = branching.mean_matrix(params, t)
    eta = branching.extinction_fixed_point(m).eta
    reps = max(run["replicas"], 1)
    if args.per_replica:
        tab = Table("sim-branching-replicas", ["start_type", "replica", "extinct", "generations", "population"])
    else:
        tab = Table(
            "sim-branching",
            ["start_type", "n_replicas", "n_extinct", "frequency", "sigma", "eta_fixed_point"],
        )
    for i in range(params.k):
        outcomes = []
        est = branching.estimate_extinction(
            m, i, reps, run["seed"], args.max_generations, args.population_cap, outcomes
        )
        if args.per_replica:
            for r, o in enumerate(outcomes):
                tab.add(i + 1, r, int(o.extinct), o.generations, o.population)
        else:
            tab.add(i + 1, reps, est.n_extinct, est.frequency, est.sigma(eta[i]), eta[i])
    return tab, EXIT_OK


def _census_rows(tab, t, census, scale):
    for x, c in census.items():
        tab.add(t, *x, c, c / scale)


def cmd_sim_graph(params, run, args):
    ts = _times(run, positive=False)
    n, reps = run["n"], max(run["replicas"], 1)
    tab = Table("sim-graph", ["t", *_k_cols("x", params.k), "count", "scaled"])
    for t in ts:
        samples = graph_sim.sample_replicas(params, t, n, run["seed"], reps)
        _census_rows(tab, t, graph_sim.merged_census(samples), n * reps)
        comp = np.mean([s.giant_composition for s in samples], axis=0)
        tab.notes.append({
            "giant_t": t,
            "size": float(np.mean([s.giant_size for s in samples])),
            "composition": ";".join(repr(float(c)) for c in comp),
            "fraction": float(np.mean([s.giant_fraction for s in samples])),
            "replicas": reps,
        })
    return tab, EXIT_OK


def cmd_sim_coalescent(params, run, args):
    ts = sorted(_times(run, positive=False))
    n, reps = run["n"], max(run["replicas"], 1)
    tab = Table("sim-coalescent", ["t", *_k_cols("x", params.k), "count", "scaled"])
    per_t = {t: [] for t in ts}
    for r in range(reps):
        for t, c in coalescent_sim.snapshots(params, n, run["seed"] ^ r, ts):
            per_t[t].append(c)
    for t in ts:
        _census_rows(tab, t, merge(per_t[t]), n * reps)
    return tab, EXIT_OK


ROUTES = ("inversion", "fixed_point", "series", "mass")


def compare_point(params, t, nmax=None):
    """The four analytic routes to ``y(t)`` and their pairwise discrepancies."""
    at = params.alpha * t
    y = {
        "inversion": lambert_euler.invert(params, t).y,
        "fixed_point": branching.extinction_fixed_point(branching.mean_matrix(params, t)).eta * at,
    }
    eta, _ = branching.extinction_series(params, t, nmax)
    y["series"] = eta * at
    mass, mass_tail = smoluchowski.total_mass(params, t, nmax)
    y["mass"] = mass * t
    tail_y = mass_tail * t
    diffs = {}
    for a_i, a in enumerate(ROUTES):
        for b in ROUTES[a_i + 1:]:
            diffs[f"{a}-{b}"] = float(np.max(np.abs(y[a] - y[b])))
    return y, diffs, tail_y


def cmd_compare(params, run, args):
    ts = _times(run)
    pairs = [f"{a}-{b}" for i, a in enumerate(ROUTES) for b in ROUTES[i + 1:]]
    header = ["t", "region", *_k_cols("y", params.k), "tail_bound", *[f"d_{p}" for p in pairs], "tol"]
    mc = run["replicas"] > 0 and args.monte_carlo
    if mc:
        header.append("d_graph_mc")
    header.append("verdict")
    tab = Table("compare", header)
    failed = False
    for t in ts:
        y, diffs, tail = compare_point(params, t, run["nmax"])
        tol = COMPARE_ABS_TOL + tail
        ok = all(d <= tol for d in diffs.values())
        failed |= not ok
        row = [t, classify(params, t).region.value, *y["inversion"], tail, *[diffs[p] for p in pairs], tol]
        if mc:
            samples = graph_sim.sample_replicas(params, t, run["n"], run["seed"], run["replicas"])
            finite = np.mean(
                [(np.array(s.part_sizes) - np.array(s.giant_composition)) / s.n for s in samples], axis=0
            )
            row.append(float(np.max(np.abs(finite * t - y["inversion"]))))
        row.append("pass" if ok else "FAIL")
        tab.add(*row)
    return tab, (EXIT_TOLERANCE if failed else EXIT_OK)


COMMANDS = {
    "geltime": cmd_geltime,
    "invert": cmd_invert,
    "mass": cmd_mass,
    "clusters": cmd_clusters,
    "extinction": cmd_extinction,
    "compare": cmd_compare,
    "sim-graph": cmd_sim_graph,
    "sim-coalescent": cmd_sim_coalescent,
    "sim-branching": cmd_sim_branching,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with k, V, alpha and optional run fields")
    common.add_argument("--V", help='interaction matrix as JSON, e.g. "[[0,1],[1,0]]"')
    common.add_argument("--alpha", help='initial densities as JSON, e.g. "[15,2]"')
    common.add_argument("--t", type=float, action="append", default=None, help="time (repeatable)")
    common.add_argument("--nmax", type=int, help="truncation level for cluster sums")
    common.add_argument("--n", type=int, help="system size for simulators")
    common.add_argument("--seed", type=int)
    common.add_argument("--replicas", type=int)
    common.add_argument("--out", help="write to this file instead of stdout")
    common.add_argument("--json", action="store_true", default=None, help="emit JSON instead of CSV")

    parser = argparse.ArgumentParser(prog="vmcoal", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name in ("extinction", "sim-branching"):
            p.add_argument("--max-generations", type=int, default=10_000)
            p.add_argument("--population-cap", type=int, default=1_000_000)
        if name in ("extinction", "compare"):
            p.add_argument("--monte-carlo", action="store_true",
                           help="add a Monte Carlo route (uses --replicas, --seed, --n)")
        if name == "sim-branching":
            p.add_argument("--per-replica", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        params, run = load_config(args)
        tab, code = COMMANDS[args.command](params, run, args)
    except (ModelError, SizeOverflow, UsageError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NoConvergence as exc:
        print(f"error: NoConvergence: {exc}", file=sys.stderr)
        return EXIT_NOCONV
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    text = tab.render(bool(run["json"]))
    if run["out"]:
        with open(run["out"], "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
