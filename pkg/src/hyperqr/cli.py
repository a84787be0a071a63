"""Command-line front end.  Every run prints one JSON report (or a CSV table
for censuses) and exits 0 on success, 2 on budget exhaustion, 1 on error."""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from fractions import Fraction
from importlib import resources

import numpy as np

from . import __version__
from ._util import default_budget, fraction_json
from .complex import PartiteComplex, PartiteGround, as_index, generated_complex
from .constructions import CONSTRUCTIONS, layered_random_complex, roedl_tournament
from .embed import EXHAUSTED, certify_construction, contains_copy, count_embeddings, hill_climb_codegree
from .errors import BudgetExceeded, HyperQRError
from .galois import (
    baer_subplane,
    blocking_sets,
    check_plane_axioms,
    difference_set_plane,
    fano,
    iso_check,
    line_type_census,
    pg,
    wedge_choices,
    wedge_colouring,
)
from .homcomplex import hom_complex_density_report
from .hypergraph import HomEstimate, UniformHypergraph, hom_density, read_hypergraph
from .quasirandom import balanced_function, oct, quasirandom_check
from .regularity import DecomposeParams, block_bipartite, decompose

SCHEMA_VERSION = "1"


class _BudgetVerdict(Exception):
    """A search ran out of budget; the report is still printed."""


def load_schema() -> dict:
    return json.loads(resources.files("hyperqr").joinpath("report.schema.json").read_text())


def _num(x):
    if isinstance(x, Fraction):
        return fraction_json(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    return x


class Report:
    def __init__(self, argv, config):
        self.argv = list(argv)
        self.config = config
        self.results: dict = {}
        self.exactness: dict = {}
        self.t0 = time.perf_counter()

    def exact(self, key, value):
        self.results[key] = _num(value)
        self.exactness[key] = {"kind": "exact"}

    def estimate(self, key, value, stderr):
        self.results[key] = _num(value)
        self.exactness[key] = {"kind": "estimate", "stderr": float(stderr)}

    def put(self, key, value):
        """Payload without its own error bar; bare integers are counts and so exact."""
        if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
            self.exact(key, value)
            return
        self.results[key] = value

    def to_dict(self, status="ok") -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "tool_version": __version__,
            "command": self.argv,
            "config": self.config,
            "status": status,
            "results": self.results,
            "exactness": self.exactness,
            "wall_time": time.perf_counter() - self.t0,
        }


def _hypergraph_arg(spec: str) -> tuple[UniformHypergraph, list[int] | None]:
    """A file path, or one of the names fano / pg<m><q> (e.g. pg23)."""
    if spec == "fano":
        return fano(), None
    if spec.startswith("pg") and spec[2:].isdigit() and len(spec) == 4:
        return pg(int(spec[2]), int(spec[3])).hypergraph, None
    return read_hypergraph(spec)


def _complex_from_file(path: str) -> PartiteComplex:
    if path.endswith(".json"):
        with open(path) as fh:
            return PartiteComplex.from_json(fh.read())
    H, parts = read_hypergraph(path)
    if parts is None:
        raise HyperQRError(f"{path} has no 'parts' line; a partite input is required")
    return generated_complex(H, PartiteGround(tuple(parts)))


# -- subcommands -------------------------------------------------------------------------

def cmd_pg(args, rep: Report):
    if args.action == "gen":
        P = pg(args.m, args.q, budget=args.budget)
        if args.m == 2:
            check_plane_axioms(P)
        rep.exact("points", len(P.points))
        rep.exact("lines", len(P.lines))
        rep.exact("line_size", args.q + 1)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(P.hypergraph.to_text())
            rep.put("file", args.out)
    elif args.action == "diffset":
        base = [int(x) for x in args.base.split(",")]
        D = difference_set_plane(args.modulus, base)
        rep.exact("points", D.n)
        rep.exact("lines", D.num_edges)
        if args.q:
            phi = iso_check(D, pg(2, args.q), budget=args.budget)
            rep.put("isomorphic", phi is not None)
            rep.put("bijection", None if phi is None else list(phi))
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(D.to_text())
            rep.put("file", args.out)
    elif args.action == "baer":
        B = baer_subplane(pg(2, args.q))
        rep.put("points", list(B.points))
        rep.exact("full_lines", len(B.full_lines))
        rep.exact("tangent_lines", len(B.tangent_lines))
        rep.put("subplane_is_pg", iso_check(B.subplane, pg(2, int(round(args.q**0.5)))) is not None)
    elif args.action == "wedge":
        P = pg(2, 4)
        if args.choice:
            choices = [tuple(int(v) for v in args.choice.split(","))]
        else:
            choices = list(wedge_choices(P))
        tally: dict = {}
        for ch in choices:
            census = line_type_census(P, wedge_colouring(P, *ch))
            key = json.dumps(census, sort_keys=True)
            tally[key] = tally.get(key, 0) + 1
        rows = [dict(json.loads(k), choices=v) for k, v in sorted(tally.items())]
        if args.format == "csv":
            return rows
        rep.exact("choices", len(choices))
        rep.put("censuses", rows)


def cmd_blocking(args, rep: Report):
    R = blocking_sets(pg(2, args.q), budget=args.budget)
    rep.exact("count", len(R.sets))
    rep.put("histogram", {str(k): v for k, v in R.histogram.items()})
    if R.tags:
        tags: dict = {}
        for t in R.tags.values():
            tags[t] = tags.get(t, 0) + 1
        rep.put("tags", dict(sorted(tags.items())))
    if args.format == "csv":
        return [{"size": k, "count": v} for k, v in R.histogram.items()]
    if args.list:
        rep.put("sets", R.to_json_lists())


def cmd_construct(args, rep: Report):
    if args.name == "roedl":
        H = roedl_tournament(args.n, args.seed)
        rep.exact("vertices", H.n)
        rep.exact("edges", H.num_edges)
        from .constructions import tetrahedron_count

        rep.exact("tetrahedra", tetrahedron_count(H))
    else:
        desc = CONSTRUCTIONS[args.name]
        params = {"n": args.n}
        if args.name == "oddly-bipartite":
            params["q"] = args.q
        H = desc.build(**params)
        from .hypergraph import min_s_degree

        p = {**desc.defaults, **params}
        s = desc.s(p)
        rep.exact("vertices", H.n)
        rep.exact("edges", H.num_edges)
        rep.exact(f"delta_{s}", min_s_degree(H, s))
        rep.exact(f"delta_{s}_claimed", desc.min_degree(p))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(H.to_text())
        rep.put("file", args.out)


def cmd_certify(args, rep: Report):
    desc = CONSTRUCTIONS[args.construction]
    extra = {"q": args.q} if args.construction == "oddly-bipartite" else {}
    r = certify_construction(desc, args.n, budget=args.budget, threads=args.threads, **extra)
    for key, val in r.items():
        if key.startswith("delta_") and isinstance(val, int):
            rep.exact(key, val)
        elif key != "runtime":
            rep.put(key, val)
    rep.put("runtime", r["runtime"])
    if r["search"]["verdict"] == EXHAUSTED:
        raise _BudgetVerdict


def cmd_search(args, rep: Report):
    F, _ = _hypergraph_arg(args.pattern)
    if args.action == "contains":
        H, _ = _hypergraph_arg(args.host)
        cert = contains_copy(H, F, budget=args.budget, threads=args.threads)
        rep.put("certificate", cert.to_dict())
        if cert.verdict == EXHAUSTED:
            raise _BudgetVerdict
    else:
        res = hill_climb_codegree(args.n, F, args.s, restarts=args.restarts, seed=args.seed, steps=args.steps)
        rep.exact(f"delta_{args.s}", res.delta)
        rep.exact("edges", res.hypergraph.num_edges)
        rep.put("history", res.history)
        rep.put("edge_list", [list(e) for e in res.hypergraph.edges])
        rep.put("note", "lower-bound witness only")


def cmd_qr(args, rep: Report):
    Hc = _complex_from_file(args.input)
    A = as_index(int(a) - 1 for a in args.index.split(","))
    if args.action == "oct":
        f = balanced_function(Hc, A, exact=args.mode == "exact")
        if args.mode == "montecarlo":
            est = oct(f, mode="montecarlo", samples=args.samples, seed=args.seed)
            rep.estimate("oct", est.mean, est.stderr)
        else:
            rep.exact("oct", oct(f, mode="exact", budget=args.budget))
    else:
        r = quasirandom_check(Hc, A, args.eta, mode=args.mode, samples=args.samples, seed=args.seed, budget=args.budget)
        d = r.to_dict()
        if isinstance(r.oct_value, HomEstimate):
            rep.estimate("oct", r.oct_value.mean, r.oct_value.stderr)
        else:
            rep.exact("oct", r.oct_value)
        rep.exact("bound", d["bound"])
        rep.put("passes", d["passes"])
        rep.put("index", d["index"])


def cmd_count(args, rep: Report):
    F, _ = _hypergraph_arg(args.pattern)
    H, _ = _hypergraph_arg(args.host)
    if args.mode == "montecarlo":
        est = hom_density(F, H, mode="montecarlo", samples=args.samples, seed=args.seed)
        rep.estimate("hom_density", est.mean, est.stderr)
    else:
        rep.exact("hom_density", hom_density(F, H, budget=args.budget))
    if args.embeddings:
        rep.exact("embeddings", count_embeddings(H, F, budget=args.budget))


def cmd_homcomplex(args, rep: Report):
    J = _complex_from_file(args.pattern)
    if args.layered:
        G = layered_random_complex(args.layered, args.density, args.density, args.seed)
    else:
        G = _complex_from_file(args.host)
    rows = hom_complex_density_report(J, G, mode=args.mode, samples=args.samples, seed=args.seed, budget=args.budget)
    out = []
    for r in rows:
        d = r.to_dict()
        key = "d_" + "".join(str(a) for a in d["index"])
        if r.stderr is None:
            rep.exact(key, r.measured)
        else:
            rep.estimate(key, r.measured, r.stderr)
        rep.exact(key + "_predicted", r.predicted)
        out.append(d)
    rep.put("rows", out)


def cmd_regularity(args, rep: Report):
    if args.block:
        H = block_bipartite(args.block)
    else:
        H = _complex_from_file(args.input)
    k = H.k
    params = DecomposeParams(
        densities={lvl: args.density for lvl in range(1, k + 1)},
        eta={lvl: args.eta for lvl in range(2, k + 1)},
        epsilon=args.epsilon,
        anchors=args.anchors,
        max_iterations=args.max_iterations,
        samples=args.samples,
    )
    D = decompose(H, params, seed=args.seed, threads=args.threads, budget=args.budget)
    d = D.to_dict()
    rep.put("status", d["status"])
    rep.exact("iterations", d["iterations"])
    rep.put("cell_counts", d["cell_counts"])
    rep.put("ledger", d["ledger"])
    s = d["sample_report"]
    rep.estimate("failure_rate", s["rate"], (s["wilson"][1] - s["wilson"][0]) / (2 * 1.96))
    rep.put("sample_report", s)
    if args.partition_out:
        with open(args.partition_out, "w") as fh:
            fh.write(D.system.to_text())
        rep.put("partition_file", args.partition_out)


# -- parser --------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--budget", type=int, default=None, help="enumeration budget (default from HYPERQR_BUDGET)")
    common.add_argument("--format", choices=("json", "csv", "text"), default="json")

    p = argparse.ArgumentParser(prog="hyperqr", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("pg", parents=[common], help="projective geometries")
    sp.add_argument("action", choices=("gen", "diffset", "baer", "wedge"))
    sp.add_argument("--m", type=int, default=2)
    sp.add_argument("--q", type=int, default=None)
    sp.add_argument("--modulus", type=int, default=21)
    sp.add_argument("--base", default="3,6,7,12,14")
    sp.add_argument("--choice", default=None, help="x,y,z,w for a single wedge")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_pg)

    sp = sub.add_parser("blocking", parents=[common], help="blocking sets of PG_2(q)")
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--list", action="store_true")
    sp.set_defaults(func=cmd_blocking)

    sp = sub.add_parser("construct", parents=[common], help="build an extremal construction")
    sp.add_argument("--name", choices=sorted(CONSTRUCTIONS) + ["roedl"], required=True)
    sp.add_argument("--n", type=int, required=True, help="vertices (per part for roedl)")
    sp.add_argument("--q", type=int, default=3)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_construct)

    sp = sub.add_parser("certify", parents=[common], help="certify a construction's claims")
    sp.add_argument("--construction", choices=sorted(CONSTRUCTIONS), required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--q", type=int, default=3)
    sp.set_defaults(func=cmd_certify)

    sp = sub.add_parser("search", parents=[common], help="containment and local search")
    sp.add_argument("action", choices=("contains", "hillclimb"))
    sp.add_argument("--pattern", required=True, help="file, 'fano' or 'pg<m><q>'")
    sp.add_argument("--host", default=None)
    sp.add_argument("--n", type=int, default=8)
    sp.add_argument("--s", type=int, default=2)
    sp.add_argument("--restarts", type=int, default=2)
    sp.add_argument("--steps", type=int, default=1500)
    sp.set_defaults(func=cmd_search)

    sp = sub.add_parser("qr", parents=[common], help="octahedral norms and quasirandomness")
    sp.add_argument("action", choices=("oct", "check"))
    sp.add_argument("--input", required=True)
    sp.add_argument("--index", required=True, help="1-based parts, e.g. 1,2")
    sp.add_argument("--eta", type=float, default=0.1)
    sp.add_argument("--mode", choices=("exact", "exact-float", "montecarlo"), default="exact")
    sp.add_argument("--samples", type=int, default=100_000)
    sp.set_defaults(func=cmd_qr)

    sp = sub.add_parser("count", parents=[common], help="homomorphism densities")
    sp.add_argument("--pattern", required=True)
    sp.add_argument("--host", required=True)
    sp.add_argument("--mode", choices=("exact", "montecarlo"), default="exact")
    sp.add_argument("--samples", type=int, default=100_000)
    sp.add_argument("--embeddings", action="store_true")
    sp.set_defaults(func=cmd_count)

    sp = sub.add_parser("homcomplex", parents=[common], help="density report for J -> G")
    sp.add_argument("--pattern", required=True, help="partite hypergraph file or complex JSON")
    sp.add_argument("--host", default=None)
    sp.add_argument("--layered", type=int, default=None, help="use a layered random host with this part size")
    sp.add_argument("--density", type=float, default=0.5)
    sp.add_argument("--mode", choices=("exact", "montecarlo"), default="exact")
    sp.add_argument("--samples", type=int, default=10_000)
    sp.set_defaults(func=cmd_homcomplex)

    sp = sub.add_parser("regularity", parents=[common], help="iterative decomposition")
    sp.add_argument("action", choices=("decompose",))
    sp.add_argument("--input", default=None)
    sp.add_argument("--block", type=int, default=None, help="use the half-half block bipartite graph on n+n vertices")
    sp.add_argument("--density", type=float, default=1 / 16, help="d_level for the cell caps")
    sp.add_argument("--eta", type=float, default=0.01)
    sp.add_argument("--epsilon", type=float, default=0.1)
    sp.add_argument("--anchors", type=int, default=200)
    sp.add_argument("--max-iterations", type=int, default=10)
    sp.add_argument("--samples", type=int, default=20_000)
    sp.add_argument("--partition-out", default=None)
    sp.set_defaults(func=cmd_regularity)
    return p


def _emit_csv(rows, out):
    if not rows:
        return
    buf = io.StringIO()
    keys = sorted({k for r in rows for k in r})
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    out.write(buf.getvalue())


def run(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    if args.budget is not None and args.budget <= 0:
        print("error: --budget must be positive", file=sys.stderr)
        return 1
    budget = args.budget if args.budget is not None else default_budget()
    args.budget = budget
    config = {"seed": args.seed, "threads": args.threads, "budget": budget, "format": args.format}
    rep = Report(argv, config)
    code, status = 0, "ok"
    rows = None
    try:
        rows = args.func(args, rep)
    except _BudgetVerdict:
        code, status = 2, "budget_exhausted"
    except BudgetExceeded as exc:
        code, status = 2, "budget_exhausted"
        rep.put("error", str(exc))
    except (HyperQRError, ValueError, OSError) as exc:
        code, status = 1, "error"
        rep.put("error", f"{type(exc).__name__}: {exc}")
    if rows is not None and args.format == "csv" and code == 0:
        _emit_csv(rows, out)
        return code
    if rows is not None:
        rep.put("table", rows)
    out.write(json.dumps(rep.to_dict(status), sort_keys=True) + "\n")
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
