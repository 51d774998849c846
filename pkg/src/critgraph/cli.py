"""Command-line interface: sampling, enumeration, simulation, comparison.

Replica farming is deterministic by construction: replica i always runs on
the stream derived from (seed, i), results are gathered in replica order, so
output bytes do not depend on the thread count.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats as sstats

from ._rng import ensure_rng, replica_rng
from .degrees import ChildSequence, criticality, ecd_from_degrees
from .exact import enumerate_connected, enumerate_tilted, verify_counting_identity, wright_ratio
from .graphs import sample_cm, sample_connected, sample_simple
from .limits import build_MD, build_Mk, build_Mvac, sample_excursion
from .mmspace import FiniteMMSpace, scale, sorted_distance_sample, two_sample_distance_law
from .plane_tree import count_trees, permutation_concentration_stat, sample_tree
from .surgery import admissible_f
from .vacant import annealed_pipeline, vacant_critical

__all__ = ["main", "RunConfig"]


@dataclass
class RunConfig:
    command: str
    seed: int
    reps: int
    threads: int
    fmt: str
    out: str | None
    options: dict


# ----------------------------------------------------------------- helpers

def _read_degrees(path: str) -> np.ndarray:
    """Newline-separated integers or a JSON array of integers."""
    with open(path) as fh:
        text = fh.read().strip()
    if text.startswith("["):
        return np.asarray(json.loads(text), dtype=np.int64)
    return np.asarray([int(x) for x in text.split()], dtype=np.int64)


def _degrees_from_args(args) -> np.ndarray:
    given = [x is not None for x in (args.degrees, args.regular, args.two_atom)]
    if sum(given) != 1:
        raise SystemExit("give exactly one of --degrees, --regular, --two-atom")
    if args.degrees is not None:
        return _read_degrees(args.degrees)
    if args.regular is not None:
        n, r = (int(x) for x in args.regular.split(","))
        if n * r % 2:
            raise SystemExit("--regular needs n*r even")
        return np.full(n, r, dtype=np.int64)
    n = int(args.two_atom)
    if n % 4:
        raise SystemExit("--two-atom needs n divisible by 4")
    return np.concatenate([np.ones(3 * n // 4, dtype=np.int64),
                           np.full(n // 4, 3, dtype=np.int64)])


def _parse_ecd(spec: str) -> ChildSequence:
    return ChildSequence(np.asarray([int(x) for x in spec.split(",")],
                                    dtype=np.int64))


def _emit(payload, fmt: str, out: str | None, csv_rows=None):
    """Write JSON (sorted keys) or CSV; identical bytes for identical input."""
    if fmt == "json":
        text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    else:
        if csv_rows is None:
            raise SystemExit("this command has no CSV form; use --format json")
        header, rows = csv_rows
        lines = [",".join(header)]
        lines += [",".join(str(x) for x in row) for row in rows]
        text = "\n".join(lines) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _farm(worker, n_reps: int, seed: int, threads: int, payload):
    """Run worker(payload, seed, i) for i in range(n_reps), in replica order."""
    args = [(payload, seed, i) for i in range(n_reps)]
    if threads <= 1:
        return [worker(a) for a in args]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, args, chunksize=max(1, n_reps // (4 * threads))))


def _chi_square_uniform(counts: dict, n_cells: int, total: int):
    expected = total / n_cells
    stat = sum((c - expected) ** 2 / expected for c in counts.values())
    stat += (n_cells - len(counts)) * expected
    p = float(sstats.chi2.sf(stat, df=n_cells - 1)) if n_cells > 1 else 1.0
    return stat, n_cells - 1, p


# ------------------------------------------------------------ worker funcs

def _w_sample_tree(arg):
    payload, seed, i = arg
    rng = replica_rng(seed, i)
    t = sample_tree(ChildSequence(np.asarray(payload["counts"])), rng)
    return ",".join(str(int(c)) for c in t.counts)


def _w_sample_connected(arg):
    payload, seed, i = arg
    rng = replica_rng(seed, i)
    g, info = sample_connected(np.asarray(payload["degrees"]), payload["k"], rng,
                               method=payload["method"])
    return [[int(u) + 1, int(v) + 1] for u, v in g.edges], info.attempts


def _w_sample_cm(arg):
    payload, seed, i = arg
    rng = replica_rng(seed, i)
    g = sample_cm(np.asarray(payload["degrees"]), rng)
    return [[int(u) + 1, int(v) + 1] for u, v in g.edges]


def _w_sample_simple(arg):
    payload, seed, i = arg
    rng = replica_rng(seed, i)
    g, attempts = sample_simple(np.asarray(payload["degrees"]), rng)
    return [[int(u) + 1, int(v) + 1] for u, v in g.edges], attempts


def _w_vacant(arg):
    payload, seed, i = arg
    rng = replica_rng(seed, i)
    rep = annealed_pipeline(payload["r"], payload["a0"], payload["n"], rng,
                            model=payload["model"], u=payload["u"])
    return rep.summary()


def _w_limit_sim(arg):
    payload, seed, i = arg
    rng = replica_rng(seed, i)
    cons = payload["construction"]
    l = payload["l"]
    if cons == "mk":
        s = build_Mk(payload["k"], payload["grid"], rng, points=l)
        meta = {"area": s.params["area"]}
    elif cons == "md":
        spaces = build_MD(payload["moments"], payload["lam"], payload["grid"],
                          rng, num_components=1, points=l)
        s = spaces[0]
        meta = {"length": s.params["length"], "marks": s.params["marks"]}
    elif cons == "mvac":
        spaces = build_Mvac(payload["r"], payload["a0"], payload["grid"], rng,
                            num_components=1, points=l)
        s = spaces[0]
        meta = {"length": s.params["length"], "marks": s.params["marks"]}
    else:
        raise ValueError(cons)
    dists = sorted_distance_sample(s.space, l, rng)
    return [float(x) for x in dists], meta


# ----------------------------------------------------------------- commands

def _cmd_sample_tree(args):
    cs = _parse_ecd(args.ecd)
    words = _farm(_w_sample_tree, args.reps, args.seed, args.threads,
                  {"counts": [int(x) for x in cs.counts]})
    freq: dict[str, int] = {}
    for w in words:
        freq[w] = freq.get(w, 0) + 1
    n_trees = count_trees(cs)
    result = {
        "command": "sample-tree",
        "seed": args.seed,
        "reps": args.reps,
        "ecd": [int(x) for x in cs.ecd],
        "n_trees": int(n_trees) if n_trees < 10**15 else str(n_trees),
        "frequencies": dict(sorted(freq.items())),
    }
    if n_trees <= 10**6:
        stat, dof, p = _chi_square_uniform(freq, int(n_trees), args.reps)
        result["chi_square"] = {"stat": stat, "dof": dof, "p": p}
    rows = sorted(freq.items())
    _emit(result, args.format, args.out, (["tree", "count"], rows))
    print(f"sample-tree: {args.reps} draws, {len(freq)} distinct trees", file=sys.stderr)
    return 0


def _cmd_sample_connected(args):
    d = _degrees_from_args(args)
    out = _farm(_w_sample_connected, args.reps, args.seed, args.threads,
                {"degrees": [int(x) for x in d], "k": args.k,
                 "method": args.method})
    result = {
        "command": "sample-connected",
        "seed": args.seed,
        "reps": args.reps,
        "k": args.k,
        "degrees": [int(x) for x in d],
        "samples": [{"replica": i, "edges": e, "attempts": a}
                    for i, (e, a) in enumerate(out)],
    }
    rows = [(i, u, v) for i, (e, _) in enumerate(out) for u, v in e]
    _emit(result, args.format, args.out, (["replica", "u", "v"], rows))
    print(f"sample-connected: {args.reps} draws", file=sys.stderr)
    return 0


def _cmd_sample_cm(args):
    d = _degrees_from_args(args)
    out = _farm(_w_sample_cm, args.reps, args.seed, args.threads,
                {"degrees": [int(x) for x in d]})
    result = {
        "command": "sample-cm",
        "seed": args.seed,
        "reps": args.reps,
        "degrees": [int(x) for x in d],
        "degree_one_present": bool((d == 1).any()),
        "samples": [{"replica": i, "edges": e} for i, e in enumerate(out)],
    }
    rows = [(i, u, v) for i, e in enumerate(out) for u, v in e]
    _emit(result, args.format, args.out, (["replica", "u", "v"], rows))
    print(f"sample-cm: {args.reps} draws", file=sys.stderr)
    return 0


def _cmd_sample_simple(args):
    d = _degrees_from_args(args)
    out = _farm(_w_sample_simple, args.reps, args.seed, args.threads,
                {"degrees": [int(x) for x in d]})
    attempts = [a for _, a in out]
    result = {
        "command": "sample-simple",
        "seed": args.seed,
        "reps": args.reps,
        "degrees": [int(x) for x in d],
        "degree_one_present": bool((d == 1).any()),
        "acceptance_rate": len(attempts) / sum(attempts),
        "samples": [{"replica": i, "edges": e, "attempts": a}
                    for i, (e, a) in enumerate(out)],
    }
    rows = [(i, u, v) for i, (e, _) in enumerate(out) for u, v in e]
    _emit(result, args.format, args.out, (["replica", "u", "v"], rows))
    print(f"sample-simple: {args.reps} draws, acceptance "
          f"{result['acceptance_rate']:.3f}", file=sys.stderr)
    return 0


def _cmd_vacant_set(args):
    rows_out = _farm(_w_vacant, args.reps, args.seed, args.threads,
                     {"r": args.r, "a0": args.a0, "n": args.n,
                      "model": args.model, "u": args.u})
    vc, u_n = vacant_critical(args.r, args.a0, args.n)
    result = {
        "command": "vacant-set",
        "seed": args.seed,
        "reps": args.reps,
        "r": args.r,
        "a0": args.a0,
        "n": args.n,
        "model": args.model,
        "u_star": vc.u_star,
        "u_n": u_n,
        "u_override": args.u,
        "lambda_vac": vc.lambda_vac,
        "p_vac": vc.p_vac,
        "d_vac": [float(x) for x in vc.d_vac],
        "rows": [{"replica": i, **row} for i, row in enumerate(rows_out)],
    }
    header = ["replica", "c1", "c2", "surplus1"] + \
        [f"pmf{j}" for j in range(args.r + 1)]
    rows = [(i, row["c1"], row["c2"], row["surplus1"], *row["pmf"])
            for i, row in enumerate(rows_out)]
    _emit(result, args.format, args.out, (header, rows))
    print(f"vacant-set: {args.reps} replicas at u="
          f"{args.u if args.u is not None else u_n:.4f}", file=sys.stderr)
    return 0


def _cmd_enumerate(args):
    d = _degrees_from_args(args)
    rep = verify_counting_identity(d, args.k)
    wr = wright_ratio(d, args.k)
    result = {
        "command": "enumerate",
        "degrees": [int(x) for x in d],
        "k": args.k,
        "count_connected": rep.count_connected,
        "count_trees": int(rep.count_trees),
        "count_tilted": rep.count_tilted,
        "identity_lhs": rep.lhs,
        "identity_rhs": rep.rhs,
        "identity_holds": rep.holds,
        "wright_ratio_exact": f"{wr.rational} * {wr.m}^({wr.k}/2)",
        "wright_ratio_float": wr.value,
    }
    _emit(result, args.format, args.out,
          ([k for k in result], [[result[k] for k in result]]))
    print(f"enumerate: identity_holds={rep.holds}", file=sys.stderr)
    return 0


def _cmd_wright(args):
    d = _degrees_from_args(args)
    wr = wright_ratio(d, args.k)
    result = {
        "command": "wright",
        "degrees": [int(x) for x in d],
        "k": wr.k,
        "count_connected": wr.count_connected,
        "ratio_exact": f"{wr.rational} * {wr.m}^({wr.k}/2)",
        "ratio_float": wr.value,
    }
    _emit(result, args.format, args.out,
          ([k for k in result], [[result[k] for k in result]]))
    print(f"wright: ratio={wr.value:.6g}", file=sys.stderr)
    return 0


def _cmd_limit_sim(args):
    payload = {"construction": args.construction, "l": args.l,
               "grid": args.grid, "k": args.k, "lam": args.lam,
               "r": args.r, "a0": args.a0, "moments": None}
    if args.construction == "md":
        if args.moments is None:
            raise SystemExit("--construction md needs --moments m1,m2,m3")
        payload["moments"] = [float(x) for x in args.moments.split(",")]
    out = _farm(_w_limit_sim, args.samples, args.seed, args.threads, payload)
    result = {
        "command": "limit-sim",
        "seed": args.seed,
        "construction": args.construction,
        "grid": args.grid,
        "l": args.l,
        "samples": [{"replica": i, "sorted_distances": d, **meta}
                    for i, (d, meta) in enumerate(out)],
    }
    ncol = args.l * (args.l - 1) // 2
    header = ["replica"] + [f"d{j}" for j in range(ncol)]
    rows = [(i, *d) for i, (d, _) in enumerate(out)]
    _emit(result, args.format, args.out, (header, rows))
    print(f"limit-sim: {args.samples} samples", file=sys.stderr)
    return 0


def _binary_critical_ecd(m: int) -> ChildSequence:
    """Tree-tenable half-leaves half-binary children census (variance 1)."""
    if m % 2 == 0:
        m += 1
    s2 = (m - 1) // 2
    return ChildSequence.from_ecd([m - s2, 0, s2])


def _cmd_compare(args):
    rng = ensure_rng(args.seed)
    cs = _binary_critical_ecd(args.m)
    sig = math.sqrt(float((np.arange(cs.ecd.size) ** 2 * cs.ecd).sum()) / cs.m - 1.0)

    def tree_sampler(r):
        t = sample_tree(cs, r)
        pts = r.integers(0, t.m, size=args.l)
        d = np.zeros((args.l, args.l))
        for a in range(args.l):
            for b in range(a + 1, args.l):
                d[a, b] = d[b, a] = t.distance(int(pts[a]), int(pts[b]))
        return FiniteMMSpace(d * sig / math.sqrt(t.m), np.full(args.l, 1 / args.l))

    def crt_sampler(r):
        e = sample_excursion(args.grid, r)
        h = 2.0 * e.values
        pts = r.integers(0, h.size, size=args.l)
        d = np.zeros((args.l, args.l))
        for a in range(args.l):
            for b in range(a + 1, args.l):
                lo, hi = min(pts[a], pts[b]), max(pts[a], pts[b])
                d[a, b] = d[b, a] = h[pts[a]] + h[pts[b]] - 2 * h[lo:hi + 1].min()
        return FiniteMMSpace(d, np.full(args.l, 1 / args.l))

    def scaled_tree_sampler(r):
        return scale(tree_sampler(r), 2.0)

    presets = {
        "self": (tree_sampler, tree_sampler, False),
        "tree-vs-crt": (tree_sampler, crt_sampler, False),
        "tree-vs-scaled": (tree_sampler, scaled_tree_sampler, True),
    }
    if args.preset not in presets:
        raise SystemExit(f"unknown preset {args.preset!r}")
    a, b, expect_reject = presets[args.preset]
    res = two_sample_distance_law(a, b, args.l, args.reps, rng,
                                  threshold=args.p_threshold)
    result = {
        "command": "compare",
        "preset": args.preset,
        "seed": args.seed,
        "m": args.m,
        "grid": args.grid,
        "expected_rejection": expect_reject,
        **res.summary(),
    }
    header = ["entry", "ks_stat", "p_value"]
    rows = [(j, float(res.ks_stat[j]), float(res.p_value[j]))
            for j in range(res.ks_stat.size)]
    _emit(result, args.format, args.out, (header, rows))
    print(f"compare[{args.preset}]: min_p={res.min_p:.4g} "
          f"rejected={res.rejected}", file=sys.stderr)
    return 0


def _cmd_concentration(args):
    rng = ensure_rng(args.seed)
    m = args.m
    if args.p_spec == "uniform":
        p = np.full(m, 1.0 / m)
    elif args.p_spec == "geometric":
        p = 0.5 ** np.arange(1, m + 1)
        p /= p.sum()
    elif args.p_spec == "point":
        p = np.zeros(m)
        p[0] = 1.0
    else:
        raise SystemExit(f"unknown --p-spec {args.p_spec!r}")
    qs = (0.5, 0.9, 0.95, 0.99)
    vals = permutation_concentration_stat(p, rng, reps=args.reps, qs=qs)
    result = {
        "command": "concentration",
        "seed": args.seed,
        "p_spec": args.p_spec,
        "m": m,
        "reps": args.reps,
        "quantiles": {str(q): float(v) for q, v in zip(qs, vals)},
    }
    rows = [(q, float(v)) for q, v in zip(qs, vals)]
    _emit(result, args.format, args.out, (["quantile", "value"], rows))
    print("concentration: q99="
          f"{result['quantiles']['0.99']:.3f}", file=sys.stderr)
    return 0


# -------------------------------------------------------------------- main

def _add_common(p, reps_default=1):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reps", type=int, default=reps_default)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--out", default=None)


def _add_degree_source(p):
    p.add_argument("--degrees", help="path: newline ints or a JSON array")
    p.add_argument("--regular", help="'n,r' for the r-regular sequence")
    p.add_argument("--two-atom", dest="two_atom",
                   help="n for the critical 3n/4 degree-1, n/4 degree-3 mix")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="critgraph")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample-tree", help="uniform plane trees for a children census")
    _add_common(p, reps_default=1000)
    p.add_argument("--ecd", required=True,
                   help="comma-separated children counts, e.g. '0,0,0,2,2'")
    p.set_defaults(func=_cmd_sample_tree)

    p = sub.add_parser("sample-connected", help="uniform connected simple graphs")
    _add_common(p)
    _add_degree_source(p)
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--method", choices=["rejection", "pool"], default="rejection")
    p.set_defaults(func=_cmd_sample_connected)

    p = sub.add_parser("sample-cm", help="configuration-model multigraphs")
    _add_common(p)
    _add_degree_source(p)
    p.set_defaults(func=_cmd_sample_cm)

    p = sub.add_parser("sample-simple", help="uniform simple graphs by rejection")
    _add_common(p)
    _add_degree_source(p)
    p.set_defaults(func=_cmd_sample_simple)

    p = sub.add_parser("vacant-set", help="annealed vacant-set pipeline on r-regular graphs")
    _add_common(p, reps_default=50)
    p.add_argument("--r", type=int, default=3)
    p.add_argument("--a0", type=float, default=0.0)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--u", type=float, default=None,
                   help="override the critical-window walk time")
    p.add_argument("--model", choices=["cm", "simple"], default="cm")
    p.set_defaults(func=_cmd_vacant_set)

    p = sub.add_parser("enumerate", help="exact counts and the counting identity")
    _add_common(p)
    _add_degree_source(p)
    p.add_argument("--k", type=int, default=0)
    p.set_defaults(func=_cmd_enumerate)

    p = sub.add_parser("wright", help="finite-size constant ratio")
    _add_common(p)
    _add_degree_source(p)
    p.add_argument("--k", type=int, default=0)
    p.set_defaults(func=_cmd_wright)

    p = sub.add_parser("limit-sim", help="discretized limit-space distance samples")
    _add_common(p)
    p.add_argument("--construction", choices=["mk", "md", "mvac"], required=True)
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--moments", default=None, help="'m1,m2,m3' for md")
    p.add_argument("--r", type=int, default=3)
    p.add_argument("--a0", type=float, default=0.0)
    p.add_argument("--grid", type=int, default=2000)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--l", type=int, default=4)
    p.set_defaults(func=_cmd_limit_sim)

    p = sub.add_parser("compare", help="two-sample distance-law comparison presets")
    _add_common(p, reps_default=200)
    p.add_argument("--preset", required=True,
                   choices=["self", "tree-vs-crt", "tree-vs-scaled"])
    p.add_argument("--m", type=int, default=2001)
    p.add_argument("--grid", type=int, default=2000)
    p.add_argument("--l", type=int, default=4)
    p.add_argument("--p-threshold", dest="p_threshold", type=float, default=0.001)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("concentration", help="permutation prefix-sum deviation quantiles")
    _add_common(p, reps_default=1000)
    p.add_argument("--p-spec", dest="p_spec", default="geometric",
                   choices=["geometric", "uniform", "point"])
    p.add_argument("--m", type=int, default=1000)
    p.set_defaults(func=_cmd_concentration)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    env_threads = os.environ.get("CRITGRAPH_THREADS")
    if env_threads is not None and hasattr(args, "threads"):
        args.threads = int(env_threads)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
