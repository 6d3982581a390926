"""Command line front end: ``labeloracle <subcommand> ...``."""
from __future__ import annotations

import argparse
import logging
import sys
from fractions import Fraction

from .graph_core import INF, format_edge_list, format_labels, load_graph
from .harness import (DEFAULT_SUITE, BruteForceOracle, assign_labels, bench, generate_grid,
                      generate_random_planar, verify, verify_vertex_pairs)
from .oracle import QueryStats, build_oracle
from .serialize import deserialize_oracle, serialize_oracle


def rational(text: str) -> Fraction:
    try:
        a, b = text.split("/") if "/" in text else (text, "1")
        f = Fraction(int(a), int(b))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"expected a rational A/B, got {text!r}")
    if f <= 0:
        raise argparse.ArgumentTypeError("eps must be positive")
    return f


def _fmt(x: int) -> str:
    return "inf" if x >= INF else str(x)


def _read(path: str | None) -> str | None:
    if path is None:
        return None
    with open(path) as fh:
        return fh.read()


def _write_pair(g, prefix: str):
    with open(prefix + ".edges", "w") as fh:
        fh.write(format_edge_list(g))
    with open(prefix + ".labels", "w") as fh:
        fh.write(format_labels(g))
    print(f"wrote {prefix}.edges and {prefix}.labels (n={g.n}, m={g.m})")


def cmd_gen_grid(a):
    _write_pair(generate_grid(a.k, a.wmin, a.wmax, a.seed), a.out)


def cmd_gen_planar(a):
    _write_pair(generate_random_planar(a.n, a.seed, a.wmin, a.wmax), a.out)


def cmd_labels(a):
    g = load_graph(_read(a.graph))
    g = assign_labels(g, a.l, a.dist, a.seed)
    text = format_labels(g)
    if a.out:
        with open(a.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_build(a):
    g = load_graph(_read(a.graph), _read(a.labels))
    orc = build_oracle(g, a.eps, leaf_size=a.leaf_size)
    serialize_oracle(orc, a.out)
    st = orc.stats
    print(f"nodes {st.nodes} depth {st.depth} connections {st.total_connections} "
          f"build {st.seconds['total']:.2f}s -> {a.out}")


def cmd_query(a):
    orc = deserialize_oracle(a.oracle)
    st = QueryStats()
    print(_fmt(orc.query_label_name(a.u, a.label, st)))
    if a.stats:
        print(f"comparisons {st.comparisons} probes {st.probes}", file=sys.stderr)


def cmd_query_vv(a):
    orc = deserialize_oracle(a.oracle)
    print(_fmt(orc.query_vertex_vertex(a.u, a.w)))


def cmd_verify(a) -> int:
    g = load_graph(_read(a.graph), _read(a.labels))
    orc = build_oracle(g, a.eps)
    brute = BruteForceOracle(g)
    rep = verify(orc, brute, budget=a.budget, seed=a.seed)
    print(rep.summary())
    bad = len(rep.violations)
    if a.vertex_pairs:
        rv = verify_vertex_pairs(orc, brute)
        print(rv.summary())
        bad += len(rv.violations)
    return 1 if bad else 0


def cmd_bench(a):
    if a.suite:
        import tomli
        with open(a.suite, "rb") as fh:
            suite = tomli.load(fh)
    else:
        suite = DEFAULT_SUITE
    recs = bench(suite, a.out, log=lambda r: print(
        f"{r.instance} eps={r.eps} n={r.n} build={r.build_seconds:.2f}s conn={r.connections} "
        f"ok={r.stretch_ok}", flush=True))
    return 0 if all(r.stretch_ok for r in recs) else 1


def cmd_dump(a):
    sys.stdout.write(deserialize_oracle(a.oracle).tree.dump())


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="labeloracle",
                                description="approximate vertex-label distance oracle")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("gen-grid", help="k x k grid with random integer lengths")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--wmin", type=int, default=1)
    s.add_argument("--wmax", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True, help="output prefix for .edges/.labels")
    s.set_defaults(fn=cmd_gen_grid)

    s = sub.add_parser("gen-planar", help="random maximal planar graph")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--wmin", type=int, default=1)
    s.add_argument("--wmax", type=int, default=1000)
    s.add_argument("--out", required=True)
    s.set_defaults(fn=cmd_gen_planar)

    s = sub.add_parser("labels", help="assign l labels to a graph")
    s.add_argument("--graph", required=True)
    s.add_argument("--l", type=int, required=True)
    s.add_argument("--dist", choices=["uniform", "clustered"], default="uniform")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(fn=cmd_labels)

    s = sub.add_parser("build", help="build and serialize an oracle")
    s.add_argument("--graph", required=True)
    s.add_argument("--labels")
    s.add_argument("--eps", type=rational, required=True)
    s.add_argument("--leaf-size", type=int)
    s.add_argument("--out", required=True)
    s.set_defaults(fn=cmd_build)

    s = sub.add_parser("query", help="distance from a vertex to the nearest label")
    s.add_argument("--oracle", required=True)
    s.add_argument("--u", type=int, required=True)
    s.add_argument("--label", required=True)
    s.add_argument("--stats", action="store_true")
    s.set_defaults(fn=cmd_query)

    s = sub.add_parser("query-vv", help="distance between two vertices")
    s.add_argument("--oracle", required=True)
    s.add_argument("--u", type=int, required=True)
    s.add_argument("--w", type=int, required=True)
    s.set_defaults(fn=cmd_query_vv)

    s = sub.add_parser("verify", help="build and check against brute force")
    s.add_argument("--graph", required=True)
    s.add_argument("--labels")
    s.add_argument("--eps", type=rational, required=True)
    s.add_argument("--budget", type=int)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--vertex-pairs", action="store_true")
    s.set_defaults(fn=cmd_verify)

    s = sub.add_parser("bench", help="run a benchmark suite, write CSV")
    s.add_argument("--suite")
    s.add_argument("--out", required=True)
    s.set_defaults(fn=cmd_bench)

    s = sub.add_parser("dump", help="print the decomposition of a serialized oracle")
    s.add_argument("--oracle", required=True)
    s.set_defaults(fn=cmd_dump)
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    rc = args.fn(args)
    return int(rc or 0)


if __name__ == "__main__":
    sys.exit(main())
