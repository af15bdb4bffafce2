"""Command-line entry point: ``qgrf {frobenius,diffuse,cluster,regress,theory-check}``.

Exit status is 0 on success, 2 for bad flags or configuration, 1 for failures
while running.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from qgrf.bench import experiments as ex
from qgrf.bench.mesh import Mesh, load_obj
from qgrf.coupling import CouplingScheme
from qgrf.features import WalkConfig
from qgrf.theory import TheoryParams, correlation_matrices, records_to_json, theory_records

log = logging.getLogger("qgrf")

DEFAULT_FORMAT = {"frobenius": "csv", "diffuse": "json", "cluster": "json", "regress": "json",
                  "theory-check": "json"}


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--graph", help="edge-list file (u v [w] per line, 0-indexed)")
    src.add_argument("--generator", help="er:<n>:<p> | tree:<depth> | ladder:<rungs> | torus:<major>:<minor> | ...")
    common.add_argument("--sigma", type=float, default=0.1)
    common.add_argument("--p", type=float, default=0.5, help="termination probability")
    common.add_argument("--walks", type=_int_list, default=None, help="walks per node; comma list for frobenius")
    common.add_argument("--scheme", default="iid,antithetic", help="comma list of iid, antithetic, ensemble")
    common.add_argument("--delta", type=float, default=None, help="TRV offset for the ensemble scheme")
    common.add_argument("--group-size", type=int, default=None)
    common.add_argument("--repeats", type=int, default=None)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--workers", type=int, default=None)
    common.add_argument("--output", help="write here instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="qgrf", description="Graph random features with antithetic termination.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    fro = sub.add_parser("frobenius", parents=[common], help="relative Frobenius error of K^(2) estimates")
    fro.add_argument("--two-ensemble", action="store_true", help="unbiased diagonal from a second ensemble")
    fro.add_argument("--strategy", choices=("uniform", "weighted"), default="uniform")
    dif = sub.add_parser("diffuse", parents=[common], help="heat diffusion with low-rank K^(2)")
    dif.add_argument("--t", type=float, default=1.0)
    dif.add_argument("--steps", type=int, default=1000)
    dif.add_argument("--source", type=int, default=0)
    clu = sub.add_parser("cluster", parents=[common], help="kernel k-means clustering error")
    clu.add_argument("--clusters", type=int, default=2)
    reg = sub.add_parser("regress", parents=[common], help="mesh normal kernel regression")
    reg.add_argument("--mesh", help="OBJ file (alternative to --generator torus:<a>:<b>)")
    reg.add_argument("--test-fraction", type=float, default=0.05)
    th = sub.add_parser("theory-check", parents=[common], help="definiteness of the C/D/E/F/J matrices")
    th.add_argument("--w", type=float, default=0.1, help="uniform edge weight")
    th.add_argument("--lambdas", type=_float_list, default=None, help="adjacency eigenvalues (comma list)")
    th.add_argument("--n-lambdas", type=int, default=10)
    return parser


def _schemes(args) -> list[CouplingScheme]:
    names = [s for s in args.scheme.split(",") if s]
    if not names:
        raise ConfigError("no scheme given")
    if args.delta is not None and "ensemble" not in names:
        raise ConfigError("--delta only applies to --scheme ensemble")
    out = []
    for name in names:
        try:
            scheme = CouplingScheme.from_name(name, args.delta if name == "ensemble" else None, args.group_size)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        out.append(scheme)
    return out


def _one_walk_count(args, default):
    walks = args.walks or [default]
    if len(walks) != 1:
        raise ConfigError("this command takes a single --walks value")
    return walks[0]


def _validate(schemes, walks, p):
    for s in schemes:
        for m in walks:
            WalkConfig(m=m, p=p, scheme=s)


def _graph(args):
    return ex.load_graph(args.graph, args.generator, args.seed)


def _prepare(args):
    """Validate everything and return a zero-argument job producing the output text."""
    cmd = args.command
    fmt = args.format or DEFAULT_FORMAT[cmd]
    if args.repeats is not None and args.repeats < 1:
        raise ConfigError("--repeats must be >= 1")
    if cmd == "theory-check":
        if fmt != "json":
            raise ConfigError("theory-check emits JSON only")
        lambdas = args.lambdas
        if lambdas is None:
            lambdas = np.random.default_rng(args.seed).uniform(-1.0, 1.0, args.n_lambdas)
        params = TheoryParams(args.p, args.w, lambdas, args.delta)

        def job():
            recs = theory_records(params)
            mats = correlation_matrices(params)
            summary = {"D_is_zero": bool(np.all(mats.D == 0)),
                       "E_nsd": next(r.verdict for r in recs if r.matrix == "E") == "nsd"}
            return json.dumps({"params": {"p": args.p, "w": args.w, "delta": args.delta,
                                          "lambdas": [float(x) for x in lambdas]},
                               "summary": summary,
                               "records": json.loads(records_to_json(recs))}, indent=2, sort_keys=True) + "\n"
        return job

    if not 0.0 < args.sigma < 1.0:
        raise ConfigError("--sigma must lie in (0, 1)")
    schemes = _schemes(args)
    if cmd == "frobenius":
        g = _graph(args)
        walks = args.walks or [2, 4, 8, 16]
        _validate(schemes, walks, args.p)
        return lambda: ex.run_frobenius(g, args.sigma, args.p, walks, schemes, args.repeats or 100, args.seed,
                                        args.two_ensemble, args.strategy, workers=args.workers).render(fmt)
    if cmd == "diffuse":
        g = _graph(args)
        m = _one_walk_count(args, 10)
        _validate(schemes, [m], args.p)
        if args.steps < 2 or args.steps % 2:
            raise ConfigError("--steps must be a positive even number")
        return lambda: ex.simulate_diffusion(g, args.t, args.steps, m, args.p, schemes, args.repeats or 100,
                                             args.seed, args.source, workers=args.workers).render(fmt)
    if cmd == "cluster":
        g = _graph(args)
        m = _one_walk_count(args, 16)
        _validate(schemes, [m], args.p)
        return lambda: ex.run_clustering(g, args.clusters, args.sigma, args.p, m, schemes, args.repeats or 10,
                                         args.seed, workers=args.workers).render(fmt)
    if cmd == "regress":
        if args.graph:
            raise ConfigError("regress takes --mesh or a torus generator, not --graph")
        if (args.mesh is None) == (args.generator is None):
            raise ConfigError("give exactly one of --mesh or --generator torus:<major>:<minor>")
        mesh = load_obj(args.mesh) if args.mesh else ex.parse_generator(args.generator, args.seed)
        if not isinstance(mesh, Mesh):
            raise ConfigError("regress needs a mesh generator (torus:<major>:<minor>)")
        m = _one_walk_count(args, 6)
        _validate(schemes, [m], args.p)
        return lambda: ex.run_regression(mesh, args.test_fraction, args.sigma, m, args.p, schemes,
                                         args.repeats or 50, args.seed, workers=args.workers).render(fmt)
    raise ConfigError(f"unknown command {cmd}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        job = _prepare(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"qgrf: error: {exc}", file=sys.stderr)
        return 2
    try:
        text = job()
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        log.debug("run failed", exc_info=True)
        print(f"qgrf: runtime error: {exc}", file=sys.stderr)
        return 1
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


cli_main = main

if __name__ == "__main__":
    sys.exit(main())
