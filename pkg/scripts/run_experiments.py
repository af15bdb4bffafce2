#!/usr/bin/env python3
"""Run the benchmark experiments at full size and write one report per experiment.

    python scripts/run_experiments.py --out results            # everything
    python scripts/run_experiments.py --only frobenius diffuse

Karate is taken from networkx when it is installed; other graphs come from the
built-in generators.  Reports are the same CSV/JSON the CLI emits.
"""
import argparse
import logging
import pathlib
import time

from qgrf.bench.experiments import (parse_generator, run_clustering, run_frobenius, run_regression,
                                    simulate_diffusion)
from qgrf.graph import Graph

log = logging.getLogger("run_experiments")

FROBENIUS_GRAPHS = ["tree:6", "ladder:50", "er:20:0.4", "er:100:0.04", "er:100:0.2"]
DIFFUSION_GRAPHS = ["tree:6", "er:20:0.4", "er:100:0.04"]


def _karate():
    try:
        import networkx as nx
    except ImportError:
        return None
    kg = nx.karate_club_graph()
    return Graph.from_edges(kg.number_of_nodes(), list(kg.edges()))


def frobenius(seed, workers):
    graphs = [(spec, parse_generator(spec, seed)) for spec in FROBENIUS_GRAPHS]
    if (k := _karate()) is not None:
        graphs.append(("karate", k))
    for name, g in graphs:
        rep = run_frobenius(g, repeats=100, seed=seed, workers=workers)
        yield f"frobenius_{name}.csv", rep.to_csv()


def diffuse(seed, workers):
    for spec in DIFFUSION_GRAPHS:
        rep = simulate_diffusion(parse_generator(spec, seed), repeats=200, seed=seed, workers=workers)
        yield f"diffuse_{spec}.json", rep.to_json()


def cluster(seed, workers):
    graphs = [("er:60:0.1", parse_generator("er:60:0.1", seed))]
    if (k := _karate()) is not None:
        graphs.append(("karate", k))
    for name, g in graphs:
        rep = run_clustering(g, repeats=20, seed=seed, workers=workers)
        yield f"cluster_{name}.json", rep.to_json()


def regress(seed, workers):
    rep = run_regression(parse_generator("torus:87:50"), repeats=50, seed=seed, workers=workers)
    yield "regress_torus.json", rep.to_json()


EXPERIMENTS = {"frobenius": frobenius, "diffuse": diffuse, "cluster": cluster, "regress": regress}


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="results")
    ap.add_argument("--only", nargs="+", choices=sorted(EXPERIMENTS), default=list(EXPERIMENTS))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in args.only:
        t0 = time.perf_counter()
        for fname, text in EXPERIMENTS[name](args.seed, args.workers):
            (out / fname.replace(":", "-")).write_text(text)
            log.info("wrote %s", fname)
        log.info("%s done in %.1fs", name, time.perf_counter() - t0)


if __name__ == "__main__":
    main()
