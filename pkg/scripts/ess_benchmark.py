"""Sampling efficiency (ESS per sampling CPU second) by prior on one
piecewise-constant data set (normal observations, order 1, n = 100).

Absolute numbers depend on the machine; the ordering is what matters.
"""
import argparse

import numpy as np

from spmrf.diagnostics import summarize
from spmrf.grid import Grid
from spmrf.model import ModelSpec
from spmrf.sampler import nuts_run
from spmrf.simulate import (STUDY_ZETA, TrendKind, TrendScenario, study_sampler_config,
                            replicate_rng, scenario_data)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--replicates", type=int, default=3)
    ap.add_argument("--backend", choices=["compiled", "python"], default="compiled")
    args = ap.parse_args()
    sc = TrendScenario(TrendKind.PIECEWISE)
    res = {}
    for rep in range(1, args.replicates + 1):
        y = scenario_data(sc, replicate_rng(1, sc, rep))
        for prior in ("normal", "laplace", "horseshoe"):
            spec = ModelSpec.from_data(y, Grid.regular_grid(sc.n), 1, prior, sc.obs_model(), STUDY_ZETA)
            post = nuts_run(spec, y, study_sampler_config(seed=rep, backend=args.backend))
            s = summarize(post)
            res.setdefault(prior, []).append((s.mean_essps, s.min_essps, s.sample_cpu))
            print(f"rep {rep} {prior:<10} mean ESSps {s.mean_essps:8.1f}  min ESSps {s.min_essps:8.1f}  "
                  f"sampling CPU {s.sample_cpu:6.1f}s", flush=True)
    for prior, v in res.items():
        v = np.array(v)
        print(f"{prior:<10} mean ESSps {v[:, 0].mean():8.1f}  min ESSps {v[:, 1].mean():8.1f}")


if __name__ == "__main__":
    main()
