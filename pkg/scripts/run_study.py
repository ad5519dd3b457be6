"""Simulation study for the normal-observation scenarios (sigma = 4.5).

Fits are appended to ``<out>/study_progress.csv`` as they finish, so the
script can be stopped and restarted. Prints the aggregated table at the end.

    python scripts/run_study.py --out results/study --replicates 20
"""
import argparse
import logging

from spmrf.simulate import (StudyConfig, TrendKind, TrendScenario, study_sampler_config,
                            run_study)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/study")
    ap.add_argument("--replicates", type=int, default=20)
    ap.add_argument("--trends", default="constant,piecewise,varying,smooth")
    ap.add_argument("--sigma", type=float, default=4.5)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    logging.basicConfig(level=logging.WARNING)

    scen = tuple(TrendScenario(TrendKind(k), sigma=args.sigma) for k in args.trends.split(","))
    cfg = StudyConfig(scenarios=scen, replicates=args.replicates, seed=args.seed,
                      sampler=study_sampler_config(), workers=args.workers)

    def progress(i, total, row, elapsed):
        print(f"[{i}/{total}] {row['scenario']} {row['prior']} rep {row['replicate']}: "
              f"MAD {row['mad']:.3f} MCIW {row['mciw']:.2f} ({elapsed:.0f}s)", flush=True)

    report = run_study(cfg, args.out, progress)
    print(f"{'scenario':<22}{'prior':<11}{'reps':>5}{'MAD':>9}{'MCIW':>9}{'MASV':>9}{'TMASV':>9}{'ESSps':>9}")
    for a in report.aggregate():
        print(f"{a['scenario']:<22}{a['prior']:<11}{a['replicates']:>5}{a['mad']:>9.3f}"
              f"{a['mciw']:>9.2f}{a['masv']:>9.3f}{a['tmasv']:>9.3f}{a['mean_essps']:>9.1f}")


if __name__ == "__main__":
    main()
