#!/usr/bin/env python3
"""Runtime scaling of the estimator: Gram build vs event count and Cholesky
factorization vs feature count."""

import argparse

from hawkes_rkhs.evaluation import bench_factorization, bench_scaling
from hawkes_rkhs.simulation import SCENARIOS, simulate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenario", default="mutually-exciting",
                    choices=sorted(SCENARIOS))
    ap.add_argument("--horizons", default="500,1000,2000,4000")
    ap.add_argument("--features", type=int, default=100)
    ap.add_argument("--fact-features", default="256,512,1024")
    ap.add_argument("--reps", type=int, default=2)
    ap.add_argument("--seed", type=int, default=5)
    args = ap.parse_args()

    spec = SCENARIOS[args.scenario]()
    horizons = [float(v) for v in args.horizons.split(",")]
    rows, slopes = bench_scaling(spec, horizons, args.features,
                                 reps=args.reps, seed=args.seed)
    print(f"{'T':>8} {'events':>8} {'gram_s':>9} {'solve_s':>9} {'total_s':>9}")
    for r in rows:
        print(f"{r['T']:>8.0f} {r['n_events']:>8d} {r['xi_build_s']:>9.3g} "
              f"{r['solve_s']:>9.3g} {r['total_s']:>9.3g}")
    print(f"gram build vs events: log-log slope {slopes['xi_build_vs_events']:.2f}")

    events = simulate(spec, horizons[0], args.seed).events
    m_values = [int(v) for v in args.fact_features.split(",")]
    rows, slopes = bench_factorization(events, m_values, reps=args.reps)
    for r in rows:
        print(f"M={r['M']:>5d} size={r['size']:>6d} factorize {r['factorize_s']:.4g}s")
    print(f"factorization vs M: log-log slope {slopes['factorize_vs_M']:.2f}")


if __name__ == "__main__":
    main()
