"""Calibrate the Wiener phase-drift rate for a given crossing index and check it by simulation."""

import argparse
import time

import numpy as np

from xepr.experiment import calibrate_drift_rate, expected_curve, nominal_config, run_experiment
from xepr.nullifiers import nullifier_variances


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--target-k", type=float, default=600.0)
    ap.add_argument("--frames", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    bins = int(2 * args.target_k)
    rate = calibrate_drift_rate(nominal_config(frames=1, bins_per_frame=2), args.target_k)
    cfg = nominal_config(frames=args.frames, bins_per_frame=bins, phase_drift_rate=rate, seed=args.seed)
    print(f"rate {rate:.6g} rad/sqrt(bin), {args.frames} x {bins} bins")
    t0 = time.perf_counter()
    rep = nullifier_variances(run_experiment(cfg, args.threads)[0])
    v = 0.5 * (rep.var_x + rep.var_p)
    expect = expected_curve(cfg, rep.k)
    above = np.flatnonzero(v >= 0.5)
    print(f"simulated in {time.perf_counter() - t0:.1f} s")
    print(f"first k with mean variance >= 1/2: {rep.k[above[0]] if above.size else 'none'}")
    print(f"strict certificate K = {rep.certificate().strict_K}")
    for k in np.linspace(1, bins - 2, 9).astype(int):
        print(f"  k={k:6d}  sim {v[k - 1]:.4f}  expected {expect[k - 1]:.4f}")


if __name__ == "__main__":
    main()
