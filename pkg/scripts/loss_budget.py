"""Print the filtered squeezing and predicted nullifier levels over a range of DC squeezing."""

import argparse

import numpy as np

from xepr.spectral import db, loss_budget


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--levels", type=float, nargs="+", default=[-3.0, -4.5, -6.0, -7.5, -9.0, -12.0])
    args = ap.parse_args()
    print(f"{'DC dB':>7} {'pump x':>8} {'Sq dB':>8} {'ASq dB':>8} {'<X^2> dB':>9} {'<P^2> dB':>9}")
    for level in args.levels:
        b = loss_budget(level)
        print(f"{level:7.2f} {b.pump_x:8.4f} {db(b.sq):8.3f} {db(b.asq):8.3f} "
              f"{b.prediction.db_x:9.3f} {b.prediction.db_p:9.3f}")
    # DC level needed for the nullifiers to clear the strict -3 dB bound by 2 dB
    grid = np.linspace(-3, -15, 121)
    ok = [g for g in grid if max(loss_budget(g).prediction.db_x, loss_budget(g).prediction.db_p) < -5.0]
    if ok:
        print(f"both nullifiers below -5 dB from about {ok[0]:.1f} dB DC squeezing")


if __name__ == "__main__":
    main()
