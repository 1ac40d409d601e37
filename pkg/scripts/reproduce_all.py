"""Run every desk-scale reproduction recipe into one output directory."""

import argparse
import sys

from xepr.cli import main as xepr


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/reproduce")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    common = ["--out", args.out, "--seed", str(args.seed), "--threads", str(args.threads)]
    for fig in ("tableS3", "fig2", "fig3", "figS8"):
        print(f"== {fig}")
        code = xepr(["reproduce", fig, *common])
        if code:
            sys.exit(code)


if __name__ == "__main__":
    main()
