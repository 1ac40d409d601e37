"""Excess noise of single-step teleported gates against resource squeezing."""

import numpy as np

from xepr.gaussian import CovarianceState
from xepr.mbqc import GateAngles, excess_noise

GATES = {
    "identity": GateAngles.identity(),
    "fourier": GateAngles.fourier(),
    "general": GateAngles(1.2, -0.4),
}


def main():
    inp = CovarianceState.vacuum(1)
    rs = np.arange(0.0, 3.01, 0.25)
    print("r     " + "".join(f"{name:>12}" for name in GATES))
    for r in rs:
        print(f"{r:4.2f}  " + "".join(f"{excess_noise(r, a, inp):12.5f}" for a in GATES.values()))
    for name, a in GATES.items():
        slope = np.polyfit(rs[4:], np.log([excess_noise(r, a, inp) for r in rs[4:]]), 1)[0]
        print(f"{name}: d log(noise) / dr = {slope:.4f}")


if __name__ == "__main__":
    main()
