#!/usr/bin/env python3
"""Sweep the domain length and the damping gain on the reference config.

Reproduces the two qualitative transitions: decay rates degrade as L grows
toward the critical length sqrt(3 b / a) pi, and the fitted rate changes sign
where the gain condition |alpha| + |beta| int(lam) < 1 fails.
"""

import json
import pathlib
import sys

from kawalab import cli

HERE = pathlib.Path(__file__).resolve().parent
CONFIG = HERE.parent / "configs" / "reference_linear.json"


def main():
    out = HERE.parent / "out"
    out.mkdir(exist_ok=True)
    for name, axis, values in (
            ("length", "model.L", "2,2.5,3,3.5,4,4.5,5"),
            ("alpha", "gains.alpha", "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")):
        dest = out / f"sweep_{name}"
        rc = cli.main(["sweep", "--config", str(CONFIG), "--out", str(dest),
                       "--axis", axis, "--values", values])
        if rc != 0:
            print(f"sweep {name} failed with exit code {rc}", file=sys.stderr)
            return rc
        print(f"sweep {name}: wrote {dest / 'sweep.csv'}")
        print((dest / "sweep.csv").read_text())
    return 0


if __name__ == "__main__":
    sys.exit(main())
