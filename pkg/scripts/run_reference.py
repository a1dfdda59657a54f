#!/usr/bin/env python3
"""Run the reference configuration (linear and nonlinear) and print a summary.

Outputs land in ./out/reference_{linear,nonlinear}/ as series.csv/report.json.
"""

import json
import math
import pathlib
import sys

from kawalab import cli

HERE = pathlib.Path(__file__).resolve().parent
CONFIG = HERE.parent / "configs" / "reference.json"


def main():
    doc = json.loads(CONFIG.read_text())
    for label, linear in (("nonlinear", False), ("linear", True)):
        doc["numerics"]["linear_only"] = linear
        cfg_path = HERE.parent / "out" / f"reference_{label}.json"
        cfg_path.parent.mkdir(exist_ok=True)
        cfg_path.write_text(json.dumps(doc, indent=2))
        out = HERE.parent / "out" / f"reference_{label}"
        rc = cli.main(["run", "--config", str(cfg_path), "--out", str(out)])
        if rc != 0:
            print(f"{label}: run failed with exit code {rc}", file=sys.stderr)
            return rc
        report = json.loads((out / "report.json").read_text())
        fit = report["decay_fit"]
        print(f"{label:10s}: rate {fit['rate']:.4f} (r2 {fit['r2']:.6f}), "
              f"mu_guaranteed {report['certificate']['mu_guaranteed']:.3e}, "
              f"E(T)/E(0) {report['E_final'] / report['h_norm0_sq']:.3e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
