#!/usr/bin/env python3
"""Scan the sixth-condition spectral residual over domain lengths.

For each L, the linear operator u' + u''' - u''''' is discretized with the
five homogeneous boundary conditions and the residual of the overdetermining
sixth condition u''(0) = 0 is minimized over the lowest eigenpairs.  Near-zero
dips flag critical-length candidates where a nontrivial solution of the full
overdetermined eigenproblem may exist.

Usage: spectral_scan.py [N] (default 200)
"""

import sys

import numpy as np

from kawalab.diagnostics import spectral_lemma_test


def main():
    N = int(sys.argv[1]) if len(sys.argv) > 1 else 200
    Ls = np.arange(0.5, 10.01, 0.1)
    curve = spectral_lemma_test([float(L) for L in Ls], N=N, n_pairs=50)
    residuals = np.array([curve[float(L)] for L in Ls])
    floor = np.median(residuals) * 0.05
    print("L,min_residual,candidate")
    for L, r in zip(Ls, residuals):
        print(f"{L:.1f},{r:.6e},{'*' if r < floor else ''}")
    cands = [f"{L:.1f}" for L, r in zip(Ls, residuals) if r < floor]
    print(f"# critical-length candidates (residual < 5% of median): "
          f"{', '.join(cands) if cands else 'none'}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
