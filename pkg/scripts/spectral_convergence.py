"""Refinement study: lowest Neumann eigenvalues of the atomized unit-interval
chain against (k pi)^2 / 2, written as CSV to stdout.

    python scripts/spectral_convergence.py --sizes 25 50 100 200 400 --k 4
"""

import argparse
import math
import sys

from quasidiff.cli_io import csv_text
from quasidiff.form_assembly import atomize, spectrum
from quasidiff.gallery import regular_diffusion


def study(sizes, k):
    reg = regular_diffusion().regularize()
    rows = []
    for n in sizes:
        lam = spectrum(atomize(reg, n), k + 1)
        for j in range(1, k + 1):
            exact = (j * math.pi) ** 2 / 2
            rows.append((n, j, float(lam[j]), exact, abs(lam[j] - exact) / exact))
    return rows


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[25, 50, 100, 200, 400])
    p.add_argument("--k", type=int, default=3)
    args = p.parse_args(argv)
    sys.stdout.write(csv_text(("n", "k", "eigenvalue", "limit", "relative_error"), study(args.sizes, args.k)))


if __name__ == "__main__":
    main()
