"""Exit side of the collapsed snapping-out path at 0, conditioned on the side
it arrived from, across kappa and refinement (CSV to stdout).

    python scripts/snapping_out_witness.py --kappa 0.5 1 2 4 --n 11 21 41
"""

import argparse
import sys
import warnings
from fractions import Fraction

from quasidiff.cli_io import csv_text
from quasidiff.form_assembly import TruncationWarning, atomize
from quasidiff.gallery import snapping_out
from quasidiff.simulate import strong_markov_witness


def study(kappas, sizes, horizon, seed):
    rows = []
    for kappa in kappas:
        case = snapping_out(Fraction(kappa))
        reg = case.regularize()
        for n in sizes:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", TruncationWarning)
                chain = atomize(reg, n, case.window)
            w = strong_markov_witness(chain, reg, 0, horizon=horizon, seed=seed)
            rows.append((kappa, n, w.exit_left_given_left, w.exit_left_given_right, w.tv, w.exact_tv,
                         w.entries[0], w.entries[1]))
    return rows


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--kappa", nargs="+", default=["1/2", "1", "2", "4"])
    p.add_argument("--n", type=int, nargs="+", default=[11, 21, 41])
    p.add_argument("--horizon", type=float, default=2000.0)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    header = ("kappa", "n_per_block", "exit_left_from_left", "exit_left_from_right", "tv", "exact_tv",
              "entries_left", "entries_right")
    sys.stdout.write(csv_text(header, study(args.kappa, args.n, args.horizon, args.seed)))


if __name__ == "__main__":
    main()
