"""Print the run-of-ones table: exact frequency, golden-ratio approximation, relative error.

    python3 scripts/table1.py [--kmax 5] [--digit 1]
"""

import argparse

from cfdigits.freq import run_table


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kmax", type=int, default=5)
    ap.add_argument("--digit", type=int, default=1)
    args = ap.parse_args()
    print(f"{'k':>2}  {'exact':>10}  {'approx':>10}  {'rel err %':>9}")
    for k, exact, approx, rel in run_table(args.kmax, args.digit):
        print(f"{k:>2}  {exact:10.7f}  {approx:10.7f}  {rel:9.4f}")


if __name__ == "__main__":
    main()
