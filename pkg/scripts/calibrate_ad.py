"""Regenerate the frozen Monte-Carlo table for Anderson-Darling p-values.

Draws the limiting case-0 null law of A^2 (sum of weighted chi-square(1)
terms) and stores quantiles at a logit-spaced grid of survival levels
from 0.9999 down to 0.001.  Below 0.001 the asymptotic tail is used.

    python3 scripts/calibrate_ad.py [--replicates 4000000] [--seed 1952]
"""

import argparse
import json
from pathlib import Path

import numpy as np

from cfdigits.stats import simulate_ad_null

OUT = Path(__file__).resolve().parents[1] / "src" / "cfdigits" / "data" / "ad_case0_table.json"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--replicates", type=int, default=4_000_000)
    ap.add_argument("--seed", type=int, default=1952)
    ap.add_argument("--terms", type=int, default=100)
    ap.add_argument("--out", type=Path, default=OUT)
    args = ap.parse_args()

    draws = simulate_ad_null(args.replicates, args.seed, args.terms)
    t = np.linspace(np.log(0.001 / 0.999), np.log(0.9999 / 0.0001), 400)
    survival = 1 / (1 + np.exp(-t))
    quantile = np.quantile(draws, 1 - survival)
    doc = {
        "method": "limiting case-0 law, sum_j Z_j^2/(j(j+1)), normal remainder",
        "replicates": args.replicates,
        "seed": args.seed,
        "rng": "philox4x64-10",
        "terms": args.terms,
        "mean": float(draws.mean()),
        "survival": [round(float(s), 12) for s in survival],
        "quantile": [round(float(q), 8) for q in quantile],
    }
    args.out.write_text(json.dumps(doc, indent=1) + "\n")
    print(f"wrote {args.out}: mean A^2 = {doc['mean']:.5f}, 5% point = {np.quantile(draws, 0.95):.4f}")


if __name__ == "__main__":
    main()
