"""Extract certified CF digits of pi and run the two-stage report on them.

Writes the digits (binary) and the report (JSON) into --out.

    python3 scripts/pi_desk_run.py [-n 1000000] [--out runs/pi]
"""

import argparse
import math
import time
from pathlib import Path

from cfdigits import digitfile, freq, sources, stats


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("-n", type=int, default=1_000_000)
    ap.add_argument("--out", type=Path, default=Path("runs/pi"))
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--N", type=int, nargs="+", default=[100_000, 250_000], help="block lengths")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    s = sources.extract_digits(sources.PiSource(), args.n)
    print(f"extracted {len(s)} digits in {time.perf_counter() - t0:.1f}s")
    digitfile.write(s, str(args.out / f"pi_{args.n}.cfd"), "binary")

    arr = stats.as_array(s)
    n = len(arr)
    for name, matcher, q in (
        ("digit 1", freq.DigitSet.explicit([1]), freq.gauss_kuzmin(1).value),
        ("shifted primes", freq.DigitSet.shifted_primes(1), freq.shifted_prime_powers(1).value),
        ("shifted squares", freq.DigitSet.shifted_squares(), freq.shifted_squares().value),
    ):
        f = float(stats.empirical_frequency(arr, matcher))
        print(f"{name:16s} observed {f:.6f} predicted {q:.6f} z={(f - q) / math.sqrt(q * (1 - q) / n):+.2f}")

    cfg = stats.ReportConfig(block_lengths=tuple(args.N), threads=args.threads)
    rep = stats.two_stage_report(s, cfg, source="pi")
    (args.out / "report.json").write_text(stats.report_to_json(rep))
    print(f"geometric mean {rep['khinchin']['geo_mean']:.6f}")
    for entry in rep["per_N"]:
        if "skipped" in entry:
            print(f"N={entry['N']}: skipped ({entry['skipped']})")
            continue
        for t in entry["tests"]:
            print(f"N={entry['N']} B={entry['B']} {t['name']}: KS p={t['ks']['p']:.3f} AD p={t['ad']['p']:.3f}")
        lr = entry["longest_run"]
        print(f"N={entry['N']} longest run avg {lr['avg']:.3f} predicted {lr['predicted']:.4f}")


if __name__ == "__main__":
    main()
