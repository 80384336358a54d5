"""Null calibration: the two-stage report on exact Gauss-measure samples.

Digits of a Gauss-distributed real are stationary with the predicted
frequencies, so block z-scores should look standard normal.  Optionally
reuses a digit file written by an earlier run.

    python3 scripts/null_calibration.py [-n 10000000] [--seed 20240607] [--digits FILE]
"""

import argparse
import time
from pathlib import Path

from cfdigits import digitfile, sampler, stats


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("-n", type=int, default=10_000_000)
    ap.add_argument("--seed", type=int, default=20240607)
    ap.add_argument("--mode", default="exact")
    ap.add_argument("--digits", type=Path, help="existing digit file to analyse instead of sampling")
    ap.add_argument("--save", type=Path, help="write the sampled digits here (binary)")
    ap.add_argument("--N", type=int, nargs="+", default=[250_000])
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--json", type=Path)
    args = ap.parse_args()

    t0 = time.perf_counter()
    if args.digits:
        s = digitfile.read(str(args.digits))
    else:
        def progress(done, bits):
            if done % 1_000_000 == 0:
                print(f"  {done} digits, {bits} bits, {time.perf_counter() - t0:.0f}s", flush=True)
        s = sampler.sample_digit_sequence(sampler.RandomBitStream(args.seed), args.n, args.mode, progress)
        if args.save:
            digitfile.write(s, str(args.save), "binary")
    print(f"{len(s)} digits ready after {time.perf_counter() - t0:.0f}s")

    cfg = stats.ReportConfig(block_lengths=tuple(args.N), threads=args.threads)
    rep = stats.two_stage_report(s, cfg, source="gauss-sample")
    if args.json:
        args.json.write_text(stats.report_to_json(rep))
    for entry in rep["per_N"]:
        if "skipped" in entry:
            print(f"N={entry['N']}: skipped ({entry['skipped']})")
            continue
        for t in entry["tests"]:
            z = t["zscores_summary"]
            print(f"N={entry['N']} B={entry['B']} {t['name']}: z mean {z['mean']:+.3f} sd {z['sd']:.3f} "
                  f"KS p={t['ks']['p']:.3f} AD p={t['ad']['p']:.3f}")
        lr = entry["longest_run"]
        print(f"N={entry['N']} longest run avg {lr['avg']:.3f} predicted {lr['predicted']:.4f}")
    print(f"total {time.perf_counter() - t0:.0f}s")


if __name__ == "__main__":
    main()
