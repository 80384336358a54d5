"""Command-line interface: ``cfdigits <subcommand> ...``.

Subcommands: digits, predict, analyze, sample, convert.  Data goes to
stdout, progress and diagnostics to stderr.

Exit codes: 0 ok, 1 usage, 2 capacity, 3 I/O, 4 data.
"""

import argparse
import csv
import logging
import os
import re
import sys
from dataclasses import dataclass, field

from . import digitfile, freq, sampler, sources, stats
from .errors import (CapacityError, DomainError, EntropyError, InsufficientDataError, ParseError,
                     ShortfallError, ValidationError)

EXIT_OK, EXIT_USAGE, EXIT_CAPACITY, EXIT_IO, EXIT_DATA = 0, 1, 2, 3, 4

log = logging.getLogger("cfdigits")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text):
    try:
        return tuple(int(v.replace("_", "")) for v in text.split(",") if v)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(text):
    return tuple(v for v in text.split(",") if v)


def _count(text):
    try:
        v = int(float(text)) if re.fullmatch(r"\d+(\.\d*)?[eE]\d+", text) else int(text.replace("_", ""))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    return v


@dataclass
class RunConfig:
    """Validated settings for one CLI invocation."""

    subcommand: str
    source: str = None
    n: int = None
    block_lengths: tuple = stats.ReportConfig.block_lengths
    predicates: tuple = stats.DEFAULT_PREDICATES
    run_target: int = 1
    outputs: dict = field(default_factory=dict)
    seed: int = 0
    threads: int = 1

    def validate(self):
        if self.n is not None and self.n < 1:
            raise UsageError(f"-n must be >= 1, got {self.n}")
        if self.threads < 1:
            raise UsageError("--threads must be >= 1")
        if any(b < 1 for b in self.block_lengths):
            raise UsageError("block lengths must be positive")
        if self.run_target < 1:
            raise UsageError("--run-target must be >= 1")
        return self


def load_config(path):
    """Read a ``key = value`` file (``#`` comments, optional quotes, dashes or underscores)."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line or line.startswith("["):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            out[key.strip().replace("-", "_")] = value.strip().strip("\"'")
    return out


def _progress(done, bits):
    extra = f" at {bits} bits" if bits else ""
    print(f"... {done} digits{extra}", file=sys.stderr, flush=True)


def _default_out(name, n, fmt):
    stem = re.sub(r"[^A-Za-z0-9_.-]+", "_", name)
    return f"{stem}_{n}.{'cfd' if fmt == 'binary' else 'txt'}"


# --- subcommands --------------------------------------------------------------

def cmd_digits(args):
    cfg = RunConfig("digits", source=args.const, n=args.n, outputs={"out": args.out}).validate()
    try:
        src = sources.parse_const(cfg.source)
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    progress = None if args.quiet else _progress
    stream = sources.extract_digits(src, cfg.n, checkpoint=args.checkpoint, progress=progress)
    out = args.out or _default_out(src.name, cfg.n, args.format)
    digitfile.write(stream, out, args.format, const=src.name)
    head = ",".join(map(str, stream.digits[:10]))
    print(f"[{stream.leading};{head}{',...' if len(stream.digits) > 10 else ''}]")
    kind = "finite expansion" if stream.finite else "prefix"
    print(f"wrote {len(stream.digits)} digits ({kind}) of {src.name} to {out}")
    if args.checkpoint:
        print(f"checkpoint: {args.checkpoint}")
    return EXIT_OK


def _emit_rows(header, rows, as_csv):
    if as_csv:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return
    print("\t".join(header))
    for row in rows:
        print("\t".join(f"{v:.10f}" if isinstance(v, float) else str(v) for v in row))


def cmd_predict(args):
    if args.table1:
        rows = [(k, e, a, f"{r:.2f}") for k, e, a, r in freq.run_table(args.kmax)]
        _emit_rows(["k", "exact", "approx", "rel_error_pct"], rows, args.csv)
        return EXIT_OK
    preds = []
    for a in args.digit:
        preds.append((f"digit {a}", freq.gauss_kuzmin(a)))
    for spec in args.set:
        ds = freq.DigitSet.parse(spec)
        if args.truncation is not None:
            pred = freq.subset_frequency(ds, args.truncation)
        else:
            pred = freq.FrequencyPrediction(stats.predicate_probability(spec), _closed_form(ds))
        preds.append((f"set {spec}", pred))
    for a, k in args.run:
        preds.append((f"run {a},{k}", freq.run_frequency(a, k)))
    for s in args.string:
        preds.append((f"string {','.join(map(str, s))}", freq.string_frequency(s)))
    for a, b, k in args.block:
        preds.append((f"block {a},{b},{k}", freq.repeated_block_frequency(a, b, k, args.paper_seeds)))
    if not preds:
        raise UsageError("nothing to predict: give --digit, --set, --run, --string, --block or --table1")
    rows = [(name, p.value, p.form, f"{p.abs_error_bound:.3g}") for name, p in preds]
    _emit_rows(["target", "value", "form", "error_bound"], rows, args.csv)
    return EXIT_OK


def _closed_form(ds):
    if ds.kind == "shifted-primes":
        return "zeta"
    if ds.kind in ("shifted-squares", "shifted-powers"):
        return "sine-product" if ds.k == 2 else "product-truncation"
    return "product-truncation"


def _tuple_arg(size):
    def parse(text):
        vals = _int_list(text)
        if len(vals) != size:
            raise argparse.ArgumentTypeError(f"expected {size} comma-separated integers, got {text!r}")
        return vals
    return parse


def cmd_analyze(args):
    cfg = RunConfig(
        "analyze", source=args.file, block_lengths=args.N, predicates=args.predicates,
        run_target=args.run_target, threads=args.threads,
        outputs={"json": args.json, "csv": args.csv},
    ).validate()
    stream = digitfile.read(cfg.source)
    if args.n is not None:
        stream = stream.prefix(args.n)
    if not len(stream):
        raise InsufficientDataError("digit file holds no digits")
    rc = stats.ReportConfig(cfg.block_lengths, cfg.predicates, cfg.run_target, cfg.threads)
    report = stats.two_stage_report(stream, rc, source=stream.provenance.get("const"))
    text = stats.report_to_json(report)
    if args.json in (None, "-"):
        sys.stdout.write(text)
    else:
        _write_text(args.json, text)
    if args.csv:
        _write_text(args.csv, stats.report_to_csv(report))
    for entry in report["per_N"]:
        if "skipped" in entry:
            print(f"N={entry['N']}: skipped ({entry['skipped']})", file=sys.stderr)
    return EXIT_OK


def _write_text(path, text):
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def cmd_sample(args):
    cfg = RunConfig("sample", n=args.n, seed=args.seed, outputs={"out": args.out}).validate()
    try:
        mode = sampler.parse_mode(args.mode)
    except (DomainError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    rng = sampler.RandomBitStream(cfg.seed)
    progress = None if args.quiet else _progress
    stream = sampler.sample_digit_sequence(rng, cfg.n, mode, progress=progress)
    out = args.out or _default_out(f"gauss-sample_seed{cfg.seed}", cfg.n, args.format)
    digitfile.write(stream, out, args.format, const="gauss-sample")
    print(f"wrote {len(stream.digits)} digits (seed {cfg.seed}, {stream.provenance['mode']}) to {out}")
    return EXIT_OK


def cmd_convert(args):
    stream = digitfile.read(args.input)
    fmt = args.to or ("binary" if digitfile.read_format(args.input) == "text" else "text")
    digitfile.write(stream, args.output, fmt, const=args.const)
    print(f"converted {len(stream.digits)} digits to {fmt}: {args.output}")
    return EXIT_OK


# --- parser -------------------------------------------------------------------

def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="FILE", help="key = value defaults; flags override")
    common.add_argument("--seed", type=int, default=0, help="rng seed (all randomness flows from it)")
    common.add_argument("--threads", type=int, default=1, help="threads for block analysis")
    common.add_argument("-q", "--quiet", action="store_true", help="no progress on stderr")
    common.add_argument("-v", "--verbose", action="store_true", help="log details to stderr")

    p = _Parser(prog="cfdigits", description="Continued-fraction digit statistics toolkit.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("digits", parents=[common], help="extract certified CF digits of a constant")
    d.add_argument("--const", required=True,
                   help="pi | e | sqrt2 | rational:P/Q | file:PATH (decimal expansion)")
    d.add_argument("-n", type=_count, required=True, help="number of digits")
    d.add_argument("-o", "--out", help="output file (default: <const>_<n>.txt|.cfd)")
    d.add_argument("--format", choices=("text", "binary"), default="text")
    d.add_argument("--checkpoint", metavar="PATH", help="save/resume extraction state here")
    d.set_defaults(func=cmd_digits)

    pr = sub.add_parser("predict", parents=[common], help="predicted digit frequencies")
    pr.add_argument("--digit", type=int, action="append", default=[], metavar="A")
    pr.add_argument("--set", action="append", default=[], metavar="SPEC",
                    help="shifted-primes:K | shifted-squares | shifted-powers:K | explicit:1,2,5")
    pr.add_argument("--truncation", type=_count, metavar="M",
                    help="evaluate --set as a product over members <= M")
    pr.add_argument("--run", type=_tuple_arg(2), action="append", default=[], metavar="A,K")
    pr.add_argument("--string", type=_int_list, action="append", default=[], metavar="S1,S2,...")
    pr.add_argument("--block", type=_tuple_arg(3), action="append", default=[], metavar="A,B,K")
    pr.add_argument("--paper-seeds", action="store_true",
                    help="use the printed (uncorrected) recurrence seeds for --block")
    pr.add_argument("--table1", action="store_true", help="runs of ones, exact vs approximation")
    pr.add_argument("--kmax", type=int, default=5, help="rows in --table1")
    pr.add_argument("--csv", action="store_true", help="CSV on stdout")
    pr.set_defaults(func=cmd_predict)

    a = sub.add_parser("analyze", parents=[common], help="two-stage block tests of a digit file")
    a.add_argument("file", help="CF digit file (text or binary)")
    a.add_argument("--N", type=_int_list, default=stats.ReportConfig.block_lengths,
                   help="block lengths, comma separated")
    a.add_argument("--predicates", type=_str_list, default=stats.DEFAULT_PREDICATES,
                   help="digit-set specs, comma separated")
    a.add_argument("--run-target", type=int, default=1)
    a.add_argument("-n", type=_count, help="analyze only the first n digits")
    a.add_argument("--json", metavar="PATH", help="report path (default stdout)")
    a.add_argument("--csv", metavar="PATH", help="per-block CSV for plotting")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("sample", parents=[common], help="digits of Gauss-measure random reals")
    s.add_argument("-n", type=_count, default=100_000)
    s.add_argument("--mode", default="exact", help="exact | block-restart[:M] (M >= 16, default 64)")
    s.add_argument("-o", "--out")
    s.add_argument("--format", choices=("text", "binary"), default="text")
    s.set_defaults(func=cmd_sample)

    c = sub.add_parser("convert", parents=[common], help="convert between text and binary digit files")
    c.add_argument("input")
    c.add_argument("output")
    c.add_argument("--to", choices=("text", "binary"), help="target format (default: the other one)")
    c.add_argument("--const", help="constant name for a text header (binary files carry none)")
    c.set_defaults(func=cmd_convert)
    return p, sub


def parse_args(argv):
    parser, sub = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            conf = load_config(args.config)
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        sp = sub.choices[args.command]
        known = {act.dest for act in sp._actions}
        unknown = sorted(set(conf) - known)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        sp.set_defaults(**conf)
        args = parser.parse_args(argv)
    return args


def main(argv=None):
    try:
        args = parse_args(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print(f"cfdigits: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        # argparse: --help exits 0, bad flags exit EXIT_USAGE
        return exc.code
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"cfdigits: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CapacityError, EntropyError) as exc:
        print(f"cfdigits: capacity: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except OSError as exc:
        print(f"cfdigits: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ParseError, ValidationError, InsufficientDataError, ShortfallError) as exc:
        print(f"cfdigits: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except DomainError as exc:
        print(f"cfdigits: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
