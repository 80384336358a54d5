"""Two-stage block tests of digit streams against predicted frequencies.

Stage one splits the stream into disjoint blocks of length N and computes
a statistic per block (a Bernoulli z-score for a digit-set predicate, the
longest run of a target digit).  Stage two compares the per-block
z-scores with the standard normal using Kolmogorov-Smirnov and
Anderson-Darling tests.
"""

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from functools import lru_cache
from importlib import resources

import numpy as np
from scipy import special

from . import freq
from .cf import CFDigitStream
from .errors import DomainError, InsufficientDataError, ShortfallError

EULER_GAMMA = 0.57721566490153286061
PHI = (1 + math.sqrt(5)) / 2
# Phi(x) is clipped into [LOG_GUARD, 1 - LOG_GUARD] before taking logs.
LOG_GUARD = 1e-300


# --- digits as arrays -------------------------------------------------------

def as_array(digits):
    """Digits as an int64 array (object array if some digit overflows int64)."""
    if isinstance(digits, CFDigitStream):
        digits = digits.digits
    if isinstance(digits, np.ndarray):
        return digits
    try:
        return np.array(digits, dtype=np.int64)
    except OverflowError:
        return np.array(digits, dtype=object)


@dataclass(frozen=True)
class BlockPartition:
    block_length: int
    block_count: int
    dropped_tail: int

    @property
    def used(self):
        return self.block_length * self.block_count

    def blocks(self, arr):
        """``arr`` reshaped to (block_count, block_length), tail dropped."""
        return np.asarray(arr)[: self.used].reshape(self.block_count, self.block_length)


def partition(digits, block_length):
    """Split ``digits`` (a stream, sequence or a total count) into disjoint blocks."""
    total = digits if isinstance(digits, int) else len(digits)
    if block_length < 1:
        raise DomainError("block length must be positive")
    if block_length > total:
        raise InsufficientDataError(f"block length {block_length} exceeds {total} digits")
    count, dropped = divmod(total, block_length)
    return BlockPartition(block_length, count, dropped)


def z_score(n1, n, q):
    """(N1 - Nq) / sqrt(Nq(1-q)) for N1 hits in N Bernoulli(q) trials."""
    if not 0 < q < 1:
        raise DomainError(f"q must lie in (0, 1), got {q}")
    if n < 1 or not 0 <= n1 <= n:
        raise DomainError(f"need 0 <= N1 <= N and N >= 1, got N1={n1}, N={n}")
    return (n1 - n * q) / math.sqrt(n * q * (1 - q))


# --- goodness of fit ----------------------------------------------------------

@dataclass(frozen=True)
class GoodnessOfFit:
    statistic: float
    p_value: float
    method: str
    sample_size: int


# 1/sqrt(2) as an unevaluated sum of two doubles
_RSQRT2_HI = 0.7071067811865476
_RSQRT2_LO = -4.833646656726457e-17


def _two_prod_err(a, b):
    """Rounding error of the float product a*b (Dekker/Veltkamp)."""
    p = a * b
    t = 134217729.0 * a
    ah = t - (t - a)
    al = a - ah
    t = 134217729.0 * b
    bh = t - (t - b)
    bl = b - bh
    return ((ah * bh - p) + ah * bl + al * bh) + al * bl


def normal_cdf(x):
    """Standard normal CDF, 0.5 erfc(-x/sqrt 2).

    The argument -x/sqrt(2) is carried to double-double accuracy and its
    low part applied as a first-order correction, which keeps the
    relative error near 1e-15 in the lower tail (|x| <= 8).
    """
    x = np.asarray(x, dtype=np.float64)
    z = -x * _RSQRT2_HI
    dz = _two_prod_err(-x, _RSQRT2_HI) + (-x) * _RSQRT2_LO
    return 0.5 * special.erfc(z) - dz * np.exp(-z * z) / math.sqrt(math.pi)


def kolmogorov_sf(t):
    """P(K > t) for the limiting Kolmogorov distribution."""
    if t <= 0:
        return 1.0
    if t < 1.18:
        # theta-function form converges fast for small t
        s = sum(math.exp(-((2 * j - 1) ** 2) * math.pi ** 2 / (8 * t * t)) for j in range(1, 40))
        cdf = math.sqrt(2 * math.pi) / t * s
        return min(1.0, max(0.0, 1.0 - cdf))
    s = 0.0
    for j in range(1, 101):
        term = math.exp(-2 * j * j * t * t)
        s += term if j % 2 else -term
        if term < 1e-300:
            break
    return min(1.0, max(0.0, 2 * s))


def _check_samples(samples, minimum=8):
    x = np.sort(np.asarray(samples, dtype=np.float64))
    if len(x) < minimum:
        raise InsufficientDataError(f"need at least {minimum} samples, got {len(x)}")
    if not np.all(np.isfinite(x)):
        raise DomainError("samples must be finite")
    return x


def ks_test(samples):
    """One-sample KS test against N(0, 1), finite-n adjusted asymptotic p-value."""
    x = _check_samples(samples)
    n = len(x)
    cdf = normal_cdf(x)
    i = np.arange(1, n + 1)
    d = float(max(np.max(i / n - cdf), np.max(cdf - (i - 1) / n)))
    rn = math.sqrt(n)
    p = kolmogorov_sf((rn + 0.12 + 0.11 / rn) * d)
    return GoodnessOfFit(d, p, "KS", n)


def ad_statistic(samples):
    x = _check_samples(samples)
    n = len(x)
    # 1 - Phi(x) is taken as Phi(-x), so neither tail cancels
    log_lo = np.log(np.clip(normal_cdf(x), LOG_GUARD, 1.0))
    log_hi = np.log(np.clip(normal_cdf(-x[::-1]), LOG_GUARD, 1.0))
    w = 2 * np.arange(1, n + 1) - 1
    return float(-n - np.sum(w * (log_lo + log_hi)) / n)


@lru_cache(maxsize=1)
def ad_null_table():
    """Frozen Monte-Carlo quantile table of the case-0 A^2 null distribution."""
    text = resources.files("cfdigits").joinpath("data/ad_case0_table.json").read_text()
    doc = json.loads(text)
    surv = np.asarray(doc["survival"], dtype=np.float64)
    quant = np.asarray(doc["quantile"], dtype=np.float64)
    order = np.argsort(quant)
    return quant[order], surv[order], doc


def ad_tail(a2):
    """Leading asymptotics of P(A^2 > z): sqrt(3) erfc(sqrt(z)).

    The null law is sum_j chi2_1 / (j(j+1)); the j = 1 term dominates the
    tail and the other weights contribute prod_{j>=2} (1 - 2/(j(j+1)))^-1/2
    = sqrt(3).
    """
    return math.sqrt(3) * math.erfc(math.sqrt(a2))


def ad_pvalue(a2):
    """P(A^2 >= a2) under the fully specified null.

    Interpolates the Monte-Carlo table (linear in log-survival); beyond
    its last quantile the asymptotic tail takes over.
    """
    quant, surv, _ = ad_null_table()
    if a2 <= quant[0]:
        return float(min(1.0, surv[0] + (1 - surv[0]) * (quant[0] - a2) / quant[0])) if a2 > 0 else 1.0
    if a2 >= quant[-1]:
        return float(min(surv[-1], ad_tail(a2)))
    return float(np.exp(np.interp(a2, quant, np.log(surv))))


def ad_test(samples):
    """One-sample Anderson-Darling test against N(0, 1) (case 0)."""
    a2 = ad_statistic(samples)
    return GoodnessOfFit(a2, ad_pvalue(a2), "AD", len(samples))


def simulate_ad_null(replicates, seed, terms=100, chunk=100_000):
    """Draws of the limiting case-0 A^2 law: sum_j Z_j^2 / (j(j+1)).

    The first ``terms`` weights are sampled exactly; the remainder is
    replaced by a normal with its mean 1/(terms+1) and matching variance.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    j = np.arange(1, terms + 1, dtype=np.float64)
    weights = 1.0 / (j * (j + 1))
    rest_mean = 1.0 / (terms + 1)
    k = np.arange(terms + 1, terms + 200_000, dtype=np.float64)
    rest_sd = math.sqrt(2 * np.sum((1.0 / (k * (k + 1))) ** 2))
    out = np.empty(replicates)
    for start in range(0, replicates, chunk):
        m = min(chunk, replicates - start)
        z = rng.standard_normal((m, terms))
        out[start:start + m] = (z * z) @ weights + rest_mean + rest_sd * rng.standard_normal(m)
    return out


# --- runs, frequencies, means ------------------------------------------------

def _longest_true_run(mask):
    if not len(mask):
        return 0
    edges = np.diff(np.concatenate(([0], mask.view(np.int8), [0])))
    starts = np.flatnonzero(edges == 1)
    if not len(starts):
        return 0
    ends = np.flatnonzero(edges == -1)
    return int(np.max(ends - starts))


def longest_run(block, target):
    """Length of the longest run of consecutive ``target`` digits in ``block``."""
    arr = as_array(block)
    return _longest_true_run(np.asarray(arr == target, dtype=bool))


def run_ratio(target):
    """Per-digit decay of run frequencies of ``target``: 1/lambda^2, lambda^2 = a lambda + 1."""
    lam = (target + math.sqrt(target * target + 4)) / 2
    return 1 / (lam * lam)


def expected_longest_run(n, q):
    """Asymptotic mean longest success run in n Bernoulli(q) trials, o(1) dropped.

    ln(n(1-q))/ln(1/q) + gamma/ln(1/q) - 1/2.
    """
    if not 0 < q < 1:
        raise DomainError(f"q must lie in (0, 1), got {q}")
    if n < 2:
        raise DomainError("n must be >= 2")
    lq = math.log(1 / q)
    return math.log(n * (1 - q)) / lq + EULER_GAMMA / lq - 0.5


def empirical_frequency(digits, matcher, n=None, exclude_partial=False):
    """Exact hit fraction of ``matcher`` among the first ``n`` positions.

    ``matcher`` is a :class:`~cfdigits.freq.DigitSet` (per-digit hits) or
    a sequence of digits (string matches at every offset, overlaps
    included, lookahead past ``n`` allowed).  Offsets without room for a
    full string never match; with ``exclude_partial`` they are also left
    out of the denominator.
    """
    arr = as_array(digits)
    total = len(arr)
    if total == 0:
        raise InsufficientDataError("no digits")
    n = total if n is None else n
    if not 1 <= n <= total:
        raise ShortfallError(n, total)
    if isinstance(matcher, freq.DigitSet):
        if matcher.kind == "explicit" and not matcher.members:
            return Fraction(0)
        return Fraction(int(matcher.mask(arr[:n]).sum()), n)
    s = [int(a) for a in matcher]
    if not s:
        raise DomainError("empty string matcher")
    k = len(s)
    starts = min(n, total - k + 1)
    if starts <= 0:
        return Fraction(0) if not exclude_partial else Fraction(0, 1)
    hit = np.ones(starts, dtype=bool)
    for offset, a in enumerate(s):
        hit &= arr[offset:offset + starts] == a
    denom = starts if exclude_partial else n
    return Fraction(int(hit.sum()), denom)


def geometric_mean(digits, n=None):
    """(a_1 ... a_n)^(1/n), accumulated in log space."""
    arr = as_array(digits)
    n = len(arr) if n is None else n
    if n < 1 or n > len(arr):
        raise ShortfallError(n, len(arr))
    head = arr[:n]
    if head.dtype == object:
        logs = np.fromiter((math.log(int(a)) for a in head), dtype=np.float64, count=n)
    else:
        logs = np.log(head.astype(np.float64))
    return math.exp(math.fsum(logs) / n)


# --- the two-stage report -----------------------------------------------------

DEFAULT_PREDICATES = ("shifted-primes:1", "shifted-squares")


def predicate_probability(spec):
    """Predicted frequency for a predicate spec string."""
    ds = freq.DigitSet.parse(spec)
    if ds.kind == "shifted-primes":
        return freq.shifted_prime_powers(ds.k).value
    if ds.kind == "shifted-squares":
        return freq.shifted_squares().value
    if ds.kind == "shifted-powers":
        return freq.shifted_kth_powers(ds.k).value
    return freq.subset_frequency(ds).value


@dataclass
class ReportConfig:
    block_lengths: tuple = (250_000, 500_000, 1_000_000)
    predicates: tuple = DEFAULT_PREDICATES
    run_target: int = 1
    threads: int = 1
    min_blocks: int = 8
    include_blocks: bool = True


@dataclass(frozen=True)
class BlockTestResult:
    block_index: int
    n1: tuple
    z: tuple
    longest_run: int


def _block_worker(masks, run_mask, probs, n):
    def work(b):
        lo, hi = b * n, (b + 1) * n
        counts = tuple(int(np.count_nonzero(m[lo:hi])) for m in masks)
        zs = tuple(z_score(c, n, q) for c, q in zip(counts, probs))
        return BlockTestResult(b, counts, zs, _longest_true_run(run_mask[lo:hi]))
    return work


def block_tests(arr, n, predicates, run_target=1, threads=1):
    """Stage one: per-block hit counts, z-scores and longest runs, in block order."""
    part = partition(len(arr), n)
    sets = [freq.DigitSet.parse(p) for p in predicates]
    probs = [predicate_probability(p) for p in predicates]
    used = arr[: part.used]
    masks = [s.mask(used) for s in sets]
    run_mask = np.asarray(used == run_target, dtype=bool)
    work = _block_worker(masks, run_mask, probs, n)
    if threads <= 1:
        results = [work(b) for b in range(part.block_count)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, range(part.block_count)))
    return part, probs, results


def _summary(zs):
    z = np.asarray(zs, dtype=np.float64)
    return {
        "mean": float(np.mean(z)),
        "sd": float(np.std(z, ddof=1)) if len(z) > 1 else 0.0,
        "min": float(np.min(z)),
        "max": float(np.max(z)),
    }


def two_stage_report(digits, config=None, source=None):
    """Run Tests I-III for every block length and return a JSON-ready dict."""
    config = config or ReportConfig()
    arr = as_array(digits)
    if source is None and isinstance(digits, CFDigitStream):
        source = digits.provenance.get("const")
    report = {"source": source or "unknown", "total_digits": int(len(arr)), "per_N": []}
    for n in config.block_lengths:
        entry = {"N": int(n)}
        blocks = len(arr) // n if n > 0 else 0
        if blocks < config.min_blocks:
            entry.update(B=int(blocks), skipped=f"only {blocks} blocks of {n}; need {config.min_blocks}")
            report["per_N"].append(entry)
            continue
        part, probs, results = block_tests(arr, n, config.predicates, config.run_target, config.threads)
        entry.update(B=part.block_count, dropped=part.dropped_tail, tests=[])
        for t, (name, q) in enumerate(zip(config.predicates, probs)):
            zs = [r.z[t] for r in results]
            ks = ks_test(zs)
            ad = ad_test(zs)
            test = {
                "name": name,
                "q": q,
                "zscores_summary": _summary(zs),
                "ks": {"D": ks.statistic, "p": ks.p_value},
                "ad": {"A2": ad.statistic, "p": ad.p_value},
            }
            if config.include_blocks:
                test["zscores"] = zs
            entry["tests"].append(test)
        runs = [r.longest_run for r in results]
        q_run = run_ratio(config.run_target)
        entry["longest_run"] = {
            "target": config.run_target,
            "q": q_run,
            "avg": float(np.mean(runs)),
            "predicted": expected_longest_run(n, q_run),
        }
        if config.include_blocks:
            entry["longest_run"]["per_block"] = runs
        report["per_N"].append(entry)
    report["khinchin"] = {"n": int(len(arr)), "geo_mean": geometric_mean(arr)}
    return report


def report_to_json(report):
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def report_to_csv(report):
    """Flatten a report to one row per (N, test, block) for plotting."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["N", "test", "block", "value"])
    for entry in report["per_N"]:
        for test in entry.get("tests", []):
            for b, z in enumerate(test.get("zscores", [])):
                writer.writerow([entry["N"], test["name"], b, repr(z)])
        for b, run in enumerate(entry.get("longest_run", {}).get("per_block", [])):
            writer.writerow([entry["N"], "longest-run", b, run])
    return buf.getvalue()
