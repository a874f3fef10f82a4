"""Counting length-n prefixes of beta-expansions.

A word ``w_1..w_n`` extends to an expansion of ``x`` iff every partial orbit
``T_{w_k} o ... o T_{w_1}(x)`` stays in ``I_beta``. ``count_prefixes`` walks
that tree breadth-first, merging orbit points that compare equal, so the
frontier stays small whenever the orbit values coincide (e.g. Pisot beta).
``count_by_interval_oracle`` counts the same set by brute force over all
``2**n`` words using the window characterisation
``sum_i w_i beta^-i in [x - 1/((beta-1) beta^n), x]``.
"""

from __future__ import annotations

import csv
import io
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import BetaParam, Number, QuadNumber, fmt_num
from .errors import DepthExceeded, OutputTooLarge

DEFAULT_N_MAX = 30
DEFAULT_ORACLE_MAX_N = 22
DEFAULT_OUTPUT_CAP = 10**6
# counts are held in int64 in the float backend
FLOAT_BACKEND_MAX_N = 62


@dataclass(frozen=True)
class CountResult:
    n: int
    count: int
    f_n_value: Number
    garsia_erdos: Number
    log_rate: Optional[float]
    near_boundary: bool = False


def scale(beta: BetaParam, n: int) -> Number:
    """``(beta/2)^n`` in backend arithmetic."""
    if beta.backend == "quadratic":
        return beta.beta_pow(n) / 2**n
    return (beta.value / 2.0) ** n


def make_result(beta: BetaParam, n: int, count: int, near_boundary: bool = False) -> CountResult:
    ge = scale(beta, n) * count
    f = (beta.mul_beta(ge) - ge) if beta.backend == "quadratic" else (beta.value - 1.0) * ge
    log_rate = None if n == 0 else (math.log(count) / n if count > 0 else -math.inf)
    return CountResult(n, int(count), f, ge, log_rate, near_boundary)


def _check(x, n: int, beta: BetaParam, n_max: int):
    if n < 0:
        raise DepthExceeded(f"n={n} must be non-negative")
    if n > n_max:
        raise DepthExceeded(f"n={n} exceeds depth cap n_max={n_max}")
    if beta.backend == "float" and n > FLOAT_BACKEND_MAX_N:
        raise DepthExceeded(f"float backend counts are int64; n={n} > {FLOAT_BACKEND_MAX_N}")
    x = beta.point(x)
    beta.check_in_interval(x)
    return x


def allowed_digits(y: Number, beta: BetaParam) -> tuple:
    """Digits d with ``T_d(y)`` in ``I_beta``."""
    return tuple(d for d in (0, 1) if beta.in_interval(beta.T(d, y)))


# -- frontier ---------------------------------------------------------------


class _ExactFrontier:
    def __init__(self, x: QuadNumber, beta: BetaParam):
        self.beta = beta
        self.points = {x: 1}
        self.near_boundary = False

    def advance(self):
        beta = self.beta
        nxt: dict = defaultdict(int)
        for y, c in self.points.items():
            z0 = beta.mul_beta(y)
            if z0 <= beta.right:
                nxt[z0] += c
            z1 = z0 - 1
            if z1.sign() >= 0:
                nxt[z1] += c
        self.points = nxt

    def total(self) -> int:
        return sum(self.points.values())

    def __len__(self):
        return len(self.points)


class _FloatFrontier:
    def __init__(self, x: float, beta: BetaParam):
        self.beta = beta
        self.values = np.array([x], dtype=np.float64)
        self.counts = np.array([1], dtype=np.int64)
        self.near_boundary = False

    def advance(self):
        b, tau, right = self.beta.value, self.beta.tau, self.beta.right
        z0 = b * self.values
        z1 = z0 - 1.0
        vals = np.concatenate([z0, z1])
        cnts = np.concatenate([self.counts, self.counts])
        keep = (vals >= -tau) & (vals <= right + tau)
        vals, cnts = vals[keep], cnts[keep]
        if np.any((vals < 0.0) | (vals > right)):
            self.near_boundary = True
        order = np.argsort(vals, kind="stable")
        vals, cnts = vals[order], cnts[order]
        if len(vals) > 1:
            # merge runs of tau-equal neighbours
            starts = np.flatnonzero(np.concatenate([[True], np.diff(vals) > tau]))
            vals = vals[starts]
            cnts = np.add.reduceat(cnts, starts)
        self.values, self.counts = vals, cnts

    def total(self) -> int:
        return int(self.counts.sum())

    def __len__(self):
        return len(self.values)


def _frontier(x, beta: BetaParam):
    return _ExactFrontier(x, beta) if beta.backend == "quadratic" else _FloatFrontier(x, beta)


# -- public operations ------------------------------------------------------


def count_prefixes(x, n: int, beta: BetaParam, *, n_max: int = DEFAULT_N_MAX) -> CountResult:
    """``N_n(x; beta)`` with its normalisations."""
    x = _check(x, n, beta, n_max)
    fr = _frontier(x, beta)
    for _ in range(n):
        fr.advance()
    return make_result(beta, n, fr.total(), fr.near_boundary)


def f_n_at(x, n: int, beta: BetaParam, *, n_max: int = DEFAULT_N_MAX) -> Number:
    return count_prefixes(x, n, beta, n_max=n_max).f_n_value


def enumerate_prefixes(
    x, n: int, beta: BetaParam, *, n_max: int = DEFAULT_N_MAX, output_cap: int = DEFAULT_OUTPUT_CAP
) -> list:
    """The words of ``E^n_beta(x)`` in lexicographic order."""
    total = count_prefixes(x, n, beta, n_max=n_max).count
    if total > output_cap:
        raise OutputTooLarge(f"{total} prefixes exceed output cap {output_cap}")
    x = beta.point(x)
    words = []
    # explicit stack; pushing digit 1 before 0 pops in lexicographic order
    stack = [(x, ())]
    while stack:
        y, w = stack.pop()
        if len(w) == n:
            words.append(w)
            continue
        for d in (1, 0):
            z = beta.T(d, y)
            if beta.in_interval(z):
                stack.append((z, w + (d,)))
    return words


def _all_word_sums_float(beta: BetaParam, n: int) -> np.ndarray:
    sums = np.zeros(1)
    for i in range(1, n + 1):
        sums = np.concatenate([sums, sums + beta.value ** (-i)])
    return sums


def _all_word_sums_scaled_int(beta: BetaParam, n: int):
    """Integer coordinates (P, Q) of ``beta^n * sum_i w_i beta^-i = P + Q beta``."""
    a, b = beta.a, beta.b
    # beta^(n-i) as integer pairs, i = 1..n
    pows = []
    p, q = 1, 0
    for _ in range(n):
        pows.append((p, q))
        p, q = q * b, p + q * a
    P = np.zeros(1, dtype=np.int64)
    Q = np.zeros(1, dtype=np.int64)
    for i in range(1, n + 1):
        pp, qq = pows[n - i]
        P = np.concatenate([P, P + pp])
        Q = np.concatenate([Q, Q + qq])
    return P, Q


def window_margin(x: float, n: int, beta: BetaParam) -> float:
    """Smallest distance from any level-n word sum to an end of the prefix
    window ``[x - l_n, x]`` (float backend)."""
    sums = _all_word_sums_float(beta, n)
    ell = beta.right / beta.value**n
    return float(min(np.min(np.abs(sums - x)), np.min(np.abs(sums - (x - ell)))))


def count_by_interval_oracle(x, n: int, beta: BetaParam, *, max_n: int = DEFAULT_ORACLE_MAX_N) -> int:
    """Brute-force count of words whose sum lies in ``[x - l_n, x]``."""
    if n < 0 or n > max_n:
        raise DepthExceeded(f"oracle enumerates 2^n words; n={n} outside [0, {max_n}]")
    x = beta.point(x)
    beta.check_in_interval(x)
    if beta.backend == "float":
        sums = _all_word_sums_float(beta, n)
        ell = beta.right / beta.value**n
        tau = beta.tau
        return int(np.count_nonzero((sums >= x - ell - tau) & (sums <= x + tau)))
    # exact: compare beta^n * sum (in Z[beta]) against beta^n * window
    P, Q = _all_word_sums_scaled_int(beta, n)
    hi = beta.beta_pow(n) * x
    lo = hi - beta.right
    approx = P.astype(np.float64) + Q.astype(np.float64) * beta.value
    lo_f, hi_f = float(lo), float(hi)
    scale_ = float(np.max(np.abs(P)) + np.max(np.abs(Q)) * beta.value) + abs(lo_f) + abs(hi_f) + 1.0
    band = 1e-9 * scale_
    inside = (approx > lo_f + band) & (approx < hi_f - band)
    unsure = (np.abs(approx - lo_f) <= band) | (np.abs(approx - hi_f) <= band)
    count = int(np.count_nonzero(inside))
    fld = beta.field
    for i in np.flatnonzero(unsure):
        s = QuadNumber(int(P[i]), int(Q[i]), fld)
        if lo <= s <= hi:
            count += 1
    return count


@dataclass
class GrowthReport:
    results: list
    running_max_garsia_erdos: list
    tail_start: int
    tail_min_f: Optional[float]
    tail_max_f: Optional[float]
    frontier_sizes: list = field(default_factory=list)


def tail_start(n_max: int, window: float = 0.5) -> int:
    """First index of the tail window; ``window=0.5`` gives ``ceil(n_max/2)``."""
    return max(1, math.ceil(n_max * (1.0 - window)))


def growth_sequence(x, beta: BetaParam, n_max: int, *, window: float = 0.5, cap: int = DEFAULT_N_MAX) -> GrowthReport:
    """Counts for n = 1..n_max from one incrementally extended frontier."""
    x = _check(x, n_max, beta, cap)
    fr = _frontier(x, beta)
    results, running, sizes = [], [], []
    best = None
    for n in range(1, n_max + 1):
        fr.advance()
        r = make_result(beta, n, fr.total(), fr.near_boundary)
        results.append(r)
        sizes.append(len(fr))
        ge = float(r.garsia_erdos)
        best = ge if best is None else max(best, ge)
        running.append(best)
    start = tail_start(n_max, window)
    tail = [float(r.f_n_value) for r in results if r.n >= start]
    return GrowthReport(
        results,
        running,
        start,
        min(tail) if tail else None,
        max(tail) if tail else None,
        sizes,
    )


def growth_to_csv(report: GrowthReport, digits: int = 17) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "count", "f_n", "garsia_erdos", "running_max_garsia_erdos", "log_rate"])
    for r, m in zip(report.results, report.running_max_garsia_erdos):
        w.writerow([r.n, r.count, fmt_num(r.f_n_value, digits), fmt_num(r.garsia_erdos, digits),
                    fmt_num(m, digits), fmt_num(r.log_rate, digits)])
    return buf.getvalue()
