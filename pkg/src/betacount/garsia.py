"""Level-n Bernoulli convolutions and Garsia entropy.

``nu_{beta,n}`` puts mass ``2^-n`` on each sum ``sum_{i<=n} a_i beta^-i``;
coincident sums are merged, so the atom set is the sum set ``D_n``.

The measure is built by recursive halving: ``nu_n`` is the convolution of
``nu_k`` with ``nu_{n-k}`` shrunk by ``beta^-k``, each half merged before the
product is formed. When sums coincide heavily (Pisot beta) the halves are far
smaller than ``2^(n/2)`` and the product far smaller than ``2^n``. In the exact
backend the work happens on integer coordinates ``beta^n * s = P + Q beta``
(beta is an algebraic integer), which is much cheaper than rational
arithmetic.
"""

from __future__ import annotations

import csv
import io
import math
from bisect import bisect_left, bisect_right
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import cmp_to_key
from typing import Optional, Sequence

import numpy as np

from .core import BetaParam, QuadNumber, fmt_num
from .density import PiecewiseConstant
from .errors import DepthExceeded

DEFAULT_ENUM_MAX_N = 24


@dataclass(frozen=True)
class DiscreteMeasure:
    """Atoms with masses ``counts[i] / denominator``."""

    beta: BetaParam
    atoms: tuple
    counts: tuple
    denominator: int
    suspicious_merges: bool = False

    @property
    def masses(self) -> list:
        return [Fraction(c, self.denominator) for c in self.counts]

    @property
    def total_mass(self) -> Fraction:
        return Fraction(sum(self.counts), self.denominator)

    def __len__(self):
        return len(self.atoms)

    def mass_in(self, lo, hi) -> Fraction:
        """Exact mass of the closed interval ``[lo, hi]``."""
        if self.beta.backend == "float":
            i = bisect_left(self.atoms, lo - self.beta.tau)
            j = bisect_right(self.atoms, hi + self.beta.tau)
        else:
            i = bisect_left(self.atoms, lo)
            j = bisect_right(self.atoms, hi)
        return Fraction(sum(self.counts[i:j]), self.denominator)


# -- exact construction -----------------------------------------------------


def _times_beta_pow(key, pw, a, b):
    P, Q = key
    pm, qm = pw
    return (P * pm + Q * qm * b, P * qm + Q * pm + Q * qm * a)


def _int_beta_pow(m: int, a: int, b: int):
    p, q = 1, 0
    for _ in range(m):
        p, q = q * b, p + q * a
    return p, q


def _exact_level(n: int, a: int, b: int, memo: dict) -> dict:
    if n in memo:
        return memo[n]
    if n == 0:
        out = {(0, 0): 1}
    elif n == 1:
        out = {(0, 0): 1, (1, 0): 1}
    else:
        k = n // 2
        A = _exact_level(k, a, b, memo)
        B = _exact_level(n - k, a, b, memo)
        pw = _int_beta_pow(n - k, a, b)
        out = defaultdict(int)
        for ka, ca in A.items():
            P, Q = _times_beta_pow(ka, pw, a, b)
            for (Pb, Qb), cb in B.items():
                out[(P + Pb, Q + Qb)] += ca * cb
        out = dict(out)
    memo[n] = out
    return out


def _int_sign(P: int, Q: int, a: int, disc: int) -> int:
    u = 2 * P + a * Q
    su = (u > 0) - (u < 0)
    sv = (Q > 0) - (Q < 0)
    if sv == 0 or su == sv:
        return su
    if su == 0:
        return sv
    return su if u * u > Q * Q * disc else sv


def _build_exact(beta, n: int, memo: dict) -> DiscreteMeasure:
    a, b, disc = beta.a, beta.b, beta.field.disc
    level = _exact_level(n, a, b, memo)
    keys = sorted(level, key=cmp_to_key(lambda s, t: _int_sign(s[0] - t[0], s[1] - t[1], a, disc)))
    inv = beta.beta_pow(-n)
    fld = beta.field
    atoms = tuple(QuadNumber(P, Q, fld) * inv for P, Q in keys)
    counts = tuple(level[k] for k in keys)
    return DiscreteMeasure(beta, atoms, counts, 2**n)


# -- float construction -----------------------------------------------------


def _merge_sorted(vals: np.ndarray, cnts: np.ndarray, tau: float):
    order = np.argsort(vals, kind="stable")
    vals, cnts = vals[order], cnts[order]
    if len(vals) < 2:
        return vals, cnts, False
    gaps = np.diff(vals)
    merge = gaps <= tau
    suspicious = bool(np.any(merge & (gaps >= tau / 10)))
    starts = np.flatnonzero(np.concatenate([[True], ~merge]))
    return vals[starts], np.add.reduceat(cnts, starts), suspicious


def _float_level(n: int, beta, memo: dict):
    if n in memo:
        return memo[n]
    if n == 0:
        out = (np.zeros(1), np.ones(1, dtype=np.int64), False)
    elif n == 1:
        out = (np.array([0.0, 1.0 / beta.value]), np.ones(2, dtype=np.int64), False)
    else:
        k = n // 2
        va, ca, sa = _float_level(k, beta, memo)
        vb, cb, sb = _float_level(n - k, beta, memo)
        vals = (va[:, None] + vb[None, :] * beta.value ** (-k)).ravel()
        cnts = (ca[:, None] * cb[None, :]).ravel()
        v, c, s = _merge_sorted(vals, cnts, beta.tau)
        out = (v, c, s or sa or sb)
    memo[n] = out
    return out


def build_nu_n(beta: BetaParam, n: int, *, max_n: int = DEFAULT_ENUM_MAX_N, memo: Optional[dict] = None) -> DiscreteMeasure:
    """The level-n Bernoulli convolution with coincident atoms merged."""
    if n < 0 or n > max_n:
        raise DepthExceeded(f"n={n} outside [0, {max_n}]")
    memo = {} if memo is None else memo
    if beta.backend == "quadratic":
        return _build_exact(beta, n, memo)
    v, c, s = _float_level(n, beta, memo)
    return DiscreteMeasure(beta, tuple(v.tolist()), tuple(int(x) for x in c), 2**n, s)


def sum_set(beta: BetaParam, n: int, **kw) -> tuple:
    """``D_n`` as a sorted tuple of distinct points."""
    return build_nu_n(beta, n, **kw).atoms


# -- entropy ----------------------------------------------------------------


def entropy(m: DiscreteMeasure) -> float:
    """Shannon entropy in nats."""
    return entropy_of_counts(m.counts, m.denominator)


def entropy_of_counts(counts: Sequence[int], denominator: Optional[int] = None) -> float:
    # summed in bits: dyadic masses then give an exact float sum
    total = sum(counts) if denominator is None else denominator
    bits = math.fsum((c / total) * math.log2(total / c) for c in counts if c > 0)
    return bits * math.log(2)


@dataclass
class GarsiaTable:
    rows: list                  # (n, H, H/n, ln beta)
    ln_beta: float
    non_increasing_from: Optional[int] = None
    trend: str = ""


def garsia_ratio(beta: BetaParam, n_max: int, *, max_n: int = DEFAULT_ENUM_MAX_N) -> GarsiaTable:
    """``H(nu_{beta,n}) / n`` for n = 1..n_max against the threshold ``ln beta``."""
    if n_max < 1 or n_max > max_n:
        raise DepthExceeded(f"n_max={n_max} outside [1, {max_n}]")
    memo: dict = {}
    ln_beta = math.log(beta.value)
    rows = []
    for n in range(1, n_max + 1):
        h = entropy(build_nu_n(beta, n, max_n=max_n, memo=memo))
        rows.append((n, h, h / n, ln_beta))
    # first n from which the ratio never increases again
    start = n_max
    while start > 1 and rows[start - 2][2] >= rows[start - 1][2]:
        start -= 1
    ratios = [r[2] for r in rows]
    trend = (
        f"H/n from {ratios[0]:.6f} (n=1) to {ratios[-1]:.6f} (n={n_max}); "
        f"non-increasing from n={start}; threshold ln(beta)={ln_beta:.6f}"
    )
    return GarsiaTable(rows, ln_beta, start, trend)


# -- clustering -------------------------------------------------------------


@dataclass
class ClusteringProfile:
    edges: list
    distinct_counts: list
    weighted_counts: list       # multiplicity-weighted (numerators over 2^n)
    normalized: list            # mass per window / window width
    total_distinct: int
    total_weighted: int
    max_count: int
    min_count: int
    mean_count: float
    dispersion: float           # max / mean of weighted counts; 1 for uniform


def profile_measure(m: DiscreteMeasure, window_count: int, lo=None, hi=None) -> ClusteringProfile:
    """Histogram ``m`` over ``window_count`` equal windows of ``[lo, hi]``
    (default ``I_beta``). The last window is closed on the right."""
    if window_count < 1:
        raise ValueError("window_count must be positive")
    beta = m.beta
    lo = beta.zero if lo is None else lo
    hi = beta.right if hi is None else hi
    width = (hi - lo) / window_count
    edges = [lo + width * k for k in range(window_count)] + [hi]
    distinct = [0] * window_count
    weighted = [0] * window_count
    for atom, c in zip(m.atoms, m.counts):
        if atom < lo or atom > hi:
            continue
        k = min(bisect_right(edges, atom) - 1, window_count - 1)
        distinct[k] += 1
        weighted[k] += c
    normalized = [float(Fraction(c, m.denominator)) / float(width) for c in weighted]
    mean = sum(weighted) / window_count
    return ClusteringProfile(
        edges,
        distinct,
        weighted,
        normalized,
        sum(distinct),
        sum(weighted),
        max(weighted),
        min(weighted),
        mean,
        max(weighted) / mean if mean else math.nan,
    )


def clustering_profile(beta: BetaParam, n: int, window_count: int, *, max_n: int = DEFAULT_ENUM_MAX_N) -> ClusteringProfile:
    return profile_measure(build_nu_n(beta, n, max_n=max_n), window_count)


# -- f_n straight from the sum set ------------------------------------------


def f_n_from_sums(beta: BetaParam, n: int, *, max_n: int = DEFAULT_ENUM_MAX_N) -> PiecewiseConstant:
    """``f_n`` built by counting atoms of ``D_n`` (with multiplicity) in
    ``[x - l_n, x]``; independent of the operator iteration."""
    m = build_nu_n(beta, n, max_n=max_n)
    ell = beta.window_length(n)
    atoms = list(m.atoms)
    shifted = [d + ell for d in atoms]
    cum = [0]
    for c in m.counts:
        cum.append(cum[-1] + c)
    pts = atoms + shifted + [beta.zero, beta.right]
    if beta.backend == "quadratic":
        grid = sorted(set(pts))
        sc = beta.right.inverse() * beta.beta_pow(n) / 2**n
    else:
        arr = np.sort(np.asarray(pts))
        arr = arr[np.concatenate([[True], np.diff(arr) > beta.tau])]
        grid = arr.tolist()
        sc = (beta.value - 1.0) * (beta.value / 2.0) ** n
    grid = [g for g in grid if beta.in_interval(g)]
    vals = []
    for i in range(len(grid) - 1):
        mid = (grid[i] + grid[i + 1]) / 2
        # atoms d with d <= mid <= d + ell
        k = cum[bisect_right(atoms, mid)] - cum[bisect_left(shifted, mid)]
        vals.append(sc * k)
    return PiecewiseConstant(beta, tuple(grid), tuple(vals))


# -- CSV --------------------------------------------------------------------


def measure_to_csv(m: DiscreteMeasure, digits: int = 17) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["atom", "mass_num", "mass_den"])
    for atom, mass in zip(m.atoms, m.masses):
        w.writerow([fmt_num(atom, digits), mass.numerator, mass.denominator])
    return buf.getvalue()


def entropy_table_to_csv(table: GarsiaTable, digits: int = 17) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "H", "H_over_n", "ln_beta"])
    for n, h, r, lb in table.rows:
        w.writerow([n, fmt_num(h, digits), fmt_num(r, digits), fmt_num(lb, digits)])
    return buf.getvalue()
