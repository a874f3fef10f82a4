"""Piecewise-constant densities on ``I_beta`` and the operator

    P f(x) = beta/2 * (f(beta x) + f(beta x - 1)).

Starting from the uniform density ``(beta-1) * 1_{I_beta}``, ``P^n`` produces
``f_n = (beta-1) (beta/2)^n N_n(x; beta)``, which is genuinely piecewise
constant, so the representation here is lossless. In the quadratic backend
breakpoints and values are exact elements of Q(beta).

Values at breakpoints are a measure-zero matter; ``evaluate`` uses the
half-open convention ``[b_i, b_{i+1})`` with the last piece closed.
"""

from __future__ import annotations

import csv
import io
import math
import statistics
from bisect import bisect_right
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import BetaParam, Number, QuadNumber, fmt_num
from .counting import growth_sequence, tail_start
from .errors import PieceBudgetExceeded, SupportViolation

DEFAULT_PIECE_BUDGET = 2_000_000


@dataclass(frozen=True)
class PiecewiseConstant:
    beta: BetaParam
    breakpoints: tuple
    values: tuple

    def __post_init__(self):
        if len(self.breakpoints) != len(self.values) + 1:
            raise ValueError("need exactly one more breakpoint than values")

    @property
    def pieces(self) -> int:
        return len(self.values)

    def evaluate(self, x: Number) -> Number:
        bp = self.breakpoints
        if x < bp[0] or x > bp[-1]:
            return self._zero()
        i = min(bisect_right(bp, x) - 1, len(self.values) - 1)
        return self.values[i]

    def integral(self) -> Number:
        bp = self.breakpoints
        if self.beta.backend == "float":
            return math.fsum(v * (bp[i + 1] - bp[i]) for i, v in enumerate(self.values))
        total = self._zero()
        for i, v in enumerate(self.values):
            total = total + v * (bp[i + 1] - bp[i])
        return total

    def scaled(self, k) -> PiecewiseConstant:
        return PiecewiseConstant(self.beta, self.breakpoints, tuple(v * k for v in self.values))

    def simplify(self) -> PiecewiseConstant:
        """Drop breakpoints between equal-valued neighbours."""
        bp, vals = [self.breakpoints[0]], []
        for i, v in enumerate(self.values):
            if vals and vals[-1] == v:
                bp[-1] = self.breakpoints[i + 1]
            else:
                vals.append(v)
                bp.append(self.breakpoints[i + 1])
        return PiecewiseConstant(self.beta, tuple(bp), tuple(vals))

    def _zero(self):
        return self.beta.zero if self.beta.backend == "quadratic" else 0.0

    def as_arrays(self):
        return np.array([float(b) for b in self.breakpoints]), np.array([float(v) for v in self.values])


def _sorted_unique(points: Sequence, beta: BetaParam) -> list:
    if beta.backend == "quadratic":
        return sorted(set(points))
    arr = np.sort(np.asarray(points, dtype=np.float64))
    if len(arr) > 1:
        keep = np.concatenate([[True], np.diff(arr) > beta.tau])
        arr = arr[keep]
    return arr.tolist()


def _check_budget(n_pieces: int, budget: int):
    if n_pieces > budget:
        raise PieceBudgetExceeded(f"{n_pieces} pieces exceed budget {budget}")


def indicator_density(beta: BetaParam) -> PiecewiseConstant:
    """The uniform density ``(beta-1)`` on ``I_beta``."""
    h = beta.right.inverse() if beta.backend == "quadratic" else beta.value - 1.0
    return PiecewiseConstant(beta, (beta.zero, beta.right), (h,))


def from_function(beta: BetaParam, breakpoints: Sequence, fn: Callable) -> PiecewiseConstant:
    """Sample ``fn`` at piece midpoints of the sorted, deduplicated grid."""
    bp = _sorted_unique(breakpoints, beta)
    vals = tuple(fn((bp[i] + bp[i + 1]) / 2) for i in range(len(bp) - 1))
    return PiecewiseConstant(beta, tuple(bp), vals)


def apply_P(f: PiecewiseConstant, *, budget: int = DEFAULT_PIECE_BUDGET) -> PiecewiseConstant:
    beta = f.beta
    lo, hi = f.breakpoints[0], f.breakpoints[-1]
    if beta.cmp(lo, 0) < 0 or beta.cmp(hi, beta.right) > 0:
        raise SupportViolation(f"support [{float(lo)}, {float(hi)}] not inside I_beta")
    if beta.backend == "float":
        return _apply_P_float(f, budget)
    new = [beta.div_beta(b) for b in f.breakpoints] + [beta.div_beta(b + 1) for b in f.breakpoints]
    bp = [b for b in _sorted_unique(new, beta) if beta.in_interval(b)]
    # P of a function supported inside I_beta is supported inside I_beta; keep
    # the grid spanning all of it so densities share one domain.
    if bp[0] != beta.zero:
        bp.insert(0, beta.zero)
    if bp[-1] != beta.right:
        bp.append(beta.right)
    _check_budget(len(bp) - 1, budget)
    half_beta = beta.beta / 2
    vals = []
    for i in range(len(bp) - 1):
        y = beta.mul_beta((bp[i] + bp[i + 1]) / 2)
        vals.append(half_beta * (f.evaluate(y) + f.evaluate(y - 1)))
    return PiecewiseConstant(beta, tuple(bp), tuple(vals))


def _apply_P_float(f: PiecewiseConstant, budget: int) -> PiecewiseConstant:
    beta = f.beta
    b = beta.value
    old_bp = np.asarray(f.breakpoints, dtype=np.float64)
    old_v = np.asarray(f.values, dtype=np.float64)
    new = np.concatenate([old_bp / b, (old_bp + 1.0) / b, [0.0, beta.right]])
    new = new[(new >= 0.0) & (new <= beta.right)]
    bp = np.asarray(_sorted_unique(new, beta))
    bp[0], bp[-1] = 0.0, beta.right
    _check_budget(len(bp) - 1, budget)
    y = b * (bp[:-1] + bp[1:]) / 2.0

    def ev(t):
        idx = np.searchsorted(old_bp, t, side="right") - 1
        idx = np.clip(idx, 0, len(old_v) - 1)
        inside = (t >= old_bp[0]) & (t <= old_bp[-1])
        return np.where(inside, old_v[idx], 0.0)

    vals = (b / 2.0) * (ev(y) + ev(y - 1.0))
    return PiecewiseConstant(beta, tuple(bp.tolist()), tuple(vals.tolist()))


def iterate_f_n(beta: BetaParam, n: int, *, budget: int = DEFAULT_PIECE_BUDGET) -> PiecewiseConstant:
    """``f_n = P^n((beta-1) 1_{I_beta})``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    f = indicator_density(beta)
    for _ in range(n):
        f = apply_P(f, budget=budget)
    return f


def integral(f: PiecewiseConstant) -> Number:
    return f.integral()


def merged_grid(f: PiecewiseConstant, g: PiecewiseConstant, *, budget: int = DEFAULT_PIECE_BUDGET) -> list:
    grid = _sorted_unique(list(f.breakpoints) + list(g.breakpoints), f.beta)
    _check_budget(len(grid) - 1, budget)
    return grid


def combine(f: PiecewiseConstant, g: PiecewiseConstant, op: Callable, *, budget: int = DEFAULT_PIECE_BUDGET) -> PiecewiseConstant:
    """Pointwise ``op(f, g)`` on the common refinement."""
    grid = merged_grid(f, g, budget=budget)
    vals = []
    for i in range(len(grid) - 1):
        m = (grid[i] + grid[i + 1]) / 2
        vals.append(op(f.evaluate(m), g.evaluate(m)))
    return PiecewiseConstant(f.beta, tuple(grid), tuple(vals))


def l1_distance(f: PiecewiseConstant, g: PiecewiseConstant, *, budget: int = DEFAULT_PIECE_BUDGET) -> Number:
    return combine(f, g, lambda u, v: abs(u - v), budget=budget).integral()


def density_estimate(beta: BetaParam, n: int, *, budget: int = DEFAULT_PIECE_BUDGET) -> PiecewiseConstant:
    """``f_n`` renormalised to integral one: the level-n estimate of the
    Bernoulli convolution density."""
    f = iterate_f_n(beta, n, budget=budget)
    total = f.integral()
    if beta.backend == "quadratic":
        return f.scaled(total.inverse()) if total != 1 else f
    return f.scaled(1.0 / total)


def tail_envelope(x, beta: BetaParam, n_max: int, window: float = 0.5) -> tuple:
    """(max, min) of ``f_n(x)`` over the tail window of ``1..n_max``."""
    rep = growth_sequence(x, beta, n_max, window=window, cap=max(n_max, 30))
    return rep.tail_max_f, rep.tail_min_f


@dataclass
class ConvergenceReport:
    n_max: int
    tail_start: int
    sequences: list        # per sample: [f_1(x), ..., f_n_max(x)]
    oscillations: list     # per sample: max - min over the tail window
    median_oscillation: float
    mean_oscillation: float
    max_oscillation: float
    label: str = "exploratory: pointwise convergence of f_n is conjectural"


def convergence_diagnostic(beta: BetaParam, x_samples: Sequence, n_max: int, window: float = 0.5) -> ConvergenceReport:
    start = tail_start(n_max, window)
    seqs, osc = [], []
    for x in x_samples:
        rep = growth_sequence(x, beta, n_max, window=window, cap=max(n_max, 30))
        seq = [float(r.f_n_value) for r in rep.results]
        seqs.append(seq)
        tail = seq[start - 1:]
        osc.append(max(tail) - min(tail))
    return ConvergenceReport(
        n_max,
        start,
        seqs,
        osc,
        statistics.median(osc) if osc else 0.0,
        statistics.fmean(osc) if osc else 0.0,
        max(osc) if osc else 0.0,
    )


def _exact_cols(v: QuadNumber) -> list:
    return [v.p.numerator, v.p.denominator, v.q.numerator, v.q.denominator]


def density_to_csv(f: PiecewiseConstant, digits: int = 17, exact: bool = False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["left", "right", "value"]
    exact = exact and f.beta.backend == "quadratic"
    if exact:
        for name in ("left", "right", "value"):
            header += [f"{name}_p_num", f"{name}_p_den", f"{name}_q_num", f"{name}_q_den"]
    w.writerow(header)
    bp = f.breakpoints
    for i, v in enumerate(f.values):
        row = [fmt_num(bp[i], digits), fmt_num(bp[i + 1], digits), fmt_num(v, digits)]
        if exact:
            row += _exact_cols(bp[i]) + _exact_cols(bp[i + 1]) + _exact_cols(v)
        w.writerow(row)
    return buf.getvalue()
