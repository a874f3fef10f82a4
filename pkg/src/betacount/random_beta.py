"""The random beta-transformation K_beta and hitting numbers.

``K_beta`` acts on pairs (omega, x): below the switch region
``S = [1/beta, 1/(beta(beta-1))]`` it applies ``T_0``, above it ``T_1``, and
inside it reads the next bit of omega to choose. The hitting number
``h(omega, x, n)`` counts visits to S in n steps. Summing ``2^h`` against the
fair coin measure gives ``N_n(x; beta)``; the ergodic average ``h/n`` estimates
``mu_beta(S)`` and ``c(beta) = ln 2 * mu_beta(S)`` bounds the growth of
``N_n`` from below for almost every x.

Randomness comes from counter-based SplitMix64 streams: the k-th bit of a
stream depends only on (key, k). Per-orbit keys are a fixed function of
(seed, orbit index), so the Monte Carlo result is identical however the
orbits are split across threads.
"""

from __future__ import annotations

import csv
import io
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Union

import numpy as np

from .core import BetaParam, FloatBeta, Number, fmt_num
from .counting import DEFAULT_N_MAX, count_prefixes
from .errors import DepthExceeded, InvalidParams, OmegaExhausted, PointOutsideInterval

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
# separates the initial-point stream from the omega stream of an orbit
X_SALT = 0xD1B54A32D192ED03
DEFAULT_SEED = 42


def splitmix64(key: int, k: int) -> int:
    """k-th output (k >= 0) of a SplitMix64 generator seeded with ``key``."""
    z = (key + (k + 1) * GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def _splitmix64_np(keys: np.ndarray, k: np.ndarray) -> np.ndarray:
    z = keys + (k + np.uint64(1)) * np.uint64(GAMMA)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def orbit_key(seed: int, index: int) -> int:
    return splitmix64(seed & MASK64, index)


def initial_point(key: int, right: float) -> float:
    u = (splitmix64(key ^ X_SALT, 0) >> 11) * 2.0**-53
    return u * right


# -- omega sources ----------------------------------------------------------


@dataclass(frozen=True)
class ExplicitWord:
    bits: tuple
    cursor: int = 0

    def next_bit(self):
        if self.cursor >= len(self.bits):
            raise OmegaExhausted(f"omega word of length {len(self.bits)} exhausted")
        return self.bits[self.cursor], replace(self, cursor=self.cursor + 1)


@dataclass(frozen=True)
class SeededStream:
    """Fair bits ``splitmix64(seed, k) >> 63`` for k = 0, 1, ..."""

    seed: int
    cursor: int = 0

    def next_bit(self):
        return splitmix64(self.seed & MASK64, self.cursor) >> 63, replace(self, cursor=self.cursor + 1)


OmegaSource = Union[ExplicitWord, SeededStream]


@dataclass(frozen=True)
class SwitchRegion:
    lo: Number
    hi: Number


def switch_region(beta: BetaParam) -> SwitchRegion:
    return SwitchRegion(beta.switch_lo, beta.switch_hi)


@dataclass(frozen=True)
class OrbitState:
    x: Number
    omega: OmegaSource
    step_count: int = 0
    hit_count: int = 0
    digit_log: Optional[tuple] = None


def region(x: Number, beta: BetaParam) -> int:
    """0 below S, 1 inside S (closed), 2 above S.

    Decided as ``beta*x`` against ``1`` and ``1/(beta-1)``, which in the float
    backend puts the tau slack on the same side as the prefix counter's
    ``T_d(x) in I_beta`` test.
    """
    bx = beta.mul_beta(x)
    if beta.cmp(bx, 1) < 0:
        return 0
    if beta.cmp(bx, beta.right) <= 0:
        return 1
    return 2


def _clamp(x: Number, beta: BetaParam) -> Number:
    # rounding can push a float orbit just outside I_beta, and both ends are
    # repelling fixed points of the branch that reaches them
    if beta.backend == "float":
        return min(max(x, 0.0), beta.right)
    return x


def k_step(state: OrbitState, beta: BetaParam):
    """One application of K_beta; returns ``(new_state, digit)``."""
    x = state.x
    if not beta.in_interval(x):
        raise PointOutsideInterval(f"x={float(x)!r} left I_beta")
    r = region(x, beta)
    omega, hits = state.omega, state.hit_count
    if r == 0:
        d = 0
    elif r == 2:
        d = 1
    else:
        d, omega = omega.next_bit()
        hits += 1
    log = None if state.digit_log is None else state.digit_log + (d,)
    return OrbitState(_clamp(beta.T(d, x), beta), omega, state.step_count + 1, hits, log), d


def run_orbit(x, omega: OmegaSource, n: int, beta: BetaParam, log_digits: bool = True) -> OrbitState:
    s = OrbitState(beta.point(x), omega, 0, 0, () if log_digits else None)
    for _ in range(n):
        s, _ = k_step(s, beta)
    return s


def hitting_number(x, omega: OmegaSource, n: int, beta: BetaParam) -> int:
    return run_orbit(x, omega, n, beta, log_digits=False).hit_count


# -- exact choice tree ------------------------------------------------------


def choice_tree_leaves(x, n: int, beta: BetaParam, *, n_max: int = DEFAULT_N_MAX) -> list:
    """All (omega-prefix, digit word) leaves of the K_beta orbit tree at depth n.

    Each leaf carries m-mass ``2^-h`` and weight ``2^h``, so the integral of
    ``2^h`` is the number of leaves.
    """
    if n < 0 or n > n_max:
        raise DepthExceeded(f"n={n} outside [0, {n_max}]")
    x = beta.point(x)
    beta.check_in_interval(x)
    leaves = []
    stack = [(x, (), ())]
    while stack:
        y, om, w = stack.pop()
        if len(w) == n:
            leaves.append((om, w))
            continue
        r = region(y, beta)
        if r == 1:
            for bit in (1, 0):
                stack.append((_clamp(beta.T(bit, y), beta), om + (bit,), w + (bit,)))
        else:
            d = 0 if r == 0 else 1
            stack.append((_clamp(beta.T(d, y), beta), om, w + (d,)))
    return leaves


def choice_tree_count(x, n: int, beta: BetaParam, *, n_max: int = DEFAULT_N_MAX) -> int:
    """``sum over omega-prefixes of 2^h * 2^-h`` evaluated without sampling."""
    if n < 0 or n > n_max:
        raise DepthExceeded(f"n={n} outside [0, {n_max}]")
    x = beta.point(x)
    beta.check_in_interval(x)

    def walk(y, depth):
        while depth < n:
            r = region(y, beta)
            if r == 1:
                return walk(_clamp(beta.T(0, y), beta), depth + 1) + walk(_clamp(beta.T(1, y), beta), depth + 1)
            y = _clamp(beta.T(0 if r == 0 else 1, y), beta)
            depth += 1
        return 1

    return walk(x, 0)


# -- Monte Carlo ------------------------------------------------------------


@dataclass
class MuEstimate:
    beta_value: float
    seed: int
    orbit_count: int
    steps: int
    burn_in: int
    estimate: float
    std_error: float
    orbit_seeds: np.ndarray     # uint64 per-orbit keys
    hits: np.ndarray            # h(omega, x, steps)
    hit_rates: np.ndarray       # (h(steps) - h(burn_in)) / (steps - burn_in)

    @property
    def c_beta(self) -> float:
        return math.log(2) * self.estimate

    @property
    def c_beta_std_error(self) -> float:
        return math.log(2) * self.std_error


def _simulate_chunk(b: float, right: float, tau: float, keys: np.ndarray, steps: int, burn_in: int):
    x = (_splitmix64_np(keys ^ np.uint64(X_SALT), np.zeros_like(keys)) >> np.uint64(11)).astype(np.float64)
    x = x * 2.0**-53 * right
    hits = np.zeros(len(keys), dtype=np.uint64)
    hits_burn = hits.copy()
    for step in range(steps):
        if step == burn_in:
            hits_burn = hits.copy()
        bx = b * x
        # same expressions as BetaParam.cmp so scalar and vector orbits agree
        below = bx - 1.0 < -tau
        in_s = ~below & (bx - right <= tau)
        bits = (_splitmix64_np(keys, hits) >> np.uint64(63)).astype(np.float64)
        d = np.where(in_s, bits, np.where(below, 0.0, 1.0))
        hits += in_s.astype(np.uint64)
        x = np.minimum(np.maximum(bx - d, 0.0), right)
    if burn_in == steps:
        hits_burn = hits.copy()
    return hits.astype(np.int64), hits_burn.astype(np.int64)


def estimate_mu_S(
    beta: BetaParam,
    orbit_count: int = 10_000,
    steps: int = 10_000,
    burn_in: Optional[int] = None,
    seed: int = DEFAULT_SEED,
    workers: int = 1,
) -> MuEstimate:
    """Ergodic-average estimate of ``mu_beta(S)`` over independent orbits.

    Exact-backend betas are simulated in floating point.
    """
    if burn_in is None:
        burn_in = steps // 10
    if orbit_count < 2 or steps <= 0 or not (0 <= burn_in < steps) or workers < 1:
        raise InvalidParams(
            f"need orbit_count >= 2, steps > burn_in >= 0, workers >= 1; got "
            f"orbit_count={orbit_count}, steps={steps}, burn_in={burn_in}, workers={workers}"
        )
    fb = beta if beta.backend == "float" else FloatBeta(beta.value)
    keys = np.array([orbit_key(seed, i) for i in range(orbit_count)], dtype=np.uint64)
    chunks = np.array_split(keys, min(workers, orbit_count))
    run = lambda ks: _simulate_chunk(fb.value, fb.right, fb.tau, ks, steps, burn_in)  # noqa: E731
    if workers == 1:
        parts = [run(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(run, chunks))
    hits = np.concatenate([p[0] for p in parts])
    hits_burn = np.concatenate([p[1] for p in parts])
    rates = (hits - hits_burn) / float(steps - burn_in)
    mean = math.fsum(rates.tolist()) / orbit_count
    var = math.fsum(((rates - mean) ** 2).tolist()) / (orbit_count - 1)
    return MuEstimate(fb.value, seed, orbit_count, steps, burn_in, mean, math.sqrt(var / orbit_count), keys, hits, rates)


@dataclass
class CBeta:
    value: float
    std_error: float
    mu: MuEstimate


def c_beta(beta: BetaParam, **mc_params) -> CBeta:
    """``ln 2 * mu_beta(S)`` from ``estimate_mu_S(beta, **mc_params)``."""
    mu = estimate_mu_S(beta, **mc_params)
    return CBeta(mu.c_beta, mu.c_beta_std_error, mu)


@dataclass
class BoundReport:
    beta_value: float
    n: int
    c_beta: float
    slack: float
    samples: list
    log_rates: list
    margins: list          # log_rate - (c_beta - slack)
    fraction: float
    violations: list       # indices with negative margin


def bound_check(
    beta: BetaParam,
    x_sample_count: int,
    n: int,
    *,
    c: Optional[float] = None,
    slack: float = 0.05,
    seed: int = DEFAULT_SEED,
    samples: Optional[list] = None,
    mc_params: Optional[dict] = None,
) -> BoundReport:
    """Fraction of sampled x with ``(1/n) ln N_n(x) >= c(beta) - slack``.

    ``c`` is estimated with ``estimate_mu_S(beta, seed=seed, **mc_params)``
    unless given. Extra points in ``samples`` are checked as well (e.g. a forced
    ``x = 0``).
    """
    if n < 1:
        raise InvalidParams("n must be at least 1")
    if c is None:
        c = c_beta(beta, seed=seed, **(mc_params or {})).value
    rng = random.Random(seed)
    xs = [beta.random_point(rng) for _ in range(x_sample_count)]
    if samples:
        xs += [beta.point(s) for s in samples]
    rates = [count_prefixes(x, n, beta, n_max=max(n, DEFAULT_N_MAX)).log_rate for x in xs]
    margins = [r - (c - slack) for r in rates]
    bad = [i for i, m in enumerate(margins) if m < 0]
    frac = 1.0 - len(bad) / len(xs) if xs else math.nan
    return BoundReport(beta.value, n, c, slack, [float(x) for x in xs], rates, margins, frac, bad)


# -- CSV --------------------------------------------------------------------


def simulation_to_csv(est: MuEstimate, digits: int = 17) -> str:
    buf = io.StringIO()
    buf.write(f"# beta={fmt_num(est.beta_value, digits)} seed={est.seed} orbits={est.orbit_count} "
              f"steps={est.steps} burn_in={est.burn_in}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["orbit", "seed", "steps", "hits", "hit_rate"])
    for i in range(est.orbit_count):
        w.writerow([i, int(est.orbit_seeds[i]), est.steps, int(est.hits[i]), fmt_num(float(est.hit_rates[i]), digits)])
    w.writerow(["mu_S_estimate", "std_error", "c_beta"])
    w.writerow([fmt_num(est.estimate, digits), fmt_num(est.std_error, digits), fmt_num(est.c_beta, digits)])
    return buf.getvalue()


def bound_to_csv(rep: BoundReport, digits: int = 17) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["sample", "x", "log_rate", "margin", "ok"])
    for i, (x, r, m) in enumerate(zip(rep.samples, rep.log_rates, rep.margins)):
        w.writerow([i, fmt_num(x, digits), fmt_num(r, digits), fmt_num(m, digits), int(m >= 0)])
    w.writerow(["c_beta", "slack", "n", "fraction"])
    w.writerow([fmt_num(rep.c_beta, digits), fmt_num(rep.slack, digits), rep.n, fmt_num(rep.fraction, digits)])
    return buf.getvalue()
