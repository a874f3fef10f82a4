"""Acceptance criteria, one test per criterion.

Each test records a single PASS/FAIL line that pytest prints in an
"acceptance criteria" section at the end of the run.
"""

import io
import math
import random
import time
from fractions import Fraction

from betacount.cli import main
from betacount.core import golden, make_beta
from betacount.counting import count_by_interval_oracle, count_prefixes, window_margin
from betacount.density import apply_P, combine, iterate_f_n, l1_distance
from betacount.garsia import build_nu_n, entropy, sum_set
from betacount.random_beta import bound_check, choice_tree_count

from conftest import ACCEPTANCE_LINES, random_piecewise


def record(k: int, ok: bool, detail: str):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {k}: {detail}"
    ACCEPTANCE_LINES[k] = line
    print(line)
    assert ok, line


def _betas_for_random_instances(r: random.Random):
    return [golden()] + [make_beta(r.uniform(1.01, 1.99)) for _ in range(5)]


def test_criterion_01_oracle_equivalence():
    t0 = time.perf_counter()
    r = random.Random(101)
    betas = _betas_for_random_instances(r)
    mismatches, resampled = [], 0
    for i in range(200):
        beta = r.choice(betas)
        n = r.randint(0, 14)
        x = beta.random_point(r)
        while beta.backend == "float" and window_margin(x, n, beta) <= beta.tau:
            x, resampled = beta.random_point(r), resampled + 1
        a, b = count_prefixes(x, n, beta).count, count_by_interval_oracle(x, n, beta)
        if a != b:
            mismatches.append((repr(beta), float(x), n, a, b))
    dt = time.perf_counter() - t0
    record(1, not mismatches and dt < 60,
           f"prefix counts equal the interval oracle on 200 instances "
           f"({len(mismatches)} mismatches, {resampled} resampled, {dt:.1f}s)")


def test_criterion_02_density_matches_counts():
    t0 = time.perf_counter()
    r = random.Random(102)
    worst, bad = 0.0, 0
    for beta in (golden(), make_beta(1.8)):
        exact = beta.backend == "quadratic"
        fs = [iterate_f_n(beta, n) for n in range(13)]
        for _ in range(100):
            x = beta.random_point(r)
            for n, f in enumerate(fs):
                bp = f.breakpoints
                if exact and x in bp:
                    continue
                if not exact and min(abs(x - b) for b in (bp[0], bp[-1])) < 1e-9:
                    continue
                want = (beta.beta - 1 if exact else beta.value - 1) * count_prefixes(x, n, beta).garsia_erdos
                got = f.evaluate(x)
                if exact:
                    bad += got != want
                else:
                    err = abs(got - want)
                    worst = max(worst, err)
                    bad += err > 1e-9
    dt = time.perf_counter() - t0
    record(2, bad == 0 and dt < 60,
           f"f_n from the operator equals the normalised count at 100 points, n<=12 "
           f"({bad} disagreements, worst float error {worst:.1e}, {dt:.1f}s)")


def test_criterion_03_normalisation():
    phi = golden()
    exact_ok = all(iterate_f_n(phi, n).integral() == 1 for n in range(13))
    worst = 0.0
    for b in (1.1, 1.3, 1.5, 1.8, 1.95):
        beta = make_beta(b)
        for n in range(11):
            worst = max(worst, abs(iterate_f_n(beta, n).integral() - 1.0))
    record(3, exact_ok and worst <= 1e-12,
           f"integral of f_n is exactly 1 for n<=12 (exact: {exact_ok}); "
           f"float worst deviation {worst:.1e} for n<=10")


def test_criterion_04_operator_properties():
    failures = []
    for spec in ((1, 1), 1.8):
        beta = make_beta(spec)
        exact = beta.backend == "quadratic"
        tol = 0 if exact else 1e-12
        r = random.Random(104)
        for i in range(50):
            f = random_piecewise(beta, r)
            g = combine(f, random_piecewise(beta, r), lambda u, v: u + v)
            Pf, Pg = apply_P(f), apply_P(g)
            if min(combine(Pg, Pf, lambda u, v: u - v).values) < -tol:
                failures.append((spec, i, "monotone"))
            k = beta.point(Fraction(r.randint(1, 40), r.randint(1, 9)))
            lhs, rhs = apply_P(f.scaled(k)).values, Pf.scaled(k).values
            if exact:
                ok = lhs == rhs
            else:
                ok = len(lhs) == len(rhs) and all(abs(a - b) <= 1e-12 * max(1.0, abs(b)) for a, b in zip(lhs, rhs))
            if not ok:
                failures.append((spec, i, "homogeneous"))
            if abs(Pf.integral() - f.integral()) > tol:
                failures.append((spec, i, "integral"))
            s, t = random_piecewise(beta, r, nonneg=False), random_piecewise(beta, r, nonneg=False)
            if l1_distance(apply_P(s), apply_P(t)) > l1_distance(s, t) + tol:
                failures.append((spec, i, "non-expansive"))
    record(4, not failures,
           f"operator is monotone, homogeneous, integral preserving and L1 non-expansive "
           f"on 50 random pairs per backend ({len(failures)} failures)")


def test_criterion_05_choice_tree():
    r = random.Random(105)
    betas = _betas_for_random_instances(r) + [make_beta((-1, 3))]
    bad = 0
    for _ in range(200):
        beta = r.choice(betas)
        x, n = beta.random_point(r), r.randint(0, 14)
        bad += choice_tree_count(x, n, beta) != count_prefixes(x, n, beta).count
    phi = golden()
    fixture = choice_tree_count(1, 2, phi)
    record(5, bad == 0 and fixture == 3,
           f"choice-tree integral equals the prefix count on 200 instances "
           f"({bad} mismatches); hand fixture gives {fixture}")


def test_criterion_06_entropy_fixtures():
    phi = golden()
    h1 = [entropy(build_nu_n(make_beta(s), 1)) for s in ((1, 1), 1.3, 1.8)]
    m3 = build_nu_n(phi, 3)
    masses = sorted(m3.masses)
    sizes_ok = all(len(sum_set(phi, n)) == 2**n for n in range(0, 3)) and all(
        len(sum_set(phi, n)) < 2**n for n in range(3, 19))
    ok = (
        all(h == math.log(2) for h in h1)
        and entropy(m3) == 2.75 * math.log(2)
        and len(m3) == 7
        and masses == [Fraction(1, 8)] * 6 + [Fraction(1, 4)]
        and sizes_ok
    )
    record(6, ok,
           f"H(nu_1)=ln 2, H(nu_phi,3)=2.75 ln 2 with 7 atoms, |D_n| pattern for n<=18 "
           f"(H3={entropy(m3)!r})")


def test_criterion_07_pisot_gap_shadow():
    t0 = time.perf_counter()
    phi = golden()
    r = random.Random(42)
    rates = [count_prefixes(phi.random_point(r), 18, phi).log_rate for _ in range(100)]
    mean = math.fsum(rates) / len(rates)
    bound = math.log(2 / phi.value) - 0.01
    dt = time.perf_counter() - t0
    record(7, mean <= bound and dt < 120,
           f"mean (1/18) ln N_18 over 100 x is {mean:.5f}; required <= ln(2/phi) - 0.01 = {bound:.5f} "
           f"(ln(2/phi) = {math.log(2 / phi.value):.5f}, {dt:.1f}s)")


def test_criterion_08_lower_growth_bound():
    t0 = time.perf_counter()
    parts, ok = [], True
    for spec in ((1, 1), 1.3, 1.5, 1.8):
        beta = make_beta(spec)
        rep = bound_check(beta, 50, 18, slack=0.05, seed=42)
        ok = ok and rep.fraction >= 0.95
        name = "phi" if spec == (1, 1) else str(spec)
        parts.append(f"{name}: c={rep.c_beta:.4f} frac={rep.fraction:.2f}")
    dt = time.perf_counter() - t0
    record(8, ok and dt < 600,
           f"at least 95% of 50 x have (1/18) ln N_18 >= c - 0.05 for every beta "
           f"({'; '.join(parts)}; {dt:.0f}s)")


def test_criterion_09_local_mass_bound():
    phi = golden()
    r = random.Random(109)
    bad = 0
    for n, m in ((4, 10), (6, 12)):
        nu = build_nu_n(phi, m)
        ell = phi.window_length(n)
        for _ in range(20):
            x = phi.random_point(r)
            lhs = nu.mass_in(x - ell, x + ell)
            rhs = Fraction(count_prefixes(x, n, phi).count, 2**n)
            bad += lhs < rhs
    record(9, bad == 0,
           f"nu_m[x - l_n, x + l_n] >= N_n(x)/2^n exactly for (n,m) in {{(4,10),(6,12)}}, 20 x each "
           f"({bad} violations)")


def test_criterion_10_determinism(tmp_path):
    commands = [
        ["simulate", "--beta", "1.8", "--orbits", "400", "--steps", "2000"],
        ["simulate", "--beta-quad", "1,1", "--orbits", "400", "--steps", "2000"],
        ["bound", "--beta", "1.5", "--samples", "20", "--n", "14", "--orbits", "200", "--steps", "2000"],
        ["diagnose", "--beta-quad", "1,1", "--samples", "5", "--n", "12"],
    ]
    differing = []
    for ci, cmd in enumerate(commands):
        blobs = []
        for run, workers in enumerate(("1", "1", "4")):
            path = tmp_path / f"c{ci}_{run}.csv"
            argv = cmd + ["--seed", "42", "--out", str(path)]
            if cmd[0] != "diagnose":
                argv += ["--workers", workers]
            assert main(argv, out=io.StringIO()) == 0
            blobs.append(path.read_bytes())
        if any(b != blobs[0] for b in blobs):
            differing.append(cmd[0])
    record(10, not differing,
           f"seeded commands give byte-identical CSV across reruns and 1 vs 4 threads "
           f"({len(commands)} commands, differing: {differing or 'none'})")
