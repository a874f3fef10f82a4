import csv
import io
import itertools
import math
import random
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from betacount.core import FloatBeta, make_beta
from betacount.density import iterate_f_n
from betacount.errors import DepthExceeded
from betacount.garsia import (
    DiscreteMeasure,
    build_nu_n,
    clustering_profile,
    entropy,
    entropy_of_counts,
    entropy_table_to_csv,
    f_n_from_sums,
    garsia_ratio,
    measure_to_csv,
    profile_measure,
    sum_set,
)


def brute_measure(beta, n):
    """All 2^n word sums from a direct power sum, merged exactly."""
    pows = [beta.beta_pow(-i) for i in range(1, n + 1)]
    c = Counter()
    for w in itertools.product((0, 1), repeat=n):
        s = beta.zero
        for d, p in zip(w, pows):
            if d:
                s = s + p
        c[s] += 1
    return c


# -- construction -----------------------------------------------------------


def test_level_one(phi):
    m = build_nu_n(phi, 1)
    assert m.atoms == (phi.zero, phi.div_beta(1))
    assert m.masses == [Fraction(1, 2), Fraction(1, 2)]


def test_golden_level_three(phi):
    m = build_nu_n(phi, 3)
    assert len(m) == 7
    inv = phi.div_beta(1)
    # 100 and 011 coincide
    assert m.mass_in(inv, inv) == Fraction(1, 4)
    assert sorted(m.masses).count(Fraction(1, 8)) == 6


def test_float_generic_level_three():
    m = build_nu_n(make_beta(1.9), 3)
    assert len(m) == 8
    assert all(x == Fraction(1, 8) for x in m.masses)


@pytest.mark.parametrize("spec", [(1, 1), (-1, 3), (0, 2), (-2, 4)])
def test_matches_brute_force(spec):
    beta = make_beta(spec)
    for n in range(0, 11):
        m = build_nu_n(beta, n)
        want = brute_measure(beta, n)
        assert dict(zip(m.atoms, m.counts)) == dict(want)
        assert list(m.atoms) == sorted(want)
        assert m.denominator == 2**n


def test_float_matches_brute_force():
    beta = make_beta(1.7)
    for n in range(0, 11):
        m = build_nu_n(beta, n)
        sums = np.sort([sum(d * beta.value ** -(i + 1) for i, d in enumerate(w))
                        for w in itertools.product((0, 1), repeat=n)])
        assert len(m) == 2**n
        assert np.allclose(m.atoms, sums, atol=1e-13)


@pytest.mark.parametrize("spec", [(1, 1), (0, 3), 1.4])
def test_mass_is_conserved(spec):
    beta = make_beta(spec)
    for n in range(0, 17):
        assert build_nu_n(beta, n).total_mass == 1


def test_sum_set_sizes(phi):
    sizes = [len(sum_set(phi, n)) for n in range(1, 13)]
    assert sizes[:2] == [2, 4]
    assert all(s < 2**n for n, s in enumerate(sizes, 1) if n >= 3)
    assert sizes[11] == 609
    beta = make_beta(1.9)
    assert [len(sum_set(beta, n)) for n in range(1, 15)] == [2**n for n in range(1, 15)]


def test_sum_set_atoms_live_in_interval(phi):
    for n in (5, 10):
        atoms = sum_set(phi, n)
        assert atoms[0] == 0
        assert atoms[-1] == phi.right - phi.window_length(n)


def test_depth_cap(phi):
    with pytest.raises(DepthExceeded):
        build_nu_n(phi, 25)
    with pytest.raises(DepthExceeded):
        build_nu_n(phi, -1)


def test_suspicious_merges_are_flagged():
    clean = build_nu_n(make_beta(1.9), 12)
    assert not clean.suspicious_merges
    coarse = build_nu_n(FloatBeta(1.9, tau=1e-3), 12)
    assert coarse.suspicious_merges
    assert len(coarse) < 2**12


def test_mass_in_closed_interval(phi):
    m = build_nu_n(phi, 4)
    assert m.mass_in(phi.zero, phi.right) == 1
    assert m.mass_in(phi.zero, phi.zero) == Fraction(1, 16)
    beta = make_beta(1.5)
    mf = build_nu_n(beta, 2)
    assert mf.mass_in(0.0, 1 / 1.5) == Fraction(3, 4)


# -- entropy ----------------------------------------------------------------


def test_entropy_examples(phi):
    assert entropy(build_nu_n(phi, 1)) == math.log(2)
    assert entropy(build_nu_n(phi, 3)) == 2.75 * math.log(2)
    assert garsia_ratio(phi, 3).rows[2][2] == pytest.approx(0.6354, abs=1e-4)
    assert entropy_of_counts([1, 1, 1, 1]) == pytest.approx(math.log(4))
    assert entropy_of_counts([5]) == 0


def test_entropy_bounds_and_subadditivity(phi):
    hs = [entropy(build_nu_n(phi, n)) for n in range(0, 17)]
    for n, h in enumerate(hs):
        assert 0 <= h <= n * math.log(2) + 1e-12
    for m in range(0, 9):
        for n in range(0, 9):
            assert hs[m + n] <= hs[m] + hs[n] + 1e-12


def test_entropy_is_full_for_generic_beta():
    beta = make_beta(1.9)
    for n in range(1, 13):
        assert entropy(build_nu_n(beta, n)) == pytest.approx(n * math.log(2), rel=1e-12)


def test_garsia_table_for_phi(phi):
    t = garsia_ratio(phi, 18)
    ratios = [r[2] for r in t.rows]
    assert ratios[0] == pytest.approx(math.log(2))
    assert all(a >= b for a, b in zip(ratios[3:], ratios[4:]))
    assert t.non_increasing_from <= 4
    assert t.ln_beta == pytest.approx(math.log(phi.value))
    assert all(r > t.ln_beta for r in ratios)
    assert "non-increasing" in t.trend


def test_garsia_ratio_depth_cap(phi):
    with pytest.raises(DepthExceeded):
        garsia_ratio(phi, 25)


# -- clustering -------------------------------------------------------------


def test_single_window_profile(phi):
    p = clustering_profile(phi, 1, 1)
    assert p.distinct_counts == [2] and p.weighted_counts == [2]


def test_golden_three_profile_totals(phi):
    p = clustering_profile(phi, 3, 4)
    assert p.total_distinct == 7
    assert p.total_weighted == 8
    assert sum(p.normalized[i] * float(p.edges[i + 1] - p.edges[i]) for i in range(4)) == pytest.approx(1.0)


def test_uniform_measure_has_unit_dispersion():
    beta = make_beta(1.5)
    atoms = tuple((k + 0.5) / 10 * 2.0 for k in range(10))
    m = DiscreteMeasure(beta, atoms, (1,) * 10, 10)
    p = profile_measure(m, 10)
    assert p.weighted_counts == [1] * 10
    assert p.dispersion == 1.0


def test_clustering_window_count_must_be_positive(phi):
    with pytest.raises(ValueError):
        clustering_profile(phi, 3, 0)


# -- f_n from sum sets ------------------------------------------------------


@pytest.mark.parametrize("n", [0, 1, 4, 8, 11])
def test_sum_set_rebuilds_f_n_exactly(phi, n):
    assert f_n_from_sums(phi, n).simplify() == iterate_f_n(phi, n).simplify()


@pytest.mark.parametrize("b", [1.3, 1.8])
def test_sum_set_rebuilds_f_n_float(b):
    beta = make_beta(b)
    r = random.Random(0)
    for n in (3, 7, 10):
        f, g = f_n_from_sums(beta, n), iterate_f_n(beta, n)
        for _ in range(200):
            x = r.uniform(0, beta.right)
            assert f.evaluate(x) == pytest.approx(g.evaluate(x), rel=1e-9)


# -- CSV --------------------------------------------------------------------


def test_measure_csv(phi):
    rows = list(csv.reader(io.StringIO(measure_to_csv(build_nu_n(phi, 3)))))
    assert rows[0] == ["atom", "mass_num", "mass_den"]
    assert len(rows) == 8
    assert sum(Fraction(int(r[1]), int(r[2])) for r in rows[1:]) == 1
    assert ["0.61803398874989485", "1", "4"] in rows


def test_entropy_csv(phi):
    rows = list(csv.reader(io.StringIO(entropy_table_to_csv(garsia_ratio(phi, 3)))))
    assert rows[0] == ["n", "H", "H_over_n", "ln_beta"]
    assert [r[0] for r in rows[1:]] == ["1", "2", "3"]
    assert float(rows[3][1]) == pytest.approx(2.75 * math.log(2))
