from __future__ import annotations

import random
from fractions import Fraction

import pytest

from betacount.core import golden, make_beta
from betacount.density import PiecewiseConstant

# filled by tests/test_acceptance.py, printed at the end of the run
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture
def phi():
    return golden()


@pytest.fixture
def rng():
    return random.Random(12345)


EXACT_BETAS = [(1, 1), (-1, 3), (0, 2), (-2, 4)]
FLOAT_BETAS = [1.3, 1.5, 1.8, 1.9]


def all_betas():
    return [make_beta(s) for s in EXACT_BETAS] + [make_beta(s) for s in FLOAT_BETAS]


def random_piecewise(beta, rng: random.Random, max_pieces: int = 12, nonneg: bool = True) -> PiecewiseConstant:
    """Random piecewise-constant function spanning I_beta."""
    k = rng.randint(1, max_pieces)
    if beta.backend == "quadratic":
        cuts = sorted({Fraction(rng.randrange(1, 1 << 12), 1 << 12) for _ in range(k - 1)})
        bp = [beta.zero] + [beta.right * c for c in cuts] + [beta.right]
        lo = 0 if nonneg else -32
        vals = [beta.point(Fraction(rng.randint(lo, 64), 16)) for _ in range(len(bp) - 1)]
    else:
        cuts = sorted({rng.uniform(0.0, beta.right) for _ in range(k - 1)})
        bp = [0.0] + cuts + [beta.right]
        lo = 0.0 if nonneg else -2.0
        vals = [rng.uniform(lo, 4.0) for _ in range(len(bp) - 1)]
    return PiecewiseConstant(beta, tuple(bp), tuple(vals))
