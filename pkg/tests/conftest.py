"""Shared strategies and helpers for the test suite."""
from __future__ import annotations

import os
import sys
import random
from fractions import Fraction

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from facloc.metric import make_graph

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", parent=settings.get_profile("default"), max_examples=200)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def random_connected_graph(rng: random.Random, m: int, max_len: int = 5, extra: float = 0.4):
    """Random spanning tree plus extra edges, rational lengths in (0, max_len]."""
    edges = []
    for v in range(1, m):
        edges.append((rng.randrange(v), v, Fraction(rng.randint(1, 4 * max_len), 4)))
    for u in range(m):
        for v in range(u + 1, m):
            if rng.random() < extra:
                edges.append((u, v, Fraction(rng.randint(1, 4 * max_len), 4)))
    return make_graph(m, edges, name=f"random{m}")


@st.composite
def graphs(draw, min_m: int = 2, max_m: int = 6):
    seed = draw(st.integers(0, 2**32 - 1))
    m = draw(st.integers(min_m, max_m))
    return random_connected_graph(random.Random(seed), m)


@st.composite
def circle_profiles(draw, min_M: int = 3, max_M: int = 12, n: int = 3):
    from facloc.metric import Profile, make_circle

    M = draw(st.integers(min_M, max_M))
    locs = tuple(draw(st.integers(0, M - 1)) for _ in range(n))
    return Profile(make_circle(M), locs)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
