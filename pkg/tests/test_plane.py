import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from facloc.plane import (
    ConvergenceError,
    TriangleInstance,
    demo_optimal_not_sp,
    fermat_point,
    fermat_point_closed,
    fermat_sc,
    mm_ratio_bound_check,
    mm_worst_ratio_search,
    multi_median,
    sc_direct,
    social_cost,
    weiszfeld,
    weiszfeld_batch,
)

SQRT54 = math.sqrt(5 / 4)


class TestMultiMedian:
    def test_paper_instance(self):
        assert multi_median([(0, 0), (1, 0.5), (2, 0)]).tolist() == [1, 0]

    def test_all_equal(self):
        assert multi_median([(3, -1)] * 4).tolist() == [3, -1]

    def test_lower_median(self):
        assert multi_median([(0, 0), (1, 1), (2, 2), (3, 3)]).tolist() == [1, 1]

    def test_sampled_strategyproofness(self):
        rng = np.random.default_rng(1)
        P = rng.normal(size=(1000, 3, 2))
        devs = rng.normal(scale=2.0, size=(100, 2))
        for agent in range(3):
            truthful = np.sort(P, axis=1)[:, 1, :]
            gap_t = np.abs(truthful - P[:, agent, :])
            for d in devs:
                Q = P.copy()
                Q[:, agent, :] = d
                out = np.sort(Q, axis=1)[:, 1, :]
                gap = np.abs(out - P[:, agent, :])
                # coordinatewise, and hence in Euclidean distance, no agent gets closer
                assert (gap >= gap_t - 1e-12).all()


class TestFermat:
    def test_obtuse_paper_instance(self):
        assert fermat_sc((2, 0), (1, 0.5), (0, 0)) == pytest.approx(2 * SQRT54, abs=1e-12)
        assert fermat_point([(2, 0), (1, 0.5), (0, 0)]).tolist() == [1, 0.5]

    def test_equilateral(self):
        tri = [(0, 0), (1, 0), (0.5, math.sqrt(3) / 2)]
        assert fermat_sc(*tri) == pytest.approx(math.sqrt(3), abs=1e-12)
        assert np.allclose(fermat_point(tri), np.mean(tri, axis=0), atol=1e-9)

    def test_collinear(self):
        assert fermat_sc((0, 0), (1, 0), (2, 0)) == pytest.approx(2)

    def test_coincident_pair(self):
        assert fermat_sc((0, 0), (0, 0), (3, 4)) == pytest.approx(5)

    def test_random_triangles_against_weiszfeld(self):
        rng = np.random.default_rng(0)
        T = rng.uniform(-1, 1, size=(1000, 3, 2))
        formula = fermat_sc(T[:, 0], T[:, 1], T[:, 2])
        numeric = np.array([social_cost(t, weiszfeld(t)) for t in T])
        assert np.max(np.abs(formula - numeric)) <= 1e-6
        # both branches were exercised
        closed = fermat_point_closed(T[:, 0], T[:, 1], T[:, 2])
        at_vertex = np.isclose(closed[:, None, :], T).all(axis=2).any(axis=1)
        assert at_vertex.any() and (~at_vertex).any()

    def test_closed_form_point(self):
        rng = np.random.default_rng(5)
        for t in rng.uniform(-1, 1, size=(200, 3, 2)):
            z = fermat_point_closed(t[0], t[1], t[2])
            assert social_cost(t, z) == pytest.approx(fermat_sc(*t), abs=1e-9)

    def test_weiszfeld_non_convergence(self):
        with pytest.raises(ConvergenceError):
            weiszfeld([(0, 0), (1, 0), (0, 1), (5, 5)], max_iter=1)

    def test_batch_matches_single(self):
        rng = np.random.default_rng(2)
        P = rng.normal(size=(50, 5, 3))
        batch = weiszfeld_batch(P, tol=1e-12)
        single = np.array([weiszfeld(p) for p in P])
        assert np.allclose(batch, single, atol=1e-8)


@pytest.fixture(scope="module")
def unrestricted():
    return mm_worst_ratio_search()


class TestSearch:
    def test_sqrt_five_quarters(self, unrestricted):
        ratio, inst = unrestricted
        assert 1.1179 <= ratio <= 1.1181
        assert max(abs(inst.x - 0.5), abs(inst.y - 1), abs(inst.z)) <= 0.02
        assert ratio <= math.sqrt(2)

    def test_non_obtuse_case(self):
        ratio, inst = mm_worst_ratio_search(restrict_non_obtuse=True)
        assert ratio < SQRT54 - 1e-4
        assert max(abs(inst.x - 1 / math.sqrt(3)), abs(inst.y - 1), abs(inst.z)) <= 0.02

    def test_equilateral_ratio_above_one(self):
        # B = (1, 1/sqrt3) and A = (1, -1/sqrt3) make an equilateral triangle with C
        inst = TriangleInstance(1 / math.sqrt(3), 0.0, 1 / math.sqrt(3))
        assert inst.a == pytest.approx(inst.b) == pytest.approx(inst.c)
        assert inst.ratio() > 1

    def test_mm_cost_formula(self, unrestricted):
        rng = np.random.default_rng(4)
        insts = [unrestricted[1]] + [TriangleInstance(*v) for v in rng.uniform(0, 2, size=(200, 3))]
        for inst in insts:
            assert inst.mm_cost() == pytest.approx(sc_direct(inst), abs=1e-12)
            assert multi_median(inst.vertices).tolist() == [1, 0]

    def test_bad_step(self):
        with pytest.raises(ValueError):
            mm_worst_ratio_search(grid_step=0)

    @given(st.floats(0, 2), st.floats(0, 2), st.floats(0, 2))
    def test_edge_lengths(self, x, y, z):
        inst = TriangleInstance(x, y, z)
        A, B, C = inst.A, inst.B, inst.C
        assert inst.a == pytest.approx(np.linalg.norm(B - C))
        assert inst.b == pytest.approx(np.linalg.norm(A - B))
        assert inst.c == pytest.approx(np.linalg.norm(A - C))


class TestBounds:
    def test_one_dimension(self):
        assert mm_ratio_bound_check(1, trials=2000) == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("D", [2, 3])
    def test_sqrt_d(self, D):
        assert mm_ratio_bound_check(D, trials=2000) <= math.sqrt(D) + 1e-6

    def test_range(self):
        with pytest.raises(ValueError):
            mm_ratio_bound_check(5)


class TestManipulation:
    def test_demo(self):
        demo = demo_optimal_not_sp()
        assert demo.gain > 1e-6
        A, B, C = (np.array(p) for p in demo.profile)
        truthful = fermat_point([A, B, C])
        lied = fermat_point([A, B, np.array(demo.deviation)])
        assert np.linalg.norm(truthful - C) - np.linalg.norm(lied - C) == pytest.approx(demo.gain, abs=1e-9)
        # the outcome really is the optimum of the misreported profile
        assert social_cost([A, B, demo.deviation], lied) == pytest.approx(fermat_sc(A, B, np.array(demo.deviation)), abs=1e-9)
