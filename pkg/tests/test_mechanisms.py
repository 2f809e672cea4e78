import itertools
import random
from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from facloc.mechanisms import (
    UnsupportedError,
    antipodal_split,
    dictator,
    get_mechanism,
    make_median,
    make_pcd,
    make_pd,
    make_pd_general,
    make_qcd,
    make_rd,
    median_line,
    pcd_sp_status,
    split_to_antipodal,
    symmetrize,
    table_mechanism,
)
from facloc.metric import Lottery, Profile, agent_cost, arc_lengths, make_circle, make_path, social_cost, spider_graph, spider_tips, star_graph

from conftest import circle_profiles, graphs, random_connected_graph


def P(M, *locs):
    return Profile(make_circle(M), tuple(locs))


def probs_by_agent(prof, lot):
    return tuple(lot[a] for a in prof.locations)


class TestRandomDictator:
    def test_distinct(self):
        assert probs_by_agent(P(7, 0, 2, 5), make_rd()(P(7, 0, 2, 5))) == (F(1, 3),) * 3

    def test_coincident(self):
        lot = make_rd()(P(7, 1, 1, 4))
        assert (lot[1], lot[4]) == (F(2, 3), F(1, 3))

    def test_all_same_n5(self):
        assert make_rd()(P(7, *[3] * 5)) == Lottery.point_mass(3)


class TestPcd:
    def test_fig1(self):
        prof = P(14, 0, 2, 5)
        assert probs_by_agent(prof, make_pcd()(prof)) == (F(3, 14), F(9, 14), F(2, 14))

    def test_equilateral(self):
        prof = P(6, 0, 2, 4)
        assert probs_by_agent(prof, make_pcd()(prof)) == (F(1, 3),) * 3

    def test_c4(self):
        prof = P(4, 0, 1, 2)
        assert probs_by_agent(prof, make_pcd()(prof)) == (F(1, 4), F(1, 2), F(1, 4))

    def test_point_mass_when_coincident(self):
        assert make_pcd()(P(5, 2, 2, 2)) == Lottery.point_mass(2)

    def test_graph_rejected(self):
        with pytest.raises(UnsupportedError):
            make_pcd()(Profile(star_graph(3), (1, 2, 3)))

    def test_even_n_flagged(self):
        assert pcd_sp_status(3) == "proved" and pcd_sp_status(4) != "proved"


class TestQcd:
    def test_fig1(self):
        prof = P(14, 0, 2, 5)
        got = [float(p) for p in probs_by_agent(prof, make_qcd(F(1, 4))(prof))]
        assert got == pytest.approx([0.1161, 0.7677, 0.1161], abs=1e-4)

    def test_c4(self):
        prof = P(4, 0, 1, 2)
        assert probs_by_agent(prof, make_qcd(F(1, 4))(prof)) == (F(1, 6), F(2, 3), F(1, 6))

    @given(circle_profiles())
    def test_half_is_uniform_on_peaks(self, prof):
        # q = 1/2 floors every weight at 1/4, which is uniform whenever no
        # facing arc exceeds a half circle
        lot = make_qcd(F(1, 2))(prof)
        if len(set(prof.locations)) == 3 and max(arc_lengths(prof.space, prof.locations).facing) <= F(1, 2):
            assert probs_by_agent(prof, lot) == (F(1, 3),) * 3

    def test_wrong_n(self):
        with pytest.raises(UnsupportedError):
            make_qcd()(P(6, 0, 1, 2, 3, 4))

    @pytest.mark.parametrize("q", [F(-1, 10), F(3, 5)])
    def test_q_range(self, q):
        with pytest.raises(ValueError):
            make_qcd(q)

    def test_registry(self):
        assert get_mechanism("qcd:q=1/5")(P(4, 0, 1, 2)) == make_qcd(F(1, 5))(P(4, 0, 1, 2))
        with pytest.raises(KeyError):
            get_mechanism("nope")


class TestPd:
    def test_fig1(self):
        prof = P(14, 0, 2, 5)
        assert probs_by_agent(prof, make_pd()(prof)) == (F(3, 10), F(5, 10), F(2, 10))

    def test_appendix_graph(self):
        legs = (3, 2, 2)
        prof = Profile(spider_graph(legs), tuple(spider_tips(legs)))
        assert probs_by_agent(prof, make_pd()(prof)) == (F(4, 14), F(5, 14), F(5, 14))

    def test_two_coincide(self):
        assert make_pd()(P(9, 3, 3, 7)) == Lottery.point_mass(3)

    def test_wrong_n(self):
        with pytest.raises(UnsupportedError):
            make_pd()(P(6, 0, 1))

    @pytest.mark.parametrize("M", range(3, 11))
    def test_general_matches_pd(self, M):
        sp = make_circle(M)
        pd, pg = make_pd(), make_pd_general()
        for a in sp.profiles(3):
            prof = Profile(sp, a)
            assert pd(prof) == pg(prof)

    def test_general_n2(self):
        assert probs_by_agent(P(6, 0, 2), make_pd_general()(P(6, 0, 2))) == (F(1, 2), F(1, 2))

    def test_general_n5(self):
        lot = make_pd_general()(P(10, 0, 1, 2, 3, 4))
        assert lot.is_valid() and lot.support <= {0, 1, 2, 3, 4}


class TestMedian:
    @pytest.mark.parametrize("xs,med", [((0, 3, 7), 3), ((5, 5, 9), 5), ((1, 2, 3, 4), 2)])
    def test_median_line(self, xs, med):
        assert median_line(xs) == med

    def test_rule_on_path(self):
        assert make_median()(Profile(make_path(8), (6, 1, 4))) == Lottery.point_mass(4)


class TestValidity:
    @pytest.mark.parametrize("M", [3, 4, 7, 10])
    def test_every_mechanism_valid_and_peaks_only(self, M):
        sp = make_circle(M)
        mechs = [make_rd(), make_pcd(), make_qcd(), make_qcd(F(1, 5)), make_pd(), make_pd_general()]
        for a in sp.profiles(3):
            prof = Profile(sp, a)
            for mech in mechs:
                lot = mech(prof)
                assert lot.is_valid(), (mech.name, a)
                assert lot.support <= set(a), (mech.name, a)

    @given(graphs(max_m=7))
    def test_pd_dominates_rd_on_graphs(self, g):
        pd, rd = make_pd(), make_rd()
        for a in g.profiles(3):
            prof = Profile(g, a)
            assert social_cost(prof, pd(prof)) <= social_cost(prof, rd(prof))

    @pytest.mark.parametrize("M", [5, 8, 12])
    def test_pcd_dominates_pd(self, M):
        sp = make_circle(M)
        for a in sp.profiles(3):
            prof = Profile(sp, a)
            assert social_cost(prof, make_pcd()(prof)) <= social_cost(prof, make_pd()(prof))


def uniform_mechanism(M):
    return table_mechanism("uniform", {a: Lottery({z: F(1, M) for z in range(M)}) for a in make_circle(M).profiles(3)})


class TestAntipodalSplit:
    def test_fixed_point(self):
        sp = make_circle(8)
        f = antipodal_split(make_pcd(), sp)
        for a in sp.profiles(3):
            prof = Profile(sp, a)
            assert f(prof) == make_pcd()(prof)

    def test_midpoint_splits_evenly(self):
        # anchors at 0 and its antipode 4 on C_8; mass at 2 is halfway
        lot = split_to_antipodal(make_circle(8), (0, 0, 0), Lottery.point_mass(2))
        assert lot == Lottery({0: F(1, 2), 4: F(1, 2)})

    def test_costs_preserved_uniform(self):
        sp = make_circle(8)
        f = uniform_mechanism(8)
        g = antipodal_split(f, sp)
        for a in sp.profiles(3):
            prof = Profile(sp, a)
            lf, lg = f(prof), g(prof)
            anchors = set(a) | {(x + 4) % 8 for x in a}
            assert lg.support <= anchors
            assert all(agent_cost(prof, i, lf) == agent_cost(prof, i, lg) for i in range(3))

    def test_odd_rejected(self):
        with pytest.raises(UnsupportedError):
            antipodal_split(make_pcd(), make_circle(7))


class TestSymmetrize:
    def test_invariant_mechanism_unchanged(self):
        sp = make_circle(5)
        g = symmetrize(make_pcd(), sp)
        for a in list(sp.profiles(3))[:40]:
            prof = Profile(sp, a)
            assert g(prof) == make_pcd()(prof)

    def test_dictator_becomes_random_dictator(self):
        sp = make_circle(4)
        g = symmetrize(dictator(0), sp)
        for a in sp.profiles(2):
            prof = Profile(sp, a)
            assert g(prof) == make_rd()(prof)

    def test_anonymous_and_not_worse(self):
        sp = make_circle(6)
        rng = random.Random(3)
        table = {a: Lottery.from_weights({z: F(rng.randint(0, 3)) for z in range(6)} | {a[0]: F(1)})
                 for a in sp.profiles(3)}
        f = table_mechanism("random-table", table)
        g = symmetrize(f, sp)
        gt = {a: g(Profile(sp, a)) for a in sp.profiles(3)}
        for a in sp.profiles(3):
            for perm in itertools.permutations(a):
                assert gt[perm] == gt[a]
            rot = tuple((x + 1) % 6 for x in a)
            assert Lottery({(z + 1) % 6: p for z, p in gt[a].items()}) == gt[rot]
        sc = lambda t: max(social_cost(Profile(sp, a), t[a]) for a in t)
        assert sc(gt) <= sc(table)
