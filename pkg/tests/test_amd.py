import itertools
from fractions import Fraction as F

import numpy as np
import pytest
from scipy.optimize import linprog

from facloc.amd import (
    AmdFlags,
    build_lp,
    dictator_basis,
    expand_table,
    export_lp,
    parse_mps,
    solve_optimal_mechanism,
    table_values,
)
from facloc.lpsolve import simplex_solve, to_standard_form
from facloc.mechanisms import UnsupportedError, make_rd
from facloc.metric import InvalidSpaceError, Profile, fig4_graph, make_circle, star_graph
from facloc.verification import check_strategyproof, worst_ratio_of_table

FLAG_SETS = ["", "peaks_only", "fix_first_agent", "anonymity_links", "fix_first_agent,anonymity_links",
             "fix_first_agent,anonymity_links,merge", "peaks_only,fix_first_agent,anonymity_links,merge"]


def solve_linear(A, b):
    """Exact Gauss-Jordan; ``None`` when singular."""
    n = len(A)
    M = [list(r) + [v] for r, v in zip(A, b)]
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            return None
        M[col], M[piv] = M[piv], M[col]
        for r in range(n):
            if r != col and M[r][col]:
                f = M[r][col] / M[col][col]
                M[r] = [x - f * y for x, y in zip(M[r], M[col])]
    return [M[i][n] / M[i][i] for i in range(n)]


def vertex_enumeration_optimum(model):
    """Minimum of the model's objective over its vertices, by brute force."""
    n = model.num_vars
    eqs = [(r.coeffs, r.rhs) for r in model.rows if r.rel == "=" and r.coeffs]
    ineqs = {}
    for r in model.rows:
        if r.rel != "=" and any(r.coeffs.values()):
            sgn = 1 if r.rel == "<=" else -1
            key = tuple(sgn * r.coeffs.get(j, 0) for j in range(n)) + (sgn * r.rhs,)
            ineqs[key] = None
    for j in range(n):
        ineqs[tuple(-F(int(i == j)) for i in range(n)) + (F(0),)] = None
    ineqs = list(ineqs)
    dense_eq = [[c.get(j, F(0)) for j in range(n)] for c, _ in eqs]
    best = None
    for tight in itertools.combinations(ineqs, n - len(eqs)):
        x = solve_linear(dense_eq + [list(t[:n]) for t in tight], [b for _, b in eqs] + [t[n] for t in tight])
        if x is None or any(sum(a * v for a, v in zip(t[:n], x)) > t[n] for t in ineqs):
            continue
        val = model.objective_value(x)
        best = val if best is None or val < best else best
    return best


class TestBuild:
    def test_c4_counts(self):
        s = build_lp(make_circle(4)).stats
        assert (s["profiles"], s["variables"]) == (64, 257)
        assert (s["probability_rows"], s["incentive_rows"], s["approximation_rows"]) == (64, 768, 64)

    def test_fig4_counts(self):
        s = build_lp(fig4_graph()).stats
        assert s["variables"] == 6**4 + 1 and s["rows"] > 3 * 6**4

    def test_c6_reduced(self):
        model = build_lp(make_circle(6), 3, AmdFlags.parse("peaks_only,fix_first_agent"))
        assert model.stats["profiles"] <= 36
        per_profile = {}
        for meta in model.var_meta[1:]:
            per_profile[meta[0]] = per_profile.get(meta[0], 0) + 1
        assert max(per_profile.values()) <= 3 and model.var_meta[0] == "alpha"

    def test_every_variable_in_one_probability_row(self):
        model = build_lp(make_circle(4), 3, AmdFlags.parse("antipodal"))
        seen = {}
        for row, kind in zip(model.rows, model.row_kinds):
            if kind == "probability":
                for j in row.coeffs:
                    seen[j] = seen.get(j, 0) + 1
        assert set(seen) == set(range(1, model.num_vars)) and set(seen.values()) == {1}

    @pytest.mark.parametrize("flags", FLAG_SETS + ["antipodal", "antipodal,fix_first_agent"])
    def test_random_dictator_feasible(self, flags):
        sp = make_circle(4)
        model = build_lp(sp, 3, AmdFlags.parse(flags))
        rd = make_rd()
        table = {a: rd(Profile(sp, a)) for a in sp.profiles(3)}
        x = table_values(model, table, F(4, 3))
        assert all(v == 0 for v in model.residuals(x))

    def test_degenerate_profile_forces_point_mass(self):
        model = build_lp(make_circle(3))
        row = next(r for r in model.rows if r.name == "apx_0_0_0")
        assert model.ALPHA not in row.coeffs and row.rhs == 0

    @pytest.mark.parametrize("space,flags,err", [
        (make_circle(5), "antipodal", UnsupportedError),
        (star_graph(3), "fix_first_agent", InvalidSpaceError),
        (make_circle(5), "merge", ValueError),
    ])
    def test_flag_errors(self, space, flags, err):
        with pytest.raises(err):
            build_lp(space, 3, AmdFlags.parse(flags))

    def test_n_must_be_three(self):
        with pytest.raises(UnsupportedError):
            build_lp(make_circle(4), 2)

    def test_unknown_flag(self):
        with pytest.raises(ValueError):
            AmdFlags.parse("peaks_only,shiny")


class TestExport:
    def test_lp_text_names(self):
        text = export_lp(build_lp(make_circle(3)), "lp")
        names = [ln.split(":")[0].strip() for ln in text.splitlines() if ln.startswith(" prob_")]
        assert len(names) == 27 and names[0] == "prob_0_0_0"
        assert text.startswith("\\") and "Minimize" in text and text.rstrip().endswith("End")

    @pytest.mark.parametrize("space,expected", [(make_circle(4), 1.0), (fig4_graph(), 13 / 12)])
    def test_mps_round_trip_with_highs(self, space, expected):
        model = build_lp(space)
        c, rows, names, upper = parse_mps(export_lp(model, "mps"))
        n = len(names)
        assert names[0] == "alpha" and n == model.num_vars
        A_ub, b_ub, A_eq, b_eq = [], [], [], []
        for _, sense, coeffs, rhs in rows:
            dense = np.zeros(n)
            for j, v in coeffs.items():
                dense[j] = v
            if sense == "E":
                A_eq.append(dense), b_eq.append(rhs)
            elif sense == "L":
                A_ub.append(dense), b_ub.append(rhs)
            else:
                A_ub.append(-dense), b_ub.append(-rhs)
        cost = np.zeros(n)
        for j, v in c.items():
            cost[j] = v
        res = linprog(cost, A_ub=np.array(A_ub), b_ub=b_ub, A_eq=np.array(A_eq), b_eq=b_eq, method="highs")
        assert res.status == 0 and res.fun == pytest.approx(expected, abs=1e-6)


class TestSolve:
    def test_c3_peaks_only_against_vertex_enumeration(self):
        flags = AmdFlags.parse("peaks_only,fix_first_agent,anonymity_links,merge")
        model = build_lp(make_circle(3), 3, flags)
        reference = vertex_enumeration_optimum(model)
        assert reference == 1
        assert solve_optimal_mechanism(make_circle(3), 3, AmdFlags.parse("peaks_only")).alpha == reference

    @pytest.mark.parametrize("flags", FLAG_SETS)
    def test_c4_all_reductions_agree(self, flags):
        sol = solve_optimal_mechanism(make_circle(4), 3, AmdFlags.parse(flags))
        assert sol.alpha == 1
        assert sol.certificate["sp_violation"] is None and sol.certificate["table_ratio_matches"]

    def test_table_is_valid(self):
        sp = make_circle(5)
        sol = solve_optimal_mechanism(sp, 3, AmdFlags.parse("fix_first_agent,anonymity_links"))
        assert all(lot.is_valid() for lot in sol.table.values()) and len(sol.table) == 125
        from facloc.mechanisms import table_mechanism

        assert check_strategyproof(table_mechanism("t", sol.table), sp, 3) is None
        assert worst_ratio_of_table(sp, sol.table).worst_ratio == sol.alpha

    def test_star_graph(self):
        sol = solve_optimal_mechanism(star_graph(3))
        assert 1 <= sol.alpha <= F(4, 3) and sol.certificate["table_ratio_matches"]

    @pytest.mark.parametrize("M", [3, 4, 5])
    def test_float_matches_rational(self, M):
        a = solve_optimal_mechanism(make_circle(M), 3, mode="rational").alpha
        b = solve_optimal_mechanism(make_circle(M), 3, mode="float")
        assert abs(float(a) - b.alpha) <= 1e-6 and b.certificate["table_ratio_matches"]

    def test_dictator_crash_basis_is_feasible(self):
        model = build_lp(make_circle(5))
        sf = to_standard_form(model)
        sol = simplex_solve(sf, basis=dictator_basis(model, sf))
        assert sol.certificate["warm_start"] == "primal" and sol.objective == 1

    def test_no_crash_basis_with_links(self):
        model = build_lp(make_circle(4), 3, AmdFlags.parse("anonymity_links"))
        assert dictator_basis(model, to_standard_form(model)) is None

    def test_expand_table_inverts_table_values(self):
        sp = make_circle(4)
        model = build_lp(sp, 3, AmdFlags.parse("fix_first_agent,anonymity_links,merge"))
        sol = solve_optimal_mechanism(sp, 3, AmdFlags.parse("fix_first_agent,anonymity_links,merge"))
        assert expand_table(model, table_values(model, sol.table, sol.alpha)) == sol.table

    def test_json(self):
        sol = solve_optimal_mechanism(make_circle(3))
        js = sol.to_json()
        assert js["alpha"] == "1" and js["stats"]["variables"] == 82
        assert sol.table_json()["0_1_2"]
