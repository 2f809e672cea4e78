"""Exhaustive exact verifiers for strategyproofness, dominance and ratios.

Every check enumerates all ``m**n`` profiles lexicographically and compares
exact :class:`~fractions.Fraction` costs, so there are no tolerance issues.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .mechanisms import Mechanism, pcd
from .metric import (
    Lottery,
    MetricSpace,
    Profile,
    location_social_cost,
    make_circle,
    opt_cost,
    social_cost,
)

BUDGET = 10**8


class BudgetExceeded(RuntimeError):
    def __init__(self, required: int, budget: int = BUDGET):
        super().__init__(f"enumeration needs {required} evaluations, budget is {budget}")
        self.required = required
        self.budget = budget


@dataclass(frozen=True)
class SpViolation:
    profile: Profile
    agent: int
    deviation: int
    truthful_cost: Fraction
    deviating_cost: Fraction

    @property
    def gain(self) -> Fraction:
        return self.truthful_cost - self.deviating_cost

    def to_json(self) -> dict:
        return {
            "profile": list(self.profile.locations),
            "agent": self.agent,
            "deviation": self.deviation,
            "truthful_cost": str(self.truthful_cost),
            "deviating_cost": str(self.deviating_cost),
            "gain": str(self.gain),
        }


@dataclass(frozen=True)
class RatioReport:
    worst_ratio: Fraction | None
    witness_profile: Profile | None
    mechanism_sc: Fraction | None
    opt_sc: Fraction | None
    unbounded: bool = False

    def to_json(self) -> dict:
        return {
            "worst_ratio": None if self.worst_ratio is None else str(self.worst_ratio),
            "worst_ratio_float": None if self.worst_ratio is None else float(self.worst_ratio),
            "unbounded": self.unbounded,
            "witness": None if self.witness_profile is None else list(self.witness_profile.locations),
            "mechanism_sc": None if self.mechanism_sc is None else str(self.mechanism_sc),
            "opt_sc": None if self.opt_sc is None else str(self.opt_sc),
        }


@dataclass(frozen=True)
class DominanceReport:
    dominates: bool
    strict_witness: Profile | None
    counterexample: Profile | None

    def __bool__(self):
        return self.dominates

    def to_json(self) -> dict:
        return {
            "dominates": self.dominates,
            "strict_witness": None if self.strict_witness is None else list(self.strict_witness.locations),
            "counterexample": None if self.counterexample is None else list(self.counterexample.locations),
        }


def check_budget(space: MetricSpace, n: int, budget: int = BUDGET) -> None:
    required = space.m ** (n + 1) * n
    if required > budget:
        raise BudgetExceeded(required, budget)


def default_workers() -> int:
    return max(1, int(os.environ.get("FACLOC_WORKERS", "1")))


# ---------------------------------------------------------------- tables


class LotteryTable:
    """Lotteries and per-point expected costs of one mechanism on all profiles.

    Profiles are addressed by their lexicographic rank, so a unilateral
    deviation is an offset ``(p - a_i) * m**(n-1-i)``.
    """

    def __init__(self, mech: Mechanism, space: MetricSpace, n: int):
        self.space, self.n, self.m = space, n, space.m
        self.profiles = list(space.profiles(n))
        self.lotteries = [mech(Profile(space, a)) for a in self.profiles]
        D = space.dist
        pts = range(self.m)
        self.costs = [
            [sum((p * D[x][z] for z, p in lot.items()), Fraction(0)) for x in pts] for lot in self.lotteries
        ]
        self.strides = [self.m ** (n - 1 - i) for i in range(n)]

    def __len__(self):
        return len(self.profiles)

    def first_violation(self, lo: int = 0, hi: int | None = None, tol=0) -> tuple[int, int, int] | None:
        hi = len(self.profiles) if hi is None else hi
        costs, strides, m = self.costs, self.strides, self.m
        for idx in range(lo, hi):
            a = self.profiles[idx]
            row = costs[idx]
            for i, ai in enumerate(a):
                truthful = row[ai] - tol
                base = idx - ai * strides[i]
                s = strides[i]
                for p in range(m):
                    if p != ai and costs[base + p * s][ai] < truthful:
                        return idx, i, p
        return None


_SHARED: LotteryTable | None = None


def _worker_scan(bounds):
    return _SHARED.first_violation(*bounds)


def _scan_parallel(table: LotteryTable, workers: int, tol=0):
    global _SHARED
    if workers <= 1 or len(table) < 2 * workers:
        return table.first_violation(tol=tol)
    _SHARED = table
    step = math.ceil(len(table) / workers)
    chunks = [(lo, min(lo + step, len(table)), tol) for lo in range(0, len(table), step)]
    try:
        import multiprocessing as mp

        with ProcessPoolExecutor(workers, mp_context=mp.get_context("fork")) as pool:
            hits = [h for h in pool.map(_worker_scan, chunks) if h is not None]
    finally:
        _SHARED = None
    # chunks are ordered, so the first non-empty hit is the lexicographic minimum
    return hits[0] if hits else None


# ---------------------------------------------------------------- checks


def check_strategyproof(
    mech: Mechanism, space: MetricSpace, n: int, workers: int | None = None, budget: int = BUDGET, tol=0
) -> SpViolation | None:
    """First strict unilateral manipulation in lexicographic order, or ``None``.

    ``tol`` is zero for exact tables; float tables (LP solutions in float
    mode) need a gain larger than ``tol`` to count.
    """
    check_budget(space, n, budget)
    table = LotteryTable(mech, space, n)
    hit = _scan_parallel(table, workers or default_workers(), tol)
    if hit is None:
        return None
    idx, i, p = hit
    a = table.profiles[idx]
    dev_idx = idx + (p - a[i]) * table.strides[i]
    return SpViolation(
        Profile(space, a), i, p, table.costs[idx][a[i]], table.costs[dev_idx][a[i]]
    )


def find_manipulation(mech: Mechanism, profile: Profile, agent: int) -> tuple[int, Fraction] | None:
    """Best strictly profitable misreport of one agent, as ``(point, gain)``."""
    space = profile.space
    ai = profile.locations[agent]
    D = space.dist[ai]
    truthful = sum((p * D[z] for z, p in mech(profile).items()), Fraction(0))
    best = None
    for p in space.points:
        if p == ai:
            continue
        lot = mech(profile.deviate(agent, p))
        gain = truthful - sum((q * D[z] for z, q in lot.items()), Fraction(0))
        if gain > 0 and (best is None or gain > best[1]):
            best = (p, gain)
    return best


def _sc_all(mech: Mechanism, space: MetricSpace, n: int):
    for a in space.profiles(n):
        prof = Profile(space, a)
        yield prof, social_cost(prof, mech(prof))


def check_dominates(
    f: Mechanism, g: Mechanism, space: MetricSpace, n: int, budget: int = BUDGET
) -> DominanceReport:
    """``f`` dominates ``g``: never worse on any profile and strictly better on one."""
    check_budget(space, n, budget)
    strict = None
    for a in space.profiles(n):
        prof = Profile(space, a)
        sf, sg = social_cost(prof, f(prof)), social_cost(prof, g(prof))
        if sf > sg:
            return DominanceReport(False, strict, prof)
        if sf < sg and strict is None:
            strict = prof
    return DominanceReport(strict is not None, strict, None)


def worst_ratio(mech: Mechanism, space: MetricSpace, n: int, budget: int = BUDGET) -> RatioReport:
    """Largest ``SC/OPT`` over all profiles; first maximiser is the witness.

    Profiles with ``OPT = 0`` count as ratio 1 when the mechanism also has
    zero cost and make the ratio unbounded otherwise.
    """
    check_budget(space, n, budget)
    best: RatioReport | None = None
    for prof, sc in _sc_all(mech, space, n):
        opt, _ = opt_cost(prof)
        if opt == 0:
            if sc != 0:
                return RatioReport(None, prof, sc, opt, unbounded=True)
            ratio = Fraction(1)
        else:
            ratio = sc / opt
        if best is None or ratio > best.worst_ratio:
            best = RatioReport(ratio, prof, sc, opt)
    return best


def worst_ratio_of_table(space: MetricSpace, table: dict[tuple[int, ...], Lottery]) -> RatioReport:
    best = None
    for a in sorted(table):
        prof = Profile(space, a)
        sc = social_cost(prof, table[a])
        opt, _ = opt_cost(prof)
        if opt == 0:
            if sc != 0:
                return RatioReport(None, prof, sc, opt, unbounded=True)
            ratio = Fraction(1)
        else:
            ratio = sc / opt
        if best is None or ratio > best.worst_ratio:
            best = RatioReport(ratio, prof, sc, opt)
    return best


# ---------------------------------------------------------------- families


def qcd_family_ratio(x) -> Fraction:
    """Exact ratio of 1/4-QCD on the symmetric instance with distances (x, x, 1-2x)."""
    x = Fraction(x)
    if not 0 < x <= Fraction(1, 3):
        raise ValueError(f"x must lie in (0, 1/3], got {x}")
    if x >= Fraction(1, 4):
        return (1 - 3 * x + 3 * x * x) / (1 - 4 * x + 6 * x * x)
    w = (1 - 2 * x) ** 2
    return (Fraction(3, 16) + w) / (Fraction(2, 16) + w)


@dataclass(frozen=True)
class PcdFamilyReport:
    k: int
    n: int
    x: float
    social_cost: float
    opt: float
    ratio: float
    paper_lower_bound: float
    asymptotic_bound: float
    description: str

    def to_json(self) -> dict:
        return dict(self.__dict__)


def pcd_bad_family(k: int) -> PcdFamilyReport:
    """Closed-form PCD ratio on the three-cluster instance with ``n = 2k+1``.

    ``k`` agents sit at 0, ``k`` agents at arc ``x = 1/(4 sqrt k)`` clockwise,
    and one agent at 1/2.  The middle cluster is optimal.
    """
    if k < 1:
        raise ValueError("k must be positive")
    x = 1.0 / (4.0 * math.sqrt(k))
    sc = -2 * k * x * x + (2 * k - 1) * x + 0.5
    opt = k * x + 0.5 - x
    rk = math.sqrt(k)
    n = 2 * k + 1
    return PcdFamilyReport(
        k=k,
        n=n,
        x=x,
        social_cost=sc,
        opt=opt,
        ratio=sc / opt,
        paper_lower_bound=(0.5 * rk) / (0.25 * rk + 0.5),
        asymptotic_bound=2 - 8 / math.sqrt(n),
        description=f"{k} agents at 0, {k} agents at {x:.6g}, 1 agent at 1/2",
    )


def pcd_family_instance(k: int, M: int) -> Profile:
    """Discrete version of the three-cluster instance on ``C_M``.

    Needs ``M`` divisible by ``4 sqrt(k)`` (so that ``x`` is a vertex) and even.
    """
    steps = Fraction(M) / (4 * Fraction(math.isqrt(k)))
    if math.isqrt(k) ** 2 != k or steps.denominator != 1 or M % 2:
        raise ValueError("need square k and M divisible by 4*sqrt(k), M even")
    s = int(steps)
    locs = (0,) * k + (s,) * k + (M // 2,)
    return Profile(make_circle(M), locs)


def direct_ratio(mech: Mechanism, profile: Profile) -> Fraction:
    opt, _ = opt_cost(profile)
    return social_cost(profile, mech(profile)) / opt


def best_peak_cost(profile: Profile) -> Fraction:
    return min(location_social_cost(profile.space, profile.locations, a) for a in set(profile.locations))


def pcd_direct_social_cost(profile: Profile) -> Fraction:
    return social_cost(profile, pcd(profile))


def profiles_with_ratio(mech: Mechanism, space: MetricSpace, n: int, target: Fraction) -> list[Sequence[int]]:
    out = []
    for prof, sc in _sc_all(mech, space, n):
        opt, _ = opt_cost(prof)
        if opt and sc / opt == target:
            out.append(prof.locations)
    return out
