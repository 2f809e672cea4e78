"""Randomised facility-location mechanisms and mechanism transformers.

A mechanism is a pure function from a :class:`~facloc.metric.Profile` to a
:class:`~facloc.metric.Lottery`.  Everything here is exact.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .metric import (
    InvalidSpaceError,
    Lottery,
    MetricSpace,
    Profile,
    SpaceKind,
    arc_lengths,
)


class UnsupportedError(ValueError):
    """Mechanism applied outside its declared domain."""


Rule = Callable[[Profile], Lottery]


@dataclass(frozen=True)
class Mechanism:
    name: str
    rule: Rule = field(repr=False)
    kinds: frozenset[SpaceKind] = frozenset(SpaceKind)
    n_ok: Callable[[int], bool] = field(default=lambda n: n >= 1, repr=False)
    sp_status: str = "unknown"

    def applicable(self, space: MetricSpace, n: int) -> bool:
        return space.kind in self.kinds and self.n_ok(n)

    def __call__(self, profile: Profile) -> Lottery:
        if profile.space.kind not in self.kinds:
            raise UnsupportedError(f"{self.name} does not apply to {profile.space.kind.value} spaces")
        if not self.n_ok(profile.n):
            raise UnsupportedError(f"{self.name} does not support n={profile.n}")
        return self.rule(profile)


def _all_coincide(locs: Sequence[int]) -> bool:
    return all(a == locs[0] for a in locs)


# ---------------------------------------------------------------- rules


def random_dictator(profile: Profile) -> Lottery:
    n = profile.n
    return Lottery.from_weights((a, Fraction(1, n)) for a in profile.locations)


def pcd(profile: Profile) -> Lottery:
    """Proportional circle distance: location ``a_i`` wins w.p. its facing arc."""
    locs = profile.locations
    if not profile.space.is_circle():
        raise InvalidSpaceError("PCD is defined on circles only")
    if _all_coincide(locs):
        return Lottery.point_mass(locs[0])
    arcs = arc_lengths(profile.space, locs)
    return Lottery.from_weights(zip(locs, arcs.facing))


def qcd(profile: Profile, q: Fraction = Fraction(1, 4)) -> Lottery:
    """Quadratic circle distance: weight ``max(L_i**2, q**2)`` per agent."""
    locs = profile.locations
    if not profile.space.is_circle():
        raise InvalidSpaceError("QCD is defined on circles only")
    if profile.n != 3:
        raise UnsupportedError("QCD is defined for three agents")
    if _all_coincide(locs):
        return Lottery.point_mass(locs[0])
    q2 = Fraction(q) ** 2
    arcs = arc_lengths(profile.space, locs)
    return Lottery.from_weights((a, max(L * L, q2)) for a, L in zip(locs, arcs.facing))


def pd(profile: Profile) -> Lottery:
    """Proportional distance: agent ``i`` wins w.p. proportional to the
    distance between the other two."""
    if profile.n != 3:
        raise UnsupportedError("PD is defined for three agents; use pd_general")
    a1, a2, a3 = profile.locations
    D = profile.space.dist
    w = (D[a2][a3], D[a1][a3], D[a1][a2])
    if sum(w) == 0:
        return Lottery.point_mass(a1)
    return Lottery.from_weights(zip(profile.locations, w))


def pd_general(profile: Profile) -> Lottery:
    """PD for any ``n``: weight of agent ``i`` is ``D - SC(a_i)`` where ``D``
    sums all pairwise distances.  With ``n = 2`` every weight is zero and the
    rule falls back to random dictator."""
    locs = profile.locations
    n = len(locs)
    if n < 2:
        raise UnsupportedError("pd_general needs at least two agents")
    if _all_coincide(locs):
        return Lottery.point_mass(locs[0])
    D = profile.space.dist
    sc = [sum((D[a][b] for b in locs), Fraction(0)) for a in locs]
    total = sum(sc) / 2
    weights = [total - s for s in sc]
    if sum(weights) == 0:
        return random_dictator(profile)
    return Lottery.from_weights(zip(locs, weights))


def median_line(positions: Sequence) -> object:
    """Median of a multiset of 1-D positions; the lower median for even n."""
    if not positions:
        raise ValueError("median of an empty profile")
    s = sorted(positions)
    return s[(len(s) - 1) // 2]


def median_rule(profile: Profile) -> Lottery:
    # Point indices are read as coordinates on a line (see make_path).
    return Lottery.point_mass(median_line(profile.locations))


# ---------------------------------------------------------------- factories


def make_rd() -> Mechanism:
    return Mechanism("rd", random_dictator, sp_status="proved")


def make_pcd() -> Mechanism:
    return Mechanism("pcd", pcd, kinds=frozenset({SpaceKind.CIRCLE}), n_ok=lambda n: n >= 1, sp_status="proved-odd-n")


def make_qcd(q=Fraction(1, 4)) -> Mechanism:
    q = Fraction(q)
    if not 0 <= q <= Fraction(1, 2):
        raise ValueError(f"q must lie in [0, 1/2], got {q}")
    status = "proved" if q == Fraction(1, 4) else "unknown"
    return Mechanism(
        f"qcd:q={q.numerator}/{q.denominator}",
        lambda p: qcd(p, q),
        kinds=frozenset({SpaceKind.CIRCLE}),
        n_ok=lambda n: n == 3,
        sp_status=status,
    )


def make_pd() -> Mechanism:
    return Mechanism("pd", pd, n_ok=lambda n: n == 3, sp_status="proved")


def make_pd_general() -> Mechanism:
    return Mechanism("pd-general", pd_general, n_ok=lambda n: n >= 2, sp_status="open-for-n>3")


def make_median() -> Mechanism:
    return Mechanism("median", median_rule, kinds=frozenset({SpaceKind.GRAPH}), sp_status="proved-on-lines")


def pcd_sp_status(n: int) -> str:
    """Known strategyproofness status of PCD with ``n`` agents.

    Odd ``n`` is a theorem.  For ``n = 4`` the exhaustive checker finds a
    manipulation on every ``C_M`` with ``4 <= M <= 8``, e.g. on ``C_8`` the
    profile ``(0, 1, 4, 6)`` where agent 3 gains 1/64 by reporting 5.  Other
    even ``n`` are untested.
    """
    if n % 2 == 1:
        return "proved"
    return "refuted" if n == 4 else "unverified"


def table_mechanism(name: str, table: dict[tuple[int, ...], Lottery], kinds=frozenset(SpaceKind)) -> Mechanism:
    """Wrap an explicit profile -> lottery table (e.g. an LP solution)."""

    def rule(profile: Profile) -> Lottery:
        return table[profile.locations]

    n_values = {len(k) for k in table}
    return Mechanism(name, rule, kinds=kinds, n_ok=lambda n: n in n_values, sp_status="table")


def get_mechanism(spec: str) -> Mechanism:
    """Look up ``rd``, ``pcd``, ``qcd:q=<num>/<den>``, ``pd``, ``pd-general``, ``median``."""
    spec = spec.strip()
    if spec.startswith("qcd"):
        q = Fraction(1, 4)
        if ":" in spec:
            key, _, val = spec.partition(":")[2].partition("=")
            if key != "q":
                raise KeyError(f"unknown qcd parameter {key!r}")
            q = Fraction(val)
        return make_qcd(q)
    factories = {
        "rd": make_rd,
        "pcd": make_pcd,
        "pd": make_pd,
        "pd-general": make_pd_general,
        "median": make_median,
    }
    if spec not in factories:
        raise KeyError(f"unknown mechanism {spec!r}; known: {', '.join(MECHANISM_NAMES)}")
    return factories[spec]()


MECHANISM_NAMES = ("rd", "pcd", "qcd:q=<num>/<den>", "pd", "pd-general", "median")


# ---------------------------------------------------------------- transformers


def _require_even_circle(space: MetricSpace) -> int:
    if not space.is_circle():
        raise InvalidSpaceError("transformer needs a circle")
    M = space.circle_size
    if M % 2:
        raise UnsupportedError("antipodal splitting needs an even number of vertices")
    return M


def split_to_antipodal(space: MetricSpace, locations: Sequence[int], lottery: Lottery) -> Lottery:
    """Move all mass off peaks/antipodes onto the neighbouring peak/antipode
    pair, in inverse proportion to arc distance.  Agent costs are unchanged."""
    M = _require_even_circle(space)
    anchors = sorted({a for a in locations} | {(a + M // 2) % M for a in locations})
    anchor_set = set(anchors)
    out: dict[int, Fraction] = {}
    for z, p in lottery.items():
        if z in anchor_set:
            out[z] = out.get(z, 0) + p
            continue
        cw = next((b for b in anchors if b > z), anchors[0])
        ccw = next((b for b in reversed(anchors) if b < z), anchors[-1])
        x = Fraction((cw - z) % M, M)
        y = Fraction((z - ccw) % M, M)
        out[cw] = out.get(cw, 0) + p * y / (x + y)
        out[ccw] = out.get(ccw, 0) + p * x / (x + y)
    return Lottery(out)


def antipodal_split(f: Mechanism, space: MetricSpace) -> Mechanism:
    _require_even_circle(space)

    def rule(profile: Profile) -> Lottery:
        return split_to_antipodal(profile.space, profile.locations, f(profile))

    return Mechanism(f"antipodal({f.name})", rule, kinds=frozenset({SpaceKind.CIRCLE}), n_ok=f.n_ok, sp_status=f.sp_status)


def symmetrize(f: Mechanism, space: MetricSpace) -> Mechanism:
    """Average ``f`` over all agent permutations and circle symmetries.

    The result is anonymous and neutral, strategyproof whenever ``f`` is, and
    its worst-case social cost is no larger than that of ``f``.
    """
    if not space.is_circle():
        raise InvalidSpaceError("symmetrize needs a circle")
    M = space.circle_size
    group = []
    for r in range(M):
        for refl in (False, True):
            fwd = [((r - v) if refl else (v + r)) % M for v in range(M)]
            inv = [0] * M
            for v, w in enumerate(fwd):
                inv[w] = v
            group.append((fwd, inv))

    def rule(profile: Profile) -> Lottery:
        locs = profile.locations
        n = len(locs)
        perms = list(itertools.permutations(range(n)))
        weight = Fraction(1, len(perms) * len(group))
        acc: dict[int, Fraction] = {}
        for perm in perms:
            permuted = [locs[i] for i in perm]
            for fwd, inv in group:
                img = Profile(profile.space, tuple(fwd[a] for a in permuted))
                for z, p in f(img).items():
                    w = inv[z]
                    acc[w] = acc.get(w, 0) + p * weight
        return Lottery(acc)

    return Mechanism(f"sym({f.name})", rule, kinds=frozenset({SpaceKind.CIRCLE}), n_ok=f.n_ok, sp_status=f.sp_status)


def dictator(agent: int = 0) -> Mechanism:
    return Mechanism(f"dictator:{agent}", lambda p: Lottery.point_mass(p.locations[agent]), sp_status="proved")
