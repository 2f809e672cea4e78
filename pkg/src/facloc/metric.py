"""Finite metric spaces, profiles, lotteries and exact cost arithmetic.

All quantities are :class:`fractions.Fraction`.  Circles are normalised to
circumference 1, so neighbouring vertices of ``C_M`` are ``1/M`` apart.
"""
from __future__ import annotations

import enum
import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence


class InvalidSpaceError(ValueError):
    pass


class SpaceKind(str, enum.Enum):
    GRAPH = "graph"
    CIRCLE = "circle"
    PLANE_GRID = "plane-grid"


@dataclass(frozen=True, eq=False)
class MetricSpace:
    kind: SpaceKind
    dist: tuple[tuple[Fraction, ...], ...]
    circle_size: int | None = None
    name: str = ""
    edges: tuple[tuple[int, int, Fraction], ...] = ()

    @property
    def m(self) -> int:
        return len(self.dist)

    @property
    def points(self) -> range:
        return range(self.m)

    def d(self, i: int, j: int) -> Fraction:
        return self.dist[i][j]

    def is_circle(self) -> bool:
        return self.kind is SpaceKind.CIRCLE

    def antipode(self, i: int) -> int:
        M = self.circle_size
        if M is None or M % 2:
            raise InvalidSpaceError("antipodes are vertices only on even circles")
        return (i + M // 2) % M

    def profiles(self, n: int) -> Iterator[tuple[int, ...]]:
        """All ``m**n`` location tuples in lexicographic order."""
        return itertools.product(range(self.m), repeat=n)

    def check_metric(self) -> None:
        m = self.m
        D = self.dist
        for i in range(m):
            if D[i][i] != 0:
                raise InvalidSpaceError(f"d({i},{i}) = {D[i][i]} != 0")
            for j in range(m):
                if D[i][j] < 0 or D[i][j] != D[j][i]:
                    raise InvalidSpaceError(f"asymmetric or negative entry at ({i},{j})")
        for k in range(m):
            Dk = D[k]
            for i in range(m):
                dik = D[i][k]
                Di = D[i]
                for j in range(m):
                    if Di[j] > dik + Dk[j]:
                        raise InvalidSpaceError(f"triangle inequality fails for {i},{j},{k}")

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind.value, "name": self.name}
        if self.kind is SpaceKind.CIRCLE:
            out["M"] = self.circle_size
        elif self.edges:
            out["n"] = self.m
            out["edges"] = [[u, v, e.numerator, e.denominator] for u, v, e in self.edges]
        else:
            out["dist"] = [[str(x) for x in row] for row in self.dist]
        return out


@dataclass(frozen=True)
class Profile:
    """Reported locations ``(a_1, ..., a_n)`` as point indices of ``space``."""

    space: MetricSpace = field(repr=False, compare=False)
    locations: tuple[int, ...]

    def __post_init__(self):
        if len(self.locations) < 1:
            raise ValueError("a profile needs at least one agent")
        m = self.space.m
        for a in self.locations:
            if not 0 <= a < m:
                raise ValueError(f"location {a} outside the space (m={m})")

    @property
    def n(self) -> int:
        return len(self.locations)

    def __getitem__(self, i: int) -> int:
        return self.locations[i]

    def __iter__(self):
        return iter(self.locations)

    def __len__(self):
        return len(self.locations)

    def deviate(self, agent: int, point: int) -> "Profile":
        locs = list(self.locations)
        locs[agent] = point
        return Profile(self.space, tuple(locs))


@dataclass(frozen=True)
class Lottery:
    """A distribution over points; zero entries are never stored."""

    probs: Mapping[int, Fraction]

    def __post_init__(self):
        object.__setattr__(self, "probs", {z: p for z, p in sorted(self.probs.items()) if p != 0})

    @classmethod
    def point_mass(cls, z: int) -> "Lottery":
        return cls({z: Fraction(1)})

    @classmethod
    def from_weights(cls, weights: Mapping[int, Fraction] | Iterable[tuple[int, Fraction]]) -> "Lottery":
        """Normalise nonnegative weights; repeated keys accumulate."""
        acc: dict[int, Fraction] = {}
        items = weights.items() if isinstance(weights, Mapping) else weights
        for z, w in items:
            acc[z] = acc.get(z, 0) + w
        total = sum(acc.values())
        if total <= 0:
            raise ValueError("weights must have a positive sum")
        return cls({z: w / total for z, w in acc.items()})

    def __getitem__(self, z: int):
        return self.probs.get(z, 0)

    def items(self):
        return self.probs.items()

    @property
    def support(self) -> frozenset[int]:
        return frozenset(self.probs)

    def is_valid(self, tol: float = 0.0) -> bool:
        if any(p < 0 for p in self.probs.values()):
            return False
        total = sum(self.probs.values())
        if tol == 0:
            return total == 1
        return abs(float(total) - 1.0) <= tol

    def to_json(self) -> dict[str, str]:
        return {str(z): str(p) for z, p in self.probs.items()}


# ---------------------------------------------------------------- construction


def make_circle(M: int) -> MetricSpace:
    if M < 3:
        raise InvalidSpaceError(f"a circle needs at least 3 vertices, got {M}")
    rows = tuple(tuple(Fraction(min((j - i) % M, (i - j) % M), M) for j in range(M)) for i in range(M))
    return MetricSpace(SpaceKind.CIRCLE, rows, circle_size=M, name=f"circle:{M}")


def make_graph(num_vertices: int, edges: Sequence[tuple[int, int, object]], name: str = "graph") -> MetricSpace:
    """Shortest-path metric of an undirected weighted graph (Floyd-Warshall, exact)."""
    if num_vertices < 1:
        raise InvalidSpaceError("graph needs at least one vertex")
    inf = None
    D: list[list[Fraction | None]] = [[inf] * num_vertices for _ in range(num_vertices)]
    for i in range(num_vertices):
        D[i][i] = Fraction(0)
    clean = []
    for u, v, length in edges:
        w = Fraction(length)
        if w <= 0:
            raise InvalidSpaceError(f"edge ({u},{v}) has nonpositive length {w}")
        if not (0 <= u < num_vertices and 0 <= v < num_vertices) or u == v:
            raise InvalidSpaceError(f"bad edge ({u},{v})")
        clean.append((u, v, w))
        if D[u][v] is None or w < D[u][v]:
            D[u][v] = D[v][u] = w
    for k in range(num_vertices):
        Dk = D[k]
        for i in range(num_vertices):
            dik = D[i][k]
            if dik is None:
                continue
            Di = D[i]
            for j in range(num_vertices):
                dkj = Dk[j]
                if dkj is None:
                    continue
                if Di[j] is None or dik + dkj < Di[j]:
                    Di[j] = dik + dkj
    if any(x is None for row in D for x in row):
        raise InvalidSpaceError("graph is disconnected")
    space = MetricSpace(
        SpaceKind.GRAPH, tuple(tuple(row) for row in D), name=name, edges=tuple(clean)  # type: ignore[arg-type]
    )
    space.check_metric()
    return space


def make_path(m: int) -> MetricSpace:
    """Unit-edge path ``0 - 1 - ... - m-1``; the line on which ``median`` runs."""
    return make_graph(m, [(i, i + 1, 1) for i in range(m - 1)], name=f"path:{m}")


def fig4_graph() -> MetricSpace:
    """Six-vertex lower-bound graph: a perfect matching of length-1 edges
    (v1-v4, v2-v5, v3-v6) plus every other bipartite edge with length 2."""
    solid = [(0, 3), (1, 4), (2, 5)]
    dashed = [(0, 4), (0, 5), (1, 3), (1, 5), (2, 3), (2, 4)]
    edges = [(u, v, 1) for u, v in solid] + [(u, v, 2) for u, v in dashed]
    return make_graph(6, edges, name="builtin:fig4")


def star_graph(leaves: int = 3) -> MetricSpace:
    """Star with centre 0 and unit edges to leaves ``1..leaves``."""
    return make_graph(leaves + 1, [(0, i, 1) for i in range(1, leaves + 1)], name=f"builtin:star{leaves}")


def spider_graph(legs: Sequence[int]) -> MetricSpace:
    """Unit-edge tree with one path ("leg") of each given length from a centre 0.

    The leg tips are returned last-first by :func:`spider_tips`.
    """
    edges = []
    nxt = 1
    for length in legs:
        prev = 0
        for _ in range(length):
            edges.append((prev, nxt, 1))
            prev = nxt
            nxt += 1
    return make_graph(nxt, edges, name="spider:" + "-".join(map(str, legs)))


def spider_tips(legs: Sequence[int]) -> list[int]:
    tips, start = [], 1
    for length in legs:
        tips.append(start + length - 1)
        start += length
    return tips


def space_from_json(obj: Mapping) -> MetricSpace:
    kind = obj.get("kind", "graph")
    if kind == "circle":
        return make_circle(int(obj["M"]))
    if "edges" in obj:
        edges = []
        for e in obj["edges"]:
            if len(e) == 4:
                u, v, num, den = e
                edges.append((int(u), int(v), Fraction(int(num), int(den))))
            else:
                u, v, length = e
                edges.append((int(u), int(v), Fraction(str(length))))
        return make_graph(int(obj["n"]), edges, name=obj.get("name", "graph"))
    raise InvalidSpaceError("space JSON needs either kind=circle or an edge list")


def load_graph(path: str) -> MetricSpace:
    with open(path, encoding="utf-8") as fh:
        return space_from_json(json.load(fh))


# ---------------------------------------------------------------- circle geometry


@dataclass(frozen=True)
class ArcLengths:
    """Arcs of a circle profile.

    ``order`` lists agents clockwise (ties by agent index); ``raw[k]`` is the
    arc from ``order[k]`` to ``order[k+1]``; ``facing[i]`` is the arc facing
    agent ``i`` (indexed by agent, not by clockwise position).
    """

    order: tuple[int, ...]
    raw: tuple[Fraction, ...]
    facing: tuple[Fraction, ...]


def arc_lengths(space: MetricSpace, locations: Sequence[int]) -> ArcLengths:
    if not space.is_circle():
        raise InvalidSpaceError("arc lengths are defined on circles only")
    n = len(locations)
    if n < 2:
        raise ValueError("arc lengths need at least two agents")
    M = space.circle_size
    order = tuple(sorted(range(n), key=lambda i: (locations[i], i)))
    raw = []
    for k in range(n):
        a, b = locations[order[k]], locations[order[(k + 1) % n]]
        steps = (b - a) % M
        if k == n - 1:
            steps = M - (a - b)  # wrap-around arc; equals M when all coincide
        raw.append(Fraction(steps, M))
    half = n // 2
    facing = [Fraction(0)] * n
    for k, agent in enumerate(order):
        facing[agent] = raw[(k + half) % n]
    return ArcLengths(order, tuple(raw), tuple(facing))


# ---------------------------------------------------------------- costs


def point_cost(space: MetricSpace, x: int, lottery: Lottery) -> Fraction:
    """Expected distance from point ``x`` to a facility drawn from ``lottery``."""
    row = space.dist[x]
    return sum((p * row[z] for z, p in lottery.items()), Fraction(0))


def agent_cost(profile: Profile, agent: int, lottery: Lottery) -> Fraction:
    return point_cost(profile.space, profile.locations[agent], lottery)


def location_social_cost(space: MetricSpace, locations: Sequence[int], z: int) -> Fraction:
    D = space.dist
    return sum((D[a][z] for a in locations), Fraction(0))


def social_cost(profile: Profile, lottery: Lottery) -> Fraction:
    space = profile.space
    return sum((p * location_social_cost(space, profile.locations, z) for z, p in lottery.items()), Fraction(0))


def opt_cost(profile: Profile) -> tuple[Fraction, int]:
    """Minimal deterministic social cost and its lowest-index minimiser."""
    space = profile.space
    best, arg = None, -1
    for z in space.points:
        sc = location_social_cost(space, profile.locations, z)
        if best is None or sc < best:
            best, arg = sc, z
    return best, arg
