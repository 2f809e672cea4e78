"""Linear program for the best strategyproof mechanism on a finite space.

Variables are ``p[a, z]`` (probability of facility at ``z`` on profile ``a``)
and ``alpha``.  Constraint families, for three agents:

* probability: ``sum_z p[a, z] = 1`` for each profile;
* incentive: ``sum_z d(z, a_i) p[a, z] <= sum_z d(z, a_i) p[a', z]`` for each
  profile, agent and alternative report ``a'_i`` (the self-report row is
  trivially ``0 <= 0`` and is counted but dropped by the solver);
* approximation: ``sum_z SC(a, z) p[a, z] - OPT(a) alpha <= 0``;
* feasibility: ``p >= 0`` (variable bounds).

Optional reductions shrink the program without changing its optimum:

``peaks_only``
    only ``z`` in the set of reported locations gets a variable.
``antipodal``
    (circles with even ``M``) only peaks and their antipodes.
``fix_first_agent``
    (circles) only profiles with ``a_1 = 0`` are represented; any other
    profile is rotated back, which is sound because an optimal mechanism may
    be taken rotation-neutral.
``anonymity_links``
    equality rows ``p[a, z] = p[pi(a), z]`` for agent permutations ``pi``
    (and for reflections when ``fix_first_agent`` is on), emitted as a
    spanning forest so no row is redundant.
``merge``
    instead of equality rows, variables in one symmetry orbit share a single
    column and only one profile per orbit emits rows.
"""
from __future__ import annotations

import itertools
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

from .lpsolve import LinearProgram, LpSolution, SolverError, StandardForm, simplex_solve, to_standard_form
from .mechanisms import UnsupportedError, table_mechanism
from .metric import InvalidSpaceError, Lottery, MetricSpace, Profile, opt_cost
from .verification import check_strategyproof, worst_ratio_of_table

Prof = tuple[int, ...]


@dataclass(frozen=True)
class AmdFlags:
    peaks_only: bool = False
    antipodal: bool = False
    fix_first_agent: bool = False
    anonymity_links: bool = False
    merge: bool = False

    @classmethod
    def parse(cls, text: str | None) -> "AmdFlags":
        """``"peaks_only,fix_first_agent"``-style comma list (``-`` also accepted)."""
        if not text:
            return cls()
        names = {f.replace("_", "-"): f for f in cls.__dataclass_fields__}
        kw = {}
        for part in text.split(","):
            part = part.strip().replace("_", "-")
            if not part or part == "none":
                continue
            if part not in names:
                raise ValueError(f"unknown flag {part!r}; known: {', '.join(sorted(names))}")
            kw[names[part]] = True
        return cls(**kw)

    @classmethod
    def names(cls) -> list[str]:
        return list(cls.__dataclass_fields__)

    def label(self) -> str:
        on = [k for k, v in asdict(self).items() if v]
        return ",".join(on) or "none"


@dataclass
class LpModel(LinearProgram):
    """The mechanism-design LP plus the metadata needed to read a solution."""

    var_meta: list = field(default_factory=list)  # index -> "alpha" or (profile, point)
    reduction_flags: AmdFlags = field(default_factory=AmdFlags)
    space: MetricSpace | None = None
    n: int = 3
    var_index: dict = field(default_factory=dict)  # (profile, point) -> column
    stats: dict = field(default_factory=dict)
    row_kinds: list[str] = field(default_factory=list)
    row_profiles: list = field(default_factory=list)  # emitting profile of each row (None for links)

    ALPHA = 0


# ---------------------------------------------------------------- symmetry helpers


class _Symmetry:
    """Maps every profile to its canonical representative and back."""

    def __init__(self, space: MetricSpace, n: int, flags: AmdFlags):
        self.space, self.n, self.flags = space, n, flags
        self.M = space.circle_size
        self.m = space.m

    def _rotate(self, a: Prof, s: int) -> Prof:
        return tuple((v + s) % self.M for v in a)

    def canonical(self, a: Prof) -> tuple[Prof, int]:
        """``(c, shift)`` with ``a = c + shift``: variables of ``a`` at ``z``
        are those of ``c`` at ``z - shift``."""
        if self.flags.fix_first_agent:
            s = a[0]
            return self._rotate(a, -s), s
        return a, 0

    def group_images(self, a: Prof):
        """Generators of the orbit of ``a``: pairs ``(b, point_map)`` where
        ``b`` is canonical and ``p[a, z]`` must equal ``p[b, point_map(z)]``."""
        if not self.flags.anonymity_links and not self.flags.merge:
            return
        M = self.M
        if self.flags.anonymity_links:
            for perm in itertools.permutations(range(self.n)):
                if perm == tuple(range(self.n)):
                    continue
                b = tuple(a[i] for i in perm)
                c, s = self.canonical(b)
                yield c, (lambda z, s=s: (z - s) % M) if s else (lambda z: z)
            if self.flags.fix_first_agent:
                refl = tuple((-v) % M for v in a)
                c, s = self.canonical(refl)
                yield c, (lambda z, s=s: (-z - s) % M)


def _support(space: MetricSpace, a: Prof, flags: AmdFlags) -> list[int]:
    if flags.peaks_only:
        return sorted(set(a))
    if flags.antipodal:
        half = space.circle_size // 2
        return sorted(set(a) | {(v + half) % space.circle_size for v in a})
    return list(space.points)


def _validate(space: MetricSpace, n: int, flags: AmdFlags):
    if n != 3:
        raise UnsupportedError("the mechanism-design program is built for three agents")
    if space.m < 2:
        raise InvalidSpaceError("need at least two points")
    if (flags.antipodal or flags.fix_first_agent) and not space.is_circle():
        raise InvalidSpaceError("antipodal and fix_first_agent apply to circles only")
    if flags.antipodal and space.circle_size % 2:
        raise UnsupportedError("antipodal restriction needs an even number of vertices")
    if flags.merge and not flags.anonymity_links and not flags.fix_first_agent:
        raise ValueError("merge needs a symmetry flag (anonymity_links or fix_first_agent)")


def _name(a: Prof) -> str:
    return "_".join(map(str, a))


class _UnionFind:
    def __init__(self):
        self.parent: dict = {}

    def find(self, x):
        parent = self.parent
        root = x
        while parent.get(root, root) != root:
            root = parent[root]
        while parent.get(x, x) != root:
            parent[x], x = root, parent[x]
        return root

    def union(self, x, y) -> bool:
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return False
        if rx > ry:
            rx, ry = ry, rx
        self.parent[ry] = rx
        return True


# ---------------------------------------------------------------- model builder


def build_lp(space: MetricSpace, n: int = 3, flags: AmdFlags | None = None) -> LpModel:
    flags = flags or AmdFlags()
    _validate(space, n, flags)
    t0 = time.perf_counter()
    D = space.dist
    sym = _Symmetry(space, n, flags)
    if flags.fix_first_agent:
        profiles = [(0,) + rest for rest in itertools.product(space.points, repeat=n - 1)]
    else:
        profiles = list(space.profiles(n))
    pairs = [(a, z) for a in profiles for z in _support(space, a, flags)]

    uf = _UnionFind()
    porbit = _UnionFind()
    links = []
    for a in profiles:
        for b, pmap in sym.group_images(a) or ():
            porbit.union(a, b)
            for z in _support(space, a, flags):
                if uf.union((a, z), (b, pmap(z))):
                    links.append(((a, z), (b, pmap(z))))

    model = LpModel(num_vars=0, objective={0: Fraction(1)}, space=space, n=n, reduction_flags=flags)
    model.var_meta.append("alpha")
    names = ["alpha"]
    index = model.var_index
    if flags.merge:
        col_of_root: dict = {}
        for pair in pairs:
            root = uf.find(pair)
            if root not in col_of_root:
                col_of_root[root] = len(model.var_meta)
                model.var_meta.append(root)
                names.append(f"p_{_name(root[0])}_{root[1]}")
            index[pair] = col_of_root[root]
        # profiles in one orbit emit identical rows: keep the first of each
        emitting = [a for a in profiles if porbit.find(a) == a]
    else:
        for pair in pairs:
            index[pair] = len(model.var_meta)
            model.var_meta.append(pair)
            names.append(f"p_{_name(pair[0])}_{pair[1]}")
        emitting = profiles
    model.num_vars = len(model.var_meta)
    model.var_names = names

    def columns_of(b: Prof):
        """Variables of any profile ``b`` as ``(column, actual point)``."""
        c, s = sym.canonical(b)
        M = sym.M
        for w in _support(space, c, flags):
            z = (w + s) % M if s else w
            yield index[(c, w)], z

    counts = dict(probability=0, incentive=0, approximation=0, link=0)

    def add(coeffs, rel, rhs, name, kind, a=None):
        model.add_row(coeffs, rel, rhs, name)
        model.row_kinds.append(kind)
        model.row_profiles.append(a)
        counts[kind] += 1

    opt_of = {}
    for a in emitting:
        cols_a = list(columns_of(a))
        row: dict[int, Fraction] = {}
        for j, _ in cols_a:
            row[j] = row.get(j, 0) + 1
        add(row, "=", 1, f"prob_{_name(a)}", "probability", a)
    for a in emitting:
        cols_a = list(columns_of(a))
        for i in range(n):
            ai = a[i]
            for dev in space.points:
                b = a[:i] + (dev,) + a[i + 1:]
                row = {}
                for j, z in cols_a:
                    row[j] = row.get(j, 0) + D[z][ai]
                for j, z in columns_of(b):
                    row[j] = row.get(j, 0) - D[z][ai]
                add(row, "<=", 0, f"ic_{_name(a)}_{i + 1}_{dev}", "incentive", a)
    for a in emitting:
        opt, _ = opt_cost(Profile(space, a))
        opt_of[a] = opt
        row = {}
        for j, z in columns_of(a):
            row[j] = row.get(j, 0) + sum((D[v][z] for v in a), Fraction(0))
        if opt:
            row[model.ALPHA] = -opt
        add(row, "<=", 0, f"apx_{_name(a)}", "approximation", a)
    if not flags.merge:
        for k, (u, v) in enumerate(links):
            add({index[u]: Fraction(1), index[v]: Fraction(-1)}, "=", 0, f"link_{k}", "link")
    model.stats = dict(
        space=space.name,
        flags=flags.label(),
        profiles=len(profiles),
        emitting_profiles=len(emitting),
        variables=model.num_vars,
        rows=len(model.rows),
        probability_rows=counts["probability"],
        incentive_rows=counts["incentive"],
        approximation_rows=counts["approximation"],
        link_rows=counts["link"],
        build_seconds=round(time.perf_counter() - t0, 4),
    )
    return model


def dictator_basis(model: LpModel, sf: StandardForm) -> list[int] | None:
    """Feasible starting basis from the "agent 1 dictates" mechanism.

    Each probability row keeps ``p[a, a_1]`` basic, ``alpha`` sits in the
    approximation row of the profile where the dictator is worst, and every
    other row keeps its slack.  Incentive rows hold because agent 1 gets
    its own point and the others cannot move it.  Returns ``None`` for
    models with linked or merged columns, where the crash does not apply.
    """
    flags = model.reduction_flags
    if flags.merge or flags.anonymity_links:
        return None
    D = model.space.dist
    worst, worst_row = None, None
    basis = []
    for r, origin in enumerate(sf.row_origin):
        if not isinstance(origin, int):
            return None
        kind, a = model.row_kinds[origin], model.row_profiles[origin]
        if kind == "probability":
            basis.append(model.var_index[(a, a[0])])
            continue
        slack = sf.slack_of_row.get(r)
        if slack is None or slack[1] != 1:
            return None
        basis.append(slack[0])
        if kind == "approximation":
            opt, _ = opt_cost(Profile(model.space, a))
            if opt:
                ratio = sum((D[v][a[0]] for v in a), Fraction(0)) / opt
                if worst is None or ratio > worst:
                    worst, worst_row = ratio, r
    if worst_row is None:
        return None
    basis[worst_row] = model.ALPHA
    return basis


# ---------------------------------------------------------------- reading a solution


def expand_table(model: LpModel, values: Sequence) -> dict[Prof, Lottery]:
    """Lottery for every one of the ``m**n`` profiles from column values."""
    space = model.space
    sym = _Symmetry(space, model.n, model.reduction_flags)
    flags = model.reduction_flags
    table = {}
    for b in space.profiles(model.n):
        c, s = sym.canonical(b)
        probs: dict[int, object] = {}
        for w in _support(space, c, flags):
            z = (w + s) % sym.M if s else w
            v = values[model.var_index[(c, w)]]
            if v:
                probs[z] = probs.get(z, 0) + v
        table[b] = Lottery(probs)
    return table


def table_values(model: LpModel, table: dict[Prof, Lottery], alpha) -> list:
    """Column vector realising ``table`` in ``model`` (inverse of expand_table)."""
    x = [Fraction(0)] * model.num_vars
    x[model.ALPHA] = Fraction(alpha)
    for pair, j in model.var_index.items():
        a, z = pair
        x[j] = table[a][z]
    return x


@dataclass
class SolvedMechanism:
    alpha: Fraction | float
    table: dict[Prof, Lottery]
    certificate: dict
    stats: dict

    def to_json(self) -> dict:
        return {
            "alpha": str(self.alpha) if isinstance(self.alpha, Fraction) else repr(self.alpha),
            "alpha_float": float(self.alpha),
            "stats": self.stats,
            "certificate": self.certificate,
        }

    def table_json(self) -> dict:
        return {_name(a): lot.to_json() for a, lot in sorted(self.table.items())}


def solve_optimal_mechanism(
    space: MetricSpace,
    n: int = 3,
    flags: AmdFlags | None = None,
    mode: str = "rational",
    validate: bool = True,
    warm_start: bool | None = None,
) -> SolvedMechanism:
    """Minimal ``alpha`` over strategyproof mechanisms, with one optimal table.

    In rational mode large models are first solved in floating point; the
    exact simplex then restarts from that basis and certifies (or repairs)
    it with exact pivots.  The table is re-validated by the exhaustive
    strategyproofness checker and the exact worst-ratio evaluator.
    """
    model = build_lp(space, n, flags)
    t0 = time.perf_counter()
    sf = to_standard_form(model)
    basis = dictator_basis(model, sf)
    use_warm = warm_start if warm_start is not None else (mode == "rational" and sf.m > 400)
    float_seconds = 0.0
    if use_warm:
        fsol = simplex_solve(sf, "float", basis=basis)
        float_seconds = fsol.certificate.get("seconds", 0.0)
        if fsol.optimal:
            basis = fsol.basis
    sol: LpSolution = simplex_solve(sf, mode, basis=basis)
    if not sol.optimal:
        raise SolverError(f"mechanism-design LP returned {sol.status}; it always has random dictator as a feasible point")
    values = sf.structural(sol.primal)
    alpha = values[model.ALPHA]
    table = expand_table(model, values)
    cert = dict(sol.certificate)
    cert.update(
        iterations=sol.iterations,
        float_warm_start_seconds=float_seconds,
        solve_seconds=round(time.perf_counter() - t0, 4),
        standard_form_rows=sf.m,
        standard_form_cols=sf.n,
    )
    if validate:
        tol = 0 if mode == "rational" else 1e-7
        viol = check_strategyproof(table_mechanism("amd", table), space, n, tol=tol)
        rep = worst_ratio_of_table(space, table)
        cert["sp_violation"] = None if viol is None else viol.to_json()
        cert["table_worst_ratio"] = str(rep.worst_ratio) if mode == "rational" else float(rep.worst_ratio)
        cert["table_ratio_matches"] = (
            rep.worst_ratio == alpha if mode == "rational" else abs(float(rep.worst_ratio) - float(alpha)) <= 1e-7
        )
    return SolvedMechanism(alpha, table, cert, model.stats)


# ---------------------------------------------------------------- export


def _num(v) -> str:
    v = Fraction(v)
    if v.denominator == 1:
        return str(v.numerator)
    return repr(float(v))


def export_lp(model: LinearProgram, fmt: str = "lp") -> str:
    """Serialise as CPLEX LP text (``fmt="lp"``) or free MPS (``fmt="mps"``).

    Variable names are ``alpha`` and ``p_<a1>_<a2>_<a3>_<z>``; row names are
    ``prob_*``, ``ic_<profile>_<agent>_<report>``, ``apx_*`` and ``link_*``.
    Non-integral coefficients are written as shortest round-trip decimals.
    Rows that are identically zero are written as comments only.
    """
    names = model.var_names or [f"x{j}" for j in range(model.num_vars)]
    fmt = fmt.lower()
    if fmt in ("lp", "lp-text"):
        out = ["\\ facility-location mechanism design LP", "Minimize"]
        out.append(" obj: " + _lin(model.objective, names))
        out.append("Subject To")
        for k, row in enumerate(model.rows):
            coeffs = {j: v for j, v in row.coeffs.items() if v}
            name = row.name or f"r{k}"
            if not coeffs:
                out.append(f"\\ {name}: trivial row dropped")
                continue
            rel = {"<=": "<=", ">=": ">=", "=": "="}[row.rel]
            out.append(f" {name}: {_lin(coeffs, names)} {rel} {_num(row.rhs)}")
        if model.upper:
            out.append("Bounds")
            for j, u in sorted(model.upper.items()):
                out.append(f" 0 <= {names[j]} <= {_num(u)}")
        out.append("End")
        return "\n".join(out) + "\n"
    if fmt == "mps":
        out = ["NAME          FACLOC", "ROWS", " N  obj"]
        kept = []
        for k, row in enumerate(model.rows):
            if any(v for v in row.coeffs.values()):
                code = {"<=": "L", ">=": "G", "=": "E"}[row.rel]
                name = row.name or f"r{k}"
                kept.append((name, row))
                out.append(f" {code}  {name}")
        by_col: dict[int, list[tuple[str, Fraction]]] = {j: [] for j in range(model.num_vars)}
        for j, v in model.objective.items():
            if v:
                by_col[j].append(("obj", v))
        for name, row in kept:
            for j, v in sorted(row.coeffs.items()):
                if v:
                    by_col[j].append((name, v))
        out.append("COLUMNS")
        for j in range(model.num_vars):
            for rname, v in by_col[j]:
                out.append(f"    {names[j]}  {rname}  {_num(v)}")
        out.append("RHS")
        for name, row in kept:
            if row.rhs:
                out.append(f"    RHS  {name}  {_num(row.rhs)}")
        if model.upper:
            out.append("BOUNDS")
            for j, u in sorted(model.upper.items()):
                out.append(f" UP BND  {names[j]}  {_num(u)}")
        out.append("ENDATA")
        return "\n".join(out) + "\n"
    raise ValueError(f"unknown format {fmt!r}; use 'lp' or 'mps'")


def _lin(coeffs: dict[int, Fraction], names: Sequence[str]) -> str:
    parts = []
    for j, v in sorted(coeffs.items()):
        if not v:
            continue
        sign = "-" if v < 0 else "+"
        mag = abs(Fraction(v))
        term = names[j] if mag == 1 else f"{_num(mag)} {names[j]}"
        parts.append(f"{sign} {term}")
    if not parts:
        return "0 " + names[0]
    s = " ".join(parts)
    return s[2:] if s.startswith("+ ") else s


def parse_mps(text: str):
    """Read the MPS layout written by :func:`export_lp` into dense arrays.

    Returns ``(c, rows, names, upper)`` where ``rows`` is a list of
    ``(name, sense, {col: value}, rhs)`` and ``upper`` maps columns to bounds.  Used to hand a model to an
    external solver as an independent check.
    """
    section = None
    senses: dict[str, str] = {}
    order: list[str] = []
    cols: dict[str, int] = {}
    entries: dict[str, dict[int, float]] = {}
    rhs: dict[str, float] = {}
    upper: dict[int, float] = {}
    obj_name = None
    for line in text.splitlines():
        if not line.strip():
            continue
        if not line.startswith(" "):
            section = line.split()[0]
            continue
        tok = line.split()
        if section == "ROWS":
            code, name = tok
            if code == "N":
                obj_name = name
            else:
                senses[name] = code
                order.append(name)
                entries[name] = {}
        elif section == "COLUMNS":
            cname, rname, val = tok
            j = cols.setdefault(cname, len(cols))
            if rname == obj_name:
                entries.setdefault(obj_name, {})[j] = float(val)
            else:
                entries[rname][j] = float(val)
        elif section == "RHS":
            _, rname, val = tok
            rhs[rname] = float(val)
        elif section == "BOUNDS":
            _, _, cname, val = tok
            upper[cols[cname]] = float(val)
    c = entries.get(obj_name, {})
    rows = [(r, senses[r], entries[r], rhs.get(r, 0.0)) for r in order]
    return c, rows, list(cols), upper
