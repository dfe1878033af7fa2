"""Per-scenario weight functions.

A weight function assigns every non-tiny class one exact weight (the item
weight omega_j), tiny items a density rho, huge items 1 or w depending on a,
and the items of a large threshold class u or v depending on 1-a.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .numerics import format_rational, parse_rational
from .params import (DECLARED2, HALF, HUGE, LARGE, REGULAR1, REGULAR2, TEMPORARY1, TINY,
                     ClassTable, ContainerDescriptor, DomainError, container_volume)
from .scenarios import Scenario, make_scenario

ONE = Fraction(1)
ZERO = Fraction(0)

Endpoint = Union[Fraction, str]  # 'a' and '1-a' are symbolic


class GapError(ValueError):
    """A container volume falls strictly inside the scenario's excluded gap."""


class InfeasibleUVW(ValueError):
    pass


@dataclass(frozen=True)
class UVW:
    w: Fraction
    u: Optional[Fraction] = None
    v: Optional[Fraction] = None


@dataclass
class Verdict:
    feasible: bool
    failures: List[str] = field(default_factory=list)

    def __bool__(self):
        return self.feasible


# --- required weights ------------------------------------------------------


def required_weight_for_volume(vol: Fraction, scenario: Scenario, w: Fraction) -> Fraction:
    """Required weight of a basic container with a fixed volume."""
    x, y = scenario.x, scenario.y
    if vol > HALF:
        if vol >= 1 - x:
            return ONE
        if vol <= 1 - y:
            return w
    else:
        if vol >= y:
            return ONE
        if vol <= x:
            return 1 - w
    raise GapError(f"volume {vol} inside the gap of scenario {scenario.label()}")


def container_required_weight(j: int, i: int, scenario: Scenario, w: Fraction,
                              table: ClassTable) -> Fraction:
    """r_{x,y}(i,j) for a basic class j >= 2."""
    kind = table.kind(j)
    if kind == HUGE:
        raise DomainError("huge containers depend on a; use required_weight with a")
    if j == scenario.k and not scenario.basic:
        raise DomainError(f"class {j} is the large threshold class of {scenario.label()}")
    if kind == LARGE and i == 1:
        # single item of exact size; the whole class lies on one side of the gap
        if table.t(j) >= scenario.y:
            return ONE
        if table.t(j - 1) <= scenario.x:
            return 1 - w
        raise GapError(f"class {j} overlaps scenario {scenario.label()}")
    return required_weight_for_volume(table.volume(j, i), scenario, w)


def required_weight(desc: ContainerDescriptor, scenario: Scenario, w: Fraction,
                    table: ClassTable, a: Optional[Fraction] = None) -> Fraction:
    if table.kind(desc.cls) == HUGE:
        if a is None:
            raise DomainError("huge container weight needs a")
        return ONE if container_volume(desc, table) >= a else w
    if desc.kind in (REGULAR1, TEMPORARY1):
        return container_required_weight(desc.cls, 1, scenario, w, table)
    if desc.kind in (DECLARED2, REGULAR2):
        return container_required_weight(desc.cls, 2, scenario, w, table)
    return container_required_weight(desc.cls, desc.i, scenario, w, table)


def class_item_weight(j: int, scenario: Scenario, table: ClassTable, w: Fraction) -> Fraction:
    if not 2 <= j <= table.M:
        raise DomainError(f"class {j} has no item weight")
    num = den = ZERO
    for i in table.types(j):
        a = table.alpha(j, i)
        num += a * container_required_weight(j, i, scenario, w, table)
        den += i * a
    return num / den


def tiny_density(scenario: Scenario, table: ClassTable, w: Fraction) -> Fraction:
    tM = table.t(table.M)
    num = sum(a * required_weight_for_volume(A, scenario, w) for A, a in table.tiny)
    den = sum((A - tM) * a for A, a in table.tiny)
    rho = num / den
    if rho > 2:
        raise DomainError(f"tiny density {rho} exceeds 2")
    return rho


# --- constraints -----------------------------------------------------------


def check_constraints(uvw: UVW, alpha_1k: Fraction, alpha_2k: Fraction) -> Verdict:
    u, v, w = uvw.u, uvw.v, uvw.w
    fails = []
    if u is None or v is None:
        return Verdict(False, ["u and v are required for a large threshold class"])
    for name, val in (("u", u), ("v", v), ("w", w)):
        if not 0 <= val <= 1:
            fails.append(f"{name} = {val} outside [0,1]")
    if u > v:
        fails.append("u > v")
    if u * (1 + alpha_2k) + w * alpha_1k < 1:
        fails.append("u(1+a2) + w a1 < 1")
    if u * alpha_2k + v < 1:
        fails.append("u a2 + v < 1")
    if v * alpha_1k + 2 * u * alpha_2k + (1 - w) * alpha_2k < 1:
        fails.append("v a1 + 2u a2 + (1-w) a2 < 1")
    return Verdict(not fails, fails)


def check_uvw(scenario: Scenario, table: ClassTable, uvw: UVW) -> Verdict:
    if scenario.basic:
        fails = [] if 0 <= uvw.w <= 1 else [f"w = {uvw.w} outside [0,1]"]
        if uvw.u is not None or uvw.v is not None:
            fails.append("u, v given for a basic threshold class")
        return Verdict(not fails, fails)
    k = scenario.k
    return check_constraints(uvw, table.alpha(k, 1), table.alpha(k, 2))


def feasible_uvw(alpha_1k: Fraction, alpha_2k: Fraction, w: Fraction) -> UVW:
    """Smallest u, then smallest v, satisfying the constraints for a given w."""
    u = max((1 - w * alpha_1k) / (1 + alpha_2k), ZERO)
    v = max(u, 1 - u * alpha_2k)
    if alpha_1k > 0:
        v = max(v, (1 - 2 * u * alpha_2k - (1 - w) * alpha_2k) / alpha_1k)
    return UVW(w, u, v)


# --- weight function -------------------------------------------------------


@dataclass
class WeightFunction:
    scenario: Scenario
    uvw: UVW
    omega: Dict[int, Fraction]  # basic classes 2..M
    rho: Fraction
    table: ClassTable = field(repr=False)

    def pieces(self) -> List[Tuple[Endpoint, Endpoint, Fraction]]:
        """Weight rows from (t_M, 1] upwards, one per class, splits kept symbolic."""
        t = self.table.t
        rows: List[Tuple[Endpoint, Endpoint, Fraction]] = [(ZERO, t(self.table.M), self.rho)]
        for j in range(self.table.M, 1, -1):
            if j in self.omega:
                rows.append((t(j), t(j - 1), self.omega[j]))
            else:
                rows.append((t(j), "1-a", self.uvw.u))
                rows.append(("1-a", t(j - 1), self.uvw.v))
        rows.append((HALF, "a", self.uvw.w))
        rows.append(("a", ONE, ONE))
        return rows

    def item_weight(self, size: Fraction, a: Fraction) -> Fraction:
        j = self.table.class_of(size)
        kind = self.table.kind(j)
        if kind == HUGE:
            return ONE if size >= a else self.uvw.w
        if kind == TINY:
            return size * self.rho
        if j in self.omega:
            return self.omega[j]
        return self.uvw.u if size <= 1 - a else self.uvw.v


def build_weight_function(scenario: Scenario, table: ClassTable, uvw: UVW,
                          check: bool = True) -> WeightFunction:
    if check:
        verdict = check_uvw(scenario, table, uvw)
        if not verdict:
            raise InfeasibleUVW("; ".join(verdict.failures))
    omega = {}
    for j in range(2, table.M + 1):
        if j == scenario.k and not scenario.basic:
            continue
        omega[j] = class_item_weight(j, scenario, table, uvw.w)
    return WeightFunction(scenario, uvw, omega, tiny_density(scenario, table, uvw.w), table)


def total_item_weight(items: Iterable[Fraction], wf: WeightFunction, a: Fraction) -> Fraction:
    return sum((wf.item_weight(s, a) for s in items), ZERO)


# --- published weight tables ------------------------------------------------


@dataclass
class WeightTable:
    x: Fraction
    y: Fraction
    w: Fraction
    rho: Fraction
    rows: List[Tuple[Endpoint, Endpoint, Fraction]]
    u: Optional[Fraction] = None
    v: Optional[Fraction] = None

    def uvw(self) -> UVW:
        return UVW(self.w, self.u, self.v)

    def weight_over(self, lo: Fraction, hi: Fraction) -> Optional[Fraction]:
        """Weight of the numeric row covering (lo,hi], if any."""
        for a, b, wt in self.rows:
            if isinstance(a, Fraction) and isinstance(b, Fraction) and a <= lo and hi <= b:
                return wt
        return None


def _endpoint(tok: str) -> Endpoint:
    return tok if tok in ("a", "1-a") else parse_rational(tok)


def parse_weight_table(text: str) -> WeightTable:
    head: Dict[str, str] = {}
    rows = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, val = (s.strip() for s in line.split("=", 1))
            head[key] = val
            continue
        lo, hi, wt = line.split()
        rows.append((_endpoint(lo), _endpoint(hi), parse_rational(wt)))
    x, y = (parse_rational(s) for s in head["scenario"].split())
    opt = {k: parse_rational(head[k]) for k in ("u", "v") if k in head}
    return WeightTable(x, y, parse_rational(head["w"]), parse_rational(head["rho"]), rows, **opt)


def load_weight_table(path) -> WeightTable:
    return parse_weight_table(Path(path).read_text(encoding="utf-8"))


def _fmt_end(e: Endpoint) -> str:
    return e if isinstance(e, str) else format_rational(e)


def format_weight_table(wf: WeightFunction, merge: bool = True) -> str:
    s = wf.scenario
    out = [f"scenario={format_rational(s.x)} {format_rational(s.y)}",
           f"w={format_rational(wf.uvw.w)}"]
    if wf.uvw.u is not None:
        out += [f"u={format_rational(wf.uvw.u)}", f"v={format_rational(wf.uvw.v)}"]
    out.append(f"rho={format_rational(wf.rho)}")
    rows = wf.pieces()[1:]
    if merge:
        merged = []
        for lo, hi, wt in rows:
            if merged and merged[-1][2] == wt and isinstance(lo, Fraction) and isinstance(merged[-1][1], Fraction):
                merged[-1] = (merged[-1][0], hi, wt)
            else:
                merged.append((lo, hi, wt))
        rows = merged
    out += [f"{_fmt_end(lo)} {_fmt_end(hi)} {format_rational(wt)}" for lo, hi, wt in rows]
    return "\n".join(out) + "\n"


def compare_weight_table(wf: WeightFunction, published: WeightTable) -> Tuple[int, List[str]]:
    """Check every published row against ``wf``; returns (rows checked, mismatches)."""
    table = wf.table
    bad = []
    if published.rho != wf.rho:
        bad.append(f"rho {published.rho} != {wf.rho}")
    checked = 0
    for lo, hi, wt in published.rows:
        checked += 1
        if lo == 0:
            if wt != wf.rho:
                bad.append(f"tiny row {wt} != rho {wf.rho}")
            continue
        if lo == "1-a" or hi == "1-a":
            want = wf.uvw.v if lo == "1-a" else wf.uvw.u
            if wt != want:
                bad.append(f"threshold row ({lo},{hi}] {wt} != {want}")
            continue
        if lo == "a" or hi == "a":
            want = ONE if lo == "a" else wf.uvw.w
            if wt != want:
                bad.append(f"huge row ({lo},{hi}] {wt} != {want}")
            continue
        # numeric row: every class inside must carry the row weight
        covered = lo
        for j in range(table.M, 0, -1):
            if table.t(j) >= lo and table.t(j - 1) <= hi:
                covered = max(covered, table.t(j - 1))
                if j == 1:
                    got = [wf.uvw.w, ONE]
                elif j in wf.omega:
                    got = [wf.omega[j]]
                else:
                    got = [wf.uvw.u, wf.uvw.v]
                if any(g != wt for g in got):
                    bad.append(f"class {j} in row ({lo},{hi}]: {got} != {wt}")
        if covered != hi:
            bad.append(f"row ({lo},{hi}] does not align with class boundaries")
    return checked, bad


def weight_table_from_published(published: WeightTable, table: ClassTable) -> WeightFunction:
    """A weight function taken directly from a published table (no alphas needed)."""
    sc = make_scenario(published.x, published.y, table)
    omega = {}
    for j in range(2, table.M + 1):
        if j == sc.k and not sc.basic:
            continue
        wt = published.weight_over(table.t(j), table.t(j - 1))
        if wt is None:
            raise DomainError(f"published table has no row for class {j}")
        omega[j] = wt
    return WeightFunction(sc, published.uvw(), omega, published.rho, table)


# --- uvw tables -------------------------------------------------------------


@dataclass(frozen=True)
class UVWRecord:
    lo: Fraction
    hi: Fraction
    uvw: UVW


@dataclass
class UVWTable:
    records: List[UVWRecord]

    def lookup(self, scenario: Scenario) -> Optional[UVW]:
        """The narrowest record whose range contains the scenario."""
        hits = [r for r in self.records if r.lo <= scenario.x and scenario.y <= r.hi]
        if not hits:
            return None
        return min(hits, key=lambda r: r.hi - r.lo).uvw


def parse_uvw_table(text: str) -> UVWTable:
    recs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [parse_rational(p) for p in line.split()]
        if len(parts) == 3:
            recs.append(UVWRecord(parts[0], parts[1], UVW(parts[2])))
        elif len(parts) == 5:
            lo, hi, u, v, w = parts
            recs.append(UVWRecord(lo, hi, UVW(w, u, v)))
        else:
            raise ValueError(f"line {lineno}: expected 'lo hi [u v] w'")
    return UVWTable(recs)


def load_uvw_table(path) -> UVWTable:
    return parse_uvw_table(Path(path).read_text(encoding="utf-8"))


def format_uvw_table(records: Sequence[UVWRecord]) -> str:
    out = []
    for r in records:
        vals = [r.lo, r.hi] + ([r.uvw.u, r.uvw.v] if r.uvw.u is not None else []) + [r.uvw.w]
        out.append(" ".join(format_rational(v) for v in vals))
    return "\n".join(out) + "\n"


def data_dir() -> Path:
    return Path(__file__).parent / "data"


def load_canonical_uvw() -> UVWTable:
    return load_uvw_table(data_dir() / "canonical.uvw")


def published_table_paths() -> List[Path]:
    return sorted((data_dir() / "weights").glob("*.txt"))
