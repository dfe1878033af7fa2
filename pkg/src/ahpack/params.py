"""Algorithm parameters: boundary points, container proportions, tiny thresholds.

Classes are numbered 1..M+1. Class j is the size interval (t_j, t_{j-1}],
class 1 is huge, classes 2..b are large, b+1..M small and M+1 is tiny.
"""
from __future__ import annotations

import bisect
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import floor
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .numerics import RationalParseError, format_rational, parse_rational

HALF = Fraction(1, 2)
THIRD = Fraction(1, 3)

HUGE, LARGE, SMALL, TINY = "huge", "large", "small", "tiny"

# container kinds
REGULAR1 = "regular1"
TEMPORARY1 = "temporary1"
DECLARED2 = "declared2"
REGULAR2 = "regular2"
TYPE_I = "type"
LARGE_KINDS = (REGULAR1, TEMPORARY1, DECLARED2, REGULAR2)


class ParamsError(ValueError):
    """Parameter validation failure; ``issues`` lists every broken rule."""

    def __init__(self, issues: Sequence[str]):
        self.issues = list(issues)
        super().__init__("; ".join(self.issues))


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class ClassIndex:
    j: int
    kind: str


@dataclass(frozen=True)
class ClassTable:
    boundaries: Tuple[Fraction, ...]  # t_0 = 1 > t_1 = 1/2 > ... > t_M
    alphas: Dict[int, Dict[int, Fraction]]
    tiny: Tuple[Tuple[Fraction, Fraction], ...] = ()  # (A_i, alpha_i), i = 1..p
    _asc: List[Fraction] = field(default_factory=list, repr=False, compare=False)
    _b: List[int] = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        self._asc.extend(reversed(self.boundaries))
        self._b.append(self.boundaries.index(THIRD) if THIRD in self.boundaries else -1)

    @property
    def M(self) -> int:
        return len(self.boundaries) - 1

    @property
    def b(self) -> int:
        return self._b[0]

    @property
    def p(self) -> int:
        return len(self.tiny)

    def t(self, j: int) -> Fraction:
        return self.boundaries[j] if j <= self.M else Fraction(0)

    def kind(self, j: int) -> str:
        if j == 1:
            return HUGE
        if j <= self.b:
            return LARGE
        if j <= self.M:
            return SMALL
        return TINY

    def gamma(self, j: int) -> int:
        return floor(1 / self.t(j - 1))

    def types(self, j: int) -> List[int]:
        """Types with positive proportion, ascending."""
        if j == self.M + 1:
            return [i for i in range(1, self.p + 1)]
        return sorted(i for i, a in self.alphas.get(j, {}).items() if a > 0)

    def alpha(self, j: int, i: int) -> Fraction:
        if j == self.M + 1:
            return self.tiny[i - 1][1]
        return self.alphas.get(j, {}).get(i, Fraction(0))

    def classify(self, size: Fraction) -> ClassIndex:
        j = self.class_of(size)
        return ClassIndex(j, self.kind(j))

    def class_of(self, size: Fraction) -> int:
        if not 0 < size <= 1:
            raise DomainError(f"item size {size} outside (0,1]")
        pos = bisect.bisect_left(self._asc, size)
        return self.M - pos + 1

    def volume(self, j: int, i: int) -> Fraction:
        """Volume of a multi-item container of class j and type i."""
        if j == self.M + 1:
            return self.tiny[i - 1][0]
        return i * self.t(j - 1)


@dataclass(frozen=True)
class ContainerDescriptor:
    cls: int
    kind: str  # one of LARGE_KINDS, or TYPE_I
    i: int = 1
    first_item_size: Optional[Fraction] = None


def classify(size: Fraction, table: ClassTable) -> ClassIndex:
    return table.classify(size)


def container_volume(desc: ContainerDescriptor, table: ClassTable) -> Fraction:
    kind = table.kind(desc.cls)
    if kind == HUGE or desc.kind in (REGULAR1, TEMPORARY1):
        return desc.first_item_size
    if desc.kind in (DECLARED2, REGULAR2):
        return 2 * table.t(desc.cls - 1)
    return table.volume(desc.cls, desc.i)


def is_positive(desc: ContainerDescriptor, table: ClassTable) -> bool:
    return container_volume(desc, table) > HALF


def validate(table: ClassTable, canonical: bool = False) -> List[str]:
    issues = []
    t = table.boundaries
    if not t or t[0] != 1:
        issues.append("boundaries: t_0 must be 1")
    if any(a <= b for a, b in zip(t, t[1:])):
        issues.append("boundaries: not strictly decreasing")
    if HALF not in t:
        issues.append("boundaries: 1/2 missing")
    elif len(t) > 1 and t[1] != HALF:
        issues.append("boundaries: a boundary lies in (1/2,1)")
    if THIRD not in t:
        issues.append("boundaries: 1/3 missing")
    if issues:
        return issues
    for j in range(2, table.M + 1):
        al = table.alphas.get(j)
        if not al:
            issues.append(f"class {j}: no alpha values")
            continue
        if sum(al.values()) != 1:
            issues.append(f"class {j}: alphas sum to {sum(al.values())}, not 1")
        for i, a in al.items():
            if not 0 <= a <= 1:
                issues.append(f"class {j} type {i}: alpha {a} outside [0,1]")
            if not 1 <= i <= table.gamma(j):
                issues.append(f"class {j}: type {i} outside 1..{table.gamma(j)}")
        if table.kind(j) == LARGE and al.get(2, 0) <= 0:
            issues.append(f"class {j}: large class needs alpha_2 > 0")
    if table.tiny:
        thr = [A for A, _ in table.tiny]
        if any(a >= b for a, b in zip(thr, thr[1:])):
            issues.append("tiny: thresholds not increasing")
        if thr[0] < table.t(table.M) or thr[-1] > 1:
            issues.append("tiny: thresholds outside [t_M, 1]")
        if sum(a for _, a in table.tiny) != 1:
            issues.append("tiny: alphas do not sum to 1")
        if any(a <= 0 for _, a in table.tiny):
            issues.append("tiny: alphas must be positive")
    else:
        issues.append("tiny: no thresholds")
    if canonical:
        issues += _canonical_checks(table)
    return issues


def _canonical_checks(table: ClassTable) -> List[str]:
    issues = []
    if table.t(table.M) != Fraction(1, 43):
        issues.append("canonical: t_M must be 1/43")
    a1, a2 = Fraction(22145926, 78181827), Fraction(56035901, 78181827)
    for j in range(6, 166):
        if table.t(j) != Fraction(7, 20) - Fraction(j - 5, 9600):
            issues.append(f"canonical: t_{j} off the 1/9600 grid")
            break
        if table.alphas.get(j) != {1: a1, 2: a2}:
            issues.append(f"canonical: class {j} alphas differ")
            break
    return issues


def parse_params(text: str, canonical: bool = False) -> ClassTable:
    bounds: List[Fraction] = []
    alphas: Dict[int, Dict[int, Fraction]] = {}
    tiny: List[Tuple[int, Fraction, Fraction]] = []
    section = None
    issues = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            section = line.strip("[]").strip()
            if section not in ("boundaries", "alpha", "tiny"):
                issues.append(f"line {lineno}: unknown section {section!r}")
            continue
        parts = line.split()
        try:
            if section == "boundaries" and len(parts) == 1:
                bounds.append(parse_rational(parts[0]))
            elif section == "alpha" and len(parts) == 3:
                j, i = int(parts[0]), int(parts[1])
                alphas.setdefault(j, {})[i] = parse_rational(parts[2])
            elif section == "tiny" and len(parts) == 3:
                tiny.append((int(parts[0]), parse_rational(parts[1]), parse_rational(parts[2])))
            else:
                issues.append(f"line {lineno}: cannot parse {line!r}")
        except (RationalParseError, ValueError) as exc:
            issues.append(f"line {lineno}: {exc}")
    if issues:
        raise ParamsError(issues)
    if bounds and bounds[-1] == 0:
        bounds.pop()  # t_{M+1} = 0 is implicit
    tiny.sort()
    table = ClassTable(tuple(bounds), alphas, tuple((A, a) for _, A, a in tiny))
    issues = validate(table, canonical)
    if issues:
        raise ParamsError(issues)
    return table


def load_params(path, canonical: bool = False) -> ClassTable:
    return parse_params(Path(path).read_text(encoding="utf-8"), canonical)


def dump_params(table: ClassTable, header: str = "") -> str:
    out = [f"# {line}" for line in header.splitlines()]
    out.append("[boundaries]")
    out += [format_rational(t) for t in table.boundaries]
    out.append("[alpha]")
    for j in sorted(table.alphas):
        for i in sorted(table.alphas[j]):
            out.append(f"{j} {i} {format_rational(table.alphas[j][i])}")
    out.append("[tiny]")
    for n, (A, a) in enumerate(table.tiny, 1):
        out.append(f"{n} {format_rational(A)} {format_rational(a)}")
    return "\n".join(out) + "\n"


def canonical_path() -> Path:
    return Path(__file__).parent / "data" / "canonical.params"


def load_canonical() -> ClassTable:
    return load_params(canonical_path(), canonical=True)


# --- reconstruction from published weight tables -------------------------


@dataclass
class ClassReport:
    j: int
    status: str  # determined | ambiguous | undetermined | conflict
    candidates: List[Tuple[Tuple[int, ...], Tuple[Fraction, ...]]]
    note: str = ""


@dataclass
class ReconstructionReport:
    classes: Dict[int, ClassReport]
    tiny_candidates: List[Tuple[Fraction, Fraction]]

    def undetermined(self) -> List[int]:
        return [j for j, r in self.classes.items() if r.status != "determined"]


def _solve_exact(rows: List[List[Fraction]], rhs: List[Fraction]) -> Optional[List[Fraction]]:
    """Unique solution of an (over)determined exact system, or None."""
    n = len(rows[0])
    m = [list(r) + [b] for r, b in zip(rows, rhs)]
    piv_row = 0
    pivots = []
    for col in range(n):
        pr = next((r for r in range(piv_row, len(m)) if m[r][col] != 0), None)
        if pr is None:
            return None  # rank deficient
        m[piv_row], m[pr] = m[pr], m[piv_row]
        pv = m[piv_row][col]
        m[piv_row] = [v / pv for v in m[piv_row]]
        for r in range(len(m)):
            if r != piv_row and m[r][col] != 0:
                f = m[r][col]
                m[r] = [a - f * b for a, b in zip(m[r], m[piv_row])]
        pivots.append(piv_row)
        piv_row += 1
    if any(row[-1] != 0 for row in m[piv_row:]):
        return None  # inconsistent
    return [m[r][-1] for r in pivots]


def reconstruct_params(weight_tables, boundaries: Sequence[Fraction],
                       hints: Optional[Dict[int, Tuple[int, ...]]] = None,
                       tiny_first: Fraction = Fraction(17, 60), tiny_count: int = 2,
                       max_support: int = 3) -> Tuple[ClassTable, ReconstructionReport]:
    """Recover proportions by inverting published per-class item weights.

    For every class and every candidate type set of size up to ``max_support``
    the item-weight identities of all supplied tables, plus the sum-to-one
    condition, are solved exactly. A class is determined when exactly one
    candidate of minimal support survives, or when ``hints`` selects one.
    """
    from .scenarios import make_scenario
    from .weights import GapError, container_required_weight

    hints = hints or {}
    skeleton = ClassTable(tuple(boundaries), {})
    M = skeleton.M
    scen = [(make_scenario(wt.x, wt.y, skeleton), wt) for wt in weight_tables]
    alphas: Dict[int, Dict[int, Fraction]] = {}
    classes: Dict[int, ClassReport] = {}
    for j in range(2, M + 1):
        lo, hi = skeleton.t(j), skeleton.t(j - 1)
        obs = []
        for sc, wt in scen:
            if sc.k == j and not sc.basic:
                continue
            om = wt.weight_over(lo, hi)
            if om is not None:
                obs.append((sc, wt.w, om))
        found = []
        coef = {}
        for i in range(1, skeleton.gamma(j) + 1):
            try:
                coef[i] = [container_required_weight(j, i, sc, w, skeleton) - om * i for sc, w, om in obs]
            except GapError:
                continue  # this type would put a volume inside some scenario gap
        for size in range(1, max_support + 1):
            for types in itertools.combinations(sorted(coef), size):
                eqs = [[coef[i][e] for i in types] for e in range(len(obs))]
                # positive alphas need mixed signs (or all zeros) in each equation
                if any(max(r) < 0 or min(r) > 0 for r in eqs):
                    continue
                sol = _solve_exact([[Fraction(1)] * size] + eqs, [Fraction(1)] + [Fraction(0)] * len(eqs))
                if sol is not None and all(0 < a <= 1 for a in sol):
                    found.append((types, tuple(sol)))
        if j in hints:
            pick = [c for c in found if c[0] == tuple(hints[j])]
            status = "determined" if len(pick) == 1 else "conflict"
            note = "selected by hint"
        elif not found:
            pick, status, note = [], "undetermined", "no consistent type set"
        else:
            least = min(len(c[0]) for c in found)
            pick = [c for c in found if len(c[0]) == least]
            status = "determined" if len(pick) == 1 else "ambiguous"
            note = f"{len(found)} consistent type sets, minimal support {least}"
        classes[j] = ClassReport(j, status, found, note)
        if status == "determined":
            alphas[j] = dict(zip(*pick[0]))
    partial = ClassTable(tuple(boundaries), alphas)
    tiny_c = _reconstruct_tiny(scen, partial, tiny_first, tiny_count)
    tiny = ()
    if len(tiny_c) == 1:
        A2, a2 = tiny_c[0]
        tiny = ((tiny_first, 1 - a2), (A2, a2))
    return ClassTable(tuple(boundaries), alphas, tiny), ReconstructionReport(classes, tiny_c)


def _reconstruct_tiny(scen, partial: ClassTable, A1: Fraction, count: int):
    """Candidates (A_2, alpha_2) for a two-threshold tiny class."""
    from .weights import GapError, required_weight_for_volume
    if count != 2:
        return []
    tM = partial.t(partial.M)
    cands = {Fraction(1)}
    for j, al in partial.alphas.items():
        for i in al:
            A = partial.volume(j, i)
            cands |= {A, 1 - A}
    cands = sorted(c for c in cands if A1 < c <= 1)
    out = []
    for A2 in cands:
        sol = None
        ok = True
        for sc, wt in scen:
            try:
                r1 = required_weight_for_volume(A1, sc, wt.w)
                r2 = required_weight_for_volume(A2, sc, wt.w)
            except GapError:
                ok = False
                break
            rho = wt.rho
            # rho*((A1-tM)(1-a) + (A2-tM)a) = r1(1-a) + r2 a, linear in a
            c0 = rho * (A1 - tM) - r1
            c1 = rho * (A2 - tM) - r2 - c0
            if c1 == 0:
                if c0 != 0:
                    ok = False
                    break
                continue
            a = -c0 / c1
            if sol is None:
                sol = a
            elif sol != a:
                ok = False
                break
        if ok and sol is not None and 0 < sol < 1:
            out.append((A2, sol))
    return out
