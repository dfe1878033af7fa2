"""The Advanced Harmonic online packing procedure.

Items are grouped into containers; a bin holds at most one positive
(volume > 1/2) and one negative (volume <= 1/2) container. Every free choice
is made by Best Fit on container volumes, ties going to the lowest id.

Bins waiting for a partner are kept in three sorted indexes keyed by
(resident volume, -bin id): positive bins, negative bins whose container is
not temporary type 1, and bins holding a temporary type 1 container.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .params import (DECLARED2, HALF, HUGE, LARGE, REGULAR1, REGULAR2, TEMPORARY1, TINY,
                     TYPE_I, ClassTable, ContainerDescriptor, DomainError)

_INF = float("inf")


def _floor_mul(a: Fraction, n: int) -> int:
    return (a.numerator * n) // a.denominator


class Container:
    __slots__ = ("id", "cls", "kind", "i", "items", "total", "bin", "volume", "open")

    def __init__(self, cid: int, cls: int, kind: str, i: int, volume: Fraction):
        self.id = cid
        self.cls = cls
        self.kind = kind
        self.i = i
        self.items: List[Fraction] = []
        self.total = Fraction(0)
        self.bin = -1
        self.volume = volume
        self.open = False

    @property
    def positive(self) -> bool:
        return self.volume > HALF

    @property
    def descriptor(self) -> ContainerDescriptor:
        return ContainerDescriptor(self.cls, self.kind, self.i, self.items[0] if self.items else None)

    def kind_label(self) -> str:
        return f"type{self.i}" if self.kind == TYPE_I else self.kind


class Bin:
    __slots__ = ("id", "pos", "neg")

    def __init__(self, bid: int):
        self.id = bid
        self.pos: Optional[Container] = None
        self.neg: Optional[Container] = None

    def containers(self) -> List[Container]:
        return [c for c in (self.pos, self.neg) if c is not None]

    def total(self) -> Fraction:
        return sum((c.total for c in self.containers()), Fraction(0))


@dataclass
class PlacementEvent:
    item: int
    size: Fraction
    cls: int
    container: int
    kind: str
    bin: int
    transition: Optional[str] = None

    def line(self) -> str:
        base = f"{self.item} {self.cls} {self.container} {self.kind} {self.bin}"
        return base + (f" {self.transition}" if self.transition else "")


class _Index:
    """Sorted (volume, -bin id) keys with Best Fit lookup."""

    __slots__ = ("keys",)

    def __init__(self):
        self.keys: List[Tuple[Fraction, int]] = []

    def add(self, vol: Fraction, bid: int):
        bisect.insort(self.keys, (vol, -bid))

    def remove(self, vol: Fraction, bid: int):
        pos = bisect.bisect_left(self.keys, (vol, -bid))
        del self.keys[pos]

    def best(self, limit: Fraction) -> Optional[Tuple[Fraction, int]]:
        """Largest key with volume <= limit (lowest bin id among equals)."""
        pos = bisect.bisect_right(self.keys, (limit, _INF)) - 1
        return self.keys[pos] if pos >= 0 else None

    def top(self) -> Optional[Tuple[Fraction, int]]:
        return self.keys[-1] if self.keys else None

    def __len__(self):
        return len(self.keys)


@dataclass
class ClassCounters:
    n: Dict[int, int] = field(default_factory=dict)
    n_i: Dict[int, Dict[int, int]] = field(default_factory=dict)
    N: Dict[int, int] = field(default_factory=dict)
    beta: Dict[int, int] = field(default_factory=dict)
    open_count: Dict[int, int] = field(default_factory=dict)

    def ni(self, j: int, i: int) -> int:
        return self.n_i.get(j, {}).get(i, 0)

    def bump(self, j: int, i: int, d: int = 1):
        row = self.n_i.setdefault(j, {})
        row[i] = row.get(i, 0) + d


def best_fit_select(candidates: Sequence[Tuple[int, Fraction]], new_volume: Fraction) -> Optional[int]:
    """Bin id with the largest resident volume that still fits; lowest id on ties."""
    best = None
    for bid, vol in candidates:
        if vol + new_volume <= 1 and (best is None or (vol, -bid) > (best[1], -best[0])):
            best = (bid, vol)
    return None if best is None else best[0]


class PackingState:
    def __init__(self, table: ClassTable):
        self.table = table
        self.bins: List[Bin] = []
        self.containers: List[Container] = []
        self.items: List[Fraction] = []
        self.min_size: Optional[Fraction] = None
        self.counters = ClassCounters()
        self.open_container: Dict[int, Container] = {}
        self.declared: Dict[int, List[Container]] = {}
        self.trace: List[PlacementEvent] = []
        self.pos_idx = _Index()
        self.neg_idx = _Index()
        self.temp_idx = _Index()
        self.temp_by_class: Dict[int, _Index] = {}
        self.touched_classes: Set[int] = set()
        self.touched_bins: Set[int] = set()
        self._transition: Optional[str] = None

    # --- queries -----------------------------------------------------------

    def bins_used(self) -> int:
        return len(self.bins)

    def unmatched_positive_volumes(self) -> List[Fraction]:
        return [vol for vol, _ in self.pos_idx.keys]

    def theta(self) -> Tuple[Optional[Fraction], Optional[Fraction]]:
        """Smallest resident volume over negative bins and over positive bins."""
        negs = [ix.keys[0][0] for ix in (self.neg_idx, self.temp_idx) if ix.keys]
        th_neg = min(negs) if negs else None
        th_pos = self.pos_idx.keys[0][0] if self.pos_idx.keys else None
        return th_neg, th_pos

    # --- bin index bookkeeping ----------------------------------------------

    def _unindex(self, b: Bin):
        if b.pos is not None and b.neg is None:
            self.pos_idx.remove(b.pos.volume, b.id)
        elif b.neg is not None and b.pos is None:
            c = b.neg
            if c.kind == TEMPORARY1:
                self.temp_idx.remove(c.volume, b.id)
                ix = self.temp_by_class[c.cls]
                ix.remove(c.volume, b.id)
                if not ix:
                    del self.temp_by_class[c.cls]
            else:
                self.neg_idx.remove(c.volume, b.id)

    def _index(self, b: Bin):
        self.touched_bins.add(b.id)
        if b.pos is not None and b.neg is None:
            self.pos_idx.add(b.pos.volume, b.id)
        elif b.neg is not None and b.pos is None:
            c = b.neg
            if c.kind == TEMPORARY1:
                self.temp_idx.add(c.volume, b.id)
                self.temp_by_class.setdefault(c.cls, _Index()).add(c.volume, b.id)
            else:
                self.neg_idx.add(c.volume, b.id)

    def _new_bin(self, c: Container) -> Bin:
        b = Bin(len(self.bins))
        self.bins.append(b)
        self._place(b, c)
        self._index(b)
        return b

    def _join(self, bid: int, c: Container) -> Bin:
        b = self.bins[bid]
        self._unindex(b)
        self._place(b, c)
        self._index(b)
        return b

    def _place(self, b: Bin, c: Container):
        if c.positive:
            assert b.pos is None
            b.pos = c
        else:
            assert b.neg is None
            b.neg = c
        c.bin = b.id

    # --- containers ----------------------------------------------------------

    def _new_container(self, cls: int, kind: str, i: int, volume: Fraction) -> Container:
        c = Container(len(self.containers), cls, kind, i, volume)
        self.containers.append(c)
        self.counters.n[cls] = self.counters.n.get(cls, 0) + 1
        self.counters.bump(cls, 2 if kind in (DECLARED2, REGULAR2) else i)
        self.touched_classes.add(cls)
        return c

    def _add_item(self, c: Container, size: Fraction):
        was_open = c.open
        c.items.append(size)
        c.total += size
        kind = self.table.kind(c.cls)
        if kind == TINY:
            c.open = c.total <= c.volume - self.table.t(self.table.M)
        elif kind == LARGE or kind == HUGE:
            c.open = False
        else:
            c.open = len(c.items) < c.i
        oc = self.counters.open_count
        oc[c.cls] = oc.get(c.cls, 0) + int(c.open) - int(was_open)

    def _retype(self, c: Container, kind: str, volume: Optional[Fraction] = None):
        """Change a large container's kind; the caller handles bin indexes."""
        old = c.kind
        cnt = self.counters
        old_i = 2 if old in (DECLARED2, REGULAR2) else 1
        new_i = 2 if kind in (DECLARED2, REGULAR2) else 1
        if old_i != new_i:
            cnt.bump(c.cls, old_i, -1)
            cnt.bump(c.cls, new_i, 1)
        if old == DECLARED2:
            cnt.beta[c.cls] -= 1
            self.declared[c.cls].remove(c)
        if kind == DECLARED2:
            cnt.beta[c.cls] = cnt.beta.get(c.cls, 0) + 1
            self.declared.setdefault(c.cls, []).append(c)
        c.kind = kind
        if volume is not None:
            c.volume = volume
        self.touched_classes.add(c.cls)
        self._transition = f"c{c.id}:{old}->{kind}"

    # --- packing ------------------------------------------------------------

    def pack_item(self, size: Fraction) -> PlacementEvent:
        size = Fraction(size)
        j = self.table.class_of(size)
        kind = self.table.kind(j)
        self.touched_classes = {j}
        self.touched_bins = set()
        self._transition = None
        if kind == HUGE:
            c = self._pack_huge(size)
        elif kind == LARGE:
            c = self._pack_large(size, j)
        else:
            c = self._pack_small_tiny(size, j)
        self.counters.N[j] = self.counters.N.get(j, 0) + 1
        self.items.append(size)
        if self.min_size is None or size < self.min_size:
            self.min_size = size
        ev = PlacementEvent(len(self.items) - 1, size, j, c.id, c.kind_label(), c.bin, self._transition)
        self.trace.append(ev)
        return ev

    def _pack_huge(self, size: Fraction) -> Container:
        c = self._new_container(1, TYPE_I, 1, size)
        self._add_item(c, size)
        limit = 1 - size
        cands = [k for k in (self.neg_idx.best(limit), self.temp_idx.best(limit)) if k is not None]
        if not cands:
            self._new_bin(c)
            return c
        bid = -max(cands)[1]
        b = self.bins[bid]
        self._unindex(b)
        if b.neg.kind == TEMPORARY1:
            self._retype(b.neg, REGULAR1)
        self._place(b, c)
        self._index(b)
        return c

    def _pack_large(self, size: Fraction, j: int) -> Container:
        t = self.table
        cnt = self.counters
        decl = self.declared.get(j)
        if decl:
            c = min(decl, key=lambda d: d.id)
            self._add_item(c, size)
            self._retype(c, REGULAR2)
            self.touched_bins.add(c.bin)
            return c
        n = cnt.n.get(j, 0)
        cap2 = _floor_mul(t.alpha(j, 2), n)
        if cnt.ni(j, 2) >= cap2:
            c = self._new_container(j, TEMPORARY1, 1, size)
            self._add_item(c, size)
            hit = self.pos_idx.best(1 - size)
            if hit is None:
                self._new_bin(c)
            else:
                c.kind = REGULAR1
                self._join(-hit[1], c)
            return c
        vol2 = 2 * t.t(j - 1)
        hit = self.neg_idx.best(1 - vol2)
        if hit is None:
            # a temporary type 1 container (volume > 1/3) never fits next to
            # a type 2 volume (> 2/3); kept for completeness
            hit = self.temp_idx.best(1 - vol2)
        if hit is not None:
            c = self._new_container(j, DECLARED2, 2, vol2)
            cnt.beta[j] = cnt.beta.get(j, 0) + 1
            self.declared.setdefault(j, []).append(c)
            self._add_item(c, size)
            b = self.bins[-hit[1]]
            self._unindex(b)
            if b.neg.kind == TEMPORARY1:
                self._retype(b.neg, REGULAR1)
            self._place(b, c)
            self._index(b)
            return c
        tix = self.temp_by_class.get(j)
        if tix:
            b = self.bins[-tix.top()[1]]
            c = b.neg
            self._unindex(b)
            self._add_item(c, size)
            self._retype(c, REGULAR2, vol2)
            b.neg = None
            self._place(b, c)
            self._index(b)
            return c
        c = self._new_container(j, DECLARED2, 2, vol2)
        cnt.beta[j] = cnt.beta.get(j, 0) + 1
        self.declared.setdefault(j, []).append(c)
        self._add_item(c, size)
        self._new_bin(c)
        return c

    def _choose_type(self, j: int) -> int:
        t = self.table
        n = self.counters.n.get(j, 0)
        for i in t.types(j):
            if self.counters.ni(j, i) <= _floor_mul(t.alpha(j, i), n):
                return i
        raise AssertionError(f"no admissible type for class {j}")

    def _pack_small_tiny(self, size: Fraction, j: int) -> Container:
        oc = self.open_container.get(j)
        if oc is not None:
            self._add_item(oc, size)
            if not oc.open:
                del self.open_container[j]
            self.touched_bins.add(oc.bin)
            return oc
        i = self._choose_type(j)
        c = self._new_container(j, TYPE_I, i, self.table.volume(j, i))
        self._add_item(c, size)
        if c.open:
            self.open_container[j] = c
        if c.positive:
            self._place_positive(c)
        else:
            self._place_negative(c)
        return c

    def _place_positive(self, c: Container):
        limit = 1 - c.volume
        hit = self.neg_idx.best(limit)
        if hit is not None:
            self._join(-hit[1], c)
            return
        hit = self.temp_idx.best(limit)
        if hit is not None:
            b = self.bins[-hit[1]]
            self._unindex(b)
            self._retype(b.neg, REGULAR1)
            self._place(b, c)
            self._index(b)
            return
        self._new_bin(c)

    def _place_negative(self, c: Container):
        hit = self.pos_idx.best(1 - c.volume)
        if hit is not None:
            self._join(-hit[1], c)
            return
        t = self.table
        cnt = self.counters
        pick = None
        for jj, ix in self.temp_by_class.items():
            vol2 = 2 * t.t(jj - 1)
            if vol2 + c.volume > 1:
                continue
            if cnt.ni(jj, 2) > _floor_mul(t.alpha(jj, 2), cnt.n.get(jj, 0)) - 1:
                continue
            key = (ix.top()[0], -jj)
            if pick is None or key > pick[0]:
                pick = (key, jj, ix.top())
        if pick is None:
            self._new_bin(c)
            return
        jj, top = pick[1], pick[2]
        b = self.bins[-top[1]]
        self._unindex(b)
        temp = b.neg
        self._retype(temp, DECLARED2, 2 * t.t(jj - 1))
        b.neg = None
        self._place(b, temp)
        self._place(b, c)
        self._index(b)


def new_state(table: ClassTable) -> PackingState:
    return PackingState(table)


def pack_item(state: PackingState, size: Fraction) -> PlacementEvent:
    return state.pack_item(size)


def format_trace(events: Iterable[PlacementEvent]) -> str:
    return "".join(ev.line() + "\n" for ev in events)


# --- audit ----------------------------------------------------------------------


@dataclass
class Check:
    name: str
    passed: bool
    witness: str = ""


@dataclass
class AuditReport:
    checks: List[Check]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> List[Check]:
        return [c for c in self.checks if not c.passed]


def _large_checks(state: PackingState, j: int) -> List[Check]:
    t, cnt = state.table, state.counters
    a1, a2 = t.alpha(j, 1), t.alpha(j, 2)
    n, n1, n2 = cnt.n.get(j, 0), cnt.ni(j, 1), cnt.ni(j, 2)
    N, beta = cnt.N.get(j, 0), cnt.beta.get(j, 0)
    wit = f"class {j}: n={n} n1={n1} n2={n2} N={N} beta={beta}"
    return [
        Check("n2 <= floor(a2 n)", n2 <= _floor_mul(a2, n), wit),
        Check("n1 <= floor(a1 n) + 2", n1 <= _floor_mul(a1, n) + 2, wit),
        Check("n2 >= a2 n - 2", n2 >= a2 * n - 2, wit),
        Check("n1 >= a1 n", n1 >= a1 * n, wit),
        Check("(N+beta)/(1+a2) <= n", Fraction(N + beta) / (1 + a2) <= n, wit),
        Check("n <= N/(1+a2) + 2", n <= Fraction(N) / (1 + a2) + 2, wit),
        Check("beta <= 4", beta <= 4, wit),
    ]


def _bin_checks(state: PackingState, b: Bin) -> List[Check]:
    fails = []
    if b.total() > 1:
        fails.append(f"total {b.total()}")
    if b.pos is not None and not b.pos.positive:
        fails.append("positive slot holds a negative container")
    if b.neg is not None and b.neg.positive:
        fails.append("negative slot holds a positive container")
    for c in b.containers():
        if c.kind == TEMPORARY1 and b.pos is not None:
            fails.append(f"temporary container c{c.id} is co-packed")
        if c.total > c.volume:
            fails.append(f"c{c.id} holds {c.total} > volume {c.volume}")
    return [Check("bin", not fails, f"bin {b.id}: " + "; ".join(fails))]


def _container_checks(state: PackingState, c: Container) -> List[Check]:
    t = state.table
    kind = t.kind(c.cls)
    bad = ""
    if kind == TINY:
        if c.open != (c.total <= c.volume - t.t(t.M)):
            bad = "tiny open flag disagrees with contents"
    elif kind == LARGE:
        want = {REGULAR1: 1, TEMPORARY1: 1, DECLARED2: 1, REGULAR2: 2}[c.kind]
        if len(c.items) != want:
            bad = f"{c.kind} holds {len(c.items)} items"
    elif kind != HUGE:
        if len(c.items) > c.i or c.open != (len(c.items) < c.i):
            bad = f"type {c.i} holds {len(c.items)} items"
    return [Check("container", not bad, f"c{c.id}: {bad}")]


def _recount(state: PackingState) -> List[Check]:
    n: Dict[int, int] = {}
    ni: Dict[Tuple[int, int], int] = {}
    beta: Dict[int, int] = {}
    opened: Dict[int, int] = {}
    for c in state.containers:
        n[c.cls] = n.get(c.cls, 0) + 1
        i = 2 if c.kind in (DECLARED2, REGULAR2) else c.i
        ni[c.cls, i] = ni.get((c.cls, i), 0) + 1
        if c.kind == DECLARED2:
            beta[c.cls] = beta.get(c.cls, 0) + 1
        if c.open:
            opened[c.cls] = opened.get(c.cls, 0) + 1
    cnt = state.counters
    bad = [j for j in set(n) | set(cnt.n) if n.get(j, 0) != cnt.n.get(j, 0)]
    bad += [f"{j}/{i}" for (j, i), v in ni.items() if cnt.ni(j, i) != v]
    bad += [f"beta {j}" for j in set(beta) | set(cnt.beta) if beta.get(j, 0) != cnt.beta.get(j, 0)]
    bad += [f"open {j}" for j in set(opened) | set(cnt.open_count)
            if opened.get(j, 0) != cnt.open_count.get(j, 0)]
    return [Check("counters match recount", not bad, ", ".join(map(str, bad)))]


def audit(state: PackingState, full: bool = True) -> AuditReport:
    """Check the structural invariants.

    ``full=False`` restricts the per-class and per-bin checks to what the last
    item touched, which is enough when called after every item.
    """
    t = state.table
    if full:
        classes: Iterable[int] = range(1, t.M + 2)
        bins: Iterable[Bin] = state.bins
        checks = _recount(state)
        for c in state.containers:
            checks += _container_checks(state, c)
    else:
        classes = state.touched_classes
        bins = [state.bins[i] for i in state.touched_bins]
        checks = []
        for i in state.touched_bins:
            for c in state.bins[i].containers():
                checks += _container_checks(state, c)
    for j in classes:
        kind = t.kind(j)
        if kind == LARGE:
            checks += _large_checks(state, j)
        elif kind != HUGE:
            k = state.counters.open_count.get(j, 0)
            checks.append(Check("at most one open container", k <= 1, f"class {j}: {k} open"))
    for b in bins:
        checks += _bin_checks(state, b)
    th_neg, th_pos = state.theta()
    if th_neg is not None and th_pos is not None:
        checks.append(Check("theta_neg + theta_pos > 1", th_neg + th_pos > 1,
                            f"theta_neg={th_neg} theta_pos={th_pos}"))
    if full:
        checks += _index_checks(state)
    return AuditReport(checks)


def _index_checks(state: PackingState) -> List[Check]:
    """The waiting-bin indexes agree with the bins themselves."""
    pos, neg, tmp = [], [], []
    for b in state.bins:
        if b.pos is not None and b.neg is None:
            pos.append((b.pos.volume, -b.id))
        elif b.neg is not None and b.pos is None:
            (tmp if b.neg.kind == TEMPORARY1 else neg).append((b.neg.volume, -b.id))
        elif b.pos is None and b.neg is None:
            return [Check("bin index", False, f"bin {b.id} is empty")]
    ok = sorted(pos) == state.pos_idx.keys and sorted(neg) == state.neg_idx.keys \
        and sorted(tmp) == state.temp_idx.keys
    return [Check("bin index", ok, "" if ok else "index out of sync")]


def run_stream(table: ClassTable, sizes: Iterable[Fraction], audit_each: bool = False,
               full_audit_every: int = 0) -> Tuple[PackingState, List[str]]:
    """Pack a whole stream; returns the state and any audit failure messages."""
    st = PackingState(table)
    problems: List[str] = []
    for n, s in enumerate(sizes, 1):
        st.pack_item(s)
        if audit_each:
            rep = audit(st, full=bool(full_audit_every) and n % full_audit_every == 0)
            problems += [f"item {n - 1}: {c.name} ({c.witness})" for c in rep.failures()]
            if problems:
                break
    return st, problems


def check_size(size: Fraction):
    if not 0 < size <= 1:
        raise DomainError(f"item size {size} outside (0,1]")
