"""Worst-bin knapsacks over the finite size alphabet Delta.

Each Delta item (t_j, weight) stands for the items of class j: their sizes
exceed t_j, so a multiset of Delta items whose total size stays strictly
below the capacity dominates any real bin content. Space left over is
filled with tiny "sand" of density rho.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import List, Optional, Tuple

from .params import HALF, LARGE, ClassTable
from .scenarios import Scenario
from .weights import WeightFunction

Pattern = Tuple[Tuple[Fraction, int], ...]


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class DeltaSet:
    items: Tuple[Tuple[Fraction, Fraction], ...]  # (size, weight), densest first
    capacity: Fraction
    base_weight: Fraction
    rho: Fraction
    strict: bool = True


@dataclass(frozen=True)
class BnbResult:
    max_weight: Fraction
    worst_pattern: Pattern
    nodes_explored: int


def density_order(items) -> Tuple[Tuple[Fraction, Fraction], ...]:
    # ties go to the larger size
    return tuple(sorted(items, key=lambda it: (-(it[1] / it[0]), -it[0])))


def make_delta(items, capacity, base_weight, rho, strict=True) -> DeltaSet:
    return DeltaSet(density_order(items), Fraction(capacity), Fraction(base_weight), Fraction(rho), strict)


def build_delta_case1(scenario: Scenario, wf: WeightFunction, table: ClassTable) -> DeltaSet:
    """The bin holds a huge item of size at least a; the rest fits below y."""
    k = scenario.k
    items = []
    for j in range(k, table.M + 1):
        if j == k and table.kind(k) == LARGE:
            items.append((table.t(k), wf.uvw.u))
        else:
            items.append((table.t(j), wf.omega[j]))
    return make_delta(items, scenario.y, 1, wf.rho)


def build_delta_case2(scenario: Scenario, wf: WeightFunction, table: ClassTable) -> DeltaSet:
    """No huge item of size at least a."""
    k = scenario.k
    items = [(HALF, wf.uvw.w)]
    for j in range(2, table.M + 1):
        if j == k and table.kind(k) == LARGE:
            if scenario.x == table.t(k):
                items.append((scenario.x, wf.uvw.v))
            else:
                items += [(table.t(k), wf.uvw.u), (scenario.x, wf.uvw.v)]
        else:
            items.append((table.t(j), wf.omega[j]))
    return make_delta(items, 1, 0, wf.rho)


def reduce_delta(delta: DeltaSet) -> DeltaSet:
    """Drop items that can never help the maximum.

    An item loses to sand when weight <= rho * size, and to another item that
    is no larger and no lighter (swap it in and fill the freed space with
    sand). Both removals leave the optimum value unchanged.
    """
    kept: List[Tuple[Fraction, Fraction]] = []
    best_w: Optional[Fraction] = None
    for s, w in sorted(set(delta.items), key=lambda it: (it[0], -it[1])):
        if w <= delta.rho * s or (best_w is not None and w <= best_w):
            continue
        kept.append((s, w))
        best_w = w
    return make_delta(kept, delta.capacity, delta.base_weight, delta.rho, delta.strict)


class _Scaled:
    """Delta on a common integer grid: sizes in units of 1/q, weights of 1/wd."""

    def __init__(self, delta: DeltaSet):
        q = delta.capacity.denominator
        for s, _ in delta.items:
            q = lcm(q, s.denominator)
        wd = delta.rho.denominator
        for _, w in delta.items:
            wd = lcm(wd, w.denominator)
        self.q, self.wd = q, wd
        self.sizes = [int(s * q) for s, _ in delta.items]
        self.weights = [int(w * wd) for _, w in delta.items]
        self.cap = int(delta.capacity * q)
        self.limit = self.cap - 1 if delta.strict else self.cap
        per_unit = delta.rho * wd / q  # sand weight per grid unit, in 1/wd units
        self.rn, self.rd = per_unit.numerator, per_unit.denominator

    def value(self, size: int, wsum: int) -> int:
        """Bin weight in units of 1/(wd*rd), sand filling up to the full capacity."""
        return wsum * self.rd + self.rn * (self.cap - size)

    def result(self, delta: DeltaSet, best: int, counts: List[int], nodes: int) -> BnbResult:
        val = delta.base_weight + Fraction(best, self.wd * self.rd)
        pat = tuple((delta.items[i][0], c) for i, c in enumerate(counts) if c)
        return BnbResult(val, pat, nodes)


def solve_bnb(delta: DeltaSet, node_budget: int = 10**9, prune: bool = True) -> BnbResult:
    """Branch and bound over item multiplicities, densest item first.

    Counts are tried from the maximum down to zero. A node is cut when
    neither the next item's density nor the sand density can lift the
    current weight above the incumbent.
    """
    if not delta.items:
        return BnbResult(delta.base_weight + delta.rho * delta.capacity, (), 1)
    sc = _Scaled(delta)
    S, W, N = sc.sizes, sc.weights, len(sc.sizes)
    rn, rd = sc.rn, sc.rd
    counts = [0] * N
    best = [-1, None]
    nodes = [0]

    def rec(i: int, size: int, wsum: int):
        nodes[0] += 1
        if nodes[0] > node_budget:
            raise BudgetExceeded(f"more than {node_budget} nodes")
        if i == N:
            val = sc.value(size, wsum)
            if val > best[0]:
                best[0], best[1] = val, list(counts)
            return
        if prune and best[1] is not None:
            es = sc.cap - size
            # wsum + density_i * es < best  and  wsum + rho * es < best
            if (wsum * S[i] + W[i] * es) * rd < best[0] * S[i] and wsum * rd + rn * es < best[0]:
                return
        for c in range((sc.limit - size) // S[i], -1, -1):
            counts[i] = c
            rec(i + 1, size + c * S[i], wsum + c * W[i])
        counts[i] = 0

    rec(0, 0, 0)
    return sc.result(delta, best[0], best[1], nodes[0])


def solve_exhaustive(delta: DeltaSet, max_types: int = 14) -> BnbResult:
    """Every feasible multiset, no bounding. Oracle for :func:`solve_bnb`."""
    if len(delta.items) > max_types:
        raise ValueError(f"{len(delta.items)} item types exceed the limit {max_types}")
    if not delta.items:
        return BnbResult(delta.base_weight + delta.rho * delta.capacity, (), 1)
    sc = _Scaled(delta)
    S, W, N = sc.sizes, sc.weights, len(sc.sizes)
    counts = [0] * N
    best = [-1, None]
    nodes = [0]

    def rec(i: int, size: int, wsum: int):
        if i == N:
            nodes[0] += 1
            val = sc.value(size, wsum)
            if val > best[0]:
                best[0], best[1] = val, list(counts)
            return
        c = 0
        while size + c * S[i] <= sc.limit:
            counts[i] = c
            rec(i + 1, size + c * S[i], wsum + c * W[i])
            c += 1
        counts[i] = 0

    rec(0, 0, 0)
    return sc.result(delta, best[0], best[1], nodes[0])


def truncate(delta: DeltaSet, n: int) -> DeltaSet:
    """Keep the ``n`` densest item types."""
    return DeltaSet(delta.items[:n], delta.capacity, delta.base_weight, delta.rho, delta.strict)


def pattern_weight(delta: DeltaSet, pattern) -> Fraction:
    """Bin weight of an explicit multiset of Delta sizes plus sand."""
    wmap = dict(delta.items)
    total = sum(s * c for s, c in pattern)
    return delta.base_weight + sum(wmap[s] * c for s, c in pattern) + delta.rho * (delta.capacity - total)


def format_pattern(pattern: Pattern) -> str:
    return ",".join(f"{s.numerator}/{s.denominator}x{c}" for s, c in pattern) or "-"
