"""Value sets, scenario enumeration and the terminal quantity a."""
from __future__ import annotations

import bisect
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Set, Tuple

from .numerics import format_rational
from .params import HALF, SMALL, TINY, ClassTable


@dataclass(frozen=True)
class Scenario:
    x: Fraction
    y: Fraction
    k: int
    basic: bool

    def label(self) -> str:
        return f"({self.x},{self.y}]"


@dataclass(frozen=True)
class ScenarioContext:
    a: Fraction
    a_prime: Fraction
    scenario: Scenario


def make_scenario(x: Fraction, y: Fraction, table: ClassTable) -> Scenario:
    """Scenario (x,y] with its threshold class, i.e. (x,y] inside (t_k, t_{k-1}]."""
    x, y = Fraction(x), Fraction(y)
    if not 0 <= x < y <= HALF:
        raise ValueError(f"bad scenario ({x},{y}]")
    k = table.class_of(y)
    if x < table.t(k):
        raise ValueError(f"scenario ({x},{y}] straddles boundary t_{k} = {table.t(k)}")
    return Scenario(x, y, k, table.kind(k) in (SMALL, TINY))


def build_value_sets(table: ClassTable) -> Tuple[Set[Fraction], List[Fraction]]:
    V = {table.t(j) for j in range(1, table.M + 2)}
    for j in range(2, table.M + 2):
        for i in table.types(j):
            A = table.volume(j, i)
            V |= {A, 1 - A}
    return V, sorted(v for v in V if v <= HALF)


def enumerate_scenarios(table: ClassTable) -> List[Scenario]:
    _, vp = build_value_sets(table)
    return [make_scenario(x, y, table) for x, y in zip(vp, vp[1:])]


def locate_scenario(value: Fraction, scenarios: Sequence[Scenario]) -> Scenario:
    """The scenario whose (x,y] contains ``value``."""
    ys = [s.y for s in scenarios]
    pos = bisect.bisect_left(ys, value)
    if pos == len(scenarios) or not scenarios[pos].x < value:
        raise ValueError(f"{value} is not covered by any scenario")
    return scenarios[pos]


def compute_a(state, scenarios: Optional[Sequence[Scenario]] = None) -> Optional[ScenarioContext]:
    """Terminal a and its scenario; None for an empty run."""
    if state.min_size is None:
        return None
    a_prime = 1 - state.min_size / 2
    vols = state.unmatched_positive_volumes()
    a = min(min(vols), a_prime) if vols else a_prime
    if scenarios is None:
        scenarios = enumerate_scenarios(state.table)
    return ScenarioContext(a, a_prime, locate_scenario(1 - a, scenarios))


def format_scenarios(scenarios: Sequence[Scenario]) -> str:
    return "".join(
        f"{format_rational(s.x)} {format_rational(s.y)} {s.k} {'basic' if s.basic else 'large'}\n"
        for s in scenarios)
