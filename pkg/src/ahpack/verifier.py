"""Scenario-by-scenario certification and empirical weight checks."""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .knapsack import (BnbResult, BudgetExceeded, build_delta_case1, build_delta_case2,
                       format_pattern, reduce_delta, solve_bnb)
from .numerics import format_rational, parse_rational
from .params import ClassTable
from .scenarios import Scenario, compute_a, enumerate_scenarios, make_scenario
from .weights import (UVW, InfeasibleUVW, UVWTable, WeightFunction, build_weight_function, check_uvw,
                      feasible_uvw, total_item_weight)

CERTIFIED = "certified"
INFEASIBLE = "infeasible"
MISSING = "missing-uvw"
BUDGET = "budget-exceeded"

THEOREM_BOUND = Fraction(10060574276093395247, 6374352691333693440)


@dataclass
class ScenarioReport:
    scenario: Scenario
    uvw: Optional[UVW]
    feasible: bool
    status: str
    r_case1: Optional[Fraction] = None
    r_case2: Optional[Fraction] = None
    patterns: Tuple[tuple, tuple] = ((), ())
    nodes: int = 0
    canonical: bool = True
    note: str = ""

    @property
    def r(self) -> Optional[Fraction]:
        if self.r_case1 is None:
            return None
        return max(self.r_case1, self.r_case2)

    @property
    def worst_pattern(self):
        if self.r is None:
            return ()
        return self.patterns[0] if self.r_case1 >= self.r_case2 else self.patterns[1]


@dataclass
class GlobalReport:
    reports: List[ScenarioReport]
    uncovered: List[Scenario] = field(default_factory=list)

    @property
    def certified(self) -> List[ScenarioReport]:
        return [r for r in self.reports if r.status == CERTIFIED]

    @property
    def global_r(self) -> Optional[Fraction]:
        rs = [r.r for r in self.certified]
        return max(rs) if rs else None

    def failures(self) -> List[ScenarioReport]:
        return [r for r in self.reports if r.status in (INFEASIBLE, BUDGET)]


def solve_cases(wf: WeightFunction, table: ClassTable, node_budget: int = 10**9,
                reduce: bool = True) -> Tuple[BnbResult, BnbResult]:
    out = []
    for build in (build_delta_case1, build_delta_case2):
        delta = build(wf.scenario, wf, table)
        if reduce:
            delta = reduce_delta(delta)
        out.append(solve_bnb(delta, node_budget))
    return out[0], out[1]


def verify_weight_function(wf: WeightFunction, table: ClassTable, node_budget: int = 10**9,
                           reduce: bool = True, canonical: bool = True) -> ScenarioReport:
    try:
        r1, r2 = solve_cases(wf, table, node_budget, reduce)
    except BudgetExceeded as exc:
        return ScenarioReport(wf.scenario, wf.uvw, True, BUDGET, canonical=canonical, note=str(exc))
    return ScenarioReport(wf.scenario, wf.uvw, True, CERTIFIED, r1.max_weight, r2.max_weight,
                          (r1.worst_pattern, r2.worst_pattern), r1.nodes_explored + r2.nodes_explored,
                          canonical)


def verify_scenario(scenario: Scenario, table: ClassTable, uvw: Optional[UVW],
                    node_budget: int = 10**9, reduce: bool = True,
                    canonical: bool = True) -> ScenarioReport:
    if uvw is None:
        return ScenarioReport(scenario, None, False, MISSING, canonical=canonical)
    verdict = check_uvw(scenario, table, uvw)
    if not verdict:
        return ScenarioReport(scenario, uvw, False, INFEASIBLE, canonical=canonical,
                              note="; ".join(verdict.failures))
    wf = build_weight_function(scenario, table, uvw, check=False)
    return verify_weight_function(wf, table, node_budget, reduce, canonical)


def search_uvw(scenario: Scenario, table: ClassTable, steps: int = 16,
               rounds: int = 2) -> Tuple[UVW, Fraction]:
    """Non-canonical w grid search with the tightest feasible u, v per w.

    The grid is refined around the best point ``rounds`` times.
    """
    def score(w):
        uvw = UVW(w) if scenario.basic else feasible_uvw(table.alpha(scenario.k, 1),
                                                          table.alpha(scenario.k, 2), w)
        rep = verify_scenario(scenario, table, uvw)
        return (rep.r if rep.status == CERTIFIED else None), uvw

    lo, hi = Fraction(0), Fraction(1)
    best = None
    for _ in range(rounds):
        step = (hi - lo) / steps
        for n in range(steps + 1):
            r, uvw = score(lo + n * step)
            if r is not None and (best is None or r < best[1]):
                best = (uvw, r)
        if best is None:
            break
        lo, hi = max(Fraction(0), best[0].w - step), min(Fraction(1), best[0].w + step)
    if best is None:
        raise ValueError(f"no feasible point found for {scenario.label()}")
    return best


def _job(args):
    scenario, table, uvw, budget, reduce, search = args
    if uvw is None and search:
        uvw, _ = search_uvw(scenario, table)
        return verify_scenario(scenario, table, uvw, budget, reduce, canonical=False)
    return verify_scenario(scenario, table, uvw, budget, reduce)


def verify_all(table: ClassTable, uvw_table: UVWTable, jobs: int = 1,
               scenarios: Optional[Sequence[Scenario]] = None, out: Optional[Path] = None,
               node_budget: int = 10**9, reduce: bool = True, search: bool = False) -> GlobalReport:
    """Verify every scenario. With ``out`` the report is appended line by line
    and scenarios already present in the file are not recomputed."""
    if scenarios is None:
        scenarios = enumerate_scenarios(table)
    done: Dict[Tuple[Fraction, Fraction], ScenarioReport] = {}
    if out is not None and Path(out).exists():
        for rep in read_report(Path(out), table):
            done[(rep.scenario.x, rep.scenario.y)] = rep
    todo = [s for s in scenarios if (s.x, s.y) not in done]
    args = [(s, table, uvw_table.lookup(s), node_budget, reduce, search) for s in todo]
    sink = open(out, "a", encoding="utf-8") if out is not None else None
    try:
        if jobs > 1 and len(args) > 1:
            with ProcessPoolExecutor(jobs) as ex:
                results = ex.map(_job, args, chunksize=max(1, len(args) // (4 * jobs)))
                for rep in results:
                    done[(rep.scenario.x, rep.scenario.y)] = rep
                    if sink:
                        sink.write(format_report_line(rep))
                        sink.flush()
        else:
            for a in args:
                rep = _job(a)
                done[(rep.scenario.x, rep.scenario.y)] = rep
                if sink:
                    sink.write(format_report_line(rep))
                    sink.flush()
    finally:
        if sink:
            sink.close()
    reports = [done[(s.x, s.y)] for s in scenarios]
    return GlobalReport(reports, [r.scenario for r in reports if r.status == MISSING])


# --- report files ---------------------------------------------------------------


def _opt(r: Optional[Fraction]) -> str:
    return "-" if r is None else format_rational(r)


def format_report_line(rep: ScenarioReport) -> str:
    u = rep.uvw.u if rep.uvw else None
    v = rep.uvw.v if rep.uvw else None
    w = rep.uvw.w if rep.uvw else None
    status = rep.status if rep.canonical else rep.status + "*"
    fields = [format_rational(rep.scenario.x), format_rational(rep.scenario.y), status,
              _opt(u), _opt(v), _opt(w), _opt(rep.r_case1), _opt(rep.r_case2), _opt(rep.r),
              format_pattern(rep.worst_pattern)]
    return " ".join(fields) + "\n"


def format_footer(report: GlobalReport) -> str:
    return f"GLOBAL r={_opt(report.global_r)} certified={len(report.certified)} " \
           f"uncovered={len(report.uncovered)}\n"


def read_report(path: Path, table: ClassTable) -> List[ScenarioReport]:
    out = []
    for line in path.read_text(encoding="utf-8").splitlines():
        parts = line.split()
        if not parts or parts[0] == "GLOBAL" or parts[0].startswith("#"):
            continue
        x, y = parse_rational(parts[0]), parse_rational(parts[1])
        status = parts[2]
        canonical = not status.endswith("*")
        status = status.rstrip("*")
        val = [None if p == "-" else parse_rational(p) for p in parts[3:9]]
        u, v, w, r1, r2, _ = val
        uvw = UVW(w, u, v) if w is not None else None
        out.append(ScenarioReport(make_scenario(x, y, table), uvw, status not in (INFEASIBLE, MISSING),
                                  status, r1, r2, canonical=canonical))
    return out


# --- empirical check ----------------------------------------------------------


@dataclass
class EmpiricalVerdict:
    status: str  # pass | fail | unverifiable
    bins: int
    weight: Optional[Fraction] = None
    a: Optional[Fraction] = None
    scenario: Optional[Scenario] = None
    canonical: bool = True
    note: str = ""

    @property
    def slack(self) -> Optional[Fraction]:
        return None if self.weight is None else self.bins - self.weight


def weighting_scenario(a: Fraction, located: Scenario, scenarios: Sequence[Scenario]) -> Scenario:
    """Scenario whose weight function matches the required weights at ``a``.

    When 1 - a is exactly the upper end y of the located scenario, an
    unmatched positive container of volume a = 1 - y would get weight w there
    although it needs weight 1. The next scenario, starting at 1 - a, assigns
    1 to it and 1 - w to negative containers of volume at most 1 - a, which is
    what the definition through a asks for.
    """
    if 1 - a != located.y:
        return located
    for sc in scenarios:
        if sc.x == located.y:
            return sc
    return located


def empirical_check(state, table: ClassTable, uvw_table: Optional[UVWTable], psi: int = 200,
                    opt: Optional[int] = None, ratio: Fraction = THEOREM_BOUND,
                    fallback_w: Optional[Fraction] = None,
                    scenarios: Optional[Sequence[Scenario]] = None) -> EmpiricalVerdict:
    """Compare a finished run with the weight of its input.

    ``bins <= weight + psi`` must hold for the terminal scenario's weight
    function. Without a uvw record the run is unverifiable unless
    ``fallback_w`` is given, in which case the tightest feasible u, v for that
    w are used and the verdict is marked non-canonical.
    """
    bins = state.bins_used()
    if scenarios is None:
        scenarios = enumerate_scenarios(table)
    ctx = compute_a(state, scenarios)
    if ctx is None:
        return EmpiricalVerdict("pass", bins, Fraction(0), note="empty input")
    sc = weighting_scenario(ctx.a, ctx.scenario, scenarios)
    uvw = uvw_table.lookup(sc) if uvw_table is not None else None
    canonical = uvw is not None
    if uvw is None:
        if fallback_w is None:
            return EmpiricalVerdict("unverifiable", bins, a=ctx.a, scenario=sc,
                                    note=f"no uvw data for {sc.label()}")
        uvw = UVW(fallback_w) if sc.basic else feasible_uvw(table.alpha(sc.k, 1),
                                                             table.alpha(sc.k, 2), fallback_w)
    try:
        wf = build_weight_function(sc, table, uvw)
    except InfeasibleUVW as exc:
        return EmpiricalVerdict("unverifiable", bins, a=ctx.a, scenario=sc, canonical=canonical,
                                note=f"fallback w={fallback_w} infeasible for {sc.label()}: {exc}")
    weight = total_item_weight(state.items, wf, ctx.a)
    ok = bins <= weight + psi
    notes = []
    if not ok:
        notes.append(f"bins {bins} > weight {float(weight):.6f} + {psi}")
    if opt is not None and bins > ratio * opt + psi:
        ok = False
        notes.append(f"bins {bins} > r*OPT + {psi} with OPT {opt}")
    return EmpiricalVerdict("pass" if ok else "fail", bins, weight, ctx.a, sc, canonical, "; ".join(notes))


def default_jobs() -> int:
    return max(1, os.cpu_count() or 1)
