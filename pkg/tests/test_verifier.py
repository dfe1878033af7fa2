from fractions import Fraction as F

from ahpack.baselines import generate_instance
from ahpack.engine import run_stream
from ahpack.params import HALF
from ahpack.scenarios import make_scenario
from ahpack.verifier import (BUDGET, CERTIFIED, INFEASIBLE, MISSING, THEOREM_BOUND, empirical_check,
                             format_footer, format_report_line, read_report, search_uvw,
                             verify_all, verify_scenario, weighting_scenario)
from ahpack.weights import UVW, UVWRecord, UVWTable, check_uvw


def test_theorem_bound_decimal():
    assert f"{float(THEOREM_BOUND):.8f}" == "1.57828956"


def test_verify_scenario_examples(table):
    rep = verify_scenario(make_scenario(F(1, 6), F(15, 88), table), table, UVW(F(40165, 4194304)))
    assert rep.status == CERTIFIED
    assert rep.r == F(134279683919467, 85106790236160)
    rep = verify_scenario(make_scenario(F(271, 960), F(17, 60), table), table,
                          UVW(F(10600561, 134217728)))
    assert rep.r == F(1382826099045786640337, 888443112889887227904)
    assert rep.r == max(rep.r_case1, rep.r_case2)


def test_infeasible_and_missing(table):
    sc = make_scenario(F(2, 9), F(3, 13), table)
    rep = verify_scenario(sc, table, UVW(F(2)))
    assert (rep.status, rep.feasible, rep.r) == (INFEASIBLE, False, None)
    assert "w = 2" in rep.note
    rep = verify_scenario(sc, table, None)
    assert rep.status == MISSING


def test_budget_is_reported(table):
    sc = make_scenario(F(3, 7), HALF, table)
    u = F(8388625, 16777216)
    rep = verify_scenario(sc, table, UVW(F(1), u, u), node_budget=10, reduce=False)
    assert rep.status == BUDGET and rep.r is None


def test_report_roundtrip(table, tmp_path):
    sc = make_scenario(F(2, 9), F(3, 13), table)
    rep = verify_scenario(sc, table, UVW(F(9224745, 1073741824)))
    line = format_report_line(rep)
    assert line.startswith("2/9 3/13 certified - - 9224745/1073741824 ")
    path = tmp_path / "r.txt"
    path.write_text(line + "GLOBAL r=1/1 certified=1 uncovered=0\n")
    back, = read_report(path, table)
    assert (back.scenario, back.uvw, back.r) == (sc, rep.uvw, rep.r)


def _subset(scenarios):
    return [s for s in scenarios if F(1, 5) <= s.x and s.y <= F(1, 4)] + scenarios[-3:]


def test_verify_all_resumes(table, uvw_table, scenarios, tmp_path):
    subset = _subset(scenarios)
    out = tmp_path / "report.txt"
    first = verify_all(table, uvw_table, scenarios=subset[:3], out=out)
    # tamper with a stored line: a resumed run must trust the file, not recompute
    lines = out.read_text().splitlines(True)
    parts = lines[0].split()
    parts[8] = "3/2"
    parts[6] = parts[7] = "3/2"
    lines[0] = " ".join(parts) + "\n"
    out.write_text("".join(lines))
    again = verify_all(table, uvw_table, scenarios=subset, out=out)
    assert again.reports[0].r == F(3, 2)
    assert [r.r for r in again.reports[1:3]] == [r.r for r in first.reports[1:3]]
    assert len(out.read_text().splitlines()) == len(subset)


def test_jobs_do_not_change_results(table, uvw_table, scenarios):
    subset = _subset(scenarios)
    one = verify_all(table, uvw_table, scenarios=subset, jobs=1)
    two = verify_all(table, uvw_table, scenarios=subset, jobs=2)
    assert [format_report_line(r) for r in one.reports] == [format_report_line(r) for r in two.reports]
    assert format_footer(one) == format_footer(two)


def test_uncovered_are_listed(table, scenarios):
    empty = UVWTable([UVWRecord(F(2, 9), F(1, 4), UVW(F(9224745, 1073741824)))])
    subset = _subset(scenarios)
    rep = verify_all(table, empty, scenarios=subset)
    assert {s.label() for s in rep.uncovered} == {s.label() for s in subset if s.y > F(1, 4) or s.x < F(2, 9)}
    assert rep.global_r == max(r.r for r in rep.certified)
    assert "uncovered=" in format_footer(rep)


def test_global_report(global_report):
    assert global_report.failures() == []
    assert global_report.global_r == THEOREM_BOUND
    assert all(r.r <= THEOREM_BOUND for r in global_report.certified)
    assert len(global_report.certified) + len(global_report.uncovered) == len(global_report.reports)


def test_search_is_non_canonical(table, uvw_table):
    sc = make_scenario(F(43, 120), F(3, 7), table)
    assert uvw_table.lookup(sc) is None
    uvw, r = search_uvw(sc, table, steps=4, rounds=1)
    assert check_uvw(sc, table, uvw)
    assert r > 1
    rep = verify_all(table, uvw_table, scenarios=[sc], search=True).reports[0]
    assert rep.status == CERTIFIED and not rep.canonical
    assert " certified* " in format_report_line(rep)


def test_empirical_all_huge(table, uvw_table, scenarios):
    st_, _ = run_stream(table, [F(3, 5)] * 1000)
    assert st_.bins_used() == 1000
    ver = empirical_check(st_, table, uvw_table, psi=0, scenarios=scenarios, fallback_w=F(1, 2))
    assert ver.a == F(3, 5) and ver.status == "pass"
    assert ver.weight == 1000 and ver.slack == 0
    assert not ver.canonical
    # no feasible u, v exists for w = 1 in this scenario
    ver = empirical_check(st_, table, uvw_table, scenarios=scenarios, fallback_w=F(1))
    assert ver.status == "unverifiable" and "infeasible" in ver.note


def test_empirical_unverifiable_without_data(table, uvw_table, scenarios):
    st_, _ = run_stream(table, [F(3, 5)] * 10)
    ver = empirical_check(st_, table, uvw_table, scenarios=scenarios)
    assert ver.status == "unverifiable" and "no uvw" in ver.note


def test_empirical_empty(table, uvw_table):
    st_, _ = run_stream(table, [])
    ver = empirical_check(st_, table, uvw_table)
    assert ver.status == "pass" and ver.bins == 0


def test_empirical_opt_relation(table, uvw_table, scenarios):
    st_, _ = run_stream(table, [F(1, 50)] * 400)
    ver = empirical_check(st_, table, uvw_table, psi=1, opt=8, scenarios=scenarios)
    assert ver.status == "pass" and ver.canonical
    ver = empirical_check(st_, table, uvw_table, psi=0, opt=1, scenarios=scenarios)
    assert ver.status == "fail" and "r*OPT" in ver.note


def test_weighting_scenario_at_endpoint(table, scenarios):
    low = make_scenario(F(3, 20), F(49, 320), table)
    high = make_scenario(F(49, 320), F(1, 6), table)
    # a = 1 - y: the unmatched container of volume a must weigh 1, as in the next scenario
    assert weighting_scenario(1 - F(49, 320), low, scenarios) == high
    assert weighting_scenario(1 - F(3, 20) - F(1, 10**6), low, scenarios) == low


def test_empirical_small_items_do_not_drift(table, uvw_table, scenarios):
    # small items leave unmatched containers of volume exactly a = 1 - y
    sizes = generate_instance("uniform(1/100,1/2)", 5000, 1).sizes
    st_, _ = run_stream(table, sizes)
    ver = empirical_check(st_, table, uvw_table, scenarios=scenarios)
    assert 1 - ver.a == F(49, 320) and ver.scenario.label() == "(49/320,1/6]"
    assert ver.status == "pass"
