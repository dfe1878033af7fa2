from fractions import Fraction
from pathlib import Path

import pytest

from ahpack.params import load_canonical
from ahpack.scenarios import enumerate_scenarios
from ahpack.verifier import verify_all
from ahpack.weights import load_canonical_uvw, load_weight_table, published_table_paths

HERE = Path(__file__).parent

# outcome lines collected by test_acceptance.py, printed at the end of the run
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def table():
    return load_canonical()


@pytest.fixture(scope="session")
def uvw_table():
    return load_canonical_uvw()


@pytest.fixture(scope="session")
def scenarios(table):
    return enumerate_scenarios(table)


@pytest.fixture(scope="session")
def published():
    return {p.stem: load_weight_table(p) for p in published_table_paths()}


@pytest.fixture(scope="session")
def published_bounds():
    rows = []
    for line in (HERE / "published_bounds.txt").read_text().splitlines():
        if line.startswith("#") or not line.strip():
            continue
        rows.append(tuple(Fraction(tok) for tok in line.split()))
    return rows


@pytest.fixture(scope="session")
def global_report(table, uvw_table, scenarios):
    return verify_all(table, uvw_table, scenarios=scenarios)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, msg = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'} - {msg}")
