import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nucshare.analysis import SolvedModel  # noqa: E402
from nucshare.cli import solve_scenario, tolerances  # noqa: E402
from nucshare.lpbuild import build  # noqa: E402
from nucshare.system import apply_scenario, load_scenario, load_system  # noqa: E402
from nucshare.tables import package_data  # noqa: E402

SCENARIOS = package_data("scenarios")
TIMINGS: dict[str, float] = {}


def scenario_system(name: str, **changes):
    sc = load_scenario(SCENARIOS / f"{name}.toml")
    if changes:
        sc = sc.replace(**changes)
    return sc, apply_scenario(load_system(sc.system_dir, sc), sc)


@pytest.fixture(scope="session")
def reference_lp():
    sc, system = scenario_system("reference")
    return build(system, sc)


@pytest.fixture(scope="session")
def reference_model() -> SolvedModel:
    """Full reference solve (about half a minute)."""
    start = time.perf_counter()
    model = solve_scenario(load_scenario(SCENARIOS / "reference.toml"))
    TIMINGS["reference_solve"] = time.perf_counter() - start
    return model


@pytest.fixture(scope="session")
def toy_model() -> SolvedModel:
    return solve_scenario(load_scenario(SCENARIOS / "toy.toml"))


@pytest.fixture(scope="session")
def toy_inflexible() -> SolvedModel:
    return solve_scenario(load_scenario(SCENARIOS / "toy.toml").replace(flexible=False))


@pytest.fixture(scope="session")
def toy_no_nuclear() -> SolvedModel:
    return solve_scenario(load_scenario(SCENARIOS / "toy.toml").replace(nuclear_overnight_cost=12600.0,
                                                                         nuclear_construction_time=10.0))


@pytest.fixture(scope="session")
def toy_cheap_nuclear() -> SolvedModel:
    return solve_scenario(load_scenario(SCENARIOS / "toy.toml").replace(nuclear_overnight_cost=1914.0,
                                                                         nuclear_construction_time=4.0))


ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)


__all__ = ["scenario_system", "tolerances"]
