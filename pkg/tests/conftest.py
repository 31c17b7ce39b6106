import json
import pathlib

import pytest

DATA_DIR = pathlib.Path(__file__).parent / "data"


@pytest.fixture
def sleep_stats_text() -> str:
    return (DATA_DIR / "get_sleep_stats.json").read_text()


@pytest.fixture
def sleep_stats_obj(sleep_stats_text):
    return json.loads(sleep_stats_text)


@pytest.fixture
def fire_info_text() -> str:
    return (DATA_DIR / "get_fire_info.json").read_text()


@pytest.fixture
def data_dir() -> pathlib.Path:
    return DATA_DIR


def pytest_runtest_logreport(report):
    # one visible pass/fail line per acceptance gate
    if "test_acceptance.py" in report.nodeid and report.when == "call":
        name = report.nodeid.split("::")[-1]
        status = "PASS" if report.passed else "FAIL"
        print(f"\nacceptance {name}: {status}")
