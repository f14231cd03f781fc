import numpy as np
import pytest

from allclear_tsf.prep import SyntheticConfig, generate_synthetic

_criteria = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        number, title = marker.args
        entry = _criteria.setdefault(number, {"title": title, "outcomes": []})
        entry["outcomes"].append("skipped" if rep.skipped else rep.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        outs = entry["outcomes"]
        if "failed" in outs:
            status = "FAIL"
        elif all(o == "skipped" for o in outs):
            status = "SKIP"
        else:
            status = "PASS"
        terminalreporter.write_line(f"[{status}] criterion {number:>2}: {entry['title']}")


@pytest.fixture(scope="session")
def separable():
    """500 instances, 1:6 imbalance, separation 10 sigma."""
    return generate_synthetic(SyntheticConfig(n_instances=500, n_positive=71, length=60,
                                              class_separation=10.0, noise_sigma=1.0, seed=7))


@pytest.fixture(scope="session")
def small_separable():
    return generate_synthetic(SyntheticConfig(n_instances=120, n_positive=30, length=30,
                                              class_separation=6.0, noise_sigma=1.0, seed=3))


@pytest.fixture(scope="session")
def univariate_small():
    return generate_synthetic(SyntheticConfig(n_instances=100, n_positive=25, length=24, parameters=("R_VALUE",),
                                              class_separation=5.0, noise_sigma=1.0, seed=11))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
