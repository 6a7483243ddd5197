import numpy as np
import pytest
from PIL import Image

ACCEPTANCE_FILE = "test_acceptance.py"
_acceptance_results: dict[str, str] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when == "call" and ACCEPTANCE_FILE in item.nodeid:
        if hasattr(report, "wasxfail"):
            _acceptance_results[item.name] = "xfail"
        else:
            _acceptance_results[item.name] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    tags = {"passed": "PASS", "xfail": "FAIL (expected: documented defect)"}
    for name, outcome in _acceptance_results.items():
        terminalreporter.write_line(f"{tags.get(outcome, 'FAIL')}  {name}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def make_dataset(tmp_path):
    """Factory writing a synthetic PNG dataset tree and returning its root."""
    counter = iter(range(10_000))

    def build(count, size=(260, 260), channels=3, seed=0, subdir="imgs"):
        root = tmp_path / f"dataset{next(counter)}"
        target = root / subdir if subdir else root
        target.mkdir(parents=True, exist_ok=True)
        gen = np.random.default_rng(seed)
        for i in range(count):
            arr = gen.integers(0, 256, size=(*size, channels), dtype=np.uint8)
            img = arr[:, :, 0] if channels == 1 else arr
            Image.fromarray(img).save(target / f"img_{i:03d}.png")
        return root

    return build
