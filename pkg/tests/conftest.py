"""Shared test data builders and the acceptance-criteria summary hook.

Every test in test_acceptance.py carries its criterion as the first
docstring line; after the run, the terminal summary prints one
[acceptance] PASS/FAIL line per criterion so the gate is auditable at a
glance.
"""

from __future__ import annotations

import numpy as np
import pytest

from fredet import FeatureMatrix

_criteria: dict[str, str] = {}
_outcomes: dict[str, str] = {}


def pytest_collection_modifyitems(items):
    for item in items:
        if item.module.__name__ == "test_acceptance":
            doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
            _criteria[item.nodeid] = doc


def pytest_runtest_logreport(report):
    if report.nodeid not in _criteria:
        return
    if report.when == "call":
        _outcomes[report.nodeid] = "PASS" if report.passed else "FAIL"
    elif report.failed:  # setup/teardown error counts as a failed criterion
        _outcomes.setdefault(report.nodeid, "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, label in _criteria.items():
        outcome = _outcomes.get(nodeid, "FAIL")
        terminalreporter.write_line(f"[acceptance] {outcome} {label}")


def gaussian_matrix(seed: int, m: int, d: int, labels: bool = False) -> FeatureMatrix:
    """Random float32 matrix, optionally with two balanced label groups."""
    rng = np.random.default_rng(seed)
    data = rng.standard_normal((m, d)).astype(np.float32)
    lab = np.arange(m) % 2 if labels else None
    return FeatureMatrix(data=data, labels=lab)


def circle_points(seed: int, n: int, radius: float = 1.0, noise: float = 0.05, d: int = 2) -> np.ndarray:
    """Noisy circle in the first two of d dimensions."""
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
    pts = np.zeros((n, d))
    pts[:, 0] = radius * np.cos(theta)
    pts[:, 1] = radius * np.sin(theta)
    return pts + noise * rng.standard_normal((n, d))


@pytest.fixture
def tmp_fmx(tmp_path):
    """Factory writing a FeatureMatrix to a temp FMX file, returning the path."""
    from fredet import write_features

    def _write(matrix: FeatureMatrix, name: str = "data.fmx"):
        path = tmp_path / name
        write_features(matrix, path)
        return path

    return _write
