"""Shared fixtures and the acceptance-summary reporter.

Tests marked ``@pytest.mark.acceptance("<criterion>")`` get one
PASS/FAIL line each in the terminal summary so the acceptance status is
readable at a glance.
"""

import numpy as np
import pytest

from echosync import (
    AudioSignal,
    RawUltrasoundSequence,
    UltrasoundParams,
    UtteranceRecord,
)

_ACCEPTANCE: dict = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance(name): marks a test as an acceptance criterion"
    )


def pytest_runtest_logreport(report):
    name = _ACCEPTANCE_NAMES.get(report.nodeid)
    if name is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        current = _ACCEPTANCE.get(name)
        outcome = report.outcome.upper()
        if outcome == "PASSED":
            outcome = "PASS"
        elif outcome == "FAILED":
            outcome = "FAIL"
        # A criterion backed by several tests fails if any of them fail.
        if current != "FAIL":
            _ACCEPTANCE[name] = outcome if current is None or outcome == "FAIL" else current


_ACCEPTANCE_NAMES: dict = {}


def pytest_collection_modifyitems(items):
    for item in items:
        marker = item.get_closest_marker("acceptance")
        if marker is not None:
            _ACCEPTANCE_NAMES[item.nodeid] = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"{_ACCEPTANCE[name]:4s}  {name}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_record(
    rng,
    uid="utt001A",
    *,
    n_frames=24,
    height=16,
    width=20,
    frame_rate=24.0,
    sample_rate=16000.0,
    duration=None,
    type_code="A",
    hardware_offset_ms=0.0,
):
    """A random but internally consistent utterance record."""
    params = UltrasoundParams(
        frame_rate=frame_rate,
        scan_lines=height,
        echo_returns=width,
        field_of_view=92.0,
        hardware_offset_ms=hardware_offset_ms,
    )
    frames = rng.integers(0, 256, size=(n_frames, height, width), dtype=np.uint8)
    if duration is None:
        duration = n_frames / frame_rate
    n_samples = int(round(duration * sample_rate))
    samples = np.round(rng.uniform(-0.5, 0.5, n_samples) * 32767.0) / 32767.0
    return UtteranceRecord(
        id=uid,
        type_code=type_code,
        prompt="a test prompt",
        audio=AudioSignal(samples=samples, sample_rate=sample_rate),
        ultrasound=RawUltrasoundSequence(params=params, frames=frames),
    )


@pytest.fixture
def record_factory():
    def factory(**kwargs):
        rng = kwargs.pop("rng", np.random.default_rng(999))
        return make_record(rng, **kwargs)

    return factory
