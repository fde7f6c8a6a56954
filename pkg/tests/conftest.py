import time
from functools import lru_cache

import pytest

from waveray.integrator import RunAborted, run
from waveray.scenarios import preset

ACCEPTANCE_LINES: list[str] = []


class PresetRun:
    def __init__(self, config, frames, report, seconds, error=None):
        self.config = config
        self.frames = frames
        self.report = report
        self.seconds = seconds
        self.error = error


@lru_cache(maxsize=None)
def run_preset(tag: str, **changes) -> PresetRun:
    cfg = preset(tag).replace(**changes) if changes else preset(tag)
    start = time.perf_counter()
    try:
        frames, report = run(cfg)
        error = None
    except RunAborted as exc:
        frames, report, error = exc.frames, exc.report, exc
    return PresetRun(cfg, frames, report, time.perf_counter() - start, error)


@pytest.fixture(scope="session")
def preset_run():
    return run_preset


@pytest.fixture(scope="session")
def acceptance_lines():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
