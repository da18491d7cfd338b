import re
from dataclasses import replace

import pytest

from aclbeam.model import FeedbackGains, default_config

_CRITERIA: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def cfg():
    return default_config()


@pytest.fixture
def cfg0():
    """Reference beam with all feedback switched off."""
    return default_config().with_gains(s1=0.0, s3=0.0, k1=0.0, k2=0.0)


def decoupled_config(s1: float = 0.0):
    """G2 = gamma = 0 with unit axial impedance in the host layer."""
    base = default_config()
    return replace(
        base,
        stiff=replace(base.stiff, rho=1.0, h=1.0, alpha=1.0),
        core=replace(base.core, G=0.0),
        piezo=replace(base.piezo, gamma=0.0),
        gains=FeedbackGains(s1=s1),
    )


@pytest.fixture
def criterion():
    """Record one acceptance criterion outcome for the terminal summary."""

    def record(key: str, ok: bool, detail: str) -> bool:
        _CRITERIA[key] = (bool(ok), detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA, key=lambda k: (int(re.match(r"\d+", k).group()), k)):
        ok, detail = _CRITERIA[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {key}: {detail}")
