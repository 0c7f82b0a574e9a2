"""Shared fixtures.

The derivation battery is by far the most expensive thing the suite
runs (about a minute and a half), so it is computed once per session and
shared between the unit tests and the acceptance gate.
"""
import json
from pathlib import Path

import numpy as np
import pytest

from qoverlap import derive_all, plan_configurations

STATES_DIR = Path(__file__).resolve().parent.parent / "states"

STAT_NAMES = ("o11", "o22", "o12", "o2", "pi3", "pi4")


@pytest.fixture(scope="session")
def fits():
    """The full coefficient battery at the production seed."""
    return derive_all(seed=42)


@pytest.fixture(scope="session")
def forms(fits):
    """Graph decompositions of the six estimator statistics."""
    return {name: fits[name].as_form() for name in STAT_NAMES}


@pytest.fixture(scope="session")
def plan(forms):
    """Configuration plan covering every graph any statistic needs."""
    needed = [g for form in forms.values() for _, graphs in form for g in graphs]
    return plan_configurations(needed)


@pytest.fixture(scope="session")
def bell():
    rho = np.zeros((4, 4), dtype=complex)
    for i in (0, 3):
        for j in (0, 3):
            rho[i, j] = 0.5
    return rho


@pytest.fixture(scope="session")
def mixed():
    return np.eye(4, dtype=complex) / 4.0


@pytest.fixture()
def tmp_state(tmp_path):
    """Factory writing an ad-hoc state file and returning its path."""

    def write(doc, name="state.json"):
        p = tmp_path / name
        p.write_text(json.dumps(doc))
        return str(p)

    return write
