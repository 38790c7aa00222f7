from __future__ import annotations

import pytest

from quasirigid.dualize import working_patch
from quasirigid.geometry import pentagrid_preset, tetragrid_preset

PENTA_GAMMAS = (0.1, 0.15, 0.2, 0.25, -0.7)
TETRA_GAMMAS = (0.11, 0.23, 0.36, 0.05)


@pytest.fixture(scope="session")
def penta_spec():
    return pentagrid_preset(PENTA_GAMMAS)


@pytest.fixture(scope="session")
def tetra_spec():
    return tetragrid_preset(TETRA_GAMMAS)


@pytest.fixture(scope="session")
def penta_wp(penta_spec):
    return working_patch(penta_spec, 6)


@pytest.fixture(scope="session")
def tetra_wp(tetra_spec):
    return working_patch(tetra_spec, 6)


@pytest.fixture(scope="session")
def penta(penta_wp):
    return penta_wp.tiling


@pytest.fixture(scope="session")
def tetra(tetra_wp):
    return tetra_wp.tiling


@pytest.fixture(scope="session")
def penrose():
    return working_patch(pentagrid_preset(PENTA_GAMMAS, normal_offsets=True), 6).tiling


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
