import math

import numpy as np
import pytest

from pipesurf.fields import manufactured_case
from pipesurf.geometry import (CURVE_KINDS, SECTION_KINDS, PipeGeometry, catalog_centerline,
                               catalog_cross_section, frenet_frame)
from pipesurf.harness import helix_pipe, torus_pipe


_VERDICTS = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line per acceptance criterion; returns the flag."""
    lines = request.config.stash.setdefault(_VERDICTS, [])

    def record(criterion, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  criterion {criterion}: {detail}"
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda x: x.split("criterion ", 1)[1]):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def torus():
    return torus_pipe("circular", R0=0.5)


@pytest.fixture(scope="session")
def helix():
    return helix_pipe("circular", R0=0.5)


@pytest.fixture(scope="session")
def torus_case():
    return manufactured_case("torus-trig")


@pytest.fixture(scope="session")
def helix_case():
    return manufactured_case("helix-polyexp", (0.0, 2 * math.pi))


def dirichlet_pipe(section="circular", **params):
    """Short helix used by the fast solver tests."""
    return PipeGeometry(catalog_centerline("helix", a=2.0, b=1.0, domain=(0.0, 2 * math.pi)),
                        catalog_cross_section(section, **params))


def slopes(errors, hs):
    e, h = np.asarray(errors, float), np.asarray(hs, float)
    return np.log(e[:-1] / e[1:]) / np.log(h[:-1] / h[1:])


def _valid_radius(curve):
    w = np.linspace(*curve.domain, 2001)
    return 0.4 / float(np.max(np.abs(frenet_frame(curve, w).kappa)))


def catalog_pipes():
    """Every catalog curve with a safe circular section, plus torus/helix with every section."""
    pipes = []
    for kind in CURVE_KINDS:
        cl = catalog_centerline(kind)
        pipes.append((f"{kind}/circular", PipeGeometry(cl, catalog_cross_section(
            "circular", R0=min(0.5, _valid_radius(cl))))))
    for sec in SECTION_KINDS:
        pipes.append((f"torus/{sec}", torus_pipe(sec)))
        pipes.append((f"helix/{sec}", helix_pipe(sec)))
    return pipes
