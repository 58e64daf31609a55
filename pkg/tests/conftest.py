import bisect

import mpmath
import pytest

from circle_conjugacy.rotation_combinatorics import e_minus_2, golden, sqrt2_minus_1

try:
    from hypothesis import settings

    settings.register_profile("repo", deadline=None, max_examples=60)
    settings.load_profile("repo")
except ImportError:  # pragma: no cover
    pass


ALPHAS = {"golden": golden, "sqrt2-1": sqrt2_minus_1, "e-2": e_minus_2}


@pytest.fixture(params=sorted(ALPHAS))
def alpha(request):
    return ALPHAS[request.param]()


def sorted_orbit_neighbors(value, n_max, dps=80):
    """Independent oracle: insert frac(j value) into a sorted list at high precision.

    Yields (n, a, b, r, s) with ``-a = r value`` and ``b = s value`` the neighbors of 0.
    """
    with mpmath.workdps(dps):
        v = mpmath.mpf(value)
        pts, idx = [], {}
        for j in range(1, n_max + 1):
            p = mpmath.frac(j * v)
            bisect.insort(pts, p)
            idx[p] = j
            lo, hi = pts[0], pts[-1]
            yield j, 1 - hi, lo, idx[hi], idx[lo]


@pytest.fixture(scope="session")
def denjoy_fixture():
    from circle_conjugacy.denjoy_lab import DenjoySpec, build_denjoy

    return build_denjoy(DenjoySpec(golden()))


@pytest.fixture(scope="session")
def conj_rot():
    from circle_conjugacy.fixtures import conjugated_rotation

    return conjugated_rotation(golden(), c=0.4)


@pytest.fixture(scope="session")
def denjoy_reduction(denjoy_fixture):
    from circle_conjugacy.denjoy_lab import reduce_wandering_distortion

    return reduce_wandering_distortion(denjoy_fixture, 0.1, tau=1e-4)


@pytest.fixture(scope="session")
def flagship(conj_rot):
    from circle_conjugacy.pipeline import PipelineConfig, conjugate_towards

    h, report = conjugate_towards(conj_rot.f, conj_rot.g, PipelineConfig(eps=0.2))
    return h, report


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
