import functools
import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from dwarp import dwp, dwpimm as di, riemann as rg, submanifold as sm  # noqa: E402
from dwarp.harness import bundled_path, load_scenario  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

B = rg.ChartedManifold.build


def sphere_chart():
    return B(["th", "ph"], ["1", "sin(th)^2"], [(0.05, 3.09), (-3.1, 3.1)], "S2")


def polar_plane():
    return B(["r", "th"], ["1", "r^2"], [(0.1, 5), (-3.1, 3.1)], "polar")


def euclid(n, coords=None):
    coords = coords or ["x", "y", "z", "w"][:n]
    return B(coords, ["1"] * n, [(-5, 5)] * n, f"R{n}")


def r3_cylindrical():
    H = B(["t", "z"], ["1", "1"], [(0.05, 5), (-5, 5)], "H")
    C = B(["th"], ["1"], [(-3, 3)], "C")
    return H, C, dwp.build_dwp(H, C, "t", "1", name="euclid")


def revolution(profile, bounds, *, c=0.0, name="rev"):
    H, C, amb = r3_cylindrical()
    P = B(["s"], ["1"], [bounds], "P")
    return di.compose_scenario(sm.ImmersionSpec.build(P, H, profile), sm.ImmersionSpec.identity(C), amb,
                               c=c, name=name)


@functools.lru_cache(maxsize=None)
def bundled(name):
    return load_scenario(bundled_path(name))


@functools.lru_cache(maxsize=None)
def catenoid():
    return revolution(["sqrt(1+s^2)", "log(s+sqrt(1+s^2))"], (-1.5, 1.5), name="catenoid")


@functools.lru_cache(maxsize=None)
def cylinder():
    return revolution(["0.5", "s"], (-2, 2), name="cylinder")


@functools.lru_cache(maxsize=None)
def round_sphere():
    return revolution(["sin(s)", "cos(s)"], (0.2, 2.9), name="sphere")


@functools.lru_cache(maxsize=None)
def identity_flat():
    R = B(["r"], ["1"], [(0.5, 2)], "R")
    S = B(["s"], ["1"], [(0.5, 2)], "S")
    W = dwp.build_dwp(R, S, "r", "s")
    return di.compose_scenario(sm.ImmersionSpec.identity(R), sm.ImmersionSpec.identity(S), W, c=0.0, name="flat")


@functools.lru_cache(maxsize=None)
def generic4():
    return bundled("generic_4d_doubly_warped").scenario


@functools.lru_cache(maxsize=None)
def s3():
    return bundled("s3_curve").scenario


@functools.lru_cache(maxsize=None)
def generic3_ambient():
    """A curved 3-dimensional doubly warped product (2 + 1)."""
    A = B(["x", "y"], [["1+x^2/4", "0.1*x"], ["0.1*x", "1+y^2/3"]], [(-1, 1.5), (-1, 1.5)], "A")
    L = B(["u"], ["1+u^2/5"], [(-1, 1.5)], "L")
    return dwp.build_dwp(A, L, "2+x+0.3*y^2", "1.5+0.4*u+0.2*u^2", name="g3")


@functools.lru_cache(maxsize=None)
def generic3_identity():
    W = generic3_ambient()
    return di.compose_scenario(sm.ImmersionSpec.identity(W.factor1), sm.ImmersionSpec.identity(W.factor2), W,
                               c=None, name="g3id")


def random_dwp(seed):
    """Random curved doubly warped product with factors of dimensions (2, 1)."""
    rng = np.random.default_rng(seed)
    a, b, c = np.round(rng.uniform(-0.3, 0.3, size=(3, 3)), 3)
    A = B(["x", "y"], [[f"1+{abs(a[0])}*x^2", f"{a[1]}*x"], [f"{a[1]}*x", f"1+{abs(a[2])}*y^2"]],
          [(-1, 1), (-1, 1)], "A")
    L = B(["u"], [f"1+{abs(b[0])}*u^2"], [(-1, 1)], "L")
    f1 = f"2+{b[1]}*x+{abs(b[2])}*y^2"
    f2 = f"1.5+{c[0]}*u+{abs(c[1])}*u^2"
    return dwp.build_dwp(A, L, f1, f2, name=f"rand{seed}")


def identity_scenario(W, c=None, name="id"):
    return di.compose_scenario(sm.ImmersionSpec.identity(W.factor1), sm.ImmersionSpec.identity(W.factor2), W,
                               c=c, name=name)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
