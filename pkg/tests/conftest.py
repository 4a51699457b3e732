import numpy as np
import pytest

from relightgs.scene import Camera, GaussianScene
from relightgs.sh import constant_coeffs


def random_rotation(rng):
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1
    return q


def random_camera(rng, width=64, height=48):
    return Camera(
        fx=rng.uniform(50, 800),
        fy=rng.uniform(50, 800),
        cx=rng.uniform(0, width),
        cy=rng.uniform(0, height),
        R=random_rotation(rng),
        t=rng.normal(size=3),
        width=width,
        height=height,
    )


def random_unit(rng, n):
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def random_scene(rng, n, spread=1.0):
    q = rng.normal(size=(n, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    return GaussianScene(
        positions=rng.uniform(-spread, spread, size=(n, 3)),
        rotations=q,
        scales=rng.uniform(0.02, 0.2, size=(n, 3)),
        opacities=rng.uniform(0, 1, size=n),
        normals=random_unit(rng, n),
        albedos=rng.uniform(0, 1, size=(n, 3)),
        roughness=rng.uniform(0, 1, size=n),
        visibility=rng.normal(size=(n, 16)),
        indirect=rng.normal(size=(n, 3, 16)),
    )


def one_point(position=(0, 0, 0), normal=(0, 0, 1), scale=(0.1, 0.1, 0.1), opacity=1.0, albedo=(1, 1, 1),
              roughness=0.5, visibility=None, indirect=None):
    return GaussianScene(
        positions=[position],
        rotations=[[1, 0, 0, 0]],
        scales=[scale],
        opacities=[opacity],
        normals=[normal],
        albedos=[albedo],
        roughness=[roughness],
        visibility=[constant_coeffs(1.0) if visibility is None else visibility],
        indirect=[np.zeros((3, 16)) if indirect is None else indirect],
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance reporting ------------------------------------------------------

ACCEPTANCE = {}


@pytest.fixture
def verdict():
    """Record one acceptance line, then fail the test if any check failed."""

    def record(number, title, checks):
        ok = all(passed for _, passed in checks)
        detail = "; ".join(f"{name}={'ok' if passed else 'FAIL'}" for name, passed in checks)
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {title} [{detail}]"
        ACCEPTANCE[number] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
