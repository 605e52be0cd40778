import numpy as np
import pytest

from ahmass.polyhedron import Face, Plane, build_polyhedron


def random_unit(rng, n=None):
    v = rng.normal(size=(3,) if n is None else (n, 3))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def random_face(rng, size=0.3):
    """A random triangle in a random plane, well inside x3 > 0."""
    a = random_unit(rng)
    center = np.array([rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0.5, 3.0)])
    t1 = np.cross(a, random_unit(rng))
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(a, t1)
    ang = np.sort(rng.uniform(0, 2 * np.pi, 3))
    while np.max(np.diff(np.r_[ang, ang[0] + 2 * np.pi])) > 0.9 * np.pi:
        ang = np.sort(rng.uniform(0, 2 * np.pi, 3))
    r = size * center[2]
    verts = np.array([center + r * (np.cos(t) * t1 + np.sin(t) * t2) for t in ang])
    return Face(Plane(a, float(center @ a)), verts, 0)


def random_points_on(face, rng, n):
    w = rng.dirichlet(np.ones(len(face.vertices)), size=n)
    return w @ face.vertices


def random_tetrahedron(rng):
    """Random tetrahedron in the upper half-space with outward-oriented faces."""
    while True:
        c = np.array([rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(1.0, 3.0)])
        v = c + 0.5 * c[2] * random_unit(rng, 4)
        vol = np.linalg.det(np.array([v[1] - v[0], v[2] - v[0], v[3] - v[0]]))
        if abs(vol) < 0.05 * c[2] ** 3:
            continue
        faces = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]]
        cen = v.mean(axis=0)
        oriented = []
        for f in faces:
            p = v[f]
            n = np.cross(p[1] - p[0], p[2] - p[0])
            oriented.append(f if n @ (p.mean(axis=0) - cen) > 0 else f[::-1])
        try:
            return build_polyhedron(v, oriented, min_sin_angle=0.05)
        except ValueError:
            continue


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_configure(config):
    config._acceptance_lines = []


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion for the terminal summary."""
    lines = request.config._acceptance_lines

    def record(label, passed, detail=""):
        lines.append(f"{'PASS' if passed else 'FAIL'}  {label}  {detail}".rstrip())
        return passed
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
