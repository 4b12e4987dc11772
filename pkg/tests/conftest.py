import importlib.resources

import pytest

from hypray.triangulation import parse_triangulation
from hypray import geometry as geo

# the figure-eight sister: same volume, homology Z + Z/5
M003_TEXT = """tri 1
tetrahedra 2
tet 0 neighbors 1 1 1 1 gluings 0132 2103 0321 1023
tet 1 neighbors 0 0 0 0 gluings 0132 2103 0321 1023
"""


def bundled_text(name):
    return (importlib.resources.files("hypray") / ("data/%s.tri" % name)).read_text()


@pytest.fixture(scope="session")
def m004_text():
    return bundled_text("m004")


@pytest.fixture(scope="session")
def m129_text():
    return bundled_text("m129")


@pytest.fixture(scope="session")
def m003_text():
    return M003_TEXT


@pytest.fixture(scope="session")
def m004(m004_text):
    return parse_triangulation(m004_text)


@pytest.fixture(scope="session")
def m129(m129_text):
    return parse_triangulation(m129_text)


@pytest.fixture(scope="session")
def m003(m003_text):
    return parse_triangulation(M003_TEXT)


@pytest.fixture(scope="session")
def m004_scene(m004):
    return geo.face_pairings(m004, m004.shapes)


@pytest.fixture(scope="session")
def m129_scene(m129):
    return geo.face_pairings(m129, m129.shapes)


@pytest.fixture(scope="session")
def m004_file(tmp_path_factory, m004_text):
    path = tmp_path_factory.mktemp("data") / "m004.tri"
    path.write_text(m004_text)
    return str(path)


@pytest.fixture(scope="session")
def m004_unsolved_file(tmp_path_factory, m004_text):
    lines = [ln for ln in m004_text.splitlines() if not ln.startswith("shapes")]
    path = tmp_path_factory.mktemp("data") / "m004_unsolved.tri"
    path.write_text("\n".join(lines) + "\n")
    return str(path)


@pytest.fixture(scope="session")
def m129_file(tmp_path_factory, m129_text):
    path = tmp_path_factory.mktemp("data") / "m129.tri"
    path.write_text(m129_text)
    return str(path)
