"""Parse a bundled triangulation file and walk its combinatorics.

Loads the figure-eight knot complement, prints the tetrahedron count,
face/edge/cusp class tables, traverses one edge ring corner by corner,
and round-trips the file through the serializer.  Ends by feeding the
parser a deliberately torn gluing to show the validation errors.
"""
import importlib.resources

from hypray.triangulation import (
    EDGE_VERTICES,
    TriangulationError,
    parse_triangulation,
    serialize_triangulation,
)


def load_bundled(name):
    text = importlib.resources.files("hypray.data").joinpath(name).read_text()
    return text, parse_triangulation(text)


def show_summary(t):
    print("tetrahedra: %d" % t.n_tetrahedra)
    print("face classes: %d" % len(t.face_classes))
    print("edge classes: %d" % len(t.edge_classes))
    print("cusps: %d" % len(t.cusp_classes))
    for i, tet in enumerate(t.tetrahedra):
        print("  tet %d neighbors %s gluings %s" %
              (i, list(tet.neighbor), [list(g) for g in tet.gluing]))


def show_faces(t):
    # each face class stores its two germs; front is the lexicographically
    # smaller (tet, face) pair and crossing front->back counts as +1
    print("face classes (front | back):")
    for k, fc in enumerate(t.face_classes):
        print("  face %d: tet %d face %d | tet %d face %d" %
              (k, fc.front[0], fc.front[1], fc.back[0], fc.back[1]))


def walk_edge_ring(t, k):
    ring = t.edge_classes[k].ring
    print("edge class %d ring (%d corners):" % (k, len(ring)))
    for tet, edge, sign in ring:
        a, b = EDGE_VERTICES[edge]
        print("  tet %d edge (%d,%d) sign %+d" % (tet, a, b, sign))


def round_trip(text, t):
    out = serialize_triangulation(t)
    again = parse_triangulation(out)
    same = serialize_triangulation(again) == out
    print("serialize -> parse -> serialize is a fixed point: %s" % same)


def reject_bad_gluing():
    # tet 1 face 0 claims tet 0 as its partner but tet 0 face 0 points
    # back at tet 1 face 2, so the pairing is not an involution
    bad = "\n".join([
        "tri 1",
        "tetrahedra 2",
        "tet 0 neighbors 1 1 1 1 gluings 2103 2103 1230 1302",
        "tet 1 neighbors 0 0 0 0 gluings 0213 2103 2031 3012",
    ])
    try:
        parse_triangulation(bad)
    except TriangulationError as exc:
        print("torn gluing rejected: %s" % exc)


def main():
    text, t = load_bundled("m004.tri")
    show_summary(t)
    show_faces(t)
    walk_edge_ring(t, 0)
    round_trip(text, t)
    print("stored weight classes: %s" % t.weights)
    reject_bad_gluing()


if __name__ == "__main__":
    main()
