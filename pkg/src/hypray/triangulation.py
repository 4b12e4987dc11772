"""Ideal triangulations of cusped 3-manifolds: parsing, validation, indexing.

Encoding conventions (standard for ideal-triangulation software):
  - face i of a tetrahedron is the face opposite vertex i;
  - gluing[i] is a permutation of {0,1,2,3} sending vertex labels of this
    tetrahedron to vertex labels of the neighbor across face i; it maps
    i itself to the index of the glued face in the neighbor;
  - edges are indexed 0..5 by their vertex pairs in lexicographic order,
    (0,1), (0,2), (0,3), (1,2), (1,3), (2,3).

Only orientable triangulations are accepted, which in this encoding means
every gluing permutation is odd.  Face classes carry a transverse
orientation: the front side is the side lying in the lexicographically
smaller (tet, face) pair, and crossing front to back counts +1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

EDGE_VERTICES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
EDGE_INDEX = {pair: k for k, pair in enumerate(EDGE_VERTICES)}

# opposite edges share a shape parameter: 01|23 -> 0, 02|13 -> 1, 03|12 -> 2
EDGE_PARAM_INDEX = (0, 1, 2, 2, 1, 0)


class TriangulationError(ValueError):
    """Base class for all triangulation input problems."""


class ParseError(TriangulationError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = "line %d: %s" % (line, message)
        super().__init__(message)


class ValidationError(TriangulationError):
    pass


def permutation_parity(p):
    """+1 for even permutations of (0,1,2,3), -1 for odd."""
    inversions = sum(
        1 for i in range(4) for j in range(i + 1, 4) if p[i] > p[j]
    )
    return -1 if inversions % 2 else 1


def inverse_permutation(p):
    q = [0, 0, 0, 0]
    for i, v in enumerate(p):
        q[v] = i
    return tuple(q)


@dataclass(frozen=True)
class TetrahedronCombinatorics:
    """Gluing data of one ideal tetrahedron: 4 neighbors, 4 permutations."""

    neighbor: tuple
    gluing: tuple

    def __post_init__(self):
        object.__setattr__(self, "neighbor", tuple(int(n) for n in self.neighbor))
        object.__setattr__(self, "gluing", tuple(tuple(p) for p in self.gluing))


@dataclass(frozen=True)
class FaceClass:
    """An unordered pair of glued faces with a transverse orientation.

    `representative` is the lexicographically smaller (tet, face) pair and
    is the front side; crossing from front to back counts +1.
    """

    representative: tuple
    partner: tuple

    @property
    def front(self):
        return self.representative

    @property
    def back(self):
        return self.partner


@dataclass(frozen=True)
class EdgeClass:
    """Cyclic ring of (tet, edge index, sign) around one edge of M.

    The sign records whether the walk traverses the tetrahedron edge in
    increasing vertex order (+1) or decreasing (-1).
    """

    ring: tuple


@dataclass
class CuspClass:
    """One ideal vertex of M with its link torus.

    The link of a tetrahedron vertex v is a triangle whose sides lie in
    the three faces f != v and whose corners (v, w) touch the edges
    {v, w}.  `side_neighbor` glues triangle sides across faces;
    `corner_class_of` numbers the vertices of the link surface;
    `corner_param_index` maps a corner to the shape-parameter slot
    (0, 1 or 2) of the tetrahedron edge it wraps.
    """

    corners: frozenset
    triangles: tuple
    side_neighbor: dict
    corner_class_of: dict
    n_corner_classes: int

    @property
    def euler_characteristic(self):
        n_faces = len(self.triangles)
        n_edges = (3 * n_faces) // 2
        return self.n_corner_classes - n_edges + n_faces


def corner_param_index(v, w):
    """Shape-parameter slot of the edge {v, w}."""
    return EDGE_PARAM_INDEX[EDGE_INDEX[(min(v, w), max(v, w))]]


@dataclass
class Triangulation:
    """A validated ideal triangulation with derived classes and carried data.

    `shapes` and `weights` mirror the optional lines of the file format;
    they are payload, not combinatorics, and may be absent.
    """

    tetrahedra: tuple
    face_classes: tuple
    edge_classes: tuple
    cusp_classes: tuple
    shapes: tuple = None
    weights: dict = field(default_factory=dict)
    face_class_of: dict = field(default_factory=dict, repr=False)
    exit_sign: dict = field(default_factory=dict, repr=False)

    @property
    def n_tetrahedra(self):
        return len(self.tetrahedra)

    @property
    def n_face_classes(self):
        return len(self.face_classes)

    def __eq__(self, other):
        if not isinstance(other, Triangulation):
            return NotImplemented
        return (
            self.tetrahedra == other.tetrahedra
            and self.shapes == other.shapes
            and self.weights == other.weights
        )


def ring_step(tetrahedra, tet, a, b, exit_face):
    """One step of the walk around edge (a, b) of `tet` through `exit_face`.

    Returns the next state (tet', a', b', exit_face'): the oriented edge
    carried through the gluing, exiting the neighbor through the other
    face containing it.
    """
    g = tetrahedra[tet].gluing[exit_face]
    n = tetrahedra[tet].neighbor[exit_face]
    d = 6 - a - b - exit_face
    return n, g[a], g[b], g[d]


def _check_combinatorics(tetrahedra):
    n = len(tetrahedra)
    if n < 1:
        raise ValidationError("triangulation has no tetrahedra")
    for i, tet in enumerate(tetrahedra):
        if len(tet.neighbor) != 4 or len(tet.gluing) != 4:
            raise ValidationError("tet %d: needs 4 neighbors and 4 gluings" % i)
        for f in range(4):
            nb = tet.neighbor[f]
            if not 0 <= nb < n:
                raise ValidationError(
                    "tet %d face %d: neighbor index %d out of range" % (i, f, nb)
                )
            p = tet.gluing[f]
            if sorted(p) != [0, 1, 2, 3]:
                raise ValidationError(
                    "tet %d face %d: gluing %r is not a permutation" % (i, f, p)
                )
    # involution: the paired face must point back with the inverse map
    for i, tet in enumerate(tetrahedra):
        for f in range(4):
            nb = tet.neighbor[f]
            p = tet.gluing[f]
            pf = p[f]
            if (nb, pf) == (i, f):
                raise ValidationError(
                    "tet %d face %d: face glued to itself" % (i, f)
                )
            back = tetrahedra[nb]
            if back.neighbor[pf] != i or back.gluing[pf] != inverse_permutation(p):
                raise ValidationError(
                    "tet %d face %d: gluing is not an involution "
                    "(tet %d face %d does not point back)" % (i, f, nb, pf)
                )
    for i, tet in enumerate(tetrahedra):
        for f in range(4):
            if permutation_parity(tet.gluing[f]) != -1:
                raise ValidationError(
                    "tet %d face %d: even gluing permutation, "
                    "triangulation is not orientable with this labeling" % (i, f)
                )


def _derive_face_classes(tetrahedra):
    classes = []
    for i, tet in enumerate(tetrahedra):
        for f in range(4):
            partner = (tet.neighbor[f], tet.gluing[f][f])
            if (i, f) < partner:
                classes.append(FaceClass((i, f), partner))
    return tuple(classes)


def _derive_edge_classes(tetrahedra):
    n = len(tetrahedra)
    seen = {}
    classes = []
    for tet in range(n):
        for e in range(6):
            if (tet, e) in seen:
                continue
            a, b = EDGE_VERTICES[e]
            c = min(v for v in range(4) if v != a and v != b)
            start = (tet, a, b, c)
            state = start
            ring = []
            for _ in range(6 * n + 1):
                t, x, y, _f = state
                key = (t, EDGE_INDEX[(min(x, y), max(x, y))])
                if key in seen:
                    raise ValidationError(
                        "tet %d edge %d: revisited while walking edge rings, "
                        "gluing data is corrupt" % key
                    )
                seen[key] = len(classes)
                ring.append((key[0], key[1], 1 if x < y else -1))
                state = ring_step(tetrahedra, *state)
                if state == start:
                    break
            else:
                raise ValidationError(
                    "tet %d edge %d: edge ring does not close" % (tet, e)
                )
            classes.append(EdgeClass(tuple(ring)))
    return tuple(classes)


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, x, y):
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            # keep the smaller root for deterministic class ordering
            if ry < rx:
                rx, ry = ry, rx
            self.parent[ry] = rx


def _derive_cusp_classes(tetrahedra):
    n = len(tetrahedra)
    germs = [(t, v) for t in range(n) for v in range(4)]
    uf = _UnionFind(germs)
    for t, tet in enumerate(tetrahedra):
        for f in range(4):
            g = tet.gluing[f]
            nb = tet.neighbor[f]
            for v in range(4):
                if v != f:
                    uf.union((t, v), (nb, g[v]))
    groups = {}
    for germ in germs:
        groups.setdefault(uf.find(germ), []).append(germ)
    classes = []
    for root in sorted(groups):
        members = sorted(groups[root])
        classes.append(_build_cusp(tetrahedra, members))
    return tuple(classes)


def _build_cusp(tetrahedra, members):
    side_neighbor = {}
    for t, v in members:
        tet = tetrahedra[t]
        for f in range(4):
            if f == v:
                continue
            g = tet.gluing[f]
            side_neighbor[(t, v, f)] = (tet.neighbor[f], g[v], g[f])
    corners = [(t, v, w) for t, v in members for w in range(4) if w != v]
    uf = _UnionFind(corners)
    for t, v, w in corners:
        for f in range(4):
            if f != v and f != w:
                g = tetrahedra[t].gluing[f]
                uf.union((t, v, w), (tetrahedra[t].neighbor[f], g[v], g[w]))
    roots = sorted({uf.find(c) for c in corners})
    index = {root: k for k, root in enumerate(roots)}
    corner_class_of = {c: index[uf.find(c)] for c in corners}
    return CuspClass(
        corners=frozenset(members),
        triangles=tuple(members),
        side_neighbor=side_neighbor,
        corner_class_of=corner_class_of,
        n_corner_classes=len(roots),
    )


def derive_classes(tetrahedra):
    """Compute (face_classes, edge_classes, cusp_classes) from raw gluings.

    Requires the involution property; orderings are canonical (sorted by
    smallest member), so the result is reproducible for a given input.
    """
    tetrahedra = tuple(tetrahedra)
    faces = _derive_face_classes(tetrahedra)
    edges = _derive_edge_classes(tetrahedra)
    cusps = _derive_cusp_classes(tetrahedra)
    return faces, edges, cusps


def build_triangulation(tetrahedra, shapes=None, weights=None):
    """Validate raw combinatorics and assemble a Triangulation."""
    tetrahedra = tuple(
        tet if isinstance(tet, TetrahedronCombinatorics)
        else TetrahedronCombinatorics(*tet)
        for tet in tetrahedra
    )
    _check_combinatorics(tetrahedra)
    faces, edges, cusps = derive_classes(tetrahedra)
    if len(edges) != len(tetrahedra):
        raise ValidationError(
            "expected %d edge classes for %d tetrahedra, found %d "
            "(not an ideal triangulation with torus cusps)"
            % (len(tetrahedra), len(tetrahedra), len(edges))
        )
    for k, cusp in enumerate(cusps):
        if cusp.euler_characteristic != 0:
            raise ValidationError(
                "cusp %d: link has Euler characteristic %d, not a torus"
                % (k, cusp.euler_characteristic)
            )
    face_class_of = {}
    exit_sign = {}
    for k, fc in enumerate(faces):
        face_class_of[fc.representative] = k
        face_class_of[fc.partner] = k
        exit_sign[fc.representative] = 1
        exit_sign[fc.partner] = -1
    if shapes is not None:
        shapes = tuple(complex(z) for z in shapes)
        if len(shapes) != len(tetrahedra):
            raise ValidationError(
                "shapes line has %d entries, expected one per tetrahedron (%d)"
                % (len(shapes), len(tetrahedra))
            )
    cleaned = {}
    for name, vec in (weights or {}).items():
        vec = tuple(int(w) for w in vec)
        if len(vec) != len(faces):
            raise ValidationError(
                "weights %r has %d entries, expected one per face class (%d)"
                % (name, len(vec), len(faces))
            )
        cleaned[name] = vec
    return Triangulation(
        tetrahedra=tetrahedra,
        face_classes=faces,
        edge_classes=edges,
        cusp_classes=cusps,
        shapes=shapes,
        weights=cleaned,
        face_class_of=face_class_of,
        exit_sign=exit_sign,
    )


def parse_triangulation(text):
    """Parse the line-oriented `tri 1` format into a Triangulation.

    Raises ParseError (with line number) for malformed syntax and
    ValidationError for structurally invalid gluing data.
    """
    records = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            records.append((lineno, line.split()))
    if not records:
        raise ParseError("empty file")
    pos = 0

    def take():
        nonlocal pos
        if pos >= len(records):
            raise ParseError("unexpected end of file", records[-1][0])
        rec = records[pos]
        pos += 1
        return rec

    lineno, tok = take()
    if tok != ["tri", "1"]:
        raise ParseError("expected header 'tri 1'", lineno)
    lineno, tok = take()
    if len(tok) != 2 or tok[0] != "tetrahedra":
        raise ParseError("expected 'tetrahedra <count>'", lineno)
    try:
        count = int(tok[1])
    except ValueError:
        raise ParseError("tetrahedron count %r is not an integer" % tok[1], lineno)
    if count < 1:
        raise ParseError("tetrahedron count must be positive", lineno)

    tets = []
    for i in range(count):
        lineno, tok = take()
        if (
            len(tok) != 12
            or tok[0] != "tet"
            or tok[2] != "neighbors"
            or tok[7] != "gluings"
        ):
            raise ParseError(
                "expected 'tet %d neighbors n0 n1 n2 n3 gluings p0 p1 p2 p3'" % i,
                lineno,
            )
        if tok[1] != str(i):
            raise ParseError("expected record for tet %d, got %r" % (i, tok[1]), lineno)
        try:
            neighbors = tuple(int(x) for x in tok[3:7])
        except ValueError:
            raise ParseError("neighbor indices must be integers", lineno)
        gluings = []
        for p in tok[8:12]:
            if len(p) != 4 or not set(p) <= set("0123"):
                raise ParseError("gluing %r is not a 4-digit permutation" % p, lineno)
            perm = tuple(int(ch) for ch in p)
            if sorted(perm) != [0, 1, 2, 3]:
                raise ParseError("gluing %r is not a permutation" % p, lineno)
            gluings.append(perm)
        tets.append(TetrahedronCombinatorics(neighbors, tuple(gluings)))

    shapes = None
    weights = {}
    while pos < len(records):
        lineno, tok = take()
        if tok[0] == "shapes":
            if shapes is not None:
                raise ParseError("duplicate shapes line", lineno)
            vals = _parse_floats(tok[1:], lineno)
            if len(vals) != 2 * count:
                raise ParseError(
                    "shapes line needs %d numbers, got %d" % (2 * count, len(vals)),
                    lineno,
                )
            shapes = tuple(
                complex(vals[2 * i], vals[2 * i + 1]) for i in range(count)
            )
        elif tok[0] == "weights":
            if len(tok) < 2:
                raise ParseError("weights line needs a name", lineno)
            name = tok[1]
            if name in weights:
                raise ParseError("duplicate weights name %r" % name, lineno)
            try:
                weights[name] = tuple(int(x) for x in tok[2:])
            except ValueError:
                raise ParseError("weights must be integers", lineno)
        else:
            raise ParseError("unknown directive %r" % tok[0], lineno)

    return build_triangulation(tets, shapes=shapes, weights=weights)


def _parse_floats(tokens, lineno):
    vals = []
    for t in tokens:
        try:
            x = float(t)
        except ValueError:
            raise ParseError("%r is not a number" % t, lineno)
        if not math.isfinite(x):
            raise ParseError("%r is not finite" % t, lineno)
        vals.append(x)
    return vals


def format_float(x):
    """Decimal formatting with at least 15 significant digits.

    Values of moderate magnitude use a fixed 15-decimal form (so 0.5
    serializes as 0.500000000000000); everything else falls back to 17
    significant digits, which round-trips any double.
    """
    x = float(x)
    if x == 0:
        x = 0.0
    if 0.1 <= abs(x) < 1000:
        return "%.15f" % x
    return "%.17g" % x


def serialize_triangulation(t):
    """Canonical text form; parse_triangulation inverts it."""
    out = ["tri 1", "tetrahedra %d" % t.n_tetrahedra]
    for i, tet in enumerate(t.tetrahedra):
        out.append(
            "tet %d neighbors %s gluings %s"
            % (
                i,
                " ".join(str(n) for n in tet.neighbor),
                " ".join("".join(str(v) for v in p) for p in tet.gluing),
            )
        )
    if t.shapes is not None:
        parts = []
        for z in t.shapes:
            parts.append(format_float(z.real))
            parts.append(format_float(z.imag))
        out.append("shapes " + " ".join(parts))
    for name, vec in t.weights.items():
        out.append("weights %s %s" % (name, " ".join(str(w) for w in vec)))
    return "\n".join(out) + "\n"
