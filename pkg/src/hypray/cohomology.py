"""Integer cohomology classes as weights on transversely oriented faces.

A weight vector w assigns an integer to each face class.  Crossing a face
front to back picks up +w, back to front -w.  The cocycle condition (the
signed sum around every edge class vanishes) makes the total pickup of a
loop depend only on its homotopy class; such w represent classes in
H1(M; Z).  Coboundaries (front minus back differences of a function on
tetrahedra) are the trivial classes.

All arithmetic is exact; normal forms come from the integer routines in
`integers`, with fixed pivoting so bases are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import integers
from .triangulation import ring_step, EDGE_VERTICES


@dataclass(frozen=True)
class FaceWeights:
    """One integer per face class, in canonical face-class order."""

    weights: tuple
    label: str = None

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(int(w) for w in self.weights))

    def __len__(self):
        return len(self.weights)

    def __getitem__(self, k):
        return self.weights[k]


@dataclass(frozen=True)
class CohomologyBasis:
    """Free generators of H1(M; Z) plus any torsion invariant factors."""

    rank: int
    generators: tuple
    torsion: tuple = ()


@dataclass(frozen=True)
class CocycleCheck:
    ok: bool
    residuals: tuple

    def __bool__(self):
        return self.ok


def _require_length(t, w):
    if len(w.weights) != t.n_face_classes:
        raise ValueError(
            "weight vector has %d entries, triangulation has %d face classes"
            % (len(w.weights), t.n_face_classes)
        )


def edge_loop(t, edge_index):
    """The dual loop around an edge class: (face class, sign) crossings.

    Walking once around the edge crosses each face of its ring wedges;
    this is the loop whose weight pickup is the cocycle residual.
    """
    tet, e, _sign = t.edge_classes[edge_index].ring[0]
    a, b = EDGE_VERTICES[e]
    c = min(v for v in range(4) if v != a and v != b)
    state = (tet, a, b, c)
    loop = []
    while True:
        tt, _x, _y, f = state
        loop.append((t.face_class_of[(tt, f)], t.exit_sign[(tt, f)]))
        state = ring_step(t.tetrahedra, *state)
        if state == (tet, a, b, c):
            return tuple(loop)


def cocycle_matrix(t):
    """Rows: edge classes; columns: face classes; entries: signed crossings."""
    rows = []
    for e in range(len(t.edge_classes)):
        row = [0] * t.n_face_classes
        for face, sign in edge_loop(t, e):
            row[face] += sign
        rows.append(row)
    return rows


def is_cocycle(t, w):
    """Check the signed sum of w around every edge class; exact integers."""
    _require_length(t, w)
    residuals = []
    for row in cocycle_matrix(t):
        residuals.append(sum(c * x for c, x in zip(row, w.weights)))
    return CocycleCheck(all(r == 0 for r in residuals), tuple(residuals))


def coboundary(t, f, label=None):
    """Weights of the trivial class front(f) - back(f) for f: tets -> Z."""
    f = [int(x) for x in f]
    if len(f) != t.n_tetrahedra:
        raise ValueError(
            "0-cochain has %d entries, triangulation has %d tetrahedra"
            % (len(f), t.n_tetrahedra)
        )
    weights = []
    for fc in t.face_classes:
        weights.append(f[fc.front[0]] - f[fc.back[0]])
    return FaceWeights(tuple(weights), label=label)


def _coboundary_lattice(t):
    return [list(coboundary(t, row).weights) for row in _unit_rows(t.n_tetrahedra)]


def _unit_rows(n):
    return [[1 if j == i else 0 for j in range(n)] for i in range(n)]


def _reduce_by_lattice(vec, hnf_rows):
    v = list(vec)
    for row in hnf_rows:
        lead = next((k for k, x in enumerate(row) if x != 0), None)
        if lead is None:
            continue
        q = v[lead] // row[lead]
        if q:
            for k in range(len(v)):
                v[k] -= q * row[k]
    return v


def h1_basis(t):
    """Deterministic integer basis of H1(M; Z) modulo torsion.

    Kernel of the edge-residual map over Z, quotiented by the coboundary
    lattice.  Generators are normalized: each is reduced against the
    Hermite form of the coboundary lattice, and the set itself is in
    Hermite normal form over the canonical face ordering.  The torsion
    field lists the nontrivial invariant factors of the residual map
    (the torsion of the underlying 1-homology); the quotient itself is
    free, so no torsion generator is produced.
    """
    D = cocycle_matrix(t)
    diag_d, _, _ = integers.smith_normal_form(D)
    torsion = tuple(d for d in diag_d if d not in (0, 1))
    K = integers.kernel_basis(D)
    cob = _coboundary_lattice(t)
    # coboundaries lie in ker D; express them in kernel coordinates
    coords = []
    for row in cob:
        c = integers.solve_in_lattice(K, row)
        if c is None:
            raise AssertionError("coboundary escaped the cocycle kernel")
        coords.append(c)
    k = len(K)
    if k == 0:
        return CohomologyBasis(rank=0, generators=(), torsion=torsion)
    diag, _U, V = integers.smith_normal_form(coords)
    H_v, V_inv = integers.hermite_normal_form(V)
    if H_v != _unit_rows(k):
        raise AssertionError("change of basis was not unimodular")
    r = sum(1 for d in diag if d != 0)
    # rows r..k of V^-1 descend to a basis of the free quotient
    free_rows = [V_inv[i] for i in range(r, k)]
    gens = []
    for row in free_rows:
        g = [0] * t.n_face_classes
        for ci, c in enumerate(row):
            if c:
                for j in range(t.n_face_classes):
                    g[j] += c * K[ci][j]
        gens.append(g)
    cob_hnf, _ = integers.hermite_normal_form(cob) if cob else ([], None)
    gens = [_reduce_by_lattice(g, cob_hnf) for g in gens]
    if gens:
        gens_hnf, _ = integers.hermite_normal_form(gens)
        gens = [_reduce_by_lattice(g, cob_hnf) for g in gens_hnf if any(g)]
    generators = tuple(
        FaceWeights(tuple(g), label="gen%d" % i) for i, g in enumerate(gens)
    )
    return CohomologyBasis(rank=len(generators), generators=generators, torsion=torsion)


def evaluate_on_dual_loop(t, w, loop):
    """Signed weight pickup of a closed walk in the dual 1-skeleton.

    `loop` is a sequence of (face class index, sign); sign +1 walks front
    to back.  Raises ValueError if consecutive crossings do not chain or
    the walk does not return to its start.
    """
    _require_length(t, w)
    loop = list(loop)
    if not loop:
        return 0
    total = 0
    start = None
    current = None
    for face, sign in loop:
        if sign not in (1, -1):
            raise ValueError("crossing sign must be +1 or -1, got %r" % (sign,))
        fc = t.face_classes[face]
        src, dst = (fc.front[0], fc.back[0]) if sign == 1 else (fc.back[0], fc.front[0])
        if current is None:
            start = src
        elif current != src:
            raise ValueError(
                "walk is not connected: crossing of face class %d starts at "
                "tet %d but the walk is at tet %d" % (face, src, current)
            )
        current = dst
        total += sign * w.weights[face]
    if current != start:
        raise ValueError(
            "walk is not closed: started at tet %d, ended at tet %d"
            % (start, current)
        )
    return total
