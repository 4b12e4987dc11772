"""Hyperbolic structures on ideal triangulations, in the hyperboloid model.

Conventions, fixed once for bit-reproducibility:
  - Minkowski form <x,y> = -x0 y0 + x1 y1 + x2 y2 + x3 y3; hyperbolic
    space is the sheet <x,x> = -1, x0 > 0; ideal points are future
    light-cone rays.
  - The boundary chart sends w = u + iv in the upper-half-space picture
    to the light-cone representative (1 + |w|^2, 2u, 2v, |w|^2 - 1), and
    infinity to (1, 0, 0, 1).
  - A tetrahedron of shape z (Im z > 0) embeds canonically with vertices
    0, 1, 2, 3 at infinity, 0, 1, z; the edge pairs 01|23, 02|13, 03|12
    carry the parameters z, 1/(1-z), (z-1)/z.

Shapes are solved from Thurston's gluing equations (angle sum 2 pi around
every edge) plus completeness equations (translational cusp holonomy has
derivative 1), by a damped Newton iteration in log-shape coordinates.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import zeta

from . import integers
from .triangulation import (
    EDGE_VERTICES,
    corner_param_index,
    permutation_parity,
    ring_step,
)

SOLVER_TOL = 1e-12
GEOMETRIC_TOL = 1e-9
FORM_TOL = 1e-9

J_FORM = np.diag([-1.0, 1.0, 1.0, 1.0])

INFINITY = None  # upper-half-space boundary point at infinity


class GeometryError(Exception):
    pass


class DegenerateShapeError(GeometryError):
    pass


class NonConvergenceError(GeometryError):
    pass


class NonGeometricSolutionError(GeometryError):
    pass


# ---------------------------------------------------------------------------
# Minkowski linear algebra


def minkowski_inner(x, y):
    """<x,y> = -x0 y0 + x1 y1 + x2 y2 + x3 y3, broadcasting over leading axes."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xy = x * y
    return xy[..., 1] + xy[..., 2] + xy[..., 3] - xy[..., 0]


def normalize_point(x):
    """Scale a timelike vector onto the hyperboloid sheet x0 > 0."""
    x = np.asarray(x, dtype=float)
    q = minkowski_inner(x, x)
    if np.any(q >= 0):
        raise GeometryError("cannot normalize a non-timelike vector to a point")
    y = x / np.sqrt(-q)[..., np.newaxis] if x.ndim > 1 else x / math.sqrt(-q)
    if np.any(y[..., 0] <= 0):
        raise GeometryError("point lies on the past sheet")
    return y


def normalize_tangent(v):
    v = np.asarray(v, dtype=float)
    q = minkowski_inner(v, v)
    if np.any(q <= 0):
        raise GeometryError("cannot normalize a non-spacelike vector to a tangent")
    return v / np.sqrt(q)[..., np.newaxis] if v.ndim > 1 else v / math.sqrt(q)


def gram_schmidt_frame(frame):
    """Orthonormalize a near-isometry column frame in the Minkowski form.

    Column 0 is normalized timelike, columns 1..3 spacelike; returns a
    matrix satisfying M^T J M = J to roundoff.
    """
    M = np.array(frame, dtype=float)
    cols = []
    signs = (-1.0, 1.0, 1.0, 1.0)
    for k in range(4):
        v = M[:, k].copy()
        for sigma, b in zip(signs, cols):
            v -= sigma * minkowski_inner(v, b) * b
        q = minkowski_inner(v, v)
        if signs[k] < 0:
            if q >= 0:
                raise GeometryError("frame column 0 is not timelike")
            v /= math.sqrt(-q)
            if v[0] < 0:
                v = -v
        else:
            if q <= 0:
                raise GeometryError("frame column %d is not spacelike" % k)
            v /= math.sqrt(q)
        cols.append(v)
    return np.column_stack(cols)


def isometry_defect(M):
    """Max-entry deviation of M^T J M from J."""
    M = np.asarray(M, dtype=float)
    return float(np.max(np.abs(M.T @ J_FORM @ M - J_FORM)))


def isometry_inverse(M):
    """Inverse of a Minkowski isometry, J M^T J (exact up to the defect)."""
    return J_FORM @ np.asarray(M, dtype=float).T @ J_FORM


def point_reflection(m):
    """The isometry x -> -x - 2<x,m> m fixing the hyperboloid point m."""
    m = np.asarray(m, dtype=float)
    return -np.eye(4) - 2.0 * np.outer(m, m @ J_FORM)


def transvection(p, w, s):
    """Translation by arc length s along the geodesic through p with tangent w."""
    p = np.asarray(p, dtype=float)
    w = np.asarray(w, dtype=float)
    pj = p @ J_FORM
    wj = w @ J_FORM
    return (
        np.eye(4)
        + (math.cosh(s) - 1.0) * (-np.outer(p, pj) + np.outer(w, wj))
        + math.sinh(s) * (np.outer(p, wj) - np.outer(w, pj))
    )


# ---------------------------------------------------------------------------
# Shapes and edge parameters


@dataclass(frozen=True)
class ShapeAssignment:
    """One complex shape per tetrahedron, all with positive imaginary part."""

    shapes: tuple

    def __post_init__(self):
        shapes = tuple(complex(z) for z in self.shapes)
        for i, z in enumerate(shapes):
            if not (math.isfinite(z.real) and math.isfinite(z.imag)):
                raise DegenerateShapeError("tet %d: shape %r is not finite" % (i, z))
            if z.imag <= 0 or z == 0 or z == 1:
                raise DegenerateShapeError(
                    "tet %d: shape %r is degenerate (needs Im z > 0)" % (i, z)
                )
        object.__setattr__(self, "shapes", shapes)

    def __len__(self):
        return len(self.shapes)

    def __getitem__(self, k):
        return self.shapes[k]


def edge_parameters(z):
    """The parameter triple (z, 1/(1-z), (z-1)/z) of a geometric shape."""
    z = complex(z)
    if z.imag <= 0 or z in (0, 1):
        raise DegenerateShapeError("shape %r is degenerate" % (z,))
    return _edge_parameters_raw(z)


def _edge_parameters_raw(z):
    return (z, 1.0 / (1.0 - z), (z - 1.0) / z)


def _edge_log_derivatives(z):
    # d/du of log of each parameter, with u = log z
    return (1.0 + 0.0j, z / (1.0 - z), 1.0 / (z - 1.0))


# ---------------------------------------------------------------------------
# Cusp completeness machinery

# A walk on a cusp link is a closed dual path through the link triangles;
# each visit of a triangle (tet, v) enters through side f_in and leaves
# through side f_out.  The derivative of the cusp holonomy along the walk
# is the product over visits of p^eps, where p is the shape parameter of
# the tetrahedron edge {v, w} at the pivot corner w = 6 - v - f_in - f_out
# and eps is +1 exactly when (v, w, f_in, f_out) is an odd permutation.


def _walk_factors(walk):
    """(tet, parameter slot, exponent) per visit of a link walk."""
    out = []
    for tet, v, f_in, f_out in walk:
        w = 6 - v - f_in - f_out
        slot = corner_param_index(v, w)
        eps = 1 if permutation_parity((v, w, f_in, f_out)) == -1 else -1
        out.append((tet, slot, eps))
    return out


@dataclass
class CuspEquations:
    """Two holonomy generators of one cusp torus.

    `cycles` are closed link walks (fundamental cycles of the link dual
    graph); `generators` are two integer coefficient vectors over those
    cycles whose classes generate H1 of the torus.
    """

    cycles: tuple
    cycle_factors: tuple
    generators: tuple


def _side_partner(cusp, germ):
    return cusp.side_neighbor[germ]


def _cycle_walk_from_sides(cusp, germs):
    """Convert a directed side sequence into a walk with in/out faces."""
    m = len(germs)
    walk = []
    for j in range(m):
        enter = _side_partner(cusp, germs[j - 1])
        t, v, f_in = enter
        t2, v2, f_out = germs[j]
        if (t, v) != (t2, v2):
            raise AssertionError("side sequence does not chain through triangles")
        walk.append((t, v, f_in, f_out))
    return tuple(walk)


def _cusp_dual_cycles(cusp):
    """Fundamental cycles of the link dual graph, as directed side germs.

    Breadth-first spanning tree from the smallest triangle, visiting
    sides in face order; one cycle per non-tree side, routed through the
    last common ancestor so walks never backtrack.
    """
    nodes = list(cusp.triangles)
    index = {node: k for k, node in enumerate(nodes)}
    chain = {nodes[0]: ()}  # node -> tuple of germs exiting each hop from root
    order = [nodes[0]]
    tree_sides = set()
    head = 0
    while head < len(order):
        node = order[head]
        head += 1
        t, v = node
        for f in range(4):
            if f == v:
                continue
            germ = (t, v, f)
            t2, v2, _f2 = _side_partner(cusp, germ)
            nxt = (t2, v2)
            if nxt not in chain:
                chain[nxt] = chain[node] + (germ,)
                order.append(nxt)
                tree_sides.add(_canonical_side(cusp, germ))
    cycles = []
    seen = set()
    for node in nodes:
        t, v = node
        for f in range(4):
            if f == v:
                continue
            germ = (t, v, f)
            side = _canonical_side(cusp, germ)
            if side in tree_sides or side in seen:
                continue
            seen.add(side)
            partner = _side_partner(cusp, germ)
            n1 = (germ[0], germ[1])
            n2 = (partner[0], partner[1])
            c1, c2 = chain[n1], chain[n2]
            common = 0
            while common < len(c1) and common < len(c2) and c1[common] == c2[common]:
                common += 1
            up = list(c1[common:])
            down = [_side_partner(cusp, g) for g in reversed(c2[common:])]
            cycles.append(tuple(up + [germ] + down))
    return index, cycles


def _canonical_side(cusp, germ):
    partner = _side_partner(cusp, germ)
    return min(germ, partner)


def _side_vector(cusp, side_index, germs):
    vec = [0] * len(side_index)
    for germ in germs:
        side = _canonical_side(cusp, germ)
        vec[side_index[side]] += 1 if germ == side else -1
    return vec


def cusp_equations(t, cusp):
    """Build the two completeness generators of one cusp."""
    _node_index, cycles = _cusp_dual_cycles(cusp)
    sides = sorted({_canonical_side(cusp, g) for g in cusp.side_neighbor})
    side_index = {s: k for k, s in enumerate(sides)}
    cycle_vecs = [_side_vector(cusp, side_index, germs) for germs in cycles]

    # null loops: the dual rings around link vertices (corner classes)
    corner_reps = {}
    for corner, cls in cusp.corner_class_of.items():
        if cls not in corner_reps or corner < corner_reps[cls]:
            corner_reps[cls] = corner
    null_vecs = []
    for cls in sorted(corner_reps):
        tet, v, w = corner_reps[cls]
        c = min(x for x in range(4) if x != v and x != w)
        start = (tet, v, w, c)
        state = start
        germs = []
        while True:
            tt, vv, _ww, cc = state
            germs.append((tt, vv, cc))
            state = ring_step(t.tetrahedra, *state)
            if state == start:
                break
        null_vecs.append(_side_vector(cusp, side_index, germs))

    coords = []
    for vec in null_vecs:
        c = integers.solve_in_lattice(cycle_vecs, vec)
        if c is None:
            raise AssertionError("vertex ring is not an integer cycle combination")
        coords.append(c)
    k = len(cycle_vecs)
    diag, _U, V = integers.smith_normal_form(coords)
    H_v, V_inv = integers.hermite_normal_form(V)
    assert all(
        H_v[i][j] == (1 if i == j else 0) for i in range(k) for j in range(k)
    ), "change of basis was not unimodular"
    r = sum(1 for d in diag if d != 0)
    if any(d not in (0, 1) for d in diag):
        raise GeometryError("cusp link homology has torsion; data is corrupt")
    if k - r != 2:
        raise GeometryError(
            "expected 2 independent cusp loops, found %d" % (k - r)
        )
    generators = tuple(tuple(V_inv[i]) for i in range(r, k))
    walks = tuple(_cycle_walk_from_sides(cusp, germs) for germs in cycles)
    factors = tuple(tuple(_walk_factors(w)) for w in walks)
    return CuspEquations(cycles=walks, cycle_factors=factors, generators=generators)


# ---------------------------------------------------------------------------
# Gluing and completeness residuals


def _edge_slot_counts(t):
    """Per edge class, the multiset of (tet, parameter slot) wedges."""
    out = []
    for ec in t.edge_classes:
        counts = {}
        for tet, e, _sign in ec.ring:
            key = (tet, corner_param_index(*EDGE_VERTICES[e]))
            counts[key] = counts.get(key, 0) + 1
        out.append(sorted(counts.items()))
    return out


def _completeness_coeffs(factors, generator):
    """Collapse cycle factors with generator coefficients to (tet, slot) -> int."""
    coeffs = {}
    for c, fac in zip(generator, factors):
        if c == 0:
            continue
        for tet, slot, eps in fac:
            key = (tet, slot)
            coeffs[key] = coeffs.get(key, 0) + c * eps
    return sorted((k, v) for k, v in coeffs.items() if v != 0)


@dataclass(frozen=True)
class GluingResiduals:
    """Log-form residuals: edge angle sums minus 2 pi i, cusp holonomy logs."""

    edge: tuple
    completeness: tuple

    @property
    def max_norm(self):
        vals = [abs(r) for r in self.edge] + [abs(r) for r in self.completeness]
        return max(vals) if vals else 0.0


def _shape_params(shapes):
    params = []
    for z in shapes:
        if z == 0 or z == 1 or not (
            math.isfinite(z.real) and math.isfinite(z.imag)
        ):
            return None
        trio = _edge_parameters_raw(z)
        # extreme z can underflow a parameter to exactly 0 or overflow it
        if any(p == 0 or not (math.isfinite(p.real) and math.isfinite(p.imag))
               for p in trio):
            return None
        params.append(trio)
    return params


def _edge_residuals(params, slot_counts):
    out = []
    for counts in slot_counts:
        total = 0.0 + 0.0j
        for (tet, slot), n in counts:
            total += n * cmath.log(params[tet][slot])
        out.append(total - 2j * math.pi)
    return out


def _completeness_residual(params, coeffs):
    prod = 1.0 + 0.0j
    try:
        for (tet, slot), n in coeffs:
            prod *= params[tet][slot] ** n
    except (ZeroDivisionError, OverflowError):
        return complex(math.inf, 0.0)
    if prod == 0 or not (math.isfinite(prod.real) and math.isfinite(prod.imag)):
        return complex(math.inf, 0.0)
    return cmath.log(prod)


def gluing_residual(t, s):
    """Edge and completeness residuals of a shape assignment.

    Edge residual: sum of the principal logs of the wedge parameters
    around the edge, minus 2 pi i.  Completeness residual: principal log
    of the numerically evaluated holonomy-derivative product along each
    cusp generator (exactly 0 at a complete structure).
    """
    if not isinstance(s, ShapeAssignment):
        s = ShapeAssignment(tuple(s))
    if len(s) != t.n_tetrahedra:
        raise ValueError("need one shape per tetrahedron")
    params = _shape_params(s.shapes)
    if params is None:
        raise DegenerateShapeError("degenerate shape in assignment")
    edge = _edge_residuals(params, _edge_slot_counts(t))
    comp = []
    for cusp in t.cusp_classes:
        eqs = cusp_equations(t, cusp)
        for gen in eqs.generators:
            comp.append(
                _completeness_residual(
                    params, _completeness_coeffs(eqs.cycle_factors, gen)
                )
            )
    return GluingResiduals(edge=tuple(edge), completeness=tuple(comp))


# ---------------------------------------------------------------------------
# Newton solver in log-shape coordinates


def _connected_components(tetrahedra):
    n = len(tetrahedra)
    comp = list(range(n))

    def find(x):
        while comp[x] != x:
            comp[x] = comp[comp[x]]
            x = comp[x]
        return x

    for i, tet in enumerate(tetrahedra):
        for nb in tet.neighbor:
            ri, rj = find(i), find(nb)
            if ri != rj:
                comp[max(ri, rj)] = min(ri, rj)
    return [find(i) for i in range(n)]


def _solver_rows(t):
    """Equation rows as (tet, slot) -> coefficient maps, plus edge targets.

    Per connected component the highest-index edge equation is dropped
    (the standard redundancy); completeness rows keep integer holonomy
    coefficients for exact product evaluation.
    """
    slot_counts = _edge_slot_counts(t)
    comp = _connected_components(t.tetrahedra)
    drop = {}
    for k, ec in enumerate(t.edge_classes):
        c = comp[ec.ring[0][0]]
        drop[c] = k  # ascending scan leaves the highest index per component
    dropped = set(drop.values())
    rows = []
    for k, counts in enumerate(slot_counts):
        if k not in dropped:
            rows.append(("edge", counts))
    for cusp in t.cusp_classes:
        eqs = cusp_equations(t, cusp)
        for gen in eqs.generators:
            rows.append(
                ("cusp", _completeness_coeffs(eqs.cycle_factors, gen))
            )
    return rows


def _residual_vector(params, rows):
    out = np.empty(len(rows), dtype=complex)
    for i, (kind, coeffs) in enumerate(rows):
        if kind == "edge":
            total = 0.0 + 0.0j
            for (tet, slot), n in coeffs:
                total += n * cmath.log(params[tet][slot])
            out[i] = total - 2j * math.pi
        else:
            out[i] = _completeness_residual(params, coeffs)
    return out


def _jacobian(shapes, rows):
    n = len(shapes)
    Jm = np.zeros((len(rows), n), dtype=complex)
    dlogs = [_edge_log_derivatives(z) for z in shapes]
    for i, (_kind, coeffs) in enumerate(rows):
        for (tet, slot), c in coeffs:
            Jm[i, tet] += c * dlogs[tet][slot]
    return Jm


def newton_solve(t, initial=None, tol=SOLVER_TOL, max_iterations=50):
    """Damped Newton iteration on the gluing + completeness equations.

    Works in u = log z coordinates; the step solves the complex least
    squares system J du = -r.  Returns (ShapeAssignment, iterations).
    """
    n = t.n_tetrahedra
    if initial is None:
        shapes = [complex(0.0, 1.0)] * n
    else:
        shapes = [complex(z) for z in initial.shapes] if isinstance(
            initial, ShapeAssignment
        ) else [complex(z) for z in initial]
        if len(shapes) != n:
            raise ValueError("need one initial shape per tetrahedron")
    rows = _solver_rows(t)
    u = np.array([cmath.log(z) for z in shapes], dtype=complex)

    def residual_at(uvec):
        try:
            zs = [cmath.exp(x) for x in uvec]
        except OverflowError:
            return None, None, math.inf
        params = _shape_params(zs)
        if params is None:
            return zs, None, math.inf
        r = _residual_vector(params, rows)
        if not np.all(np.isfinite(r.view(float))):
            return zs, None, math.inf
        return zs, r, float(np.max(np.abs(r)))

    zs, r, norm = residual_at(u)
    iterations = 0
    for _ in range(max_iterations):
        if norm < tol:
            break
        Jm = _jacobian(zs, rows)
        du, *_rest = np.linalg.lstsq(Jm, -r, rcond=None)
        step = 1.0
        for _halving in range(11):
            zs2, r2, norm2 = residual_at(u + step * du)
            if norm2 < norm:
                break
            step *= 0.5
        else:
            raise NonConvergenceError(
                "Newton step failed to reduce the residual below %.3e" % norm
            )
        u = u + step * du
        zs, r, norm = zs2, r2, norm2
        iterations += 1
    if norm >= tol:
        raise NonConvergenceError(
            "no convergence after %d iterations (residual %.3e)"
            % (iterations, norm)
        )
    if any(z.imag <= 0 for z in zs):
        raise NonGeometricSolutionError(
            "solver converged to a non-geometric solution (Im z <= 0)"
        )
    return ShapeAssignment(tuple(zs)), iterations


def solve_shapes(t, initial=None, tol=SOLVER_TOL, max_iterations=50):
    """Solve for the complete hyperbolic structure; see newton_solve."""
    shapes, _iterations = newton_solve(
        t, initial=initial, tol=tol, max_iterations=max_iterations
    )
    return shapes


# ---------------------------------------------------------------------------
# Hyperbolic volume via the Lobachevsky function

_LOBACHEVSKY_COEFFS = None


def _lobachevsky_coeffs(terms=64):
    global _LOBACHEVSKY_COEFFS
    if _LOBACHEVSKY_COEFFS is None:
        ks = np.arange(1, terms + 1, dtype=float)
        _LOBACHEVSKY_COEFFS = zeta(2 * ks) / (ks * (2 * ks + 1) * np.pi ** (2 * ks))
    return _LOBACHEVSKY_COEFFS


def lobachevsky(theta):
    """Lobachevsky function via its uniformly convergent series.

    Lambda(theta) = theta (1 - log|2 theta|) + sum_k zeta(2k) / (k (2k+1))
    * theta^(2k+1) / pi^(2k), after reducing theta mod pi to [-pi/2, pi/2].
    """
    theta = float(theta)
    theta -= math.pi * round(theta / math.pi)
    if theta == 0.0:
        return 0.0
    coeffs = _lobachevsky_coeffs()
    powers = theta ** (2 * np.arange(1, len(coeffs) + 1) + 1)
    return theta * (1.0 - math.log(abs(2.0 * theta))) + float(coeffs @ powers)


def tetrahedron_volume(z):
    """Volume of the ideal tetrahedron of shape z."""
    p = edge_parameters(z)
    return sum(lobachevsky(cmath.phase(q)) for q in p)


def volume(s):
    """Total hyperbolic volume of a geometric shape assignment."""
    if not isinstance(s, ShapeAssignment):
        s = ShapeAssignment(tuple(s))
    return sum(tetrahedron_volume(z) for z in s.shapes)


# ---------------------------------------------------------------------------
# Embeddings and face pairings


def boundary_to_lightcone(w):
    """Chart from the upper-half-space boundary to light-cone representatives."""
    if w is INFINITY:
        return np.array([1.0, 0.0, 0.0, 1.0])
    w = complex(w)
    m = abs(w) ** 2
    return np.array([1.0 + m, 2.0 * w.real, 2.0 * w.imag, m - 1.0])


def _canonical_corners(z):
    return (INFINITY, 0.0 + 0.0j, 1.0 + 0.0j, complex(z))


def embed_tetrahedron(z):
    """Canonical embedding of the shape-z tetrahedron.

    Returns (vertices, normals): vertices[v] is the light-cone
    representative of corner v; normals[f] is the unit spacelike outward
    normal of face f (so <n, x> < 0 strictly inside).
    """
    z = complex(z)
    if z.imag <= 0 or z in (0, 1):
        raise DegenerateShapeError("shape %r is degenerate" % (z,))
    vertices = np.array([boundary_to_lightcone(w) for w in _canonical_corners(z)])
    normals = np.empty((4, 4))
    for f in range(4):
        others = [v for v in range(4) if v != f]
        A = vertices[others] @ J_FORM
        _u, sv, vt = np.linalg.svd(A)
        # A is 3x4; its three singular values must stay well separated from
        # zero or the face is numerically degenerate.  The null direction is
        # the fourth right singular vector.
        if sv[-1] < 1e-8 * sv[0]:
            raise GeometryError(
                "face %d normal is ill-conditioned for shape %r" % (f, z)
            )
        n = vt[-1]
        q = minkowski_inner(n, n)
        if q <= 0:
            raise GeometryError("face %d normal is not spacelike" % f)
        n = n / math.sqrt(q)
        if minkowski_inner(n, vertices[f]) > 0:
            n = -n
        normals[f] = n
    return vertices, normals


def _mobius_to_zero_one_inf(z1, z2, z3):
    # rows of the matrix of z -> ((z - z1)(z2 - z3)) / ((z - z3)(z2 - z1))
    if z1 is INFINITY:
        return np.array([[0.0, z2 - z3], [1.0, -z3]], dtype=complex)
    if z2 is INFINITY:
        return np.array([[1.0, -z1], [1.0, -z3]], dtype=complex)
    if z3 is INFINITY:
        return np.array([[1.0, -z1], [0.0, z2 - z1]], dtype=complex)
    return np.array(
        [[z2 - z3, -z1 * (z2 - z3)], [z2 - z1, -z3 * (z2 - z1)]], dtype=complex
    )


def mobius_through(src, dst):
    """The Moebius transformation carrying the src triple to the dst triple.

    Points are complex numbers or INFINITY; the result is normalized to
    determinant 1 in SL(2, C) (up to overall sign).
    """
    A = _mobius_to_zero_one_inf(*src)
    B = _mobius_to_zero_one_inf(*dst)
    M = np.linalg.inv(B) @ A
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    return M / cmath.sqrt(det)


def mobius_to_isometry(A):
    """The SO+(1,3) matrix induced by A in SL(2,C) acting on Hermitian forms."""
    out = np.empty((4, 4))
    basis = (
        np.array([[1.0, 0.0], [0.0, 1.0]], dtype=complex),
        np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
        np.array([[0.0, 1.0j], [-1.0j, 0.0]], dtype=complex),
        np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
    )
    Astar = A.conj().T
    for mu, H in enumerate(basis):
        B = A @ H @ Astar
        out[0, mu] = 0.5 * (B[0, 0].real + B[1, 1].real)
        out[3, mu] = 0.5 * (B[0, 0].real - B[1, 1].real)
        out[1, mu] = B[0, 1].real
        out[2, mu] = B[0, 1].imag
    return out


@dataclass
class GeometricScene:
    """Embedded tetrahedra plus face-pairing isometries.

    `pairings[tet, face]` carries the neighbor's canonical embedding onto
    the position abutting this face; `transits[tet, face]` is its inverse
    and is what a ray state is multiplied by when it exits through the
    face.
    """

    triangulation: object
    shapes: ShapeAssignment
    vertices: np.ndarray  # (T, 4, 4)
    normals: np.ndarray  # (T, 4, 4)
    pairings: np.ndarray  # (T, 4, 4, 4)
    transits: np.ndarray  # (T, 4, 4, 4)

    def basepoint(self, tet):
        """Minkowski-normalized centroid of a tetrahedron's ideal vertices."""
        return normalize_point(self.vertices[tet].sum(axis=0))


def face_pairings(t, s):
    """Build the GeometricScene of a solved triangulation.

    Requires residuals below the geometric tolerance; raises
    GeometryError otherwise.
    """
    if not isinstance(s, ShapeAssignment):
        s = ShapeAssignment(tuple(s))
    res = gluing_residual(t, s)
    if res.max_norm >= GEOMETRIC_TOL:
        raise GeometryError(
            "shapes do not satisfy the gluing equations (residual %.3e); "
            "solve them first" % res.max_norm
        )
    n = t.n_tetrahedra
    vertices = np.empty((n, 4, 4))
    normals = np.empty((n, 4, 4))
    corners = []
    for i, z in enumerate(s.shapes):
        vertices[i], normals[i] = embed_tetrahedron(z)
        corners.append(_canonical_corners(z))
    pairings = np.empty((n, 4, 4, 4))
    transits = np.empty((n, 4, 4, 4))
    for i, tet in enumerate(t.tetrahedra):
        for f in range(4):
            nb = tet.neighbor[f]
            g = tet.gluing[f]
            others = [v for v in range(4) if v != f]
            src = tuple(corners[nb][g[v]] for v in others)
            dst = tuple(corners[i][v] for v in others)
            P = mobius_to_isometry(mobius_through(src, dst))
            pairings[i, f] = P
            transits[i, f] = isometry_inverse(P)
    return GeometricScene(
        triangulation=t,
        shapes=s,
        vertices=vertices,
        normals=normals,
        pairings=pairings,
        transits=transits,
    )


def edge_holonomy_defect(scene):
    """Max deviation from the identity of pairing products around edges."""
    t = scene.triangulation
    worst = 0.0
    for ec in t.edge_classes:
        tet, e, _sign = ec.ring[0]
        a, b = EDGE_VERTICES[e]
        c = min(v for v in range(4) if v != a and v != b)
        start = (tet, a, b, c)
        state = start
        M = np.eye(4)
        while True:
            tt, _x, _y, f = state
            M = scene.transits[tt, f] @ M
            state = ring_step(t.tetrahedra, *state)
            if state == start:
                break
        worst = max(worst, float(np.max(np.abs(M - np.eye(4)))))
    return worst
