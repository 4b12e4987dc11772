"""Geodesic ray casting through a triangulated hyperbolic manifold.

Rays start at a camera inside one tetrahedron's canonical embedding and
march crossing by crossing.  Each crossing adds the signed weight of the
face class; the ray state is then pulled back into the neighbor's
canonical chart by the face's transit isometry, so coordinates stay
bounded no matter how deep the ray runs.  Accumulated weights stay exact
integers until the transfer function maps them into (0, 1) for coloring.

The tracer is a vectorized wavefront over numpy arrays; the single-ray
entry point runs the same code on a batch of one.
"""
import math
from dataclasses import dataclass
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .geometry import (
    GEOMETRIC_TOL,
    GeometryError,
    gram_schmidt_frame,
    isometry_defect,
    minkowski_inner,
    transvection,
)
from .cohomology import FaceWeights

DEFAULT_FOV = 90.0
DEFAULT_RADIUS = math.e ** 2
DEFAULT_MAX_STEPS = 256
CROSSING_TIE_TOL = 1e-12
SENTINEL_RGB = (255, 0, 255)

# linear-RGB stops, position -> channel values in [0, 255]
COLORMAPS = {
    "default": (
        (0.00, (0.0, 0.0, 0.0)),
        (0.25, (32.0, 48.0, 160.0)),
        (0.50, (64.0, 160.0, 176.0)),
        (0.75, (224.0, 224.0, 128.0)),
        (1.00, (255.0, 255.0, 255.0)),
    ),
    "gray": (
        (0.0, (0.0, 0.0, 0.0)),
        (1.0, (255.0, 255.0, 255.0)),
    ),
}


class TraversalError(GeometryError):
    """A ray state lost the containment invariant mid march."""


@dataclass(frozen=True)
class Camera:
    """Eye position and orthonormal gaze frame inside one tetrahedron.

    `frame` is a Minkowski isometry; column 0 is the eye point on the
    hyperboloid, columns 1..3 the right/up/forward spacelike frame.
    """

    tet: int
    frame: np.ndarray

    def __post_init__(self):
        frame = np.array(self.frame, dtype=float)
        if frame.shape != (4, 4):
            raise ValueError("camera frame must be a 4x4 matrix")
        defect = isometry_defect(frame)
        if defect > 1e-9:
            raise ValueError(
                "camera frame does not preserve the form (defect %.3e)" % defect
            )
        frame.flags.writeable = False
        object.__setattr__(self, "frame", frame)

    @property
    def eye(self):
        return self.frame[:, 0]

    def is_inside(self, scene, tol=0.0):
        """True when the eye satisfies <n, eye> < tol for all four faces."""
        return bool(
            np.all(minkowski_inner(scene.normals[self.tet], self.eye) < tol)
        )


@dataclass(frozen=True)
class RenderParams:
    """Pixel grid, optics, march budget, weight class, and color handling."""

    width: int
    height: int
    weights: FaceWeights
    fov: float = DEFAULT_FOV
    radius: float = DEFAULT_RADIUS
    max_steps: int = DEFAULT_MAX_STEPS
    colormap: str = "default"
    supersample: int = 1

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be positive")
        if not 10.0 < self.fov < 170.0:
            raise ValueError("fov must lie strictly between 10 and 170 degrees")
        if not self.radius > 0:
            raise ValueError("visual sphere radius must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        if self.supersample not in (1, 2):
            raise ValueError("supersample must be 1 or 2")
        if self.colormap not in COLORMAPS:
            raise ValueError("unknown colormap %r" % (self.colormap,))


@dataclass
class RayState:
    """One ray mid march, in the current tetrahedron's canonical chart."""

    tet: int
    point: np.ndarray
    direction: np.ndarray
    distance: float = 0.0
    weight: int = 0


@dataclass(frozen=True)
class RayResult:
    weight: int
    distance: float
    steps: int
    hit_cap: bool
    crossings: tuple = ()
    end_state: object = None  # RayState at the stop point


@dataclass(frozen=True)
class Image:
    width: int
    height: int
    pixels: np.ndarray  # (height, width, 3) uint8, row-major from top left

    def to_ppm(self):
        header = b"P6\n%d %d\n255\n" % (self.width, self.height)
        return header + self.pixels.tobytes()

    def write_ppm(self, path):
        with open(path, "wb") as fh:
            fh.write(self.to_ppm())


@dataclass(frozen=True)
class RenderResult:
    image: Image
    errors: tuple  # (px, py, message) per failed pixel


def transfer(x):
    """Map an accumulated integer weight into (0, 1).

    x -> (1 + x / (|x| + 1)) / 2; exact in floating point for small
    integers, strictly increasing, symmetric about (0, 1/2).
    """
    if np.isscalar(x) or isinstance(x, (int, float)):
        xf = float(x)
        return 0.5 * (1.0 + xf / (abs(xf) + 1.0))
    xf = np.asarray(x, dtype=float)
    return 0.5 * (1.0 + xf / (np.abs(xf) + 1.0))


def _colormap_table(name):
    try:
        stops = COLORMAPS[name]
    except KeyError:
        raise ValueError("unknown colormap %r" % (name,))
    pos = np.array([s[0] for s in stops])
    rgb = np.array([s[1] for s in stops])
    return pos, rgb


def colormap_rgb(values, name="default"):
    """Piecewise-linear gradient lookup; returns float linear-RGB in [0, 255]."""
    pos, rgb = _colormap_table(name)
    v = np.clip(np.asarray(values, dtype=float), 0.0, 1.0)
    out = np.empty(v.shape + (3,))
    for c in range(3):
        out[..., c] = np.interp(v, pos, rgb[:, c])
    return out


def colormap(value, name="default"):
    """Quantized RGB8 triple for a single value in [0, 1]."""
    rgb = colormap_rgb(float(value), name)
    return tuple(int(c) for c in np.clip(np.rint(rgb), 0, 255).astype(np.uint8))


def pixel_to_direction(px, py, params, camera):
    """Unit tangent at the eye for sample (px, py) on the pinhole grid.

    Samples sit at pixel centers (px + 0.5) / width; sub-pixel offsets
    are allowed, so (width/2 - 0.5, height/2 - 0.5) is the exact center
    and maps to the forward frame vector.  Vertical extent is scaled by
    the aspect ratio, py grows downward.
    """
    half = math.tan(math.radians(params.fov) / 2.0)
    a = (2.0 * (px + 0.5) / params.width - 1.0) * half
    b = -(2.0 * (py + 0.5) / params.height - 1.0) * half * (
        params.height / params.width
    )
    d = camera.frame[:, 3] + a * camera.frame[:, 1] + b * camera.frame[:, 2]
    return d / math.sqrt(minkowski_inner(d, d))


def geodesic_point(p, v, t):
    """Point and tangent at arc length t along the geodesic (p, v)."""
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    t = np.asarray(t, dtype=float)
    ch = np.cosh(t)[..., np.newaxis]
    sh = np.sinh(t)[..., np.newaxis]
    return ch * p + sh * v, sh * p + ch * v


def _renormalize(p, v):
    p = p / np.sqrt(-minkowski_inner(p, p))[..., np.newaxis]
    v = v + minkowski_inner(v, p)[..., np.newaxis] * p
    v = v / np.sqrt(minkowski_inner(v, v))[..., np.newaxis]
    return p, v


def _crossing_times(normals, p, v, entry_face):
    """Forward crossing parameter per face; +inf where no crossing.

    <geodesic(t), n> = 0 gives tanh t = -a/b with a = <p,n>, b = <v,n>;
    a forward root needs a + b > 0, then t = log((b - a)/(b + a)) / 2.
    """
    a = minkowski_inner(normals, p[..., np.newaxis, :])
    b = minkowski_inner(normals, v[..., np.newaxis, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        t = 0.5 * np.log((b - a) / (b + a))
    # zero-length exits happen where a ray pierces an edge: the state sits
    # on a second face (a ~ 0) moving outward; clamp tiny negatives to 0
    valid = (a + b > 0) & np.isfinite(t) & (t > -CROSSING_TIE_TOL)
    t = np.where(valid, np.maximum(t, 0.0), np.inf)
    has_entry = entry_face >= 0
    if np.any(has_entry):
        rows = np.nonzero(has_entry)[0]
        t[rows, entry_face[rows]] = np.inf
    return t


_TIE_FACTOR = math.exp(2.0 * CROSSING_TIE_TOL)
_VALID_FLOOR = math.exp(-2.0 * CROSSING_TIE_TOL)

# restore the hyperboloid invariants after this many crossings; between
# checkpoints the transit maps keep the state within a few ulp per step
RENORM_INTERVAL = 8


def _crossing_select(jn, S, entry_face):
    """Exit face and arc length per ray; the batch twin of _crossing_times.

    `jn` holds the face normals premultiplied by the metric sign matrix,
    so one stacked matmul against the state columns S = [p v] yields all
    eight inner products a = <p,n>, b = <v,n> at once.  Selection works
    on the ratio r = (b - a)/(b + a) = e^{2t} instead of t itself: log is
    monotone, so the minimum, the validity window and the tie band all
    carry over (t > -tol is r > e^{-2 tol}; t <= t_min + tol is
    r <= r_min e^{2 tol}), and only one log per ray gets evaluated.
    Returns (t_min, face, rho_min) with t_min = +inf where no crossing
    exists; rho_min = e^{2 t_min} lets the caller move along the geodesic
    with a square root instead of cosh/sinh.
    """
    ab = jn @ S
    a = ab[..., 0]
    b = ab[..., 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        r = (b - a) / (b + a)
    valid = (a + b > 0) & np.isfinite(r) & (r > _VALID_FLOOR)
    rho = np.where(valid, np.maximum(r, 1.0), np.inf)
    has_entry = entry_face >= 0
    if np.any(has_entry):
        rows = np.nonzero(has_entry)[0]
        rho[rows, entry_face[rows]] = np.inf
    rho_min = rho.min(axis=1)
    face = np.argmax(rho <= rho_min[:, np.newaxis] * _TIE_FACTOR, axis=1)
    return 0.5 * np.log(rho_min), face, rho_min


def next_crossing(state, scene, entry_face=None):
    """Exit face and arc length to it for a ray strictly inside its tet.

    Ties within the crossing tolerance resolve to the smallest face
    index.  Raises TraversalError when no forward crossing exists.
    """
    entry = np.array([-1 if entry_face is None else entry_face])
    t = _crossing_times(
        scene.normals[np.array([state.tet])],
        np.asarray(state.point, dtype=float)[np.newaxis, :],
        np.asarray(state.direction, dtype=float)[np.newaxis, :],
        entry,
    )[0]
    t_min = t.min()
    if not np.isfinite(t_min):
        raise TraversalError(
            "no forward face crossing from tet %d (corrupt ray state)" % state.tet
        )
    face = int(np.argmax(t <= t_min + CROSSING_TIE_TOL))
    return face, float(t[face])


def _signed_weight_table(t, weights):
    table = np.zeros((t.n_tetrahedra, 4), dtype=np.int64)
    for key, fc in t.face_class_of.items():
        table[key] = t.exit_sign[key] * weights[fc]
    return table


def _adjacency_tables(t):
    n = t.n_tetrahedra
    neighbor = np.empty((n, 4), dtype=np.intp)
    entry = np.empty((n, 4), dtype=np.intp)
    for i, tet in enumerate(t.tetrahedra):
        for f in range(4):
            neighbor[i, f] = tet.neighbor[f]
            entry[i, f] = tet.gluing[f][f]
    return neighbor, entry


@dataclass
class _BatchTrace:
    weight: np.ndarray
    distance: np.ndarray
    steps: np.ndarray
    hit_cap: np.ndarray
    tet: np.ndarray
    point: np.ndarray
    direction: np.ndarray
    errors: list
    logs: object
    max_defect: float


class _Wavefront:
    """Batch tracer state shared by trace_ray and render."""

    def __init__(self, scene, weights, radius, max_steps):
        t = scene.triangulation
        if len(weights) != t.n_face_classes:
            raise ValueError(
                "weight vector has %d entries for %d face classes"
                % (len(weights), t.n_face_classes)
            )
        self.scene = scene
        self.radius = float(radius)
        self.max_steps = int(max_steps)
        self.signed = _signed_weight_table(t, weights)
        self.neighbor, self.entry = _adjacency_tables(t)
        # metric-sign-premultiplied normals: <x, n> = (Jn) . x as a plain dot
        self.jnormals = scene.normals * np.array([-1.0, 1.0, 1.0, 1.0])

    def run(self, tet, p, v, record=False):
        """March a batch to the visual sphere; returns a _BatchTrace.

        `errors` lists (ray index, message); `logs` carries per-ray
        crossing records when requested (single-ray probe only);
        `max_defect` is the worst invariant drift observed at the
        renormalization checkpoints (every RENORM_INTERVAL crossings).

        Finished rays are retired from the working set as they stop, so
        the long tail of deep cusp spirals marches on small arrays
        instead of masking over the whole batch every pass.  All live
        rays share the same step count, so the cadence of checkpoints
        and the step cap are per-ray properties, not batch ones.
        """
        scene = self.scene
        n = len(tet)
        out_tet = np.array(tet, dtype=np.intp)
        out_p = np.array(p, dtype=float)
        out_v = np.array(v, dtype=float)
        out_dist = np.zeros(n)
        out_weight = np.zeros(n, dtype=np.int64)
        out_steps = np.zeros(n, dtype=np.intp)
        hit_cap = np.zeros(n, dtype=bool)
        max_defect = 0.0
        errors = []
        logs = [[] for _ in range(n)] if record else None
        tri = scene.triangulation

        idx = np.arange(n, dtype=np.intp)
        tet = out_tet.copy()
        S = np.stack((out_p, out_v), axis=-1)  # state columns [p v]
        dist = np.zeros(n)
        weight = np.zeros(n, dtype=np.int64)
        steps = np.zeros(n, dtype=np.intp)
        entry_face = np.full(n, -1, dtype=np.intp)

        def retire(mask):
            """Write final state for masked rays, drop them from the set."""
            nonlocal idx, tet, S, dist, weight, steps, entry_face
            rows = idx[mask]
            out_tet[rows] = tet[mask]
            out_p[rows] = S[mask, :, 0]
            out_v[rows] = S[mask, :, 1]
            out_dist[rows] = dist[mask]
            out_weight[rows] = weight[mask]
            out_steps[rows] = steps[mask]
            keep = ~mask
            idx = idx[keep]
            tet = tet[keep]
            S = S[keep]
            dist = dist[keep]
            weight = weight[keep]
            steps = steps[keep]
            entry_face = entry_face[keep]
            return keep

        step_count = 0
        while len(idx):
            t_min, face, rho_min = _crossing_select(
                self.jnormals[tet], S, entry_face
            )
            bad = ~np.isfinite(t_min)
            beyond = dist + t_min >= self.radius
            drop = bad | beyond
            if np.any(drop):
                for i, cur in zip(idx[bad], tet[bad]):
                    errors.append(
                        (int(i), "no forward crossing in tet %d" % cur)
                    )
                keep = retire(drop)
                if len(idx) == 0:
                    break
                t_min = t_min[keep]
                face = face[keep]
                rho_min = rho_min[keep]
            cur = tet
            weight += self.signed[cur, face]
            if record:
                for k in range(len(idx)):
                    key = (int(cur[k]), int(face[k]))
                    logs[idx[k]].append(
                        (
                            int(steps[k]) + 1,
                            tri.face_class_of[key],
                            int(tri.exit_sign[key]),
                            float(t_min[k]),
                            int(weight[k]),
                            float(dist[k] + t_min[k]),
                        )
                    )
            # e^t = sqrt(rho), so one square root replaces cosh and sinh;
            # the flow is a 2x2 right action on the state columns
            et = np.sqrt(rho_min)
            emt = 1.0 / et
            ch = 0.5 * (et + emt)
            sh = 0.5 * (et - emt)
            G = np.empty((len(idx), 2, 2))
            G[:, 0, 0] = ch
            G[:, 1, 1] = ch
            G[:, 0, 1] = sh
            G[:, 1, 0] = sh
            S = scene.transits[cur, face] @ (S @ G)
            step_count += 1
            if step_count % RENORM_INTERVAL == 0:
                p, v = _renormalize(S[..., 0], S[..., 1])
                S = np.stack((p, v), axis=-1)
                drift = max(
                    float(np.max(np.abs(minkowski_inner(p, p) + 1.0))),
                    float(np.max(np.abs(minkowski_inner(v, v) - 1.0))),
                    float(np.max(np.abs(minkowski_inner(p, v)))),
                )
                max_defect = max(max_defect, drift)
            dist = dist + t_min
            steps = steps + 1
            entry_face = self.entry[cur, face]
            tet = self.neighbor[cur, face]
            if step_count >= self.max_steps:
                hit_cap[idx] = True
                retire(np.ones(len(idx), dtype=bool))
        return _BatchTrace(
            weight=out_weight, distance=out_dist, steps=out_steps,
            hit_cap=hit_cap, tet=out_tet, point=out_p, direction=out_v,
            errors=errors, logs=logs, max_defect=max_defect,
        )


def trace_state(state, params, scene, weights=None):
    """March one ray from an explicit RayState; same contract as trace_ray."""
    w = params.weights if weights is None else weights
    front = _Wavefront(scene, w, params.radius, params.max_steps)
    out = front.run(
        [state.tet],
        np.asarray(state.point, dtype=float)[np.newaxis, :],
        np.asarray(state.direction, dtype=float)[np.newaxis, :],
        record=True,
    )
    if out.errors:
        raise TraversalError(out.errors[0][1])
    end = RayState(
        tet=int(out.tet[0]),
        point=out.point[0],
        direction=out.direction[0],
        distance=float(out.distance[0]),
        weight=int(out.weight[0]),
    )
    return RayResult(
        weight=int(out.weight[0]),
        distance=float(out.distance[0]),
        steps=int(out.steps[0]),
        hit_cap=bool(out.hit_cap[0]),
        crossings=tuple(out.logs[0]),
        end_state=end,
    )


def trace_ray(camera, direction, params, scene, weights=None):
    """March one ray from the camera eye; integer weight, length, steps.

    `crossings` on the result lists (step, face class, sign, t_exit,
    running weight, running distance) per crossing, in order.
    """
    state = RayState(
        tet=camera.tet,
        point=camera.eye,
        direction=np.asarray(direction, dtype=float),
    )
    return trace_state(state, params, scene, weights)


def _sample_grid(params, camera, rows):
    """Direction batch for the supersample grid of the given image rows."""
    s = params.supersample
    offsets = (np.arange(s) + 0.5) / s - 0.5
    px = np.arange(params.width)[:, np.newaxis] + offsets[np.newaxis, :]
    px = px.reshape(-1)  # width * s sample columns
    half = math.tan(math.radians(params.fov) / 2.0)
    a = (2.0 * (px + 0.5) / params.width - 1.0) * half
    dirs = []
    for py in rows:
        pys = (py + offsets)[:, np.newaxis]
        b = -(2.0 * (pys + 0.5) / params.height - 1.0) * half * (
            params.height / params.width
        )
        d = (
            camera.frame[:, 3]
            + a[np.newaxis, :, np.newaxis] * camera.frame[:, 1]
            + b[..., np.newaxis] * camera.frame[:, 2]
        )  # (s, width * s, 4)
        dirs.append(d.reshape(-1, 4))
    d = np.concatenate(dirs, axis=0)
    return d / np.sqrt(minkowski_inner(d, d))[:, np.newaxis]


BAND_ROWS = 128


def render(scene, camera, params, workers=1):
    """Render the full pixel grid; deterministic for any worker count.

    Work is split into fixed bands of BAND_ROWS rows regardless of
    `workers`, and every sample runs the same elementwise arithmetic, so
    the output bytes never depend on scheduling.  Pixels whose rays fail
    traversal get the sentinel color and an entry in the error list.
    """
    if not camera.is_inside(scene, tol=GEOMETRIC_TOL):
        raise TraversalError("camera eye is not inside its tetrahedron")
    front = _Wavefront(scene, params.weights, params.radius, params.max_steps)
    s = params.supersample

    def trace_band(rows):
        dirs = _sample_grid(params, camera, rows)
        out = front.run(
            np.full(len(dirs), camera.tet, dtype=np.intp),
            np.broadcast_to(camera.eye, (len(dirs), 4)),
            dirs,
        )
        rgb = colormap_rgb(transfer(out.weight), params.colormap)
        rgb = rgb.reshape(len(rows), s, params.width, s, 3).mean(axis=(1, 3))
        band_errors = []
        for i, msg in out.errors:
            py = rows[i // (s * params.width * s)]
            px = (i % (params.width * s)) // s
            rgb[i // (s * params.width * s), px] = SENTINEL_RGB
            band_errors.append((px, py, msg))
        return rgb, band_errors

    bands = [
        range(start, min(start + BAND_ROWS, params.height))
        for start in range(0, params.height, BAND_ROWS)
    ]
    pixels = np.empty((params.height, params.width, 3))
    all_errors = []
    with ThreadPoolExecutor(max_workers=max(1, int(workers))) as pool:
        for rows, (rgb, band_errors) in zip(
            bands, pool.map(trace_band, bands)
        ):
            pixels[rows.start : rows.stop] = rgb
            all_errors.extend(band_errors)
    image = Image(
        width=params.width,
        height=params.height,
        pixels=np.clip(np.rint(pixels), 0, 255).astype(np.uint8),
    )
    return RenderResult(image=image, errors=tuple(all_errors))


def default_camera(scene, tet=0):
    """Eye at the tetrahedron's canonical basepoint, identity gaze frame.

    The frame is the pure translation carrying the hyperboloid origin
    e0 to the basepoint, so right/up/forward are the parallel-transported
    coordinate axes.
    """
    m = scene.basepoint(tet)
    ch = m[0]
    if ch <= 1.0 + 1e-15:
        return Camera(tet=tet, frame=np.eye(4))
    d = math.acosh(ch)
    e0 = np.array([1.0, 0.0, 0.0, 0.0])
    w = (m - ch * e0) / math.sinh(d)
    return Camera(tet=tet, frame=transvection(e0, w, d))


def move_camera(camera, translation, rotation, scene, max_steps=DEFAULT_MAX_STEPS):
    """Rotate the gaze frame, flow along a geodesic, restore containment.

    `rotation` is an axis-angle vector and `translation` a displacement,
    both in the camera's right/up/forward coordinates.  The eye flows
    along the geodesic of the translated tangent; if it leaves the
    current tetrahedron the face transits pull the frame into the
    neighbor chart until containment holds again.
    """
    from scipy.spatial.transform import Rotation

    frame = np.array(camera.frame, dtype=float)
    rotation = np.asarray(rotation, dtype=float)
    if np.any(rotation != 0.0):
        frame[:, 1:] = frame[:, 1:] @ Rotation.from_rotvec(rotation).as_matrix()
    translation = np.asarray(translation, dtype=float)
    length = float(np.linalg.norm(translation))
    if length > 0.0:
        w = frame[:, 1:] @ (translation / length)
        frame = transvection(frame[:, 0], w, length) @ frame
    tet = camera.tet
    for _ in range(max_steps):
        viol = minkowski_inner(scene.normals[tet], frame[:, 0])
        worst = int(np.argmax(viol))
        if viol[worst] < GEOMETRIC_TOL:
            return Camera(tet=tet, frame=gram_schmidt_frame(frame))
        frame = scene.transits[tet, worst] @ frame
        tet = int(scene.triangulation.tetrahedra[tet].neighbor[worst])
    raise TraversalError(
        "could not restore camera containment within %d transits" % max_steps
    )
