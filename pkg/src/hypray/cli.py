"""Command-line interface: info, solve, homology, probe, render.

Every command is a pure function of its inputs: no timestamps, no
locale-dependent formatting, floats always at 15 significant digits.
Exit codes: 0 success, 1 usage error, 2 data or validation error,
3 numerical failure.
"""
import argparse
import math
import re
import sys

import numpy as np

from .triangulation import (
    TriangulationError,
    ParseError,
    build_triangulation,
    parse_triangulation,
    serialize_triangulation,
)
from .cohomology import FaceWeights, h1_basis
from .geometry import GeometryError, face_pairings, gluing_residual, newton_solve, volume
from .raycast import (
    Camera,
    RenderParams,
    default_camera,
    render,
    trace_ray,
)


class _UsageError(Exception):
    pass


class _DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _fmt(x):
    return "%.15g" % float(x)


def _read_file(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise _DataError("cannot read %s: %s" % (path, exc.strerror or exc))


def _load(path):
    return parse_triangulation(_read_file(path))


def _parse_radius(text):
    """Float radius, with eK shorthand (e2 means e squared)."""
    m = re.fullmatch(r"[eE]([+-]?\d+(?:\.\d+)?)", text)
    if m:
        return math.e ** float(m.group(1))
    try:
        return float(text)
    except ValueError:
        raise _UsageError("invalid radius %r" % text)


def _solved_shapes(t):
    if t.shapes is not None:
        return t.shapes
    shapes, _ = newton_solve(t)
    return shapes


def _pick_weights(t, name):
    if name is None:
        if not t.weights:
            raise _DataError(
                "file has no weights lines; pass --weights or add one"
            )
        name = next(iter(t.weights))
    if name not in t.weights:
        raise _DataError("no weights named %r in file" % name)
    return name, FaceWeights(t.weights[name], label=name)


def _camera(args, scene):
    tet = args.cam_tet
    if not 0 <= tet < scene.triangulation.n_tetrahedra:
        raise _UsageError("--cam-tet %d out of range" % tet)
    if args.cam_matrix is None:
        return default_camera(scene, tet)
    parts = args.cam_matrix.split(",")
    if len(parts) != 16:
        raise _UsageError("--cam-matrix needs 16 comma-separated reals")
    try:
        entries = [float(p) for p in parts]
    except ValueError:
        raise _UsageError("--cam-matrix entries must be real numbers")
    try:
        return Camera(tet=tet, frame=np.array(entries).reshape(4, 4))
    except ValueError as exc:
        raise _UsageError(str(exc))


def cmd_info(args):
    t = _load(args.file)
    basis = h1_basis(t)
    out = [
        "tetrahedra: %d" % t.n_tetrahedra,
        "face classes: %d" % t.n_face_classes,
        "edge classes: %d" % len(t.edge_classes),
        "cusps: %d" % len(t.cusp_classes),
        "weight rank: %d" % basis.rank,
    ]
    if t.shapes is None:
        out.append("shapes: unsolved (run solve)")
    else:
        res = gluing_residual(t, t.shapes)
        out.append("shapes: solved (max residual %s)" % _fmt(res.max_norm))
        out.append("volume: %s" % _fmt(volume(t.shapes)))
    print("\n".join(out))
    return 0


def cmd_solve(args):
    t = _load(args.file)
    shapes, iterations = newton_solve(t, initial=t.shapes)
    solved = build_triangulation(
        [(tet.neighbor, tet.gluing) for tet in t.tetrahedra],
        shapes=shapes.shapes,
        weights=t.weights,
    )
    text = serialize_triangulation(solved)
    if args.out is None:
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print("wrote %s (%d iterations)" % (args.out, iterations))
    return 0


def cmd_homology(args):
    t = _load(args.file)
    basis = h1_basis(t)
    print("rank %d" % basis.rank)
    for gen in basis.generators:
        print("weights %s %s" % (gen.label, " ".join(str(w) for w in gen.weights)))
    return 0


def cmd_probe(args):
    t = _load(args.file)
    _name, weights = _pick_weights(t, args.weights)
    shapes = _solved_shapes(t)
    scene = face_pairings(t, shapes)
    camera = _camera(args, scene)
    parts = args.dir.split(",")
    if len(parts) != 3:
        raise _UsageError("--dir needs 3 comma-separated reals")
    try:
        local = np.array([float(p) for p in parts])
    except ValueError:
        raise _UsageError("--dir entries must be real numbers")
    if not np.linalg.norm(local) > 0:
        raise _UsageError("--dir must be nonzero")
    direction = camera.frame[:, 1:] @ (local / np.linalg.norm(local))
    try:
        params = RenderParams(
            width=1, height=1, weights=weights,
            radius=args.radius, max_steps=args.max_steps,
        )
    except ValueError as exc:
        raise _UsageError(str(exc))
    result = trace_ray(camera, direction, params, scene)
    for step, face_class, sign, t_exit, weight, distance in result.crossings:
        print(
            "step %d face %d sign %+d t %s weight %d distance %s"
            % (step, face_class, sign, _fmt(t_exit), weight, _fmt(distance))
        )
    if result.hit_cap:
        print("step cap reached")
    print(
        "weight %d distance %s steps %d"
        % (result.weight, _fmt(result.distance), result.steps)
    )
    return 0


def cmd_render(args):
    t = _load(args.file)
    _name, weights = _pick_weights(t, args.weights)
    shapes = _solved_shapes(t)
    scene = face_pairings(t, shapes)
    camera = _camera(args, scene)
    try:
        params = RenderParams(
            width=args.width,
            height=args.height,
            weights=weights,
            fov=args.fov,
            radius=args.radius,
            max_steps=args.max_steps,
            colormap=args.colormap,
            supersample=args.supersample,
        )
    except ValueError as exc:
        raise _UsageError(str(exc))
    result = render(scene, camera, params, workers=args.workers)
    result.image.write_ppm(args.out)
    for px, py, message in result.errors:
        print("pixel (%d, %d): %s" % (px, py, message), file=sys.stderr)
    print("wrote %s %dx%d" % (args.out, params.width, params.height))
    return 0


def _add_camera_flags(p):
    p.add_argument("--cam-tet", type=int, default=0,
                   help="tetrahedron containing the eye (default 0)")
    p.add_argument("--cam-matrix", default=None,
                   help="16 comma-separated reals, row-major camera frame")


def build_parser():
    parser = _Parser(
        prog="hypray",
        description="Hyperbolic triangulations, weight classes, ray-cast images.",
    )
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p = sub.add_parser("info", help="counts, weight rank, volume")
    p.add_argument("file")
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("solve", help="solve shapes, write canonical file")
    p.add_argument("file")
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("homology", help="print a weight basis")
    p.add_argument("file")
    p.set_defaults(func=cmd_homology)

    p = sub.add_parser("probe", help="trace one ray, print crossings")
    p.add_argument("file")
    p.add_argument("--weights", default=None, help="weights name from the file")
    _add_camera_flags(p)
    p.add_argument("--dir", default="0,0,1",
                   help="ray direction in right,up,forward coordinates")
    p.add_argument("--radius", type=_parse_radius, default="e2",
                   help="visual sphere radius; accepts eK shorthand")
    p.add_argument("--max-steps", type=int, default=256)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("render", help="render a PPM image")
    p.add_argument("file")
    p.add_argument("--weights", default=None, help="weights name from the file")
    _add_camera_flags(p)
    p.add_argument("--width", type=int, default=256)
    p.add_argument("--height", type=int, default=256)
    p.add_argument("--fov", type=float, default=90.0)
    p.add_argument("--radius", type=_parse_radius, default="e2",
                   help="visual sphere radius; accepts eK shorthand")
    p.add_argument("--supersample", type=int, default=1, choices=(1, 2))
    p.add_argument("--colormap", default="default")
    p.add_argument("--max-steps", type=int, default=256)
    p.add_argument("--workers", type=int, default=1,
                   help="render worker threads (output is identical for any count)")
    p.add_argument("--out", required=True, help="output PPM path")
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print("usage error: %s" % exc, file=sys.stderr)
        return 1
    except ParseError as exc:
        print("parse error: %s" % exc, file=sys.stderr)
        return 2
    except (TriangulationError, _DataError) as exc:
        print("data error: %s" % exc, file=sys.stderr)
        return 2
    except GeometryError as exc:
        print("numerical failure: %s" % exc, file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
