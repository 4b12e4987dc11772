"""Frame service: render and navigation over a local stream socket.

Wire format: every message is a 4-byte big-endian header length, then a
UTF-8 header of newline-separated key=value pairs, then a raw payload
whose size the `payloadBytes` field declares.  Field names are fixed:
type, id, width, height, fov, radius, maxSteps, camTet, camMatrix,
weightsName, colormap, supersample, status, payloadBytes.

Client messages: `load` (payload: inline triangulation text, a bundled
name such as m004, or a file path), `navigate` (payload: six reals
"tx ty tz rx ry rz" in camera coordinates), `render` (header fields
override the session parameters; no payload).

Replies: `loaded` with a summary payload, `camera` echoing the new
camera, `frame` with the RGB8 payload and a strictly increasing frame
id, `ack` with status=superseded for render requests dropped by a newer
one, `error` with a message payload.  One render at a time per session;
the request queue keeps only the newest entry (latest wins).
"""
import argparse
import importlib.resources
import socket
import struct
import sys
import threading

import numpy as np

from .triangulation import TriangulationError, parse_triangulation
from .cohomology import FaceWeights, h1_basis
from .geometry import GeometryError, face_pairings, newton_solve
from .raycast import (
    Camera,
    RenderParams,
    TraversalError,
    default_camera,
    move_camera,
    render,
)

DEFAULT_PORT = 7045
HEADER_FIELDS = (
    "type", "id", "width", "height", "fov", "radius", "maxSteps", "camTet",
    "camMatrix", "weightsName", "colormap", "supersample", "status",
    "payloadBytes",
)


class ProtocolError(Exception):
    pass


def encode_message(fields, payload=b""):
    """Frame a message; payloadBytes is derived from the payload."""
    lines = []
    for key, value in fields.items():
        if key == "payloadBytes":
            continue
        if key not in HEADER_FIELDS:
            raise ProtocolError("unknown header field %r" % key)
        text = str(value)
        if "\n" in text:
            raise ProtocolError("header values cannot contain newlines")
        lines.append("%s=%s" % (key, text))
    lines.append("payloadBytes=%d" % len(payload))
    header = "\n".join(lines).encode("utf-8")
    return struct.pack(">I", len(header)) + header + payload


def _parse_header(raw):
    try:
        header = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ProtocolError("header is not UTF-8: %s" % exc)
    fields = {}
    for line in header.split("\n"):
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or key not in HEADER_FIELDS:
            raise ProtocolError("bad header line %r" % line)
        fields[key] = value
    try:
        nbytes = int(fields["payloadBytes"])
    except (KeyError, ValueError):
        raise ProtocolError("missing or invalid payloadBytes")
    if nbytes < 0:
        raise ProtocolError("negative payloadBytes")
    return fields, nbytes


def decode_message(data):
    """Inverse of encode_message; returns (fields, payload, bytes consumed)."""
    if len(data) < 4:
        raise ProtocolError("truncated frame: missing header length")
    (hlen,) = struct.unpack(">I", data[:4])
    if len(data) < 4 + hlen:
        raise ProtocolError("truncated frame: header short")
    fields, nbytes = _parse_header(data[4:4 + hlen])
    if len(data) < 4 + hlen + nbytes:
        raise ProtocolError("truncated frame: payload short")
    payload = data[4 + hlen:4 + hlen + nbytes]
    return fields, payload, 4 + hlen + nbytes


def _read_exact(sock, n):
    chunks = []
    while n > 0:
        chunk = sock.recv(min(n, 65536))
        if not chunk:
            return None
        chunks.append(chunk)
        n -= len(chunk)
    return b"".join(chunks)


def read_message(sock):
    """Read one framed message from a socket; None on clean EOF."""
    head = _read_exact(sock, 4)
    if head is None:
        return None
    (hlen,) = struct.unpack(">I", head)
    raw = _read_exact(sock, hlen)
    if raw is None:
        raise ProtocolError("connection closed mid header")
    fields, nbytes = _parse_header(raw)
    payload = b""
    if nbytes:
        payload = _read_exact(sock, nbytes)
        if payload is None:
            raise ProtocolError("connection closed mid payload")
    return fields, payload


def _resolve_manifold(text):
    """Inline triangulation text, bundled name, or filesystem path."""
    if text.lstrip().startswith("tri"):
        return text
    name = text.strip()
    if name and "/" not in name:
        bundled = importlib.resources.files("hypray") / ("data/%s.tri" % name)
        if bundled.is_file():
            return bundled.read_text()
    try:
        with open(name, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise TriangulationError(
            "cannot load %r: %s" % (name, exc.strerror or exc)
        )


class Session:
    """One connection: manifold state, camera, params, render worker."""

    def __init__(self, sock):
        self.sock = sock
        self.send_lock = threading.Lock()
        self.state_lock = threading.Lock()
        self.wake = threading.Condition(self.state_lock)
        self.triangulation = None
        self.scene = None
        self.camera = None
        self.basis = None
        self.weights_name = None
        self.settings = {
            "width": 256, "height": 256, "fov": 90.0,
            "radius": float(np.e) ** 2, "maxSteps": 256,
            "colormap": "default", "supersample": 1,
        }
        self.frame_id = 0
        self.pending = None  # (request id, scene, params) awaiting render
        self.in_flight = False
        self.closing = False
        self.worker = threading.Thread(target=self._render_loop, daemon=True)
        self.worker.start()

    # -- transport --

    def _send(self, fields, payload=b""):
        data = encode_message(fields, payload)
        with self.send_lock:
            try:
                self.sock.sendall(data)
            except OSError:
                pass

    def _error(self, request_id, message):
        self._send(
            {"type": "error", "id": request_id, "status": "error"},
            message.encode("utf-8"),
        )

    # -- message handlers --

    def handle_load(self, request_id, payload):
        try:
            text = _resolve_manifold(payload.decode("utf-8"))
            t = parse_triangulation(text)
            shapes = t.shapes
            if shapes is None:
                shapes, _ = newton_solve(t)
            scene = face_pairings(t, shapes)
            basis = h1_basis(t)
        except (TriangulationError, GeometryError, UnicodeDecodeError) as exc:
            self._error(request_id, str(exc))
            return
        weights_name = next(iter(t.weights)) if t.weights else None
        with self.state_lock:
            self.triangulation = t
            self.scene = scene
            self.camera = default_camera(scene)
            self.basis = basis
            self.weights_name = weights_name
        lines = ["tetrahedra %d" % t.n_tetrahedra, "rank %d" % basis.rank]
        for gen in basis.generators:
            lines.append(
                "weights %s %s"
                % (gen.label, " ".join(str(w) for w in gen.weights))
            )
        self._send(
            {"type": "loaded", "id": request_id, "status": "ok"},
            "\n".join(lines).encode("utf-8"),
        )

    def handle_navigate(self, request_id, payload):
        try:
            parts = [float(x) for x in payload.decode("utf-8").split()]
        except (ValueError, UnicodeDecodeError):
            parts = None
        if parts is None or len(parts) != 6:
            self._error(request_id, "navigate payload must be 6 reals")
            return
        with self.state_lock:
            scene = self.scene
            camera = self.camera
        if scene is None:
            self._error(request_id, "no manifold loaded")
            return
        try:
            camera = move_camera(camera, parts[:3], parts[3:], scene)
        except (GeometryError, ValueError) as exc:
            self._error(request_id, str(exc))
            return
        with self.state_lock:
            self.camera = camera
        matrix = ",".join("%.17g" % x for x in camera.frame.reshape(-1))
        self._send({
            "type": "camera", "id": request_id, "status": "ok",
            "camTet": camera.tet, "camMatrix": matrix,
        })

    def handle_render(self, request_id, fields):
        with self.state_lock:
            if self.scene is None:
                params = None
                failure = "no manifold loaded"
            else:
                try:
                    self._apply_overrides(fields)
                    params = RenderParams(
                        width=self.settings["width"],
                        height=self.settings["height"],
                        weights=self._current_weights(),
                        fov=self.settings["fov"],
                        radius=self.settings["radius"],
                        max_steps=self.settings["maxSteps"],
                        colormap=self.settings["colormap"],
                        supersample=self.settings["supersample"],
                    )
                    failure = None
                except (ValueError, KeyError) as exc:
                    params = None
                    failure = str(exc)
            if params is not None:
                if self.pending is not None:
                    dropped = self.pending[0]
                    self._send({
                        "type": "ack", "id": dropped, "status": "superseded",
                    })
                self.pending = (request_id, self.scene, params)
                self.wake.notify()
        if failure is not None:
            self._error(request_id, failure)

    def _apply_overrides(self, fields):
        for key in ("width", "height", "maxSteps", "supersample"):
            if key in fields:
                self.settings[key] = int(fields[key])
        for key in ("fov", "radius"):
            if key in fields:
                self.settings[key] = float(fields[key])
        if "colormap" in fields:
            self.settings["colormap"] = fields["colormap"]
        if "weightsName" in fields:
            self.weights_name = fields["weightsName"]
        if "camMatrix" in fields:
            tet = int(fields.get("camTet", self.camera.tet))
            entries = [float(x) for x in fields["camMatrix"].split(",")]
            if len(entries) != 16:
                raise ValueError("camMatrix needs 16 entries")
            self.camera = Camera(tet=tet, frame=np.array(entries).reshape(4, 4))
        elif "camTet" in fields:
            self.camera = default_camera(self.scene, int(fields["camTet"]))

    def _current_weights(self):
        t = self.triangulation
        if not t.weights:
            raise ValueError("manifold has no weights lines")
        name = self.weights_name or next(iter(t.weights))
        if name not in t.weights:
            raise ValueError("no weights named %r" % name)
        return FaceWeights(t.weights[name], label=name)

    # -- render worker --

    def _render_loop(self):
        while True:
            with self.state_lock:
                while self.pending is None and not self.closing:
                    self.wake.wait()
                if self.closing:
                    return
                request_id, scene, params = self.pending
                self.pending = None
                self.in_flight = True
                camera = self.camera  # latest camera wins
                self.frame_id += 1
                frame_id = self.frame_id
            try:
                result = render(scene, camera, params)
                payload = result.image.pixels.tobytes()
                self._send({
                    "type": "frame", "id": frame_id, "status": "ok",
                    "width": params.width, "height": params.height,
                }, payload)
            except (GeometryError, TraversalError, ValueError) as exc:
                self._error(request_id, str(exc))
            finally:
                with self.state_lock:
                    self.in_flight = False

    # -- main loop --

    def run(self):
        try:
            while True:
                try:
                    message = read_message(self.sock)
                except ProtocolError as exc:
                    self._error("", "protocol error: %s" % exc)
                    break
                if message is None:
                    break
                fields, payload = message
                request_id = fields.get("id", "")
                kind = fields.get("type")
                if kind == "load":
                    self.handle_load(request_id, payload)
                elif kind == "navigate":
                    self.handle_navigate(request_id, payload)
                elif kind == "render":
                    self.handle_render(request_id, fields)
                else:
                    self._error(request_id, "unknown message type %r" % kind)
        finally:
            with self.state_lock:
                self.closing = True
                self.wake.notify()
            try:
                self.sock.close()
            except OSError:
                pass


class FrameService:
    """Loopback TCP listener; one Session per accepted connection."""

    def __init__(self, port=DEFAULT_PORT):
        self.listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self.listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self.listener.bind(("127.0.0.1", port))
        self.listener.listen(4)
        self.port = self.listener.getsockname()[1]
        self._closing = False

    def serve_forever(self):
        print("listening %d" % self.port, flush=True)
        try:
            while True:
                try:
                    conn, _addr = self.listener.accept()
                except OSError:
                    return
                session = Session(conn)
                threading.Thread(target=session.run, daemon=True).start()
        finally:
            self.close()

    def close(self):
        if not self._closing:
            self._closing = True
            try:
                self.listener.close()
            except OSError:
                pass


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="hypray-service",
        description="Serve renders and navigation over a local socket.",
    )
    parser.add_argument("--port", type=int, default=DEFAULT_PORT,
                        help="TCP port, 0 for an ephemeral one (default 7045)")
    args = parser.parse_args(argv)
    service = FrameService(port=args.port)
    try:
        service.serve_forever()
    except KeyboardInterrupt:
        service.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
