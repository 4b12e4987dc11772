"""Wire codec and live socket behavior of the frame service."""
import socket
import struct
import threading

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hypray import geometry as geo
from hypray import raycast as rc
from hypray import service as srv
from hypray.cohomology import FaceWeights

field_names = st.sampled_from(
    [f for f in srv.HEADER_FIELDS if f != "payloadBytes"]
)
field_values = st.text(
    alphabet=st.characters(blacklist_characters="\n",
                           blacklist_categories=("Cs",)),
    max_size=40,
)


class TestCodec:
    @settings(max_examples=300)
    @given(
        st.dictionaries(field_names, field_values, max_size=8),
        st.binary(max_size=200),
    )
    def test_round_trip(self, fields, payload):
        blob = srv.encode_message(fields, payload)
        decoded, body, consumed = srv.decode_message(blob)
        assert consumed == len(blob)
        assert body == payload
        expect = {k: str(v) for k, v in fields.items()}
        expect["payloadBytes"] = str(len(payload))
        assert decoded == expect

    @given(st.binary(max_size=50))
    def test_trailing_bytes_are_not_consumed(self, tail):
        blob = srv.encode_message({"type": "load"}, b"m004")
        decoded, body, consumed = srv.decode_message(blob + tail)
        assert consumed == len(blob)
        assert body == b"m004"
        assert decoded["type"] == "load"

    def test_payload_bytes_is_derived_not_trusted(self):
        blob = srv.encode_message(
            {"type": "frame", "payloadBytes": "999"}, b"abc"
        )
        decoded, body, _ = srv.decode_message(blob)
        assert decoded["payloadBytes"] == "3"
        assert body == b"abc"

    def test_unknown_field_rejected(self):
        with pytest.raises(srv.ProtocolError, match="unknown header field"):
            srv.encode_message({"shenanigans": "1"})

    def test_newline_in_value_rejected(self):
        with pytest.raises(srv.ProtocolError, match="newline"):
            srv.encode_message({"type": "a\nb"})

    @pytest.mark.parametrize("blob,msg", [
        (b"\x00\x00", "missing header length"),
        (struct.pack(">I", 10) + b"type=x", "header short"),
        (srv.encode_message({"type": "x"}, b"abcd")[:-2], "payload short"),
        (struct.pack(">I", 6) + b"ty pe\n", "bad header line"),
        (struct.pack(">I", 7) + b"nope=ok", "bad header line"),
        (struct.pack(">I", 6) + b"type=x", "payloadBytes"),
        (struct.pack(">I", 4) + b"\xff\xfe\xfd\xfc", "not UTF-8"),
        (struct.pack(">I", 23) + b"type=x\npayloadBytes=-10", "negative"),
    ])
    def test_malformed_frames(self, blob, msg):
        with pytest.raises(srv.ProtocolError, match=msg):
            srv.decode_message(blob)


@pytest.fixture
def service_port():
    service = srv.FrameService(port=0)
    thread = threading.Thread(target=service.serve_forever, daemon=True)
    thread.start()
    yield service.port
    service.close()


class Client:
    def __init__(self, port):
        self.sock = socket.create_connection(("127.0.0.1", port), timeout=60)

    def send(self, fields, payload=b""):
        self.sock.sendall(srv.encode_message(fields, payload))

    def send_raw(self, blob):
        self.sock.sendall(blob)

    def recv(self):
        return srv.read_message(self.sock)

    def close(self):
        self.sock.close()


@pytest.fixture
def client(service_port):
    c = Client(service_port)
    yield c
    c.close()


def local_frame(scene, camera, **kwargs):
    weights = kwargs.pop("weights", FaceWeights((0, 1, 1, 0)))
    params = rc.RenderParams(weights=weights, **kwargs)
    return rc.render(scene, camera, params).image.pixels.tobytes()


class TestSession:
    def test_render_before_load_errors(self, client):
        client.send({"type": "render", "id": "r0"})
        fields, payload = client.recv()
        assert fields["type"] == "error"
        assert fields["id"] == "r0"
        assert b"no manifold loaded" in payload

    def test_load_bundled_by_name(self, client):
        client.send({"type": "load", "id": "l1"}, b"m004")
        fields, payload = client.recv()
        assert fields["type"] == "loaded"
        assert fields["id"] == "l1"
        assert fields["status"] == "ok"
        lines = payload.decode().splitlines()
        assert lines[0] == "tetrahedra 2"
        assert lines[1] == "rank 1"
        assert lines[2] == "weights gen0 0 1 1 0"

    def test_load_inline_text(self, client, m129_text):
        client.send({"type": "load", "id": "l2"}, m129_text.encode())
        fields, payload = client.recv()
        assert fields["type"] == "loaded"
        lines = payload.decode().splitlines()
        assert lines[0] == "tetrahedra 4"
        assert lines[1] == "rank 2"

    def test_load_from_path(self, client, m004_file):
        client.send({"type": "load", "id": "l3"}, m004_file.encode())
        fields, _ = client.recv()
        assert fields["type"] == "loaded"

    def test_bad_load_keeps_the_session_alive(self, client):
        client.send({"type": "load", "id": "l4"}, b"tri 1\ntetrahedra -2\n")
        fields, payload = client.recv()
        assert fields["type"] == "error"
        assert b"positive" in payload
        client.send({"type": "load", "id": "l5"}, b"m004")
        fields, _ = client.recv()
        assert fields["type"] == "loaded"
        assert fields["id"] == "l5"

    def test_unknown_type_errors(self, client):
        client.send({"type": "wobble", "id": "w1"})
        fields, payload = client.recv()
        assert fields["type"] == "error"
        assert b"unknown message type" in payload

    def test_navigate_zero_move_echoes_the_default_camera(self, client,
                                                          m004_scene):
        client.send({"type": "load", "id": "l1"}, b"m004")
        client.recv()
        client.send({"type": "navigate", "id": "n1"}, b"0 0 0 0 0 0")
        fields, _ = client.recv()
        assert fields["type"] == "camera"
        assert fields["id"] == "n1"
        assert fields["camTet"] == "0"
        frame = np.array([float(x) for x in fields["camMatrix"].split(",")])
        expect = rc.default_camera(m004_scene).frame.reshape(-1)
        assert np.max(np.abs(frame - expect)) < 1e-12

    def test_navigate_forward_and_back_returns(self, client):
        client.send({"type": "load", "id": "l1"}, b"m004")
        client.recv()
        client.send({"type": "navigate", "id": "n1"}, b"0 0 0.3 0 0 0")
        there, _ = client.recv()
        client.send({"type": "navigate", "id": "n2"}, b"0 0 -0.3 0 0 0")
        back, _ = client.recv()
        client.send({"type": "navigate", "id": "n3"}, b"0 0 0 0 0 0")
        again, _ = client.recv()
        a = np.array([float(x) for x in there["camMatrix"].split(",")])
        b = np.array([float(x) for x in back["camMatrix"].split(",")])
        assert np.max(np.abs(a - b)) > 1e-3
        c = np.array([float(x) for x in again["camMatrix"].split(",")])
        assert np.max(np.abs(b - c)) < 1e-12

    def test_navigate_bad_payload(self, client):
        client.send({"type": "load", "id": "l1"}, b"m004")
        client.recv()
        client.send({"type": "navigate", "id": "n1"}, b"1 2 3")
        fields, payload = client.recv()
        assert fields["type"] == "error"
        assert b"6 reals" in payload

    def test_navigate_before_load(self, client):
        client.send({"type": "navigate", "id": "n0"}, b"0 0 0 0 0 0")
        fields, payload = client.recv()
        assert fields["type"] == "error"
        assert b"no manifold loaded" in payload

    def test_render_returns_the_local_pixels(self, client, m004_scene):
        client.send({"type": "load", "id": "l1"}, b"m004")
        client.recv()
        client.send({
            "type": "render", "id": "r1", "width": 32, "height": 24,
        })
        fields, payload = client.recv()
        assert fields["type"] == "frame"
        assert fields["status"] == "ok"
        assert fields["id"] == "1"
        assert (fields["width"], fields["height"]) == ("32", "24")
        assert len(payload) == 32 * 24 * 3
        cam = rc.default_camera(m004_scene)
        assert payload == local_frame(m004_scene, cam, width=32, height=24)

    def test_render_overrides_persist(self, client):
        client.send({"type": "load", "id": "l1"}, b"m004")
        client.recv()
        client.send({
            "type": "render", "id": "r1", "width": 16, "height": 12,
        })
        fields, payload = client.recv()
        assert (fields["width"], fields["height"]) == ("16", "12")
        client.send({"type": "render", "id": "r2"})
        fields, payload = client.recv()
        assert (fields["width"], fields["height"]) == ("16", "12")
        assert len(payload) == 16 * 12 * 3

    def test_render_rejects_bad_overrides(self, client):
        client.send({"type": "load", "id": "l1"}, b"m004")
        client.recv()
        client.send({"type": "render", "id": "r1", "fov": 5.0})
        fields, payload = client.recv()
        assert fields["type"] == "error"
        assert b"fov" in payload
        client.send({
            "type": "render", "id": "r2", "weightsName": "ghost",
            "width": 8, "height": 8,
        })
        fields, payload = client.recv()
        assert fields["type"] == "error"
        assert b"no weights named" in payload

    def test_burst_supersedes_all_but_the_newest(self, client):
        client.send({"type": "load", "id": "l1"}, b"m004")
        client.recv()
        # ~1s in flight at 128x128, then a burst of three quick requests
        client.send({
            "type": "render", "id": "slow", "width": 128, "height": 128,
        })
        for rid in ("q1", "q2", "q3"):
            client.send({
                "type": "render", "id": rid, "width": 8, "height": 8,
            })
        acked = []
        frames = []
        while len(frames) < 2:
            fields, payload = client.recv()
            if fields["type"] == "ack":
                assert fields["status"] == "superseded"
                acked.append(fields["id"])
            else:
                assert fields["type"] == "frame"
                frames.append((int(fields["id"]), len(payload)))
        assert acked == ["q1", "q2"]
        assert [fid for fid, _ in frames] == [1, 2]
        assert frames[0][1] == 128 * 128 * 3
        assert frames[1][1] == 8 * 8 * 3

    def test_camera_updates_during_flight_apply_to_the_next_frame(
            self, client, m004_scene):
        client.send({"type": "load", "id": "l1"}, b"m004")
        client.recv()
        client.send({
            "type": "render", "id": "slow", "width": 128, "height": 128,
        })
        moves = [b"0 0 0.2 0 0 0", b"0.1 0 0 0 0 0", b"0 0 0 0 0.4 0"]
        for i, move in enumerate(moves):
            client.send({"type": "navigate", "id": "n%d" % i}, move)
        client.send({"type": "render", "id": "next", "width": 16,
                     "height": 16})
        frames = []
        cameras = 0
        while len(frames) < 2:
            fields, payload = client.recv()
            if fields["type"] == "camera":
                cameras += 1
            elif fields["type"] == "frame":
                frames.append(payload)
        assert cameras == len(moves)
        cam = rc.default_camera(m004_scene)
        for move in moves:
            parts = [float(x) for x in move.split()]
            cam = rc.move_camera(cam, parts[:3], parts[3:], m004_scene)
        assert frames[1] == local_frame(
            m004_scene, cam, width=16, height=16
        )

    def test_reload_resets_camera_and_is_deterministic(self, client,
                                                       m004_scene):
        client.send({"type": "load", "id": "l1"}, b"m004")
        client.recv()
        client.send({"type": "navigate", "id": "n1"}, b"0 0 0.4 0 0 0")
        client.recv()
        client.send({"type": "load", "id": "l2"}, b"m004")
        fields, _ = client.recv()
        assert fields["type"] == "loaded"
        client.send({"type": "render", "id": "r1", "width": 16, "height": 16})
        _, payload = client.recv()
        cam = rc.default_camera(m004_scene)
        assert payload == local_frame(m004_scene, cam, width=16, height=16)

    def test_protocol_garbage_errors_and_closes(self, client):
        client.send_raw(struct.pack(">I", 5) + b"ab=cd")
        fields, payload = client.recv()
        assert fields["type"] == "error"
        assert b"protocol error" in payload
        assert client.recv() is None
