"""Drive the frame service end to end over its stream protocol.

Starts the service on an ephemeral loopback port, connects a raw
socket, and exercises the session verbs: load a bundled manifold,
navigate the camera, request frames, and finally flood the queue with
render requests to show latest-wins coalescing (the stale requests
come back as superseded acks, the surviving one as a frame with the
next id).
"""
import socket
import threading

from hypray.service import FrameService, encode_message, read_message


class Client:
    def __init__(self, port):
        self.sock = socket.create_connection(("127.0.0.1", port), timeout=60)

    def send(self, fields, payload=b""):
        self.sock.sendall(encode_message(fields, payload))

    def recv(self):
        return read_message(self.sock)


def show(tag, reply):
    fields, payload = reply
    head = {k: v for k, v in fields.items() if k != "payloadBytes"}
    print("%s -> %s" % (tag, head))
    if payload and fields.get("type") != "frame":
        for line in payload.decode("utf-8").splitlines():
            print("    %s" % line)
    elif payload:
        print("    [%s bytes of RGB8]" % fields["payloadBytes"])


def main():
    service = FrameService(port=0)
    threading.Thread(target=service.serve_forever, daemon=True).start()
    client = Client(service.port)
    print("connected to port %d" % service.port)

    client.send({"type": "load"}, b"m004")
    show("load m004", client.recv())

    client.send({"type": "navigate"}, b"0.3 0 0 0 0.05 0")
    show("navigate", client.recv())

    client.send({"type": "render", "width": 96, "height": 64, "id": "first"})
    show("render 96x64", client.recv())

    # queue depth is one: each request gets exactly one reply, and only
    # the newest pending request survives to become a frame
    client.send({"type": "render", "width": 256, "height": 256, "id": "slow"})
    for tag in ("a", "b", "c"):
        client.send({"type": "render", "width": 64, "height": 64, "id": tag})
    for _ in range(4):
        show("burst", client.recv())

    client.sock.close()
    service.close()


if __name__ == "__main__":
    main()
