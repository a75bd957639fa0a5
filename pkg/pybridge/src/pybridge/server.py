"""The wire-protocol server loop.

Frames are one JSON object per line. The server emits the hello frame
first, then answers each request exactly once and in order:

    {"type": "hello", "num_classes": k, "feature_dim": d}
    {"type": "classify", "id": 7, "graph": {...}}   (client -> server)
    {"type": "probs", "id": 7, "probs": [...]}      (server -> client)
    {"type": "error", "id": 7, "message": "..."}

Malformed requests and model exceptions produce an error frame and keep
the connection alive; end of input is a clean shutdown.
"""

from __future__ import annotations

import json
import socketserver
import sys


def _model_metadata(model, num_classes=None, feature_dim=None) -> tuple[int, int]:
    k = num_classes if num_classes is not None else getattr(model, "num_classes", None)
    d = feature_dim if feature_dim is not None else getattr(model, "feature_dim", None)
    if k is None:
        raise ValueError("model must declare num_classes (attribute or argument)")
    return int(k), int(d if d is not None else -1)


def _emit(stream, frame: dict) -> None:
    stream.write(json.dumps(frame, separators=(",", ":")) + "\n")
    stream.flush()


def _handle_line(line: str, model, num_classes: int, out) -> None:
    try:
        msg = json.loads(line)
    except json.JSONDecodeError:
        _emit(out, {"type": "error", "id": None, "message": "malformed JSON"})
        return
    rid = msg.get("id") if isinstance(msg, dict) else None
    if not isinstance(msg, dict) or msg.get("type") != "classify":
        _emit(out, {"type": "error", "id": rid,
                    "message": "expected a classify frame"})
        return
    try:
        probs = [float(p) for p in model(msg["graph"])]
        if len(probs) != num_classes:
            raise ValueError(
                f"model returned {len(probs)} probabilities, expected {num_classes}")
    except Exception as exc:  # noqa: BLE001 - every model failure becomes a frame
        _emit(out, {"type": "error", "id": rid, "message": str(exc)})
        return
    _emit(out, {"type": "probs", "id": rid, "probs": probs})


def _serve_streams(model, num_classes: int, feature_dim: int, inp, out) -> None:
    _emit(out, {"type": "hello", "num_classes": num_classes,
                "feature_dim": feature_dim})
    for raw in inp:
        line = raw.strip()
        if not line:
            continue
        _handle_line(line, model, num_classes, out)


def serve_stdio(model, num_classes=None, feature_dim=None,
                stdin=None, stdout=None) -> None:
    """Serve one session over stdin/stdout until EOF."""
    k, d = _model_metadata(model, num_classes, feature_dim)
    _serve_streams(model, k, d, stdin or sys.stdin, stdout or sys.stdout)


def make_tcp_server(model, port: int, num_classes=None, feature_dim=None,
                    host: str = "127.0.0.1") -> socketserver.ThreadingTCPServer:
    """TCP server object (not yet serving); each connection gets its own
    single-threaded session, answered in arrival order."""
    k, d = _model_metadata(model, num_classes, feature_dim)

    class Handler(socketserver.StreamRequestHandler):
        def handle(self) -> None:
            reader = (line.decode("utf-8") for line in self.rfile)
            _serve_streams(model, k, d, reader, _TextOut(self.wfile))

    class Server(socketserver.ThreadingTCPServer):
        allow_reuse_address = True
        daemon_threads = True

    return Server((host, port), Handler)


def serve_tcp(model, port: int, num_classes=None, feature_dim=None,
              host: str = "127.0.0.1") -> None:
    """Serve TCP connections on ``port`` until interrupted."""
    with make_tcp_server(model, port, num_classes, feature_dim, host) as server:
        server.serve_forever()


class _TextOut:
    """Minimal text adapter over a binary socket file."""

    def __init__(self, wfile):
        self._wfile = wfile

    def write(self, text: str) -> None:
        self._wfile.write(text.encode("utf-8"))

    def flush(self) -> None:
        self._wfile.flush()
