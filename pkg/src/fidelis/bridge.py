"""Client for the external-classifier wire protocol.

Newline-delimited JSON over a child process's stdin/stdout or a TCP
socket. The server speaks first with a hello frame declaring its class
count and feature width; afterwards each classify request is answered
exactly once, in order, with matching ids:

    server -> {"type": "hello", "num_classes": k, "feature_dim": d}
    client -> {"type": "classify", "id": 7, "graph": {...}}
    server -> {"type": "probs", "id": 7, "probs": [p0, ..., pk-1]}
    server -> {"type": "error", "id": 7, "message": "..."} on failure

Requests may be pipelined; responses are matched by id.
"""

from __future__ import annotations

import json
import shlex
import socket
import subprocess
import threading
from collections import deque

from .classifiers import ClassDistribution
from .errors import BridgeError, InvalidArgumentError
from .graphs import Graph
from .io import graph_to_dict


class BridgeClassifier:
    """A classifier living behind the wire protocol.

    The server is assumed to answer deterministically; pass
    ``deterministic=False`` if it does not, so estimators stop caching its
    outputs per graph.
    """

    def __init__(self, reader, writer, *, proc=None, sock=None,
                 deterministic: bool = True):
        self._reader = reader
        self._writer = writer
        self._proc = proc
        self._sock = sock
        self._next_id = 0
        self._stderr_tail: deque[str] = deque(maxlen=50)
        if proc is not None and proc.stderr is not None:
            t = threading.Thread(target=self._drain_stderr, daemon=True)
            t.start()
        self.deterministic = deterministic
        hello = self._read_frame()
        if hello.get("type") != "hello":
            raise BridgeError(f"expected hello frame, got {hello!r}")
        try:
            self.num_classes = int(hello["num_classes"])
            self.feature_dim = int(hello["feature_dim"])
        except (KeyError, TypeError, ValueError) as exc:
            raise BridgeError(f"malformed hello frame: {hello!r}") from exc

    # -- transports -----------------------------------------------------------

    @classmethod
    def spawn(cls, command, deterministic: bool = True) -> "BridgeClassifier":
        """Start a server subprocess and shake hands over its stdio."""
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        try:
            proc = subprocess.Popen(
                argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                stderr=subprocess.PIPE, text=True, bufsize=1)
        except OSError as exc:
            raise BridgeError(f"could not start bridge server {argv!r}: {exc}") from exc
        return cls(proc.stdout, proc.stdin, proc=proc, deterministic=deterministic)

    @classmethod
    def connect_tcp(cls, host: str, port: int,
                    deterministic: bool = True) -> "BridgeClassifier":
        try:
            sock = socket.create_connection((host, port), timeout=30)
        except OSError as exc:
            raise BridgeError(f"could not connect to {host}:{port}: {exc}") from exc
        reader = sock.makefile("r", encoding="utf-8", newline="\n")
        writer = sock.makefile("w", encoding="utf-8", newline="\n")
        return cls(reader, writer, sock=sock, deterministic=deterministic)

    def _drain_stderr(self) -> None:
        for line in self._proc.stderr:
            self._stderr_tail.append(line.rstrip())

    def _diagnostic(self) -> str:
        if self._stderr_tail:
            return " | server stderr: " + " / ".join(self._stderr_tail)
        return ""

    # -- protocol -------------------------------------------------------------

    def _read_frame(self) -> dict:
        try:
            line = self._reader.readline()
        except OSError as exc:
            raise BridgeError(f"bridge transport failed: {exc}{self._diagnostic()}") from exc
        if not line:
            raise BridgeError("bridge closed the connection" + self._diagnostic())
        try:
            frame = json.loads(line)
        except json.JSONDecodeError as exc:
            raise BridgeError(f"bridge sent malformed JSON: {line!r}") from exc
        if not isinstance(frame, dict):
            raise BridgeError(f"bridge sent a non-object frame: {frame!r}")
        return frame

    def _send(self, frame: dict) -> None:
        try:
            self._writer.write(json.dumps(frame, separators=(",", ":")) + "\n")
            self._writer.flush()
        except (OSError, BrokenPipeError) as exc:
            raise BridgeError(f"bridge write failed: {exc}{self._diagnostic()}") from exc

    def _check_graph(self, g: Graph) -> None:
        if self.feature_dim >= 0 and g.features.shape[1] != self.feature_dim:
            raise InvalidArgumentError(
                f"graph has feature width {g.features.shape[1]}, "
                f"bridge expects {self.feature_dim}")

    def _request_id(self) -> int:
        rid = self._next_id
        self._next_id += 1
        return rid

    def _parse_response(self, frame: dict, want_id: int) -> ClassDistribution:
        if frame.get("type") == "error":
            raise BridgeError(f"bridge error for id {frame.get('id')}: "
                              f"{frame.get('message')}")
        if frame.get("type") != "probs" or frame.get("id") != want_id:
            raise BridgeError(
                f"expected probs frame for id {want_id}, got {frame!r}")
        probs = frame.get("probs")
        if not isinstance(probs, list) or len(probs) != self.num_classes:
            raise BridgeError(f"bridge returned malformed probs: {probs!r}")
        return ClassDistribution(tuple(float(p) for p in probs))

    def classify(self, g: Graph, rng=None) -> ClassDistribution:
        self._check_graph(g)
        rid = self._request_id()
        self._send({"type": "classify", "id": rid, "graph": graph_to_dict(g)})
        return self._parse_response(self._read_frame(), rid)

    def classify_many(self, graphs: list[Graph]) -> list[ClassDistribution]:
        """Pipelined batch: all requests are written before any response is
        read; responses are consumed in order and matched by id."""
        rids = []
        for g in graphs:
            self._check_graph(g)
            rid = self._request_id()
            rids.append(rid)
            self._send({"type": "classify", "id": rid, "graph": graph_to_dict(g)})
        return [self._parse_response(self._read_frame(), rid) for rid in rids]

    # -- lifecycle ------------------------------------------------------------

    def close(self) -> None:
        for stream in (self._writer, self._reader):
            try:
                stream.close()
            except OSError:
                pass
        if self._proc is not None:
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()
        if self._sock is not None:
            try:
                self._sock.close()
            except OSError:
                pass

    def __enter__(self) -> "BridgeClassifier":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
