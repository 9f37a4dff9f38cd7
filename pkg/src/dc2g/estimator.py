"""Cost-to-go estimators and the framed-PNG bridge to external models.

Bridge protocol, both directions: the handshake line ``DC2G/1 256 256\\n``
immediately on connect, then alternating frames of
``[u32 big-endian payload length][PNG bytes]`` with strict one-in-one-out
ordering. Transport is stdio (a spawned subprocess) or a local TCP socket,
selected by the ``DC2G_BRIDGE`` environment variable (``stdio`` or
``tcp:HOST:PORT``).
"""
from __future__ import annotations

import os
import select
import socket
import struct
import subprocess
import sys
import time

import numpy as np

from dc2g._kernels import classify_lut, masked_copy
from dc2g.costmap import dijkstra_cost_to_go, encode_c2g, traversable_mask
from dc2g.errors import (
    BadImageDims,
    BeliefWorldMismatch,
    BridgeTimeout,
    BrokenPipe,
    MalformedFrame,
    MalformedPng,
)
from dc2g.semantic import Palette, SemanticGrid, png_bytes_to_rgb, resize_nearest, rgb_to_png_bytes

HANDSHAKE = b"DC2G/1 256 256\n"
IMAGE_SIZE = 256
MAX_FRAME = 1 << 26


class OracleEstimator:
    """Ground-truth cost-to-go masked to what the belief has observed.

    This is exactly the target image the learned model is trained to imitate,
    so it upper-bounds what any estimator can contribute to the planner.
    """

    name = "oracle"

    def __init__(self, world: SemanticGrid, palette: Palette, goal: tuple[int, int], out_size: int = IMAGE_SIZE):
        field = dijkstra_cost_to_go(traversable_mask(world, palette), goal)
        self._c2g_big = resize_nearest(encode_c2g(field), out_size, out_size)
        self._world_big = resize_nearest(world.to_rgb(palette), out_size, out_size)
        self._out_size = out_size

    def estimate(self, belief_img: np.ndarray) -> np.ndarray:
        n = self._out_size
        if belief_img.shape != (n, n, 3):
            raise BadImageDims(f"expected {(n, n, 3)} belief image, got {belief_img.shape}")
        out, mismatch = masked_copy(belief_img, self._world_big, self._c2g_big)
        if mismatch:
            raise BeliefWorldMismatch("belief contains an observed pixel that disagrees with the world")
        return out


class HeuristicEstimator:
    """Context-free control estimator: flat mid-gray wherever traversable.

    Every observed traversable pixel scores the same, so the planner's
    subgoal choice degenerates to its distance/row-major tie-break.
    """

    name = "heuristic"

    def __init__(self, palette: Palette):
        colors = []
        for cls in palette.classes:
            if cls.name == "unobserved":
                colors.append((0, 0, 0))
            elif cls.traversable:
                colors.append((128, 128, 128))
            else:
                colors.append((255, 0, 0))
        self._mults, self._lut = _color_hash_lut(palette, np.asarray(colors, dtype=np.uint8))

    def estimate(self, belief_img: np.ndarray) -> np.ndarray:
        a, b, c = self._mults
        return classify_lut(belief_img, a, b, c, self._lut)


def _color_hash_lut(palette: Palette, out_colors: np.ndarray):
    """Perfect byte-hash over the palette colors -> 256-entry output table.

    key = (r*a + g*b + b*c) mod 256 must be collision-free over the palette;
    input images are palette-exact renders, so off-palette colors may map to
    an arbitrary (but fixed) entry.
    """
    table = palette.color_table().astype(np.int64)
    for a in range(1, 32):
        for b in range(1, 32):
            for c in range(1, 32):
                keys = (table[:, 0] * a + table[:, 1] * b + table[:, 2] * c) % 256
                if len(set(keys.tolist())) == len(table):
                    lut = np.full((256, 3), (255, 0, 0), dtype=np.uint8)
                    lut[keys] = out_colors
                    return (a, b, c), lut
    raise ValueError("no collision-free byte hash for this palette")


def write_frame(wfile, payload: bytes):
    if len(payload) == 0 or len(payload) > MAX_FRAME:
        raise MalformedFrame(f"refusing to send frame of {len(payload)} bytes")
    try:
        wfile.write(struct.pack(">I", len(payload)))
        wfile.write(payload)
        wfile.flush()
    except (BrokenPipeError, ConnectionResetError) as exc:
        raise BrokenPipe(str(exc)) from exc


def read_frame(rfile, allow_eof: bool = False) -> bytes | None:
    """Read one length-prefixed frame; None on clean EOF when allowed."""
    head = rfile.read(4)
    if head == b"" and allow_eof:
        return None
    if len(head) != 4:
        raise MalformedFrame("stream ended inside a frame header")
    (length,) = struct.unpack(">I", head)
    if length == 0:
        raise MalformedFrame("zero-length frame")
    if length > MAX_FRAME:
        raise MalformedFrame(f"frame of {length} bytes exceeds the {MAX_FRAME} byte cap")
    payload = rfile.read(length)
    if len(payload) != length:
        raise MalformedFrame("stream ended inside a frame payload")
    return payload


def serve_frames(handler, rfile, wfile):
    """Serve one bridge connection until clean EOF; raises on protocol abuse."""
    wfile.write(HANDSHAKE)
    wfile.flush()
    peer = rfile.read(len(HANDSHAKE))
    if peer != HANDSHAKE:
        raise MalformedFrame(f"bad handshake {peer!r}")
    while True:
        payload = read_frame(rfile, allow_eof=True)
        if payload is None:
            return
        try:
            img = png_bytes_to_rgb(payload)
        except MalformedPng as exc:
            raise MalformedFrame(f"request payload is not an RGB PNG: {exc}") from exc
        out = handler.estimate(img)
        write_frame(wfile, rgb_to_png_bytes(out))


def serve_stdio(handler):
    serve_frames(handler, sys.stdin.buffer, sys.stdout.buffer)


def serve_tcp(handler, host: str, port: int, connections: int | None = None):
    """Accept and serve bridge connections one at a time."""
    srv = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    srv.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    srv.bind((host, port))
    srv.listen(1)
    served = 0
    try:
        while connections is None or served < connections:
            conn, _ = srv.accept()
            with conn:
                rfile = conn.makefile("rb")
                wfile = conn.makefile("wb")
                serve_frames(handler, rfile, wfile)
            served += 1
    finally:
        srv.close()


class BridgeClient:
    """Client side of the bridge; one outstanding request at a time."""

    name = "bridge"

    def __init__(self, read_fn, write_fn, close_fn, timeout_s: float = 30.0):
        self._read = read_fn
        self._write = write_fn
        self._close = close_fn
        self.timeout_s = timeout_s
        self._write(HANDSHAKE)
        peer = self._read_exact(len(HANDSHAKE))
        if peer != HANDSHAKE:
            raise MalformedFrame(f"bad handshake {peer!r}")

    @staticmethod
    def spawn(cmd: list[str], timeout_s: float = 30.0, env=None) -> "BridgeClient":
        """Spawn a server subprocess and talk to it over its stdio."""
        proc = subprocess.Popen(cmd, stdin=subprocess.PIPE, stdout=subprocess.PIPE, env=env)

        def read_fn(n, deadline):
            out = b""
            fd = proc.stdout.fileno()
            while len(out) < n:
                remain = deadline - time.monotonic()
                if remain <= 0:
                    raise BridgeTimeout(int(timeout_s * 1000))
                ready, _, _ = select.select([fd], [], [], remain)
                if not ready:
                    raise BridgeTimeout(int(timeout_s * 1000))
                chunk = os.read(fd, n - len(out))
                if chunk == b"":
                    raise BrokenPipe("bridge server closed its stdout")
                out += chunk
            return out

        def write_fn(data):
            try:
                proc.stdin.write(data)
                proc.stdin.flush()
            except (BrokenPipeError, ConnectionResetError, ValueError) as exc:
                raise BrokenPipe(str(exc)) from exc

        def close_fn():
            try:
                proc.stdin.close()
            except OSError:
                pass
            try:
                proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                proc.kill()

        client = object.__new__(BridgeClient)
        client._proc = proc
        BridgeClient.__init__(client, read_fn, write_fn, close_fn, timeout_s)
        return client

    @staticmethod
    def connect_tcp(host: str, port: int, timeout_s: float = 30.0) -> "BridgeClient":
        sock = socket.create_connection((host, port), timeout=timeout_s)

        def read_fn(n, deadline):
            out = b""
            while len(out) < n:
                remain = deadline - time.monotonic()
                if remain <= 0:
                    raise BridgeTimeout(int(timeout_s * 1000))
                sock.settimeout(remain)
                try:
                    chunk = sock.recv(n - len(out))
                except socket.timeout:
                    raise BridgeTimeout(int(timeout_s * 1000)) from None
                if chunk == b"":
                    raise BrokenPipe("bridge peer closed the connection")
                out += chunk
            return out

        def write_fn(data):
            try:
                sock.sendall(data)
            except (BrokenPipeError, ConnectionResetError) as exc:
                raise BrokenPipe(str(exc)) from exc

        return BridgeClient(read_fn, write_fn, sock.close, timeout_s)

    @staticmethod
    def from_env(cmd: list[str] | None = None, timeout_s: float = 30.0) -> "BridgeClient":
        """Open the transport named by DC2G_BRIDGE (default stdio)."""
        spec = os.environ.get("DC2G_BRIDGE", "stdio")
        if spec == "stdio":
            if not cmd:
                raise ValueError("stdio bridge needs the server command to spawn")
            return BridgeClient.spawn(cmd, timeout_s)
        if spec.startswith("tcp:"):
            _, host, port = spec.split(":")
            return BridgeClient.connect_tcp(host, int(port), timeout_s)
        raise ValueError(f"unrecognized DC2G_BRIDGE value {spec!r}")

    def _read_exact(self, n: int) -> bytes:
        return self._read(n, time.monotonic() + self.timeout_s)

    def estimate(self, belief_img: np.ndarray) -> np.ndarray:
        write_frame(_Writer(self._write), rgb_to_png_bytes(belief_img))
        head = self._read_exact(4)
        (length,) = struct.unpack(">I", head)
        if length == 0 or length > MAX_FRAME:
            raise MalformedFrame(f"bad response frame length {length}")
        payload = self._read_exact(length)
        try:
            img = png_bytes_to_rgb(payload)
        except MalformedPng as exc:
            raise MalformedFrame(f"response payload is not an RGB PNG: {exc}") from exc
        if img.shape != (IMAGE_SIZE, IMAGE_SIZE, 3):
            raise BadImageDims(f"expected {(IMAGE_SIZE, IMAGE_SIZE, 3)} response, got {img.shape}")
        return img

    def close(self):
        self._close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class _Writer:
    def __init__(self, write_fn):
        self._write_fn = write_fn

    def write(self, data):
        self._write_fn(data)

    def flush(self):
        pass
