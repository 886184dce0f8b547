"""Live human-in-the-loop session server.

Runs the simulation loop at a fixed tick rate and talks to browser clients
over a WebSocket: clients send hand targets and switch task / controller /
noise; the server clamps the hands to the separation constraint, runs the
selected controller on the rendered depth observation, steps the cloth and
broadcasts a frame per tick.  The first client to send a `hands` message
holds the driver role until it disconnects; everyone else is view-only.

All mutable session state is owned by the simulation loop; client I/O only
exchanges messages with it through queues.
"""

import asyncio
import http
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import baselines, forest as forest_mod
from .cloth import corner_positions, step
from .evaluation import baseline_controller, expert_controller, forest_controller
from .expert import TaskSpec, clamp_separation, expert_action
from .features import AlignmentError, extract
from .imitation import Workbench
from .observation import NoiseSpec, apply_noise, render_depth

log = logging.getLogger("domforest.server")

CONTROLLER_NAMES = ("forest", "expert", "linear", "mlp")


def encode_message(obj) -> str:
    return json.dumps(obj, separators=(",", ":"))


def decode_message(text: str) -> dict:
    msg = json.loads(text)
    if not isinstance(msg, dict) or "type" not in msg:
        raise ValueError("message must be an object with a 'type' field")
    return msg


def error_message(code: str, detail: str = "") -> str:
    return encode_message({"type": "error", "code": code, "detail": detail})


@dataclass
class SessionState:
    """Everything the simulation loop mutates."""
    bench: Workbench
    controllers: dict                      # name -> factory(task) -> act fn
    task: TaskSpec
    controller_name: str = "forest"
    noise_enabled: bool = False
    noise: NoiseSpec = field(default_factory=lambda: NoiseSpec(depth_sigma=0.005))
    tick: int = 0
    mesh: object = None
    cloth: object = None
    hand_targets: tuple = None
    robot_action: np.ndarray = None
    last_ctrl: np.ndarray = None
    last_expert: np.ndarray = None
    driver: object = None                  # connection holding the driver role
    noise_rng: object = field(default_factory=lambda: np.random.default_rng(1234))

    def __post_init__(self):
        self.reset_cloth()

    def reset_cloth(self):
        self.mesh, self.cloth = self.bench.fresh_cloth()
        v0, v1, v2, v3 = corner_positions(self.cloth, self.mesh)
        self.hand_targets = (v2, v3)
        self.robot_action = np.concatenate([v0, v1])
        self.last_ctrl = self.robot_action.copy()
        self.last_expert = self.robot_action.copy()

    def act(self, name: str):
        return self.controllers[name](self.task)

    def apply_message(self, msg: dict, sender) -> str | None:
        """Returns an error string for the sender, or None on success."""
        kind = msg["type"]
        if kind == "hands":
            if self.driver is None:
                self.driver = sender
            if sender is not self.driver:
                return error_message("not_driver", "another client is driving")
            try:
                v2 = np.asarray([float(x) for x in msg["v2"]], dtype=np.float64)
                v3 = np.asarray([float(x) for x in msg["v3"]], dtype=np.float64)
            except (KeyError, TypeError, ValueError):
                return error_message("bad_hands", "v2/v3 must be 3-vectors")
            if v2.shape != (3,) or v3.shape != (3,) or not (
                    np.isfinite(v2).all() and np.isfinite(v3).all()):
                return error_message("bad_hands", "v2/v3 must be finite 3-vectors")
            self.hand_targets = clamp_separation(v2, v3)
            return None
        if kind == "set_task":
            try:
                self.task = TaskSpec.by_name(str(msg.get("task", "")))
            except ValueError as exc:
                return error_message("bad_task", str(exc))
            return None
        if kind == "set_controller":
            name = str(msg.get("name", ""))
            if name not in self.controllers:
                return error_message(
                    "bad_controller",
                    f"available: {sorted(self.controllers)}")
            self.controller_name = name
            return None
        if kind == "set_noise":
            self.noise_enabled = bool(msg.get("enabled", False))
            return None
        return error_message("bad_type", f"unknown message type {kind!r}")

    def advance(self, sim_steps: int, run_controller: bool) -> None:
        if run_controller:
            img = render_depth(self.cloth, self.mesh, self.bench.camera)
            if self.noise_enabled:
                img = apply_noise(img, self.noise,
                                  int(self.noise_rng.integers(0, 2**63 - 1)))
            _, _, v2, v3 = corner_positions(self.cloth, self.mesh)
            self.last_expert = expert_action(self.task, v2, v3)
            act = self.act(self.controller_name)
            try:
                feat = extract(img, self.bench.bank, size=self.bench.canvas)
                self.last_ctrl = np.asarray(act(feat, v2, v3), dtype=np.float64)
            except AlignmentError:
                self.last_ctrl = self.last_expert.copy()
            self.robot_action = self.last_ctrl
        for _ in range(sim_steps):
            self.cloth = step(self.cloth, self.mesh, self.bench.sim,
                              self.robot_action, self.hand_targets)
        self.tick += 1

    def frame(self, decimate: int) -> str:
        v0, v1, v2, v3 = corner_positions(self.cloth, self.mesh)
        nx, ny = self.mesh.nx, self.mesh.ny
        sx = max(1, int(np.ceil(nx / decimate)))
        sy = max(1, int(np.ceil(ny / decimate)))
        grid = self.cloth.positions.reshape(ny, nx, 3)[::sy, ::sx]
        diff = self.last_ctrl - self.last_expert
        inst_error = float(diff @ diff) / diff.size
        payload = {
            "type": "frame",
            "tick": self.tick,
            "time": self.cloth.time,
            "task": self.task.name,
            "controller": self.controller_name,
            "noise": self.noise_enabled,
            "has_driver": self.driver is not None,
            "nx": int(grid.shape[1]),
            "ny": int(grid.shape[0]),
            "vertex_count": int(grid.shape[0] * grid.shape[1]),
            "vertices": [[float(c) for c in v] for v in grid.reshape(-1, 3)],
            "corners": {
                "v0": [float(c) for c in v0], "v1": [float(c) for c in v1],
                "v2": [float(c) for c in v2], "v3": [float(c) for c in v3],
            },
            "action": [float(c) for c in self.last_ctrl],
            "expert": [float(c) for c in self.last_expert],
            "error": inst_error,
        }
        return encode_message(payload)


def load_checkpoint_controllers(checkpoint: Path):
    """Controller factories from whatever model files the checkpoint holds."""
    controllers = {"expert": expert_controller}
    forest_path = checkpoint / "forest.rfcl"
    if forest_path.exists():
        f = forest_mod.load(forest_path)
        controllers["forest"] = lambda task, _f=f: forest_controller(_f, task)
    linear_path = checkpoint / "linear.linm"
    if linear_path.exists():
        lin = baselines.load_linear(linear_path)
        controllers["linear"] = lambda task, _m=lin: baseline_controller(_m)
    mlp_path = checkpoint / "mlp.mlpm"
    if mlp_path.exists():
        mlp = baselines.load_mlp(mlp_path)
        controllers["mlp"] = lambda task, _m=mlp: baseline_controller(_m)
    return controllers


_MIME = {".html": "text/html", ".js": "text/javascript", ".css": "text/css",
         ".map": "application/json", ".ico": "image/x-icon",
         ".svg": "image/svg+xml"}


class SessionServer:
    def __init__(self, state: SessionState, tick_hz: float = 30.0,
                 controller_every: int = 1, decimate: int = 32,
                 ui_dir: Path = None):
        self.state = state
        self.tick_hz = tick_hz
        self.controller_every = max(1, controller_every)
        self.decimate = decimate
        self.ui_dir = Path(ui_dir) if ui_dir else None
        self.clients = set()
        self.inbox = asyncio.Queue()
        self.sim_steps_per_tick = max(
            1, int(round(1.0 / (tick_hz * state.bench.sim.dt))))
        self._stop = asyncio.Event()

    # ---- client I/O ----------------------------------------------------

    async def handler(self, ws):
        self.clients.add(ws)
        try:
            async for raw in ws:
                try:
                    msg = decode_message(raw)
                except (json.JSONDecodeError, ValueError) as exc:
                    await ws.send(error_message("bad_message", str(exc)))
                    continue
                await self.inbox.put((msg, ws))
        finally:
            self.clients.discard(ws)
            if self.state.driver is ws:
                self.state.driver = None

    def process_request(self, connection, request):
        """Serve the UI over plain HTTP on the same port."""
        from websockets.datastructures import Headers
        from websockets.http11 import Response

        path = request.path.split("?", 1)[0]
        if path == "/ws":
            return None    # continue with the websocket handshake
        if request.headers.get("Upgrade", "").lower() == "websocket":
            return None
        if self.ui_dir is None:
            return connection.respond(
                http.HTTPStatus.OK,
                "domforest session server; connect a websocket at /ws\n")
        rel = "index.html" if path in ("/", "") else path.lstrip("/")
        target = (self.ui_dir / rel).resolve()
        if not str(target).startswith(str(self.ui_dir.resolve())) or not target.is_file():
            return connection.respond(http.HTTPStatus.NOT_FOUND, "not found\n")
        body = target.read_bytes()
        headers = Headers([
            ("Content-Type", _MIME.get(target.suffix, "application/octet-stream")),
            ("Content-Length", str(len(body))),
            ("Connection", "close"),
        ])
        return Response(200, "OK", headers, body)

    # ---- simulation loop ------------------------------------------------

    async def drain_inbox(self):
        while True:
            try:
                msg, sender = self.inbox.get_nowait()
            except asyncio.QueueEmpty:
                return
            err = self.state.apply_message(msg, sender)
            if err is not None and sender in self.clients:
                try:
                    await sender.send(err)
                except Exception:
                    pass

    async def broadcast(self, text: str):
        dead = []
        for ws in self.clients:
            try:
                await ws.send(text)
            except Exception:
                dead.append(ws)
        for ws in dead:
            self.clients.discard(ws)

    async def run_loop(self):
        period = 1.0 / self.tick_hz
        next_tick = time.perf_counter()
        while not self._stop.is_set():
            await self.drain_inbox()
            run_controller = (self.state.tick % self.controller_every) == 0
            self.state.advance(self.sim_steps_per_tick, run_controller)
            await self.broadcast(self.state.frame(self.decimate))
            next_tick += period
            delay = next_tick - time.perf_counter()
            if delay > 0:
                await asyncio.sleep(delay)
            else:
                next_tick = time.perf_counter()
                await asyncio.sleep(0)

    def stop(self):
        self._stop.set()

    async def serve_forever(self, host: str, port: int):
        import websockets.asyncio.server

        async with websockets.asyncio.server.serve(
                self.handler, host, port,
                process_request=self.process_request):
            log.info("session server on %s:%d (tick %.0f Hz)",
                     host, port, self.tick_hz)
            loop_task = asyncio.create_task(self.run_loop())
            try:
                await self._stop.wait()
            finally:
                loop_task.cancel()


def serve(checkpoint, port: int, host: str = "127.0.0.1", task: str = "straight",
          bench: Workbench = None, tick_hz: float = 30.0,
          controller_every: int = 1, decimate: int = 32, ui_dir=None,
          noise: NoiseSpec = None) -> None:
    """Blocking entry point used by the CLI."""
    checkpoint = Path(checkpoint)
    controllers = load_checkpoint_controllers(checkpoint)
    if bench is None:
        bench = Workbench()
    state = SessionState(bench=bench, controllers=controllers,
                         task=TaskSpec.by_name(task),
                         controller_name="forest" if "forest" in controllers else "expert")
    if noise is not None:
        state.noise = noise
    server = SessionServer(state, tick_hz=tick_hz,
                           controller_every=controller_every,
                           decimate=decimate, ui_dir=ui_dir)
    asyncio.run(server.serve_forever(host, port))
