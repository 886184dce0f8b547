"""Mass-spring cloth simulation with driven corners.

The cloth is a regular grid of unit-mass vertices connected by structural,
shear and bend springs.  The four corners are kinematically driven: the two
robot-held corners track the controller's target and the two human-held
corners track the human hand targets, each clamped to a speed limit.  Free
vertices integrate with semi-implicit Euler plus a strain-limiting
projection pass per substep, which keeps the cloth inextensible enough to
stay stable at large time steps.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels

# rest dimensions of the cloth and its corner layout, in meters:
# corner 0 at (0,0,0), corner 1 at (WIDTH,0,0) are robot-held;
# corner 2 at (0,HEIGHT,0), corner 3 at (WIDTH,HEIGHT,0) are human-held.
WIDTH_M = 0.3
HEIGHT_M = 0.35


class DivergenceError(RuntimeError):
    """Simulation left the sane region (positions beyond 10 m)."""


# Gauss-Seidel sweep budget for the strain limiter; enough for sub-0.1%
# residual overstretch even during the initial free-fall engagement.
# Sweeps stop early once no spring is more than STRAIN_TOL_M (a micron)
# over its limit, which is far below anything the observation can see.
STRAIN_SWEEPS = 40
STRAIN_TOL_M = 1e-6


@dataclass(frozen=True)
class SimParams:
    dt: float = 0.01          # s
    substeps: int = 4
    k_structural: float = 500.0   # N/m
    k_shear: float = 250.0
    k_bend: float = 50.0
    damping: float = 2.0      # 1/s velocity decay
    gravity: tuple = (0.0, 0.0, -9.8)
    max_stretch: float = 1.1
    robot_speed_limit: float = 0.1   # m/s
    human_speed_limit: float = 0.1

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")
        if self.robot_speed_limit <= 0 or self.human_speed_limit <= 0:
            raise ValueError("speed limits must be positive")
        if self.max_stretch < 1.0:
            raise ValueError("max_stretch must be >= 1")


@dataclass(frozen=True)
class ClothMesh:
    nx: int
    ny: int
    width_m: float
    height_m: float
    spring_i: np.ndarray      # (s,) int64 endpoint indices, sorted by color
    spring_j: np.ndarray
    spring_rest: np.ndarray   # (s,) float64 rest lengths
    spring_kind: np.ndarray   # (s,) 0=structural, 1=shear, 2=bend
    corners: tuple            # vertex indices of corners 0..3
    triangles: np.ndarray = field(repr=False, default=None)  # (m,3) int32
    # strain-limiter color groups: springs in [starts[g], starts[g+1]) share
    # no vertex, so one Gauss-Seidel group projects in parallel exactly
    strain_groups: np.ndarray = field(repr=False, default=None)

    @property
    def n_vertices(self) -> int:
        return self.nx * self.ny

    def spring_stiffness(self, params: SimParams) -> np.ndarray:
        table = np.array([params.k_structural, params.k_shear, params.k_bend])
        return table[self.spring_kind]


@dataclass
class ClothState:
    positions: np.ndarray     # (n,3) float64, meters
    velocities: np.ndarray    # (n,3) float64, m/s
    time: float = 0.0

    def copy(self) -> "ClothState":
        return ClothState(self.positions.copy(), self.velocities.copy(), self.time)

    def kinetic_energy(self) -> float:
        v = self.velocities
        return 0.5 * float(np.sum(v * v))


def _grid_index(nx: int, ix: int, iy: int) -> int:
    return iy * nx + ix


def _color_springs(n_vertices: int, si: np.ndarray, sj: np.ndarray) -> np.ndarray:
    """Greedy coloring: springs sharing a vertex get different colors."""
    vertex_colors = [set() for _ in range(n_vertices)]
    colors = np.zeros(si.shape[0], dtype=np.int64)
    for s in range(si.shape[0]):
        used = vertex_colors[si[s]] | vertex_colors[sj[s]]
        c = 0
        while c in used:
            c += 1
        colors[s] = c
        vertex_colors[si[s]].add(c)
        vertex_colors[sj[s]].add(c)
    return colors


def make_cloth(nx: int, ny: int) -> tuple[ClothMesh, ClothState]:
    """Flat cloth at rest in the z=0 plane with the canonical corner layout."""
    if nx < 2 or ny < 2:
        raise ValueError(f"grid must be at least 2x2, got {nx}x{ny}")
    xs = np.linspace(0.0, WIDTH_M, nx)
    ys = np.linspace(0.0, HEIGHT_M, ny)
    pos = np.zeros((nx * ny, 3))
    for iy in range(ny):
        for ix in range(nx):
            pos[_grid_index(nx, ix, iy), 0] = xs[ix]
            pos[_grid_index(nx, ix, iy), 1] = ys[iy]

    si, sj, kind = [], [], []

    def add(a, b, t):
        si.append(a)
        sj.append(b)
        kind.append(t)

    for iy in range(ny):
        for ix in range(nx):
            v = _grid_index(nx, ix, iy)
            if ix + 1 < nx:
                add(v, _grid_index(nx, ix + 1, iy), 0)
            if iy + 1 < ny:
                add(v, _grid_index(nx, ix, iy + 1), 0)
            if ix + 1 < nx and iy + 1 < ny:
                add(v, _grid_index(nx, ix + 1, iy + 1), 1)
                add(_grid_index(nx, ix + 1, iy), _grid_index(nx, ix, iy + 1), 1)
            if ix + 2 < nx:
                add(v, _grid_index(nx, ix + 2, iy), 2)
            if iy + 2 < ny:
                add(v, _grid_index(nx, ix, iy + 2), 2)

    si = np.array(si, dtype=np.int64)
    sj = np.array(sj, dtype=np.int64)
    kind = np.array(kind, dtype=np.int64)
    colors = _color_springs(nx * ny, si, sj)
    order = np.argsort(colors, kind="stable")
    si, sj, kind, colors = si[order], sj[order], kind[order], colors[order]
    n_colors = int(colors.max()) + 1
    starts = np.searchsorted(colors, np.arange(n_colors + 1)).astype(np.int64)
    d = pos[sj] - pos[si]
    rest = np.sqrt(np.sum(d * d, axis=1))

    tris = []
    for iy in range(ny - 1):
        for ix in range(nx - 1):
            a = _grid_index(nx, ix, iy)
            b = _grid_index(nx, ix + 1, iy)
            c = _grid_index(nx, ix, iy + 1)
            e = _grid_index(nx, ix + 1, iy + 1)
            tris.append((a, b, c))
            tris.append((b, e, c))
    triangles = np.array(tris, dtype=np.int32)

    corners = (
        _grid_index(nx, 0, 0),
        _grid_index(nx, nx - 1, 0),
        _grid_index(nx, 0, ny - 1),
        _grid_index(nx, nx - 1, ny - 1),
    )
    mesh = ClothMesh(nx, ny, WIDTH_M, HEIGHT_M, si, sj, rest, kind, corners,
                     triangles, starts)
    state = ClothState(pos, np.zeros_like(pos), 0.0)
    return mesh, state


def corner_positions(state: ClothState, mesh: ClothMesh):
    """Current world positions of corners (v0, v1) robot, (v2, v3) human."""
    c = mesh.corners
    p = state.positions
    return p[c[0]].copy(), p[c[1]].copy(), p[c[2]].copy(), p[c[3]].copy()


def _clamp_toward(current: np.ndarray, target: np.ndarray, max_dist: float) -> np.ndarray:
    d = target - current
    dist = float(np.sqrt(np.sum(d * d)))
    if dist <= max_dist or dist == 0.0:
        return target.copy()
    return current + d * (max_dist / dist)


def step(state: ClothState, mesh: ClothMesh, params: SimParams,
         robot_target: np.ndarray, human_target) -> ClothState:
    """Advance the cloth by one dt under spring + gravity + damping forces.

    robot_target: 6-vector of desired corner-0/corner-1 positions.
    human_target: pair of 3-vectors for corners 2 and 3.
    Corner motion is clamped to speed_limit * dt per corner, so the reached
    positions and the requested targets may legitimately differ.
    """
    robot_target = np.asarray(robot_target, dtype=np.float64).reshape(6)
    h2 = np.asarray(human_target[0], dtype=np.float64).reshape(3)
    h3 = np.asarray(human_target[1], dtype=np.float64).reshape(3)
    if not (np.isfinite(state.positions).all() and np.isfinite(state.velocities).all()):
        raise ValueError("non-finite cloth state")
    if not (np.isfinite(robot_target).all() and np.isfinite(h2).all() and np.isfinite(h3).all()):
        raise ValueError("non-finite corner target")

    pos = state.positions.copy()
    vel = state.velocities.copy()
    cidx = np.array(mesh.corners, dtype=np.int64)
    start = pos[cidx].copy()
    goal = np.empty((4, 3))
    goal[0] = _clamp_toward(start[0], robot_target[:3], params.robot_speed_limit * params.dt)
    goal[1] = _clamp_toward(start[1], robot_target[3:], params.robot_speed_limit * params.dt)
    goal[2] = _clamp_toward(start[2], h2, params.human_speed_limit * params.dt)
    goal[3] = _clamp_toward(start[3], h3, params.human_speed_limit * params.dt)
    corner_vel = (goal - start) / params.dt

    free = np.ones(mesh.n_vertices, dtype=np.uint8)
    free[cidx] = 0
    stiff = mesh.spring_stiffness(params)
    gravity = np.asarray(params.gravity, dtype=np.float64)
    h = params.dt / params.substeps

    for s in range(params.substeps):
        forces = kernels.spring_forces(pos, mesh.spring_i, mesh.spring_j,
                                       mesh.spring_rest, stiff)
        acc = forces + gravity - params.damping * vel
        vel = vel + h * acc
        vel[cidx] = corner_vel
        pre = pos.copy()
        pos = pos + h * vel
        # corners interpolate exactly so the last substep lands on the goal
        frac = (s + 1) / params.substeps
        pos[cidx] = start + (goal - start) * frac
        kernels.strain_limit(pos, mesh.spring_i, mesh.spring_j, mesh.spring_rest,
                             params.max_stretch, free, mesh.strain_groups,
                             STRAIN_SWEEPS, STRAIN_TOL_M)
        vel = (pos - pre) / h
        vel[cidx] = corner_vel

    if np.max(np.abs(pos)) > 10.0:
        raise DivergenceError(
            f"cloth diverged (|position| > 10 m) with dt={params.dt}, "
            f"k_structural={params.k_structural}; lower dt or stiffness"
        )
    return ClothState(pos, vel, state.time + params.dt)


def write_trajectory(path, records) -> None:
    """Write per-step records of (time, corners 4x3, robot target 6) as CSV."""
    header = ["time"]
    for c in range(4):
        header += [f"v{c}x", f"v{c}y", f"v{c}z"]
    header += [f"target{i}" for i in range(6)]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for t, corners, target in records:
            vals = [t] + list(np.asarray(corners).reshape(12)) + list(np.asarray(target).reshape(6))
            fh.write(",".join(repr(float(v)) for v in vals) + "\n")
