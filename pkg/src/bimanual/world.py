"""Planar two-arm world: rigid bodies, particle chains, and hard grasp holds.

The solver is position-based: each step applies the (clamped) arm deltas and
then projects constraints for a fixed number of iterations. Holds and pins are
enforced by direct assignment, which makes them exact rather than approximate.
"""

from __future__ import annotations

import copy
import warnings
from dataclasses import dataclass, field

import numpy as np

# Solver and actuation defaults (10 Hz nominal control rate).
N_ITER = 8
TOL_PBD = 1e-6
STEP_CAP_XY = 0.01
STEP_CAP_TH = 0.1
GRASP_RADIUS = 0.015
DT = 0.1

# Arm roles are fixed per episode: index 0 stabilizes, index 1 acts.
STABILIZING = 0
ACTING = 1

GRIP_KEEP = 0
GRIP_CLOSE = 1
GRIP_OPEN = -1


class GraspMissError(Exception):
    """Raised when a grasp finds no graspable point within reach."""


class WorldError(Exception):
    """Raised on contract violations (bad refs, malformed actions)."""


@dataclass
class RigidBody:
    body_id: int
    pose: np.ndarray                 # (3,) x, y, theta
    shape: str                       # "disc" | "rect"
    size: tuple[float, ...]          # disc: (radius,); rect: (w, h)
    intensity: float = 1.0           # draw value, body channel
    meta_intensity: float = 0.0      # draw value, task-meta channel (0 = hidden)
    graspable: bool = True
    anchors: np.ndarray | None = None  # (K, 2) local grasp offsets; row 0 = origin
    tags: dict = field(default_factory=dict)

    def __post_init__(self):
        self.pose = np.asarray(self.pose, dtype=np.float64)
        if self.anchors is None:
            self.anchors = np.zeros((1, 2))
        self.anchors = np.asarray(self.anchors, dtype=np.float64)

    def anchor_world(self, k: int = 0) -> np.ndarray:
        c, s = np.cos(self.pose[2]), np.sin(self.pose[2])
        rot = np.array([[c, -s], [s, c]])
        return self.pose[:2] + rot @ self.anchors[k]


@dataclass
class Chain:
    chain_id: int
    points: np.ndarray               # (N, 2)
    rest: np.ndarray                 # (N-1,) link rest lengths
    link_active: np.ndarray | None = None  # (N-1,) bool; cut links go inactive
    stiffness: float = 1.0
    intensity: float = 1.0
    meta_intensity: float = 0.0
    graspable: bool = True
    tags: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        self.rest = np.asarray(self.rest, dtype=np.float64)
        if self.link_active is None:
            self.link_active = np.ones(len(self.rest), dtype=bool)

    @property
    def n(self) -> int:
        return len(self.points)

    def arc_lengths(self) -> np.ndarray:
        """Cumulative rest arc length at each particle (cuts do not change it)."""
        return np.concatenate([[0.0], np.cumsum(self.rest)])

    def point_at_arc(self, s: float) -> np.ndarray:
        """Interpolated world point at rest arc length ``s``."""
        arcs = self.arc_lengths()
        s = float(np.clip(s, 0.0, arcs[-1]))
        i = int(np.searchsorted(arcs, s, side="right") - 1)
        i = min(i, self.n - 2)
        span = arcs[i + 1] - arcs[i]
        t = 0.0 if span <= 0 else (s - arcs[i]) / span
        return (1 - t) * self.points[i] + t * self.points[i + 1]

    def index_at_arc(self, s: float) -> int:
        arcs = self.arc_lengths()
        return int(np.argmin(np.abs(arcs - s)))


@dataclass
class ArmState:
    pos: np.ndarray                  # (2,)
    angle: float = 0.0
    closed: bool = False
    hold: int | None = None          # constraint id of the active hold

    def __post_init__(self):
        self.pos = np.asarray(self.pos, dtype=np.float64)


# A point reference is ("chain", chain_id, particle_index) or
# ("body", body_id, anchor_index).
PointRef = tuple


@dataclass
class Constraint:
    cid: int
    kind: str                        # "distance" | "pin" | "hold"
    point: PointRef
    other: PointRef | None = None    # second endpoint for "distance"
    length: float = 0.0              # rest length for "distance"
    anchor: np.ndarray | None = None  # world anchor for "pin"
    arm: int | None = None           # holder for "hold"


@dataclass(frozen=True)
class ArmAction:
    dx: float = 0.0
    dy: float = 0.0
    dth: float = 0.0
    gripper: int = GRIP_KEEP

    def clamped(self) -> "ArmAction":
        return ArmAction(
            dx=float(np.clip(self.dx, -STEP_CAP_XY, STEP_CAP_XY)),
            dy=float(np.clip(self.dy, -STEP_CAP_XY, STEP_CAP_XY)),
            dth=float(np.clip(self.dth, -STEP_CAP_TH, STEP_CAP_TH)),
            gripper=self.gripper,
        )

    def as_vector(self) -> np.ndarray:
        return np.array([self.dx, self.dy, self.dth])


ZERO_ACTION = ArmAction()


@dataclass(frozen=True)
class BimanualAction:
    stabilizing: ArmAction = ZERO_ACTION
    acting: ArmAction = ZERO_ACTION

    def arm(self, i: int) -> ArmAction:
        return self.stabilizing if i == STABILIZING else self.acting


@dataclass
class WorldState:
    bounds: np.ndarray               # (2, 2): [[xmin, ymin], [xmax, ymax]]
    bodies: list[RigidBody] = field(default_factory=list)
    chains: list[Chain] = field(default_factory=list)
    arms: list[ArmState] = field(default_factory=list)
    constraints: list[Constraint] = field(default_factory=list)
    time: float = 0.0
    residual: float = 0.0            # max distance-constraint violation, last solve
    meta: dict = field(default_factory=dict)
    _next_cid: int = 0

    def __post_init__(self):
        self.bounds = np.asarray(self.bounds, dtype=np.float64)
        if not self.arms:
            center = self.bounds.mean(axis=0)
            self.arms = [ArmState(center.copy()), ArmState(center.copy())]
        if len(self.arms) != 2:
            raise WorldError("world requires exactly two arms")

    def copy(self) -> "WorldState":
        new = WorldState.__new__(WorldState)
        new.bounds = self.bounds
        new.bodies = [
            RigidBody(b.body_id, b.pose.copy(), b.shape, b.size, b.intensity,
                      b.meta_intensity, b.graspable, b.anchors,
                      copy.deepcopy(b.tags))
            for b in self.bodies
        ]
        new.chains = [
            Chain(c.chain_id, c.points.copy(), c.rest, c.link_active.copy(),
                  c.stiffness, c.intensity, c.meta_intensity, c.graspable,
                  copy.deepcopy(c.tags))
            for c in self.chains
        ]
        new.arms = [ArmState(a.pos.copy(), a.angle, a.closed, a.hold) for a in self.arms]
        new.constraints = [
            Constraint(c.cid, c.kind, c.point, c.other, c.length,
                       None if c.anchor is None else c.anchor.copy(), c.arm)
            for c in self.constraints
        ]
        new.time = self.time
        new.residual = self.residual
        new.meta = copy.deepcopy(self.meta)
        new._next_cid = self._next_cid
        return new

    # -- lookups ---------------------------------------------------------

    def body(self, body_id: int) -> RigidBody:
        for b in self.bodies:
            if b.body_id == body_id:
                return b
        raise WorldError(f"no body {body_id}")

    def chain(self, chain_id: int) -> Chain:
        for c in self.chains:
            if c.chain_id == chain_id:
                return c
        raise WorldError(f"no chain {chain_id}")

    def constraint(self, cid: int) -> Constraint | None:
        for c in self.constraints:
            if c.cid == cid:
                return c
        return None

    def point_pos(self, ref: PointRef) -> np.ndarray:
        kind, oid, idx = ref
        if kind == "chain":
            return self.chain(oid).points[idx].copy()
        if kind == "body":
            return self.body(oid).anchor_world(idx)
        raise WorldError(f"bad point ref {ref!r}")

    def add_constraint(self, con: Constraint) -> int:
        con.cid = self._next_cid
        self._next_cid += 1
        self.constraints.append(con)
        return con.cid

    def held_refs(self) -> dict[PointRef, int]:
        """Map from held point ref to holding arm index."""
        out: dict[PointRef, int] = {}
        for c in self.constraints:
            if c.kind == "hold":
                out[c.point] = c.arm
        return out

    def graspable_points(self) -> list[tuple[PointRef, np.ndarray]]:
        pts = []
        for c in self.chains:
            if c.graspable:
                for i in range(c.n):
                    pts.append((("chain", c.chain_id, i), c.points[i]))
        for b in self.bodies:
            if b.graspable:
                for k in range(len(b.anchors)):
                    pts.append((("body", b.body_id, k), b.anchor_world(k)))
        return pts

    def held_point_pos(self, arm_id: int) -> np.ndarray | None:
        con = None if self.arms[arm_id].hold is None else self.constraint(self.arms[arm_id].hold)
        return None if con is None else self.point_pos(con.point)


# -- solver ----------------------------------------------------------------


def _pinned_masks(state: WorldState) -> tuple[dict[int, np.ndarray], set[int]]:
    """Per-chain immovable-particle masks and the set of immovable body ids."""
    masks = {c.chain_id: np.zeros(c.n, dtype=bool) for c in state.chains}
    fixed_bodies: set[int] = set()
    for con in state.constraints:
        if con.kind in ("pin", "hold"):
            kind, oid, idx = con.point
            if kind == "chain":
                masks[oid][idx] = True
            else:
                fixed_bodies.add(oid)
    return masks, fixed_bodies


def _apply_holds_pins(state: WorldState) -> None:
    # Acting-arm holds first so the stabilizing hold is always enforced last
    # and therefore exact.
    holds = [c for c in state.constraints if c.kind == "hold"]
    holds.sort(key=lambda c: -c.arm)
    for con in holds:
        target = state.arms[con.arm].pos
        kind, oid, idx = con.point
        if kind == "chain":
            state.chain(oid).points[idx] = target.copy()
        else:
            body = state.body(oid)
            body.pose[:2] += target - body.anchor_world(idx)
    for con in state.constraints:
        if con.kind == "pin":
            kind, oid, idx = con.point
            if kind == "chain":
                state.chain(oid).points[idx] = con.anchor.copy()
            else:
                body = state.body(oid)
                body.pose[:2] += con.anchor - body.anchor_world(idx)


def _ref_weight(ref: PointRef, masks, fixed_bodies) -> float:
    kind, oid, idx = ref
    if kind == "chain":
        return 0.0 if masks[oid][idx] else 1.0
    return 0.0 if oid in fixed_bodies else 1.0


def _move_ref(state: WorldState, ref: PointRef, delta: np.ndarray) -> None:
    kind, oid, idx = ref
    if kind == "chain":
        state.chain(oid).points[idx] += delta
    else:
        state.body(oid).pose[:2] += delta


def _project_distance(state: WorldState, masks, fixed_bodies) -> None:
    for chain in state.chains:
        pts = chain.points
        mask = masks[chain.chain_id]
        k = chain.stiffness
        for i in range(chain.n - 1):
            if not chain.link_active[i]:
                continue
            w1 = 0.0 if mask[i] else 1.0
            w2 = 0.0 if mask[i + 1] else 1.0
            wsum = w1 + w2
            if wsum == 0.0:
                continue
            d = pts[i + 1] - pts[i]
            dist = float(np.hypot(d[0], d[1]))
            if dist < 1e-12 or abs(dist - chain.rest[i]) < 1e-14:
                continue
            corr = (dist - chain.rest[i]) / (dist * wsum) * d
            pts[i] += k * w1 * corr
            pts[i + 1] -= k * w2 * corr
    for con in state.constraints:
        if con.kind != "distance":
            continue
        w1 = _ref_weight(con.point, masks, fixed_bodies)
        w2 = _ref_weight(con.other, masks, fixed_bodies)
        wsum = w1 + w2
        if wsum == 0.0:
            continue
        p1 = state.point_pos(con.point)
        p2 = state.point_pos(con.other)
        d = p2 - p1
        dist = float(np.hypot(d[0], d[1]))
        if abs(dist - con.length) < 1e-14:
            continue
        if dist < 1e-12:
            if con.length == 0.0:
                continue
            d = np.array([1.0, 0.0])
            dist = 1e-12
        corr = (dist - con.length) / (dist * wsum) * d
        _move_ref(state, con.point, w1 * corr)
        _move_ref(state, con.other, -w2 * corr)


def _max_violation(state: WorldState) -> float:
    worst = 0.0
    for chain in state.chains:
        d = np.diff(chain.points, axis=0)
        lens = np.hypot(d[:, 0], d[:, 1])
        err = np.abs(lens - chain.rest)[chain.link_active]
        if err.size:
            worst = max(worst, float(err.max()))
    for con in state.constraints:
        if con.kind == "distance":
            gap = np.linalg.norm(state.point_pos(con.other) - state.point_pos(con.point))
            worst = max(worst, abs(float(gap) - con.length))
    return worst


def solve_constraints(state: WorldState, n_iter: int = N_ITER) -> None:
    """Run the projection solver in place and record the final residual."""
    masks, fixed_bodies = _pinned_masks(state)
    for _ in range(n_iter):
        _apply_holds_pins(state)
        _project_distance(state, masks, fixed_bodies)
    _apply_holds_pins(state)
    state.residual = _max_violation(state)


# -- operations --------------------------------------------------------------


def step_world(state: WorldState, action: BimanualAction, dt: float = DT) -> WorldState:
    """Advance one control step: clamp deltas, move arms, project constraints."""
    if dt <= 0:
        raise WorldError("dt must be positive")
    new = state.copy()
    new.meta.pop("grasp_miss", None)
    for i in (STABILIZING, ACTING):
        act = action.arm(i).clamped()
        arm = new.arms[i]
        arm.pos = np.clip(arm.pos + np.array([act.dx, act.dy]),
                          new.bounds[0], new.bounds[1])
        arm.angle += act.dth
        if act.gripper == GRIP_CLOSE and not arm.closed:
            try:
                _attach_hold(new, i, arm.pos)
            except GraspMissError:
                arm.closed = True
                new.meta["grasp_miss"] = i
        elif act.gripper == GRIP_OPEN:
            _detach_hold(new, i)
    solve_constraints(new)
    new.time = state.time + dt
    return new


def _attach_hold(state: WorldState, arm_id: int, world_point: np.ndarray) -> PointRef:
    taken = set(state.held_refs())
    best, best_d = None, np.inf
    for ref, pos in state.graspable_points():
        if ref in taken:
            continue
        d = float(np.linalg.norm(pos - world_point))
        if d < best_d:
            best, best_d = ref, d
    if best is None or best_d > GRASP_RADIUS:
        raise GraspMissError(f"no graspable point within {GRASP_RADIUS} m")
    arm = state.arms[arm_id]
    arm.closed = True
    cid = state.add_constraint(Constraint(-1, "hold", best, arm=arm_id))
    arm.hold = cid
    return best


def _detach_hold(state: WorldState, arm_id: int) -> None:
    arm = state.arms[arm_id]
    if arm.hold is not None:
        state.constraints = [c for c in state.constraints if c.cid != arm.hold]
        arm.hold = None
    arm.closed = False


def grasp(state: WorldState, arm_id: int, world_point) -> WorldState:
    """Close the gripper on the nearest graspable point to ``world_point``.

    Raises GraspMissError when nothing graspable is within GRASP_RADIUS.
    """
    if state.arms[arm_id].closed:
        raise WorldError("gripper already closed")
    new = state.copy()
    _attach_hold(new, arm_id, np.asarray(world_point, dtype=np.float64))
    solve_constraints(new)
    return new


def release(state: WorldState, arm_id: int) -> WorldState:
    """Drop the arm's hold and open the gripper; no-op warning if not holding."""
    new = state.copy()
    if new.arms[arm_id].hold is None and not new.arms[arm_id].closed:
        warnings.warn("release called while not holding", stacklevel=2)
        return new
    _detach_hold(new, arm_id)
    return new


def chain_energy(chain: Chain) -> float:
    """Quadratic stretch energy of active links; decreases under relaxation."""
    d = np.diff(chain.points, axis=0)
    lens = np.hypot(d[:, 0], d[:, 1])
    err = (lens - chain.rest)[chain.link_active]
    return float(np.sum(err ** 2))


def make_straight_chain(chain_id: int, start, end, n: int, **kw) -> Chain:
    start = np.asarray(start, dtype=np.float64)
    end = np.asarray(end, dtype=np.float64)
    t = np.linspace(0.0, 1.0, n)[:, None]
    pts = start * (1 - t) + end * t
    seg = np.linalg.norm(end - start) / (n - 1)
    return Chain(chain_id, pts, np.full(n - 1, seg), **kw)
