"""Shared task scaffolding: specs, variants, thresholds, and the Task API.

A Task instance is stateless; all episode progress lives in WorldState.meta
so states remain value-semantic and replayable.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .. import world as W

# Workspace: 0.48 m square -> 5 mm cells on the 96-grid.
BOUNDS = ((0.0, 0.0), (0.48, 0.48))

# Restabilization geometry, in meters (3 / 5 raster cells).
EPS_RESTAB = 0.015
D_MAX = 0.015
D_REFRESH = 0.025

TASK_IDS = ("grind", "zip", "cap", "cut")
VARIANTS = ("in_dist", "ood_easy", "ood_hard")

# Geometry jitter per variant (relative size perturbation).
GEO_JITTER = {"in_dist": 0.0, "ood_easy": 0.15, "ood_hard": 0.35}


class TaskError(Exception):
    pass


class TaskCompleteError(TaskError):
    """oracle_phi has no target once the task is complete."""


@dataclass(frozen=True)
class TaskSpec:
    task_id: str
    variant: str = "in_dist"
    occlusion: float = 0.0          # zip only: chain fraction hidden in raster
    random_progress: bool = False   # reset mid-task (dataset generation)
    d_max: float = D_MAX
    d_refresh: float = D_REFRESH

    def __post_init__(self):
        if self.task_id not in TASK_IDS:
            raise TaskError(f"unknown task {self.task_id!r}")
        if self.variant not in VARIANTS:
            raise TaskError(f"unknown variant {self.variant!r}")

    def with_variant(self, variant: str) -> "TaskSpec":
        return replace(self, variant=variant)


@dataclass(frozen=True)
class DegradeEvent:
    kind: str        # "drag" | "twist" | "slide"
    detail: str = ""


def jitter(rng: np.random.Generator, base: float, spec: TaskSpec) -> float:
    f = GEO_JITTER[spec.variant]
    return base * (1.0 + rng.uniform(-f, f)) if f else base


class Task:
    """Per-task rules: reset, stepping side effects, metric, oracle target."""

    task_id: str = ""

    def __init__(self, spec: TaskSpec):
        assert spec.task_id == self.task_id
        self.spec = spec

    # -- mandatory interface -------------------------------------------

    def reset(self, seed: int) -> W.WorldState:
        raise NotImplementedError

    def success(self, state: W.WorldState) -> float:
        raise NotImplementedError

    def phi(self, state: W.WorldState) -> np.ndarray:
        """Current ground-truth stabilization target (world point)."""
        raise NotImplementedError

    def degrade(self, state: W.WorldState) -> DegradeEvent | None:
        ev = state.meta.get("last_event")
        return DegradeEvent(**ev) if ev else None

    def step(self, state: W.WorldState, action: W.BimanualAction,
             dt: float = W.DT) -> W.WorldState:
        prev = state
        new = W.step_world(state, action, dt)
        new.meta["last_event"] = None
        self._post_step(prev, new, action)
        self._decorate(new)
        return new

    def is_complete(self, state: W.WorldState) -> bool:
        return self.success(state) >= 1.0

    # -- optional hooks -------------------------------------------------

    def _post_step(self, prev: W.WorldState, new: W.WorldState,
                   action: W.BimanualAction) -> None:
        pass

    def _decorate(self, state: W.WorldState) -> None:
        """Refresh progress-dependent raster decorations."""

    def grasp_point(self, state: W.WorldState) -> np.ndarray | None:
        """Where the acting arm should grasp its tool; None = task rule."""
        return None

    def acting_pregrasp_rule(self, state: W.WorldState) -> np.ndarray | None:
        """Fallback pre-grasp target when no grasp model applies."""
        return self.grasp_point(state)

    def stabilize_carry(self) -> bool:
        """True when restabilizing moves a held tool instead of regrasping."""
        return False

    def _base_state(self) -> W.WorldState:
        s = W.WorldState(bounds=np.asarray(BOUNDS))
        s.meta["task"] = self.task_id
        s.meta["variant"] = self.spec.variant
        s.meta["event_counts"] = {}
        s.meta["last_event"] = None
        return s

    def _record_event(self, state: W.WorldState, kind: str, detail: str = "") -> None:
        state.meta["last_event"] = {"kind": kind, "detail": detail}
        counts = state.meta.setdefault("event_counts", {})
        counts[kind] = counts.get(kind, 0) + 1

    def held_arc_on_chain(self, state: W.WorldState, chain_id: int,
                          arm_id: int = W.STABILIZING) -> float | None:
        """Rest arc length of the given arm's hold on a chain, if any."""
        hold = state.arms[arm_id].hold
        con = None if hold is None else state.constraint(hold)
        if con is None or con.point[0] != "chain" or con.point[1] != chain_id:
            return None
        return float(state.chain(chain_id).arc_lengths()[con.point[2]])
