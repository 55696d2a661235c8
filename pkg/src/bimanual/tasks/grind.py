"""Grinding: carry a pre-grasped tool over three plates in color order while
the acting arm cranks the tool; crank rotation over the right plate fills it."""

from __future__ import annotations

import numpy as np

from .. import world as W
from .base import Task, TaskCompleteError, TaskSpec, jitter

PLATE_R = 0.04
PLATE_MIN_DIST = 0.1
GRINDER_R = 0.012
CRANK_OFF = 0.018
FILL_PER_CYCLE = 1.0      # plate fill per full 2*pi of crank rotation
OVER_FRAC = 0.8           # grinder counts as "over" within this plate fraction

# plates are yellow, pink, blue in required order
PALETTES = {
    "in_dist": {"plate": (0.9, 0.7, 0.5), "grinder": 0.85,
                "order": (1.0, 0.66, 0.33)},
    "ood_easy": {"plate": (0.5, 0.9, 0.7), "grinder": 0.85,
                 "order": (1.0, 0.66, 0.33)},
    "ood_hard": {"plate": (0.35, 1.0, 0.6), "grinder": 0.6,
                 "order": (0.85, 0.5, 0.22)},
}
COLORS = ("yellow", "pink", "blue")


class GrindTask(Task):
    task_id = "grind"

    def reset(self, seed: int) -> W.WorldState:
        rng = np.random.default_rng(seed)
        s = self._base_state()
        pal = PALETTES[self.spec.variant]
        radius = jitter(rng, PLATE_R, self.spec)

        centers: list[np.ndarray] = []
        min_dist = PLATE_MIN_DIST
        while len(centers) < 3:
            p = rng.uniform(0.12, 0.36, size=2)
            if all(np.linalg.norm(p - q) >= min_dist for q in centers):
                centers.append(p)
            else:
                min_dist *= 0.999  # degrade gracefully on unlucky draws
        for i, c in enumerate(centers):
            s.bodies.append(W.RigidBody(
                i, [c[0], c[1], 0.0], "disc", (radius,),
                intensity=pal["plate"][i], meta_intensity=pal["order"][i],
                graspable=False,
                tags={"role": "plate", "order": i, "color": COLORS[i]}))
        grinder = W.RigidBody(
            10, [0.0, 0.0, 0.0], "disc", (GRINDER_R,), intensity=pal["grinder"],
            anchors=[[0.0, 0.0], [0.0, CRANK_OFF]], tags={"role": "grinder"})
        s.bodies.append(grinder)

        fill = [0.0, 0.0, 0.0]
        if self.spec.random_progress:
            done = int(rng.integers(0, 3))
            fill = [1.0 if i < done else 0.0 for i in range(3)]
            fill[done] = float(rng.uniform(0.0, 0.9))
        s.meta.update({"fill": fill, "plate_radius": radius})

        current = next((i for i, f in enumerate(fill) if f < 1.0), 0)
        if self.spec.random_progress:
            start = centers[current] + rng.uniform(-0.1, 0.1, size=2) * 0.0
            start = centers[current]
        else:
            start = rng.uniform(0.12, 0.36, size=2)
        grinder.pose[:2] = start
        s.arms[W.STABILIZING].pos = start.copy()
        s = W.grasp(s, W.STABILIZING, start)  # tool begins pre-grasped
        s.arms[W.ACTING].pos = start + np.array([0.0, CRANK_OFF])
        if self.spec.random_progress:
            s = W.grasp(s, W.ACTING, s.arms[W.ACTING].pos)
        self._decorate(s)
        return s

    # -- helpers ---------------------------------------------------------

    def current_plate(self, state: W.WorldState) -> int:
        for i, f in enumerate(state.meta["fill"]):
            if f < 1.0:
                return i
        return 3

    def _holds_anchor(self, state: W.WorldState, arm: int, anchor: int) -> bool:
        hold = state.arms[arm].hold
        con = None if hold is None else state.constraint(hold)
        return con is not None and con.point == ("body", 10, anchor)

    # -- Task API ---------------------------------------------------------

    def success(self, state: W.WorldState) -> float:
        return float(np.mean([min(f, 1.0) for f in state.meta["fill"]]))

    def phi(self, state: W.WorldState) -> np.ndarray:
        i = self.current_plate(state)
        if i >= 3:
            raise TaskCompleteError("all plates ground")
        return state.body(i).pose[:2].copy()

    def grasp_point(self, state: W.WorldState) -> None:
        return None  # acting pre-grasp comes from the fixed crank offset rule

    def acting_pregrasp_rule(self, state: W.WorldState) -> np.ndarray:
        return state.arms[W.STABILIZING].pos + np.array([0.0, CRANK_OFF])

    def stabilize_carry(self) -> bool:
        return True

    def _post_step(self, prev: W.WorldState, new: W.WorldState,
                   action: W.BimanualAction) -> None:
        i = self.current_plate(new)
        if i >= 3:
            return
        if not (self._holds_anchor(new, W.STABILIZING, 0)
                and self._holds_anchor(new, W.ACTING, 1)):
            return
        plate = new.body(i)
        over = np.linalg.norm(new.body(10).pose[:2] - plate.pose[:2]) \
            <= OVER_FRAC * new.meta["plate_radius"]
        if over:
            dth = abs(action.acting.clamped().dth)
            new.meta["fill"][i] = min(
                1.0, new.meta["fill"][i] + FILL_PER_CYCLE * dth / (2 * np.pi))

    def _decorate(self, state: W.WorldState) -> None:
        pal = PALETTES[self.spec.variant]
        for i in range(3):
            state.body(i).meta_intensity = (
                0.0 if state.meta["fill"][i] >= 1.0 else pal["order"][i])
