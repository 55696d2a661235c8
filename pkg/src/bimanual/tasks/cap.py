"""Marker capping: press each cap onto its marker, bottom marker first.

The press only takes while the marker body is held; an unheld marker slides
away under the push and the cap never seats.
"""

from __future__ import annotations

import numpy as np

from .. import world as W
from .base import Task, TaskCompleteError, TaskSpec, jitter

MARKER_W, MARKER_H = 0.012, 0.036
CAP_R = 0.008
CAP_TOL = 0.008
Y_BANDS = ((0.08, 0.14), (0.21, 0.27), (0.34, 0.40))
ORDER_META = (1.0, 0.66, 0.33)   # channel-3 encoding, bottom first

PALETTES = {
    "in_dist": {"marker": (0.85, 0.70, 0.55), "cap": 0.95,
                "order": (1.0, 0.66, 0.33)},
    "ood_easy": {"marker": (0.55, 0.85, 0.70), "cap": 0.95,
                 "order": (1.0, 0.66, 0.33)},
    "ood_hard": {"marker": (0.40, 0.95, 0.62), "cap": 0.75,
                 "order": (0.85, 0.5, 0.25)},
}


class CapTask(Task):
    task_id = "cap"

    def reset(self, seed: int) -> W.WorldState:
        rng = np.random.default_rng(seed)
        s = self._base_state()
        pal = PALETTES[self.spec.variant]
        w = jitter(rng, MARKER_W, self.spec)
        h = jitter(rng, MARKER_H, self.spec)
        for i, band in enumerate(Y_BANDS):
            pose = [rng.uniform(0.16, 0.40), rng.uniform(*band), 0.0]
            s.bodies.append(W.RigidBody(
                i, pose, "rect", (w, h), intensity=pal["marker"][i],
                meta_intensity=pal["order"][i], tags={"role": "marker", "order": i}))
        cap_r = jitter(rng, CAP_R, self.spec)
        for i in range(3):
            pose = [rng.uniform(0.035, 0.075), rng.uniform(*Y_BANDS[i]), 0.0]
            s.bodies.append(W.RigidBody(
                10 + i, pose, "disc", (cap_r,), intensity=pal["cap"],
                tags={"role": "cap", "order": i}))
        s.meta.update({"capped": [False, False, False], "marker_h": h})
        s.arms[W.STABILIZING].pos = np.array([rng.uniform(0.04, 0.1),
                                              rng.uniform(0.42, 0.46)])
        s.arms[W.ACTING].pos = np.array([rng.uniform(0.40, 0.46),
                                         rng.uniform(0.42, 0.46)])
        if self.spec.random_progress:
            done = int(rng.integers(0, 3))
            for i in range(done):
                self._seat_cap(s, i)
            s.meta["capped"] = [i < done for i in range(3)]
            marker = s.body(done)
            s.arms[W.STABILIZING].pos = marker.pose[:2].copy()
            s = W.grasp(s, W.STABILIZING, marker.pose[:2])
            cap = s.body(10 + done)
            s.arms[W.ACTING].pos = cap.pose[:2].copy()
            s = W.grasp(s, W.ACTING, cap.pose[:2])
        self._decorate(s)
        return s

    # -- helpers ---------------------------------------------------------

    def current_index(self, state: W.WorldState) -> int:
        capped = state.meta["capped"]
        for i in range(3):
            if not capped[i]:
                return i
        return 3

    def mouth_point(self, state: W.WorldState, i: int) -> np.ndarray:
        marker = state.body(i)
        return marker.pose[:2] + np.array([0.0, state.meta["marker_h"] / 2])

    def _seat_cap(self, state: W.WorldState, i: int) -> None:
        cap = state.body(10 + i)
        mouth = self.mouth_point(state, i)
        cap.pose[:2] = mouth
        cap.graspable = False
        state.add_constraint(W.Constraint(-1, "pin", ("body", 10 + i, 0),
                                          anchor=mouth.copy()))
        state.body(i).meta_intensity = 0.0

    def _marker_held(self, state: W.WorldState, i: int) -> bool:
        hold = state.arms[W.STABILIZING].hold
        con = None if hold is None else state.constraint(hold)
        return con is not None and con.point[:2] == ("body", i)

    def _acting_holds_cap(self, state: W.WorldState, i: int) -> bool:
        hold = state.arms[W.ACTING].hold
        con = None if hold is None else state.constraint(hold)
        return con is not None and con.point[:2] == ("body", 10 + i)

    # -- Task API ---------------------------------------------------------

    def success(self, state: W.WorldState) -> float:
        return sum(state.meta["capped"]) / 3.0

    def phi(self, state: W.WorldState) -> np.ndarray:
        i = self.current_index(state)
        if i >= 3:
            raise TaskCompleteError("all markers capped")
        return state.body(i).pose[:2].copy()

    def grasp_point(self, state: W.WorldState) -> np.ndarray | None:
        i = self.current_index(state)
        if i >= 3:
            return None
        return state.body(10 + i).pose[:2].copy()

    def _post_step(self, prev: W.WorldState, new: W.WorldState,
                   action: W.BimanualAction) -> None:
        i = self.current_index(new)
        if i >= 3:
            return
        if not self._acting_holds_cap(new, i):
            return
        cap = new.body(10 + i)
        gap = np.linalg.norm(cap.pose[:2] - self.mouth_point(new, i))
        if gap >= CAP_TOL:
            return
        if self._marker_held(new, i):
            new.meta["capped"][i] = True
            self._seat_cap(new, i)
            W._detach_hold(new, W.ACTING)
        else:
            push = new.arms[W.ACTING].pos - prev.arms[W.ACTING].pos
            new.body(i).pose[:2] += 0.9 * push + np.array([0.0, 2e-3])
            self._record_event(new, "slide", f"marker {i} pushed while unheld")

    def _decorate(self, state: W.WorldState) -> None:
        pal = PALETTES[self.spec.variant]
        for i in range(3):
            state.body(i).meta_intensity = (
                0.0 if state.meta["capped"][i] else pal["order"][i])
