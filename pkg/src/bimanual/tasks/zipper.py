"""Zipper task: drag a slider along a 20-particle chain while the other arm
pins the chain just behind the advancing frontier."""

from __future__ import annotations

import numpy as np

from .. import world as W
from .base import Task, TaskCompleteError, TaskSpec, jitter

CHAIN_LEN = 0.4
N_PARTICLES = 20
DELTA_PIN = 0.01          # hold target sits this far behind the frontier
SLIDER_R = 0.008
# A hold supports frontier progress out to this arc distance; beyond it
# efficiency decays linearly over D_SOFT (an unpinned jacket still zips a
# little before bunching up).
D_SUPPORT = 0.04
D_SOFT = 0.18
DRAG_TOL = 2e-3

PALETTES = {
    "in_dist": {"chain": 1.0, "slider": 0.9, "stiffness": 0.6},
    "ood_easy": {"chain": 0.8, "slider": 1.0, "stiffness": 0.6},
    "ood_hard": {"chain": 0.55, "slider": 0.7, "stiffness": 0.95},
}


class ZipTask(Task):
    task_id = "zip"

    def reset(self, seed: int) -> W.WorldState:
        rng = np.random.default_rng(seed)
        s = self._base_state()
        pal = PALETTES[self.spec.variant]

        length = jitter(rng, CHAIN_LEN, self.spec)
        base = np.array([rng.uniform(0.12, 0.36), rng.uniform(0.03, 0.07)])
        ang = np.deg2rad(rng.uniform(75.0, 105.0))
        top = base + length * np.array([np.cos(ang), np.sin(ang)])
        top = np.clip(top, 0.02, 0.46)
        chain = W.make_straight_chain(0, base, top, N_PARTICLES,
                                      stiffness=pal["stiffness"],
                                      intensity=pal["chain"],
                                      meta_intensity=0.9)
        s.chains.append(chain)
        total = float(chain.arc_lengths()[-1])

        slider = W.RigidBody(0, [base[0], base[1], 0.0], "disc", (SLIDER_R,),
                             intensity=pal["slider"])
        s.bodies.append(slider)

        if self.spec.occlusion > 0:
            span = self.spec.occlusion * total
            start = rng.uniform(0.0, total - span)
            chain.tags["occlude_arc_range"] = (start, start + span)

        zipped = 0.0
        if self.spec.random_progress:
            zipped = float(rng.uniform(0.0, 0.8 * total))
        s.meta.update({
            "zipped_s": zipped,
            "total_s": total,
            "phi_arc": max(0.0, zipped - DELTA_PIN),
        })
        slider.pose[:2] = chain.point_at_arc(zipped)

        cid = s.add_constraint(W.Constraint(
            -1, "distance", ("body", 0, 0),
            other=("chain", 0, chain.index_at_arc(zipped)), length=0.0))
        s.meta["frontier_cid"] = cid

        s.arms[W.STABILIZING].pos = np.array([rng.uniform(0.04, 0.1),
                                              rng.uniform(0.3, 0.44)])
        s.arms[W.ACTING].pos = slider.pose[:2].copy()
        if self.spec.random_progress:
            # mid-task resets look like deployment: frontier pinned, slider held
            s.arms[W.STABILIZING].pos = chain.point_at_arc(s.meta["phi_arc"]).copy()
            s = W.grasp(s, W.STABILIZING, s.arms[W.STABILIZING].pos)
            s = W.grasp(s, W.ACTING, s.arms[W.ACTING].pos)
        self._decorate(s)
        return s

    def success(self, state: W.WorldState) -> float:
        return float(np.clip(state.meta["zipped_s"] / state.meta["total_s"], 0.0, 1.0))

    def phi(self, state: W.WorldState) -> np.ndarray:
        if self.is_complete(state):
            raise TaskCompleteError("zip finished")
        return state.chain(0).point_at_arc(state.meta["phi_arc"])

    def grasp_point(self, state: W.WorldState) -> np.ndarray:
        return state.body(0).pose[:2].copy()

    def _holding_slider(self, state: W.WorldState) -> bool:
        hold = state.arms[W.ACTING].hold
        con = None if hold is None else state.constraint(hold)
        return con is not None and con.point[0] == "body" and con.point[1] == 0

    def _post_step(self, prev: W.WorldState, new: W.WorldState,
                   action: W.BimanualAction) -> None:
        meta = new.meta
        chain = new.chain(0)
        total = meta["total_s"]
        if self._holding_slider(new) and meta["zipped_s"] < total:
            disp = new.arms[W.ACTING].pos - prev.arms[W.ACTING].pos
            s_now = meta["zipped_s"]
            i = chain.index_at_arc(min(s_now + 1e-6, total))
            i = min(i, chain.n - 2)
            tangent = chain.points[i + 1] - chain.points[i]
            norm = np.linalg.norm(tangent)
            if norm > 1e-9:
                tangent = tangent / norm
                along = float(disp @ tangent)
                if along > 0:
                    hold_arc = self.held_arc_on_chain(new, 0)
                    if hold_arc is None:
                        eff = max(0.0, 1.0 - s_now / D_SOFT)
                    else:
                        gap = abs(s_now - hold_arc)
                        eff = 1.0 if gap <= D_SUPPORT else \
                            max(0.0, 1.0 - (gap - D_SUPPORT) / D_SOFT)
                    meta["zipped_s"] = min(total, s_now + along * eff)
        # re-point the frontier tie to the particle nearest the frontier
        con = new.constraint(meta["frontier_cid"])
        if con is not None:
            con.other = ("chain", 0, chain.index_at_arc(meta["zipped_s"]))
        # the advancing frontier periodically refreshes the hold target
        if meta["zipped_s"] - DELTA_PIN - meta["phi_arc"] > self.spec.d_refresh:
            meta["phi_arc"] = meta["zipped_s"] - DELTA_PIN
        # chain translation without frontier progress = dragging
        centroid_shift = np.linalg.norm(
            new.chain(0).points.mean(axis=0) - prev.chain(0).points.mean(axis=0))
        if centroid_shift > DRAG_TOL:
            self._record_event(new, "drag", "chain translated under pull")

    def _decorate(self, state: W.WorldState) -> None:
        state.chain(0).tags["meta_arc_range"] = (0.0, state.meta["zipped_s"])
