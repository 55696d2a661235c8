"""Rod cutting: three cut lines crossed in order from the tip inward.

A cut made while the rod is held within d_max (rest arc) of the line is
clean; otherwise the rod twists and that piece's credit is forfeited.
"""

from __future__ import annotations

import numpy as np

from .. import world as W
from .base import Task, TaskCompleteError, TaskSpec, jitter

ROD_LEN = 0.08
N_PARTICLES = 17
CUT_TOL = 0.008
DELTA_HOLD = 0.0075       # hold target offset past the cut, on the kept side
NUDGE = 0.01              # severed piece shifts sideways for a visible gap

PALETTES = {
    "in_dist": {"rod": 0.8, "knife": 1.0, "ticks": (1.0, 0.66, 0.33)},
    "ood_easy": {"rod": 1.0, "knife": 0.8, "ticks": (1.0, 0.66, 0.33)},
    "ood_hard": {"rod": 0.5, "knife": 0.65, "ticks": (0.8, 0.5, 0.22)},
}


class CutTask(Task):
    task_id = "cut"

    def reset(self, seed: int) -> W.WorldState:
        rng = np.random.default_rng(seed)
        s = self._base_state()
        pal = PALETTES[self.spec.variant]

        length = jitter(rng, ROD_LEN, self.spec)
        center = np.array([rng.uniform(0.16, 0.32), rng.uniform(0.16, 0.32)])
        ang = np.deg2rad(rng.uniform(-25.0, 25.0))
        axis = np.array([np.cos(ang), np.sin(ang)])
        rod = W.make_straight_chain(
            0, center - axis * length / 2, center + axis * length / 2,
            N_PARTICLES, intensity=pal["rod"], meta_intensity=1.0)
        s.chains.append(rod)

        pieces = 0.02 * (1.0 + rng.uniform(-0.08, 0.08, size=4))
        pieces *= length / pieces.sum()
        cut_arcs = np.cumsum(pieces)[:3]
        s.meta.update({
            "cut_arcs": [float(a) for a in cut_arcs],
            "cuts": [None, None, None],   # None | "clean" | "unclean"
        })
        rng_knife = np.array([rng.uniform(0.40, 0.46), rng.uniform(0.10, 0.38)])
        s.bodies.append(W.RigidBody(0, [rng_knife[0], rng_knife[1], 0.0],
                                    "disc", (0.006,), intensity=pal["knife"],
                                    tags={"role": "knife"}))
        s.arms[W.STABILIZING].pos = np.array([rng.uniform(0.04, 0.10),
                                              rng.uniform(0.10, 0.38)])
        s.arms[W.ACTING].pos = rng_knife.copy()
        if self.spec.random_progress:
            done = int(rng.integers(0, 3))
            for i in range(done):
                self._sever(s, i, clean=True)
            s.arms[W.ACTING].pos = s.body(0).pose[:2].copy()
            s = W.grasp(s, W.ACTING, s.arms[W.ACTING].pos)
            if done < 3:
                target = self.phi(s)
                s.arms[W.STABILIZING].pos = target.copy()
                s = W.grasp(s, W.STABILIZING, target)
        self._decorate(s)
        return s

    # -- helpers ---------------------------------------------------------

    def next_cut(self, state: W.WorldState) -> int:
        for i, c in enumerate(state.meta["cuts"]):
            if c is None:
                return i
        return 3

    def _cut_point(self, state: W.WorldState, i: int) -> np.ndarray:
        return state.chain(0).point_at_arc(state.meta["cut_arcs"][i])

    def _sever(self, state: W.WorldState, i: int, clean: bool) -> None:
        chain = state.chain(0)
        arc = state.meta["cut_arcs"][i]
        arcs = chain.arc_lengths()
        link = int(np.searchsorted(arcs, arc) - 1)
        link = int(np.clip(link, 0, chain.n - 2))
        chain.link_active[link] = False
        state.meta["cuts"][i] = "clean" if clean else "unclean"
        # nudge the severed tip-side particles for a visible gap
        seg = chain.points[link + 1] - chain.points[link]
        n = np.linalg.norm(seg)
        if n > 1e-9:
            perp = np.array([seg[1], -seg[0]]) / n
            held = {ref[2] for ref, arm in state.held_refs().items()
                    if ref[0] == "chain" and ref[1] == 0}
            for j in range(link + 1):
                if j not in held:
                    chain.points[j] += NUDGE * perp

    def _holding_knife(self, state: W.WorldState) -> bool:
        hold = state.arms[W.ACTING].hold
        con = None if hold is None else state.constraint(hold)
        return con is not None and con.point[:2] == ("body", 0)

    # -- Task API ---------------------------------------------------------

    def success(self, state: W.WorldState) -> float:
        return sum(1 for c in state.meta["cuts"] if c == "clean") / 3.0

    def is_complete(self, state: W.WorldState) -> bool:
        return all(c is not None for c in state.meta["cuts"])

    def phi(self, state: W.WorldState) -> np.ndarray:
        i = self.next_cut(state)
        if i >= 3:
            raise TaskCompleteError("all cuts made")
        arc = state.meta["cut_arcs"][i] + DELTA_HOLD
        return state.chain(0).point_at_arc(arc)

    def grasp_point(self, state: W.WorldState) -> np.ndarray:
        return state.body(0).pose[:2].copy()

    def _post_step(self, prev: W.WorldState, new: W.WorldState,
                   action: W.BimanualAction) -> None:
        i = self.next_cut(new)
        if i >= 3 or not self._holding_knife(new):
            return
        knife = new.body(0)
        cut_pt = self._cut_point(new, i)
        if np.linalg.norm(knife.pose[:2] - cut_pt) >= CUT_TOL:
            return
        arc = new.meta["cut_arcs"][i]
        hold_arc = self.held_arc_on_chain(new, 0)
        if hold_arc is None:
            # unsupported: the rod shifts with the blade and the cut tears
            push = new.arms[W.ACTING].pos - prev.arms[W.ACTING].pos
            new.chain(0).points += 0.7 * push
            self._sever(new, i, clean=False)
            self._record_event(new, "twist", f"cut {i} with rod unheld")
        elif abs(hold_arc - arc) > self.spec.d_max:
            self._sever(new, i, clean=False)
            self._record_event(new, "twist",
                               f"cut {i} held {abs(hold_arc - arc):.3f} m away")
        else:
            self._sever(new, i, clean=True)

    def _decorate(self, state: W.WorldState) -> None:
        pal = PALETTES[self.spec.variant]
        ticks = [(arc, pal["ticks"][i])
                 for i, arc in enumerate(state.meta["cut_arcs"])
                 if state.meta["cuts"][i] is None]
        state.chain(0).tags["meta_ticks"] = ticks
