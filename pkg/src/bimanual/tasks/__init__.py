"""Task registry and the module-level task operations."""

from __future__ import annotations

import numpy as np

from .. import world as W
from .base import (BOUNDS, D_MAX, D_REFRESH, EPS_RESTAB, TASK_IDS, VARIANTS,
                   DegradeEvent, Task, TaskCompleteError, TaskError, TaskSpec)
from .cap import CapTask
from .cut import CutTask
from .grind import GrindTask
from .zipper import ZipTask

_TASKS = {"grind": GrindTask, "zip": ZipTask, "cap": CapTask, "cut": CutTask}


def make_task(spec: TaskSpec) -> Task:
    return _TASKS[spec.task_id](spec)


def reset_task(spec: TaskSpec, seed: int) -> W.WorldState:
    return make_task(spec).reset(seed)


def _task_for_state(task_id: str, state: W.WorldState) -> Task:
    variant = state.meta.get("variant", "in_dist")
    return make_task(TaskSpec(task_id, variant=variant))


def success_metric(task_id: str, state: W.WorldState) -> float:
    return _task_for_state(task_id, state).success(state)


def oracle_phi(task_id: str, state: W.WorldState) -> np.ndarray:
    return _task_for_state(task_id, state).phi(state)


def degrade_check(task_id: str, state: W.WorldState) -> DegradeEvent | None:
    return _task_for_state(task_id, state).degrade(state)


__all__ = [
    "BOUNDS", "D_MAX", "D_REFRESH", "EPS_RESTAB", "TASK_IDS", "VARIANTS",
    "DegradeEvent", "Task", "TaskCompleteError", "TaskError", "TaskSpec",
    "make_task", "reset_task", "success_metric", "oracle_phi", "degrade_check",
]
