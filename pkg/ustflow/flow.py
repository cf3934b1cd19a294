"""
Minimal pipeline engine the CLI commands are built on.

A Stage runs ``prep -> exec -> post`` against a shared context dict; ``post`` returns
an action string that picks the next stage in a Pipeline. Stages may declare pydantic
``Input`` / ``Output`` models, checked when two stages are chained with ``>>``.
"""

import asyncio
import copy
import logging
import time
import warnings

from pydantic import BaseModel

logger = logging.getLogger(__name__)

__all__ = ["Stage", "BatchStage", "ParallelBatchStage", "Pipeline"]


def _port(stage, kind):
    model = getattr(type(stage), kind, None)
    if isinstance(model, type) and issubclass(model, BaseModel):
        return model
    return None


def _accepts(provided, wanted) -> bool:
    if provided == wanted:
        return True
    return isinstance(provided, type) and isinstance(wanted, type) and issubclass(provided, wanted)


def _validate_port_contracts(src, tgt):
    """Raise TypeError when ``src.Output`` cannot feed ``tgt.Input``; untyped stages pass."""
    out_model, in_model = _port(src, "Output"), _port(tgt, "Input")
    if out_model is None or in_model is None:
        return
    provided, wanted = out_model.model_fields, in_model.model_fields
    absent = sorted(set(wanted) - set(provided))
    if absent:
        raise TypeError(f"{src.name} >> {tgt.name}: output is missing {absent}")
    for key, info in wanted.items():
        have, need = provided[key].annotation, info.annotation
        if not _accepts(have, need):
            raise TypeError(f"{src.name} >> {tgt.name}: type mismatch on {key!r} ({have} vs {need})")


class Stage:
    Input = None
    Output = None

    def __init__(self):
        self.successors = {}

    @property
    def name(self):
        return self.__class__.__name__

    def next(self, stage, action="default"):
        if action in self.successors:
            warnings.warn(f"{self.name}: replacing the stage wired to action {action!r}")
        self.successors[action] = stage
        return stage

    def prep(self, ctx):
        pass

    def exec(self, prep_res):
        pass

    def post(self, ctx, prep_res, exec_res):
        pass

    def exec_fallback(self, prep_res, exc):
        raise exc

    def _exec(self, prep_res):
        try:
            return self.exec(prep_res)
        except Exception as exc:
            return self.exec_fallback(prep_res, exc)

    def _run(self, ctx):
        start = time.perf_counter()
        p = self.prep(ctx)
        e = self._exec(p)
        action = self.post(ctx, p, e)
        elapsed = (time.perf_counter() - start) * 1000.0
        ctx.setdefault("timings", []).append((self.name, elapsed))
        logger.debug("stage %s finished in %.3f ms -> %r", self.name, elapsed, action)
        return action

    def run(self, ctx):
        if self.successors:
            warnings.warn(f"{self.name} has successors; run it inside a Pipeline to follow them")
        return self._run(ctx)

    def __rshift__(self, other):
        _validate_port_contracts(self, other)
        return self.next(other)

    def __sub__(self, action):
        if isinstance(action, str):
            return _ActionEdge(self, action)
        raise TypeError(f"action must be a str, got {type(action).__name__}")


class _ActionEdge:
    def __init__(self, src, action):
        self.src, self.action = src, action

    def __rshift__(self, tgt):
        _validate_port_contracts(self.src, tgt)
        return self.src.next(tgt, self.action)


class BatchStage(Stage):
    """``exec`` runs once per item returned by ``prep``; results keep item order."""

    def _exec(self, items):
        return [super(BatchStage, self)._exec(i) for i in (items or [])]


class ParallelBatchStage(BatchStage):
    """Batch items run on up to ``workers`` threads, results still in item order.

    With ``fail_fast`` the first failing item cancels the rest of the batch.
    """

    def __init__(self, workers=1, fail_fast=False):
        super().__init__()
        self.workers, self.fail_fast = max(1, int(workers)), fail_fast

    async def _exec_async(self, items):
        gate = asyncio.Semaphore(self.workers)

        async def one(item):
            async with gate:
                return await asyncio.to_thread(Stage._exec, self, item)

        if self.fail_fast:
            async with asyncio.TaskGroup() as tg:
                tasks = [tg.create_task(one(i)) for i in items]
            return [t.result() for t in tasks]
        return list(await asyncio.gather(*(one(i) for i in items)))

    def _exec(self, items):
        items = list(items or [])
        if self.workers == 1 or len(items) <= 1:
            return [Stage._exec(self, i) for i in items]
        return asyncio.run(self._exec_async(items))


class Pipeline(Stage):
    """Runs stages from ``start`` along the actions their ``post`` returns.

    A Pipeline is itself a Stage, so pipelines nest. ``run`` returns the last action.
    """

    def __init__(self, start=None):
        super().__init__()
        self.first = start

    def start(self, stage):
        self.first = stage
        return stage

    def _successor(self, stage, action):
        key = action or "default"
        if key in stage.successors:
            return stage.successors[key]
        if stage.successors:
            warnings.warn(
                f"pipeline stops after {stage.name}: no stage for action {action!r} "
                f"(wired: {sorted(stage.successors)})"
            )
        return None

    def _walk(self, ctx):
        stage, action = self.first, None
        while stage is not None:
            action = copy.copy(stage)._run(ctx)
            stage = self._successor(stage, action)
        return action

    def _run(self, ctx):
        p = self.prep(ctx)
        return self.post(ctx, p, self._walk(ctx))

    def post(self, ctx, prep_res, exec_res):
        return exec_res
