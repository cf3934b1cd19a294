import unittest
import sys
import threading
import time
import warnings
from pathlib import Path

import pytest
from pydantic import BaseModel

sys.path.insert(0, str(Path(__file__).parent.parent))
from ustflow.flow import BatchStage, ParallelBatchStage, Pipeline, Stage


class NumberStage(Stage):
    def __init__(self, number):
        super().__init__()
        self.number = number

    def prep(self, ctx):
        ctx["current"] = self.number


class AddStage(Stage):
    def __init__(self, number):
        super().__init__()
        self.number = number

    def prep(self, ctx):
        ctx["current"] += self.number


class CheckPositive(Stage):
    def post(self, ctx, prep_res, exec_res):
        return "positive" if ctx["current"] >= 0 else "negative"


class EndSignal(Stage):
    def __init__(self, signal="finished"):
        super().__init__()
        self.signal = signal

    def post(self, ctx, prep_res, exec_res):
        return self.signal


class TestPipeline(unittest.TestCase):
    def test_start_method(self):
        ctx = {}
        pipeline = Pipeline()
        pipeline.start(NumberStage(5))
        self.assertIsNone(pipeline.run(ctx))
        self.assertEqual(ctx["current"], 5)

    def test_sequence(self):
        ctx = {}
        n1 = NumberStage(5)
        n1 >> AddStage(3) >> AddStage(-10)
        Pipeline(start=n1).run(ctx)
        self.assertEqual(ctx["current"], -2)

    def test_branching(self):
        for start, expected, signal in ((5, 15, "pos_end"), (-5, -25, "neg_end")):
            ctx = {}
            n = NumberStage(start)
            check = CheckPositive()
            n >> check
            check - "positive" >> AddStage(10) >> EndSignal("pos_end")
            check - "negative" >> AddStage(-20) >> EndSignal("neg_end")
            self.assertEqual(Pipeline(start=n).run(ctx), signal)
            self.assertEqual(ctx["current"], expected)

    def test_missing_action_ends_with_warning(self):
        ctx = {}
        check = CheckPositive()
        check - "negative" >> AddStage(1)
        n = NumberStage(1)
        n >> check
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            action = Pipeline(start=n).run(ctx)
        self.assertEqual(action, "positive")
        self.assertEqual(ctx["current"], 1)
        self.assertTrue(any("positive" in str(w.message) for w in caught))

    def test_timings_recorded_per_stage(self):
        ctx = {}
        n = NumberStage(1)
        n >> AddStage(2)
        Pipeline(start=n).run(ctx)
        self.assertEqual([name for name, _ in ctx["timings"]], ["NumberStage", "AddStage"])
        self.assertTrue(all(ms >= 0 for _, ms in ctx["timings"]))

    def test_nested_pipeline(self):
        ctx = {}
        inner_start = NumberStage(2)
        inner_start >> AddStage(3)
        inner = Pipeline(start=inner_start)
        inner >> AddStage(10)
        Pipeline(start=inner).run(ctx)
        self.assertEqual(ctx["current"], 15)


class FallbackStage(Stage):
    def exec(self, prep_res):
        raise ValueError("boom")

    def exec_fallback(self, prep_res, exc):
        return f"recovered from {exc}"

    def post(self, ctx, prep_res, exec_res):
        ctx["result"] = exec_res


class FailingStage(Stage):
    def exec(self, prep_res):
        raise ValueError("boom")


class TestFallback(unittest.TestCase):
    def test_fallback_result_reaches_post(self):
        ctx = {}
        Pipeline(start=FallbackStage()).run(ctx)
        self.assertEqual(ctx["result"], "recovered from boom")

    def test_default_fallback_reraises(self):
        with self.assertRaises(ValueError):
            Pipeline(start=FailingStage()).run({})


class SquareBatch(BatchStage):
    def prep(self, ctx):
        return ctx["items"]

    def exec(self, item):
        return item * item

    def post(self, ctx, prep_res, exec_res):
        ctx["results"] = exec_res


class SlowSquares(ParallelBatchStage):
    def __init__(self, workers=1, fail_fast=False, fail_on=None):
        super().__init__(workers=workers, fail_fast=fail_fast)
        self.fail_on = fail_on
        self.threads = set()
        self.lock = threading.Lock()

    def prep(self, ctx):
        return ctx["items"]

    def exec(self, item):
        with self.lock:
            self.threads.add(threading.get_ident())
        if item == self.fail_on:
            raise ValueError(f"boom-{item}")
        # later items finish first
        time.sleep(0.002 * (10 - item))
        return item * item

    def post(self, ctx, prep_res, exec_res):
        ctx["results"] = exec_res
        return "done"


class TestBatchStages(unittest.TestCase):
    def test_batch_keeps_order(self):
        ctx = {"items": [3, 1, 2]}
        Pipeline(start=SquareBatch()).run(ctx)
        self.assertEqual(ctx["results"], [9, 1, 4])

    def test_empty_batch(self):
        ctx = {"items": []}
        Pipeline(start=SquareBatch()).run(ctx)
        self.assertEqual(ctx["results"], [])

    def test_parallel_results_keep_item_order(self):
        ctx = {"items": list(range(10))}
        stage = SlowSquares(workers=4)
        self.assertEqual(Pipeline(start=stage).run(ctx), "done")
        self.assertEqual(ctx["results"], [i * i for i in range(10)])

    def test_single_worker_runs_inline(self):
        ctx = {"items": [1, 2, 3]}
        stage = SlowSquares(workers=1)
        Pipeline(start=stage).run(ctx)
        self.assertEqual(stage.threads, {threading.get_ident()})

    def test_parallel_error_propagates(self):
        ctx = {"items": list(range(6))}
        with self.assertRaises(ValueError):
            Pipeline(start=SlowSquares(workers=3, fail_on=4)).run(ctx)

    def test_fail_fast_raises_group(self):
        ctx = {"items": list(range(6))}
        with pytest.raises(ExceptionGroup) as info:
            Pipeline(start=SlowSquares(workers=2, fail_fast=True, fail_on=0)).run(ctx)
        assert any(isinstance(e, ValueError) for e in info.value.exceptions)
        assert "results" not in ctx

    def test_worker_count_floor(self):
        self.assertEqual(SlowSquares(workers=0).workers, 1)


# --- port contracts ---

class CountOutput(BaseModel):
    text: str
    count: int


class CountInput(BaseModel):
    count: int


class CountAsText(BaseModel):
    count: str


class Animal(BaseModel):
    name: str


class Dog(Animal):
    breed: str


class PetOutput(BaseModel):
    pet: Dog


class PetInput(BaseModel):
    pet: Animal


class Producer(Stage):
    Output = CountOutput


class Consumer(Stage):
    Input = CountInput


class TextConsumer(Stage):
    Input = CountAsText


class PetProducer(Stage):
    Output = PetOutput


class PetConsumer(Stage):
    Input = PetInput


class Untyped(Stage):
    pass


def test_compatible_ports_chain():
    a, b = Producer(), Consumer()
    assert (a >> b) is b
    assert a.successors["default"] is b


def test_missing_field_rejected():
    with pytest.raises(TypeError, match="missing"):
        Consumer() >> Producer() >> PetConsumer()


def test_type_mismatch_rejected():
    with pytest.raises(TypeError, match="type mismatch"):
        Producer() >> TextConsumer()


def test_subclass_field_accepted():
    PetProducer() >> PetConsumer()


def test_conditional_transition_is_checked():
    with pytest.raises(TypeError):
        Producer() - "go" >> TextConsumer()


def test_untyped_stages_skip_checks():
    Untyped() >> Consumer()
    Producer() >> Untyped()


def test_action_must_be_string():
    with pytest.raises(TypeError):
        Stage() - 1
