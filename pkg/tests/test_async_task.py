"""
Tests for the task manager the commands fan their runs out on.
"""

import threading

import pytest

from utils.async_task import TaskStatus
from utils.exceptions import SolverError


def _square(value, report_progress=None, is_canceled=None):
    report_progress(1.0, "done")
    return value * value


class TestTaskManager:
    """Test task creation, completion, failure and cancellation."""

    def test_result_is_collected(self, task_manager):
        task_manager.create_task("square", _square, 7)
        assert task_manager.start_task("square")
        task, = task_manager.wait_all(["square"])
        assert task.status == TaskStatus.COMPLETED
        assert task.result == 49
        assert task.progress == 1.0
        assert task.message == "done"

    def test_unknown_task(self, task_manager):
        assert not task_manager.start_task("missing")
        assert not task_manager.cancel_task("missing")
        assert task_manager.get_task("missing") is None

    def test_failure_keeps_the_error(self, task_manager):
        def fail(report_progress=None, is_canceled=None):
            raise SolverError("no convergence")

        task_manager.create_task("fail", fail)
        task_manager.start_task("fail")
        task, = task_manager.wait_all(["fail"])
        assert task.status == TaskStatus.FAILED
        assert isinstance(task.error, SolverError)

    def test_cooperative_cancellation(self, task_manager):
        started = threading.Event()

        def spin(report_progress=None, is_canceled=None):
            started.set()
            while not is_canceled():
                pass
            return "stopped"

        task_manager.create_task("spin", spin)
        task_manager.start_task("spin")
        assert started.wait(timeout=5.0)
        assert task_manager.active_task_count == 1
        task_manager.cancel_task("spin")
        task, = task_manager.wait_all(["spin"], timeout=5.0)
        assert task.status == TaskStatus.CANCELED
        assert task_manager.active_task_count == 0

    def test_out_of_range_progress_is_ignored(self, task_manager):
        def report(report_progress=None, is_canceled=None):
            report_progress(1.5, "ignored")
            report_progress(0.5, "half")

        task_manager.create_task("report", report)
        task_manager.start_task("report")
        task, = task_manager.wait_all(["report"])
        assert (task.progress, task.message) == (0.5, "half")

    def test_remove_task(self, task_manager):
        task_manager.create_task("square", _square, 2)
        assert task_manager.remove_task("square")
        assert not task_manager.remove_task("square")

    @pytest.mark.parametrize("count", [1, 5])
    def test_many_tasks(self, task_manager, count):
        ids = [f"t{i}" for i in range(count)]
        for i, task_id in enumerate(ids):
            task_manager.create_task(task_id, _square, i)
            task_manager.start_task(task_id)
        tasks = task_manager.wait_all(ids)
        assert [task.result for task in tasks] == [i * i for i in range(count)]
