"""
`compare`: iterations needed to reach a suboptimality tolerance, per method and dimension.
"""

import argparse
from dataclasses import replace
from typing import Any, Dict, List, Optional

from config import get_output_config
from config.experiment import MethodEntry
from core.integrators import Method, StopCriteria, largest_stable_step, run
from utils.file_io import format_float

from cli.managers import ExperimentBuilder, ResolvedMethod, RunCollector
from .base_command import BaseCommand
from .run_command import method_labels, summarize_run

COMPARE_HEADER = ["d", "method", "epsilon", "iterations", "converged", "final_subopt"]


class CompareCommand(BaseCommand):
    help_text = "iterations-to-tolerance table across methods and dimensions"

    def __init__(self, task_manager):
        super().__init__("compare", task_manager)

    @staticmethod
    def _gd_entry(entry: MethodEntry, gd_step) -> MethodEntry:
        if gd_step is None or entry.method != Method.GRADIENT_DESCENT.value:
            return entry
        # doubling replaces this placeholder inside the task
        return replace(entry, epsilon=1.0 if gd_step == "doubling" else gd_step)

    def execute(self, args: argparse.Namespace, collector: RunCollector) -> Dict[str, Any]:
        experiment = self.load_experiment(args)
        experiment.require_methods()
        builder = ExperimentBuilder(experiment)
        compare = experiment.compare
        stop = StopCriteria(compare.tolerance, experiment.stop.grad_tol, experiment.stop.max_iters)
        doubling = compare.gd_step == "doubling"

        # every dimension is validated before any run starts
        plans = []
        dims: List[Optional[int]] = list(compare.dims) or [None]
        for d in dims:
            f = builder.objective(d)
            state0 = builder.initial_state(f)
            resolved = [builder.resolve(self._gd_entry(entry, compare.gd_step), f, state0)
                        for entry in experiment.methods]
            suffix = "" if d is None else f"_d{d}"
            for label, item in zip(method_labels(resolved), resolved):
                plans.append((f"{label}{suffix}", f, state0, item))

        def job(f, state0, item: ResolvedMethod):
            def work(report_progress=None, is_canceled=None):
                if doubling and item.config.method is Method.GRADIENT_DESCENT:
                    item.config.epsilon = largest_stable_step(f, state0.x)
                beta = None if item.certificate is None else item.certificate.beta_star
                return run(item.config, item.kinetic, f, state0.x, state0.p, stop, beta,
                           experiment.stride, report_progress, is_canceled)
            return work

        trajectories = self.run_tasks({key: job(f, state0, item) for key, f, state0, item in plans})

        rows, runs = [], {}
        for key, f, _, item in plans:
            trajectory = trajectories[key]
            collector.add_trajectory(key, trajectory)
            runs[key] = dict(summarize_run(trajectory, item), d=f.dim)
            rows.append([str(f.dim), item.label, format_float(item.config.epsilon), str(trajectory.iterations),
                         str(trajectory.converged).lower(), format_float(trajectory.final.subopt)])
            self.logger.info(f"{key}: {trajectory.iterations} iterations ({trajectory.stop_reason})")

        collector.add_table(get_output_config().COMPARE_FILE, COMPARE_HEADER, rows)
        summary = {
            'command': self.name,
            'objective': experiment.objective_name,
            'tolerance': compare.tolerance,
            'dims': [f.dim for _, f, _, _ in plans[::len(experiment.methods)]],
            'runs': runs,
        }
        collector.add_document(get_output_config().SUMMARY_FILE, summary)
        return summary
