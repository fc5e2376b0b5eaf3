"""
`run`: iterate every configured method from the same initial state.
"""

import argparse
from collections import Counter
from typing import Any, Dict, List

from config import get_output_config
from core.analysis import observed_rate
from core.integrators import State, StopCriteria, Trajectory, run
from core.objective import ObjectiveSpec

from cli.managers import ExperimentBuilder, ResolvedMethod, RunCollector
from .base_command import BaseCommand


def method_labels(resolved: List[ResolvedMethod]) -> List[str]:
    """Method names, suffixed with their position when a method appears twice."""
    counts = Counter(item.label for item in resolved)
    return [item.label if counts[item.label] == 1 else f"{item.label}_{i}" for i, item in enumerate(resolved)]


def summarize_run(trajectory: Trajectory, item: ResolvedMethod) -> Dict[str, Any]:
    """Per-method entry of the run summary."""
    final = trajectory.final
    fit = observed_rate(trajectory)
    summary = {
        'method': item.config.method.value,
        'epsilon': item.config.epsilon,
        'gamma': item.config.gamma,
        'kinetic': None if item.kinetic is None else item.kinetic.to_dict(),
        'iterations': trajectory.iterations,
        'stop_reason': trajectory.stop_reason,
        'final_subopt': final.subopt,
        'final_H': final.H,
        'final_grad_norm': final.grad_norm,
        'h_monotone': trajectory.h_monotone,
        'h_violations': len(trajectory.violations),
        'elapsed': trajectory.elapsed,
        'rate': fit.rate if fit is not None and fit.accepted else None,
        'rate_r2': None if fit is None else fit.r2,
    }
    if item.bundle is not None:
        summary['constants'] = item.bundle.to_dict()
    if item.certificate is not None:
        summary['certificate'] = item.certificate.to_dict()
    return summary


class RunCommand(BaseCommand):
    """One trajectory CSV per method plus the JSON run summary."""

    help_text = "run the configured methods and write trajectories"

    def __init__(self, task_manager):
        super().__init__("run", task_manager)

    def run_methods(self, experiment, f: ObjectiveSpec, state0: State,
                    resolved: List[ResolvedMethod]) -> Dict[str, Trajectory]:
        stop = StopCriteria(experiment.stop.subopt_tol, experiment.stop.grad_tol, experiment.stop.max_iters)

        def job(item: ResolvedMethod):
            beta = None if item.certificate is None else item.certificate.beta_star

            def work(report_progress=None, is_canceled=None):
                return run(item.config, item.kinetic, f, state0.x, state0.p, stop, beta,
                           experiment.stride, report_progress, is_canceled)
            return work

        labels = method_labels(resolved)
        return self.run_tasks({label: job(item) for label, item in zip(labels, resolved)})

    def execute(self, args: argparse.Namespace, collector: RunCollector) -> Dict[str, Any]:
        experiment = self.load_experiment(args)
        experiment.require_methods()
        builder = ExperimentBuilder(experiment)
        f = builder.objective()
        state0 = builder.initial_state(f)
        resolved = [builder.resolve(entry, f, state0) for entry in experiment.methods]

        trajectories = self.run_methods(experiment, f, state0, resolved)
        methods = {}
        for (label, trajectory), item in zip(trajectories.items(), resolved):
            collector.add_trajectory(label, trajectory)
            methods[label] = summarize_run(trajectory, item)
            self.logger.info(f"{label}: {trajectory.stop_reason} after {trajectory.iterations} iterations")

        summary = {
            'command': self.name,
            'objective': {'name': f.name, 'dim': f.dim, 'params': f.params},
            'seed': experiment.seed,
            'methods': methods,
        }
        collector.add_document(get_output_config().SUMMARY_FILE, summary)
        return summary
