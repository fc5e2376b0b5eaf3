"""
`lower`: rate experiments on x' = |p|^(a-1) sign p, p' = -|x|^(b-1) sign x - gamma p.

generic  fits the sublinear exponent of a typical path against 1/(ba - b - a)
eta      shoots for the exceptional start and fits its linear rate against gamma(a - 1)
sweep    samples paths from starts around eta for phase portraits
"""

import argparse
from typing import Any, Dict, Tuple

from config import get_lower_bound_config, get_output_config
from config.experiment import LowerEntry
from core.continuous import (
    LowerBoundProblem, classify_start, eta_rate, generic_rate, phase_sweep, shoot_eta,
)
from utils.exceptions import ClassificationError, ConfigurationError, DomainError

from cli.managers import RunCollector
from .base_command import BaseCommand


class LowerCommand(BaseCommand):
    help_text = "continuous-time lower-bound experiments"

    def __init__(self, task_manager):
        super().__init__("lower", task_manager)

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--config", metavar="PATH", help="experiment document with a 'lower' section")
        parser.add_argument("--a", type=float, help="kinetic power a > 1")
        parser.add_argument("--b", type=float, help="objective power b > 1")
        parser.add_argument("--gamma", type=float, help="friction gamma > 0")
        parser.add_argument("--mode", choices=("generic", "eta", "sweep"))

    def problem(self, args: argparse.Namespace) -> Tuple[LowerBoundProblem, str]:
        """Flags override the config section, which overrides the defaults."""
        entry = self.load_experiment(args).lower if getattr(args, 'config', None) else LowerEntry()
        values = {'a': entry.a, 'b': entry.b, 'gamma': entry.gamma}
        for name in values:
            if getattr(args, name, None) is not None:
                values[name] = getattr(args, name)
        mode = getattr(args, 'mode', None) or entry.mode
        try:
            prob = LowerBoundProblem(**values)
        except DomainError as e:
            raise ConfigurationError(str(e), e.context)
        if not prob.sublinear_regime:
            raise ConfigurationError(
                f"1/a + 1/b = {1.0 / prob.a + 1.0 / prob.b:.6g} >= 1 is the linear regime: "
                "no sublinear exponent or exceptional path to measure", values)
        return prob, mode

    def _generic(self, prob: LowerBoundProblem) -> Dict[str, Any]:
        fit = generic_rate(prob)
        predicted = prob.predicted_exponent
        return {'fit': fit.to_dict(), 'predicted_exponent': predicted,
                'exponent_error': abs(fit.power - predicted)}

    def _eta(self, prob: LowerBoundProblem, collector: RunCollector) -> Dict[str, Any]:
        estimate = shoot_eta(prob, tol=get_lower_bound_config().ETA_RATE_TOL)
        fit, trajectory = eta_rate(prob, estimate)
        collector.add_continuous("eta_path", trajectory)
        return {'eta': estimate.to_dict(), 'fit': fit.to_dict(), 'predicted_rate': prob.fast_rate,
                'rate_error': abs(fit.rate - prob.fast_rate)}

    def _sweep(self, prob: LowerBoundProblem, collector: RunCollector) -> Dict[str, Any]:
        estimate = shoot_eta(prob)
        thetas = [estimate.eta * (1.0 + offset) for offset in get_lower_bound_config().SWEEP_OFFSETS]

        def job(theta: float):
            def work(report_progress=None, is_canceled=None):
                try:
                    label = classify_start(prob, theta).value
                except ClassificationError:
                    label = "ambiguous"
                return label, phase_sweep(prob, [theta])[0][1]
            return work

        results = self.run_tasks({f"theta_{k}": job(theta) for k, theta in enumerate(thetas)})
        paths = []
        for (key, (label, trajectory)), theta in zip(results.items(), thetas):
            collector.add_continuous(f"sweep_{key}", trajectory)
            paths.append({'theta': theta, 'classification': label, 'status': trajectory.status,
                          'file': f"sweep_{key}.csv"})
        return {'eta': estimate.to_dict(), 'paths': paths}

    def execute(self, args: argparse.Namespace, collector: RunCollector) -> Dict[str, Any]:
        prob, mode = self.problem(args)
        self.logger.info(f"Lower-bound experiment a={prob.a}, b={prob.b}, gamma={prob.gamma}, mode={mode}")

        if mode == "generic":
            result = self._generic(prob)
        elif mode == "eta":
            result = self._eta(prob, collector)
        else:
            result = self._sweep(prob, collector)

        summary = {'command': self.name, 'a': prob.a, 'b': prob.b, 'gamma': prob.gamma,
                   'mode': mode, **result}
        collector.add_document(get_output_config().LOWER_FILE, summary)
        return summary
