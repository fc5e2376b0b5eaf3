"""
`rates`: constants bundle, step-size bound, contraction parameters and the
W-envelope of each Hamiltonian method, plus a sampled check of the certificate.
"""

import argparse
from typing import Any, Dict

import numpy as np

from config import get_output_config
from config.experiment import MethodEntry
from core.analysis import continuous_envelope, envelope_bound, rate_certificate, w_recursion
from core.integrators import Method, hamiltonian
from core.objective import certify_growth
from utils.exceptions import ConfigurationError, DomainError, MissingFieldError
from utils.file_io import format_float

from cli.managers import ExperimentBuilder, RunCollector
from .base_command import BaseCommand

HAMILTONIAN_METHODS = ("implicit", "explicit1", "explicit2")


class RatesCommand(BaseCommand):
    help_text = "report certified constants, step bounds and envelopes"

    def __init__(self, task_manager):
        super().__init__("rates", task_manager)

    def _method_report(self, builder: ExperimentBuilder, entry: MethodEntry, f, state0,
                       collector: RunCollector) -> Dict[str, Any]:
        method = Method(entry.method)
        if not method.is_hamiltonian:
            return {'available': False, 'reason': f"{method.value} has no certified rate"}

        experiment = builder.experiment
        gamma = experiment.gamma if entry.gamma is None else entry.gamma
        epsilon = experiment.epsilon if entry.epsilon is None else entry.epsilon
        try:
            K = builder.kinetic(f, entry.kinetic)
            bundle = builder.constants(method, K, f, gamma)
            H0 = None if state0 is None else hamiltonian(K, f, state0.x, state0.p)
            certificate = rate_certificate(method, bundle, gamma, H0=H0,
                                           epsilon=epsilon if isinstance(epsilon, float) else None)
        except (ConfigurationError, DomainError) as e:
            return {'available': False, 'reason': str(e)}

        report = {
            'available': True,
            'kinetic': K.to_dict(),
            'gamma': gamma,
            'H0': H0,
            'constants': bundle.to_dict(),
            'certificate': certificate.to_dict(),
        }
        if bundle.nonconvex or H0 is None:
            return report

        steps = experiment.stop.max_iters
        try:
            W = w_recursion(method, H0, bundle, gamma, certificate.epsilon, steps)
        except DomainError as e:
            report['envelope'] = {'available': False, 'reason': str(e)}
            return report

        t_grid = certificate.epsilon * np.arange(steps + 1)
        W_t = continuous_envelope(H0, bundle.alpha_fn, bundle.C_alpha_gamma, gamma, t_grid)
        rows = [[str(i), format_float(t), format_float(w), format_float(envelope_bound(w)), format_float(wt)]
                for i, (t, w, wt) in enumerate(zip(t_grid, W, W_t))]
        collector.add_table(f"envelope_{method.value}.csv", ["iter", "t", "W", "subopt_bound", "W_t"], rows)
        report['envelope'] = {'available': True, 'steps': steps, 'W0': H0, 'W_final': float(W[-1]),
                              'subopt_bound_final': float(envelope_bound(W[-1]))}
        return report

    def execute(self, args: argparse.Namespace, collector: RunCollector) -> Dict[str, Any]:
        experiment = self.load_experiment(args)
        builder = ExperimentBuilder(experiment)
        f = builder.objective()
        if f.certificate is None:
            raise MissingFieldError(f"Objective '{f.name}' has no certificate")
        state0 = None if experiment.x0 is None else builder.initial_state(f)

        entries = experiment.methods or [MethodEntry(name) for name in HAMILTONIAN_METHODS]
        growth = certify_growth(f, seed=experiment.seed) if f.certificate.mu is not None else None
        methods = {entry.label: self._method_report(builder, entry, f, state0, collector) for entry in entries}

        summary = {
            'command': self.name,
            'objective': {'name': f.name, 'dim': f.dim, 'params': f.params},
            'growth_certificate': f.certificate.to_dict(),
            'growth_check': None if growth is None else growth.to_dict(),
            'methods': methods,
        }
        if growth is not None and not growth.passed:
            self.logger.warning(f"Sampled certificate check failed for {f.name}: {growth.to_dict()}")
        collector.add_document(get_output_config().RATES_FILE, summary)
        return summary
