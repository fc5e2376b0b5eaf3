"""
`ode`: adaptive simulation of the conformal Hamiltonian system.
"""

import argparse
from typing import Any, Dict, Optional

import numpy as np

from config import get_output_config
from core.analysis import continuous_envelope, envelope_bound
from core.continuous import ContinuousTrajectory, OdeConfig, simulate
from core.integrators import Method
from core.objective import ObjectiveSpec
from utils.exceptions import ConfigurationError, DomainError

from cli.managers import ExperimentBuilder, RunCollector
from .base_command import BaseCommand

ODE_FILE = "ode"


class OdeCommand(BaseCommand):
    help_text = "simulate the continuous dynamics and write (t, x, p, H)"

    def __init__(self, task_manager):
        super().__init__("ode", task_manager)

    def _envelope_check(self, builder: ExperimentBuilder, K, f: ObjectiveSpec,
                        trajectory: ContinuousTrajectory) -> Optional[Dict[str, Any]]:
        """Compare suboptimality with 2W_t when the certificate covers the pairing."""
        gamma = builder.experiment.gamma
        if f.certificate is None or not f.convex or not 0.0 < gamma < 1.0:
            return None
        try:
            bundle = builder.constants(Method.IMPLICIT, K, f, gamma)
        except ConfigurationError as e:
            self.logger.debug(f"No continuous envelope: {e}")
            return None

        W = continuous_envelope(trajectory.H[0], bundle.alpha_fn, bundle.C_alpha_gamma, gamma, trajectory.t)
        subopt = np.array([f.suboptimality(x) for x in trajectory.x])
        bound = envelope_bound(W)
        return {
            'holds': bool(np.all(subopt <= bound * (1.0 + 1e-6) + 1e-12)),
            'final_bound': float(bound[-1]),
        }

    def execute(self, args: argparse.Namespace, collector: RunCollector) -> Dict[str, Any]:
        experiment = self.load_experiment(args)
        builder = ExperimentBuilder(experiment)
        f = builder.objective()
        state0 = builder.initial_state(f)
        K = builder.kinetic(f)

        ode = experiment.ode
        try:
            cfg = OdeConfig(ode.t_end, ode.rel_tol, ode.abs_tol, samples=ode.samples, h_floor=ode.h_floor)
        except DomainError as e:
            raise ConfigurationError(str(e), e.context)
        trajectory = simulate(K, f, experiment.gamma, state0, cfg)
        collector.add_continuous(ODE_FILE, trajectory, f)

        summary = {
            'command': self.name,
            'objective': {'name': f.name, 'dim': f.dim, 'params': f.params},
            'kinetic': K.to_dict(),
            'gamma': experiment.gamma,
            'status': trajectory.status,
            'samples': int(trajectory.t.size),
            't_final': float(trajectory.t[-1]),
            'final_H': float(trajectory.H[-1]),
            'final_subopt': f.suboptimality(trajectory.x[-1]),
            'max_energy_increase': trajectory.max_energy_increase(),
            'envelope': self._envelope_check(builder, K, f, trajectory),
        }
        collector.add_document(get_output_config().SUMMARY_FILE, summary)
        return summary
