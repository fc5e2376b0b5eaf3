"""
Experiment Builder for the command line.

Turns an ExperimentConfig into the objects the core modules work with: the
objective, the kinetic energy, the initial state, the constants bundle and the
resolved step size of each method.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from config.experiment import ExperimentConfig, KineticEntry, MethodEntry
from core.analysis import (
    ConstantsBundle, RateCertificate, constants_known_power, constants_nonconvex,
    constants_relativistic, rate_certificate,
)
from core.integrators import IntegratorConfig, Method, State, hamiltonian
from core.kinetic import NormDescriptor, PowerKinetic, QuadraticKinetic
from core.objective import ObjectiveSpec, builtin
from utils.exceptions import ConfigurationError, HamDescError, MissingFieldError
from utils.logging import get_logger

# Catalogue objectives whose dimension is a parameter
DIMENSIONED_OBJECTIVES = ("phiPower", "normFour")


@dataclass
class ResolvedMethod:
    """Everything one integrator run needs."""
    entry: MethodEntry
    config: IntegratorConfig
    kinetic: object
    bundle: Optional[ConstantsBundle] = None
    certificate: Optional[RateCertificate] = None

    @property
    def label(self) -> str:
        return self.entry.label


class ExperimentBuilder:
    """
    Builds core objects from an experiment document.

    Constants bundles and certificates are attached whenever the objective's
    certificate covers the method; "auto" step sizes require them.
    """

    def __init__(self, experiment: ExperimentConfig):
        self.experiment = experiment
        self.logger = get_logger("cli.builder")

    def objective(self, dim: Optional[int] = None) -> ObjectiveSpec:
        params = dict(self.experiment.objective_params)
        if dim is not None:
            if self.experiment.objective_name not in DIMENSIONED_OBJECTIVES:
                raise ConfigurationError(f"Objective '{self.experiment.objective_name}' has a fixed dimension",
                                         {'dimensioned': ", ".join(DIMENSIONED_OBJECTIVES)})
            params['d'] = dim
        return builtin(self.experiment.objective_name, params)

    def _vector(self, value, dim: int, name: str) -> np.ndarray:
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return np.full(dim, float(value))
        vector = np.array(value, dtype=float)
        if vector.shape != (dim,):
            raise ConfigurationError(f"{name} has {vector.size} entries but the objective has dimension {dim}",
                                     {name: list(np.atleast_1d(vector)), 'dim': dim})
        return vector

    def initial_state(self, f: ObjectiveSpec) -> State:
        x0 = self.experiment.x0
        if x0 is None:
            raise MissingFieldError("The experiment needs an initial point x0")
        if x0 == "random":
            rng = np.random.default_rng(self.experiment.seed)
            x = rng.standard_normal(f.dim)
            if f.x_star is not None:
                x += f.x_star
        else:
            x = self._vector(x0, f.dim, 'x0')
        p0 = self.experiment.p0
        p = np.zeros(f.dim) if p0 is None else self._vector(p0, f.dim, 'p0')
        return State(x, p)

    def kinetic(self, f: ObjectiveSpec, entry: Optional[KineticEntry] = None):
        entry = entry or self.experiment.kinetic
        if entry.kind == "power":
            return PowerKinetic(entry.a, entry.A, NormDescriptor(entry.q))
        if entry.kind == "classical":
            return PowerKinetic.classical(entry.q)
        if entry.kind == "relativistic":
            return PowerKinetic.relativistic(entry.q)
        if entry.kind == "quadratic":
            K = QuadraticKinetic(np.array(entry.matrix))
            if K.matrix.shape != (f.dim, f.dim):
                raise ConfigurationError("Quadratic kinetic matrix does not match the objective dimension",
                                         {'shape': K.matrix.shape, 'dim': f.dim})
            return K

        cert = f.certificate
        if cert is None:
            raise MissingFieldError(f"A matched kinetic needs a certificate, and '{f.name}' has none")
        if cert.pairing == "relativistic":
            return PowerKinetic.relativistic(cert.norm_q)
        return PowerKinetic.matched(cert.b, cert.B, cert.norm_q)

    def constants(self, method: Method, K, f: ObjectiveSpec, gamma: float) -> ConstantsBundle:
        cert = f.certificate
        if cert is None:
            raise MissingFieldError(f"Objective '{f.name}' has no certificate")
        if not f.convex:
            return constants_nonconvex(cert, K, gamma)
        if cert.pairing == "relativistic":
            return constants_relativistic(cert, K, gamma, method)
        return constants_known_power(cert, K, gamma, method)

    def _baseline_step(self, method: Method, smoothness: float) -> float:
        if method is Method.GRADIENT_DESCENT:
            return 1.0 / smoothness
        return 1.0 / math.sqrt(smoothness)

    def resolve(self, entry: MethodEntry, f: ObjectiveSpec, state0: State) -> ResolvedMethod:
        """Kinetic, step size and certificate for one method entry."""
        method = Method(entry.method)
        gamma = self.experiment.gamma if entry.gamma is None else entry.gamma
        epsilon = self.experiment.epsilon if entry.epsilon is None else entry.epsilon
        stop = self.experiment.stop

        K = None
        if method.is_hamiltonian:
            K = self.kinetic(f, entry.kinetic)
        elif method is Method.CLASSICAL_MOMENTUM:
            K = PowerKinetic.classical()

        bundle = certificate = None
        if method.is_hamiltonian:
            H0 = hamiltonian(K, f, state0.x, state0.p)
            try:
                bundle = self.constants(method, K, f, gamma)
                certificate = rate_certificate(method, bundle, gamma, H0=H0,
                                               epsilon=epsilon if isinstance(epsilon, float) else None)
            except HamDescError as e:
                if epsilon == "auto":
                    raise
                self.logger.debug(f"No certificate for {method.value}: {e}")

        if epsilon == "auto":
            if method.is_hamiltonian:
                epsilon = certificate.epsilon
            elif f.smoothness is None:
                raise MissingFieldError(f"An automatic {method.value} step needs the smoothness of '{f.name}'")
            else:
                epsilon = self._baseline_step(method, f.smoothness)
        elif epsilon == "inverse_l0":
            L0 = f.local_smoothness(state0.x)
            if not L0 > 0.0:
                raise ConfigurationError("The Hessian at x0 is not positive; no inverse_l0 step exists",
                                         {'L0': L0})
            epsilon = self._baseline_step(Method.GRADIENT_DESCENT if method is Method.GRADIENT_DESCENT
                                          else Method.CLASSICAL_MOMENTUM, L0)

        config = IntegratorConfig(method, float(epsilon), gamma, max_iters=stop.max_iters)
        self.logger.debug(f"{entry.label}: epsilon={config.epsilon:.6g}, gamma={gamma}")
        return ResolvedMethod(entry, config, K, bundle, certificate)
