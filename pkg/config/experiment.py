"""
Experiment documents driving the command line.

A document is a JSON object such as::

    {
      "objective": {"name": "power1d", "params": {"b": 4}},
      "kinetic": "matched",
      "methods": ["implicit", {"method": "explicit1", "epsilon": 0.01}],
      "epsilon": "auto",
      "gamma": 0.5,
      "x0": [1.0],
      "stop": {"subopt_tol": 1e-10, "max_iters": 10000}
    }
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

from utils.exceptions import ConfigurationError, MissingFieldError
from utils.file_io import read_json

EPSILON_KEYWORDS = ("auto", "inverse_l0")
METHOD_NAMES = ("implicit", "explicit1", "explicit2", "classical_momentum", "gradient_descent")
LOWER_MODES = ("generic", "eta", "sweep")

EpsilonValue = Union[str, float]


def _epsilon(value: Any, where: str) -> EpsilonValue:
    if isinstance(value, str):
        if value not in EPSILON_KEYWORDS:
            raise ConfigurationError(f"{where}: epsilon must be a number or one of {EPSILON_KEYWORDS}",
                                     {'epsilon': value})
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
        raise ConfigurationError(f"{where}: epsilon must be positive", {'epsilon': value})
    return float(value)


def _positive(value: Any, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
        raise ConfigurationError(f"{name} must be a positive number", {name: value})
    return float(value)


def _optional_positive(data: Mapping[str, Any], key: str) -> Optional[float]:
    return None if data.get(key) is None else _positive(data[key], key)


@dataclass(frozen=True)
class KineticEntry:
    """power {a, A, q}, classical, relativistic, quadratic {matrix} or matched to the certificate."""
    kind: str = "matched"
    a: Optional[float] = None
    A: Optional[float] = None
    q: float = 2.0
    matrix: Optional[Tuple[Tuple[float, ...], ...]] = None

    @classmethod
    def from_value(cls, value: Any) -> 'KineticEntry':
        if value is None or value == "matched":
            return cls()
        if value in ("classical", "relativistic"):
            return cls(kind=value)
        if not isinstance(value, dict):
            raise ConfigurationError("kinetic must be an object or one of 'matched', 'classical', 'relativistic'",
                                     {'kinetic': value})

        q = float(value.get('q', 2.0))
        if 'quadratic' in value:
            matrix = tuple(tuple(float(v) for v in row) for row in value['quadratic'])
            return cls(kind="quadratic", matrix=matrix)
        if value.get('classical'):
            return cls(kind="classical", q=q)
        if value.get('relativistic'):
            return cls(kind="relativistic", q=q)
        if value.get('matched'):
            return cls(kind="matched", q=q)
        if 'a' in value and 'A' in value:
            return cls(kind="power", a=float(value['a']), A=float(value['A']), q=q)
        raise MissingFieldError("A power kinetic needs both 'a' and 'A'", {'kinetic': value})

    def to_dict(self) -> Dict[str, Any]:
        if self.kind == "power":
            return {'a': self.a, 'A': self.A, 'q': self.q}
        if self.kind == "quadratic":
            return {'quadratic': [list(row) for row in self.matrix]}
        return {self.kind: True, 'q': self.q}


@dataclass(frozen=True)
class MethodEntry:
    method: str
    epsilon: Optional[EpsilonValue] = None
    gamma: Optional[float] = None
    kinetic: Optional[KineticEntry] = None

    @property
    def label(self) -> str:
        return self.method

    @classmethod
    def from_value(cls, value: Any) -> 'MethodEntry':
        if isinstance(value, str):
            value = {'method': value}
        if not isinstance(value, dict) or 'method' not in value:
            raise ConfigurationError("Each method entry needs a 'method' name", {'entry': value})

        name = value['method']
        if name not in METHOD_NAMES:
            raise ConfigurationError(f"Unknown method '{name}'", {'available': ", ".join(METHOD_NAMES)})
        epsilon = None if value.get('epsilon') is None else _epsilon(value['epsilon'], name)
        gamma = None if value.get('gamma') is None else _positive(value['gamma'], 'gamma')
        kinetic = KineticEntry.from_value(value['kinetic']) if 'kinetic' in value else None
        return cls(method=name, epsilon=epsilon, gamma=gamma, kinetic=kinetic)


@dataclass(frozen=True)
class StopEntry:
    subopt_tol: Optional[float] = None
    grad_tol: Optional[float] = None
    max_iters: int = 1000

    @classmethod
    def from_value(cls, value: Optional[Mapping[str, Any]]) -> 'StopEntry':
        value = value or {}
        max_iters = value.get('max_iters', value.get('iters', 1000))
        if isinstance(max_iters, bool) or not isinstance(max_iters, int) or max_iters < 0:
            raise ConfigurationError("stop.max_iters must be a non-negative integer", {'max_iters': max_iters})
        return cls(_optional_positive(value, 'subopt_tol'), _optional_positive(value, 'grad_tol'), max_iters)


@dataclass(frozen=True)
class OdeEntry:
    t_end: float = 10.0
    rel_tol: Optional[float] = None
    abs_tol: Optional[float] = None
    samples: Optional[int] = None
    h_floor: Optional[float] = None

    @classmethod
    def from_value(cls, value: Optional[Mapping[str, Any]]) -> 'OdeEntry':
        value = value or {}
        t_end = value.get('t_end', 10.0)
        if isinstance(t_end, bool) or not isinstance(t_end, (int, float)) or t_end < 0:
            raise ConfigurationError("ode.t_end must be a non-negative number", {'t_end': t_end})
        samples = value.get('samples')
        return cls(float(t_end), _optional_positive(value, 'rel_tol'), _optional_positive(value, 'abs_tol'),
                   None if samples is None else int(samples), _optional_positive(value, 'h_floor'))


@dataclass(frozen=True)
class LowerEntry:
    a: float = 2.0
    b: float = 4.0
    gamma: float = 1.0
    mode: str = "generic"

    @classmethod
    def from_value(cls, value: Optional[Mapping[str, Any]]) -> 'LowerEntry':
        value = value or {}
        mode = value.get('mode', 'generic')
        if mode not in LOWER_MODES:
            raise ConfigurationError(f"Unknown lower-bound mode '{mode}'", {'available': ", ".join(LOWER_MODES)})
        return cls(_positive(value.get('a', 2.0), 'a'), _positive(value.get('b', 4.0), 'b'),
                   _positive(value.get('gamma', 1.0), 'gamma'), mode)


@dataclass(frozen=True)
class CompareEntry:
    dims: Tuple[int, ...] = ()
    tolerance: float = 1e-6
    gd_step: Optional[EpsilonValue] = None  # number, "inverse_l0", "auto" or "doubling"

    @classmethod
    def from_value(cls, value: Optional[Mapping[str, Any]]) -> 'CompareEntry':
        value = value or {}
        dims = tuple(int(d) for d in value.get('dims', ()))
        if any(d < 1 for d in dims):
            raise ConfigurationError("compare.dims must be positive integers", {'dims': dims})
        gd_step = value.get('gd_step')
        if gd_step is not None and gd_step != "doubling":
            gd_step = _epsilon(gd_step, 'compare.gd_step')
        return cls(dims, _positive(value.get('tolerance', 1e-6), 'tolerance'), gd_step)


@dataclass
class ExperimentConfig:
    objective_name: str
    objective_params: Dict[str, Any] = field(default_factory=dict)
    kinetic: KineticEntry = field(default_factory=KineticEntry)
    methods: List[MethodEntry] = field(default_factory=list)
    epsilon: EpsilonValue = "auto"
    gamma: float = 0.5
    x0: Any = None
    p0: Any = None
    stop: StopEntry = field(default_factory=StopEntry)
    out_dir: Optional[str] = None
    stride: int = 1
    seed: int = 0
    ode: OdeEntry = field(default_factory=OdeEntry)
    lower: LowerEntry = field(default_factory=LowerEntry)
    compare: CompareEntry = field(default_factory=CompareEntry)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> 'ExperimentConfig':
        if not isinstance(data, Mapping):
            raise ConfigurationError("An experiment document must be a JSON object")

        objective = data.get('objective')
        if isinstance(objective, str):
            objective = {'name': objective}
        if not isinstance(objective, Mapping) or 'name' not in objective:
            raise MissingFieldError("The experiment needs an objective with a name")

        methods = data.get('methods', data.get('method', []))
        if isinstance(methods, (str, dict)):
            methods = [methods]
        output = data.get('output', {})
        stride = int(output.get('stride', 1))
        if stride < 1:
            raise ConfigurationError("output.stride must be at least 1", {'stride': stride})

        x0 = data.get('x0')
        if isinstance(x0, str) and x0 != "random":
            raise ConfigurationError("x0 must be a list, a number or 'random'", {'x0': x0})

        return cls(
            objective_name=str(objective['name']),
            objective_params=dict(objective.get('params', {})),
            kinetic=KineticEntry.from_value(data.get('kinetic')),
            methods=[MethodEntry.from_value(entry) for entry in methods],
            epsilon=_epsilon(data.get('epsilon', 'auto'), 'experiment'),
            gamma=_positive(data.get('gamma', 0.5), 'gamma'),
            x0=x0,
            p0=data.get('p0'),
            stop=StopEntry.from_value(data.get('stop')),
            out_dir=output.get('dir'),
            stride=stride,
            seed=int(data.get('seed', 0)),
            ode=OdeEntry.from_value(data.get('ode')),
            lower=LowerEntry.from_value(data.get('lower')),
            compare=CompareEntry.from_value(data.get('compare')),
        )

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> 'ExperimentConfig':
        return cls.from_dict(read_json(Path(path)))

    def require_methods(self):
        if not self.methods:
            raise ConfigurationError("The experiment lists no methods")
