"""
Experiment configuration: JSON document parsed into nested dataclasses.

Unknown keys are rejected at every nesting level; ``ExperimentConfig.from_dict``
and ``to_dict`` round-trip exactly.
"""
from dataclasses import dataclass, field, fields, asdict, is_dataclass
from typing import Dict, Any, List, Optional, Union, get_type_hints, get_origin, get_args

from models.measures import GridSpec, W2_METHODS
from models.report import CLAIMS
from services.exceptions import ValidationError

EXPERIMENTS = ('simulate', 'stationary', 'wasserstein', 'verify', 'hopfield-demo', 'fpe-solve', 'lemma-report')
MEASURE_KINDS = ('dirac', 'gaussian', 'uniform_disk', 'uniform_box')


@dataclass
class FieldSelection:
    name: str
    params: Dict[str, Any] = field(default_factory=dict)


@dataclass
class MeasureSpec:
    """Initial measure; ``scale`` is the std (gaussian), radius (disk) or half-width (box)."""
    kind: str = 'gaussian'
    center: List[float] = field(default_factory=lambda: [0.0, 0.0])
    scale: float = 1.0


@dataclass
class GridConfig:
    x_min: float = -4.0
    x_max: float = 4.0
    n_x: int = 80
    y_min: float = -4.0
    y_max: float = 4.0
    n_y: int = 80

    def to_spec(self) -> GridSpec:
        return GridSpec(self.x_min, self.x_max, self.n_x, self.y_min, self.y_max, self.n_y)


@dataclass
class NumericsConfig:
    dt: float = 0.01
    T: float = 10.0
    N: int = 2000
    n_pairs: int = 200
    seed: int = 0
    tol: float = 1e-6
    kernel_variance: float = 2.0
    record_every: float = 0.1
    w2_method: str = 'exact_assignment'
    scheme: str = 'upwind'
    fpe_dt: Optional[float] = None
    max_steps: int = 200000
    sample_box: float = 3.0


@dataclass
class GeometryConfig:
    x_a: Optional[List[float]] = None
    x_b: Optional[List[float]] = None
    r: Optional[float] = None
    x_star: Optional[List[float]] = None
    r_star: Optional[float] = None
    r_max: float = 1.0
    start_radius: Optional[float] = None
    n_nodes: int = 256


@dataclass
class ExperimentConfig:
    experiment: str
    claim: Optional[str] = None
    name: Optional[str] = None
    drift: Optional[FieldSelection] = None
    diffusion: Optional[FieldSelection] = None
    alt_diffusion: Optional[FieldSelection] = None
    initial: MeasureSpec = field(default_factory=MeasureSpec)
    initial_alt: Optional[MeasureSpec] = None
    numerics: NumericsConfig = field(default_factory=NumericsConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    output_dir: str = 'output'

    def __post_init__(self):
        self.validate()

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        return f"{self.experiment}-{self.claim}" if self.claim else self.experiment

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ValidationError(f"Unknown experiment '{self.experiment}', expected one of {EXPERIMENTS}", key='experiment')
        if self.experiment == 'verify':
            if self.claim not in CLAIMS:
                raise ValidationError(f"verify needs a claim in {CLAIMS}, got '{self.claim}'", key='claim')
        elif self.claim is not None:
            raise ValidationError(f"'claim' only applies to verify experiments", key='claim')
        if self.experiment != 'lemma-report' and (self.drift is None or self.diffusion is None):
            raise ValidationError(f"Experiment '{self.experiment}' needs both 'drift' and 'diffusion'", key='drift')
        for spec_key in ('initial', 'initial_alt'):
            spec = getattr(self, spec_key)
            if spec is not None:
                if spec.kind not in MEASURE_KINDS:
                    raise ValidationError(f"Unknown measure kind '{spec.kind}'", key=f'{spec_key}.kind')
                if spec.scale < 0:
                    raise ValidationError("Measure scale must be non-negative", key=f'{spec_key}.scale')
        n = self.numerics
        for key in ('dt', 'T', 'tol', 'kernel_variance', 'record_every', 'sample_box'):
            if getattr(n, key) <= 0:
                raise ValidationError(f"numerics.{key} must be positive, got {getattr(n, key)}", key=f'numerics.{key}')
        for key in ('N', 'n_pairs', 'max_steps'):
            if getattr(n, key) < 1:
                raise ValidationError(f"numerics.{key} must be at least 1, got {getattr(n, key)}", key=f'numerics.{key}')
        if n.fpe_dt is not None and n.fpe_dt <= 0:
            raise ValidationError("numerics.fpe_dt must be positive", key='numerics.fpe_dt')
        if n.w2_method not in W2_METHODS:
            raise ValidationError(f"Unknown W2 method '{n.w2_method}'", key='numerics.w2_method')
        if n.record_every < n.dt:
            raise ValidationError("numerics.record_every must be at least dt", key='numerics.record_every')
        try:
            self.grid.to_spec()
        except ValueError as e:
            raise ValidationError(str(e), key='grid') from e
        g = self.geometry
        for key in ('r', 'r_star', 'r_max', 'start_radius'):
            value = getattr(g, key)
            if value is not None and value <= 0:
                raise ValidationError(f"geometry.{key} must be positive", key=f'geometry.{key}')

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ExperimentConfig':
        return _build(cls, data, '')


def _unwrap_optional(tp):
    if get_origin(tp) is Union:
        args = [a for a in get_args(tp) if a is not type(None)]
        if len(args) == 1:
            return args[0]
    return tp


def _build(cls, data: Any, path: str):
    if not isinstance(data, dict):
        raise ValidationError(f"Expected an object at '{path or '<root>'}'", key=path or None)
    hints = get_type_hints(cls)
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        key = f"{path}.{unknown[0]}" if path else unknown[0]
        raise ValidationError(f"Unknown configuration key '{key}'", key=key)
    kwargs = {}
    for name, value in data.items():
        key = f"{path}.{name}" if path else name
        target = _unwrap_optional(hints[name])
        if value is not None and is_dataclass(target):
            kwargs[name] = _build(target, value, key)
        else:
            kwargs[name] = value
    try:
        return cls(**kwargs)
    except TypeError as e:
        raise ValidationError(f"Invalid configuration at '{path or '<root>'}': {e}", key=path or None) from e
