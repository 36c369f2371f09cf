"""Run configuration: dataclasses plus a versioned JSON schema.

A config file is a JSON object.  ``preset`` names a built-in configuration
whose fields the remaining keys override; unknown keys are rejected.

Example::

    {
      "schema_version": 1,
      "preset": "landau25",
      "scheme": "implicit",
      "cfl": 5.0,
      "output": {"dir": "runs/landau", "snapshot_stride": 1000}
    }
"""
import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

from .errors import ConfigError
from .implicit import SolverSettings

__all__ = [
    "SCHEMA_VERSION",
    "PhysicsConfig",
    "MeshConfig",
    "OutputConfig",
    "RunConfig",
    "config_from_dict",
    "load_config",
    "loads_config",
    "apply_overrides",
]

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class PhysicsConfig:
    """Model parameters and initial condition.

    ``ic`` is one of ``'landau'``, ``'cdiaw'`` or ``'equilibrium'``.
    """

    ic: str = "landau"
    mass_ratio: float = 25.0
    temp_ratio: float = 2.0
    v_de: float = 0.0
    A: float = 0.5
    kappa: float = 0.5
    E_tf: float = 0.0
    N_max: int = 1
    ion_variance: str = "thermal"


@dataclass(frozen=True)
class MeshConfig:
    L: float = 12.566370614359172
    N_x: int = 100
    V_ce: float = 8.0
    V_ci: float = 1.1313708498984762
    N_ve: int = 200
    N_vi: int = 200


@dataclass(frozen=True)
class OutputConfig:
    """Output directory and cadence.

    ``scalar_stride`` and ``snapshot_stride`` count steps (0 disables
    snapshots); ``snapshot_times`` are hit exactly by clipping the step.
    """

    dir: str = "out"
    scalar_stride: int = 1
    snapshot_stride: int = 0
    snapshot_times: tuple = ()


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce one simulation."""

    physics: PhysicsConfig = field(default_factory=PhysicsConfig)
    mesh: MeshConfig = field(default_factory=MeshConfig)
    k: int = 2
    scheme: str = "explicit"
    cfl: float = 0.13
    dt: float = None
    t_end: float = 100.0
    jext_mode: str = "zero"
    solver: SolverSettings = field(default_factory=SolverSettings)
    seed: int = 0
    output: OutputConfig = field(default_factory=OutputConfig)
    preset: str = None
    initial_snapshot: str = None
    energy_checks: bool = True
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        validate(self)

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["output"]["snapshot_times"] = list(d["output"]["snapshot_times"])
        d["schema_version"] = SCHEMA_VERSION
        return d

    def hash(self):
        """SHA-256 of the canonical JSON form."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


_SECTIONS = {"physics": PhysicsConfig, "mesh": MeshConfig, "solver": SolverSettings, "output": OutputConfig}


def _positive(value, name, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name}: expected a number, got {value!r}")
    if integer and int(value) != value:
        raise ConfigError(f"{name}: expected an integer, got {value!r}")
    if not value > 0:
        raise ConfigError(f"{name}: must be positive, got {value!r}")


def validate(cfg):
    """Check ranges and cross-field constraints, raising :class:`ConfigError`."""
    p, m = cfg.physics, cfg.mesh
    if p.ic not in ("landau", "cdiaw", "equilibrium"):
        raise ConfigError(f"physics.ic: unknown initial condition {p.ic!r}")
    for name in ("mass_ratio", "temp_ratio"):
        _positive(getattr(p, name), f"physics.{name}")
    if p.mass_ratio < 1:
        raise ConfigError("physics.mass_ratio: must be >= 1")
    if p.ion_variance not in ("thermal", "literal"):
        raise ConfigError(f"physics.ion_variance: unknown convention {p.ion_variance!r}")
    if p.ic == "landau":
        _positive(p.kappa, "physics.kappa")
    if p.ic == "cdiaw":
        _positive(p.N_max, "physics.N_max", integer=True)
        if cfg.jext_mode != "j0":
            raise ConfigError("jext_mode: the cdiaw initial condition requires 'j0'")
    for name in ("L", "V_ce", "V_ci"):
        _positive(getattr(m, name), f"mesh.{name}")
    for name in ("N_x", "N_ve", "N_vi"):
        _positive(getattr(m, name), f"mesh.{name}", integer=True)
    if isinstance(cfg.k, bool) or not isinstance(cfg.k, int) or not 0 <= cfg.k <= 15:
        raise ConfigError(f"k: must be an integer in [0, 15], got {cfg.k!r}")
    if cfg.energy_checks and cfg.k < 2:
        raise ConfigError("k: energy conservation needs k >= 2 (set energy_checks false to allow lower degree)")
    if cfg.scheme not in ("explicit", "implicit"):
        raise ConfigError(f"scheme: must be 'explicit' or 'implicit', got {cfg.scheme!r}")
    if cfg.jext_mode not in ("zero", "j0"):
        raise ConfigError(f"jext_mode: must be 'zero' or 'j0', got {cfg.jext_mode!r}")
    _positive(cfg.cfl, "cfl")
    if cfg.dt is not None:
        _positive(cfg.dt, "dt")
    if isinstance(cfg.t_end, bool) or not isinstance(cfg.t_end, (int, float)) or cfg.t_end < 0:
        raise ConfigError(f"t_end: must be a non-negative number, got {cfg.t_end!r}")
    if isinstance(cfg.seed, bool) or not isinstance(cfg.seed, int) or not 0 <= cfg.seed < 2 ** 64:
        raise ConfigError(f"seed: must be an integer in [0, 2**64), got {cfg.seed!r}")
    o = cfg.output
    _positive(o.scalar_stride, "output.scalar_stride", integer=True)
    if isinstance(o.snapshot_stride, bool) or not isinstance(o.snapshot_stride, int) or o.snapshot_stride < 0:
        raise ConfigError("output.snapshot_stride: must be a non-negative integer")
    if any(not 0 <= t <= cfg.t_end for t in o.snapshot_times):
        raise ConfigError("output.snapshot_times: every time must lie in [0, t_end]")


def _merge(base, over):
    out = dict(base)
    for key, val in over.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict) and key != "metadata":
            out[key] = _merge(out[key], val)
        else:
            out[key] = val
    return out


def _build_section(cls, data, name):
    if not isinstance(data, dict):
        raise ConfigError(f"{name}: expected an object")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"{name}: unknown key(s) {', '.join(unknown)}")
    if cls is OutputConfig and "snapshot_times" in data:
        data = dict(data, snapshot_times=tuple(float(t) for t in data["snapshot_times"]))
    try:
        return cls(**data)
    except (ConfigError, TypeError) as exc:
        raise ConfigError(f"{name}: {exc}") from None


def config_from_dict(data):
    """Build and validate a :class:`RunConfig` from parsed JSON."""
    from .physics import PRESETS

    if not isinstance(data, dict):
        raise ConfigError("config: top level must be an object")
    data = dict(data)
    version = data.pop("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version: unsupported version {version!r} (expected {SCHEMA_VERSION})")
    preset = data.get("preset")
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"preset: unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        base = PRESETS[preset]().to_dict()
        base.pop("schema_version")
        data = _merge(base, data)
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"config: unknown key(s) {', '.join(unknown)}")
    kwargs = {}
    for key, val in data.items():
        if key in _SECTIONS:
            kwargs[key] = _build_section(_SECTIONS[key], val, key)
        else:
            kwargs[key] = val
    try:
        return RunConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"config: {exc}") from None


def loads_config(text, source="<string>"):
    """Parse JSON text into a :class:`RunConfig`."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    try:
        return config_from_dict(data)
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path):
    """Read and validate a JSON config file."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return loads_config(text, str(path))


def apply_overrides(cfg, assignments):
    """Apply ``dotted.key=value`` overrides; values are parsed as JSON.

    Strings that are not valid JSON are taken verbatim.
    """
    data = cfg.to_dict()
    for item in assignments:
        if "=" not in item:
            raise ConfigError(f"override {item!r}: expected key=value")
        key, raw = item.split("=", 1)
        try:
            val = json.loads(raw)
        except json.JSONDecodeError:
            val = raw
        node = data
        parts = key.strip().split(".")
        for part in parts[:-1]:
            if not isinstance(node.get(part), dict):
                raise ConfigError(f"override {key!r}: {part!r} is not a section")
            node = node[part]
        node[parts[-1]] = val
    return config_from_dict(data)
