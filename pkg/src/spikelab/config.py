"""Run configuration: one YAML file, fully defaulted, unknown keys rejected."""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from .ansatz import ModelParams
from .domain import Resolution
from .errors import ConfigError
from .potentials import PotentialSpec

__all__ = ["SweepConfig", "OutputConfig", "AsymptoticsConfig", "RunConfig", "load_config",
           "parse_config", "section_hash", "DEFAULT_LADDER"]

DEFAULT_LADDER = (0.2, 0.14, 0.1, 0.07, 0.05, 0.035, 0.025)


@dataclass(frozen=True)
class SweepConfig:
    """eps ladders and the bracket for the peak coefficient.

    ``d_bracket`` and ``d_tol`` are in units of ``1/sqrt(omega0)``.
    ``d_policy`` selects where ladder diagnostics sit: ``leading`` uses
    ``d = 1/sqrt(omega0)``, ``root`` the multiplier root at each eps.
    """

    eps: tuple[float, ...] = DEFAULT_LADDER
    coercivity_eps: tuple[float, ...] = (0.1, 0.05, 0.025)
    full_eps: tuple[float, ...] = (0.1, 0.07, 0.05)
    model_eps: tuple[float, ...] = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
    d_bracket: tuple[float, float] = (0.8, 1.2)
    d_tol: float = 2e-3
    d_policy: str = "leading"
    toy: bool = False

    def __post_init__(self):
        for name in ("eps", "coercivity_eps", "full_eps", "model_eps"):
            vals = getattr(self, name)
            if not vals or not all(0 < e < 1 for e in vals):
                raise ConfigError(f"sweep.{name} must be a non-empty list in (0, 1)")
        lo, hi = self.d_bracket
        if not 0 < lo < hi:
            raise ConfigError("sweep.d_bracket must satisfy 0 < lo < hi")
        if self.d_policy not in ("leading", "root"):
            raise ConfigError("sweep.d_policy must be 'leading' or 'root'")


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "spikelab-out"
    formats: tuple[str, ...] = ("csv", "json")
    figures: bool = True

    def __post_init__(self):
        bad = set(self.formats) - {"csv", "json"}
        if bad:
            raise ConfigError(f"outputs.formats has unknown entries {sorted(bad)}")


@dataclass(frozen=True)
class AsymptoticsConfig:
    dims: tuple[int, ...] = (1, 2, 3)
    pairs: tuple[tuple[float, float], ...] = ((1, 3), (2, 2), (1, 1))
    window: tuple[float, float] = (6.0, 12.0)
    samples: int = 13


@dataclass(frozen=True)
class RunConfig:
    model: ModelParams
    grids: Resolution = field(default_factory=Resolution)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    outputs: OutputConfig = field(default_factory=OutputConfig)
    asymptotics: AsymptoticsConfig = field(default_factory=AsymptoticsConfig)
    seed: int = 0

    @property
    def output_dir(self) -> Path:
        return Path(os.environ.get("SPIKELAB_OUTPUT_DIR", self.outputs.dir))

    @property
    def workers(self) -> int:
        raw = os.environ.get("SPIKELAB_WORKERS", "1")
        try:
            n = int(raw)
        except ValueError:
            raise ConfigError(f"SPIKELAB_WORKERS must be an integer, got {raw!r}") from None
        return max(1, n)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["model"]["V"] = json.loads(self.model.V.to_json())
        d["model"]["W"] = json.loads(self.model.W.to_json())
        return d


def section_hash(section) -> str:
    """Content hash of a config section, stable across runs."""
    blob = json.dumps(section, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _lines(node, path=()) -> dict:
    # map key paths to 1-based source lines
    out = {path: node.start_mark.line + 1}
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            out[path + (k.value,)] = k.start_mark.line + 1
            out.update(_lines(v, path + (k.value,)))
    return out


def _build(cls, raw, path, lines, convert=None):
    where = f" (line {lines.get(path, '?')})"
    name = ".".join(path) or "<root>"
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{name} must be a mapping{where}")
    known = {f.name for f in fields(cls)}
    for k in raw:
        if k not in known:
            line = lines.get(path + (k,), "?")
            raise ConfigError(f"unknown key {'.'.join(path + (k,))} (line {line})")
    kw = {}
    for k, v in raw.items():
        if convert and k in convert:
            v = convert[k](v, path + (k,))
        elif isinstance(v, list):
            v = tuple(tuple(x) if isinstance(x, list) else x for x in v)
        kw[k] = v
    try:
        return cls(**kw)
    except ConfigError as exc:
        raise ConfigError(f"{exc}{where}") from None
    except TypeError as exc:
        raise ConfigError(f"{name}: {exc}{where}") from None


def parse_config(text: str) -> RunConfig:
    """Parse YAML text into a :class:`RunConfig`.

    ``model.V`` and ``model.W`` are required blocks; everything else has a
    default.  Errors carry the source line of the offending key.
    """
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from None
    raw = {} if raw is None else raw
    lines = _lines(node) if node is not None else {}
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    model = raw.get("model")
    if not isinstance(model, dict):
        raise ConfigError("missing required block 'model'")
    for blk in ("V", "W"):
        if blk not in model:
            raise ConfigError(f"missing required block 'model.{blk}' (line {lines.get(('model',), '?')})")

    def pot(v, path):
        if not isinstance(v, dict):
            raise ConfigError(f"{'.'.join(path)} must be a mapping (line {lines.get(path, '?')})")
        try:
            return PotentialSpec.from_dict(v)
        except ConfigError as exc:
            raise ConfigError(f"{'.'.join(path)}: {exc} (line {lines.get(path, '?')})") from None

    top = {"model", "grids", "sweep", "outputs", "asymptotics", "seed"}
    for k in raw:
        if k not in top:
            raise ConfigError(f"unknown key {k} (line {lines.get((k,), '?')})")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError(f"seed must be an integer (line {lines.get(('seed',), '?')})")
    return RunConfig(
        model=_build(ModelParams, model, ("model",), lines, {"V": pot, "W": pot}),
        grids=_build(Resolution, raw.get("grids"), ("grids",), lines),
        sweep=_build(SweepConfig, raw.get("sweep"), ("sweep",), lines),
        outputs=_build(OutputConfig, raw.get("outputs"), ("outputs",), lines),
        asymptotics=_build(AsymptoticsConfig, raw.get("asymptotics"), ("asymptotics",), lines),
        seed=seed,
    )


def load_config(path: str | Path) -> RunConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file {p} not found")
    return parse_config(p.read_text())
