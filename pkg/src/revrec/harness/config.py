"""Experiment configuration.

The on-disk format is plain text, one ``section.key = value`` per line, ``#``
starting a comment. Lists are comma separated; ``none`` clears an optional
value. Relative paths are resolved against the directory of the file.
"""

from __future__ import annotations

import dataclasses
import hashlib
import typing
from importlib import resources
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

from ..errors import ConfigurationError


@dataclass
class DataConfig:
    dataset: str = "synthetic"
    input: str = ""  # reviews JSONL; empty means a synthetic corpus
    n_users: Optional[int] = None  # keep the most active users (None: all)
    n_items: Optional[int] = None
    strict: bool = False
    max_vocab: int = 100000  # raw dictionary size
    min_doc_freq: int = 10  # reviews a word must appear in to enter the raw dictionary


@dataclass
class SynthConfig:
    n_users: int = 200
    n_items: int = 300
    latent_rank: int = 4
    vocab: int = 600
    noise: float = 0.5
    density: float = 0.15
    style: bool = True


@dataclass
class RatingsConfig:
    profiles: tuple[str, ...] = ("raw", "latent")
    k: int = 16
    lambda_u: float = 0.05
    lambda_i: float = 0.05
    iters: int = 500
    tol: float = 1e-7
    alpha: float = 1.0
    # validation grid for (k, lambda); empty keeps the values above
    grid_k: tuple[int, ...] = ()
    grid_lambda: tuple[float, ...] = ()


@dataclass
class AutoencoderConfig:
    coding_dim: int = 1000
    epochs: int = 10
    lr: float = 0.1
    batch_size: int = 32
    max_vocab: int = 5000
    corruption: float = 0.0


@dataclass
class SummarizerConfig:
    modes: tuple[str, ...] = ("1S", "CT", "XS")
    n: tuple[int, ...] = (1, 2, 3)
    pairs: int = 50  # test pairs scored per mode (0: all)


@dataclass
class SentimentConfig:
    lambdas: tuple[float, ...] = (1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0)
    epochs: int = 10
    center_f: bool = False


@dataclass
class ExperimentConfig:
    seed: int = 0
    output: str = "results"
    data: DataConfig = field(default_factory=DataConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)
    ratings: RatingsConfig = field(default_factory=RatingsConfig)
    autoencoder: AutoencoderConfig = field(default_factory=AutoencoderConfig)
    summarizer: SummarizerConfig = field(default_factory=SummarizerConfig)
    sentiment: SentimentConfig = field(default_factory=SentimentConfig)

    def items(self) -> list[tuple[str, Any]]:
        """All settings as ``(dotted key, value)`` in a fixed order."""
        out = []
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if dataclasses.is_dataclass(value):
                out.extend((f"{f.name}.{g.name}", getattr(value, g.name)) for g in dataclasses.fields(value))
            else:
                out.append((f"run.{f.name}", value))
        return out

    def set(self, key: str, raw: Union[str, Any]) -> None:
        """Set a dotted key; strings are parsed according to the field type."""
        target, name = _resolve(self, key)
        hint = typing.get_type_hints(type(target))[name]
        value = _parse(raw, hint, key) if isinstance(raw, str) else raw
        setattr(target, name, value)

    def to_text(self) -> str:
        return "".join(f"{k} = {_format(v)}\n" for k, v in self.items())

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in self.items()}

    def stage_seed(self, label: str) -> int:
        return stage_seed(self.seed, label)


def stage_seed(root: int, label: str) -> int:
    """A 32-bit seed for one pipeline stage, fixed by the root seed and label."""
    digest = hashlib.sha256(f"{root}:{label}".encode()).digest()
    return int.from_bytes(digest[:4], "little")


def _resolve(cfg: ExperimentConfig, key: str):
    parts = key.strip().split(".")
    if len(parts) != 2:
        raise ConfigurationError(f"config key must look like section.key, got {key!r}")
    section, name = parts
    if section == "run":
        target = cfg
    else:
        target = getattr(cfg, section, None)
        if not dataclasses.is_dataclass(target):
            raise ConfigurationError(f"unknown config section {section!r}")
    if name not in {f.name for f in dataclasses.fields(target)} or dataclasses.is_dataclass(
        getattr(target, name)
    ):
        raise ConfigurationError(f"unknown config key {key!r}")
    return target, name


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _parse(raw: str, hint, key: str):
    raw = raw.strip()
    origin = typing.get_origin(hint)
    args = typing.get_args(hint)
    try:
        if origin is Union:  # Optional[x]
            if raw.lower() in ("none", "all", ""):
                return None
            return _parse(raw, next(a for a in args if a is not type(None)), key)
        if origin is tuple:
            if not raw:
                return ()
            return tuple(_parse(p, args[0], key) for p in raw.split(","))
        if hint is bool:
            if raw.lower() in _TRUE:
                return True
            if raw.lower() in _FALSE:
                return False
            raise ValueError(raw)
        if hint is int:
            return int(raw)
        if hint is float:
            return float(raw)
        return raw
    except ValueError:
        raise ConfigurationError(f"{key}: cannot parse {raw!r} as {hint}") from None


def _format(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    return str(value)


def parse_config(text: str, base_dir: Optional[Path] = None, cfg: Optional[ExperimentConfig] = None
                 ) -> ExperimentConfig:
    cfg = cfg if cfg is not None else ExperimentConfig()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'section.key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key == "run.preset":
            cfg = apply_preset(cfg, value)
            continue
        cfg.set(key, value)
    if base_dir is not None and cfg.data.input and not Path(cfg.data.input).is_absolute():
        cfg.data.input = str(base_dir / cfg.data.input)
    return cfg


def bundled_config(name: str) -> Path:
    """Path of a config shipped with the package, e.g. ``toy``."""
    path = Path(str(resources.files("revrec.data").joinpath(f"{name}.cfg")))
    if not path.exists():
        raise ConfigurationError(f"no bundled config named {name!r}")
    return path


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """Read a config file; a bare name such as ``toy`` selects a bundled one."""
    path = Path(path)
    if not path.exists() and path.suffix == "" and path.parent == Path("."):
        path = bundled_config(path.name)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, path.parent)


# Named subsets of the two public review collections: (dataset, n_users, n_items).
PRESETS: dict[str, tuple[str, int, int]] = {
    "ratebeer_u50_i200": ("ratebeer", 50, 200),
    "ratebeer_u500_i2k": ("ratebeer", 500, 2000),
    "ratebeer_u5k_i20k": ("ratebeer", 5000, 20000),
    "amazon_u200_i120": ("amazon", 200, 120),
    "amazon_u2k_i1k": ("amazon", 2000, 1000),
    "amazon_u20k_i12k": ("amazon", 20000, 12000),
    "amazon_u210k_i120k": ("amazon", 210000, 120000),
}


def apply_preset(cfg: ExperimentConfig, name: str) -> ExperimentConfig:
    """Set the dataset name and subset sizes of a named preset."""
    try:
        _, n_users, n_items = PRESETS[name]
    except KeyError:
        raise ConfigurationError(f"unknown preset {name!r}; known: {', '.join(PRESETS)}") from None
    cfg.data.dataset = name
    cfg.data.n_users = n_users
    cfg.data.n_items = n_items
    return cfg
