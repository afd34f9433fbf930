"""Run configuration: one flat dataclass, a key=value file parser, and presets.

Every knob that distinguishes the desk-scale default from the full-scale
setup lives here so experiments are reproducible from a single file.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from .nn.tensor import ConfigError

__all__ = ["Config", "ConfigError", "load_config", "parse_kv_file", "apply_overrides"]

VARIANTS = ("full", "5s", "30s", "noatt")


@dataclass(frozen=True)
class Config:
    # geometry
    image_size: int = 64
    # network widths (desk scale; full-scale preset doubles everything)
    encoder_channels: tuple[int, ...] = (16, 32, 64, 128)
    encoder_strides: tuple[int, ...] = (1, 2, 1, 2)
    decoder_channels: tuple[int, ...] = (64, 32, 16, 8)
    scorer_channels: tuple[int, ...] = (10, 14, 16)
    gru_hidden: int = 30
    kernel_size: int = 4
    # viewing protocol
    view_seconds: float = 30.0
    memorize_seconds: float = 10.0
    bins: int = 30
    fixation_sigma: float = 0.125
    # simulated observer
    observer_rho: float = 0.8
    observer_weights: tuple[float, ...] = (0.35, 0.20, 0.25, 0.20)  # eyes, nose, mouth, jaw
    phase_switch_seconds: float = 15.0
    distractor_bias: float = 0.6
    # datasets
    n_encoder_faces: int = 20000
    n_trials: int = 300
    split: tuple[int, ...] = (220, 40, 40)
    # training
    batch_size: int = 32
    learning_rate: float = 1e-3
    encoder_epochs: int = 12
    decoder_epochs: int = 20
    scorer_epochs: int = 10
    patience: int = 4
    # evaluation
    eval_seeds: int = 5
    variant: str = "full"
    # service
    host: str = "127.0.0.1"
    port: int = 8000

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.image_size % 4 != 0:
            raise ConfigError("image_size must be divisible by 4 (two stride-2 stages)")
        if len(self.encoder_channels) != len(self.encoder_strides):
            raise ConfigError("encoder_channels and encoder_strides must have equal length")

    @property
    def map_size(self) -> int:
        """Spatial size of the encoder's last conv stack output."""
        s = self.image_size
        for stride in self.encoder_strides:
            s //= stride
        return s

    @property
    def variant_bins(self) -> int:
        """Temporal bin count implied by the active variant."""
        if self.variant == "5s":
            return max(1, int(round(self.view_seconds / 5.0)))
        if self.variant == "30s":
            return 1
        return self.bins

    @property
    def use_attention(self) -> bool:
        return self.variant != "noatt"


def full_scale(cfg: Config | None = None) -> Config:
    """The original-scale preset: 128 px images and doubled channel widths."""
    cfg = cfg or Config()
    return replace(
        cfg,
        image_size=128,
        encoder_channels=(32, 64, 128, 256),
        decoder_channels=(128, 64, 32, 16),
    )


def parse_kv_file(path: str | Path) -> dict[str, str]:
    """Parse a plain ``key = value`` file; '#' starts a comment, blanks ignored."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _coerce(name: str, value: str, default):
    if isinstance(default, bool):
        if value.lower() in ("1", "true", "yes", "on"):
            return True
        if value.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"config key {name}: expected a boolean, got {value!r}")
    if isinstance(default, int):
        return int(value)
    if isinstance(default, float):
        return float(value)
    if isinstance(default, tuple):
        elem = type(default[0])
        return tuple(elem(part.strip()) for part in value.split(",") if part.strip())
    return value


def apply_overrides(cfg: Config, overrides: dict[str, str]) -> Config:
    valid = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
    updates = {}
    for key, value in overrides.items():
        if key not in valid:
            known = ", ".join(sorted(valid))
            raise ConfigError(f"unknown config key {key!r}; valid keys: {known}")
        updates[key] = _coerce(key, value, valid[key]) if isinstance(value, str) else value
    return replace(cfg, **updates)


def load_config(path: str | Path | None, extra: dict[str, str] | None = None) -> Config:
    cfg = Config()
    if path is not None:
        cfg = apply_overrides(cfg, parse_kv_file(path))
    if extra:
        cfg = apply_overrides(cfg, extra)
    return cfg
