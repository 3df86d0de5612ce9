import dataclasses
import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path

from src.agents import AgentConfig
from src.errors import ConfigurationError
from src.imageops import AugmentationSpec
from src.mappings import ablation_labels, agent_labels
from src.nets import NetConfig
from src.pixelenv import EnvConfig
from src.spd_objectives import SpdConfig

logger = logging.getLogger(__name__)

# Section name in the flat text -> attribute on TrainConfig.
SECTIONS = {
    "env": "env",
    "aug": "aug",
    "net": "net",
    "spd": "spd",
    "agent": "agent",
}

# Keys left out of the resume hash so a finished run can be extended.
RESUME_EXEMPT_KEYS = ("train.total_steps",)


@dataclass
class TrainConfig:
    """Every knob of one training run, grouped by the module that reads it."""

    env: EnvConfig = field(default_factory=EnvConfig)
    aug: AugmentationSpec = field(default_factory=AugmentationSpec)
    net: NetConfig = field(default_factory=NetConfig)
    spd: SpdConfig = field(default_factory=SpdConfig)
    agent: AgentConfig = field(default_factory=AgentConfig)
    total_steps: int = 500_000
    eval_interval: int = 5_000
    eval_episodes: int = 10
    seeds: tuple = (1,)
    log_interval: int = 1
    profile: str = "full"

    def __post_init__(self):
        self.seeds = tuple(int(s) for s in self.seeds)
        if not self.seeds:
            raise ConfigurationError("train.seeds needs at least one seed")
        if self.total_steps < 1 or self.eval_interval < 1:
            raise ConfigurationError("train.total_steps and train.eval_interval must be >= 1")
        if self.total_steps % self.eval_interval != 0:
            raise ConfigurationError(
                f"train.eval_interval ({self.eval_interval}) must divide "
                f"train.total_steps ({self.total_steps})"
            )
        if self.eval_interval % self.env.action_repeat != 0:
            raise ConfigurationError(
                "train.eval_interval must be a multiple of env.action_repeat"
            )
        if self.eval_episodes < 1 or self.log_interval < 1:
            raise ConfigurationError("train.eval_episodes and train.log_interval must be >= 1")
        if self.spd.ablation_mode not in ablation_labels:
            raise ConfigurationError(f"Unknown spd.ablation_mode '{self.spd.ablation_mode}'")
        if self.agent.kind not in agent_labels:
            raise ConfigurationError(f"Unknown agent.kind '{self.agent.kind}'")

    @property
    def true_steps(self):
        """Agent-visible environment steps: raw steps divided by action repeat."""
        return self.total_steps // self.env.action_repeat

    @property
    def eval_every(self):
        return self.eval_interval // self.env.action_repeat


def format_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (tuple, list)):
        return ",".join(format_value(v) for v in value)
    return str(value)


def parse_value(raw, default, key):
    """Parses text into the type of the field's default value."""
    text = raw.strip()
    try:
        if isinstance(default, bool):
            lowered = text.lower()
            if lowered in ("true", "1", "yes", "on"):
                return True
            if lowered in ("false", "0", "no", "off"):
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, tuple):
            item_type = type(default[0]) if default else str
            parts = [p for p in text.split(",") if p.strip()]
            return tuple(parse_value(p, item_type(), key) for p in parts)
    except ValueError:
        raise ConfigurationError(f"Cannot parse {key} = '{raw}'") from None
    return text


def to_flat(config):
    """Flattens a TrainConfig into {'section.key': value}."""
    flat = {}
    for f in dataclasses.fields(config):
        value = getattr(config, f.name)
        if f.name in SECTIONS:
            for inner in dataclasses.fields(value):
                flat[f"{f.name}.{inner.name}"] = getattr(value, inner.name)
        else:
            flat[f"train.{f.name}"] = value
    return flat


def from_flat(values):
    """Builds a TrainConfig from string or typed values keyed by dotted names."""
    defaults = to_flat(TrainConfig())
    unknown = sorted(set(values) - set(defaults))
    if unknown:
        raise ConfigurationError(f"Unknown config keys: {', '.join(unknown)}")

    merged = dict(defaults)
    for key, value in values.items():
        merged[key] = parse_value(value, defaults[key], key) if isinstance(value, str) else value

    sections = {}
    top = {}
    for key, value in merged.items():
        section, name = key.split(".", 1)
        if section == "train":
            top[name] = value
        else:
            sections.setdefault(section, {})[name] = value

    blank = TrainConfig()
    try:
        built = {
            name: type(getattr(blank, name))(**kwargs) for name, kwargs in sections.items()
        }
        return TrainConfig(**built, **top)
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigurationError):
            raise
        raise ConfigurationError(str(e)) from e


def parse_config_text(text):
    """Reads 'key = value' lines; '#' starts a comment."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"Line {lineno}: expected 'key = value', got '{line}'")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def parse_overrides(overrides):
    """Turns ['spd.lambda_psi=0.2', ...] into a dict, rejecting malformed items."""
    values = {}
    for item in overrides or []:
        if "=" not in item:
            raise ConfigurationError(f"Malformed override '{item}' (expected key=value)")
        key, value = item.split("=", 1)
        key = key.strip()
        if not key or "." not in key:
            raise ConfigurationError(f"Malformed override key in '{item}'")
        values[key] = value.strip()
    return values


def load_config(path=None, overrides=None):
    """Loads a profile file (optional) and applies dotted overrides on top."""
    values = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigurationError(f"Config file not found: {path}")
        values.update(parse_config_text(path.read_text(encoding="utf-8")))
    values.update(parse_overrides(overrides))
    config = from_flat(values)
    logger.debug("Loaded config %s with %d overrides", path, len(overrides or []))
    return config


def canonical_text(config, exclude=()):
    flat = to_flat(config)
    lines = [f"{key} = {format_value(flat[key])}" for key in sorted(flat) if key not in exclude]
    return "\n".join(lines) + "\n"


def config_hash(config):
    return hashlib.sha256(canonical_text(config).encode("utf-8")).hexdigest()


def resume_hash(config):
    text = canonical_text(config, exclude=RESUME_EXEMPT_KEYS)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def write_manifest(config, run_dir):
    """Writes the fully resolved config so every run describes itself."""
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    path = run_dir / "config.txt"
    header = f"# config_hash = {config_hash(config)}\n"
    path.write_text(header + canonical_text(config), encoding="utf-8")
    return path


def with_overrides(config, values):
    """Returns a copy of config with {'spd.lambda_psi': 0.2}-style values replaced."""
    flat = to_flat(config)
    for key, value in values.items():
        if key not in flat:
            raise ConfigurationError(f"Unknown config key '{key}'")
        flat[key] = value
    return from_flat(flat)
