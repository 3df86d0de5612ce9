"""Versioned checkpoint container: named float32 parameter arrays plus a manifest."""

import logging
from pathlib import Path

import torch

from src.errors import ConfigurationError, InvalidStateError

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
CHECKPOINT_NAME = "checkpoint.pt"


def collect_parameters(modules):
    """{'encoder.fc.weight': tensor, ...} as contiguous row-major float32 copies."""
    params = {}
    for prefix, module in modules.items():
        for name, tensor in module.state_dict().items():
            params[f"{prefix}.{name}"] = tensor.detach().to(torch.float32).contiguous().clone()
    return params


def restore_parameters(modules, params):
    for prefix, module in modules.items():
        head = f"{prefix}."
        state = {k[len(head):]: v for k, v in params.items() if k.startswith(head)}
        if not state:
            raise InvalidStateError(f"checkpoint holds no parameters for '{prefix}'")
        module.load_state_dict(state)


def save_checkpoint(path, modules, manifest, state=None):
    """Writes atomically: temp file first, then rename over the old checkpoint."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "format_version": FORMAT_VERSION,
        "manifest": dict(manifest),
        "params": collect_parameters(modules),
        "state": state or {},
    }
    tmp = path.with_suffix(path.suffix + ".tmp")
    torch.save(payload, tmp)
    tmp.replace(path)
    logger.info("Checkpoint saved: %s (step %s)", path, manifest.get("step"))
    return path


def load_checkpoint(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"No checkpoint at {path}")
    payload = torch.load(path, map_location="cpu", weights_only=False)
    version = payload.get("format_version")
    if version != FORMAT_VERSION:
        raise InvalidStateError(f"Unsupported checkpoint format {version} (expected {FORMAT_VERSION})")
    return payload
