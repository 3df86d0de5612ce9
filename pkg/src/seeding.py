import contextlib
import hashlib

import numpy as np
import torch

# Every random stream of a run is derived from one master seed by name.
STREAM_NAMES = ("env", "buffer", "aug_weak", "aug_strong", "init", "agent", "explore", "eval")


def stream_seed(master_seed, name):
    """Stable 63-bit seed for a named sub-stream of master_seed."""
    digest = hashlib.blake2b(f"{int(master_seed)}:{name}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little") & ((1 << 63) - 1)


def torch_generator(master_seed, name):
    gen = torch.Generator(device="cpu")
    gen.manual_seed(stream_seed(master_seed, name))
    return gen


def numpy_rng(master_seed, name):
    return np.random.default_rng(stream_seed(master_seed, name))


@contextlib.contextmanager
def seeded_init(seed):
    """Runs network construction under a fixed torch seed without touching the caller's state."""
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        yield


class RunStreams:
    """The named random streams of one run, with state capture for checkpoints.

    ``aug_stream`` prefixes the two augmentation streams, so two runs that
    differ only in their augmentation stream name share env and init draws.
    """

    def __init__(self, master_seed, aug_stream="aug"):
        self.master_seed = int(master_seed)
        self.aug_stream = aug_stream
        self.torch = {
            "aug_weak": torch_generator(master_seed, f"{aug_stream}_weak"),
            "aug_strong": torch_generator(master_seed, f"{aug_stream}_strong"),
            "agent": torch_generator(master_seed, "agent"),
        }
        self.numpy = {name: numpy_rng(master_seed, name) for name in ("buffer", "explore")}

    def seed_for(self, name):
        return stream_seed(self.master_seed, name)

    def state_dict(self):
        return {
            "torch": {name: gen.get_state() for name, gen in self.torch.items()},
            "numpy": {name: rng.bit_generator.state for name, rng in self.numpy.items()},
        }

    def load_state_dict(self, state):
        for name, gen_state in state["torch"].items():
            self.torch[name].set_state(gen_state)
        for name, rng_state in state["numpy"].items():
            self.numpy[name].bit_generator.state = rng_state


@contextlib.contextmanager
def deterministic_algorithms(warn_only=True):
    """Turns on torch's deterministic kernels for the block, then restores the caller's setting."""
    enabled = torch.are_deterministic_algorithms_enabled()
    was_warn_only = torch.is_deterministic_algorithms_warn_only_enabled()
    torch.use_deterministic_algorithms(True, warn_only=warn_only)
    try:
        yield
    finally:
        torch.use_deterministic_algorithms(enabled, warn_only=was_warn_only)
