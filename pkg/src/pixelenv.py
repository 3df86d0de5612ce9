"""Procedurally rendered point-mass reacher with swappable distractor backgrounds."""

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from src.errors import ConfigurationError, InvalidArgumentError, InvalidStateError
from src.mappings import background_labels, foreground_colors

logger = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".png", ".bmp", ".jpg", ".jpeg", ".ppm", ".gif")

AGENT_RADIUS = 0.09
TRAIL_RADII = (0.075, 0.06, 0.045)
TARGET_RING = (0.10, 0.15)
NUM_CIRCLES = 6


@dataclass
class EnvConfig:
    image_size: int = 84
    frame_stack: int = 3
    action_repeat: int = 4
    episode_length: int = 1000
    background: str = "default"
    frame_dir: str = ""
    # Reward is exp(-k * distance); k = ln 2 gives 0.5 at half-arena distance (1.0).
    reward_k: float = math.log(2.0)
    dt: float = 0.05
    accel: float = 1.0
    velocity_decay: float = 0.9
    trail_spacing: float = 3.0
    seed: int = 0

    def __post_init__(self):
        if self.image_size < 32:
            raise ConfigurationError(f"env.image_size must be >= 32, got {self.image_size}")
        if self.frame_stack < 1 or self.action_repeat < 1:
            raise ConfigurationError("env.frame_stack and env.action_repeat must be >= 1")
        if self.episode_length < self.action_repeat:
            raise ConfigurationError("env.episode_length must cover at least one action repeat")
        if self.background not in background_labels:
            raise ConfigurationError(f"Unknown env.background '{self.background}'")

    @property
    def obs_shape(self):
        return (3 * self.frame_stack, self.image_size, self.image_size)

    @property
    def steps_per_episode(self):
        """Agent-visible steps per episode."""
        return math.ceil(self.episode_length / self.action_repeat)


@dataclass
class PhysState:
    agent_pos: np.ndarray = field(default_factory=lambda: np.zeros(2))
    agent_vel: np.ndarray = field(default_factory=lambda: np.zeros(2))
    target_pos: np.ndarray = field(default_factory=lambda: np.zeros(2))
    step_count: int = 0

    def copy(self):
        return PhysState(
            self.agent_pos.copy(), self.agent_vel.copy(), self.target_pos.copy(), self.step_count
        )


def reward_fn(state, k):
    distance = float(np.linalg.norm(state.agent_pos - state.target_pos))
    return math.exp(-k * distance)


def physics_step(state, action, config):
    """One raw physics step of the velocity-controlled point mass."""
    vel = config.velocity_decay * state.agent_vel + config.accel * config.dt * action
    pos = state.agent_pos + config.dt * vel
    # Stop at the walls.
    hit = np.abs(pos) > 1.0
    vel = np.where(hit, 0.0, vel)
    pos = np.clip(pos, -1.0, 1.0)
    return PhysState(pos, vel, state.target_pos.copy(), state.step_count + 1)


def _pixel_grid(size):
    """Arena coordinates of pixel centres; row 0 is the top (y = +1)."""
    centres = (np.arange(size) + 0.5) / size * 2.0 - 1.0
    xs = centres[None, :].repeat(size, axis=0)
    ys = -centres[:, None].repeat(size, axis=1)
    return ys, xs


def _disc(ys, xs, centre, radius):
    return (ys - centre[1]) ** 2 + (xs - centre[0]) ** 2 <= radius**2


def foreground_layers(state, config):
    """(mask, colour) pairs in painting order. All foreground is opaque."""
    ys, xs = _pixel_grid(config.image_size)
    layers = []
    d2 = (ys - state.target_pos[1]) ** 2 + (xs - state.target_pos[0]) ** 2
    ring = (d2 >= TARGET_RING[0] ** 2) & (d2 <= TARGET_RING[1] ** 2)
    layers.append((ring, foreground_colors["target"]))

    # Motion trail: discs behind the agent, oldest painted first.
    for k in reversed(range(len(TRAIL_RADII))):
        back = state.agent_pos - (k + 1) * config.trail_spacing * config.dt * state.agent_vel
        layers.append((_disc(ys, xs, back, TRAIL_RADII[k]), foreground_colors["trail"][k]))
    layers.append((_disc(ys, xs, state.agent_pos, AGENT_RADIUS), foreground_colors["agent"]))
    return layers


def foreground_mask(state, config):
    mask = np.zeros((config.image_size, config.image_size), dtype=bool)
    for layer, _ in foreground_layers(state, config):
        mask |= layer
    return mask


def _quantize(frame):
    """Rounds to 8-bit levels so frames survive uint8 storage bit-exactly."""
    return (np.round(np.clip(frame, 0.0, 1.0) * 255.0) / 255.0).astype(np.float32)


def _value_noise(lattice, ys, xs):
    """Periodic smooth value noise sampled at lattice coordinates (ys, xs)."""
    n = lattice.shape[0]
    y0 = np.floor(ys)
    x0 = np.floor(xs)
    fy = ys - y0
    fx = xs - x0
    fy = fy * fy * (3.0 - 2.0 * fy)
    fx = fx * fx * (3.0 - 2.0 * fx)
    y0 = y0.astype(np.int64) % n
    x0 = x0.astype(np.int64) % n
    y1 = (y0 + 1) % n
    x1 = (x0 + 1) % n
    top = lattice[y0, x0] * (1 - fx) + lattice[y0, x1] * fx
    bottom = lattice[y1, x0] * (1 - fx) + lattice[y1, x1] * fx
    return top * (1 - fy) + bottom * fy


def load_frame_directory(frame_dir, image_size):
    """Lexicographically ordered RGB frames, resized to image_size, as (3, H, W) floats."""
    folder = Path(frame_dir) if frame_dir else None
    if folder is None or not folder.is_dir():
        raise ConfigurationError(f"Frame directory not found: '{frame_dir}'")
    files = sorted(p for p in folder.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if not files:
        raise ConfigurationError(f"Frame directory '{frame_dir}' holds no image files")

    frames = []
    for path in files:
        with Image.open(path) as img:
            img = img.convert("RGB").resize((image_size, image_size), Image.BILINEAR)
            frames.append(np.asarray(img, dtype=np.float32).transpose(2, 0, 1) / 255.0)
    logger.info("Loaded %d background frames from %s", len(frames), folder)
    return np.stack(frames)


class BackgroundStream:
    """Background of one kind; (kind, seed, phase) fixes the rendered frame."""

    def __init__(self, kind, image_size, seed=0, frame_dir="", frames=None):
        if kind not in background_labels:
            raise ConfigurationError(f"Unknown background kind '{kind}'")
        self.kind = kind
        self.image_size = image_size
        self.frame_dir = frame_dir
        self.phase = 0
        self._frames = frames
        if kind == "frame_directory" and self._frames is None:
            self._frames = load_frame_directory(frame_dir, image_size)
        self._grid = _pixel_grid(image_size)
        self.reset(seed)

    def reset(self, seed):
        """Draws the per-episode background parameters from seed and rewinds the phase."""
        self.seed = int(seed)
        self.phase = 0
        rng = np.random.default_rng(self.seed)
        if self.kind == "simple_distractor":
            self.params = {
                "colors": rng.uniform(0.15, 1.0, size=(NUM_CIRCLES, 3)),
                "radii": rng.uniform(0.10, 0.25, size=NUM_CIRCLES),
                "amplitude": rng.uniform(0.4, 0.9, size=(NUM_CIRCLES, 2)),
                "freq": rng.uniform(0.05, 0.15, size=(NUM_CIRCLES, 2)),
                "offset": rng.uniform(0.0, 2 * math.pi, size=(NUM_CIRCLES, 2)),
                "base": rng.uniform(0.0, 0.25, size=3),
            }
        elif self.kind == "textured_video":
            octaves = (4, 8, 16)
            self.params = {
                "lattices": [rng.uniform(0.0, 1.0, size=(n, n)) for n in octaves],
                "velocity": [rng.uniform(-0.06, 0.06, size=2) * n / 4 for n in octaves],
                "palette": rng.uniform(0.0, 1.0, size=(3, 3)),
            }
        elif self.kind == "frame_directory":
            self.params = {"start": int(rng.integers(0, len(self._frames)))}
        else:
            self.params = {}
        return self

    def advance(self, steps=1):
        self.phase += steps

    def frame(self, phase=None):
        """Background as a (3, H, W) float array in [0, 1]."""
        phase = self.phase if phase is None else phase
        ys, xs = self._grid
        size = self.image_size

        if self.kind == "default":
            # Static floor: vertical gradient plus a faint grid.
            shade = 0.35 + 0.15 * (ys + 1.0) / 2.0
            lines = (np.abs(np.sin(xs * 4 * math.pi)) < 0.05) | (np.abs(np.sin(ys * 4 * math.pi)) < 0.05)
            base = np.where(lines, shade + 0.08, shade)
            return np.stack((base * 0.8, base * 0.9, base * 1.1)).clip(0.0, 1.0)

        if self.kind == "simple_distractor":
            p = self.params
            img = np.broadcast_to(p["base"][:, None, None], (3, size, size)).copy()
            centres = p["amplitude"] * np.sin(p["freq"] * phase + p["offset"])
            pixel = 2.0 / size
            for i in range(NUM_CIRCLES):
                d = np.sqrt((xs - centres[i, 0]) ** 2 + (ys - centres[i, 1]) ** 2)
                # Anti-aliased edge so sub-pixel motion still changes pixels.
                alpha = np.clip((p["radii"][i] - d) / pixel + 0.5, 0.0, 1.0)
                img = img * (1 - alpha) + p["colors"][i][:, None, None] * alpha
            return img.clip(0.0, 1.0)

        if self.kind == "textured_video":
            p = self.params
            total = np.zeros((size, size))
            weight_sum = 0.0
            for octave, (lattice, velocity) in enumerate(zip(p["lattices"], p["velocity"])):
                n = lattice.shape[0]
                gy = (ys + 1.0) / 2.0 * n + velocity[0] * phase
                gx = (xs + 1.0) / 2.0 * n + velocity[1] * phase
                weight = 0.5**octave
                total += weight * _value_noise(lattice, gy, gx)
                weight_sum += weight
            v = total / weight_sum
            palette = p["palette"]
            low = np.clip(2.0 * v, 0.0, 1.0)
            high = np.clip(2.0 * v - 1.0, 0.0, 1.0)
            img = (
                palette[0][:, None, None] * (1 - low)
                + palette[1][:, None, None] * (low - high)
                + palette[2][:, None, None] * high
            )
            return img.clip(0.0, 1.0)

        index = (self.params["start"] + phase) % len(self._frames)
        return self._frames[index].copy()

    def state_dict(self):
        return {"kind": self.kind, "seed": self.seed, "phase": self.phase}

    def load_state_dict(self, state):
        if state["kind"] != self.kind:
            raise InvalidStateError("background kind does not match the checkpoint")
        self.reset(state["seed"])
        self.phase = int(state["phase"])


def render(state, background, config):
    """Background first, then the target ring, trail and agent composited on top."""
    img = background.frame().astype(np.float64)
    for mask, colour in foreground_layers(state, config):
        img[:, mask] = np.asarray(colour)[:, None]
    return _quantize(img)


def make_background(config, kind=None, seed=0):
    return BackgroundStream(kind or config.background, config.image_size, seed, config.frame_dir)


class PixelControlEnv:
    """Velocity-controlled reacher observed only through stacked RGB frames."""

    action_dim = 2

    def __init__(self, config, seed=None, background=None):
        self.config = config
        self.seed = config.seed if seed is None else int(seed)
        self._rng = np.random.default_rng(self.seed)
        self.background = background or make_background(config)
        self.state = PhysState()
        self.frames = deque(maxlen=config.frame_stack)
        self.done = True
        self.episode = 0

    @property
    def obs_shape(self):
        return self.config.obs_shape

    def _observation(self):
        return np.concatenate(list(self.frames), axis=0)

    def reset(self, seed=None):
        """Re-initializes physics and background; returns frame_stack copies of the first frame."""
        if seed is not None:
            self.seed = int(seed)
            self._rng = np.random.default_rng(self.seed)
        agent = self._rng.uniform(-0.8, 0.8, size=2)
        target = self._rng.uniform(-0.8, 0.8, size=2)
        bg_seed = int(self._rng.integers(0, 2**31 - 1))
        self.state = PhysState(agent, np.zeros(2), target, 0)
        self.background.reset(bg_seed)
        first = render(self.state, self.background, self.config)
        self.frames.clear()
        for _ in range(self.config.frame_stack):
            self.frames.append(first)
        self.done = False
        self.episode += 1
        return self._observation()

    def step(self, action):
        """Repeats the action for action_repeat raw steps; reward is summed over them."""
        if self.done:
            raise InvalidStateError("step() called on a finished episode; call reset() first")
        action = np.clip(np.asarray(action, dtype=np.float64).reshape(self.action_dim), -1.0, 1.0)

        reward = 0.0
        for _ in range(self.config.action_repeat):
            self.state = physics_step(self.state, action, self.config)
            self.background.advance()
            reward += reward_fn(self.state, self.config.reward_k)
            if self.state.step_count >= self.config.episode_length:
                self.done = True
                break

        self.frames.append(render(self.state, self.background, self.config))
        return self._observation(), reward, self.done

    def paired_observation(self, state, bg_a, bg_b):
        """The identical physical state rendered over two backgrounds."""
        obs = []
        for bg in (bg_a, bg_b):
            frame = render(state, bg, self.config)
            obs.append(np.concatenate([frame] * self.config.frame_stack, axis=0))
        return obs[0], obs[1]

    def state_dict(self):
        return {
            "rng": self._rng.bit_generator.state,
            "phys": self.state.copy(),
            "background": self.background.state_dict(),
            "frames": [f.copy() for f in self.frames],
            "done": self.done,
            "episode": self.episode,
            "seed": self.seed,
        }

    def load_state_dict(self, state):
        self._rng.bit_generator.state = state["rng"]
        self.state = state["phys"].copy()
        self.background.load_state_dict(state["background"])
        self.frames.clear()
        self.frames.extend(f.copy() for f in state["frames"])
        self.done = state["done"]
        self.episode = state["episode"]
        self.seed = state["seed"]


def make_env(config, seed=None, background=None):
    """Environment over config.background, or over the named background kind."""
    bg = make_background(config, background) if isinstance(background, str) or background is None else background
    return PixelControlEnv(config, seed=seed, background=bg)
