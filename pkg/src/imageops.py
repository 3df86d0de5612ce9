"""Seedable batch augmentations and the weak/strong two-way pipeline.

Every operation takes an NCHW float tensor with values in [0, 1] and stacked
RGB frames on the channel axis (channels = 3 x frame_stack), and returns a
tensor of the same shape, clamped back into [0, 1]. Randomness comes only
from the ``generator`` argument, so identical (input, spec, seed) gives
bit-identical output.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import torch
import torch.nn.functional as F

from src.errors import InvalidArgumentError, ShapeError
from src.mappings import luma_weights, strong_techniques


@dataclass
class AugmentationSpec:
    """Configuration shared by the weak (shift) and strong branches."""

    pad_pixels: tuple = (4, 4)
    grayscale_prob: float = 1.0
    jitter_strengths: tuple = (0.1, 0.3, 0.3)
    cutout_size_range: tuple = (0.1, 0.3)
    rng_stream: str = "aug"

    def __post_init__(self):
        self.pad_pixels = _pair(self.pad_pixels)
        self.jitter_strengths = tuple(float(s) for s in self.jitter_strengths)
        self.cutout_size_range = tuple(float(s) for s in self.cutout_size_range)
        if min(self.pad_pixels) < 0:
            raise InvalidArgumentError(f"pad_pixels must be >= 0, got {self.pad_pixels}")
        if not 0.0 <= self.grayscale_prob <= 1.0:
            raise InvalidArgumentError("grayscale_prob must lie in [0, 1]")
        if len(self.jitter_strengths) != 3 or min(self.jitter_strengths) < 0:
            raise InvalidArgumentError("jitter_strengths needs three non-negative values (H, S, V)")
        lo, hi = _size_range(self.cutout_size_range)
        if lo <= 0.0:
            raise InvalidArgumentError("cutout_size_range fractions must lie in (0, 1]")


class TwoWayViews(NamedTuple):
    """Weak and strong views of the current and next observations of one minibatch."""

    obs_weak: torch.Tensor
    next_weak: torch.Tensor
    obs_strong: torch.Tensor = None
    next_strong: torch.Tensor = None


def _pair(pad):
    if isinstance(pad, (tuple, list)):
        values = tuple(int(p) for p in pad)
    else:
        values = (int(pad),)
    if len(values) == 1:
        values = values * 2
    if len(values) != 2:
        raise InvalidArgumentError(f"padding needs one or two values, got {pad}")
    return values


def _size_range(size_range):
    lo, hi = (float(v) for v in size_range)
    if not 0.0 <= lo <= hi <= 1.0:
        raise InvalidArgumentError(f"size range must satisfy 0 <= min <= max <= 1, got {size_range}")
    return lo, hi


def check_batch(batch):
    if batch.dim() != 4:
        raise ShapeError(f"expected [batch, channels, height, width], got {tuple(batch.shape)}")
    if batch.shape[1] % 3 != 0:
        raise ShapeError(f"channels ({batch.shape[1]}) must be a multiple of 3")
    return batch.shape


def random_shift(batch, pad, generator=None, offsets=None):
    """Edge-replicate pad, then crop an HxW window at a per-image offset in [0, 2*pad]."""
    b, c, h, w = check_batch(batch)
    pad_y, pad_x = _pair(pad)
    if pad_y < 0 or pad_x < 0:
        raise InvalidArgumentError("pad must be >= 0")
    if pad_y >= h or pad_x >= w:
        raise InvalidArgumentError(f"pad {pad_y, pad_x} must be smaller than the image {h, w}")

    if offsets is None:
        off_y = torch.randint(0, 2 * pad_y + 1, (b,), generator=generator)
        off_x = torch.randint(0, 2 * pad_x + 1, (b,), generator=generator)
    else:
        forced = torch.as_tensor(offsets, dtype=torch.long).reshape(-1, 2).expand(b, 2)
        off_y, off_x = forced[:, 0], forced[:, 1]
        if (off_y < 0).any() or (off_y > 2 * pad_y).any() or (off_x < 0).any() or (
            off_x > 2 * pad_x
        ).any():
            raise InvalidArgumentError("forced offsets must lie in [0, 2*pad]")

    if pad_y == 0 and pad_x == 0:
        return batch.clone()

    padded = F.pad(batch, (pad_x, pad_x, pad_y, pad_y), mode="replicate")
    rows = off_y[:, None] + torch.arange(h)[None, :]
    cols = off_x[:, None] + torch.arange(w)[None, :]
    images = torch.arange(b)[:, None, None]
    # Advanced indices split by the channel slice land first: (b, h, w, c).
    out = padded[images, :, rows[:, :, None], cols[:, None, :]]
    return out.permute(0, 3, 1, 2).contiguous()


def grayscale(batch, prob, generator=None, mask=None):
    """Replaces every frame of a selected image with its BT.601 luminance."""
    b, c, h, w = check_batch(batch)
    if not 0.0 <= prob <= 1.0:
        raise InvalidArgumentError(f"prob must lie in [0, 1], got {prob}")
    if mask is None:
        mask = torch.rand(b, generator=generator) < prob
    mask = torch.as_tensor(mask, dtype=torch.bool).reshape(b, 1, 1, 1, 1)

    frames = batch.reshape(b, c // 3, 3, h, w)
    weights = torch.tensor(luma_weights, dtype=batch.dtype).reshape(1, 1, 3, 1, 1)
    lum = (frames * weights).sum(dim=2, keepdim=True).clamp(0.0, 1.0).expand_as(frames)
    out = torch.where(mask, lum, frames)
    return out.reshape(b, c, h, w).clamp(0.0, 1.0)


def sample_conv_kernel(generator=None, dtype=torch.float32):
    """3x3, 3-in/3-out kernel with variance 2 / fan_in."""
    fan_in = 3 * 3 * 3
    kernel = torch.randn((3, 3, 3, 3), generator=generator, dtype=torch.float32)
    return (kernel * math.sqrt(2.0 / fan_in)).to(dtype)


def random_convolution(batch, generator=None, kernel=None):
    """Passes each frame through one freshly sampled 3x3 conv (one kernel per call)."""
    b, c, h, w = check_batch(batch)
    if kernel is None:
        kernel = sample_conv_kernel(generator, dtype=batch.dtype)
    kernel = torch.as_tensor(kernel, dtype=batch.dtype)
    if kernel.shape != (3, 3, 3, 3):
        raise ShapeError(f"kernel must be 3x3x3x3, got {tuple(kernel.shape)}")

    frames = batch.reshape(b * (c // 3), 3, h, w)
    padded = F.pad(frames, (1, 1, 1, 1), mode="replicate")
    out = F.conv2d(padded, kernel)
    return out.reshape(b, c, h, w).clamp(0.0, 1.0)


def rgb_to_hsv(rgb):
    """RGB on axis -3 to HSV, all components in [0, 1]."""
    r, g, b = rgb.unbind(dim=-3)
    maxc = rgb.amax(dim=-3)
    minc = rgb.amin(dim=-3)
    delta = maxc - minc
    ones = torch.ones_like(maxc)

    s = delta / torch.where(maxc > 0, maxc, ones)
    safe = torch.where(delta > 0, delta, ones)
    rc = (maxc - r) / safe
    gc = (maxc - g) / safe
    bc = (maxc - b) / safe
    h = torch.where(maxc == r, bc - gc, torch.where(maxc == g, 2.0 + rc - bc, 4.0 + gc - rc))
    h = torch.where(delta > 0, torch.remainder(h / 6.0, 1.0), torch.zeros_like(h))
    return torch.stack((h, s, maxc), dim=-3)


def hsv_to_rgb(hsv):
    h, s, v = hsv.unbind(dim=-3)
    h6 = h * 6.0
    sector = torch.floor(h6)
    f = h6 - sector
    sector = torch.remainder(sector.long(), 6)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))

    red = torch.stack((v, q, p, p, t, v), dim=0)
    green = torch.stack((t, v, v, q, p, p), dim=0)
    blue = torch.stack((p, p, t, v, v, q), dim=0)
    index = sector.unsqueeze(0)
    r = red.gather(0, index).squeeze(0)
    g = green.gather(0, index).squeeze(0)
    b = blue.gather(0, index).squeeze(0)
    return torch.stack((r, g, b), dim=-3)


def color_jitter(batch, strengths, generator=None, shifts=None):
    """Adds per-image uniform noise in [-strength, strength] to H (wrapped), S and V."""
    b, c, h, w = check_batch(batch)
    strengths = torch.as_tensor(strengths, dtype=torch.float64).reshape(3)
    if (strengths < 0).any():
        raise InvalidArgumentError("jitter strengths must be >= 0")
    if shifts is None:
        noise = torch.rand((b, 3), generator=generator, dtype=torch.float64) * 2.0 - 1.0
        shifts = noise * strengths
    shifts = torch.as_tensor(shifts, dtype=torch.float64).reshape(-1, 3).expand(b, 3)

    # Colour-space maths in float64 keeps the round trip well inside 1e-6.
    frames = batch.to(torch.float64).reshape(b, c // 3, 3, h, w)
    hsv = rgb_to_hsv(frames)
    hue = torch.remainder(hsv[:, :, 0] + shifts[:, 0, None, None, None], 1.0)
    sat = (hsv[:, :, 1] + shifts[:, 1, None, None, None]).clamp(0.0, 1.0)
    val = (hsv[:, :, 2] + shifts[:, 2, None, None, None]).clamp(0.0, 1.0)
    rgb = hsv_to_rgb(torch.stack((hue, sat, val), dim=2))
    return rgb.to(batch.dtype).reshape(b, c, h, w).clamp(0.0, 1.0)


def cutout_color(batch, size_range, generator=None, boxes=None, colors=None):
    """Fills one random rectangle per image with one random colour in every frame.

    ``boxes`` forces half-open (row0, row1, col0, col1) rectangles, ``colors``
    forces the RGB fill.
    """
    b, c, h, w = check_batch(batch)
    if boxes is None:
        lo, hi = _size_range(size_range)
        fractions = torch.rand((b, 2), generator=generator) * (hi - lo) + lo
        heights = (fractions[:, 0] * h).round().long().clamp(0, h)
        widths = (fractions[:, 1] * w).round().long().clamp(0, w)
        top = (torch.rand(b, generator=generator) * (h - heights + 1)).floor().long()
        left = (torch.rand(b, generator=generator) * (w - widths + 1)).floor().long()
        top = torch.minimum(top, h - heights)
        left = torch.minimum(left, w - widths)
        boxes = torch.stack((top, top + heights, left, left + widths), dim=1)
    boxes = torch.as_tensor(boxes, dtype=torch.long).reshape(-1, 4).expand(b, 4)
    if colors is None:
        colors = torch.rand((b, 3), generator=generator)
    colors = torch.as_tensor(colors, dtype=batch.dtype).reshape(-1, 3).expand(b, 3)

    out = batch.clone()
    frames = out.view(b, c // 3, 3, h, w)
    for i in range(b):
        y0, y1, x0, x1 = boxes[i].tolist()
        frames[i, :, :, y0:y1, x0:x1] = colors[i].reshape(1, 3, 1, 1)
    return out.clamp(0.0, 1.0)


def augment_weak(batch, spec, generator=None):
    """Weak branch: random shift only."""
    return random_shift(batch, spec.pad_pixels, generator)


def choose_strong_technique(generator=None):
    index = int(torch.randint(0, len(strong_techniques), (1,), generator=generator).item())
    return strong_techniques[index]


def augment_strong(batch, spec, generator=None, technique=None, on_choice=None):
    """Strong branch: random shift, then one technique drawn once for the whole minibatch."""
    shifted = random_shift(batch, spec.pad_pixels, generator)
    if technique is None:
        technique = choose_strong_technique(generator)
    if technique not in strong_techniques:
        raise InvalidArgumentError(f"Unknown strong technique '{technique}'")
    if on_choice is not None:
        on_choice(technique)

    if technique == "grayscale":
        return grayscale(shifted, spec.grayscale_prob, generator)
    if technique == "random_convolution":
        return random_convolution(shifted, generator)
    if technique == "color_jitter":
        return color_jitter(shifted, spec.jitter_strengths, generator)
    return cutout_color(shifted, spec.cutout_size_range, generator)


def two_way_views(obs, next_obs, spec, weak_generator, strong_generator=None, strong=True):
    """Weak (and optionally strong) views of S and S'.

    S and S' go through each branch as one concatenated minibatch, so the
    strong technique drawn for a minibatch is shared by both halves.
    """
    if obs.shape != next_obs.shape:
        raise ShapeError("obs and next_obs must have the same shape")
    n = obs.shape[0]
    both = torch.cat((obs, next_obs), dim=0)
    weak = augment_weak(both, spec, weak_generator)
    if not strong:
        return TwoWayViews(weak[:n], weak[n:])
    hard = augment_strong(both, spec, strong_generator)
    return TwoWayViews(weak[:n], weak[n:], hard[:n], hard[n:])
