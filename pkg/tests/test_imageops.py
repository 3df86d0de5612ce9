import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from src.errors import InvalidArgumentError, ShapeError
from src.imageops import (
    AugmentationSpec,
    augment_strong,
    augment_weak,
    color_jitter,
    cutout_color,
    grayscale,
    random_convolution,
    random_shift,
    two_way_views,
)
from src.mappings import strong_techniques


def gen(seed):
    g = torch.Generator()
    g.manual_seed(seed)
    return g


def random_batch(n=2, frames=3, size=16, seed=0):
    return torch.rand((n, 3 * frames, size, size), generator=gen(seed))


def test_random_shift_centered_offset_is_identity():
    batch = random_batch(size=84)
    out = random_shift(batch, 4, offsets=(4, 4))
    assert torch.equal(out, batch)


def test_random_shift_moves_bright_pixel():
    """Pad 1 then crop at (0, 0) shifts content down-right by one pixel."""
    batch = torch.zeros((1, 3, 6, 6))
    batch[0, :, 2, 2] = 1.0

    out = random_shift(batch, 1, offsets=(0, 0))

    assert torch.all(out[0, :, 3, 3] == 1.0)
    assert out.sum() == 3.0


def test_random_shift_keeps_shape_at_84():
    batch = random_batch(n=4, size=84)
    out = random_shift(batch, 4, generator=gen(1))
    assert out.shape == batch.shape


def test_random_shift_rejects_pad_as_large_as_image():
    with pytest.raises(InvalidArgumentError):
        random_shift(random_batch(size=6), 6)


def test_random_shift_rejects_forced_offset_outside_window():
    with pytest.raises(InvalidArgumentError):
        random_shift(random_batch(), 2, offsets=(5, 0))


def test_random_shift_per_axis_padding():
    batch = random_batch(size=32)
    out = random_shift(batch, (4, 20), offsets=(4, 20))
    assert torch.equal(out, batch)


def test_grayscale_probability_zero_is_identity():
    batch = random_batch()
    assert torch.equal(grayscale(batch, 0.0, gen(0)), batch)


def test_grayscale_white_stays_white():
    batch = torch.ones((1, 9, 4, 4))
    out = grayscale(batch, 1.0, gen(0))
    assert torch.allclose(out, batch, atol=1e-6)


def test_grayscale_pure_red_uses_bt601_weight():
    batch = torch.zeros((1, 3, 2, 2))
    batch[:, 0] = 1.0
    out = grayscale(batch, 1.0, gen(0))
    assert torch.allclose(out, torch.full_like(out, 0.299), atol=1e-6)


def test_random_convolution_identity_kernel():
    kernel = torch.zeros((3, 3, 3, 3))
    for c in range(3):
        kernel[c, c, 1, 1] = 1.0
    batch = random_batch()
    out = random_convolution(batch, kernel=kernel)
    assert torch.allclose(out, batch, atol=1e-6)


def test_random_convolution_keeps_constant_image_constant():
    batch = torch.full((1, 3, 5, 5), 0.4)
    out = random_convolution(batch, gen(3))
    for c in range(3):
        channel = out[0, c]
        assert torch.allclose(channel, channel[0, 0].expand_as(channel), atol=1e-6)


def test_random_convolution_same_size():
    batch = random_batch(n=1, size=84)
    assert random_convolution(batch, gen(0)).shape == (1, 9, 84, 84)


def test_color_jitter_zero_strength_round_trip():
    batch = random_batch()
    out = color_jitter(batch, (0.0, 0.0, 0.0), gen(0))
    assert torch.allclose(out, batch, atol=1e-6)


def test_color_jitter_hue_half_turns_red_into_cyan():
    batch = torch.zeros((1, 3, 2, 2))
    batch[:, 0] = 1.0
    out = color_jitter(batch, (0.0, 0.0, 0.0), shifts=(0.5, 0.0, 0.0))
    expected = torch.tensor([0.0, 1.0, 1.0]).reshape(1, 3, 1, 1).expand_as(out)
    assert torch.allclose(out, expected, atol=1e-6)


def test_color_jitter_stays_in_range():
    batch = torch.rand((1000, 3, 4, 4), generator=gen(5))
    out = color_jitter(batch, (0.5, 1.0, 1.0), gen(6))
    assert out.min() >= 0.0
    assert out.max() <= 1.0


def test_cutout_zero_area_is_identity():
    batch = random_batch()
    assert torch.equal(cutout_color(batch, (0.0, 0.0), gen(0)), batch)


def test_cutout_forced_rectangle_fills_every_frame():
    batch = random_batch(n=1, size=32)
    out = cutout_color(batch, (0.1, 0.3), boxes=(10, 20, 10, 20), colors=(0.5, 0.5, 0.5))

    assert torch.all(out[0, :, 10:20, 10:20] == 0.5)

    # Everything outside the rectangle is untouched.
    outside = torch.ones_like(batch, dtype=torch.bool)
    outside[:, :, 10:20, 10:20] = False
    assert torch.equal(out[outside], batch[outside])


def test_check_batch_rejects_bad_channel_count():
    with pytest.raises(ShapeError):
        grayscale(torch.zeros((1, 4, 8, 8)), 1.0)


def test_augmentation_spec_validation():
    with pytest.raises(InvalidArgumentError):
        AugmentationSpec(grayscale_prob=1.5)
    with pytest.raises(InvalidArgumentError):
        AugmentationSpec(pad_pixels=(-1, 4))
    with pytest.raises(InvalidArgumentError):
        AugmentationSpec(cutout_size_range=(0.0, 0.3))


def test_augment_weak_is_reproducible():
    batch = random_batch()
    spec = AugmentationSpec()
    assert torch.equal(augment_weak(batch, spec, gen(7)), augment_weak(batch, spec, gen(7)))


@pytest.mark.parametrize("technique", strong_techniques)
def test_augment_strong_each_technique_keeps_shape_and_range(technique):
    batch = random_batch(size=24)
    out = augment_strong(batch, AugmentationSpec(), gen(0), technique=technique)
    assert out.shape == batch.shape
    assert 0.0 <= out.min() and out.max() <= 1.0


def test_augment_strong_reports_one_choice_per_call():
    chosen = []
    augment_strong(random_batch(), AugmentationSpec(), gen(11), on_choice=chosen.append)
    assert len(chosen) == 1
    assert chosen[0] in strong_techniques


def test_augment_strong_unknown_technique():
    with pytest.raises(InvalidArgumentError):
        augment_strong(random_batch(), AugmentationSpec(), gen(0), technique="blur")


def test_two_way_views_share_generators_reproducibly():
    obs, next_obs = random_batch(seed=1), random_batch(seed=2)
    spec = AugmentationSpec()
    first = two_way_views(obs, next_obs, spec, gen(3), gen(4))
    second = two_way_views(obs, next_obs, spec, gen(3), gen(4))
    for a, b in zip(first, second):
        assert torch.equal(a, b)


def test_two_way_views_weak_only():
    obs = random_batch()
    views = two_way_views(obs, obs.clone(), AugmentationSpec(), gen(0), strong=False)
    assert views.obs_strong is None
    assert views.obs_weak.shape == obs.shape


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), frames=st.integers(1, 3))
def test_strong_branch_preserves_shape_and_range(seed, frames):
    batch = random_batch(n=2, frames=frames, size=12, seed=seed % 1000)
    out = augment_strong(batch, AugmentationSpec(pad_pixels=(2, 2)), gen(seed))
    assert out.shape == batch.shape
    assert out.min() >= 0.0
    assert out.max() <= 1.0


def test_strong_technique_frequencies_are_uniform():
    batch = random_batch(n=1, frames=1, size=8)
    spec = AugmentationSpec(pad_pixels=(1, 1))
    g = gen(0)
    chosen = []
    for _ in range(10_000):
        augment_strong(batch, spec, g, on_choice=chosen.append)

    for technique in strong_techniques:
        assert chosen.count(technique) / len(chosen) == pytest.approx(0.25, abs=0.02)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_random_shift_relocates_interior_pixels(seed):
    pad, size, n = 4, 16, 6
    batch = random_batch(n=n, frames=1, size=size, seed=seed % 1000)
    # The shift draws its y offsets, then its x offsets, from the generator.
    g = gen(seed)
    off_y = torch.randint(0, 2 * pad + 1, (n,), generator=g)
    off_x = torch.randint(0, 2 * pad + 1, (n,), generator=g)

    out = random_shift(batch, pad, gen(seed))

    for i in range(n):
        dy, dx = int(off_y[i]) - pad, int(off_x[i]) - pad
        r0, r1 = max(0, -dy), min(size, size - dy)
        c0, c1 = max(0, -dx), min(size, size - dx)
        assert torch.equal(
            out[i, :, r0:r1, c0:c1], batch[i, :, r0 + dy : r1 + dy, c0 + dx : c1 + dx]
        )


def test_weak_and_strong_shift_offsets_are_independent():
    batch = random_batch(n=4000, frames=1, size=16, seed=5)
    spec = AugmentationSpec(pad_pixels=(4, 4), grayscale_prob=0.0)

    weak = augment_weak(batch, spec, gen(1))
    # Grayscale with probability 0 leaves only the strong branch's own shift.
    strong = augment_strong(batch, spec, gen(2), technique="grayscale")

    same = (weak == strong).flatten(start_dim=1).all(dim=1).float().mean().item()
    # Independent offsets over a 9 x 9 window coincide with probability 1/81.
    assert 0.005 < same < 0.02
