import numpy as np
import torch

from src.seeding import RunStreams, deterministic_algorithms, numpy_rng, seeded_init, stream_seed


def test_stream_seeds_are_stable_and_distinct():
    assert stream_seed(1, "env") == stream_seed(1, "env")
    assert stream_seed(1, "env") != stream_seed(1, "buffer")
    assert stream_seed(1, "env") != stream_seed(2, "env")
    assert 0 <= stream_seed(7, "init") < 2**63


def test_seeded_init_does_not_leak_global_state():
    torch.manual_seed(123)
    expected = torch.rand(3)

    torch.manual_seed(123)
    with seeded_init(5):
        inside = torch.rand(3)
    after = torch.rand(3)

    assert torch.equal(after, expected)
    with seeded_init(5):
        assert torch.equal(torch.rand(3), inside)


def test_run_streams_state_round_trip():
    streams = RunStreams(4)
    streams.torch["agent"].manual_seed(1)
    saved = streams.state_dict()
    a = torch.rand(2, generator=streams.torch["agent"])
    b = streams.numpy["buffer"].integers(0, 1000, 5)

    streams.load_state_dict(saved)
    assert torch.equal(torch.rand(2, generator=streams.torch["agent"]), a)
    np.testing.assert_array_equal(streams.numpy["buffer"].integers(0, 1000, 5), b)


def test_augmentation_stream_name_changes_only_augmentation_draws():
    a, b = RunStreams(3, "aug"), RunStreams(3, "aug_alt")
    assert not torch.equal(
        torch.rand(4, generator=a.torch["aug_weak"]), torch.rand(4, generator=b.torch["aug_weak"])
    )
    assert torch.equal(torch.rand(4, generator=a.torch["agent"]), torch.rand(4, generator=b.torch["agent"]))
    np.testing.assert_array_equal(
        numpy_rng(3, "env").integers(0, 100, 3), numpy_rng(3, "env").integers(0, 100, 3)
    )


def test_deterministic_algorithms_is_scoped():
    torch.use_deterministic_algorithms(False)
    with deterministic_algorithms():
        assert torch.are_deterministic_algorithms_enabled()
        assert torch.is_deterministic_algorithms_warn_only_enabled()
    assert not torch.are_deterministic_algorithms_enabled()
