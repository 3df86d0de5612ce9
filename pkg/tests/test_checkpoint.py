import pytest
import torch

from src.checkpoint import FORMAT_VERSION, load_checkpoint, restore_parameters, save_checkpoint
from src.errors import ConfigurationError, InvalidStateError
from src.nets import Critic


def test_save_and_restore_parameters(tmp_path):
    torch.manual_seed(0)
    source = {"critic": Critic(4, 2, 8)}
    path = save_checkpoint(tmp_path / "checkpoint.pt", source, {"step": 10}, {"extra": 1})

    payload = load_checkpoint(path)
    assert payload["format_version"] == FORMAT_VERSION
    assert payload["manifest"]["step"] == 10
    assert payload["state"]["extra"] == 1
    assert all(t.dtype == torch.float32 for t in payload["params"].values())

    torch.manual_seed(1)
    target = {"critic": Critic(4, 2, 8)}
    restore_parameters(target, payload["params"])
    for p, q in zip(source["critic"].parameters(), target["critic"].parameters()):
        assert torch.equal(p, q)


def test_missing_checkpoint(tmp_path):
    with pytest.raises(ConfigurationError):
        load_checkpoint(tmp_path / "none.pt")


def test_version_mismatch(tmp_path):
    path = tmp_path / "old.pt"
    torch.save({"format_version": 0, "manifest": {}, "params": {}, "state": {}}, path)
    with pytest.raises(InvalidStateError):
        load_checkpoint(path)


def test_restore_requires_every_module(tmp_path):
    path = save_checkpoint(tmp_path / "c.pt", {"critic": Critic(4, 2, 8)}, {"step": 0})
    with pytest.raises(InvalidStateError):
        restore_parameters({"actor": Critic(4, 2, 8)}, load_checkpoint(path)["params"])
