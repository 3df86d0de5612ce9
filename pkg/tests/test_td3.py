import numpy as np
import torch

from src.agents import AgentConfig, Td3Agent
from src.agents.td3 import clipped_target_noise, td3_target
from src.nets import Encoder, NetConfig

OBS_SHAPE = (9, 32, 32)
NET = NetConfig(latent_dim=16, hidden_dim=32, num_filters=8)


def gen(seed):
    g = torch.Generator()
    g.manual_seed(seed)
    return g


def make_agent(seed=0):
    torch.manual_seed(seed)
    encoder = Encoder(OBS_SHAPE, NET)
    return Td3Agent(encoder, 2, NET, AgentConfig(kind="td3"), generator=gen(seed))


def make_batch(n=8, seed=0):
    g = gen(seed)
    return (
        torch.rand((n, *OBS_SHAPE), generator=g),
        torch.rand((n, 2), generator=g) * 2 - 1,
        torch.rand((n, 1), generator=g),
        torch.rand((n, *OBS_SHAPE), generator=g),
        torch.ones((n, 1)),
    )


def test_target_noise_is_clipped():
    noise = clipped_target_noise((10_000, 2), sigma=1.0, clip=0.5, generator=gen(0))
    assert noise.abs().max() <= 0.5


def test_terminal_target_equals_reward():
    target = td3_target(torch.tensor([[0.7]]), torch.tensor([[0.0]]), 0.99, torch.tensor([[3.0]]), torch.tensor([[4.0]]))
    assert target.item() == 0.7


def test_delayed_actor_is_unchanged_on_odd_steps():
    agent = make_agent()
    batch = make_batch()
    before = [p.clone() for p in agent.actor.parameters()]
    target_before = [p.clone() for p in agent.actor_target.parameters()]

    agent.update(*batch, step=1)
    assert all(torch.equal(p, b) for p, b in zip(agent.actor.parameters(), before))
    assert all(torch.equal(p, b) for p, b in zip(agent.actor_target.parameters(), target_before))

    agent.update(*batch, step=2)
    assert not all(torch.equal(p, b) for p, b in zip(agent.actor.parameters(), before))


def test_actor_loss_sends_no_gradient_to_encoder():
    agent = make_agent()
    obs = make_batch()[0]
    agent.actor_loss(obs).backward()
    assert all(p.grad is None for p in agent.encoder.parameters())


def test_act_bounds_and_determinism():
    agent = make_agent()
    obs = np.full(OBS_SHAPE, 0.3, dtype=np.float32)
    np.testing.assert_array_equal(agent.act(obs, deterministic=True), agent.act(obs, deterministic=True))
    noisy = agent.act(np.stack([obs] * 32))
    assert noisy.shape == (32, 2)
    assert np.abs(noisy).max() <= 1.0
