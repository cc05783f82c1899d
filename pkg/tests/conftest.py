import numpy as np
import pytest

from streaming.stream import Stream, gen_stream
from transport.channel import Adversary, Channel
from transport.session import run_session


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


@pytest.fixture
def small_items_stream():
    """Items 1, 2, 2, 3 over [4]: F0 = 3, F2 = 6."""
    return Stream(4, [1, 2, 2, 3], [1, 1, 1, 1])


@pytest.fixture
def frequency_stream():
    return gen_stream('uniform-frequencies', 64, seed=7)


@pytest.fixture
def text_pattern():
    return gen_stream('text-pattern', 16, q=4, seed=3)


def run_pair(prover, verifier, stream, adversary=None, transport='inproc', record=False):
    """Stream into the verifier, then run one session; returns (SessionResult, Channel)."""
    verifier.stream(stream)
    channel = Channel(transport, record=record,
                      adversary=Adversary.parse(adversary) if isinstance(adversary, str) else adversary)
    try:
        return run_session(channel, prover, verifier), channel
    finally:
        channel.close()


@pytest.fixture
def session():
    return run_pair
