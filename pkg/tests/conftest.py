import hashlib

import pytest

from btcipc.address import encode_p2tr_address
from btcipc.chain import SimChain
from btcipc.codec import SubnetParams
from btcipc.monitor import Monitor
from btcipc.provider import Provider


def key(label: str) -> bytes:
    return hashlib.sha256(label.encode()).digest()


def backup(label: str) -> str:
    return encode_p2tr_address(key("backup-" + label))


@pytest.fixture
def world():
    chain = SimChain()
    monitor = Monitor(chain)
    provider = Provider(monitor)
    return chain, monitor, provider


@pytest.fixture
def active_subnet(world):
    """A subnet with a 5-key whitelist, activated by 4 joins, checkpoint 0
    written (the running example)."""
    chain, monitor, provider = world
    keys = [key(f"v{i}") for i in range(5)]
    params = SubnetParams(min_collateral=100_000, min_validators=4,
                          whitelist=tuple(keys), checkpoint_period=10)
    sid = provider.create_subnet(params)
    for i in range(4):
        provider.join_subnet(sid, keys[i], 100_000 + 10_000 * i,
                             backup(f"v{i}"))
    monitor.run_checkpoint_cycle(sid)
    return chain, monitor, provider, sid, keys
