#!/usr/bin/env python3
"""Walk a subnet through its whole lifecycle on the simulated chain.

Creates a subnet with a 5-key whitelist, joins 4 validators (activation,
configuration 0 -> 1), writes checkpoint 0, deposits, runs a transfer
checkpoint against a second subnet, then kills the first subnet and shows
the collateral settlement.
"""

import hashlib

from btcipc import Monitor, Provider, SimChain, SubnetParams
from btcipc.address import encode_p2tr_address


def key(label: str) -> bytes:
    return hashlib.sha256(label.encode()).digest()


def main() -> None:
    chain = SimChain()
    monitor = Monitor(chain)
    provider = Provider(monitor)

    keys = [key(f"validator-{i}") for i in range(5)]
    backups = [encode_p2tr_address(key(f"backup-{i}")) for i in range(5)]

    params = SubnetParams(min_collateral=100_000, min_validators=4,
                          whitelist=tuple(keys), checkpoint_period=10)
    sid = provider.create_subnet(params)
    record = monitor.registry[sid]
    print(f"created {sid} (phase {record.phase.value})")

    for i in range(4):
        provider.join_subnet(sid, keys[i], 100_000 + 10_000 * i, backups[i])
    print(f"after 4 joins: phase {record.phase.value}, "
          f"configuration {record.current_config.number}")

    bundle = monitor.run_checkpoint_cycle(sid)
    print(f"checkpoint 0: {bundle.vbytes} vB, "
          f"state committed at subnet height {record.last_checkpoint[0]}")

    provider.deposit(sid, key("user")[:20], 500_000)
    batch = monitor.get_top_down_messages(sid)
    print(f"top-down: {len(batch.deposits)} deposit(s), "
          f"configuration {batch.configuration_number}")

    sid2 = provider.create_subnet(SubnetParams(50_000, 1, (keys[4],), 5))
    provider.join_subnet(sid2, keys[4], 60_000, backups[4])
    monitor.run_checkpoint_cycle(sid2)
    transfers = [(sid2, key(f"dest-{i}")[:20], 10_000) for i in range(4)]
    bundle = monitor.run_checkpoint_cycle(sid, transfers=transfers)
    print(f"transfer checkpoint: {bundle.vbytes} vB over "
          f"{len(bundle.transactions())} transactions; "
          f"{len(monitor.registry[sid2].pending_mints)} mints queued on {sid2}")

    monitor.propose_kill(sid, keys[0])
    for pk in keys[1:3]:
        monitor.vote_kill(sid, pk)
    print(f"kill accepted: phase {record.phase.value}")
    for _ in range(5):
        monitor.run_checkpoint_cycle(sid)
    chain.mine_block()
    monitor.sync()
    print(f"after 5 checkpoints: phase {record.phase.value}, "
          f"{len(record.owned_utxos)} UTXOs left on the subnet")


if __name__ == "__main__":
    main()
