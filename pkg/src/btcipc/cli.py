"""ipc-sim: subnet lifecycle CLI against the deterministic simulator.

State (chain, monitor, queued subnet events) persists between invocations in
a pickle file so each verb maps to exactly one protocol operation. `withdraw`
and `transfer` queue subnet-side requests; `checkpoint` flushes them into the
next checkpoint bundle.
"""

from __future__ import annotations

import argparse
import pickle
import sys
from pathlib import Path

from .chain import SimChain
from .codec import SubnetParams
from .errors import IpcError
from .monitor import Monitor, load_event_script
from .provider import Provider
from .snapshot import save_registry

DEFAULT_STATE = ".ipc-sim-state.pkl"


class World:
    def __init__(self, root: str = "b4", fee_rate: int = 1):
        self.chain = SimChain()
        self.monitor = Monitor(self.chain, root=root)
        self.provider = Provider(self.monitor, fee_rate=fee_rate)
        self.queues: dict[str, dict] = {}

    def queue(self, subnet_id: str) -> dict:
        return self.queues.setdefault(subnet_id,
                                      {"transfers": [], "withdrawals": []})

    @classmethod
    def load(cls, path: str) -> "World":
        if Path(path).exists():
            with open(path, "rb") as fh:
                return pickle.load(fh)
        return cls()

    def save(self, path: str) -> None:
        with open(path, "wb") as fh:
            pickle.dump(self, fh)


def _pk(s: str) -> bytes:
    key = bytes.fromhex(s)
    if len(key) != 32:
        raise argparse.ArgumentTypeError("public keys are 32 hex-encoded bytes")
    return key


def _addr20(s: str) -> bytes:
    addr = bytes.fromhex(s)
    if len(addr) != 20:
        raise argparse.ArgumentTypeError("subnet user addresses are 20 bytes")
    return addr


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ipc-sim", description="Subnet lifecycle against a simulated chain.")
    parser.add_argument("--state", default=DEFAULT_STATE,
                        help="world state file (created on first use)")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("create", help="create a subnet")
    p.add_argument("--min-collateral", type=int, required=True)
    p.add_argument("--min-validators", type=int, required=True)
    p.add_argument("--whitelist", required=True,
                   help="comma-separated 32-byte hex public keys")
    p.add_argument("--checkpoint-period", type=int, required=True)
    p.add_argument("--active-validators-limit", type=int, default=100)
    p.add_argument("--min-cross-msg-fee", type=int, default=1)

    p = sub.add_parser("join", help="join a subnet as a validator")
    p.add_argument("--subnet", required=True)
    p.add_argument("--pk", type=_pk, required=True)
    p.add_argument("--collateral", type=int, required=True)
    p.add_argument("--backup-address", required=True)

    for verb in ("stake", "unstake"):
        p = sub.add_parser(verb, help=f"{verb} collateral")
        p.add_argument("--subnet", required=True)
        p.add_argument("--pk", type=_pk, required=True)
        p.add_argument("--amount", type=int, required=True)

    p = sub.add_parser("leave", help="leave a subnet")
    p.add_argument("--subnet", required=True)
    p.add_argument("--pk", type=_pk, required=True)

    p = sub.add_parser("deposit", help="deposit BTC into a subnet")
    p.add_argument("--subnet", required=True)
    p.add_argument("--user-address", type=_addr20, required=True)
    p.add_argument("--amount", type=int, required=True)

    p = sub.add_parser("withdraw", help="queue a withdrawal for the next checkpoint")
    p.add_argument("--subnet", required=True)
    p.add_argument("--address", required=True, help="destination bech32m address")
    p.add_argument("--amount", type=int, required=True)

    p = sub.add_parser("transfer", help="queue a cross-subnet transfer")
    p.add_argument("--subnet", required=True)
    p.add_argument("--to", required=True, help="target subnet id")
    p.add_argument("--dest", type=_addr20, required=True)
    p.add_argument("--amount", type=int, required=True)

    p = sub.add_parser("checkpoint", help="run one checkpoint cycle")
    p.add_argument("--subnet", required=True)
    p.add_argument("--events", help="event-script file to drive the cycle")
    p.add_argument("--fee-rate", type=int, default=1)
    p.add_argument("--relayers", type=int, default=1)

    for verb in ("kill-propose", "kill-vote"):
        p = sub.add_parser(verb, help=f"{verb.replace('-', ' ')} on a subnet")
        p.add_argument("--subnet", required=True)
        p.add_argument("--pk", type=_pk, required=True)

    sub.add_parser("list", help="list known subnets")

    p = sub.add_parser("list-validators", help="list a subnet's validators")
    p.add_argument("--subnet", required=True)

    p = sub.add_parser("snapshot", help="write a registry snapshot file")
    p.add_argument("--out", required=True)
    return parser


def run(args, world: World, out=sys.stdout) -> None:
    mon, prov = world.monitor, world.provider
    if args.verb == "create":
        whitelist = tuple(_pk(k) for k in args.whitelist.split(","))
        params = SubnetParams(args.min_collateral, args.min_validators,
                              whitelist, args.checkpoint_period,
                              args.active_validators_limit,
                              args.min_cross_msg_fee)
        sid = prov.create_subnet(params)
        print(sid, file=out)
    elif args.verb == "join":
        txid = prov.join_subnet(args.subnet, args.pk, args.collateral,
                                args.backup_address)
        print(txid.hex(), file=out)
    elif args.verb == "stake":
        print(prov.stake(args.subnet, args.pk, args.amount).hex(), file=out)
    elif args.verb == "unstake":
        print(prov.unstake(args.subnet, args.pk, args.amount).hex(), file=out)
    elif args.verb == "leave":
        print(prov.leave(args.subnet, args.pk).hex(), file=out)
    elif args.verb == "deposit":
        txid = prov.deposit(args.subnet, args.user_address, args.amount)
        print(txid.hex(), file=out)
    elif args.verb == "withdraw":
        world.queue(args.subnet)["withdrawals"].append(
            (args.address, args.amount))
        print(f"queued withdrawal of {args.amount} sat", file=out)
    elif args.verb == "transfer":
        world.queue(args.subnet)["transfers"].append(
            (args.to, args.dest, args.amount))
        print(f"queued transfer of {args.amount} sat to {args.to}", file=out)
    elif args.verb == "checkpoint":
        queue = world.queue(args.subnet)
        transfers, withdrawals = queue["transfers"], queue["withdrawals"]
        if args.events:
            for batch_t, batch_w in load_event_script(args.events):
                transfers += batch_t
                withdrawals += batch_w
        bundle = mon.run_checkpoint_cycle(
            args.subnet, transfers=transfers, withdrawals=withdrawals,
            fee_rate=args.fee_rate, relayers=args.relayers)
        queue["transfers"], queue["withdrawals"] = [], []
        record = mon.registry[args.subnet]
        print(f"checkpoint {record.checkpoint_number - 1}: "
              f"{bundle.vbytes} vB "
              f"({len(bundle.transactions())} transaction(s))", file=out)
    elif args.verb == "kill-propose":
        proposal = mon.propose_kill(args.subnet, args.pk)
        print(f"kill proposed at block {proposal.start_height}", file=out)
    elif args.verb == "kill-vote":
        record = mon.vote_kill(args.subnet, args.pk)
        print(f"phase: {record.phase.value}", file=out)
    elif args.verb == "list":
        for sid in sorted(mon.registry):
            record = mon.registry[sid]
            print(f"{sid} phase={record.phase.value} "
                  f"config={record.current_config.number} "
                  f"validators={len(record.validators)}", file=out)
    elif args.verb == "list-validators":
        record = mon.registry[args.subnet]
        for pk in sorted(record.validators):
            v = record.validators[pk]
            print(f"{pk.hex()} weight={v.weight} backup={v.backup_address}",
                  file=out)
    elif args.verb == "snapshot":
        save_registry(mon, args.out)
        print(f"wrote {args.out}", file=out)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    world = World.load(args.state)
    try:
        run(args, world)
    except IpcError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    world.save(args.state)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
