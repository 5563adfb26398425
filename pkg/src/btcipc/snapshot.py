"""Registry snapshot: a single self-describing binary file.

The layout follows the payload codec conventions: a magic tag, LEB128
varints for counts and amounts, length prefixes for variable-width fields,
raw bytes for keys and hashes. Loading reconstructs the registry exactly;
the chain itself is not persisted (it is deterministic from its inputs).
"""

from __future__ import annotations

from pathlib import Path

from .address import Configuration, Validator, parse_subnet_id
from .codec import _Reader, decode_subnet_params, encode_subnet_params, write_varint
from .errors import Malformed
from .monitor import (
    KillProposal,
    LockState,
    Monitor,
    PendingChange,
    Phase,
    SubnetRecord,
)

SNAPSHOT_MAGIC = b"IPCREG"
_PHASES = list(Phase)


def _w_bytes(out: bytearray, data: bytes) -> None:
    out += write_varint(len(data)) + data


def _w_str(out: bytearray, s: str) -> None:
    _w_bytes(out, s.encode())


def _w_outpoint(out: bytearray, outpoint) -> None:
    out += outpoint[0]
    out += write_varint(outpoint[1])


def _w_change(out: bytearray, c: PendingChange) -> None:
    _w_str(out, c.kind)
    out += c.validator_pk
    out += write_varint(c.amount)
    _w_str(out, c.backup_address)


def _w_validator(out: bytearray, v: Validator) -> None:
    out += v.pk
    out += write_varint(v.weight)
    _w_str(out, v.backup_address)


def dump_record(record: SubnetRecord) -> bytes:
    out = bytearray()
    _w_str(out, record.id_str)
    _w_bytes(out, encode_subnet_params(record.params))
    out += write_varint(_PHASES.index(record.phase))
    out += write_varint(len(record.configurations))
    for cfg in record.configurations:
        out += write_varint(cfg.number)
        out += write_varint(len(cfg.validators))
        for v in cfg.validators:
            _w_validator(out, v)
    out += write_varint(len(record.lock.keys))
    for key in record.lock.keys:
        out += key
    out += write_varint(record.lock.threshold)
    out += write_varint(record.lock.signer_count)
    out += write_varint(len(record.validators))
    for pk in sorted(record.validators):
        _w_validator(out, record.validators[pk])
    out += write_varint(len(record.owned_utxos))
    for outpoint in sorted(record.owned_utxos):
        _w_outpoint(out, outpoint)
    out += write_varint(len(record.watched_spks))
    for spk in sorted(record.watched_spks):
        _w_bytes(out, spk)
    for changes in (record.pending_changes, record.undelivered_changes):
        out += write_varint(len(changes))
        for c in changes:
            _w_change(out, c)
    for pairs in (record.pending_deposits, record.pending_mints,
                  record.pending_returns):
        out += write_varint(len(pairs))
        for addr, amount in pairs:
            _w_bytes(out, addr)
            out += write_varint(amount)
    if record.kill_proposal is None:
        out += b"\x00"
    else:
        p = record.kill_proposal
        out += b"\x01" + p.proposer
        out += write_varint(p.start_height)
        out += write_varint(len(p.votes))
        for pk in sorted(p.votes):
            out += pk
    if record.last_checkpoint is None:
        out += b"\x00"
    else:
        height, commitment = record.last_checkpoint
        out += b"\x01" + write_varint(height) + commitment
    out += write_varint(record.checkpoints_since_kill)
    out += write_varint(record.checkpoint_number)
    out += write_varint(record.subnet_height)
    out += b"\x01" if record.needs_relock else b"\x00"
    return bytes(out)


def _r_str(r: _Reader) -> str:
    return r.take_prefixed().decode()


def load_record(r: _Reader) -> SubnetRecord:
    id_str = _r_str(r)
    params = decode_subnet_params(r.take_prefixed())
    phase = _PHASES[r.varint()]
    configurations = []
    for _ in range(r.varint()):
        number = r.varint()
        validators = tuple(
            Validator(r.take(32), r.varint(), _r_str(r))
            for _ in range(r.varint()))
        configurations.append(Configuration(number, validators))
    lock_keys = tuple(r.take(32) for _ in range(r.varint()))
    lock = LockState(lock_keys, r.varint(), r.varint())
    validators = {}
    for _ in range(r.varint()):
        v = Validator(r.take(32), r.varint(), _r_str(r))
        validators[v.pk] = v
    owned = {(r.take(32), r.varint()) for _ in range(r.varint())}
    watched = {bytes(r.take_prefixed()) for _ in range(r.varint())}
    changes = []
    for _ in range(2):
        changes.append([
            PendingChange(_r_str(r), r.take(32), r.varint(), _r_str(r))
            for _ in range(r.varint())])
    pairs = []
    for _ in range(3):
        pairs.append([(r.take_prefixed(), r.varint())
                      for _ in range(r.varint())])
    proposal = None
    if r.take(1) == b"\x01":
        proposal = KillProposal(r.take(32), r.varint(),
                                {r.take(32) for _ in range(r.varint())})
    last_checkpoint = None
    if r.take(1) == b"\x01":
        last_checkpoint = (r.varint(), r.take(32))
    sid = parse_subnet_id(id_str)
    from .address import whitelist_multisig, derive_multisig_address, ROOT_HRP
    hrp = ROOT_HRP[sid.root]
    cfg = configurations[-1]
    multisig = (whitelist_multisig(params.whitelist, params.min_validators, hrp)
                if cfg.number == 0 else derive_multisig_address(cfg, hrp))
    return SubnetRecord(
        id=sid, params=params, phase=phase, configurations=configurations,
        multisig=multisig, lock=lock, validators=validators,
        owned_utxos=owned, watched_spks=watched,
        pending_changes=changes[0], undelivered_changes=changes[1],
        pending_deposits=pairs[0], pending_mints=pairs[1],
        pending_returns=pairs[2], kill_proposal=proposal,
        last_checkpoint=last_checkpoint,
        checkpoints_since_kill=r.varint(), checkpoint_number=r.varint(),
        subnet_height=r.varint(), needs_relock=r.take(1) == b"\x01")


def save_registry(monitor: Monitor, path: str | Path) -> None:
    out = bytearray(SNAPSHOT_MAGIC)
    _w_str(out, monitor.root)
    out += write_varint(monitor.processed_height)
    out += write_varint(len(monitor.registry))
    for id_str in sorted(monitor.registry):
        _w_bytes(out, dump_record(monitor.registry[id_str]))
    Path(path).write_bytes(bytes(out))


def load_registry(path: str | Path, chain) -> Monitor:
    """Rebuild a monitor from a snapshot; pass the chain it was watching."""
    data = Path(path).read_bytes()
    if data[:len(SNAPSHOT_MAGIC)] != SNAPSHOT_MAGIC:
        raise Malformed("not a registry snapshot")
    r = _Reader(data)
    r.take(len(SNAPSHOT_MAGIC))
    root = _r_str(r)
    monitor = Monitor(chain, root=root)
    monitor.processed_height = r.varint()
    for _ in range(r.varint()):
        record = load_record(_Reader(r.take_prefixed()))
        monitor.registry[record.id_str] = record
        for spk in record.watched_spks:
            monitor._spk_to_subnet[spk] = record.id_str
    r.finish()
    # Rebuild the global unspent index from the chain's view.
    for outpoint, txout in chain.utxo_set.items():
        monitor._unspent_by_spk.setdefault(
            txout.script_pubkey, set()).add(outpoint)
    return monitor
