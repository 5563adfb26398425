"""Binary codecs for every payload embedded in Bitcoin transactions.

Every payload starts with a 6-byte ASCII keyword tag that identifies the
command. Variable-length fields use an unsigned LEB128 varint length prefix,
amounts and counts are varints, keys/hashes/addresses are fixed-width raw
bytes. The one exception is the checkpoint payload, which uses fixed-width
fields so its encoded form is always exactly 78 bytes.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import BadTag, InvalidBatch, InvalidParams, Malformed

TAG_LEN = 6

TAG_CREATE = b"IPCCRT"
TAG_CHECKPOINT = b"IPCCPT"
TAG_TRANSFER = b"IPCTFR"
TAG_DEPOSIT = b"IPCDEP"
TAG_JOIN = b"IPCJON"
TAG_LEAVE = b"IPCLVE"
TAG_STAKE = b"IPCSTK"
TAG_UNSTAKE = b"IPCUNS"
TAG_KILL_PROPOSE = b"IPCKLP"
TAG_KILL_VOTE = b"IPCKLV"

ALL_TAGS = (
    TAG_CREATE, TAG_CHECKPOINT, TAG_TRANSFER, TAG_DEPOSIT, TAG_JOIN,
    TAG_LEAVE, TAG_STAKE, TAG_UNSTAKE, TAG_KILL_PROPOSE, TAG_KILL_VOTE,
)

CHECKPOINT_PAYLOAD_LEN = 78  # 6 tag + 8 height + 32 commitment + 32 reserved
OP_RETURN_LIMIT = 80


# --- varint primitives (unsigned LEB128) ---

def write_varint(value: int) -> bytes:
    if value < 0:
        raise InvalidParams("varint value must be non-negative")
    out = bytearray()
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return bytes(out)


class _Reader:
    """Cursor over a byte string; every read raises Malformed on underrun."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def varint(self) -> int:
        shift = 0
        result = 0
        while True:
            if self.pos >= len(self.data):
                raise Malformed("truncated varint")
            byte = self.data[self.pos]
            self.pos += 1
            result |= (byte & 0x7F) << shift
            if not byte & 0x80:
                return result
            shift += 7
            if shift > 63:
                raise Malformed("varint too long")

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise Malformed("truncated field")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def take_prefixed(self) -> bytes:
        return self.take(self.varint())

    def remaining(self) -> int:
        return len(self.data) - self.pos

    def finish(self) -> None:
        if self.pos != len(self.data):
            raise Malformed("trailing bytes after payload")


def _check_tag(data: bytes, tag: bytes) -> _Reader:
    if len(data) < TAG_LEN or data[:TAG_LEN] != tag:
        raise BadTag(f"expected tag {tag!r}")
    reader = _Reader(data)
    reader.take(TAG_LEN)
    return reader


def peek_tag(data: bytes) -> bytes | None:
    """Return the known 6-byte tag at the head of *data*, or None."""
    head = data[:TAG_LEN]
    return head if head in ALL_TAGS else None


# --- domain types ---

@dataclass(frozen=True)
class SubnetParams:
    min_collateral: int
    min_validators: int
    whitelist: tuple[bytes, ...]  # 32-byte x-only public keys
    checkpoint_period: int
    active_validators_limit: int = 100
    min_cross_msg_fee: int = 1

    def validate(self) -> None:
        if self.min_validators < 1 or self.min_validators > len(self.whitelist):
            raise InvalidParams("min_validators must be in [1, len(whitelist)]")
        if len(set(self.whitelist)) != len(self.whitelist):
            raise InvalidParams("whitelist keys must be pairwise distinct")
        if any(len(k) != 32 for k in self.whitelist):
            raise InvalidParams("whitelist keys must be 32 bytes (x-only)")
        if self.checkpoint_period < 1:
            raise InvalidParams("checkpoint_period must be >= 1")
        if self.min_collateral < 0 or self.min_cross_msg_fee < 0:
            raise InvalidParams("amounts must be non-negative")


@dataclass(frozen=True)
class ValidatorData:
    subnet_id: str  # canonical subnet-id string, e.g. "/b4/f410f..."
    validator_pk: bytes  # 32-byte x-only key
    backup_address: str  # Bitcoin address string
    collateral: int
    network_hints: bytes = b""

    def validate(self) -> None:
        if self.collateral <= 0:
            raise InvalidParams("collateral must be positive")
        if len(self.validator_pk) != 32:
            raise InvalidParams("validator_pk must be 32 bytes")


@dataclass(frozen=True)
class TransferBatch:
    """Outgoing transfers of one checkpoint, grouped by 20-byte target subnet
    address. Each entry is (subnet_address, ((dest_address, amount), ...))."""

    entries: tuple[tuple[bytes, tuple[tuple[bytes, int], ...]], ...]

    def validate(self) -> None:
        seen = set()
        for subnet_addr, transfers in self.entries:
            if len(subnet_addr) != 20:
                raise InvalidBatch("target subnet address must be 20 bytes")
            if subnet_addr in seen:
                raise InvalidBatch("duplicate target subnet")
            seen.add(subnet_addr)
            if not transfers:
                raise InvalidBatch("empty transfer list for a target subnet")
            for dest, amount in transfers:
                if len(dest) != 20:
                    raise InvalidBatch("destination address must be 20 bytes")
                if amount <= 0:
                    raise InvalidBatch("transfer amount must be positive")

    @property
    def n_transfers(self) -> int:
        return sum(len(t) for _, t in self.entries)


@dataclass(frozen=True)
class CheckpointPayload:
    subnet_block_height: int
    state_commitment: bytes  # 32 bytes
    subnet_address: bytes = b"\x00" * 20  # carried in the reserved field

    def validate(self) -> None:
        if not 0 <= self.subnet_block_height < 1 << 64:
            raise InvalidParams("height out of range for the fixed 8-byte field")
        if len(self.state_commitment) != 32:
            raise InvalidParams("state commitment must be 32 bytes")
        if len(self.subnet_address) != 20:
            raise InvalidParams("subnet address must be 20 bytes")


@dataclass(frozen=True)
class DepositPayload:
    user_address: bytes  # 20-byte subnet user address

    def validate(self) -> None:
        if len(self.user_address) != 20:
            raise InvalidParams("user address must be 20 bytes")


@dataclass(frozen=True)
class StakePayload:
    validator_pk: bytes
    amount: int
    unstake: bool = False

    def validate(self) -> None:
        if len(self.validator_pk) != 32:
            raise InvalidParams("validator_pk must be 32 bytes")
        if self.amount <= 0:
            raise InvalidParams("stake amount must be positive")


@dataclass(frozen=True)
class LeavePayload:
    validator_pk: bytes

    def validate(self) -> None:
        if len(self.validator_pk) != 32:
            raise InvalidParams("validator_pk must be 32 bytes")


@dataclass(frozen=True)
class KillPayload:
    validator_pk: bytes
    vote: bool = False  # False: proposal, True: vote

    def validate(self) -> None:
        if len(self.validator_pk) != 32:
            raise InvalidParams("validator_pk must be 32 bytes")


# --- subnet parameters ---

def encode_subnet_params(params: SubnetParams) -> bytes:
    params.validate()
    out = bytearray(TAG_CREATE)
    out += write_varint(params.min_collateral)
    out += write_varint(params.min_validators)
    out += write_varint(len(params.whitelist))
    for key in params.whitelist:
        out += key
    out += write_varint(params.checkpoint_period)
    out += write_varint(params.active_validators_limit)
    out += write_varint(params.min_cross_msg_fee)
    return bytes(out)


def decode_subnet_params(data: bytes) -> SubnetParams:
    reader = _check_tag(data, TAG_CREATE)
    min_collateral = reader.varint()
    min_validators = reader.varint()
    whitelist = tuple(reader.take(32) for _ in range(reader.varint()))
    checkpoint_period = reader.varint()
    active_limit = reader.varint()
    min_fee = reader.varint()
    reader.finish()
    params = SubnetParams(min_collateral, min_validators, whitelist,
                          checkpoint_period, active_limit, min_fee)
    params.validate()
    return params


# --- transfer batch ---
#
# Layout reverse-engineered from the keyword-tagged hex of a 4-transfer,
# 2-subnet batch: tag, then one record per target subnet consisting of the
# raw 20-byte subnet address, a varint transfer count, and per transfer a
# length-prefixed 20-byte destination address followed by a varint amount
# (30000 sat encodes as b0 ea 01). Records run to the end of the payload;
# there is no outer record count.

def encode_transfer_batch(batch: TransferBatch) -> bytes:
    batch.validate()
    out = bytearray(TAG_TRANSFER)
    for subnet_addr, transfers in batch.entries:
        out += subnet_addr
        out += write_varint(len(transfers))
        for dest, amount in transfers:
            out += write_varint(len(dest))
            out += dest
            out += write_varint(amount)
    return bytes(out)


def decode_transfer_batch(data: bytes) -> TransferBatch:
    reader = _check_tag(data, TAG_TRANSFER)
    entries = []
    while reader.remaining():
        subnet_addr = reader.take(20)
        count = reader.varint()
        if count == 0:
            raise Malformed("empty transfer list for a target subnet")
        transfers = []
        for _ in range(count):
            dest = reader.take_prefixed()
            if len(dest) != 20:
                raise Malformed("destination address must be 20 bytes")
            transfers.append((dest, reader.varint()))
        entries.append((subnet_addr, tuple(transfers)))
    batch = TransferBatch(tuple(entries))
    batch.validate()
    return batch


# --- validator data (join) ---

def encode_validator_data(v: ValidatorData) -> bytes:
    v.validate()
    subnet_id = v.subnet_id.encode()
    backup = v.backup_address.encode()
    out = bytearray(TAG_JOIN)
    out += write_varint(len(subnet_id)) + subnet_id
    out += v.validator_pk
    out += write_varint(len(backup)) + backup
    out += write_varint(v.collateral)
    out += write_varint(len(v.network_hints)) + v.network_hints
    return bytes(out)


def decode_validator_data(data: bytes) -> ValidatorData:
    reader = _check_tag(data, TAG_JOIN)
    subnet_id = reader.take_prefixed().decode()
    pk = reader.take(32)
    backup = reader.take_prefixed().decode()
    collateral = reader.varint()
    hints = reader.take_prefixed()
    reader.finish()
    v = ValidatorData(subnet_id, pk, backup, collateral, hints)
    v.validate()
    return v


# --- checkpoint payload (fixed width, always 78 bytes) ---

def encode_checkpoint_payload(p: CheckpointPayload) -> bytes:
    p.validate()
    reserved = b"\x00" * 12 + p.subnet_address  # left-pad to 32 bytes
    out = (TAG_CHECKPOINT
           + p.subnet_block_height.to_bytes(8, "big")
           + p.state_commitment
           + reserved)
    assert len(out) == CHECKPOINT_PAYLOAD_LEN
    return out


def decode_checkpoint_payload(data: bytes) -> CheckpointPayload:
    reader = _check_tag(data, TAG_CHECKPOINT)
    height = int.from_bytes(reader.take(8), "big")
    commitment = reader.take(32)
    reserved = reader.take(32)
    reader.finish()
    if reserved[:12] != b"\x00" * 12:
        raise Malformed("reserved field padding must be zero")
    return CheckpointPayload(height, commitment, reserved[12:])


# --- deposit payload ---

def encode_deposit_payload(p: DepositPayload) -> bytes:
    p.validate()
    out = TAG_DEPOSIT + p.user_address
    assert len(out) <= OP_RETURN_LIMIT
    return out


def decode_deposit_payload(data: bytes) -> DepositPayload:
    reader = _check_tag(data, TAG_DEPOSIT)
    addr = reader.take(20)
    reader.finish()
    return DepositPayload(addr)


# --- stake / unstake / leave / kill payloads ---

def encode_stake_payload(p: StakePayload) -> bytes:
    p.validate()
    tag = TAG_UNSTAKE if p.unstake else TAG_STAKE
    return tag + p.validator_pk + write_varint(p.amount)


def decode_stake_payload(data: bytes) -> StakePayload:
    tag = data[:TAG_LEN]
    if tag not in (TAG_STAKE, TAG_UNSTAKE):
        raise BadTag("expected stake or unstake tag")
    reader = _Reader(data)
    reader.take(TAG_LEN)
    pk = reader.take(32)
    amount = reader.varint()
    reader.finish()
    p = StakePayload(pk, amount, unstake=tag == TAG_UNSTAKE)
    p.validate()
    return p


def encode_leave_payload(p: LeavePayload) -> bytes:
    p.validate()
    return TAG_LEAVE + p.validator_pk


def decode_leave_payload(data: bytes) -> LeavePayload:
    reader = _check_tag(data, TAG_LEAVE)
    pk = reader.take(32)
    reader.finish()
    return LeavePayload(pk)


def encode_kill_payload(p: KillPayload) -> bytes:
    p.validate()
    tag = TAG_KILL_VOTE if p.vote else TAG_KILL_PROPOSE
    return tag + p.validator_pk


def decode_kill_payload(data: bytes) -> KillPayload:
    tag = data[:TAG_LEN]
    if tag not in (TAG_KILL_PROPOSE, TAG_KILL_VOTE):
        raise BadTag("expected kill-propose or kill-vote tag")
    reader = _Reader(data)
    reader.take(TAG_LEN)
    pk = reader.take(32)
    reader.finish()
    return KillPayload(pk, vote=tag == TAG_KILL_VOTE)
