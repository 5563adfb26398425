"""Bitcoin script construction, serialization, and hardened data-script parsing.

Long binary payloads are carried as a sequence of pushes of at most 520 bytes,
each followed by OP_DROP, with OP_1 at the end so evaluation leaves a single
truthy stack element. The push opcode is chosen by chunk length:
OP_PUSHBYTES_n for n in [1, 75], OP_PUSHDATA1 for [76, 255], OP_PUSHDATA2 for
[256, 520].
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import (
    BadThreshold,
    DataTooLarge,
    DuplicateKey,
    EmptyData,
    ForeignOpcode,
    MalformedStructure,
    PayloadTooLarge,
)

MAX_PUSH = 520
MAX_DATA_SCRIPT_BYTES = 390_000
OP_RETURN_LIMIT = 80

OP_PUSHDATA1 = 0x4C
OP_PUSHDATA2 = 0x4D
OP_1 = 0x51
OP_16 = 0x60
OP_RETURN = 0x6A
OP_DROP = 0x75
OP_NUMEQUAL = 0x9C
OP_CHECKSIG = 0xAC
OP_CHECKSIGADD = 0xBA


@dataclass(frozen=True)
class PushBytes:
    payload: bytes  # 1..75 bytes, opcode byte is the length itself

    def serialize(self) -> bytes:
        if not 1 <= len(self.payload) <= 75:
            raise MalformedStructure("PushBytes payload must be 1..75 bytes")
        return bytes([len(self.payload)]) + self.payload


@dataclass(frozen=True)
class PushData1:
    payload: bytes  # 76..255 bytes

    def serialize(self) -> bytes:
        if not 76 <= len(self.payload) <= 255:
            raise MalformedStructure("PushData1 payload must be 76..255 bytes")
        return bytes([OP_PUSHDATA1, len(self.payload)]) + self.payload


@dataclass(frozen=True)
class PushData2:
    payload: bytes  # 256..520 bytes

    def serialize(self) -> bytes:
        if not 256 <= len(self.payload) <= MAX_PUSH:
            raise MalformedStructure("PushData2 payload must be 256..520 bytes")
        return bytes([OP_PUSHDATA2]) + len(self.payload).to_bytes(2, "little") + self.payload


@dataclass(frozen=True)
class Drop:
    def serialize(self) -> bytes:
        return bytes([OP_DROP])


@dataclass(frozen=True)
class PushNum1:
    def serialize(self) -> bytes:
        return bytes([OP_1])


@dataclass(frozen=True)
class OpReturn:
    payload: bytes

    def serialize(self) -> bytes:
        return bytes([OP_RETURN]) + _push_op(self.payload).serialize()


@dataclass(frozen=True)
class Other:
    opcode: int

    def serialize(self) -> bytes:
        return bytes([self.opcode])


Op = PushBytes | PushData1 | PushData2 | Drop | PushNum1 | OpReturn | Other
PUSH_OPS = (PushBytes, PushData1, PushData2)


@dataclass(frozen=True)
class Script:
    ops: tuple[Op, ...]

    def serialize(self) -> bytes:
        return b"".join(op.serialize() for op in self.ops)

    def __len__(self) -> int:
        return len(self.serialize())


def _push_op(chunk: bytes) -> Op:
    """Minimal push opcode for a chunk, per the length ranges above."""
    n = len(chunk)
    if 1 <= n <= 75:
        return PushBytes(chunk)
    if n <= 255:
        return PushData1(chunk)
    if n <= MAX_PUSH:
        return PushData2(chunk)
    raise MalformedStructure("push larger than 520 bytes")


def deserialize_script(raw: bytes) -> Script:
    """Parse raw script bytes back into ops (inverse of Script.serialize).

    OP_RETURN scripts come back as Other(OP_RETURN) followed by a push op;
    the byte-level round-trip is still exact.
    """
    ops: list[Op] = []
    pos = 0
    while pos < len(raw):
        opcode = raw[pos]
        pos += 1
        if 1 <= opcode <= 75:
            chunk, pos = raw[pos:pos + opcode], pos + opcode
            if len(chunk) != opcode:
                raise MalformedStructure("truncated push")
            ops.append(PushBytes(chunk))
        elif opcode == OP_PUSHDATA1:
            if pos >= len(raw):
                raise MalformedStructure("truncated PUSHDATA1 length")
            n = raw[pos]
            pos += 1
            chunk, pos = raw[pos:pos + n], pos + n
            if len(chunk) != n:
                raise MalformedStructure("truncated push")
            ops.append(PushData1(chunk))
        elif opcode == OP_PUSHDATA2:
            if pos + 2 > len(raw):
                raise MalformedStructure("truncated PUSHDATA2 length")
            n = int.from_bytes(raw[pos:pos + 2], "little")
            pos += 2
            chunk, pos = raw[pos:pos + n], pos + n
            if len(chunk) != n:
                raise MalformedStructure("truncated push")
            ops.append(PushData2(chunk))
        elif opcode == OP_DROP:
            ops.append(Drop())
        elif opcode == OP_1:
            ops.append(PushNum1())
        else:
            ops.append(Other(opcode))
    return Script(tuple(ops))


# --- data scripts ---

def build_data_script(data: bytes, max_bytes: int = MAX_DATA_SCRIPT_BYTES) -> Script:
    if not data:
        raise EmptyData("data script payload must be non-empty")
    if len(data) > max_bytes:
        raise DataTooLarge(f"{len(data)} bytes exceeds the {max_bytes}-byte cap")
    ops: list[Op] = []
    for start in range(0, len(data), MAX_PUSH):
        ops.append(_push_op(data[start:start + MAX_PUSH]))
        ops.append(Drop())
    ops.append(PushNum1())
    return Script(tuple(ops))


def parse_data_script(script: Script) -> bytes:
    """Reconstruct the payload of a data script.

    Hardened: rejects any script containing an opcode other than a push,
    OP_DROP, or the single terminating OP_1.
    """
    for op in script.ops:
        if not isinstance(op, (*PUSH_OPS, Drop, PushNum1)):
            raise ForeignOpcode(f"disallowed opcode in data script: {op!r}")
    ops = script.ops
    if not ops or not isinstance(ops[-1], PushNum1):
        raise MalformedStructure("data script must end with OP_1")
    body = ops[:-1]
    if not body or len(body) % 2:
        raise MalformedStructure("data script must alternate push / OP_DROP")
    chunks = []
    for push, drop in zip(body[0::2], body[1::2]):
        if not isinstance(push, PUSH_OPS) or not isinstance(drop, Drop):
            raise MalformedStructure("data script must alternate push / OP_DROP")
        chunks.append(push.payload)
    return b"".join(chunks)


def parse_data_script_bytes(raw: bytes) -> bytes:
    return parse_data_script(deserialize_script(raw))


# --- small fixed scripts ---

def build_op_return_script(payload: bytes) -> Script:
    if len(payload) > OP_RETURN_LIMIT:
        raise PayloadTooLarge(f"{len(payload)} bytes exceeds the 80-byte OP_RETURN limit")
    return Script((OpReturn(payload),))


def _push_number(n: int) -> Op:
    """Minimal script-number push for a multisig threshold."""
    if 1 <= n <= 16:
        return Other(OP_1 + n - 1)
    encoded = bytearray()
    value = n
    while value:
        encoded.append(value & 0xFF)
        value >>= 8
    if encoded[-1] & 0x80:
        encoded.append(0x00)
    return PushBytes(bytes(encoded))


def build_multisig_leaf_script(pubkeys: list[bytes], threshold: int) -> Script:
    """Tapscript k-of-n accumulator: CHECKSIG then CHECKSIGADD per key,
    compared against the threshold. A 1-of-1 degenerates to a plain
    key-plus-CHECKSIG script."""
    if not 1 <= threshold <= len(pubkeys):
        raise BadThreshold(f"threshold {threshold} invalid for {len(pubkeys)} keys")
    if len(set(pubkeys)) != len(pubkeys):
        raise DuplicateKey("multisig keys must be distinct")
    for key in pubkeys:
        if len(key) != 32:
            raise DuplicateKey("keys must be 32-byte x-only")
    if len(pubkeys) == 1:
        return Script((PushBytes(pubkeys[0]), Other(OP_CHECKSIG)))
    ops: list[Op] = [PushBytes(pubkeys[0]), Other(OP_CHECKSIG)]
    for key in pubkeys[1:]:
        ops.append(PushBytes(key))
        ops.append(Other(OP_CHECKSIGADD))
    ops.append(_push_number(threshold))
    ops.append(Other(OP_NUMEQUAL))
    return Script(tuple(ops))
