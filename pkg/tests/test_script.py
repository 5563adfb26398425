import pytest
from hypothesis import given, settings, strategies as st

from btcipc.errors import (
    BadThreshold,
    DataTooLarge,
    DuplicateKey,
    EmptyData,
    ForeignOpcode,
    MalformedStructure,
    PayloadTooLarge,
)
from btcipc.script import (
    MAX_DATA_SCRIPT_BYTES,
    OP_CHECKSIG,
    OP_CHECKSIGADD,
    OP_NUMEQUAL,
    Drop,
    Other,
    PushBytes,
    PushData1,
    PushData2,
    PushNum1,
    Script,
    build_data_script,
    build_multisig_leaf_script,
    build_op_return_script,
    deserialize_script,
    parse_data_script,
    parse_data_script_bytes,
)

CHUNK_BOUNDARIES = [1, 74, 75, 76, 255, 256, 519, 520, 521, 1040, 1041]


def expected_script_len(n: int) -> int:
    """Independent size oracle: push-opcode overhead by chunk length class,
    plus OP_DROP per chunk and the trailing OP_1."""
    total = 1  # OP_1
    while n > 0:
        chunk = min(n, 520)
        if chunk <= 75:
            overhead = 1
        elif chunk <= 255:
            overhead = 2
        else:
            overhead = 3
        total += overhead + chunk + 1  # push + data + OP_DROP
        n -= chunk
    return total


@pytest.mark.parametrize("n", CHUNK_BOUNDARIES)
def test_roundtrip_at_chunk_boundaries(n):
    data = bytes(i % 251 for i in range(n))
    script = build_data_script(data)
    assert parse_data_script(script) == data
    raw = script.serialize()
    assert len(raw) == expected_script_len(n)
    assert parse_data_script_bytes(raw) == data
    assert deserialize_script(raw).serialize() == raw


def test_opcode_selection_by_chunk_length():
    assert isinstance(build_data_script(b"x" * 75).ops[0], PushBytes)
    assert isinstance(build_data_script(b"x" * 76).ops[0], PushData1)
    assert isinstance(build_data_script(b"x" * 255).ops[0], PushData1)
    assert isinstance(build_data_script(b"x" * 256).ops[0], PushData2)


def test_529_byte_payload_splits_520_9():
    # 529 bytes must split into a 520-byte PUSHDATA2 chunk and a
    # 9-byte OP_PUSHBYTES_9 chunk
    script = build_data_script(bytes(529))
    ops = script.ops
    assert isinstance(ops[0], PushData2) and len(ops[0].payload) == 520
    assert isinstance(ops[2], PushBytes) and len(ops[2].payload) == 9
    assert isinstance(ops[-1], PushNum1)


def test_empty_and_oversized_payloads():
    with pytest.raises(EmptyData):
        build_data_script(b"")
    with pytest.raises(DataTooLarge):
        build_data_script(bytes(MAX_DATA_SCRIPT_BYTES + 1))


def test_parse_rejects_foreign_opcodes():
    good = build_data_script(b"payload")
    bad = Script(good.ops[:-1] + (Other(OP_CHECKSIG), PushNum1()))
    with pytest.raises(ForeignOpcode):
        parse_data_script(bad)


def test_parse_rejects_bad_structure():
    with pytest.raises(MalformedStructure):
        parse_data_script(Script((PushBytes(b"x"), PushNum1())))  # missing DROP
    with pytest.raises(MalformedStructure):
        parse_data_script(Script((PushBytes(b"x"), Drop())))  # missing OP_1
    with pytest.raises(MalformedStructure):
        parse_data_script(Script((PushNum1(),)))  # no pushes at all


def test_deserialize_truncated():
    raw = build_data_script(b"hello").serialize()
    with pytest.raises(MalformedStructure):
        deserialize_script(raw[:-2] + b"\x4c")  # dangling PUSHDATA1


def test_op_return_limit():
    assert len(build_op_return_script(bytes(80)).serialize()) == 83
    with pytest.raises(PayloadTooLarge):
        build_op_return_script(bytes(81))


@settings(max_examples=500)
@given(st.binary(min_size=1, max_size=3000))
def test_data_script_roundtrip_property(data):
    raw = build_data_script(data).serialize()
    assert parse_data_script_bytes(raw) == data
    assert len(raw) == expected_script_len(len(data))


@settings(max_examples=300)
@given(st.binary(min_size=1, max_size=600), st.integers(0, 255))
def test_foreign_opcode_never_parses(data, opcode):
    """Injecting any non-push, non-DROP opcode before the terminator must be
    rejected, never silently decoded."""
    if opcode in (0x75, 0x51) or 1 <= opcode <= 0x4d:
        return
    script = build_data_script(data)
    poisoned = Script(script.ops[:-1] + (Other(opcode), PushNum1()))
    with pytest.raises(ForeignOpcode):
        parse_data_script(poisoned)


# --- multisig leaf scripts ---

def keys(n):
    import hashlib
    return [hashlib.sha256(bytes([i])).digest() for i in range(n)]


def test_single_key_leaf():
    script = build_multisig_leaf_script(keys(1), 1)
    assert script.serialize() == b"\x20" + keys(1)[0] + bytes([OP_CHECKSIG])


def test_multisig_leaf_structure():
    ks = keys(3)
    script = build_multisig_leaf_script(ks, 2)
    raw = script.serialize()
    assert raw.count(bytes([OP_CHECKSIGADD])) >= 2
    assert raw[-1] == OP_NUMEQUAL
    # accumulator shape: 33 bytes per key entry + opcode, threshold, NUMEQUAL
    assert len(raw) == 3 * 34 + 1 + 1


def test_multisig_leaf_large_threshold_push():
    ks = keys(30)
    raw = build_multisig_leaf_script(ks, 20).serialize()
    # thresholds above 16 need a minimal number push (0x01 0x14)
    assert raw[-3:] == bytes([0x01, 20, OP_NUMEQUAL])


def test_multisig_validation():
    with pytest.raises(BadThreshold):
        build_multisig_leaf_script(keys(3), 4)
    with pytest.raises(BadThreshold):
        build_multisig_leaf_script(keys(3), 0)
    with pytest.raises(DuplicateKey):
        build_multisig_leaf_script([keys(1)[0]] * 2, 1)
