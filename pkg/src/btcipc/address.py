"""Subnet identifiers, delegated addresses, and configuration multisigs.

A subnet address is the first 20 bytes of the txid of the transaction that
created the subnet, rendered as a namespace-10 delegated address: lowercase
base32 (RFC 4648, no padding) over payload || 4-byte blake2b checksum of
(protocol byte 0x04, namespace byte 0x0a, payload).

Subnet-id strings look like "/b4/f410fbqh5wz3hby3sosbp37qtelib7mncp72lbd6pg6y"
with one root segment per network and one address segment for an L2 subnet.
"""

from __future__ import annotations

import base64
import hashlib
from dataclasses import dataclass

from .errors import BadAddressEncoding, InvalidParams, UnknownRoot
from .script import Script, build_multisig_leaf_script

NAMESPACE = 10
_DELEGATED_PROTOCOL = 4  # protocol byte of a delegated address

ROOT_NETWORKS = {
    "b1": "mainnet",
    "b2": "testnet",
    "b22": "testnet4",
    "b3": "signet",
    "b4": "regtest",
}

# Network prefix of the delegated-address string. Mainnet ids render with a
# "t410" prefix and every other network with "f410"; parsing accepts both.
_MAINNET_PREFIX = "t410"
_OTHER_PREFIX = "f410"

ROOT_HRP = {
    "b1": "bc",
    "b2": "tb",
    "b22": "tb",
    "b3": "tb",
    "b4": "bcrt",
}


def _checksum(payload: bytes) -> bytes:
    return hashlib.blake2b(
        bytes([_DELEGATED_PROTOCOL, NAMESPACE]) + payload, digest_size=4
    ).digest()


def _b32_encode(data: bytes) -> str:
    return base64.b32encode(data).decode().rstrip("=").lower()


def _b32_decode(s: str) -> bytes:
    if s != s.lower():
        raise BadAddressEncoding("delegated address must be lowercase")
    padded = s.upper() + "=" * ((-len(s)) % 8)
    try:
        return base64.b32decode(padded)
    except Exception as exc:
        raise BadAddressEncoding(str(exc)) from exc


@dataclass(frozen=True)
class SubnetAddress:
    payload: bytes  # first 20 bytes of the creating transaction's txid

    def __post_init__(self):
        if len(self.payload) != 20:
            raise InvalidParams("subnet address payload must be 20 bytes")

    def to_string(self, root: str = "b4") -> str:
        prefix = _MAINNET_PREFIX if root == "b1" else _OTHER_PREFIX
        return prefix + "f" + _b32_encode(self.payload + _checksum(self.payload))

    @classmethod
    def from_string(cls, s: str) -> "SubnetAddress":
        if len(s) < 6 or s[0] not in "ft" or s[1:5] != "410f":
            raise BadAddressEncoding(f"not a namespace-10 delegated address: {s!r}")
        raw = _b32_decode(s[5:])
        if len(raw) != 24:
            raise BadAddressEncoding("delegated address must decode to 24 bytes")
        payload, checksum = raw[:20], raw[20:]
        if checksum != _checksum(payload):
            raise BadAddressEncoding("delegated address checksum mismatch")
        return cls(payload)


def derive_subnet_address(create_txid: bytes) -> SubnetAddress:
    """Address of a subnet created by the transaction with this txid."""
    if len(create_txid) != 32:
        raise InvalidParams("txid must be 32 bytes")
    return SubnetAddress(create_txid[:20])


@dataclass(frozen=True)
class SubnetId:
    root: str
    path: tuple[SubnetAddress, ...]

    def __post_init__(self):
        if self.root not in ROOT_NETWORKS:
            raise UnknownRoot(f"unknown root {self.root!r}")

    @property
    def address(self) -> SubnetAddress:
        return self.path[-1]


def format_subnet_id(subnet_id: SubnetId) -> str:
    parts = [subnet_id.root] + [a.to_string(subnet_id.root) for a in subnet_id.path]
    return "/" + "/".join(parts)


def parse_subnet_id(s: str) -> SubnetId:
    parts = s.strip("/").split("/")
    if not parts or parts[0] not in ROOT_NETWORKS:
        raise UnknownRoot(f"unknown root in {s!r}")
    path = tuple(SubnetAddress.from_string(p) for p in parts[1:])
    return SubnetId(parts[0], path)


# --- taproot commitment and bech32m rendering ---

_NUMS_INTERNAL_KEY = bytes.fromhex(
    "50929b74c1a04954b78b4b6035e97a5e078a5a0f28ec96d547bfee9ace803ac0"
)
_TAPROOT_LEAF_VERSION = 0xC0


def _tagged_hash(tag: str, data: bytes) -> bytes:
    tag_hash = hashlib.sha256(tag.encode()).digest()
    return hashlib.sha256(tag_hash + tag_hash + data).digest()


def _compact_size(n: int) -> bytes:
    if n < 0xFD:
        return bytes([n])
    if n <= 0xFFFF:
        return b"\xfd" + n.to_bytes(2, "little")
    return b"\xfe" + n.to_bytes(4, "little")


def tap_leaf_hash(leaf_script: bytes) -> bytes:
    return _tagged_hash(
        "TapLeaf",
        bytes([_TAPROOT_LEAF_VERSION]) + _compact_size(len(leaf_script)) + leaf_script,
    )


def tap_commitment(leaf_script: bytes) -> bytes:
    """32-byte taproot output key committing to a single leaf script.

    Modeled commitment: the curve tweak-add is replaced by a tagged hash, so
    the result is deterministic and correctly sized without EC arithmetic.
    """
    return _tagged_hash("TapTweak", _NUMS_INTERNAL_KEY + tap_leaf_hash(leaf_script))


def control_block() -> bytes:
    """Script-path control block for the single-leaf tree: version byte plus
    the 32-byte internal key."""
    return bytes([_TAPROOT_LEAF_VERSION]) + _NUMS_INTERNAL_KEY


_BECH_CHARSET = "qpzry9x8gf2tvdw0s3jn54khce6mua7l"
_BECH32M_CONST = 0x2BC830A3


def _bech_polymod(values) -> int:
    gen = [0x3B6A57B2, 0x26508E6D, 0x1EA119FA, 0x3D4233DD, 0x2A1462B3]
    chk = 1
    for value in values:
        top = chk >> 25
        chk = (chk & 0x1FFFFFF) << 5 ^ value
        for i in range(5):
            chk ^= gen[i] if ((top >> i) & 1) else 0
    return chk


def _bech_hrp_expand(hrp: str):
    return [ord(c) >> 5 for c in hrp] + [0] + [ord(c) & 31 for c in hrp]


def _convertbits(data, frombits, tobits, pad=True):
    acc = 0
    bits = 0
    ret = []
    maxv = (1 << tobits) - 1
    for value in data:
        acc = (acc << frombits) | value
        bits += frombits
        while bits >= tobits:
            bits -= tobits
            ret.append((acc >> bits) & maxv)
    if pad and bits:
        ret.append((acc << (tobits - bits)) & maxv)
    return ret


def encode_p2tr_address(program: bytes, hrp: str = "bcrt") -> str:
    """bech32m address for a 32-byte witness v1 program."""
    data = [1] + _convertbits(program, 8, 5)
    values = _bech_hrp_expand(hrp) + data
    polymod = _bech_polymod(values + [0, 0, 0, 0, 0, 0]) ^ _BECH32M_CONST
    checksum = [(polymod >> 5 * (5 - i)) & 31 for i in range(6)]
    return hrp + "1" + "".join(_BECH_CHARSET[d] for d in data + checksum)


def decode_p2tr_address(address: str) -> bytes:
    """32-byte witness v1 program of a bech32m address."""
    pos = address.rfind("1")
    if pos < 1 or pos + 7 > len(address):
        raise BadAddressEncoding(f"not a bech32m address: {address!r}")
    hrp, rest = address[:pos], address[pos + 1:]
    try:
        data = [_BECH_CHARSET.index(c) for c in rest]
    except ValueError as exc:
        raise BadAddressEncoding("invalid bech32m character") from exc
    if _bech_polymod(_bech_hrp_expand(hrp) + data) != _BECH32M_CONST:
        raise BadAddressEncoding("bech32m checksum mismatch")
    if data[0] != 1:
        raise BadAddressEncoding("expected a witness v1 program")
    decoded = _convertbits(data[1:-6], 5, 8, pad=False)
    if len(decoded) != 32:
        raise BadAddressEncoding("witness program must be 32 bytes")
    return bytes(decoded)


# --- configurations ---

def quorum_stake(total: int) -> int:
    """Smallest stake that is at least two thirds of the total (ceiling)."""
    return -(-2 * total // 3)


@dataclass(frozen=True)
class Validator:
    pk: bytes  # 32-byte x-only key
    weight: int  # stake in satoshis
    backup_address: str = ""


@dataclass(frozen=True)
class Configuration:
    number: int
    validators: tuple[Validator, ...]

    def __post_init__(self):
        if self.total_weight <= 0:
            raise InvalidParams("configuration total weight must be positive")

    @property
    def total_weight(self) -> int:
        return sum(v.weight for v in self.validators)

    @property
    def threshold_stake(self) -> int:
        return quorum_stake(self.total_weight)

    @property
    def threshold_count(self) -> int:
        """Number of signatures required by the multisig script: the smallest
        count that cannot be met by a sub-quorum of stake (ascending-weight
        prefix sums)."""
        weights = sorted(v.weight for v in self.validators)
        acc = 0
        for i, w in enumerate(weights, start=1):
            acc += w
            if acc >= self.threshold_stake:
                return i
        return len(weights)

    @property
    def signer_count(self) -> int:
        """Signature placeholders attached to a checkpoint: the smallest
        number of validators whose combined stake meets the quorum."""
        weights = sorted((v.weight for v in self.validators), reverse=True)
        acc = 0
        for i, w in enumerate(weights, start=1):
            acc += w
            if acc >= self.threshold_stake:
                return i
        return len(weights)


@dataclass(frozen=True)
class MultisigDescriptor:
    leaf_script: Script
    output_key: bytes  # 32-byte witness program
    address: str


def derive_multisig_address(config: Configuration, hrp: str = "bcrt") -> MultisigDescriptor:
    """Multisig descriptor of a configuration; stable under validator
    reordering because keys are canonically sorted."""
    keys = sorted(v.pk for v in config.validators)
    leaf = build_multisig_leaf_script(keys, config.threshold_count)
    program = tap_commitment(leaf.serialize())
    return MultisigDescriptor(leaf, program, encode_p2tr_address(program, hrp))


def whitelist_multisig(whitelist, min_validators: int, hrp: str = "bcrt") -> MultisigDescriptor:
    """Bootstrap multisig built from the create-time whitelist with threshold
    min_validators (configuration number 0)."""
    keys = sorted(whitelist)
    leaf = build_multisig_leaf_script(list(keys), min_validators)
    program = tap_commitment(leaf.serialize())
    return MultisigDescriptor(leaf, program, encode_p2tr_address(program, hrp))
