"""Exception hierarchy shared by all btcipc modules."""


class IpcError(Exception):
    """Base class for every error raised by this package."""


# --- codec ---

class BadTag(IpcError):
    """Payload does not start with the expected 6-byte keyword tag."""


class Malformed(IpcError):
    """Payload is truncated, has trailing bytes, or fails a field constraint."""


class InvalidParams(IpcError):
    """A domain value violates its invariants (zero amount, bad key size, ...)."""


class InvalidBatch(IpcError):
    """A transfer batch violates its invariants."""


# --- script engine ---

class EmptyData(IpcError):
    pass


class DataTooLarge(IpcError):
    pass


class ForeignOpcode(IpcError):
    """A data script contains an opcode other than push / OP_DROP / final OP_1."""


class MalformedStructure(IpcError):
    """Push/drop alternation or the trailing OP_1 of a data script is broken."""


class PayloadTooLarge(IpcError):
    """OP_RETURN payload exceeds the 80-byte relay limit."""


class BadThreshold(IpcError):
    pass


class DuplicateKey(IpcError):
    pass


# --- addresses ---

class UnknownRoot(IpcError):
    """Subnet-id root is not one of b1/b2/b22/b3/b4."""


class BadAddressEncoding(IpcError):
    """Delegated-address string fails alphabet or checksum validation."""


# --- transaction builders ---

class InsufficientFunds(IpcError):
    pass


class InsufficientSubnetFunds(InsufficientFunds):
    pass


class InsufficientAmount(IpcError):
    """Zero or negative deposit amount."""


class CollateralTooLow(IpcError):
    pass


class BatchTooLarge(IpcError):
    """A built transaction exceeds the 100K vB relay policy cap."""


class TooManyWithdrawals(IpcError):
    """More than 255 withdrawals requested for a single checkpoint bundle."""


# --- fees and coins ---

class OracleUnavailable(IpcError):
    pass


class FeeExceedsValue(IpcError):
    pass


# --- chain and monitor ---

class DoubleSpend(IpcError):
    pass


class OversizedTx(IpcError):
    pass


class InvalidTransaction(IpcError):
    """Transaction spends unknown outputs or creates value out of thin air."""


class UnknownSubnet(IpcError):
    pass


class SubnetKilled(IpcError):
    pass


class SubnetNotActive(IpcError):
    pass


class NotAValidator(IpcError):
    pass


class AlreadyKilled(IpcError):
    pass


class ProposalExpired(IpcError):
    pass
