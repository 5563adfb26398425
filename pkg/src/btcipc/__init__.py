"""Bitcoin-anchored subnet protocol: codecs, transactions, lifecycle, bench."""

from .address import (
    Configuration,
    MultisigDescriptor,
    SubnetAddress,
    SubnetId,
    Validator,
    derive_multisig_address,
    derive_subnet_address,
    format_subnet_id,
    parse_subnet_id,
    quorum_stake,
)
from .chain import Block, SimChain
from .codec import (
    CheckpointPayload,
    DepositPayload,
    KillPayload,
    LeavePayload,
    StakePayload,
    SubnetParams,
    TransferBatch,
    ValidatorData,
)
from .errors import IpcError
from .fees import (
    ConstantFeeOracle,
    FeeMode,
    FeeQuote,
    ScheduledFeeOracle,
    Utxo,
    estimate_fee_rate,
    select_coins,
)
from .monitor import Event, Monitor, Phase, SubnetRecord, TopDownBatch
from .provider import Provider
from .script import build_data_script, parse_data_script
from .snapshot import load_registry, save_registry
from .tx import (
    CheckpointBundle,
    CommitRevealPair,
    FundingUtxo,
    SignerSpec,
    Transaction,
    build_checkpoint_bundle,
    build_create_subnet,
    build_deposit,
    build_join_subnet,
    build_kill_settlement,
    build_native_transfer,
    compute_weight,
    write_data,
)

__version__ = "0.1.0"
