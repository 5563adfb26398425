"""Bitcoin provider: user-facing operation builders bound to the simulator.

Each method funds itself from the chain faucet, builds the transaction(s)
with the pure builders from the transaction module, submits, mines, and lets
the monitor ingest the result. The return values are what a CLI needs to
print: subnet ids, txids, vbyte counts.
"""

from __future__ import annotations

from .address import SubnetId, derive_subnet_address, format_subnet_id
from .codec import (
    DepositPayload,
    LeavePayload,
    StakePayload,
    SubnetParams,
    ValidatorData,
    encode_deposit_payload,
    encode_leave_payload,
    encode_stake_payload,
)
from .monitor import Monitor
from .tx import (
    FundingUtxo,
    Transaction,
    TxOutput,
    build_create_subnet,
    build_join_subnet,
    build_deposit,
    build_op_return_command,
    op_return_script,
    p2tr_script,
    p2wpkh_script,
    wallet_input,
    _ceil_fee,
)

_CHANGE_SCRIPT = p2wpkh_script(bytes(20))
_FUNDING_HEADROOM = 200_000  # covers worst-case fees at bench rates


class Provider:
    def __init__(self, monitor: Monitor, fee_rate: int = 1):
        self.monitor = monitor
        self.chain = monitor.chain
        self.fee_rate = fee_rate

    def _fund(self, value: int) -> FundingUtxo:
        txid, vout = self.chain.fund(value)
        return FundingUtxo(txid, vout, value)

    def _submit_and_mine(self, *txs: Transaction) -> list[bytes]:
        txids = [self.chain.submit(tx) for tx in txs]
        self.chain.mine_block()
        self.monitor.sync()
        return txids

    def create_subnet(self, params: SubnetParams) -> str:
        """Commit-reveal pair carrying the subnet parameters; returns the new
        subnet-id string (address = reveal txid prefix)."""
        from .address import whitelist_multisig
        desc = whitelist_multisig(params.whitelist, params.min_validators,
                                  self.monitor.hrp)
        pair = build_create_subnet(
            params, desc.output_key, [self._fund(_FUNDING_HEADROOM)],
            self.fee_rate, _CHANGE_SCRIPT)
        self._submit_and_mine(pair.commit_tx, pair.reveal_tx)
        sid = SubnetId(self.monitor.root,
                       (derive_subnet_address(pair.reveal_tx.txid),))
        return format_subnet_id(sid)

    def join_subnet(self, subnet_id: str, validator_pk: bytes, collateral: int,
                    backup_address: str) -> bytes:
        record = self.monitor._require(subnet_id)
        v = ValidatorData(subnet_id, validator_pk, backup_address, collateral)
        pair = build_join_subnet(
            v, record.params.min_collateral, record.multisig.output_key,
            [self._fund(collateral + _FUNDING_HEADROOM)],
            self.fee_rate, _CHANGE_SCRIPT)
        return self._submit_and_mine(pair.commit_tx, pair.reveal_tx)[1]

    def deposit(self, subnet_id: str, user_address: bytes, amount: int) -> bytes:
        record = self.monitor._require(subnet_id)
        tx = build_deposit(amount, DepositPayload(user_address),
                           record.multisig.output_key,
                           [self._fund(amount + _FUNDING_HEADROOM)],
                           self.fee_rate, _CHANGE_SCRIPT)
        return self._submit_and_mine(tx)[0]

    def stake(self, subnet_id: str, validator_pk: bytes, amount: int) -> bytes:
        """Adds collateral: locks the amount under the subnet multisig next
        to the OP_RETURN command."""
        record = self.monitor._require(subnet_id)
        payload = encode_stake_payload(StakePayload(validator_pk, amount))
        funding = self._fund(amount + _FUNDING_HEADROOM)

        def build(change: int) -> Transaction:
            return Transaction(
                inputs=(wallet_input(funding),),
                outputs=(TxOutput(amount, p2tr_script(record.multisig.output_key)),
                         TxOutput(0, op_return_script(payload)),
                         TxOutput(change, _CHANGE_SCRIPT)))

        fee = _ceil_fee(build(0).vbytes, self.fee_rate)
        tx = build(funding.value - amount - fee)
        return self._submit_and_mine(tx)[0]

    def unstake(self, subnet_id: str, validator_pk: bytes, amount: int) -> bytes:
        payload = encode_stake_payload(StakePayload(validator_pk, amount,
                                                    unstake=True))
        return self._command(payload)

    def leave(self, subnet_id: str, validator_pk: bytes) -> bytes:
        return self._command(encode_leave_payload(LeavePayload(validator_pk)))

    def _command(self, payload: bytes) -> bytes:
        tx = build_op_return_command(payload, [self._fund(20_000)],
                                     self.fee_rate, _CHANGE_SCRIPT)
        return self._submit_and_mine(tx)[0]
