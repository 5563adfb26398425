"""Bitcoin monitor: block ingestion, payload detection, and the subnet registry.

The monitor walks finalized blocks in order, decodes keyword-tagged payloads
out of reveal witnesses and OP_RETURN outputs, and drives each subnet through
the lifecycle initialized -> active -> toBeKilled -> killed. All registry
mutations flow through this single owner; malformed candidates never raise,
they are skipped with a diagnostic event.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from enum import Enum

from .address import (
    Configuration,
    MultisigDescriptor,
    SubnetId,
    ROOT_HRP,
    Validator,
    decode_p2tr_address,
    derive_multisig_address,
    derive_subnet_address,
    format_subnet_id,
    quorum_stake,
    whitelist_multisig,
)
from .codec import (
    ALL_TAGS,
    CheckpointPayload,
    SubnetParams,
    TransferBatch,
    TAG_CHECKPOINT,
    TAG_CREATE,
    TAG_DEPOSIT,
    TAG_JOIN,
    TAG_KILL_PROPOSE,
    TAG_KILL_VOTE,
    TAG_LEAVE,
    TAG_STAKE,
    TAG_TRANSFER,
    TAG_UNSTAKE,
    decode_checkpoint_payload,
    decode_deposit_payload,
    decode_kill_payload,
    decode_leave_payload,
    decode_stake_payload,
    decode_subnet_params,
    decode_transfer_batch,
    decode_validator_data,
    peek_tag,
)
from .errors import (
    AlreadyKilled,
    DoubleSpend,
    NotAValidator,
    ProposalExpired,
    SubnetKilled,
    SubnetNotActive,
    UnknownSubnet,
)
from .chain import Block, SimChain
from .errors import ForeignOpcode
from .script import parse_data_script_bytes
from .tx import (
    CheckpointBundle,
    FundingUtxo,
    SignerSpec,
    Transaction,
    build_checkpoint_bundle,
    build_kill_settlement,
    p2tr_script,
    subnet_lock_script,
)

KILL_PROPOSAL_EXPIRY_BLOCKS = 36  # about six hours of L1 blocks
KILL_CHECKPOINT_DELAY = 5


class Phase(Enum):
    INITIALIZED = "initialized"
    ACTIVE = "active"
    TO_BE_KILLED = "toBeKilled"
    KILLED = "killed"


_PHASE_ORDER = {p: i for i, p in enumerate(Phase)}


@dataclass(frozen=True)
class Event:
    kind: str
    subnet: str | None = None
    detail: dict = field(default_factory=dict)


@dataclass(frozen=True)
class PendingChange:
    kind: str  # join | leave | stake | unstake
    validator_pk: bytes
    amount: int = 0
    backup_address: str = ""


@dataclass
class KillProposal:
    proposer: bytes
    start_height: int
    votes: set = field(default_factory=set)  # validator pks


@dataclass(frozen=True)
class TopDownBatch:
    """What the subnet pulls from L1 each checkpoint period."""
    deposits: tuple  # (user_address, amount)
    incoming_transfers: tuple  # (dest_address, amount) minted from IPCTFR
    changes: tuple  # PendingChange records that took effect
    configuration_number: int
    validators: tuple  # current Validator set


@dataclass
class LockState:
    """The multisig currently holding the subnet's UTXOs: keys, script
    threshold, and how many signatures a quorum attaches."""
    keys: tuple
    threshold: int
    signer_count: int

    def descriptor(self, hrp: str = "bcrt") -> MultisigDescriptor:
        from .script import build_multisig_leaf_script
        from .address import tap_commitment, encode_p2tr_address
        leaf = build_multisig_leaf_script(sorted(self.keys), self.threshold)
        program = tap_commitment(leaf.serialize())
        return MultisigDescriptor(leaf, program, encode_p2tr_address(program, hrp))

    def signer_spec(self) -> SignerSpec:
        return SignerSpec(tuple(sorted(self.keys)), self.threshold, self.signer_count)


@dataclass
class SubnetRecord:
    id: SubnetId
    params: SubnetParams
    phase: Phase
    configurations: list  # Configuration history, index 0 is the whitelist
    multisig: MultisigDescriptor  # current configuration's multisig
    lock: LockState  # multisig the owned UTXOs are actually locked under
    validators: dict = field(default_factory=dict)  # pk -> Validator
    owned_utxos: set = field(default_factory=set)
    watched_spks: set = field(default_factory=set)
    pending_changes: list = field(default_factory=list)
    undelivered_changes: list = field(default_factory=list)
    pending_deposits: list = field(default_factory=list)
    pending_mints: list = field(default_factory=list)
    pending_returns: list = field(default_factory=list)  # (program, amount)
    kill_proposal: KillProposal | None = None
    last_checkpoint: tuple | None = None  # (subnet height, commitment)
    checkpoints_since_kill: int = 0
    checkpoint_number: int = 0
    subnet_height: int = 0
    needs_relock: bool = False

    @property
    def id_str(self) -> str:
        return format_subnet_id(self.id)

    @property
    def address(self) -> bytes:
        return self.id.address.payload

    @property
    def current_config(self) -> Configuration:
        return self.configurations[-1]

    def total_collateral(self) -> int:
        return sum(v.weight for v in self.validators.values())


class Monitor:
    """Single owner of the subnet registry; see the module docstring."""

    def __init__(self, chain: SimChain, root: str = "b4"):
        self.chain = chain
        self.root = root
        self.hrp = ROOT_HRP[root]
        self.registry: dict[str, SubnetRecord] = {}
        self.processed_height = 0
        self.events: list[Event] = []
        self._spk_to_subnet: dict[bytes, str] = {}
        self._unspent_by_spk: dict[bytes, set] = {}

    # --- block ingestion ---

    def sync(self) -> list[Event]:
        """Process every finalized block not yet seen, in height order."""
        events: list[Event] = []
        while self.processed_height < self.chain.finalized_height():
            events += self.process_block(self.chain.blocks[self.processed_height])
        return events

    def process_block(self, block: Block) -> list[Event]:
        assert block.height == self.processed_height, "blocks must arrive in order"
        self.processed_height += 1
        events: list[Event] = []
        for tx in block.transactions:
            self._update_utxo_tracking(tx)
            for txin in tx.inputs:
                for item in txin.witness:
                    self._scan_witness_item(tx, item, events)
            for txout in tx.outputs:
                if txout.script_pubkey[:1] == b"\x6a":
                    self._scan_op_return(tx, txout, events)
        self.events.extend(events)
        return events

    def _update_utxo_tracking(self, tx: Transaction) -> None:
        for txin in tx.inputs:
            prev = self.chain.get_tx(txin.txid)
            if prev is None:
                continue
            spk = prev.outputs[txin.vout].script_pubkey
            self._unspent_by_spk.get(spk, set()).discard(txin.outpoint)
            owner = self._spk_to_subnet.get(spk)
            if owner is not None:
                self.registry[owner].owned_utxos.discard(txin.outpoint)
        txid = tx.txid
        for vout, txout in enumerate(tx.outputs):
            spk = txout.script_pubkey
            self._unspent_by_spk.setdefault(spk, set()).add((txid, vout))
            owner = self._spk_to_subnet.get(spk)
            if owner is not None:
                self.registry[owner].owned_utxos.add((txid, vout))

    def _watch_spk(self, record: SubnetRecord, spk: bytes) -> None:
        record.watched_spks.add(spk)
        self._spk_to_subnet[spk] = record.id_str
        # Adopt outputs that were mined before the script became known
        # (e.g. the commit transaction earlier in the same block).
        for outpoint in self._unspent_by_spk.get(spk, set()):
            record.owned_utxos.add(outpoint)

    # --- payload detection ---

    def _scan_witness_item(self, tx: Transaction, item: bytes, events: list) -> None:
        try:
            payload = parse_data_script_bytes(item)
        except ForeignOpcode:
            return  # hardening: scripts with foreign opcodes are never events
        except Exception:
            if any(tag in item for tag in ALL_TAGS):
                events.append(Event("malformed-payload",
                                    detail={"where": "witness"}))
            return
        tag = peek_tag(payload)
        if tag == TAG_CREATE:
            self._on_create(tx, payload, events)
        elif tag == TAG_JOIN:
            self._on_join(tx, payload, events)
        elif tag == TAG_TRANSFER:
            self._on_transfer(tx, payload, events)

    def _scan_op_return(self, tx: Transaction, txout, events: list) -> None:
        try:
            payload = _op_return_payload(txout.script_pubkey)
        except Exception:
            return
        tag = peek_tag(payload)
        if tag is None:
            return
        try:
            if tag == TAG_CHECKPOINT:
                self._on_checkpoint(payload, events)
            elif tag == TAG_DEPOSIT:
                self._on_deposit(tx, payload, events)
            elif tag in (TAG_STAKE, TAG_UNSTAKE):
                self._on_stake(tx, payload, events)
            elif tag == TAG_LEAVE:
                self._on_leave(payload, events)
            elif tag in (TAG_KILL_PROPOSE, TAG_KILL_VOTE):
                self._on_kill(payload, events)
        except Exception as exc:
            events.append(Event("malformed-payload",
                                detail={"where": "op_return", "error": str(exc)}))

    def _on_create(self, tx: Transaction, payload: bytes, events: list) -> None:
        try:
            params = decode_subnet_params(payload)
        except Exception as exc:
            events.append(Event("malformed-payload", detail={"error": str(exc)}))
            return
        # The subnet address derives from the reveal transaction's txid.
        sid = SubnetId(self.root, (derive_subnet_address(tx.txid),))
        id_str = format_subnet_id(sid)
        if id_str in self.registry:
            return
        desc = whitelist_multisig(params.whitelist, params.min_validators, self.hrp)
        config0 = Configuration(0, tuple(
            Validator(pk, 1) for pk in sorted(params.whitelist)))
        record = SubnetRecord(
            id=sid, params=params, phase=Phase.INITIALIZED,
            configurations=[config0], multisig=desc,
            lock=LockState(tuple(sorted(params.whitelist)),
                           params.min_validators, params.min_validators),
        )
        self.registry[id_str] = record
        self._watch_spk(record, p2tr_script(desc.output_key))
        events.append(Event("subnet-created", id_str,
                            {"phase": record.phase.value,
                             "whitelist": len(params.whitelist)}))

    def _on_join(self, tx: Transaction, payload: bytes, events: list) -> None:
        try:
            v = decode_validator_data(payload)
        except Exception as exc:
            events.append(Event("malformed-payload", detail={"error": str(exc)}))
            return
        record = self.registry.get(v.subnet_id)
        if record is None:
            events.append(Event("join-ignored", v.subnet_id,
                                {"reason": "unknown subnet"}))
            return
        id_str = record.id_str
        if record.phase in (Phase.TO_BE_KILLED, Phase.KILLED):
            events.append(Event("join-ignored", id_str,
                                {"reason": "subnet not accepting validators"}))
            return
        if v.collateral < record.params.min_collateral:
            events.append(Event("join-ignored", id_str,
                                {"reason": "collateral below minimum"}))
            return
        if record.phase is Phase.INITIALIZED and v.validator_pk not in record.params.whitelist:
            events.append(Event("join-ignored", id_str,
                                {"reason": "not whitelisted"}))
            return
        if v.validator_pk in record.validators or any(
                c.kind == "join" and c.validator_pk == v.validator_pk
                for c in record.pending_changes):
            events.append(Event("join-ignored", id_str,
                                {"reason": "duplicate validator"}))
            return
        if not self._collateral_locked(tx, record, v.collateral):
            events.append(Event("join-ignored", id_str,
                                {"reason": "collateral not locked"}))
            return
        record.pending_changes.append(PendingChange(
            "join", v.validator_pk, v.collateral, v.backup_address))
        events.append(Event("join-queued", id_str,
                            {"collateral": v.collateral}))
        if record.phase is Phase.INITIALIZED:
            joins = [c for c in record.pending_changes if c.kind == "join"]
            if len(joins) >= record.params.min_validators:
                self._activate(record, events)

    def _collateral_locked(self, reveal_tx: Transaction, record: SubnetRecord,
                           collateral: int) -> bool:
        """The commit transaction (the reveal's funding parent) must carry an
        output of exactly the collateral value to a watched subnet script."""
        commit = self.chain.get_tx(reveal_tx.inputs[0].txid)
        if commit is None:
            return False
        return any(o.value == collateral and o.script_pubkey in record.watched_spks
                   for o in commit.outputs)

    def _activate(self, record: SubnetRecord, events: list) -> None:
        changes = list(record.pending_changes)
        record.pending_changes.clear()
        for c in changes:
            record.validators[c.validator_pk] = Validator(
                c.validator_pk, c.amount, c.backup_address)
        self._adopt_new_configuration(record)
        record.undelivered_changes.extend(changes)
        self._set_phase(record, Phase.ACTIVE)
        events.append(Event("subnet-activated", record.id_str,
                            {"configuration": record.current_config.number,
                             "validators": len(record.validators)}))

    def _adopt_new_configuration(self, record: SubnetRecord) -> None:
        config = Configuration(
            record.current_config.number + 1,
            tuple(record.validators[pk] for pk in sorted(record.validators)))
        record.configurations.append(config)
        record.multisig = derive_multisig_address(config, self.hrp)
        self._watch_spk(record, p2tr_script(record.multisig.output_key))
        record.needs_relock = True

    def _on_transfer(self, tx: Transaction, payload: bytes, events: list) -> None:
        try:
            batch = decode_transfer_batch(payload)
        except Exception as exc:
            events.append(Event("malformed-payload", detail={"error": str(exc)}))
            return
        checkpoint_tx = self.chain.get_tx(tx.inputs[0].txid)
        if checkpoint_tx is None:
            events.append(Event("transfer-rejected",
                                detail={"reason": "checkpoint parent not found"}))
            return
        # Every per-subnet sum must match an actual checkpoint output.
        for subnet_addr, transfers in batch.entries:
            expected = sum(a for _, a in transfers)
            spk = subnet_lock_script(subnet_addr)
            if not any(o.script_pubkey == spk and o.value == expected
                       for o in checkpoint_tx.outputs):
                events.append(Event("transfer-rejected",
                                    detail={"reason": "output sum mismatch",
                                            "target": subnet_addr.hex()}))
                return
        minted = 0
        for subnet_addr, transfers in batch.entries:
            target = self._record_by_address(subnet_addr)
            if target is None:
                continue
            target.pending_mints.extend(transfers)
            minted += len(transfers)
        events.append(Event("transfer-detected",
                            detail={"transfers": batch.n_transfers,
                                    "minted": minted}))

    def _on_checkpoint(self, payload: bytes, events: list) -> None:
        p = decode_checkpoint_payload(payload)
        record = self._record_by_address(p.subnet_address)
        if record is None:
            events.append(Event("malformed-payload",
                                detail={"reason": "checkpoint for unknown subnet"}))
            return
        record.last_checkpoint = (p.subnet_block_height, p.state_commitment)
        events.append(Event("checkpoint-detected", record.id_str,
                            {"height": p.subnet_block_height}))
        if record.phase is Phase.TO_BE_KILLED:
            record.checkpoints_since_kill += 1
            if record.checkpoints_since_kill >= KILL_CHECKPOINT_DELAY:
                self._settle(record, events)

    def _on_deposit(self, tx: Transaction, payload: bytes, events: list) -> None:
        p = decode_deposit_payload(payload)
        for txout in tx.outputs:
            owner = self._spk_to_subnet.get(txout.script_pubkey)
            if owner is not None:
                record = self.registry[owner]
                record.pending_deposits.append((p.user_address, txout.value))
                events.append(Event("deposit-detected", owner,
                                    {"amount": txout.value}))
                return
        events.append(Event("malformed-payload",
                            detail={"reason": "deposit without subnet output"}))

    def _resolve_by_pk(self, pk: bytes) -> SubnetRecord | None:
        """Stake/leave/kill payloads name only the validator key; the subnet
        is resolved by membership (unique in practice for this artifact)."""
        owners = [r for r in self.registry.values() if pk in r.validators]
        return owners[0] if len(owners) == 1 else None

    def _on_stake(self, tx: Transaction, payload: bytes, events: list) -> None:
        p = decode_stake_payload(payload)
        record = self._resolve_by_pk(p.validator_pk)
        if record is None:
            events.append(Event("stake-ignored", detail={"reason": "not a validator"}))
            return
        if record.phase is not Phase.ACTIVE:
            events.append(Event("stake-ignored", record.id_str,
                                {"reason": "subnet not accepting stake changes"}))
            return
        if not p.unstake:
            # Added stake must actually be locked under the subnet multisig.
            if not any(o.value == p.amount and o.script_pubkey in record.watched_spks
                       for o in tx.outputs):
                events.append(Event("stake-ignored", record.id_str,
                                    {"reason": "stake not locked"}))
                return
        else:
            if p.amount > record.validators[p.validator_pk].weight:
                events.append(Event("stake-ignored", record.id_str,
                                    {"reason": "unstake exceeds collateral"}))
                return
        kind = "unstake" if p.unstake else "stake"
        record.pending_changes.append(PendingChange(kind, p.validator_pk, p.amount))
        events.append(Event(f"{kind}-queued", record.id_str, {"amount": p.amount}))

    def _on_leave(self, payload: bytes, events: list) -> None:
        p = decode_leave_payload(payload)
        record = self._resolve_by_pk(p.validator_pk)
        if record is None:
            events.append(Event("leave-ignored", detail={"reason": "not a validator"}))
            return
        if record.phase is not Phase.ACTIVE:
            events.append(Event("leave-ignored", record.id_str,
                                {"reason": "subnet not accepting stake changes"}))
            return
        record.pending_changes.append(PendingChange("leave", p.validator_pk))
        events.append(Event("leave-queued", record.id_str))

    def _on_kill(self, payload: bytes, events: list) -> None:
        p = decode_kill_payload(payload)
        record = self._resolve_by_pk(p.validator_pk)
        if record is None or record.phase is not Phase.ACTIVE:
            events.append(Event("kill-ignored",
                                detail={"reason": "no active subnet for voter"}))
            return
        height = self.processed_height - 1  # block being processed
        proposal = record.kill_proposal
        if proposal is not None and height > proposal.start_height + KILL_PROPOSAL_EXPIRY_BLOCKS:
            record.kill_proposal = None
            proposal = None
            events.append(Event("kill-expired", record.id_str))
        if not p.vote:
            if proposal is None:
                record.kill_proposal = KillProposal(p.validator_pk, height,
                                                    {p.validator_pk})
                events.append(Event("kill-proposed", record.id_str,
                                    {"height": height}))
            return
        if proposal is None:
            events.append(Event("kill-ignored", record.id_str,
                                {"reason": "no open proposal"}))
            return
        proposal.votes.add(p.validator_pk)
        stake = sum(record.validators[pk].weight for pk in proposal.votes
                    if pk in record.validators)
        events.append(Event("kill-vote", record.id_str, {"stake": stake}))
        if stake >= quorum_stake(record.total_collateral()):
            self._set_phase(record, Phase.TO_BE_KILLED)
            record.kill_proposal = None
            events.append(Event("kill-accepted", record.id_str,
                                {"stake": stake}))

    # --- registry queries and lifecycle operations ---

    def _record_by_address(self, addr20: bytes) -> SubnetRecord | None:
        for record in self.registry.values():
            if record.address == addr20:
                return record
        return None

    def _require(self, subnet_id: str) -> SubnetRecord:
        record = self.registry.get(subnet_id)
        if record is None:
            raise UnknownSubnet(f"no subnet {subnet_id!r}")
        return record

    def _set_phase(self, record: SubnetRecord, phase: Phase) -> None:
        assert _PHASE_ORDER[phase] >= _PHASE_ORDER[record.phase], \
            "lifecycle phases never move backwards"
        record.phase = phase

    def get_top_down_messages(self, subnet_id: str) -> TopDownBatch:
        """Drain finalized deposits, mints, and membership changes; the
        configuration number moves if and only if membership changed."""
        record = self._require(subnet_id)
        if record.phase is Phase.KILLED:
            raise SubnetKilled(f"{subnet_id} is killed")
        if record.phase is Phase.INITIALIZED:
            raise SubnetNotActive(f"{subnet_id} is not active yet")
        if record.pending_changes:
            self._apply_membership_changes(record)
        changes = tuple(record.undelivered_changes)
        record.undelivered_changes.clear()
        deposits = tuple(record.pending_deposits)
        record.pending_deposits.clear()
        mints = tuple(record.pending_mints)
        record.pending_mints.clear()
        return TopDownBatch(deposits, mints, changes,
                            record.current_config.number,
                            record.current_config.validators)

    def _apply_membership_changes(self, record: SubnetRecord) -> None:
        changes = list(record.pending_changes)
        record.pending_changes.clear()
        for c in changes:
            if c.kind == "join":
                record.validators[c.validator_pk] = Validator(
                    c.validator_pk, c.amount, c.backup_address)
            elif c.kind == "leave":
                v = record.validators.pop(c.validator_pk, None)
                if v is not None:
                    record.pending_returns.append(
                        (_backup_program(v.backup_address), v.weight))
            elif c.kind == "stake":
                v = record.validators[c.validator_pk]
                record.validators[c.validator_pk] = replace(
                    v, weight=v.weight + c.amount)
            elif c.kind == "unstake":
                v = record.validators[c.validator_pk]
                record.validators[c.validator_pk] = replace(
                    v, weight=v.weight - c.amount)
                record.pending_returns.append(
                    (_backup_program(v.backup_address), c.amount))
        self._adopt_new_configuration(record)
        record.undelivered_changes.extend(changes)

    def propose_kill(self, subnet_id: str, proposer_pk: bytes) -> KillProposal:
        record = self._require(subnet_id)
        if record.phase in (Phase.TO_BE_KILLED, Phase.KILLED):
            raise AlreadyKilled(f"{subnet_id} already has an accepted kill")
        if proposer_pk not in record.validators:
            raise NotAValidator("kill proposer must be a current validator")
        self._submit_kill_tx(proposer_pk, vote=False)
        if record.kill_proposal is None:
            raise ProposalExpired("proposal was not registered")
        return record.kill_proposal

    def vote_kill(self, subnet_id: str, voter_pk: bytes) -> SubnetRecord:
        record = self._require(subnet_id)
        if record.phase in (Phase.TO_BE_KILLED, Phase.KILLED):
            raise AlreadyKilled(f"{subnet_id} already has an accepted kill")
        if voter_pk not in record.validators:
            raise NotAValidator("kill voter must be a current validator")
        proposal = record.kill_proposal
        if proposal is None:
            raise ProposalExpired("no open kill proposal")
        if self.chain.height > proposal.start_height + KILL_PROPOSAL_EXPIRY_BLOCKS:
            record.kill_proposal = None
            raise ProposalExpired(
                f"proposal from block {proposal.start_height} expired")
        self._submit_kill_tx(voter_pk, vote=True)
        return record

    def _submit_kill_tx(self, pk: bytes, vote: bool) -> None:
        from .codec import KillPayload, encode_kill_payload
        from .tx import build_op_return_command, p2wpkh_script
        outpoint = self.chain.fund(20_000)
        tx = build_op_return_command(
            encode_kill_payload(KillPayload(pk, vote=vote)),
            [FundingUtxo(outpoint[0], outpoint[1], 20_000)],
            fee_rate=1, change_script=p2wpkh_script(bytes(20)))
        self.chain.submit(tx)
        self.chain.mine_block()
        self.sync()

    # --- checkpoint cycle ---

    def run_checkpoint_cycle(self, subnet_id: str, transfers=(), withdrawals=(),
                             fee_rate: int = 1, relayers: int = 1,
                             mine: bool = True) -> CheckpointBundle:
        """One full checkpoint period: pull top-down messages, build the
        checkpoint bundle (consolidating on membership change), and have each
        relayer submit it. Duplicate submissions die as DoubleSpend rejections
        at no cost to the subnet.

        transfers: (target subnet-id string, 20-byte dest, amount) triples.
        withdrawals: (bech32m address, amount) pairs.
        """
        record = self._require(subnet_id)
        if record.phase is Phase.KILLED:
            raise SubnetKilled(f"{subnet_id} is killed")
        if record.phase is Phase.INITIALIZED:
            raise SubnetNotActive(f"{subnet_id} is not active yet")
        self.get_top_down_messages(subnet_id)

        batch = _group_transfers(transfers)
        withdrawal_outs = [(decode_p2tr_address(addr), amount)
                           for addr, amount in withdrawals]
        stake_returns = list(record.pending_returns)

        spend_utxos = sorted(record.owned_utxos)
        if not record.needs_relock and len(spend_utxos) > 1:
            needed = (sum(a for _, _, a in transfers)
                      + sum(a for _, a in withdrawals)
                      + sum(a for _, a in stake_returns))
            spend_utxos = self._select_owned(record, needed)

        commitment = hashlib.sha256(
            b"btcipc/state" + record.address
            + record.checkpoint_number.to_bytes(8, "big")).digest()
        payload = CheckpointPayload(record.subnet_height, commitment,
                                    record.address)
        bundle = build_checkpoint_bundle(
            subnet_utxos=[FundingUtxo(t, v, self.chain.utxo_set[(t, v)].value)
                          for t, v in spend_utxos],
            payload=payload, batch=batch,
            withdrawals=withdrawal_outs, stake_returns=stake_returns,
            signers=record.lock.signer_spec(),
            leaf_script=record.lock.descriptor(self.hrp).leaf_script,
            subnet_change_script=p2tr_script(record.multisig.output_key),
            fee_rate=fee_rate, max_tx_vbytes=self.chain.max_tx_vbytes)

        accepted = 0
        for _ in range(max(relayers, 1)):
            try:
                self.chain.submit_all(bundle.transactions())
                accepted += 1
            except DoubleSpend:
                self.events.append(Event("relay-duplicate", subnet_id))
        assert accepted == 1, "exactly one relayer submission lands"

        record.pending_returns.clear()
        record.checkpoint_number += 1
        record.subnet_height += record.params.checkpoint_period
        if record.needs_relock:
            cfg = record.current_config
            record.lock = LockState(tuple(v.pk for v in cfg.validators),
                                    cfg.threshold_count, cfg.signer_count)
            record.needs_relock = False
        if mine:
            self.chain.mine_block()
            self.sync()
        return bundle

    def _select_owned(self, record: SubnetRecord, needed: int) -> list:
        from .fees import Utxo, select_coins
        utxos = [Utxo((t, v), self.chain.utxo_set[(t, v)].value)
                 for t, v in sorted(record.owned_utxos)]
        # Generous fee headroom; the builder re-checks exactly.
        try:
            chosen = select_coins(utxos, needed + 50_000)
        except Exception:
            return sorted(record.owned_utxos)
        return [u.outpoint for u in chosen]

    def _settle(self, record: SubnetRecord, events: list) -> None:
        """Final settlement of a killed subnet: everything left goes back to
        the validators' backup addresses pro rata by collateral."""
        self._set_phase(record, Phase.KILLED)
        collaterals = [(_backup_program(v.backup_address), v.weight)
                       for pk, v in sorted(record.validators.items())]
        utxos = [FundingUtxo(t, v, self.chain.utxo_set[(t, v)].value)
                 for t, v in sorted(record.owned_utxos)
                 if (t, v) in self.chain.utxo_set]
        if collaterals and utxos:
            tx = build_kill_settlement(collaterals, utxos,
                                       record.lock.signer_spec(),
                                       record.lock.descriptor(self.hrp).leaf_script,
                                       fee_rate=1)
            self.chain.submit(tx)
            events.append(Event("subnet-killed", record.id_str,
                                {"settlement_txid": tx.txid.hex()}))
        else:
            events.append(Event("subnet-killed", record.id_str, {}))


def _op_return_payload(spk: bytes) -> bytes:
    from .script import deserialize_script, PUSH_OPS
    ops = deserialize_script(spk).ops
    if len(ops) != 2 or not isinstance(ops[1], PUSH_OPS):
        raise ValueError("not a single-push OP_RETURN")
    return ops[1].payload


def _backup_program(address: str) -> bytes:
    try:
        return decode_p2tr_address(address)
    except Exception:
        # Collateral must go somewhere deterministic even for junk addresses.
        return hashlib.sha256(b"btcipc/backup-fallback" + address.encode()).digest()


def _group_transfers(transfers) -> TransferBatch:
    """Group (target subnet-id, dest, amount) triples by target address,
    preserving first-seen order."""
    from .address import parse_subnet_id
    grouped: dict[bytes, list] = {}
    for target, dest, amount in transfers:
        addr = (parse_subnet_id(target).address.payload
                if isinstance(target, str) else bytes(target))
        grouped.setdefault(addr, []).append((dest, amount))
    return TransferBatch(tuple(
        (addr, tuple(items)) for addr, items in grouped.items()))


# --- event-script files ---

def parse_event_script(lines) -> list[tuple[list, list]]:
    """Parse the line-oriented subnet event feed into per-checkpoint batches.

    Records: `TRANSFER <target-subnet-id> <dest-hex> <amount-sat>`,
    `WITHDRAW <btc-address> <amount-sat>`, `CHECKPOINT` (flushes a batch).
    """
    if isinstance(lines, (str, bytes)):
        raise TypeError("pass an iterable of lines or an open file")
    cycles: list[tuple[list, list]] = []
    transfers: list = []
    withdrawals: list = []
    for raw in lines:
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if fields[0] == "TRANSFER" and len(fields) == 4:
            transfers.append((fields[1], bytes.fromhex(fields[2]), int(fields[3])))
        elif fields[0] == "WITHDRAW" and len(fields) == 3:
            withdrawals.append((fields[1], int(fields[2])))
        elif fields[0] == "CHECKPOINT" and len(fields) == 1:
            cycles.append((transfers, withdrawals))
            transfers, withdrawals = [], []
        else:
            raise ValueError(f"unrecognized event record: {line!r}")
    if transfers or withdrawals:
        cycles.append((transfers, withdrawals))
    return cycles


def load_event_script(path) -> list[tuple[list, list]]:
    with open(path) as fh:
        return parse_event_script(fh)
