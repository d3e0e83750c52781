"""Peg-in / peg-out orchestration, deposits, slashing, enabler recycling.

``Bridge`` holds the full protocol state for one packet: both chains, the
presigned template graph, functionary records, the satoshi ledger, and an
append-only event log.  All methods are deterministic; the harness drives
them from a scenario script.

Deposits are denominated on the source chain.  Slashing pays the losing
party's deposit into a pot that first reimburses every challenger's dispute
costs, with the remainder going to the first-confirmed winner; the
alternative equal-split model is recorded in the run report only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .chain import SECONDARY, SOURCE, ChainView, SimClock
from .econ import CostTable, DepositParams, required_deposit
from .errors import (ActiveOperation, ConcurrencyLimit, EnablerUnavailable,
                     FunctionaryOffline, InsufficientConfirmations,
                     MissingSignature, NoCapacity, NotLinked, NotTriggered,
                     SpendRejected, WrongDenomination)
from .txgraph import (EnablerRole, EnablerState, PacketGraph, TxKind,
                      VmxoState, build_packet_templates)


class FunctionaryStatus(str, Enum):
    ACTIVE = "Active"
    SLASHED = "Slashed"
    WITHDRAWN = "Withdrawn"


@dataclass
class Functionary:
    id: str
    deposit: int
    status: FunctionaryStatus = FunctionaryStatus.ACTIVE
    online: bool = True


class PegOutState(str, Enum):
    REQUESTED = "Requested"
    LINKED = "Linked"
    FRONTED = "Fronted"
    PROVEN = "Proven"
    KICKOFF = "Kickoff"
    DISPUTED = "Disputed"
    UNLOCKED = "Unlocked"
    INVALIDATED = "Invalidated"
    CLOSED = "Closed"


@dataclass
class PegIn:
    user: str
    amount: int
    vmxo_id: str
    deposit_tx: Optional[str] = None
    deposit_block: Optional[str] = None
    signatures: set[str] = field(default_factory=set)
    minted: bool = False


@dataclass
class PegOut:
    user: str
    amount: int
    burn_tx: Optional[str] = None
    burn_block: Optional[str] = None
    vmxo_id: Optional[str] = None
    operator: Optional[str] = None
    fronted_tx: Optional[str] = None
    kickoff_tick: Optional[int] = None
    state: PegOutState = PegOutState.REQUESTED


# fee model for dispute publications, in vBytes per action
DISPUTE_ACTION_VBYTES = {
    "commit-proof": "commit_proof",
    "challenge": "challenge",
    "alt-chain-proof": "challenge",
    "publish-hashes": "publish_hashes_per_step",
    "publish-choice": "publish_choice_per_step",
    "publish-full-trace": "publish_full_trace",
    "read-challenge": "challenge",
    "publish-read-hashes": "publish_hashes_per_step",
    "publish-read-choice": "publish_choice_per_step",
    "execute-leaf": "sha256_computation",
}


class Ledger:
    """Satoshi accounts; every movement is a balanced transfer."""

    def __init__(self):
        self.balances: dict[str, int] = {}

    def fund(self, account: str, amount: int) -> None:
        self.balances[account] = self.balances.get(account, 0) + amount

    def transfer(self, frm: str, to: str, amount: int) -> None:
        if amount < 0:
            raise ValueError("negative transfer")
        if self.balances.get(frm, 0) < amount:
            raise ValueError(f"insolvent account {frm}")
        self.balances[frm] -= amount
        self.balances[to] = self.balances.get(to, 0) + amount

    def total(self) -> int:
        return sum(self.balances.values())


class Bridge:
    """Protocol engine for one packet on one pair of chains."""

    def __init__(self, functionary_ids: list[str], vmxo_count: int,
                 denomination: int, fee_rate: int = 1,
                 source_confirmations: int = 6,
                 secondary_confirmations: int = 10,
                 fee_fraction: float = 0.001,
                 cost_table: Optional[CostTable] = None,
                 pegout_limit: int = 1,
                 t_sep: int = 0):
        self.clock = SimClock()
        self.source = ChainView(SOURCE)
        self.secondary = ChainView(SECONDARY)
        self.fee_rate = fee_rate
        self.fee_fraction = fee_fraction
        self.source_confirmations = source_confirmations
        self.secondary_confirmations = secondary_confirmations
        self.cost_table = cost_table or CostTable.default()
        self.denomination = denomination
        self.pegout_limit = pegout_limit
        self.t_sep = t_sep
        deposit = required_deposit(
            DepositParams(len(functionary_ids), fee_rate), self.cost_table)
        self.deposit_per_functionary = deposit
        self.functionaries = {f: Functionary(f, deposit)
                              for f in functionary_ids}
        self.graph: PacketGraph = build_packet_templates(
            functionary_ids, vmxo_count, denomination,
            deposit_per_functionary=deposit)
        self.ledger = Ledger()
        self.events: list[str] = []
        self._seq = 0
        self.pegins: list[PegIn] = []
        self.pegouts: list[PegOut] = []
        self.active_pegouts: dict[str, int] = {f: 0 for f in functionary_ids}
        self.last_kickoff_tick: dict[str, int] = {}
        self.dispute_costs: dict[str, int] = {f: 0 for f in functionary_ids}
        self.slashed_pot_received: dict[str, int] = {}
        for f in functionary_ids:
            self.ledger.fund(f"deposit:{f}", deposit)
            self.ledger.fund(f"wallet:{f}", 50 * denomination + 100 * deposit)

    # -- event log ---------------------------------------------------------

    def log(self, event: str, **fields) -> None:
        self._seq += 1
        kv = " ".join(f"{k}={fields[k]}" for k in sorted(fields))
        self.events.append(
            f"t={self.clock.now} seq={self._seq} ev={event} {kv}".rstrip())

    def transfer(self, frm: str, to: str, amount: int, why: str) -> None:
        self.ledger.transfer(frm, to, amount)
        self.log("transfer", src=frm, dst=to, amount=amount, why=why)

    def pay_fee(self, party: str, vbytes: int, why: str) -> int:
        fee = vbytes * self.fee_rate
        self.transfer(f"wallet:{party}", "fees", fee, why)
        return fee

    def _log_spends(self, tx) -> None:
        for ref in tx.inputs:
            if not ref[0].startswith("ext"):
                self.log("spend", out=f"{ref[0]}:{ref[1]}", by=tx.id)

    def pay_dispute_fee(self, party: str, action: str) -> int:
        vb = getattr(self.cost_table, DISPUTE_ACTION_VBYTES[action])
        fee = self.pay_fee(party, vb, f"dispute:{action}")
        self.dispute_costs[party] = self.dispute_costs.get(party, 0) + fee
        return fee

    # -- peg-in ------------------------------------------------------------

    def request_pegin(self, user: str, amount: int) -> PegIn:
        if amount != self.denomination:
            raise WrongDenomination(f"{amount} != {self.denomination}")
        offline = [f for f, rec in self.functionaries.items()
                   if not rec.online]
        if offline:
            raise FunctionaryOffline(",".join(sorted(offline)))
        taken = {p.vmxo_id for p in self.pegins}
        free = [v for v in self.graph.vmxo_ids
                if self.graph.vmxos[v].state == VmxoState.AWAITING_PEGIN
                and v not in taken]
        if not free:
            raise NoCapacity("no vmxo awaiting peg-in")
        pegin = PegIn(user, amount, free[0])
        self.pegins.append(pegin)
        self.log("pegin_requested", user=user, vmxo=pegin.vmxo_id,
                 amount=amount)
        return pegin

    def sign_pegin(self, pegin: PegIn, signer: str) -> None:
        pegin.signatures.add(signer)

    def broadcast_pegin(self, pegin: PegIn) -> str:
        """User's deposit transaction hits the source chain mempool; the
        harness mines it into a block."""
        pegin.deposit_tx = f"pegin:{pegin.user}:{pegin.vmxo_id}"
        return pegin.deposit_tx

    def execute_pegin(self, pegin: PegIn) -> None:
        required = set(self.functionaries) | {pegin.user}
        missing = required - pegin.signatures
        if missing:
            raise MissingSignature(",".join(sorted(missing)))
        if pegin.deposit_block is None or \
                self.source.confirmations(pegin.deposit_block) < self.source_confirmations:
            raise InsufficientConfirmations(pegin.deposit_tx or "?")
        vmxo = self.graph.vmxos[pegin.vmxo_id]
        vmxo.state = VmxoState.LOCKED
        vmxo.locking_tx = pegin.deposit_tx
        self.transfer(f"user:{pegin.user}:src", f"vmxo:{pegin.vmxo_id}",
                      pegin.amount, "pegin-lock")
        # wrapped issuance is a liability account and may go negative
        self.ledger.fund(f"user:{pegin.user}:wrapped", pegin.amount)
        self.ledger.fund("wrapped-issuance", -pegin.amount)
        self.log("transfer", src="wrapped-issuance",
                 dst=f"user:{pegin.user}:wrapped", amount=pegin.amount,
                 why="mint")
        pegin.minted = True
        self.log("minted", user=pegin.user, vmxo=pegin.vmxo_id,
                 amount=pegin.amount)

    # -- peg-out -----------------------------------------------------------

    def request_pegout(self, user: str, amount: int) -> PegOut:
        if amount != self.denomination:
            raise WrongDenomination(f"{amount} != {self.denomination}")
        pegout = PegOut(user, amount)
        self.pegouts.append(pegout)
        pegout.burn_tx = f"burn:{user}:{len(self.pegouts)}"
        self.transfer(f"user:{user}:wrapped", "wrapped-issuance", amount,
                      "burn")
        self.log("pegout_burn", user=user, tx=pegout.burn_tx, amount=amount)
        return pegout

    def link_pegout(self, pegout: PegOut) -> str:
        """Deterministic link: oldest unlinked Locked VMXO of the amount."""
        linked = {p.vmxo_id for p in self.pegouts if p.vmxo_id}
        for v in self.graph.vmxo_ids:
            if v in linked:
                continue
            if self.graph.vmxos[v].state == VmxoState.LOCKED:
                pegout.vmxo_id = v
                pegout.state = PegOutState.LINKED
                self.log("pegout_linked", tx=pegout.burn_tx, vmxo=v)
                return v
        raise NoCapacity("no locked vmxo to link")

    def front_funds(self, pegout: PegOut, operator: str) -> str:
        rec = self.functionaries[operator]
        if rec.status != FunctionaryStatus.ACTIVE:
            raise EnablerUnavailable(f"{operator} is {rec.status.value}")
        if pegout.vmxo_id is None:
            raise NotLinked(pegout.burn_tx or "?")
        if pegout.burn_block is None or \
                self.secondary.confirmations(pegout.burn_block) < self.secondary_confirmations:
            raise InsufficientConfirmations(pegout.burn_tx or "?")
        enabler = self.graph.find_enabler(operator, EnablerRole.OPERATOR,
                                          pegout.vmxo_id)
        if enabler is None or enabler.state != EnablerState.LIVE:
            raise EnablerUnavailable(f"operator enabler for {operator}")
        if self.active_pegouts[operator] >= self.pegout_limit:
            raise ConcurrencyLimit(operator)
        last = self.last_kickoff_tick.get(operator)
        if self.t_sep and last is not None and \
                self.clock.now - last < self.t_sep:
            raise ConcurrencyLimit(f"{operator}: t_sep not elapsed")
        fronted = pegout.amount - int(pegout.amount * self.fee_fraction)
        pegout.operator = operator
        pegout.fronted_tx = f"front:{operator}:{pegout.burn_tx}"
        pegout.state = PegOutState.FRONTED
        self.active_pegouts[operator] += 1
        self.transfer(f"wallet:{operator}", f"user:{pegout.user}:src",
                      fronted, "front")
        self.log("fronted", operator=operator, tx=pegout.fronted_tx,
                 amount=fronted, user=pegout.user)
        return pegout.fronted_tx

    def prove_front(self, pegout: PegOut, front_block: str) -> None:
        if self.source.confirmations(front_block) < self.source_confirmations:
            raise InsufficientConfirmations(pegout.fronted_tx or "?")
        pegout.state = PegOutState.PROVEN
        self.log("front_proven", tx=pegout.fronted_tx)

    def publish_kickoff(self, pegout: PegOut, operator: str,
                        honest_flow: bool = True) -> None:
        """Operator commits the proof of the verification predicate.

        ``honest_flow`` False marks a raw kick-off that skipped the guarded
        path (the template itself carries no concurrency check on-chain)."""
        vmxo = self.graph.vmxos[pegout.vmxo_id]
        kick = self.graph.template(f"kickoff:{pegout.vmxo_id}:{operator}")
        self.graph.execute(kick)
        self._log_spends(kick)
        vmxo.state = VmxoState.KICKOFF_OPEN
        vmxo.operator = operator
        pegout.operator = operator
        pegout.state = PegOutState.KICKOFF
        pegout.kickoff_tick = self.clock.now
        self.last_kickoff_tick[operator] = self.clock.now
        self.pay_dispute_fee(operator, "commit-proof")
        self.log("kickoff", operator=operator, vmxo=pegout.vmxo_id,
                 honest=honest_flow)

    def unlock(self, pegout: PegOut) -> None:
        """No-challenge (or all-challenges-defeated) completion: the
        Unlocking template pays the operator, consuming the operator enabler
        and the open kick-off output."""
        operator = pegout.operator
        vmxo = self.graph.vmxos[pegout.vmxo_id]
        if vmxo.state != VmxoState.KICKOFF_OPEN or vmxo.operator != operator:
            raise NotTriggered(pegout.vmxo_id)
        unlock = self.graph.template(f"unlocking:{pegout.vmxo_id}:{operator}")
        self.graph.execute(unlock)
        self._log_spends(unlock)
        enabler = self.graph.find_enabler(operator, EnablerRole.OPERATOR,
                                          pegout.vmxo_id)
        enabler.state = EnablerState.CONSUMED
        vmxo.state = VmxoState.UNLOCKED
        pegout.state = PegOutState.UNLOCKED
        self.active_pegouts[operator] -= 1
        self.pay_fee(operator, unlock.vbytes, "unlocking")
        self.transfer(f"vmxo:{pegout.vmxo_id}", f"wallet:{operator}",
                      pegout.amount, "unlock")
        self.log("unlocked", operator=operator, vmxo=pegout.vmxo_id,
                 amount=pegout.amount)

    def adhoc_theft(self, vmxo_id: str, thief: str) -> bool:
        """Attempt a non-template multisig spend of a locked VMXO.

        Possible only if every functionary retained (leaked) their keys."""
        if not self.graph.adhoc_spend_allowed(vmxo_id):
            self.log("theft_rejected", thief=thief, vmxo=vmxo_id)
            return False
        vmxo = self.graph.vmxos[vmxo_id]
        vmxo.state = VmxoState.UNLOCKED
        self.transfer(f"vmxo:{vmxo_id}", f"wallet:{thief}",
                      vmxo.amount, "adhoc-theft")
        self.log("theft", thief=thief, vmxo=vmxo_id, amount=vmxo.amount)
        return True

    def force_close(self, vmxo_a: str, vmxo_b: str, closer: str) -> None:
        """An honest functionary terminates an operator's second concurrent
        kick-off, exposing the operator's deposit."""
        operator = self.graph.vmxos[vmxo_a].operator
        tx = self.graph.apply_force_close(vmxo_a, vmxo_b)
        self._log_spends(tx)
        self.pay_fee(closer, tx.vbytes, "force-close")
        self.dispute_costs[closer] = self.dispute_costs.get(closer, 0) \
            + tx.vbytes * self.fee_rate
        if operator is not None:
            self.active_pegouts[operator] = max(
                0, self.active_pegouts[operator] - 1)
        self.log("force_close", closer=closer, operator=operator,
                 vmxo_a=vmxo_a, vmxo_b=vmxo_b)

    # -- slashing and recycling -------------------------------------------

    def slash(self, loser: str, winner: str, trigger_kind: TxKind,
              challengers: Optional[list[str]] = None) -> None:
        rec = self.functionaries[loser]
        if rec.status == FunctionaryStatus.SLASHED:
            return  # idempotent
        if trigger_kind not in (TxKind.PROVER_LOSES, TxKind.VERIFIER_LOSES,
                                TxKind.FORCE_CLOSE, TxKind.KILL_ENABLERS):
            raise NotTriggered(trigger_kind.value)
        rec.status = FunctionaryStatus.SLASHED
        kill = self.graph.template(f"kill:{loser}")
        burnt = self.graph.burn_enablers(loser, kill)
        self.log("enablers_burnt", loser=loser, count=len(burnt))
        # deposit pot: reimburse challengers' dispute costs, rest to winner
        pot = self.ledger.balances.get(f"deposit:{loser}", 0)
        paid = 0
        for ch in sorted(set(challengers or [])):
            if ch == loser:
                continue
            refund = min(self.dispute_costs.get(ch, 0), pot - paid)
            if refund > 0:
                self.transfer(f"deposit:{loser}", f"wallet:{ch}", refund,
                              "cost-reimbursement")
                paid += refund
        remainder = pot - paid
        if remainder > 0:
            self.transfer(f"deposit:{loser}", f"wallet:{winner}", remainder,
                          "slash")
        self.slashed_pot_received[winner] = \
            self.slashed_pot_received.get(winner, 0) + remainder
        self.log("slashed", loser=loser, winner=winner, pot=pot,
                 reimbursed=paid)
        # the loser's in-flight peg-outs: never-fronted ones return to the
        # pool for an honest operator; fronted ones stay locked
        for p in self.pegouts:
            if p.operator != loser or p.state not in (
                    PegOutState.FRONTED, PegOutState.PROVEN,
                    PegOutState.KICKOFF, PegOutState.DISPUTED):
                continue
            vmxo = self.graph.vmxos[p.vmxo_id]
            self.active_pegouts[loser] = max(0, self.active_pegouts[loser] - 1)
            if p.fronted_tx is None:
                p.state = PegOutState.LINKED
                p.operator = None
                if vmxo.state == VmxoState.KICKOFF_OPEN:
                    vmxo.state = VmxoState.LOCKED
                    vmxo.operator = None
                self.log("pegout_released", loser=loser, vmxo=p.vmxo_id)
            else:
                p.state = PegOutState.INVALIDATED
                if vmxo.state == VmxoState.KICKOFF_OPEN:
                    vmxo.state = VmxoState.INVALIDATED
                self.log("pegout_invalidated", operator=loser, vmxo=p.vmxo_id)

    def recycle_enablers(self, pegout: PegOut) -> dict[str, int]:
        """Post-terminal accounting of the enabler pool for one peg-out."""
        if pegout.state not in (PegOutState.UNLOCKED, PegOutState.INVALIDATED,
                                PegOutState.CLOSED):
            raise NotTriggered(pegout.burn_tx or "?")
        counts = {"live": 0, "consumed": 0, "burnt": 0}
        for e in self.graph.enablers.values():
            if e.vmxo_id != pegout.vmxo_id:
                continue
            counts[{EnablerState.LIVE: "live", EnablerState.CONSUMED: "consumed",
                    EnablerState.BURNT: "burnt"}[e.state]] += 1
        self.log("enablers_recycled", vmxo=pegout.vmxo_id, **counts)
        return counts

    def withdraw_deposit(self, functionary: str) -> None:
        rec = self.functionaries[functionary]
        active = any(p.operator == functionary and p.state in (
            PegOutState.FRONTED, PegOutState.PROVEN, PegOutState.KICKOFF,
            PegOutState.DISPUTED) for p in self.pegouts)
        if active:
            raise ActiveOperation(functionary)
        rec.status = FunctionaryStatus.WITHDRAWN
        amount = self.ledger.balances.get(f"deposit:{functionary}", 0)
        if amount:
            self.transfer(f"deposit:{functionary}", f"wallet:{functionary}",
                          amount, "withdraw")
        self.log("withdrawn", functionary=functionary, amount=amount)

    # -- queries -----------------------------------------------------------

    def honest_unlock_allowed(self, pegout: PegOut) -> bool:
        """Oracle: does the peg-out's burn sit on the canonical secondary
        chain with enough confirmations?"""
        if pegout.burn_block is None:
            return False
        return self.secondary.is_canonical(pegout.burn_block)
