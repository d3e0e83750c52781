"""Presigned transaction DAG: outputs, templates, enablers, key deletion.

A packet is built as a graph of transaction templates per VMXO: one Locking,
N Kick-off and N Unlocking templates, bilateral dispute channels with
prover-loses / verifier-loses terminals, a Kill-enablers template per
functionary, and Force-close templates for each pair of an operator's
Open-kick-off outputs across the packet.

Signatures are identity sets bound to the template id at signing time, so
mutating any confirmed template's content invalidates every descendant's
signatures (the id change propagates through input references).  Key
deletion is a permission flag: once deleted, a functionary can never sign
anything for that VMXO outside the presigned templates.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional

from .errors import (AlreadyClosed, KeyDeleted, NoTrigger, NotSameOperator,
                     PrematureDeletion, SpendRejected, TooFewFunctionaries)


class OutputKind(str, Enum):
    LOCKING = "Locking"
    OPEN_KICKOFF = "OpenKickoff"
    ENABLER = "EnablerOut"
    DEPOSIT = "DepositOut"
    DISPUTE_CHANNEL = "DisputeChannelOut"
    REWARD = "RewardOut"
    USER_PAYOUT = "UserPayout"


class TxKind(str, Enum):
    LOCKING = "Locking"
    KICKOFF = "Kickoff"
    UNLOCKING = "Unlocking"
    CHALLENGE_STEP = "ChallengeStep"
    PROVER_LOSES = "ProverLoses"
    VERIFIER_LOSES = "VerifierLoses"
    KILL_ENABLERS = "KillEnablers"
    FORCE_CLOSE = "ForceClose"
    STOPWATCH_TICK = "StopWatchTick"
    STOPWATCH_STOP = "StopWatchStop"
    ENABLER_CREATE = "EnablerCreate"
    DEPOSIT_CREATE = "DepositCreate"


class EnablerRole(str, Enum):
    OPERATOR = "Operator"
    VERIFIER = "Verifier"


class EnablerState(str, Enum):
    LIVE = "Live"
    CONSUMED = "Consumed"
    BURNT = "Burnt"


class KeyState(str, Enum):
    HELD = "Held"
    DELETED = "Deleted"
    LEAKED = "Leaked"


class VmxoState(str, Enum):
    AWAITING_PEGIN = "AwaitingPegin"
    LOCKED = "Locked"
    KICKOFF_OPEN = "KickoffOpen"
    UNLOCKED = "Unlocked"
    INVALIDATED = "Invalidated"


@dataclass(frozen=True)
class SpendCondition:
    signers: frozenset[str] = frozenset()
    timelock: Optional[int] = None  # relative, in ticks
    predicate: Optional[str] = None  # e.g. "admitCounterProof", "loserTerminal"


@dataclass
class SimOutput:
    kind: OutputKind
    amount: int
    condition: SpendCondition = SpendCondition()
    tag: str = ""  # owner / channel routing, e.g. "enabler:f1:Operator:v0"

    def serial(self) -> list:
        return [self.kind.value, self.amount,
                sorted(self.condition.signers),
                self.condition.timelock, self.condition.predicate, self.tag]


EXTERNAL = "ext"  # pseudo tx-id prefix for wallet-funded inputs


@dataclass
class SimTx:
    template_kind: TxKind
    inputs: list[tuple[str, int]]
    outputs: list[SimOutput]
    vbytes: int = 200
    signatures: dict[str, str] = field(default_factory=dict)  # signer -> id signed over

    def serial(self) -> str:
        return json.dumps([self.template_kind.value, self.inputs,
                           [o.serial() for o in self.outputs], self.vbytes],
                          separators=(",", ":"))

    @property
    def id(self) -> str:
        return hashlib.sha256(self.serial().encode()).hexdigest()[:16]

    def valid_signers(self) -> set[str]:
        cur = self.id
        return {s for s, over in self.signatures.items() if over == cur}

    def is_fully_signed(self, required: Iterable[str]) -> bool:
        return set(required) <= self.valid_signers()

    def fee(self, resolve_amount) -> int:
        inflow = sum(resolve_amount(ref) for ref in self.inputs)
        return inflow - sum(o.amount for o in self.outputs)


@dataclass
class Enabler:
    owner: str
    role: EnablerRole
    vmxo_id: str
    counterparty: Optional[str] = None  # verifier role: the watched operator
    state: EnablerState = EnablerState.LIVE
    outpoint: Optional[tuple[str, int]] = None

    @property
    def key(self) -> str:
        cp = self.counterparty or "-"
        return f"enabler:{self.owner}:{self.role.value}:{self.vmxo_id}:{cp}"


@dataclass
class Vmxo:
    id: str
    packet_id: str
    amount: int
    state: VmxoState = VmxoState.AWAITING_PEGIN
    locking_tx: Optional[str] = None
    operator: Optional[str] = None  # set while KickoffOpen / after Unlocked


class PacketGraph:
    """Template graph plus execution-time spend tracking for one packet."""

    def __init__(self, packet_id: str, functionaries: list[str],
                 vmxo_ids: list[str], amount: int):
        self.packet_id = packet_id
        self.functionaries = list(functionaries)
        self.vmxo_ids = list(vmxo_ids)
        self.amount = amount
        self.templates: dict[str, SimTx] = {}
        self.names: dict[str, str] = {}  # template name -> template id
        self.enablers: dict[str, Enabler] = {}
        self.key_states: dict[tuple[str, str], KeyState] = {}
        self.vmxos: dict[str, Vmxo] = {}
        self.spent: dict[tuple[str, int], str] = {}  # outpoint -> spender id
        self.executed: list[SimTx] = []
        self.closed_kickoffs: set[str] = set()  # vmxo ids force-closed

    # -- construction ------------------------------------------------------

    def _add(self, name: str, tx: SimTx) -> SimTx:
        self.templates[tx.id] = tx
        self.names[name] = tx.id
        return tx

    def template(self, name: str) -> SimTx:
        return self.templates[self.names[name]]

    # -- lookups -----------------------------------------------------------

    def output_at(self, ref: tuple[str, int]) -> Optional[SimOutput]:
        tx = self.templates.get(ref[0])
        if tx is None or ref[1] >= len(tx.outputs):
            return None
        return tx.outputs[ref[1]]

    def live_enablers(self, owner: str) -> list[Enabler]:
        return [e for e in self.enablers.values()
                if e.owner == owner and e.state == EnablerState.LIVE]

    def find_enabler(self, owner: str, role: EnablerRole, vmxo_id: str,
                     counterparty: Optional[str] = None) -> Optional[Enabler]:
        cp = counterparty or "-"
        return self.enablers.get(f"enabler:{owner}:{role.value}:{vmxo_id}:{cp}")

    # -- signing and key management ---------------------------------------

    def sign_template(self, tx: SimTx, signer: str, vmxo_id: str) -> SimTx:
        state = self.key_states.get((signer, vmxo_id), KeyState.HELD)
        if state == KeyState.DELETED:
            raise KeyDeleted(f"{signer} for {vmxo_id}")
        tx.signatures[signer] = tx.id  # idempotent: same signer, same id
        return tx

    def delete_keys(self, functionary: str, vmxo_id: str) -> KeyState:
        for name in (f"locking:{vmxo_id}",):
            if not self.template(name).is_fully_signed(self.functionaries):
                raise PrematureDeletion(name)
        for f in self.functionaries:
            tmpl = self.template(f"unlocking:{vmxo_id}:{f}")
            if not tmpl.is_fully_signed(self.functionaries):
                raise PrematureDeletion(f"unlocking:{vmxo_id}:{f}")
        self.key_states[(functionary, vmxo_id)] = KeyState.DELETED
        return KeyState.DELETED

    def leak_keys(self, functionary: str, vmxo_id: str) -> KeyState:
        self.key_states[(functionary, vmxo_id)] = KeyState.LEAKED
        return KeyState.LEAKED

    def adhoc_spend_allowed(self, vmxo_id: str) -> bool:
        """A non-template spend of the VMXO needs every key still usable."""
        return all(self.key_states.get((f, vmxo_id)) == KeyState.LEAKED
                   for f in self.functionaries)

    # -- execution ---------------------------------------------------------

    def execute(self, tx: SimTx) -> SimTx:
        """Record a template execution, enforcing single-spend."""
        for ref in tx.inputs:
            if ref[0].startswith(EXTERNAL):
                continue
            if ref in self.spent:
                raise SpendRejected(f"double spend of {ref}")
        for ref in tx.inputs:
            if not ref[0].startswith(EXTERNAL):
                self.spent[ref] = tx.id
        self.executed.append(tx)
        return tx

    def is_spent(self, ref: tuple[str, int]) -> bool:
        return ref in self.spent

    # -- enabler/force-close semantics -------------------------------------

    def burn_enablers(self, loser: str, trigger: Optional[SimTx]) -> list[Enabler]:
        if trigger is None:
            raise NoTrigger(loser)
        if trigger.template_kind not in (TxKind.PROVER_LOSES, TxKind.VERIFIER_LOSES,
                                         TxKind.FORCE_CLOSE, TxKind.KILL_ENABLERS):
            raise NoTrigger(trigger.template_kind.value)
        burnt = []
        for e in self.live_enablers(loser):
            e.state = EnablerState.BURNT
            burnt.append(e)
        return burnt

    def apply_force_close(self, vmxo_a: str, vmxo_b: str) -> SimTx:
        """Terminate the second of two simultaneous kick-offs by one operator."""
        va, vb = self.vmxos[vmxo_a], self.vmxos[vmxo_b]
        if va.state != VmxoState.KICKOFF_OPEN or vb.state != VmxoState.KICKOFF_OPEN:
            raise AlreadyClosed(f"{vmxo_a},{vmxo_b}")
        if va.operator is None or va.operator != vb.operator:
            raise NotSameOperator(f"{va.operator} vs {vb.operator}")
        op = va.operator
        name = f"forceclose:{op}:{vmxo_a}:{vmxo_b}"
        alt = f"forceclose:{op}:{vmxo_b}:{vmxo_a}"
        tx = self.template(name if name in self.names else alt)
        self.execute(tx)
        vb.state = VmxoState.LOCKED
        vb.operator = None
        self.closed_kickoffs.add(vmxo_b)
        return tx


def build_packet_templates(functionaries: list[str], vmxo_count: int,
                           amount: int, packet_id: str = "pkt0",
                           deposit_per_functionary: int = 0) -> PacketGraph:
    """Build the full presigned template graph for one packet."""
    n = len(functionaries)
    if n < 2:
        raise TooFewFunctionaries(str(n))
    if vmxo_count < 1:
        raise ValueError("vmxo_count must be >= 1")
    vmxo_ids = [f"{packet_id}:vmxo{i}" for i in range(vmxo_count)]
    g = PacketGraph(packet_id, functionaries, vmxo_ids, amount)

    # deposits and enabler-creation, one funding tx per functionary
    for f in functionaries:
        dep = SimTx(TxKind.DEPOSIT_CREATE, [(f"{EXTERNAL}:{f}", 0)],
                    [SimOutput(OutputKind.DEPOSIT, deposit_per_functionary,
                               SpendCondition(predicate="loserTerminal"),
                               tag=f"deposit:{f}")], vbytes=150)
        g._add(f"deposit:{f}", dep)
        outs = []
        for v in vmxo_ids:
            ops = [Enabler(f, EnablerRole.OPERATOR, v)]
            vers = [Enabler(f, EnablerRole.VERIFIER, v, counterparty=other)
                    for other in functionaries if other != f]
            for e in ops + vers:
                e.outpoint = None  # filled after tx id is known
                outs.append((e, SimOutput(OutputKind.ENABLER, 0,
                                          SpendCondition(signers=frozenset({f})),
                                          tag=e.key)))
        create = SimTx(TxKind.ENABLER_CREATE, [(f"{EXTERNAL}:{f}", 0)],
                       [o for _, o in outs], vbytes=100 + 30 * len(outs))
        g._add(f"enablers:{f}", create)
        for idx, (e, _) in enumerate(outs):
            e.outpoint = (create.id, idx)
            g.enablers[e.key] = e

    for v in vmxo_ids:
        g.vmxos[v] = Vmxo(v, packet_id, amount)
        locking = SimTx(TxKind.LOCKING, [(f"{EXTERNAL}:user", 0)],
                        [SimOutput(OutputKind.LOCKING, amount,
                                   SpendCondition(signers=frozenset(functionaries)),
                                   tag=f"lock:{v}")], vbytes=300)
        g._add(f"locking:{v}", locking)

        for f in functionaries:
            verifiers = [x for x in functionaries if x != f]
            kick_outs = [SimOutput(OutputKind.OPEN_KICKOFF, 0,
                                   SpendCondition(signers=frozenset({f})),
                                   tag=f"openkick:{v}:{f}")]
            kick_outs += [SimOutput(OutputKind.DISPUTE_CHANNEL, 0,
                                    SpendCondition(signers=frozenset({f, w})),
                                    tag=f"channel:{v}:{f}:{w}")
                          for w in verifiers]
            kickoff = SimTx(TxKind.KICKOFF, [(f"{EXTERNAL}:{f}", 0)],
                            kick_outs, vbytes=2513)
            g._add(f"kickoff:{v}:{f}", kickoff)

            for ci, w in enumerate(verifiers):
                chan_ref = (kickoff.id, 1 + ci)
                pl = SimTx(TxKind.PROVER_LOSES, [chan_ref],
                           [SimOutput(OutputKind.REWARD, 0,
                                      SpendCondition(signers=frozenset({w}),
                                                     predicate="killEnablers"),
                                      tag=f"loser:{f}")], vbytes=400)
                g._add(f"proverloses:{v}:{f}:{w}", pl)
                vl = SimTx(TxKind.VERIFIER_LOSES, [chan_ref],
                           [SimOutput(OutputKind.REWARD, 0,
                                      SpendCondition(signers=frozenset({f}),
                                                     predicate="killEnablers"),
                                      tag=f"loser:{w}")], vbytes=400)
                g._add(f"verifierloses:{v}:{f}:{w}", vl)

            op_enabler = g.find_enabler(f, EnablerRole.OPERATOR, v)
            unlocking = SimTx(
                TxKind.UNLOCKING,
                [(locking.id, 0), (kickoff.id, 0), op_enabler.outpoint],
                [SimOutput(OutputKind.REWARD, amount,
                           SpendCondition(signers=frozenset({f}),
                                          timelock=1),
                           tag=f"payout:{f}")],
                vbytes=500)
            g._add(f"unlocking:{v}:{f}", unlocking)

    # kill-enablers per functionary: spends all their enabler outputs
    for f in functionaries:
        refs = [e.outpoint for e in g.enablers.values() if e.owner == f]
        kill = SimTx(TxKind.KILL_ENABLERS, sorted(refs),
                     [SimOutput(OutputKind.REWARD, 0,
                                SpendCondition(predicate="loserTerminal"),
                                tag=f"killed:{f}")], vbytes=200 + 20 * len(refs))
        g._add(f"kill:{f}", kill)

    # force-close per pair of one operator's open-kick-off outputs
    for f in functionaries:
        for i, va in enumerate(vmxo_ids):
            for vb in vmxo_ids[i + 1:]:
                ka = g.template(f"kickoff:{va}:{f}")
                kb = g.template(f"kickoff:{vb}:{f}")
                fc = SimTx(TxKind.FORCE_CLOSE, [(ka.id, 0), (kb.id, 0)],
                           [SimOutput(OutputKind.REWARD, 0,
                                      SpendCondition(predicate="killEnablers"),
                                      tag=f"loser:{f}")], vbytes=350)
                g._add(f"forceclose:{f}:{va}:{vb}", fc)
    return g


def validate_graph(g: PacketGraph) -> list[str]:
    """Structural checks over the template graph; violations as strings."""
    violations: list[str] = []
    ids = set(g.templates)

    # (i) every internal input references an existing template output
    for name, tid in g.names.items():
        tx = g.templates[tid]
        for ref in tx.inputs:
            if ref[0].startswith(EXTERNAL):
                continue
            if ref[0] not in ids or g.output_at(ref) is None:
                violations.append(f"dangling input in {name}: {ref}")

    # (ii) every loser terminal maps to a kill-enablers template covering
    # all of the loser's enablers
    enabler_refs = {f: {e.outpoint for e in g.enablers.values() if e.owner == f}
                    for f in g.functionaries}
    for name, tid in g.names.items():
        tx = g.templates[tid]
        if tx.template_kind not in (TxKind.PROVER_LOSES, TxKind.VERIFIER_LOSES):
            continue
        losers = [o.tag.split(":", 1)[1] for o in tx.outputs
                  if o.tag.startswith("loser:")]
        for loser in losers:
            kill_name = f"kill:{loser}"
            if kill_name not in g.names:
                violations.append(f"{name}: no kill-enablers template for {loser}")
                continue
            kill = g.template(kill_name)
            missing = enabler_refs[loser] - set(kill.inputs)
            if missing:
                violations.append(
                    f"{name}: kill template for {loser} misses {len(missing)} enablers")

    # (iii) unlocking spends exactly one operator enabler + the open kick-off
    for name, tid in g.names.items():
        tx = g.templates[tid]
        if tx.template_kind != TxKind.UNLOCKING:
            continue
        vmxo_id = name.split(":", 1)[1].rsplit(":", 1)[0]
        f = name.rsplit(":", 1)[1]
        op_en = g.find_enabler(f, EnablerRole.OPERATOR, vmxo_id)
        en_inputs = [r for r in tx.inputs if op_en and r == op_en.outpoint]
        if len(en_inputs) != 1:
            violations.append(f"{name}: must consume exactly one operator enabler")
        kick = g.template(f"kickoff:{vmxo_id}:{f}")
        if (kick.id, 0) not in tx.inputs:
            violations.append(f"{name}: missing open kick-off input")

    # (iv) each kickoff's dispute-channel outputs have terminal templates
    for name, tid in g.names.items():
        tx = g.templates[tid]
        if tx.template_kind != TxKind.KICKOFF:
            continue
        for idx, out in enumerate(tx.outputs):
            if out.kind != OutputKind.DISPUTE_CHANNEL:
                continue
            spenders = [t for t in g.templates.values()
                        if (tid, idx) in t.inputs
                        and t.template_kind in (TxKind.PROVER_LOSES,
                                                TxKind.VERIFIER_LOSES)]
            if len(spenders) < 2:
                violations.append(f"{name}: channel {idx} lacks loser terminals")
    return violations
