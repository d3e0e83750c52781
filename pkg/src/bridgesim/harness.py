"""Scenario execution: agent strategies, the deterministic run loop,
invariant checking over event logs, and report emission.

A scenario pins every free choice (seed, parties, honesty, timing, censor
windows, scripted peg operations), so the same scenario always yields a
byte-identical event log.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .chain import CensorWindow
from .dispute import (DisputeGame, ExecutionTrace, Phase, Reason, challenge,
                      leaf_check, open_game, resolve_no_challenge,
                      reveal_trace, search_round, settle_counter_proof)
from .errors import InvalidScenario, TimeoutExpired
from .lightclient import (AltChainInput, CheckChainInput, make_proof_artifact)
from .protocol import (Bridge, DISPUTE_ACTION_VBYTES, PegOut, PegOutState,
                       FunctionaryStatus)
from .txgraph import EnablerRole, EnablerState, TxKind, VmxoState


class Strategy(str, Enum):
    HONEST = "Honest"
    SILENT_PROVER = "SilentProver"
    FAKE_PROOF_PROVER = "FakeProofProver"
    FORK_PROVER = "ForkProver"
    GRIEFING_VERIFIER = "GriefingVerifier"
    DOUBLE_OPERATOR = "DoubleOperator"
    KEY_LEAKER = "KeyLeaker"


PROVER_STRATEGIES = {Strategy.SILENT_PROVER, Strategy.FAKE_PROOF_PROVER,
                     Strategy.FORK_PROVER, Strategy.DOUBLE_OPERATOR}


@dataclass
class CensorSpec:
    party: str
    start: int
    length: int


@dataclass
class Scenario:
    name: str = "scenario"
    seed: int = 0
    n_functionaries: int = 3
    denomination: int = 100_000_000
    vmxo_count: int = 2
    n_pegins: int = 2
    n_pegouts: int = 1
    fee_rate: int = 2
    source_confirmations: int = 3
    secondary_confirmations: int = 3
    challenge_window: int = 20
    watch_threshold: int = 64
    arity: int = 4
    trace_length: int = 16
    adversary: Optional[int] = None
    strategy: Strategy = Strategy.HONEST
    leak_all: bool = False
    censor: list[CensorSpec] = field(default_factory=list)
    pegout_limit: int = 1
    t_sep: int = 0
    liveness_bound: int = 500

    def validate(self) -> None:
        if self.n_functionaries < 2:
            raise InvalidScenario("need at least 2 functionaries")
        if self.n_pegouts > self.n_pegins:
            raise InvalidScenario("more peg-outs than peg-ins")
        if self.n_pegins > self.vmxo_count:
            raise InvalidScenario("more peg-ins than VMXOs")
        if self.adversary is not None and \
                not 0 <= self.adversary < self.n_functionaries:
            raise InvalidScenario("adversary index out of range")
        if self.strategy != Strategy.HONEST and self.adversary is None \
                and not self.leak_all:
            raise InvalidScenario("strategy without adversary")
        for w in self.censor:
            if w.length > self.watch_threshold:
                raise InvalidScenario("censor window exceeds threshold")

    @property
    def functionary_ids(self) -> list[str]:
        return [f"f{i}" for i in range(self.n_functionaries)]

    @property
    def adversary_id(self) -> Optional[str]:
        return None if self.adversary is None else f"f{self.adversary}"


@dataclass
class Verdict:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class RunReport:
    scenario: str
    seed: int
    log: list[str]
    balances: dict[str, int]
    outcomes: list[str]
    verdicts: list[Verdict]
    dispute_costs: dict[str, int]
    deposit_sats: int
    deposit_sufficient: bool
    slash_single_winner: dict[str, int]
    slash_equal_split: dict[str, int]
    rng_algorithm: str = "python-random-mt19937"

    @property
    def all_passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def to_text(self) -> str:
        lines = [f"scenario={self.scenario} seed={self.seed} "
                 f"rng={self.rng_algorithm}"]
        for v in self.verdicts:
            status = "PASS" if v.passed else "FAIL"
            lines.append(f"  [{status}] {v.name} {v.detail}".rstrip())
        lines.append(f"  deposit={self.deposit_sats} "
                     f"sufficient={self.deposit_sufficient}")
        for o in self.outcomes:
            lines.append(f"  outcome: {o}")
        return "\n".join(lines)


class Runner:
    """Drives one scenario through the protocol engine."""

    def __init__(self, scenario: Scenario):
        scenario.validate()
        self.sc = scenario
        self.rng = random.Random(scenario.seed)
        self.bridge = Bridge(
            scenario.functionary_ids, scenario.vmxo_count,
            scenario.denomination, fee_rate=scenario.fee_rate,
            source_confirmations=scenario.source_confirmations,
            secondary_confirmations=scenario.secondary_confirmations,
            pegout_limit=scenario.pegout_limit, t_sep=scenario.t_sep)
        self.bridge.clock.censor_windows = [
            CensorWindow(w.party, w.start, w.start + w.length)
            for w in scenario.censor]
        self.users = [f"u{i}" for i in range(scenario.n_pegins)]
        self.outcomes: list[str] = []
        self.pegin_blocks: dict[str, str] = {}

    # -- helpers -----------------------------------------------------------

    @property
    def honest(self) -> list[str]:
        adv = self.sc.adversary_id
        if self.sc.leak_all:
            return []
        return [f for f in self.sc.functionary_ids if f != adv]

    def mine_source(self, txs: list[str]) -> str:
        b = self.bridge.source.mine_block(self.bridge.source.tip().id, txs)
        self.bridge.clock.advance()
        return b.id

    def mine_secondary(self, txs: list[str], difficulty: int = 2) -> str:
        b = self.bridge.secondary.mine_block(
            self.bridge.secondary.tip().id, txs, difficulty=difficulty)
        self.bridge.clock.advance()
        return b.id

    def delay_for(self, party: str, abs_now: int, silent: bool = False) -> int:
        if silent:
            return self.sc.watch_threshold + 1
        for w in self.bridge.clock.censor_windows:
            if w.party == party and w.start <= abs_now < w.end:
                return max(1, w.end - abs_now + 1)
        return 1

    # -- setup -------------------------------------------------------------

    def setup(self) -> None:
        b, sc = self.bridge, self.sc
        b.log("meta", kind="scenario", name=sc.name, seed=sc.seed,
              rng="python-random-mt19937")
        b.log("meta", kind="parties",
              functionaries=",".join(sc.functionary_ids),
              honest=",".join(self.honest) or "-",
              adversary=sc.adversary_id or "-",
              strategy=sc.strategy.value, leak_all=sc.leak_all)
        b.log("meta", kind="params", denomination=sc.denomination,
              fee_rate=sc.fee_rate, threshold=sc.watch_threshold,
              window=sc.challenge_window, bound=sc.liveness_bound,
              deposit=b.deposit_per_functionary)
        for u in self.users:
            b.ledger.fund(f"user:{u}:src", sc.denomination)
        for account in sorted(b.ledger.balances):
            b.log("balance", account=account,
                  amount=b.ledger.balances[account])
        # signing ceremony: every functionary signs every template digest,
        # then keys are deleted (or leaked, for the dishonest)
        for tid, tmpl in b.graph.templates.items():
            for f in sc.functionary_ids:
                tmpl.signatures[f] = tid
        for v in b.graph.vmxo_ids:
            for i, f in enumerate(sc.functionary_ids):
                leaks = sc.leak_all or (
                    sc.strategy == Strategy.KEY_LEAKER
                    and f == sc.adversary_id)
                if leaks:
                    b.graph.leak_keys(f, v)
                    b.log("keys_leaked", functionary=f, vmxo=v)
                else:
                    b.graph.delete_keys(f, v)
        b.log("setup_done", templates=len(b.graph.templates),
              enablers=len(b.graph.enablers))

    # -- peg-ins -----------------------------------------------------------

    def run_pegins(self) -> None:
        b, sc = self.bridge, self.sc
        for u in self.users:
            pegin = b.request_pegin(u, sc.denomination)
            b.sign_pegin(pegin, u)
            for f in sc.functionary_ids:
                b.sign_pegin(pegin, f)
            tx = b.broadcast_pegin(pegin)
            pegin.deposit_block = self.mine_source([tx])
            self.pegin_blocks[pegin.vmxo_id] = pegin.deposit_block
            for _ in range(sc.source_confirmations):
                self.mine_source([f"pad:{b.clock.now}:{u}"])
            b.execute_pegin(pegin)
            self.outcomes.append(f"pegin {u} minted")

    # -- dispute plumbing --------------------------------------------------

    def _account_game(self, game: DisputeGame, base_tick: int,
                      skip_first_commit: bool = False,
                      log_watches: bool = True) -> None:
        """Log publications, stop-watch ledger, and fees for one game.

        The outer game's commit-proof was already paid by the kick-off, so
        it is skipped there."""
        b = self.bridge
        prev_t = 0
        for idx, (t, party, action) in enumerate(game.publications):
            if idx == 0 and skip_first_commit and action == "commit-proof":
                continue
            if action in DISPUTE_ACTION_VBYTES:
                b.pay_dispute_fee(party, action)
            b.log("dispute_pub", actor=party, action=action,
                  at=base_tick + t)
            interval = t - prev_t
            if interval > 0:
                d = 1
                while d <= interval:
                    b.log("sw_tick", party=party, duration=d)
                    d *= 2
                b.log("sw_stop", party=party, interval=interval)
            prev_t = t
        if not log_watches:
            return
        for party in sorted(game.watches):
            watch = game.watches[party]
            b.log("watch_total", party=party,
                  accumulated=watch.accumulated(game.clock),
                  threshold=watch.threshold,
                  timeout=watch.aggregate_timeout(game.clock))

    def _run_execution_dispute(self, prover: str, verifier: str,
                               proof, prover_trace, honest_trace,
                               silent_prover: bool = False,
                               verifier_honest: bool = True):
        b, sc = self.bridge, self.sc
        base = b.clock.now
        game = open_game(prover, verifier, proof, prover_trace, honest_trace,
                         arity=sc.arity, watch_threshold=sc.watch_threshold)

        def pd():
            return self.delay_for(prover, base + game.clock, silent_prover)

        def vd():
            return self.delay_for(verifier, base + game.clock)

        try:
            challenge(game, "Execution", delay=vd())
            while game.phase == Phase.MAIN_SEARCH:
                search_round(game, pd(), vd(), verifier_honest)
            reveal_trace(game, pd(), vd())
            while game.phase == Phase.READ_SEARCH:
                search_round(game, pd(), vd(), verifier_honest)
            leaf_check(game, pd())
        except TimeoutExpired:
            pass
        self._account_game(game, base, skip_first_commit=True)
        b.clock.advance(game.clock)
        b.log("dispute_outcome", prover=prover, verifier=verifier,
              winner=game.outcome.winner, loser=game.outcome.loser,
              reason=game.outcome.reason.value,
              kind=("ProverLoses" if game.outcome.loser == prover
                    else "VerifierLoses"))
        return game.outcome

    def _run_altchain_dispute(self, prover: str, verifier: str, proof,
                              main_input: CheckChainInput,
                              alt_input: AltChainInput,
                              silent_prover: bool = False):
        """Counter-proof branch: nested game with reversed roles."""
        b, sc = self.bridge, self.sc
        base = b.clock.now
        honest = ExecutionTrace.honest(
            f"main:{main_input.pegout_proof.tx_id}", sc.trace_length)
        prover_trace = honest  # the fork chain itself checks out; the fraud
        # is that it is not canonical, so only the alt-chain branch wins
        game = open_game(prover, verifier, proof, prover_trace, honest,
                         arity=sc.arity, watch_threshold=sc.watch_threshold)
        challenge(game, "AltChain", alt_input=alt_input,
                  main_difficulty=main_input.claimed_difficulty,
                  main_anchor_id=main_input.headers[0].id,
                  delay=self.delay_for(verifier, base))
        inner = game.nested
        try:
            # inner roles: verifier proves the alt chain, prover challenges
            challenge(inner, "Execution",
                      delay=self.delay_for(prover, base + inner.clock,
                                           silent_prover))
            while inner.phase == Phase.MAIN_SEARCH:
                search_round(inner,
                             self.delay_for(verifier, base + inner.clock),
                             self.delay_for(prover, base + inner.clock,
                                            silent_prover),
                             verifier_honest=False)
            reveal_trace(inner, self.delay_for(verifier, base + inner.clock),
                         self.delay_for(prover, base + inner.clock))
            while inner.phase == Phase.READ_SEARCH:
                search_round(inner,
                             self.delay_for(verifier, base + inner.clock),
                             self.delay_for(prover, base + inner.clock),
                             verifier_honest=False)
            leaf_check(inner, self.delay_for(verifier, base + inner.clock))
        except TimeoutExpired:
            pass
        settle_counter_proof(game)
        self._account_game(game, base, skip_first_commit=True,
                           log_watches=False)
        self._account_game(inner, base)
        b.clock.advance(game.clock)
        outcome = game.outcome
        if outcome is None:
            # inner alt claim failed; outer resumes and, absent any further
            # challenge, the original prover wins
            b.clock.advance(sc.challenge_window + 1)
            outcome = resolve_no_challenge(game, sc.challenge_window + 1,
                                           sc.challenge_window)
        b.log("dispute_outcome", prover=prover, verifier=verifier,
              winner=outcome.winner, loser=outcome.loser,
              reason=outcome.reason.value,
              kind=("ProverLoses" if outcome.loser == prover
                    else "VerifierLoses"))
        return outcome

    def _slash_after_dispute(self, loser: str, winner: str,
                             kind: TxKind, challengers: list[str],
                             vmxo_id: str) -> None:
        b = self.bridge
        b.slash(loser, winner, kind, challengers=challengers)
        # later challengers' channels become no-ops; their enabler spend is
        # refunded as consumed
        for ch in challengers:
            if ch == winner:
                continue
            e = b.graph.find_enabler(ch, EnablerRole.VERIFIER, vmxo_id,
                                     counterparty=loser)
            if e is not None and e.state == EnablerState.LIVE:
                e.state = EnablerState.CONSUMED
                b.log("challenge_refunded", verifier=ch, vmxo=vmxo_id)

    # -- peg-outs ----------------------------------------------------------

    def _pick_operator(self, prefer_adversary: bool) -> str:
        b, sc = self.bridge, self.sc
        adv = sc.adversary_id
        if prefer_adversary and adv is not None and \
                b.functionaries[adv].status == FunctionaryStatus.ACTIVE:
            return adv
        pool = [f for f in self.honest
                if b.functionaries[f].status == FunctionaryStatus.ACTIVE]
        if not pool:
            pool = [f for f in sc.functionary_ids
                    if b.functionaries[f].status == FunctionaryStatus.ACTIVE]
        return min(pool, key=lambda f: (b.active_pegouts[f], f))

    def _honest_verifiers(self, excluding: str) -> list[str]:
        return [f for f in self.honest if f != excluding
                and self.bridge.functionaries[f].status ==
                FunctionaryStatus.ACTIVE]

    def _honest_pegout_flow(self, pegout: PegOut, operator: str) -> None:
        b, sc = self.bridge, self.sc
        b.front_funds(pegout, operator)
        front_block = self.mine_source([pegout.fronted_tx])
        for _ in range(sc.source_confirmations):
            self.mine_source([f"pad:{b.clock.now}:front"])
        b.prove_front(pegout, front_block)
        b.publish_kickoff(pegout, operator)
        honest_trace = ExecutionTrace.honest(
            f"pegout:{pegout.burn_tx}", sc.trace_length)
        proof = None
        griefer = (sc.adversary_id
                   if sc.strategy == Strategy.GRIEFING_VERIFIER
                   and sc.adversary_id != operator
                   and b.functionaries[sc.adversary_id].status ==
                   FunctionaryStatus.ACTIVE else None)
        if griefer is not None:
            outcome = self._run_execution_dispute(
                operator, griefer, proof, honest_trace, honest_trace,
                verifier_honest=False)
            self.outcomes.append(
                f"pegout {pegout.burn_tx}: griefing challenge by {griefer} "
                f"defeated")
            self._slash_after_dispute(griefer, operator,
                                      TxKind.VERIFIER_LOSES, [operator],
                                      pegout.vmxo_id)
        else:
            b.clock.advance(sc.challenge_window + 1)
            b.log("challenge_window_expired", vmxo=pegout.vmxo_id,
                  operator=operator)
        b.log("burn_confirmed", tx=pegout.burn_tx, block=pegout.burn_block,
              canonical=int(b.secondary.is_canonical(pegout.burn_block)))
        b.unlock(pegout)
        b.recycle_enablers(pegout)
        self.outcomes.append(
            f"pegout {pegout.burn_tx}: unlocked by {operator}")

    def _fraudulent_kickoff(self, pegout: PegOut, adv: str,
                            silent: bool) -> None:
        """Kick-off with an invalid execution proof and no fronting."""
        b, sc = self.bridge, self.sc
        b.publish_kickoff(pegout, adv, honest_flow=False)
        honest_trace = ExecutionTrace.honest(
            f"pegout:{pegout.burn_tx}", sc.trace_length)
        corrupt_pos = self.rng.randint(1, sc.trace_length)
        prover_trace = honest_trace.corrupted_at(corrupt_pos)
        challengers = self._honest_verifiers(adv)
        first = challengers[0]
        # every honest verifier files a challenge; the first terminal wins
        for ch in challengers[1:]:
            b.pay_dispute_fee(ch, "challenge")
            b.log("dispute_pub", actor=ch, action="challenge",
                  at=b.clock.now)
        outcome = self._run_execution_dispute(
            adv, first, None, prover_trace, honest_trace,
            silent_prover=silent)
        self._slash_after_dispute(adv, outcome.winner,
                                  TxKind.PROVER_LOSES, challengers,
                                  pegout.vmxo_id)
        self.outcomes.append(
            f"pegout {pegout.burn_tx}: fraudulent kickoff by {adv} "
            f"defeated ({outcome.reason.value})")

    def _fork_kickoff(self, pegout: PegOut, adv: str) -> None:
        """Kick-off whose proof is internally valid but over a counterfeit
        fork of the secondary chain."""
        b, sc = self.bridge, self.sc
        sec = b.secondary
        anchor = sec.canonical_chain()[1]  # shared peg-in-acknowledging block
        fake_burn = f"fakeburn:{adv}:{pegout.vmxo_id}"
        f1 = sec.mine_block(anchor.id, [fake_burn], difficulty=1)
        f2 = sec.mine_block(f1.id, [f"fakepad:{adv}"], difficulty=1)
        pegin_block_id = self.pegin_blocks[pegout.vmxo_id]
        pegin_tx = next(t for t in b.source.block_txs[pegin_block_id]
                        if t.startswith("pegin:"))
        pegin_proof = b.source.prove_inclusion(pegin_tx, pegin_block_id)
        pegin_header = b.source.headers[pegin_block_id]
        fork_headers = (anchor, sec.headers[f1.id], sec.headers[f2.id])
        main_input = CheckChainInput(
            fork_headers, pegin_proof, pegin_header,
            sec.prove_inclusion(fake_burn, f1.id),
            sum(h.difficulty for h in fork_headers))
        proof = make_proof_artifact(main_input, honest=True)
        b.publish_kickoff(pegout, adv, honest_flow=False)
        b.log("fork_mined", by=adv, blocks=2, anchor=anchor.id)
        # honest verifier counter-proof: canonical continuation from the
        # same anchor, excluding the fake-burn block
        canonical = sec.canonical_chain()
        start = next(i for i, h in enumerate(canonical) if h.id == anchor.id)
        alt_headers = tuple(canonical[start:])
        alt_input = AltChainInput(
            alt_headers, pegin_proof, pegin_header,
            contested_block_id=f1.id,
            claimed_difficulty=sum(h.difficulty for h in alt_headers))
        challengers = self._honest_verifiers(adv)
        first = challengers[0]
        for ch in challengers[1:]:
            b.pay_dispute_fee(ch, "challenge")
            b.log("dispute_pub", actor=ch, action="challenge",
                  at=b.clock.now)
        outcome = self._run_altchain_dispute(adv, first, proof,
                                             main_input, alt_input)
        self._slash_after_dispute(adv, outcome.winner,
                                  TxKind.PROVER_LOSES, challengers,
                                  pegout.vmxo_id)
        self.outcomes.append(
            f"pegout {pegout.burn_tx}: fork kickoff by {adv} defeated "
            f"({outcome.reason.value})")

    def _double_operator(self, pegout: PegOut, adv: str) -> None:
        """Adversary fronts one peg-out, then opens a second raw kick-off."""
        b, sc = self.bridge, self.sc
        b.front_funds(pegout, adv)
        front_block = self.mine_source([pegout.fronted_tx])
        for _ in range(sc.source_confirmations):
            self.mine_source([f"pad:{b.clock.now}:front"])
        b.prove_front(pegout, front_block)
        b.publish_kickoff(pegout, adv)
        victim = next((v for v in b.graph.vmxo_ids
                       if v != pegout.vmxo_id
                       and b.graph.vmxos[v].state == VmxoState.LOCKED), None)
        if victim is None:
            # cannot double up; degrade to honest completion
            b.clock.advance(sc.challenge_window + 1)
            b.log("burn_confirmed", tx=pegout.burn_tx,
                  block=pegout.burn_block,
                  canonical=int(b.secondary.is_canonical(pegout.burn_block)))
            b.unlock(pegout)
            self.outcomes.append(
                f"pegout {pegout.burn_tx}: double-operator degenerate, "
                f"unlocked")
            return
        fake = PegOut(user="-", amount=sc.denomination, vmxo_id=victim,
                      state=PegOutState.LINKED)
        b.publish_kickoff(fake, adv, honest_flow=False)
        closer = self._honest_verifiers(adv)[0]
        b.force_close(pegout.vmxo_id, victim, closer)
        self._slash_after_dispute(adv, closer, TxKind.FORCE_CLOSE,
                                  [closer], victim)
        self.outcomes.append(
            f"pegout {pegout.burn_tx}: double operator {adv} force-closed")

    def run_pegouts(self) -> None:
        b, sc = self.bridge, self.sc
        adv = sc.adversary_id
        for i in range(sc.n_pegouts):
            user = self.users[i]
            pegout = b.request_pegout(user, sc.denomination)
            pegout.burn_block = self.mine_secondary([pegout.burn_tx])
            for _ in range(sc.secondary_confirmations):
                self.mine_secondary([f"spad:{b.clock.now}"])
            b.link_pegout(pegout)
            adversarial = (i == 0 and sc.strategy in PROVER_STRATEGIES
                           and adv is not None
                           and b.functionaries[adv].status ==
                           FunctionaryStatus.ACTIVE)
            if not adversarial:
                operator = self._pick_operator(prefer_adversary=False)
                self._honest_pegout_flow(pegout, operator)
                continue
            if sc.strategy == Strategy.DOUBLE_OPERATOR:
                self._double_operator(pegout, adv)
            elif sc.strategy == Strategy.FORK_PROVER:
                self._fork_kickoff(pegout, adv)
            else:
                self._fraudulent_kickoff(
                    pegout, adv,
                    silent=sc.strategy == Strategy.SILENT_PROVER)
            # a released peg-out is re-served by an honest operator
            if pegout.state == PegOutState.LINKED:
                operator = self._pick_operator(prefer_adversary=False)
                self._honest_pegout_flow(pegout, operator)

    # -- theft attempts ----------------------------------------------------

    def run_theft_attempts(self) -> None:
        b, sc = self.bridge, self.sc
        wants_theft = sc.leak_all or sc.strategy == Strategy.KEY_LEAKER
        if not wants_theft:
            return
        thief = sc.adversary_id or sc.functionary_ids[0]
        target = next((v for v in b.graph.vmxo_ids
                       if b.graph.vmxos[v].state == VmxoState.LOCKED), None)
        if target is not None:
            b.adhoc_theft(target, thief)

    # -- finish ------------------------------------------------------------

    def finish(self) -> RunReport:
        b, sc = self.bridge, self.sc
        for account in sorted(b.ledger.balances):
            b.log("final_balance", account=account,
                  amount=b.ledger.balances[account])
        verdicts = check_invariants(b.events)
        honest_costs = sum(b.dispute_costs.get(f, 0) for f in self.honest)
        slashed = sum(
            b.deposit_per_functionary
            for f, rec in b.functionaries.items()
            if rec.status == FunctionaryStatus.SLASHED)
        sufficient = slashed == 0 or honest_costs <= slashed
        challengers = [f for f in self.honest]
        equal_split = {}
        if slashed and challengers:
            share = slashed // len(challengers)
            equal_split = {f: share for f in challengers}
        return RunReport(
            scenario=sc.name, seed=sc.seed, log=list(b.events),
            balances=dict(b.ledger.balances), outcomes=list(self.outcomes),
            verdicts=verdicts, dispute_costs=dict(b.dispute_costs),
            deposit_sats=b.deposit_per_functionary,
            deposit_sufficient=sufficient,
            slash_single_winner=dict(b.slashed_pot_received),
            slash_equal_split=equal_split)


def run_scenario(scenario: Scenario) -> RunReport:
    runner = Runner(scenario)
    runner.setup()
    runner.run_pegins()
    runner.run_theft_attempts()
    runner.run_pegouts()
    return runner.finish()


# -- invariant checking over the raw log -----------------------------------

def _parse(line: str) -> dict:
    fields = {}
    for part in line.split():
        k, _, v = part.partition("=")
        fields[k] = v
    return fields


def check_invariants(log: list[str]) -> list[Verdict]:
    events = [_parse(l) for l in log]
    meta = {e.get("kind"): e for e in events if e.get("ev") == "meta"}
    honest = set()
    if "parties" in meta and meta["parties"].get("honest", "-") != "-":
        honest = set(meta["parties"]["honest"].split(","))
    bound = int(meta.get("params", {}).get("bound", 10 ** 9))

    verdicts = []

    # conservation: initial balances + transfers == final balances, exactly
    balances: dict[str, int] = {}
    for e in events:
        if e.get("ev") == "balance":
            balances[e["account"]] = int(e["amount"])
    start_total = sum(balances.values())
    ok, detail = True, ""
    for e in events:
        if e.get("ev") != "transfer":
            continue
        amt = int(e["amount"])
        balances[e["src"]] = balances.get(e["src"], 0) - amt
        balances[e["dst"]] = balances.get(e["dst"], 0) + amt
    finals = {e["account"]: int(e["amount"])
              for e in events if e.get("ev") == "final_balance"}
    for account, amount in finals.items():
        if balances.get(account, 0) != amount:
            ok, detail = False, f"{account}: {balances.get(account, 0)} != {amount}"
            break
    if ok and sum(finals.values()) != start_total:
        ok, detail = False, "total drifted"
    verdicts.append(Verdict("conservation", ok, detail))

    # single-spend
    seen: set[str] = set()
    dup = ""
    for e in events:
        if e.get("ev") == "spend":
            if e["out"] in seen:
                dup = e["out"]
                break
            seen.add(e["out"])
    verdicts.append(Verdict("single_spend", not dup, dup))

    # safety: no unlock without a canonical burn; no honest slash; no theft
    linked = {}  # vmxo -> burn tx
    canonical_burns = set()
    safety_ok, safety_detail = True, ""
    for e in events:
        ev = e.get("ev")
        if ev == "pegout_linked":
            linked[e["vmxo"]] = e["tx"]
        elif ev == "burn_confirmed" and e.get("canonical") == "1":
            canonical_burns.add(e["tx"])
        elif ev == "unlocked":
            burn = linked.get(e["vmxo"])
            if burn is None or burn not in canonical_burns:
                safety_ok = False
                safety_detail = f"unlock of {e['vmxo']} without canonical burn"
        elif ev == "theft":
            safety_ok = False
            safety_detail = f"theft of {e['vmxo']} by {e['thief']}"
        elif ev == "slashed" and e["loser"] in honest:
            safety_ok = False
            safety_detail = f"honest {e['loser']} slashed"
    verdicts.append(Verdict("safety", safety_ok, safety_detail))

    # liveness: every peg-in mints; every burn is fronted within the bound
    live_ok, live_detail = True, ""
    pegin_users = [e["user"] for e in events if e.get("ev") == "pegin_requested"]
    minted_users = {e["user"] for e in events if e.get("ev") == "minted"}
    for u in pegin_users:
        if u not in minted_users:
            live_ok, live_detail = False, f"pegin {u} never minted"
    burns = {e["tx"]: int(e["t"]) for e in events if e.get("ev") == "pegout_burn"}
    fronted = {}
    for e in events:
        if e.get("ev") == "fronted":
            fronted.setdefault(e["tx"].split("front:", 1)[-1].split(":", 1)[-1],
                               int(e["t"]))
    for tx, t0 in burns.items():
        t1 = fronted.get(tx)
        if t1 is None or t1 - t0 > bound:
            live_ok, live_detail = False, f"burn {tx} not fronted in time"
    verdicts.append(Verdict("liveness", live_ok, live_detail))

    # exclusion: after a party's enablers are burnt they take no further
    # protocol actions
    excl_ok, excl_detail = True, ""
    burnt_at: dict[str, int] = {}
    for e in events:
        ev = e.get("ev")
        seq = int(e.get("seq", 0))
        if ev == "enablers_burnt":
            burnt_at.setdefault(e["loser"], seq)
        actor = e.get("operator") if ev in ("kickoff", "fronted") \
            else e.get("actor") if ev == "dispute_pub" else None
        if actor in burnt_at and seq > burnt_at[actor]:
            excl_ok, excl_detail = False, f"{actor} acted after burn"
    verdicts.append(Verdict("exclusion", excl_ok, excl_detail))
    return verdicts


# -- scenario generation, corpus, text format ------------------------------

ALL_STRATEGIES = [Strategy.SILENT_PROVER, Strategy.FAKE_PROOF_PROVER,
                  Strategy.FORK_PROVER, Strategy.GRIEFING_VERIFIER,
                  Strategy.DOUBLE_OPERATOR, Strategy.KEY_LEAKER]


def generate_adversarial_scenarios(count: int, base_seed: int = 0
                                   ) -> list[Scenario]:
    """Seeded corpus of single-adversary scenarios for the safety suite."""
    out = []
    for i in range(count):
        rng = random.Random(base_seed * 1_000_003 + i)
        n = rng.randint(2, 6)
        strategy = ALL_STRATEGIES[i % len(ALL_STRATEGIES)]
        vmxos = rng.randint(2, 4)
        pegins = rng.randint(2, min(4, vmxos))
        pegouts = rng.randint(1, pegins)
        threshold = 64
        censor = []
        if rng.random() < 0.5:
            party = f"f{rng.randrange(n)}"
            start = rng.randint(5, 40)
            censor.append(CensorSpec(party, start, rng.randint(1, 8)))
        out.append(Scenario(
            name=f"adv-{i}-{strategy.value}", seed=i, n_functionaries=n,
            vmxo_count=vmxos, n_pegins=pegins, n_pegouts=pegouts,
            fee_rate=rng.choice([1, 2, 5]),
            adversary=rng.randrange(n), strategy=strategy,
            watch_threshold=threshold, censor=censor))
    return out


def scenario_corpus() -> list[Scenario]:
    """Bundled scenarios covering every strategy and template kind."""
    corpus = [Scenario(name="happy-path", seed=1, n_functionaries=3)]
    for i, s in enumerate(ALL_STRATEGIES):
        corpus.append(Scenario(
            name=f"adversary-{s.value}", seed=10 + i, n_functionaries=3,
            vmxo_count=3, n_pegins=3, n_pegouts=2, adversary=1, strategy=s))
    corpus.append(Scenario(name="all-keys-leaked", seed=99,
                           n_functionaries=3, leak_all=True,
                           strategy=Strategy.KEY_LEAKER, adversary=0,
                           n_pegouts=0))
    return corpus


def parse_scenario(text: str) -> Scenario:
    """Line-oriented scenario format: one `key value...` pair per line."""
    sc = Scenario()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        key, args = parts[0], parts[1:]
        try:
            if key == "name":
                sc.name = args[0]
            elif key == "seed":
                sc.seed = int(args[0])
            elif key == "functionaries":
                sc.n_functionaries = int(args[0])
            elif key == "denomination":
                sc.denomination = int(args[0])
            elif key == "vmxos":
                sc.vmxo_count = int(args[0])
            elif key == "pegins":
                sc.n_pegins = int(args[0])
            elif key == "pegouts":
                sc.n_pegouts = int(args[0])
            elif key == "fee_rate":
                sc.fee_rate = int(args[0])
            elif key == "challenge_window":
                sc.challenge_window = int(args[0])
            elif key == "watch_threshold":
                sc.watch_threshold = int(args[0])
            elif key == "adversary":
                sc.adversary = int(args[0])
                sc.strategy = Strategy(args[1])
            elif key == "leak_all":
                sc.leak_all = args[0].lower() in ("1", "true", "yes")
            elif key == "censor":
                sc.censor.append(CensorSpec(args[0], int(args[1]),
                                            int(args[2])))
            elif key == "pegout_limit":
                sc.pegout_limit = int(args[0])
            elif key == "t_sep":
                sc.t_sep = int(args[0])
            else:
                raise InvalidScenario(f"line {lineno}: unknown key {key!r}")
        except (IndexError, ValueError) as exc:
            raise InvalidScenario(f"line {lineno}: {raw!r}: {exc}") from exc
    sc.validate()
    return sc
