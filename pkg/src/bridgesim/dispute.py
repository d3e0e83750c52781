"""Round-based dispute resolution over an abstract execution trace.

The virtual CPU is abstracted to a deterministic digest-chaining step
function.  A fraudulent prover diverges from the honest trace at some step
and stays divergent (their claimed final state is wrong); the n-ary search
then isolates the first divergent transition, a second n-ary search resolves
the read values of that step, and the leaf check re-executes the single
isolated transition.

A challenge may instead present an alternative header chain with higher
accumulated difficulty, opening one nested game with the roles reversed.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .errors import (ChannelSpent, DifficultyNotHigher, MalformedInput,
                     NoEnabler, TimeoutExpired, WindowOpen, WrongPhase,
                     WrongTurn)
from .lightclient import (AltChainInput, ProofArtifact, admit_counter_proof,
                          check_alt_chain)
from .stopwatch import StopWatch


def _h(*parts: object) -> str:
    m = hashlib.sha256()
    for p in parts:
        m.update(repr(p).encode())
        m.update(b"\x1f")
    return m.hexdigest()[:16]


def step_digest(state: str) -> str:
    """The abstract CPU: one deterministic transition per step."""
    return _h("step", state)


@dataclass(frozen=True)
class ExecutionTrace:
    program_id: str
    steps: tuple[str, ...]  # states s_0 .. s_n for n transitions

    @property
    def length(self) -> int:
        return len(self.steps) - 1

    @staticmethod
    def honest(program_id: str, length: int) -> "ExecutionTrace":
        states = [_h("input", program_id)]
        for _ in range(length):
            states.append(step_digest(states[-1]))
        return ExecutionTrace(program_id, tuple(states))

    def corrupted_at(self, position: int) -> "ExecutionTrace":
        """Diverge from the honest run starting at the given transition.

        The state after `position` is wrong and all later states follow the
        step function from that wrong state, so the final claim is wrong too.
        """
        if not 1 <= position <= self.length:
            raise ValueError("position out of range")
        states = list(self.steps[:position])
        states.append(_h("corrupt", self.steps[position]))
        while len(states) < len(self.steps):
            states.append(step_digest(states[-1]))
        return ExecutionTrace(self.program_id, tuple(states))


def read_log(state: str, length: int = 16) -> tuple[str, ...]:
    """Read-value digests consumed by one step, derived from its pre-state."""
    return tuple(_h("read", state, j) for j in range(length + 1))


class Phase(str, Enum):
    AWAIT_CHALLENGE = "AwaitChallenge"
    MAIN_SEARCH = "MainSearch"
    TRACE_REVEAL = "TraceReveal"
    READ_SEARCH = "ReadSearch"
    LEAF_CHECK = "LeafCheck"
    COUNTER_PROOF = "CounterProof"
    TERMINAL = "Terminal"


class Reason(str, Enum):
    NO_CHALLENGE = "NoChallenge"
    CONFLICTING_COMMIT = "ConflictingCommit"
    TIMEOUT = "Timeout"
    COUNTER_PROOF_UPHELD = "CounterProofUpheld"
    COUNTER_PROOF_DEFEATED = "CounterProofDefeated"


@dataclass(frozen=True)
class Outcome:
    winner: str
    loser: str
    reason: Reason

    def __post_init__(self):
        if self.winner == self.loser:
            raise ValueError("winner must differ from loser")


@dataclass
class DisputeGame:
    prover: str
    verifier: str
    prover_trace: ExecutionTrace
    verifier_trace: ExecutionTrace  # the verifier's local honest re-execution
    arity: int = 4
    watch_threshold: int = 64
    read_steps: int = 16
    channel: Optional[tuple[str, int]] = None

    phase: Phase = Phase.AWAIT_CHALLENGE
    turn: str = ""  # party expected to publish next
    lo: int = 0
    hi: int = 0
    read_lo: int = 0
    read_hi: int = 0
    rounds: int = 0
    isolated_step: Optional[int] = None
    prover_reads: tuple[str, ...] = ()
    verifier_reads: tuple[str, ...] = ()
    nested: Optional["DisputeGame"] = None
    alt_defeated: bool = False
    outcome: Optional[Outcome] = None
    clock: int = 0
    watches: dict[str, StopWatch] = field(default_factory=dict)
    publications: list[tuple[int, str, str]] = field(default_factory=list)

    def __post_init__(self):
        self.watches = {
            self.prover: StopWatch(self.prover, self.watch_threshold),
            self.verifier: StopWatch(self.verifier, self.watch_threshold),
        }

    # -- time plumbing -----------------------------------------------------

    def _publish(self, party: str, action: str, delay: int) -> None:
        """Advance the virtual clock by the responder's delay and record the
        publication, flipping the stop watches."""
        if self.publications and self.publications[-1][1] == party:
            raise WrongTurn(party)
        watch = self.watches[party]
        if not watch.running:
            watch.start(self.clock)
        self.clock += delay
        if watch.aggregate_timeout(self.clock):
            # the responder ran out their whole censorship budget
            self.phase = Phase.TERMINAL
            other = self.verifier if party == self.prover else self.prover
            self.outcome = Outcome(other, party, Reason.TIMEOUT)
            watch.stop(self.clock)
            raise TimeoutExpired(party)
        watch.stop(self.clock)
        other = self.verifier if party == self.prover else self.prover
        self.watches[other].start(self.clock)
        self.publications.append((self.clock, party, action))

    def expire(self, party: str, now: Optional[int] = None) -> Outcome:
        """Terminal timeout for a party that never responded."""
        if now is not None:
            self.clock = max(self.clock, now)
        watch = self.watches[party]
        if not watch.running:
            watch.start(self.clock)
        self.phase = Phase.TERMINAL
        other = self.verifier if party == self.prover else self.prover
        self.outcome = Outcome(other, party, Reason.TIMEOUT)
        return self.outcome


def open_game(prover: str, verifier: str, proof: ProofArtifact,
              prover_trace: ExecutionTrace, verifier_trace: ExecutionTrace,
              channel: Optional[tuple[str, int]] = None,
              channel_spent: bool = False, has_enabler: bool = True,
              arity: int = 4, watch_threshold: int = 64,
              read_steps: int = 16) -> DisputeGame:
    if not has_enabler:
        raise NoEnabler(verifier)
    if channel_spent:
        raise ChannelSpent(str(channel))
    game = DisputeGame(prover, verifier, prover_trace, verifier_trace,
                       arity=arity, watch_threshold=watch_threshold,
                       read_steps=read_steps, channel=channel)
    game.turn = verifier
    # the kick-off publication starts the verifier's response clock
    game.watches[verifier].start(game.clock)
    game.publications.append((0, prover, "commit-proof"))
    return game


def challenge(game: DisputeGame, kind: str = "Execution",
              alt_input: Optional[AltChainInput] = None,
              main_difficulty: Optional[int] = None,
              main_anchor_id: Optional[str] = None,
              delay: int = 1) -> DisputeGame:
    """Verifier's opening move: execution challenge or alt-chain counter-proof."""
    if game.phase != Phase.AWAIT_CHALLENGE:
        raise WrongPhase(game.phase.value)
    if kind == "Execution":
        game._publish(game.verifier, "challenge", delay)
        game.phase = Phase.MAIN_SEARCH
        game.lo, game.hi = 0, game.prover_trace.length
        game.turn = game.prover
        return game
    if kind != "AltChain":
        raise ValueError(kind)
    if game.alt_defeated:
        raise WrongPhase("alt-chain branch already defeated")
    assert alt_input is not None and main_difficulty is not None
    if not admit_counter_proof(main_difficulty, alt_input.claimed_difficulty):
        raise DifficultyNotHigher(
            f"{alt_input.claimed_difficulty} <= {main_difficulty}")
    if main_anchor_id is not None and alt_input.headers \
            and alt_input.headers[0].id != main_anchor_id:
        raise MalformedInput("alt chain not anchored at the peg-in block")
    game._publish(game.verifier, "alt-chain-proof", delay)
    try:
        alt_valid = check_alt_chain(alt_input)
    except MalformedInput:
        alt_valid = False
    # nested game with reversed roles: the original verifier now proves
    # check_alt_chain; their trace is honest exactly when the claim is true
    program = _h("altchain", alt_input.contested_block_id)
    honest = ExecutionTrace.honest(program, game.prover_trace.length)
    inner_prover_trace = honest if alt_valid else honest.corrupted_at(1)
    inner = DisputeGame(game.verifier, game.prover, inner_prover_trace, honest,
                        arity=game.arity, watch_threshold=game.watch_threshold,
                        read_steps=game.read_steps)
    inner.turn = game.prover
    inner.watches[game.prover].start(inner.clock)
    inner.publications.append((0, game.verifier, "commit-proof"))
    game.nested = inner
    game.phase = Phase.COUNTER_PROOF
    return game


def _boundaries(lo: int, hi: int, arity: int) -> list[int]:
    span = hi - lo
    seg = max(1, math.ceil(span / arity))
    bounds, b = [], lo + seg
    while b < hi:
        bounds.append(b)
        b += seg
    bounds.append(hi)
    return bounds


def _narrow(lo: int, hi: int, arity: int, prover_states, verifier_states,
            verifier_honest: bool) -> tuple[int, int]:
    """One narrowing round: prover reveals boundary digests, verifier picks
    the first disagreeing one.  A griefing verifier with no real divergence
    always picks the first segment."""
    bounds = _boundaries(lo, hi, arity)
    prev = lo
    for b in bounds:
        if prover_states[b] != verifier_states[b]:
            return prev, b
        prev = b
    # no boundary disagrees: a challenger without a real divergence (or one
    # straddled inside the first segment) recurses into the first segment
    return lo, bounds[0]


def search_round(game: DisputeGame, prover_delay: int = 1,
                 verifier_delay: int = 1,
                 verifier_honest: bool = True) -> DisputeGame:
    """One on-chain round: the responder commits segment digests and the
    challenger picks the segment to recurse into."""
    if game.phase not in (Phase.MAIN_SEARCH, Phase.READ_SEARCH):
        raise WrongPhase(game.phase.value)
    game.rounds += 1
    if game.phase == Phase.MAIN_SEARCH:
        game._publish(game.prover, "publish-hashes", prover_delay)
        game._publish(game.verifier, "publish-choice", verifier_delay)
        game.lo, game.hi = _narrow(game.lo, game.hi, game.arity,
                                   game.prover_trace.steps,
                                   game.verifier_trace.steps,
                                   verifier_honest)
        if game.hi - game.lo == 1:
            game.isolated_step = game.hi
            game.phase = Phase.TRACE_REVEAL
        return game
    game._publish(game.prover, "publish-read-hashes", prover_delay)
    game._publish(game.verifier, "publish-read-choice", verifier_delay)
    game.read_lo, game.read_hi = _narrow(game.read_lo, game.read_hi, game.arity,
                                         game.prover_reads,
                                         game.verifier_reads,
                                         verifier_honest)
    if game.read_hi - game.read_lo == 1:
        game.phase = Phase.LEAF_CHECK
    return game


def reveal_trace(game: DisputeGame, prover_delay: int = 1,
                 verifier_delay: int = 1) -> DisputeGame:
    """Prover publishes the full trace of the isolated step; the verifier's
    read challenge opens the second search over that step's read values."""
    if game.phase != Phase.TRACE_REVEAL:
        raise WrongPhase(game.phase.value)
    game._publish(game.prover, "publish-full-trace", prover_delay)
    game._publish(game.verifier, "read-challenge", verifier_delay)
    i = game.isolated_step
    pre_p = game.prover_trace.steps[i - 1]
    pre_v = game.verifier_trace.steps[i - 1]
    game.prover_reads = read_log(_h(pre_p, game.prover_trace.steps[i]),
                                 game.read_steps)
    game.verifier_reads = read_log(_h(pre_v, game.verifier_trace.steps[i]),
                                   game.read_steps)
    game.read_lo, game.read_hi = 0, game.read_steps
    game.phase = Phase.READ_SEARCH
    game.turn = game.prover
    return game


def leaf_check(game: DisputeGame, delay: int = 1) -> Outcome:
    """Re-execute the isolated transition; an invalid committed transition
    loses the game for the prover, otherwise the challenge was baseless."""
    if game.phase != Phase.LEAF_CHECK:
        raise WrongPhase(game.phase.value)
    game._publish(game.prover, "execute-leaf", delay)
    i = game.isolated_step
    pre = game.prover_trace.steps[i - 1]
    post = game.prover_trace.steps[i]
    game.phase = Phase.TERMINAL
    if step_digest(pre) != post:
        game.outcome = Outcome(game.verifier, game.prover,
                               Reason.CONFLICTING_COMMIT)
    else:
        game.outcome = Outcome(game.prover, game.verifier,
                               Reason.CONFLICTING_COMMIT)
    return game.outcome


def resolve_no_challenge(game: DisputeGame, elapsed: int,
                         window: int) -> Outcome:
    """Prover wins if the challenge window passed without a challenge."""
    if game.phase != Phase.AWAIT_CHALLENGE:
        raise WrongPhase(game.phase.value)
    if elapsed <= window:
        raise WindowOpen(f"{elapsed} <= {window}")
    game.phase = Phase.TERMINAL
    reason = Reason.COUNTER_PROOF_DEFEATED if game.alt_defeated \
        else Reason.NO_CHALLENGE
    game.outcome = Outcome(game.prover, game.verifier, reason)
    return game.outcome


def settle_counter_proof(game: DisputeGame) -> DisputeGame:
    """Fold a finished nested game back into the outer game.

    If the alt-chain submitter won, the original chain was fraudulent and the
    outer prover loses outright.  Otherwise the outer game resumes awaiting
    an execution challenge only.
    """
    if game.phase != Phase.COUNTER_PROOF:
        raise WrongPhase(game.phase.value)
    inner = game.nested
    if inner is None or inner.outcome is None:
        raise WrongPhase("nested game not terminal")
    game.clock = max(game.clock, inner.clock)
    if inner.outcome.winner == game.verifier:
        game.phase = Phase.TERMINAL
        game.outcome = Outcome(game.verifier, game.prover,
                               Reason.COUNTER_PROOF_UPHELD)
    else:
        game.phase = Phase.AWAIT_CHALLENGE
        game.alt_defeated = True
        game.turn = game.verifier
    return game


def run_search(game: DisputeGame, prover_delay: int = 1,
               verifier_delay: int = 1, verifier_honest: bool = True,
               leaf_delay: int = 1) -> Outcome:
    """Drive an execution challenge from MainSearch through the leaf check."""
    while game.phase == Phase.MAIN_SEARCH:
        search_round(game, prover_delay, verifier_delay, verifier_honest)
    reveal_trace(game, prover_delay, verifier_delay)
    while game.phase == Phase.READ_SEARCH:
        search_round(game, prover_delay, verifier_delay, verifier_honest)
    return leaf_check(game, leaf_delay)


def max_rounds(trace_length: int, read_steps: int, arity: int) -> int:
    """Upper bound on on-chain search rounds: main plus read search."""
    return (math.ceil(math.log(max(2, trace_length), arity))
            + math.ceil(math.log(max(2, read_steps), arity)))
