"""Light-client verification predicates and the opaque proof artifact.

``check_chain`` validates that a header sequence on the secondary chain links
a peg-in on the source chain to a peg-out block, with the claimed accumulated
difficulty.  ``check_alt_chain`` validates a competing sequence that excludes
the contested peg-out block.  Both are pure functions over their inputs; they
never consult the live canonical chain.

Proof artifacts stand in for succinct proofs of these predicates: verifiers
on-chain see only the claim, while the dispute game can reveal whether the
underlying computation was actually valid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .chain import BlockHeader, InclusionProof, _digest
from .errors import MalformedInput


@dataclass(frozen=True)
class CheckChainInput:
    headers: tuple[BlockHeader, ...]
    pegin_proof: InclusionProof
    pegin_header: BlockHeader  # source-chain header named by pegin_proof
    pegout_proof: InclusionProof
    claimed_difficulty: int


@dataclass(frozen=True)
class AltChainInput:
    headers: tuple[BlockHeader, ...]
    pegin_proof: InclusionProof
    pegin_header: BlockHeader
    contested_block_id: str  # the peg-out block the alt chain must exclude
    claimed_difficulty: int


def _linked(headers: Sequence[BlockHeader]) -> bool:
    if not headers:
        return False
    for prev, cur in zip(headers, headers[1:]):
        if cur.parent_id != prev.id or cur.height != prev.height + 1:
            return False
    return True


def check_chain(inp: CheckChainInput) -> bool:
    """True iff the header sequence links the peg-in to the peg-out.

    Clauses: (a) headers parent-linked, (b) peg-in proof verifies against its
    source header, (c) peg-out proof verifies against a header inside the
    sequence, (d) difficulties sum to the claimed total.
    """
    if not inp.headers:
        raise MalformedInput("empty header sequence")
    if not _linked(inp.headers):
        raise MalformedInput("headers not parent-linked")
    if not inp.pegin_proof.verify(inp.pegin_header):
        return False
    by_id = {h.id: h for h in inp.headers}
    target = by_id.get(inp.pegout_proof.block_id)
    if target is None or not inp.pegout_proof.verify(target):
        return False
    return sum(h.difficulty for h in inp.headers) == inp.claimed_difficulty


def check_alt_chain(inp: AltChainInput) -> bool:
    """True iff the alternative sequence is valid and excludes the contested
    peg-out block while keeping the peg-in linkage."""
    if not inp.headers:
        raise MalformedInput("empty header sequence")
    if not _linked(inp.headers):
        raise MalformedInput("headers not parent-linked")
    if not inp.pegin_proof.verify(inp.pegin_header):
        return False
    if any(h.id == inp.contested_block_id for h in inp.headers):
        return False
    return sum(h.difficulty for h in inp.headers) == inp.claimed_difficulty


def admit_counter_proof(d1: int, d2: int) -> bool:
    """Counter-proof challenge is spendable only for strictly higher work."""
    return d2 > d1


@dataclass
class ProofArtifact:
    """Stand-in for a succinct proof of a verification predicate.

    ``claim`` is what the publisher asserts on-chain; ``_valid`` models
    whether a real proof would verify and is readable only through
    :meth:`reveal`, which the dispute game uses as its step oracle.
    """

    claim: bool
    commitment: str
    size_vbytes: int = 2513
    _valid: bool = field(default=False, repr=False)

    def reveal(self) -> bool:
        return self._valid


def make_proof_artifact(inp: CheckChainInput, honest: bool,
                        claim: Optional[bool] = None) -> ProofArtifact:
    """Build a proof artifact over a check-chain instance.

    An honest publisher claims the true result and the artifact is valid
    exactly when the claim holds.  A dishonest publisher may claim ``True``
    over a false instance; the hidden validity bit stays false.
    """
    try:
        truth = check_chain(inp)
    except MalformedInput:
        truth = False
    commitment = _digest("checkChain", tuple(h.id for h in inp.headers),
                         inp.pegout_proof.tx_id, inp.claimed_difficulty)
    if honest:
        return ProofArtifact(claim=truth, commitment=commitment, _valid=truth)
    asserted = True if claim is None else claim
    return ProofArtifact(claim=asserted, commitment=commitment,
                         _valid=truth and asserted)
