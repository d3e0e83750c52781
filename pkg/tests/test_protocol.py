import pytest

from bridgesim.errors import (ActiveOperation, ConcurrencyLimit,
                             EnablerUnavailable, InsufficientConfirmations,
                             MissingSignature, NoCapacity, NotTriggered,
                             WrongDenomination)
from bridgesim.protocol import Bridge, FunctionaryStatus, PegOutState
from bridgesim.txgraph import EnablerRole, EnablerState, TxKind, VmxoState

DENOM = 100_000_000


def make_bridge(n=3, vmxos=2, **kw):
    kw.setdefault("source_confirmations", 2)
    kw.setdefault("secondary_confirmations", 2)
    b = Bridge([f"f{i}" for i in range(n)], vmxos, DENOM, **kw)
    for tid, tmpl in b.graph.templates.items():
        for f in b.functionaries:
            tmpl.signatures[f] = tid
    return b


def fund_user(b, user):
    b.ledger.fund(f"user:{user}:src", DENOM)


def mine_source(b, txs):
    blk = b.source.mine_block(b.source.tip().id, txs)
    b.clock.advance()
    return blk.id


def mine_secondary(b, txs):
    blk = b.secondary.mine_block(b.secondary.tip().id, txs)
    b.clock.advance()
    return blk.id


def do_pegin(b, user="u0"):
    fund_user(b, user)
    pegin = b.request_pegin(user, DENOM)
    b.sign_pegin(pegin, user)
    for f in b.functionaries:
        b.sign_pegin(pegin, f)
    tx = b.broadcast_pegin(pegin)
    pegin.deposit_block = mine_source(b, [tx])
    for _ in range(b.source_confirmations):
        mine_source(b, [f"pad{b.clock.now}"])
    b.execute_pegin(pegin)
    return pegin


def do_linked_pegout(b, user="u0"):
    pegout = b.request_pegout(user, DENOM)
    pegout.burn_block = mine_secondary(b, [pegout.burn_tx])
    for _ in range(b.secondary_confirmations):
        mine_secondary(b, [f"spad{b.clock.now}"])
    b.link_pegout(pegout)
    return pegout


def test_deposit_equals_econ_formula():
    b = make_bridge(n=4, fee_rate=3)
    assert b.deposit_per_functionary == 270332 * 3 * 3
    assert b.ledger.balances["deposit:f0"] == b.deposit_per_functionary


def test_pegin_wrong_denomination():
    b = make_bridge()
    with pytest.raises(WrongDenomination):
        b.request_pegin("u0", DENOM + 1)


def test_pegin_requires_all_signatures():
    b = make_bridge()
    fund_user(b, "u0")
    pegin = b.request_pegin("u0", DENOM)
    b.sign_pegin(pegin, "u0")
    pegin.deposit_block = mine_source(b, [b.broadcast_pegin(pegin)])
    for _ in range(3):
        mine_source(b, ["pad"])
    with pytest.raises(MissingSignature):
        b.execute_pegin(pegin)


def test_pegin_requires_confirmations():
    b = make_bridge()
    fund_user(b, "u0")
    pegin = b.request_pegin("u0", DENOM)
    for s in ["u0"] + list(b.functionaries):
        b.sign_pegin(pegin, s)
    pegin.deposit_block = mine_source(b, [b.broadcast_pegin(pegin)])
    with pytest.raises(InsufficientConfirmations):
        b.execute_pegin(pegin)


def test_pegin_locks_vmxo_and_mints():
    b = make_bridge()
    pegin = do_pegin(b)
    assert b.graph.vmxos[pegin.vmxo_id].state == VmxoState.LOCKED
    assert b.ledger.balances["user:u0:wrapped"] == DENOM
    assert b.ledger.balances["wrapped-issuance"] == -DENOM
    assert b.ledger.balances[f"vmxo:{pegin.vmxo_id}"] == DENOM


def test_pegin_capacity_exhausted():
    b = make_bridge(vmxos=1)
    do_pegin(b, "u0")
    with pytest.raises(NoCapacity):
        b.request_pegin("u1", DENOM)


def test_pegout_links_oldest_locked_vmxo():
    b = make_bridge()
    p0 = do_pegin(b, "u0")
    do_pegin(b, "u1")
    pegout = do_linked_pegout(b, "u0")
    assert pegout.vmxo_id == p0.vmxo_id
    assert pegout.state == PegOutState.LINKED


def test_front_requires_burn_confirmations():
    b = make_bridge()
    do_pegin(b)
    pegout = b.request_pegout("u0", DENOM)
    pegout.burn_block = mine_secondary(b, [pegout.burn_tx])
    b.link_pegout(pegout)
    with pytest.raises(InsufficientConfirmations):
        b.front_funds(pegout, "f0")


def full_honest_pegout(b, pegout, operator):
    b.front_funds(pegout, operator)
    front_block = mine_source(b, [pegout.fronted_tx])
    for _ in range(b.source_confirmations):
        mine_source(b, ["pad"])
    b.prove_front(pegout, front_block)
    b.publish_kickoff(pegout, operator)
    b.unlock(pegout)


def test_honest_pegout_pays_operator_from_vmxo():
    b = make_bridge()
    do_pegin(b)
    pegout = do_linked_pegout(b)
    before = b.ledger.balances["wallet:f0"]
    full_honest_pegout(b, pegout, "f0")
    assert pegout.state == PegOutState.UNLOCKED
    assert b.ledger.balances[f"vmxo:{pegout.vmxo_id}"] == 0
    # operator nets the vmxo minus the fronted amount minus fees
    fronted = DENOM - int(DENOM * b.fee_fraction)
    fees = (b.cost_table.commit_proof + 500) * b.fee_rate
    assert b.ledger.balances["wallet:f0"] == before - fronted + DENOM - fees


def test_front_concurrency_limit():
    b = make_bridge(vmxos=2, pegout_limit=1)
    do_pegin(b, "u0")
    do_pegin(b, "u1")
    p1 = do_linked_pegout(b, "u0")
    b.front_funds(p1, "f0")
    p2 = do_linked_pegout(b, "u1")
    with pytest.raises(ConcurrencyLimit):
        b.front_funds(p2, "f0")


def test_front_separation_interval():
    b = make_bridge(vmxos=2, pegout_limit=5, t_sep=1000)
    do_pegin(b, "u0")
    do_pegin(b, "u1")
    p1 = do_linked_pegout(b, "u0")
    b.front_funds(p1, "f0")
    front_block = mine_source(b, [p1.fronted_tx])
    for _ in range(b.source_confirmations):
        mine_source(b, ["pad"])
    b.prove_front(p1, front_block)
    b.publish_kickoff(p1, "f0")
    p2 = do_linked_pegout(b, "u1")
    with pytest.raises(ConcurrencyLimit):
        b.front_funds(p2, "f0")


def test_unlock_requires_open_kickoff():
    b = make_bridge()
    do_pegin(b)
    pegout = do_linked_pegout(b)
    b.front_funds(pegout, "f0")
    pegout.operator = "f0"
    with pytest.raises(NotTriggered):
        b.unlock(pegout)


def test_slash_burns_enablers_and_pays_pot():
    b = make_bridge()
    do_pegin(b)
    pegout = do_linked_pegout(b)
    b.front_funds(pegout, "f1")
    b.publish_kickoff(pegout, "f1", honest_flow=False)
    b.pay_dispute_fee("f0", "challenge")
    pot = b.ledger.balances["deposit:f1"]
    f0_before = b.ledger.balances["wallet:f0"]
    b.slash("f1", "f0", TxKind.PROVER_LOSES, challengers=["f0"])
    assert b.functionaries["f1"].status == FunctionaryStatus.SLASHED
    assert b.ledger.balances["deposit:f1"] == 0
    assert b.ledger.balances["wallet:f0"] == f0_before + pot
    assert not b.graph.live_enablers("f1")


def test_slash_idempotent():
    b = make_bridge()
    b.slash("f1", "f0", TxKind.PROVER_LOSES)
    total = b.ledger.total()
    b.slash("f1", "f2", TxKind.VERIFIER_LOSES)
    assert b.ledger.total() == total
    assert b.ledger.balances["deposit:f1"] == 0


def test_slash_rejects_non_terminal_trigger():
    b = make_bridge()
    with pytest.raises(NotTriggered):
        b.slash("f1", "f0", TxKind.LOCKING)


def test_slash_reimburses_challenger_costs_first():
    b = make_bridge(n=3)
    b.pay_dispute_fee("f0", "challenge")
    b.pay_dispute_fee("f2", "challenge")
    cost = b.dispute_costs["f0"]
    f2_before = b.ledger.balances["wallet:f2"]
    b.slash("f1", "f0", TxKind.PROVER_LOSES, challengers=["f0", "f2"])
    # f2's challenge fee comes back even though f0 took the remainder
    assert b.ledger.balances["wallet:f2"] == f2_before + cost


def test_slash_releases_unfronted_pegout():
    b = make_bridge()
    do_pegin(b)
    pegout = do_linked_pegout(b)
    b.publish_kickoff(pegout, "f1", honest_flow=False)
    b.slash("f1", "f0", TxKind.PROVER_LOSES)
    assert pegout.state == PegOutState.LINKED
    assert pegout.operator is None
    assert b.graph.vmxos[pegout.vmxo_id].state == VmxoState.LOCKED
    # an honest operator can now complete it
    full_honest_pegout(b, pegout, "f0")
    assert pegout.state == PegOutState.UNLOCKED


def test_slash_invalidates_fronted_pegout():
    b = make_bridge()
    do_pegin(b)
    pegout = do_linked_pegout(b)
    b.front_funds(pegout, "f1")
    b.publish_kickoff(pegout, "f1", honest_flow=False)
    b.slash("f1", "f0", TxKind.PROVER_LOSES)
    assert pegout.state == PegOutState.INVALIDATED
    assert b.graph.vmxos[pegout.vmxo_id].state == VmxoState.INVALIDATED


def test_force_close_frees_second_vmxo():
    b = make_bridge(vmxos=2, pegout_limit=5)
    do_pegin(b, "u0")
    do_pegin(b, "u1")
    p1 = do_linked_pegout(b, "u0")
    p2 = do_linked_pegout(b, "u1")
    b.publish_kickoff(p1, "f1", honest_flow=False)
    b.publish_kickoff(p2, "f1", honest_flow=False)
    b.force_close(p1.vmxo_id, p2.vmxo_id, "f0")
    assert b.graph.vmxos[p2.vmxo_id].state == VmxoState.LOCKED
    assert b.graph.vmxos[p1.vmxo_id].state == VmxoState.KICKOFF_OPEN


def test_adhoc_theft_rejected_without_full_leak():
    b = make_bridge()
    pegin = do_pegin(b)
    b.graph.leak_keys("f0", pegin.vmxo_id)
    assert not b.adhoc_theft(pegin.vmxo_id, "f0")
    assert b.graph.vmxos[pegin.vmxo_id].state == VmxoState.LOCKED


def test_adhoc_theft_with_all_keys_leaked():
    b = make_bridge()
    pegin = do_pegin(b)
    for f in b.functionaries:
        b.graph.leak_keys(f, pegin.vmxo_id)
    assert b.adhoc_theft(pegin.vmxo_id, "f0")
    assert b.ledger.balances[f"vmxo:{pegin.vmxo_id}"] == 0


def test_withdraw_blocked_while_operating():
    b = make_bridge()
    do_pegin(b)
    pegout = do_linked_pegout(b)
    b.front_funds(pegout, "f0")
    with pytest.raises(ActiveOperation):
        b.withdraw_deposit("f0")


def test_withdraw_returns_deposit():
    b = make_bridge()
    before = b.ledger.balances["wallet:f2"]
    b.withdraw_deposit("f2")
    assert b.ledger.balances["wallet:f2"] == \
        before + b.deposit_per_functionary
    assert b.ledger.balances["deposit:f2"] == 0


def test_slashed_operator_cannot_front():
    b = make_bridge()
    do_pegin(b)
    pegout = do_linked_pegout(b)
    b.slash("f0", "f1", TxKind.PROVER_LOSES)
    with pytest.raises(EnablerUnavailable):
        b.front_funds(pegout, "f0")


def test_recycle_enabler_accounting():
    b = make_bridge()
    do_pegin(b)
    pegout = do_linked_pegout(b)
    full_honest_pegout(b, pegout, "f0")
    counts = b.recycle_enablers(pegout)
    n = len(b.functionaries)
    # one operator enabler consumed; all other enablers for the vmxo live
    assert counts["consumed"] == 1
    assert counts["burnt"] == 0
    assert counts["live"] == n * n - 1


def test_ledger_conservation_over_full_flow():
    b = make_bridge()
    do_pegin(b, "u0")
    total = b.ledger.total()
    pegout = do_linked_pegout(b, "u0")
    full_honest_pegout(b, pegout, "f0")
    assert b.ledger.total() == total


def test_honest_unlock_oracle_tracks_canonical_burn():
    b = make_bridge()
    do_pegin(b)
    pegout = do_linked_pegout(b)
    assert b.honest_unlock_allowed(pegout)
    # bury the burn under a heavier fork from before it
    fork_parent = b.secondary.headers[pegout.burn_block].parent_id
    parent = fork_parent
    for i in range(6):
        parent = b.secondary.mine_block(parent, [f"fork{i}"],
                                        difficulty=5).id
    assert not b.honest_unlock_allowed(pegout)
