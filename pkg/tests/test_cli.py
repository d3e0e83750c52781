from bridgesim.cli import main

SCENARIO = """
name cli-demo
seed 4
functionaries 3
vmxos 2
pegins 2
pegouts 1
adversary 1 FakeProofProver
"""

LEAKED = """
name cli-leak
seed 4
functionaries 3
pegouts 0
leak_all true
"""


def test_run_exit_zero_and_log_written(tmp_path, capsys):
    sc = tmp_path / "demo.scenario"
    sc.write_text(SCENARIO)
    log = tmp_path / "run.log"
    assert main(["run", str(sc), "--log", str(log)]) == 0
    out = capsys.readouterr().out
    assert "[PASS] conservation" in out
    assert log.read_text().startswith("t=0 seq=1 ev=meta")


def test_run_nonzero_on_invariant_failure(tmp_path):
    sc = tmp_path / "leak.scenario"
    sc.write_text(LEAKED)
    assert main(["run", str(sc)]) == 1


def test_run_seed_override_changes_log(tmp_path):
    sc = tmp_path / "demo.scenario"
    sc.write_text(SCENARIO)
    l1, l2 = tmp_path / "a.log", tmp_path / "b.log"
    main(["run", str(sc), "--log", str(l1)])
    main(["run", str(sc), "--seed", "99", "--log", str(l2)])
    assert "seed=99" in l2.read_text().splitlines()[0]


def test_check_on_saved_log(tmp_path, capsys):
    sc = tmp_path / "demo.scenario"
    sc.write_text(SCENARIO)
    log = tmp_path / "run.log"
    main(["run", str(sc), "--log", str(log)])
    capsys.readouterr()
    assert main(["check", str(log)]) == 0
    assert "[PASS] safety" in capsys.readouterr().out


def test_check_flags_tampered_log(tmp_path):
    sc = tmp_path / "demo.scenario"
    sc.write_text(SCENARIO)
    log = tmp_path / "run.log"
    main(["run", str(sc), "--log", str(log)])
    lines = log.read_text().splitlines()
    spend = next(l for l in lines if " ev=spend " in l)
    log.write_text("\n".join(lines + [spend]) + "\n")
    assert main(["check", str(log)]) == 1


def test_deposit_table_default(capsys):
    assert main(["deposit-table"]) == 0
    out = capsys.readouterr().out
    assert "0.1216494" in out and "8.0288604" in out


def test_deposit_table_custom_axes(capsys):
    assert main(["deposit-table", "--fee-rates", "1",
                 "--functionaries", "2"]) == 0
    # 270332 sats at 1 sat/vByte with a single counterparty
    assert "0.0027033" in capsys.readouterr().out


def test_sweep_grid(tmp_path, capsys):
    grid = tmp_path / "grid.txt"
    grid.write_text("seed 1 2\nfunctionaries 2 3\nstrategy Honest\n")
    assert main(["sweep", "--grid", str(grid)]) == 0
    out = capsys.readouterr().out
    assert "4 scenarios, 0 failures" in out


def test_invalid_scenario_file(tmp_path, capsys):
    sc = tmp_path / "bad.scenario"
    sc.write_text("functionaries 1\n")
    assert main(["run", str(sc)]) == 2
