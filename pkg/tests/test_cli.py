import json
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import pytest

from predmarket import datasets, scenarios
from predmarket.cli import main
from predmarket.ledger import Ledger

FIXTURES = Path(__file__).parent / "fixtures"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


# -- scenarios --

@pytest.mark.parametrize("name,headline", [
    ("s1", Fraction(1495)),
    ("s2", Fraction("2135.7")),
    ("s3", Fraction(1000)),
    ("idol", Fraction(10)),
    ("idol-force", Fraction(60)),
    ("vector-cfd", Fraction(500, 12)),
])
def test_scenarios(name, headline):
    res = scenarios.run_scenario(name)
    assert res.headline == headline
    assert res.status == "Match"
    assert res.audit.violations == []
    assert Ledger.from_snapshot(res.ledger.snapshot()).snapshot() == res.ledger.snapshot()


def test_s3_store_payment():
    res = scenarios.run_scenario("s3")
    assert "803" in res.notes[0]


def test_unknown_scenario():
    with pytest.raises(scenarios.UnknownScenario):
        scenarios.run_scenario("s9")


def test_mismatch_status():
    res = scenarios.run_scenario("s1")
    res.expected = Fraction(1500)
    assert res.status == "Mismatch"


def test_scenario_command(capsys):
    code, out, _ = run(capsys, "scenario", "s1", "--trace")
    assert code == 0
    assert "1495" in out and "Match" in out
    assert '"op": "outcome_combine"' in out


# -- datasets --

def test_fig2_maximum_row():
    rows = datasets.parse_rows(datasets.fig2())
    best = max(rows, key=lambda r: Fraction(r["total_value"]))
    assert best["m"] == "84" and best["total_value"] == "70.588185"
    assert len(rows) == 100


def test_fig4_corners():
    rows = datasets.parse_rows(datasets.fig4(ms=[1, 50, 100]))
    for r in rows:
        p, m, v = Fraction(r["p"]), int(r["m"]), Fraction(r["total_value"])
        if m == 100:
            assert v == 50 * (1 + p)
        if p == 1:
            assert v == m


def test_fig6_yes_column():
    rows = datasets.parse_rows(datasets.fig6())
    assert len(rows) == 21
    for r in rows:
        assert Fraction(r["yes"]) == Fraction(r["c"]) / 20 - 1
        assert Fraction(r["yes"]) + Fraction(r["no"]) == 1


def test_dataset_is_byte_stable(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(capsys, "dataset", "fig6", "--out", a)[0] == 0
    assert run(capsys, "dataset", "fig6", "--out", b)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert b"\r" not in a.read_bytes()
    assert a.read_text().splitlines()[0] == "c,yes,no"


def test_dataset_errors(tmp_path, capsys):
    assert run(capsys, "dataset", "fig6", "--grid", "10,30")[0] == 2
    assert run(capsys, "dataset", "fig2", "--out", tmp_path / "missing" / "x.csv")[0] == 2
    assert run(capsys, "dataset", "fig9")[0] == 1


# -- analytics commands --

def test_shapley_command_prints_rational_and_decimal(capsys):
    code, out, _ = run(capsys, "shapley", 30, 25, "1/10")
    assert code == 0
    assert "v_minus = 1435803750149297/2142952107971675 ~ 0.670012" in out


def test_decimal_and_fraction_syntax_agree(capsys):
    _, a, _ = run(capsys, "shapley", 5, 4, "0.25")
    _, b, _ = run(capsys, "shapley", 5, 4, "1/4")
    assert a == b


def test_shapley_methods_agree(capsys):
    _, exact, _ = run(capsys, "shapley", 3, 4, "1/2")
    _, brute, _ = run(capsys, "shapley", 3, 4, "1/2", "brute")
    assert exact == brute


def test_montecarlo_needs_seed(capsys):
    assert run(capsys, "shapley", 3, 3, "1/2", "mc")[0] == 1
    code, out, _ = run(capsys, "shapley", 3, 3, "1/2", "mc", "--seed", 3, "--samples", 2000)
    assert code == 0 and "se" in out


def test_burn_command(capsys):
    code, out, _ = run(capsys, "burn", "plus", 100, 100, 0)
    assert code == 0
    assert "keep = 84" in out and "~ 70.588185" in out


def test_fungible_and_consolidated(capsys):
    assert "~ 44.444444" in run(capsys, "fungible", 100, 100, 50, 10)[1]
    assert "owner_value = 3/2" in run(capsys, "consolidated", 3, 3, 0)[1]


def test_price_commands(capsys):
    assert "yes = 1/2" in run(capsys, "cfd-price", 30, 20, 40)[1]
    out = run(capsys, "vector-price", "--spec", "75,1/3,100,1/3,125,1/3", "--leg", 1,
              "--amount", 500, "--c", 110)[1]
    assert "price = 625/6 ~ 104.166667" in out


@pytest.mark.parametrize("argv", [
    ("shapley", 3, 3, 2),
    ("burn", "plus", 0, 5, 0),
    ("cfd-price", 50, 20, 40),
    ("fungible", 100, 100, 100, 5),
])
def test_domain_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and "error" in err


def test_usage_errors_exit_1(capsys):
    assert run(capsys, "shapley", "x", 1, 0)[0] == 1
    assert run(capsys)[0] == 1
    assert run(capsys, "--help")[0] == 0


# -- ledger and order book scripts --

def test_ledger_apply_with_state(tmp_path, capsys):
    script = tmp_path / "ops.json"
    state = tmp_path / "state.json"
    script.write_text(json.dumps({
        "genesis": {"alice": "100"},
        "ops": [{"op": "outcome_split", "args": {"owner": "alice", "amount": "40",
                                                "eid": {"text": "rain tomorrow"}}},
                {"op": "transfer", "args": {"src": "alice", "dst": "bob", "amount": "2.5",
                                            "key": {"tag": None}}}],
    }))
    assert run(capsys, "ledger", "apply", script, "--state", state)[0] == 0
    led = Ledger.from_snapshot(state.read_text())
    assert len(led.tx_log) == 2
    # second application continues from the saved state
    assert run(capsys, "ledger", "apply", script, "--state", state)[0] == 0
    assert len(Ledger.from_snapshot(state.read_text()).tx_log) == 4


def test_ledger_apply_rejects_bad_ops(tmp_path, capsys):
    script = tmp_path / "ops.json"
    script.write_text(json.dumps({"genesis": {"alice": "1"},
                                  "ops": [{"op": "transfer", "args": {"src": "alice", "dst": "bob",
                                                                      "amount": "5", "key": {"tag": None}}}]}))
    code, _, err = run(capsys, "ledger", "apply", script)
    assert code == 2 and "operation 0" in err


def test_ledger_apply_reports_corrupt_state(tmp_path, capsys):
    script = tmp_path / "ops.json"
    script.write_text(json.dumps({"ops": []}))
    state = tmp_path / "state.json"
    led = Ledger({"alice": 10})
    state.write_text(led.snapshot().replace('"amount": "10"', '"amount": "11"'))
    assert run(capsys, "ledger", "apply", script, "--state", state)[0] == 2


def test_orderbook_simulate_command(tmp_path, capsys):
    out = tmp_path / "trace.jsonl"
    code, _, err = run(capsys, "orderbook", "simulate", FIXTURES / "two_traders.json", "--seed", 1, "--out", out)
    assert code == 0 and "1 trades" in err
    assert out.read_text() == (FIXTURES / "two_traders.trace.jsonl").read_text()


def test_orderbook_simulate_stalled(capsys):
    code, out, err = run(capsys, "orderbook", "simulate", FIXTURES / "two_traders.json", "--behavior", "stall:0")
    assert code == 0 and "0 trades" in err
    assert '"action":"reclaim"' in out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "predmarket", "fungible", "100", "100", "50", "10"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "44.444444" in proc.stdout
