"""Acceptance criteria, each checked at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -v``; the terminal summary lists one
PASS/FAIL line per criterion.
"""
import random
import re
import time
from fractions import Fraction

from predmarket import cfd, datasets, glove, scenarios
from predmarket.cli import main
from predmarket.glove import Side
from predmarket.ledger import VectorSpec, derive_event_id
from predmarket.orderbook import Honest, SimConfig, simulate

from _fuzz import random_invalid_op, run_sequence
from _scripts import behaviors_for, random_script

QUARTERS = [Fraction(i, 4) for i in range(5)]
MICRO = Fraction(1, 10 ** 6)


def _printed(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out
    values = dict(re.findall(r"^(\w+) = \S+ ~ (-?\d+\.\d+)$", out, re.M))
    return code, {k: Fraction(v) for k, v in values.items()}


def test_criterion_01_shapley_table(capsys, criterion):
    checks = []
    for p, want_minus, want_plus in [("1/10", "0.670012", "0.329988"), ("3/4", "0.186114", "0.813886")]:
        glove._minus_share.cache_clear()
        start = time.perf_counter()
        code, got = _printed(capsys, "shapley", 30, 25, p)
        elapsed = time.perf_counter() - start
        checks.append((f"p={p} exit code {code}", code == 0))
        checks.append((f"p={p} v_minus {got.get('v_minus')} vs {want_minus}",
                       abs(got["v_minus"] - Fraction(want_minus)) <= MICRO))
        checks.append((f"p={p} v_plus {got.get('v_plus')} vs {want_plus}",
                       abs(got["v_plus"] - Fraction(want_plus)) <= MICRO))
        checks.append((f"p={p} runtime {elapsed:.2f}s", elapsed < 5))
    criterion(1, "Shapley table for (30, 25)", checks)


def test_criterion_02_burn_optimum(criterion):
    glove._minus_share.cache_clear()
    start = time.perf_counter()
    best = glove.optimal_burn(Side.PLUS, 100, 100, 0)
    elapsed = time.perf_counter() - start
    criterion(2, "burn optimum keeps 84 for 70.5882", [
        (f"keep {best.keep}", best.keep == 84),
        (f"revenue {float(best.revenue):.6f}", abs(best.revenue - Fraction("70.5882")) <= Fraction(1, 10 ** 4)),
        (f"runtime {elapsed:.2f}s", elapsed < 60),
    ])


def test_criterion_03_oracle_equivalence(criterion):
    glove._minus_share.cache_clear()
    start = time.perf_counter()
    checks = []
    for m in range(1, 6):
        for n in range(1, 6):
            for p in QUARTERS:
                brute = glove.shapley_bruteforce(glove.singleton_players(m, n), p)
                checks.append((f"({m},{n},{p}) plus", brute["+0"] == glove.shapley_plus_exact(m, n, p)))
                checks.append((f"({m},{n},{p}) minus", brute["-0"] == glove.shapley_minus_exact(m, n, p)))
    elapsed = time.perf_counter() - start
    checks.append((f"runtime {elapsed:.2f}s", elapsed < 10))
    criterion(3, "exact formula equals brute force on 125 games", checks)


def test_criterion_04_identities(criterion):
    checks = []
    for m in range(1, 21):
        for n in range(1, 21):
            plus0 = glove.shapley_plus_exact(m, n, 0)
            minus0 = glove.shapley_minus_exact(m, n, 0)
            for p in QUARTERS:
                vp, vm = glove.shapley_plus_exact(m, n, p), glove.shapley_minus_exact(m, n, p)
                checks.append((f"efficiency ({m},{n},{p})", m * vp + n * vm == p * m + (1 - p) * min(m, n)))
                checks.append((f"plus decomposition ({m},{n},{p})", vp == p + (1 - p) * plus0))
                checks.append((f"minus decomposition ({m},{n},{p})", vm == (1 - p) * minus0))
                if m == n:
                    checks.append((f"symmetric ({m},{p})", vm == (1 - p) / 2))
    criterion(4, "identity suite over a 20x20x5 grid", checks)


def test_criterion_05_minus_burn_argmax(criterion):
    sets = {p: glove.burn_argmax(Side.MINUS, 20, 20, p) for p in QUARTERS[:4]}
    reference = sets[Fraction(0)]
    criterion(5, "'−' burn argmax independent of p",
              [(f"p={p} argmax {sorted(s)} vs {sorted(reference)}", s == reference) for p, s in sets.items()])


def test_criterion_06_value_surface_corners(criterion):
    rows = datasets.parse_rows(datasets.fig4())
    checks = []
    for r in rows:
        p, m, v = Fraction(r["p"]), int(r["m"]), Fraction(r["total_value"])
        if m == 100:
            checks.append((f"m=100 p={p}: {v}", v == 50 * (1 + p)))
        if p == 1:
            checks.append((f"p=1 m={m}: {v}", v == m))
    checks.append(("grid covered", len(checks) == 5 + 100 - 1 + 1))
    criterion(6, "value surface corners", checks)


def test_criterion_07_scenarios(criterion):
    expected = {"s1": (Fraction(1495), 0), "s2": (Fraction("2135.7"), Fraction("0.05")),
                "idol": (Fraction(10), 0), "vector-cfd": (Fraction("41.666"), Fraction("0.001"))}
    checks = []
    for name, (value, tol) in expected.items():
        res = scenarios.run_scenario(name)
        checks.append((f"{name} headline {res.headline}", abs(res.headline - value) <= tol))
        checks.append((f"{name} audit {res.audit.violations}", res.audit.violations == []))
    vec = scenarios.run_scenario("vector-cfd")
    checks.append(("vector-cfd exact 500/12", vec.headline == Fraction(500, 12)))
    criterion(7, "scenario replay", checks)


def test_criterion_08_vector_pricing(criterion):
    eid = derive_event_id("baseline asset x")
    v = VectorSpec.from_flat(75, Fraction(1, 3), 100, Fraction(1, 3), 125, Fraction(1, 3))
    z1 = cfd.VectorAsset(500, eid, v, 1)
    checks = [
        ("price(z1, 200)", cfd.vector_price(z1, 200) == Fraction(1750, 12)),
        ("price(z1, 110)", cfd.vector_price(z1, 110) == Fraction(1250, 12)),
    ]
    for c in (70, 110, 200, 500):
        total = sum(cfd.vector_price(z, c) for z in cfd.full_set(500, eid, v))
        checks.append((f"sum at c={c} is {total}", total == 500))
    res = scenarios.run_scenario("vector-cfd")
    carol = [n for n in res.notes if "cross-combine" in n]
    checks.append((f"cross-combine note {carol}", carol == ["Carol's cross-combine yielded 400 coins"]))
    criterion(8, "vector CFD pricing and cross-combine", checks)


def test_criterion_09_capped_cfd(criterion):
    rows = datasets.parse_rows(datasets.fig6())
    checks = [(f"c={r['c']} yes+no", Fraction(r["yes"]) + Fraction(r["no"]) == 1) for r in rows]
    for c in range(20, 41):
        yes, no = cfd.capped_cfd_price(c, 20, 40)
        checks.append((f"exact c={c}", yes + no == 1))
    checks.append(("yes(30)", cfd.capped_cfd_price(30, 20, 40)[0] == Fraction(1, 2)))
    checks.append(("endpoint H", cfd.capped_cfd_price(40, 20, 40) == (1, 0)))
    checks.append(("endpoint L", cfd.capped_cfd_price(20, 20, 40) == (0, 1)))
    criterion(9, "capped CFD prices", checks)


def test_criterion_10_consolidation(criterion):
    checks = [(f"m={m}", glove.consolidated_owner_value(m, m, 0) == Fraction(m, 2)) for m in (1, 2, 3)]
    for n in range(1, 7):
        values = [glove.consolidated_owner_value(k, n, 0) for k in range(1, 9)]
        checks.append((f"n={n} nondecreasing {values}", all(a <= b for a, b in zip(values, values[1:]))))
    criterion(10, "consolidated owner value", checks)


def test_criterion_11_montecarlo(criterion):
    p = Fraction(1, 10)
    start = time.perf_counter()
    a = glove.shapley_montecarlo(30, 25, p, 10 ** 6, seed=20160101)
    elapsed = time.perf_counter() - start
    b = glove.shapley_montecarlo(30, 25, p, 10 ** 6, seed=20160101)
    exact_minus = float(glove.shapley_minus_exact(30, 25, p))
    exact_plus = float(glove.shapley_plus_exact(30, 25, p))
    criterion(11, "Monte Carlo agrees with exact values", [
        (f"v_minus {a.v_minus:.6f} +/- {a.se_minus:.6f}", abs(a.v_minus - exact_minus) <= 3 * a.se_minus),
        (f"v_plus {a.v_plus:.6f} +/- {a.se_plus:.6f}", abs(a.v_plus - exact_plus) <= 3 * a.se_plus),
        ("bit-identical rerun", a == b),
        (f"runtime {elapsed:.2f}s", elapsed < 60),
    ])


def test_criterion_12_orderbook_safety(criterion):
    checks = []
    honest_trades = 0
    runs = 0
    for seed in range(24):
        script = random_script(seed)
        traders = sorted(script["genesis"])
        for behavior in behaviors_for(seed, traders):
            for interval in (1, 3):
                res = simulate(SimConfig(seed=seed, checkpoint_interval=interval, ttp_behavior=behavior), script)
                runs += 1
                checks.append((f"script {seed} {behavior} every {interval}: {res.violations[:2]}",
                               res.violations == []))
                checks.append((f"script {seed} {behavior} safety", res.state.safety_violations() == []))
                if isinstance(behavior, Honest):
                    honest_trades += len(res.state.trades)
                    checks.append((f"script {seed} honest liveness", not res.state.crossing_pairs()))
    checks.append((f"honest runs traded ({honest_trades})", honest_trades > 0))
    checks.append((f"{runs} runs", runs >= 20 * 3))
    criterion(12, "order book safety under honest, stalling and censoring TTPs", checks)


def test_criterion_13_ledger_fuzz(criterion):
    checks = []
    bad_valid = bad_invalid = 0
    rng = random.Random(13)
    for seed in range(10_000):
        ledger, _ = run_sequence(seed, 10)
        if not ledger.check_invariants().ok:
            bad_valid += 1
        before = ledger.snapshot()
        op, args = random_invalid_op(ledger, rng)
        try:
            ledger.apply(op, args)
            bad_invalid += 1
        except (ValueError, TypeError):
            if ledger.snapshot() != before:
                bad_invalid += 1
    checks.append((f"{bad_valid} valid sequences broke an invariant", bad_valid == 0))
    checks.append((f"{bad_invalid} invalid operations were accepted or left traces", bad_invalid == 0))
    criterion(13, "10,000 seeded operation sequences", checks)
