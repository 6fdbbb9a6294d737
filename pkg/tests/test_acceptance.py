"""Acceptance criteria 1-10, one verdict line per criterion."""
import math
import time

import numpy as np
import pytest

from leadsafety import agreement as ag
from leadsafety import metrics_boolean as mb
from leadsafety import metrics_dataset as md
from leadsafety import metrics_state as ms
from leadsafety import oracle as orc
from leadsafety import registry as rg
from leadsafety.evaluate import evaluate
from leadsafety.ingest import synthetic_corpus
from leadsafety.model import StateTable
from leadsafety.registry import default_variants
from leadsafety.spec import DATASET

from conftest import make_state, verdict
from test_registry import ASSUMPTION_TABLE, MODEL_PREDICTIVE_ORDER

V = {v.variant: v for v in default_variants()}
SPEED_CAP = 60 / 3.6


def random_states(rng, n):
    return [make_state(float(rng.uniform(0.5, 80.0)), float(rng.uniform(0.0, 40.0)),
                       float(rng.uniform(0.0, 40.0)), a_sv=float(rng.uniform(-8.0, 3.0)),
                       a_pov=float(rng.uniform(-8.0, 3.0)))
            for _ in range(n)]


def table_of(dhw, v_sv, v_pov, a_sv=None, a_pov=None):
    n = len(dhw)
    zeros = np.zeros(n)
    return StateTable(np.zeros(n, int), np.ones(n, int), np.arange(n), np.full(n, 0.2), dhw, v_sv - v_pov,
                      v_sv, v_pov, zeros if a_sv is None else a_sv, zeros if a_pov is None else a_pov,
                      zeros, np.full(n, 4.5), np.full(n, "car"), np.full(n, "car"), np.zeros(n, bool))


# -- 1. closed forms against the rollout oracle

ORACLE_CASES = {
    "TTC": (lambda s: ms.ttc(s), lambda s: (orc.steady_state(), orc.steady_state()), math.inf),
    "PTTC": (lambda s: ms.pttc(s),
             lambda s: (orc.steady_state(), orc.constant_accel(min(s.a_pov, 0.0))), math.inf),
    "MTTC": (lambda s: ms.mttc(s),
             lambda s: (orc.constant_accel(s.a_sv), orc.constant_accel(s.a_pov)), math.inf),
    "MPrISM": (lambda s: ms.mprism_long(s, V["MPrISM"]),
               lambda s: (orc.worst_case_brake(6.0), orc.worst_case_brake(6.0)), V["MPrISM"].horizon),
}


def oracle_mismatches(name, states):
    closed, behaviours, horizon = ORACLE_CASES[name]
    bad = 0
    for s in states:
        got = float(closed(s))
        ref = orc.ttc_by_rollout(s, *behaviours(s), step=1e-3, horizon=orc.DEFAULT_HORIZON)
        if ref is None or ref > horizon:
            # no collision inside the rollout window (or past the metric's own horizon)
            ok = math.isinf(got) or got > min(horizon, orc.DEFAULT_HORIZON)
        else:
            ok = math.isfinite(got) and abs(got - ref) <= max(0.01, 0.01 * ref)
        bad += not ok
    return bad


def test_criterion_1_oracle_equivalence():
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    report = {}
    for name in ORACLE_CASES:
        states = random_states(rng, 1000)
        report[name] = oracle_mismatches(name, states)
    elapsed = time.perf_counter() - start
    ok = not any(report.values()) and elapsed <= 60
    verdict(1, ok, f"mismatches {report} in {elapsed:.1f}s")
    assert ok


# -- 2. concordance counts against brute force

def brute_sign_counts(x, y):
    iu = np.triu_indices(len(x), k=1)
    sx = np.sign(np.subtract.outer(x, x))[iu]
    sy = np.sign(np.subtract.outer(y, y))[iu]
    return ag.ConcordanceCounts(
        len(sx), int(np.sum((sx != 0) & (sx == sy))), int(np.sum((sx != 0) & (sy != 0) & (sx != sy))),
        int(np.sum((sx == 0) & (sy != 0))), int(np.sum((sx != 0) & (sy == 0))), int(np.sum((sx == 0) & (sy == 0))))


def test_criterion_2_concordance_exact():
    rng = np.random.default_rng(202)
    start = time.perf_counter()
    bad = 0
    for k in range(100):
        n = int(rng.integers(2, 501))
        alphabet = [2, 3, 5, 20, n][k % 5]     # heavy ties through small alphabets
        x = rng.integers(0, alphabet, n).astype(float)
        y = rng.integers(0, alphabet, n).astype(float) if k % 2 else rng.normal(size=n).round(1)
        bad += ag.sign_transform(x, y) != brute_sign_counts(x, y)
    elapsed = time.perf_counter() - start
    ok = bad == 0 and elapsed <= 60
    verdict(2, ok, f"{bad}/100 pairs differ, {elapsed:.1f}s")
    assert ok


# -- 3. micro-averaged precision equals AID

def test_criterion_3_micro_precision_identity():
    rng = np.random.default_rng(303)
    bad = 0
    for k in range(100):
        classes = 2 if k % 2 else 3
        n = int(rng.integers(1, 300))
        c1, c2 = rng.integers(0, classes, n), rng.integers(0, classes, n)
        bad += ag.micro_precision(c1, c2) != ag.aid_elementwise(c1, c2)
        # real-valued series: pair labels carry the three classes
        x, y = rng.integers(0, 6, 40), rng.integers(0, 6, 40)
        bad += ag.micro_precision(ag.pair_labels(x), ag.pair_labels(y)) != ag.aid_pairwise(ag.sign_transform(x, y))
    verdict(3, bad == 0, f"{bad} inequalities over 200 comparisons")
    assert bad == 0


# -- 4. RSS without response time against worst-case MPrISM

def test_criterion_4_rss_mprism_equivalence():
    rng = np.random.default_rng(404)
    n = 10_000
    tab = table_of(rng.uniform(0.1, 120.0, n), rng.uniform(0.0, 40.0, n), rng.uniform(0.0, 40.0, n))
    rss = V["RSS3"].with_overrides(response_time=0.0, accel_during_response=0.0, a_max_sv=6.0, a_max_pov=6.0)
    unbounded = V["MPrISM_B"].with_overrides(horizon=math.inf)
    rss_safe = mb.rss_long_check(tab, rss)[0]
    mismatches = int(np.sum(rss_safe != mb.mprism_bool(tab, unbounded)))
    # the default 1 s prediction horizon only ever adds "safe" verdicts beyond it
    short = mb.mprism_bool(tab, V["MPrISM_B"])
    diff = short != rss_safe
    late = ms.mprism_long(tab, unbounded)
    one_sided = bool(np.all(short[diff] & ~rss_safe[diff] & (late[diff] > V["MPrISM_B"].horizon)))
    ok = mismatches == 0 and one_sided
    verdict(4, ok, f"{mismatches} mismatches with matched horizon; "
                   f"{int(diff.sum())} beyond the 1 s horizon, all one-sided: {one_sided}")
    assert ok


# -- 5. PICUD and DSS formulations

def test_criterion_5_picud_dss_equivalence():
    rng = np.random.default_rng(505)
    n = 1000
    tab = table_of(rng.uniform(0.0, 150.0, n), rng.uniform(0.0, 40.0, n), rng.uniform(0.0, 40.0, n))
    worst = float(np.max(np.abs(ms.picud(tab, V["DSS"]) - ms.dss(tab, V["DSS"]))))
    scalar = max(abs(ms.picud(s, V["DSS"]) - ms.dss(s, V["DSS"], friction=0.7))
                 for s in random_states(rng, 200))
    worst = max(worst, scalar)
    verdict(5, worst < 1e-9, f"max |PICUD - DSS| = {worst:.2e} m")
    assert worst < 1e-9


# -- 6. worked numbers

def test_criterion_6_worked_numbers():
    checks = {}
    # gap plus equal braking distances cancel: 25 + 400/6.6 - (20 + 400/6.6)
    got = ms.picud(make_state(25, 20, 20), V["PICUD1"])
    checks["PICUD"] = (got, 5.000, 5e-4)
    rho, a, v = 0.75, 3.805, 20.0
    ref = v * rho + 0.5 * a * rho ** 2 + (v + rho * a) ** 2 / 12 - v ** 2 / 14
    got = float(mb.rss_long_check(make_state(40, 20, 20), V["RSS3"])[1])
    checks["RSS3"] = (got, ref, 1e-3)
    checks["RSS3 literal"] = (got, 31.023, 1e-3)
    checks["FMRI"] = (md.fmri_from_miles(1e6, 0.95), -math.log(0.05) / 1e6, 1e-10)
    checks["FMRI literal"] = (md.fmri_from_miles(1e6, 0.95), 2.9957e-6, 1e-10)
    # TTC 2 s, then (20^2 - 15^2) / 2 / 2
    checks["CI"] = (ms.crash_index(make_state(10, 20, 15)), (400 - 225) / 2 / 2, 0.01)
    checks["CI literal"] = (ms.crash_index(make_state(10, 20, 15)), 43.75, 0.01)
    failed = [k for k, (got, want, tol) in checks.items() if not abs(got - want) <= tol]
    verdict(6, not failed, ", ".join(f"{k}={got:.6g}" for k, (got, _, _) in checks.items()
                                     if "literal" not in k))
    assert not failed


# -- 7. precision asymmetry, AID symmetry

def test_criterion_7_asymmetry():
    a = np.array([1, 1, 1, 1, 0, 0], bool)
    b = np.array([1, 1, 0, 0, 0, 0], bool)
    pab, pba = ag.precision(a, b), ag.precision(b, a)
    ok = pab != pba and ag.aid_elementwise(a, b) == ag.aid_elementwise(b, a)
    verdict(7, ok, f"precision {pab} vs {pba}, AID {ag.aid_elementwise(a, b)}")
    assert ok


# -- 8. assumption table

def test_criterion_8_assumption_table():
    wrong = []
    for tag, row in ASSUMPTION_TABLE.items():
        for idx, acronym in enumerate(MODEL_PREDICTIVE_ORDER):
            d = rg.descriptor(acronym)
            if d.id != idx + 1 or (tag in d.tags) != (row[idx] == "x"):
                wrong.append(f"{acronym}/{tag}")
    cells = len(ASSUMPTION_TABLE) * len(MODEL_PREDICTIVE_ORDER)
    verdict(8, not wrong, f"{cells - len(wrong)}/{cells} cells match")
    assert not wrong


# -- 9. invariance under monotone maps

def test_criterion_9_monotone_invariance():
    rng = np.random.default_rng(909)
    x = rng.normal(size=400).round(1)
    y = (x + rng.normal(size=400)).round(1)
    base = ag.aid_pairwise(ag.sign_transform(x, y))
    changed = 0
    for k in range(10):
        knots = np.sort(rng.uniform(-10, 10, 12))
        knots = np.concatenate(([-10.0], knots, [10.0]))
        vals = np.cumsum(rng.uniform(0.5, 3.0, knots.size))   # strictly increasing
        slope, shift = rng.uniform(0.5, 5.0), rng.uniform(-50, 50)

        def f(s):
            return slope * np.interp(s, knots, vals) + shift

        pair = (f(x), y) if k % 2 == 0 else (x, f(y))
        changed += ag.aid_pairwise(ag.sign_transform(*pair)) != base
    verdict(9, changed == 0, f"{changed}/10 maps changed AID {base:.6f}")
    assert changed == 0


# -- 10. end-to-end synthetic corpus

@pytest.fixture(scope="module")
def end_to_end():
    start = time.perf_counter()
    corpus = synthetic_corpus(n_sv=5, states_per_sv=20_000, seed=0)
    outputs = evaluate(corpus, default_variants(), jobs=4)
    groups = {}
    for out in outputs:
        if out.form != DATASET:
            groups.setdefault(out.form, []).append(out)
    matrices = {form: ag.agreement_matrix(outs, jobs=4) for form, outs in groups.items()}
    return corpus, {o.variant: o for o in outputs}, matrices, time.perf_counter() - start


def first_unsafe_order(corpus, outputs):
    """Count monotonically closing incidents where FSM flags no later than RSS3.

    Also returns the highest SV speed at RSS3's first flag among the violations.
    """
    tab = corpus.table
    total = held = 0
    worst_speed = 0.0
    for k, inc in enumerate(corpus.incidents):
        gaps = np.array([s.dhw for s in inc.states])
        if len(gaps) < 2 or not np.all(np.diff(gaps) < 0):
            continue
        rows = tab.incident == k
        rss = np.flatnonzero(~outputs["RSS3"].values[rows])
        fsm = np.flatnonzero(~outputs["FSM"].values[rows])
        if rss.size == 0 and fsm.size == 0:
            continue
        total += 1
        if fsm.size and (rss.size == 0 or fsm[0] <= rss[0]):
            held += 1
        else:
            worst_speed = max(worst_speed, tab.v_sv[rows][rss[0]])
    return total, held, worst_speed


def test_criterion_10_end_to_end(end_to_end):
    corpus, outputs, matrices, elapsed = end_to_end
    n_states = corpus.N_s
    shape_ok = all(np.all(np.diag(m.values) == 1.0)
                   and np.all((m.values[~np.isnan(m.values)] >= 0) & (m.values[~np.isnan(m.values)] <= 1))
                   for m in matrices.values())
    fast_share = float(np.mean(corpus.table.v_sv > SPEED_CAP))
    boolean = matrices["bool/state"]
    means = dict(zip(boolean.labels, boolean.mean_offdiagonal()))
    lowest = min(means, key=means.get)
    total, held, worst_speed = first_unsafe_order(corpus, outputs)
    checks = {"states": n_states >= 100_000, "time": elapsed < 120, "matrices": shape_ok,
              "fast": fast_share > 0.5, "UNReg157 lowest": lowest == "UNReg157",
              "FSM before RSS3": held == total}
    ok = all(checks.values())
    verdict(10, ok, f"{n_states} states in {elapsed:.1f}s; fast share {fast_share:.2f}; "
                    f"lowest Boolean AID {lowest} ({means[lowest]:.3f}); "
                    f"FSM no later than RSS3 on {held}/{total} closing incidents "
                    f"(violations all at v_sv <= {worst_speed:.2f} m/s); "
                    f"failed: {[k for k, v in checks.items() if not v]}")
    assert ok
