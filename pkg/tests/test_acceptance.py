"""End-to-end acceptance checks, one marker number per criterion.

Run with ``pytest tests/test_acceptance.py -v``; a PASS/FAIL line per
criterion is printed at the end of the session.
"""

import inspect
import math
import os
import time

import numpy as np
import pytest

from gammagen.baselines import BASELINES, MethodId, asymptotic_ar, sample
from gammagen.gamma_core import (
    GammaParams,
    build_proposal,
    is_integer_shape,
    log_proposal,
    log_target,
    log_target_area,
    optimal_tangent,
    proposal_area,
    sample_m1,
    tangent_area,
    theoretical_ar_m1,
    uncorrected_ar_m1,
)
from gammagen.rng import seed_stream
from gammagen.stats import envelope_check, gamma_quantile, goodness_of_fit, quadrature_ar
from gammagen.sweep import alpha_grid, ar_table, ar_violations, empirical_minimum, run_sweep

SEED = 0
NOISE_FLOOR = 0.005

C1 = "M1 minimum AR near alpha = 1.99"
C2 = "full sweep agrees with reference ARs within 0.005"
C3 = "ranking claims across the sweep grid"
C4 = "acceptance-rate asymptotes at alpha = 1000"
C5 = "M1 is exact at integer shapes"
C6 = "M1 envelope domination and tangency"
C7 = "optimal tangent point minimizes hat area"
C8 = "acceptance rate does not depend on beta"
C9 = "KS and moment checks for every method"
C10 = "closed-form AR discrepancy documented"


# ---------------------------------------------------------------------------
#  Full sweep, shared by criteria 1-3
# ---------------------------------------------------------------------------

@pytest.fixture(scope="session")
def sweep():
    grid = alpha_grid(1.0, 30.0, 0.05)
    workers = os.cpu_count() or 1
    t0 = time.perf_counter()
    m1 = run_sweep(grid, [MethodId.M1], n=600_000, seed=SEED, workers=workers)
    m1_seconds = time.perf_counter() - t0
    rest = run_sweep(grid, BASELINES, n=600_000, seed=SEED, workers=workers)
    return {"grid": grid, "records": m1 + rest, "m1_seconds": m1_seconds}


# ---------------------------------------------------------------------------
#  1. Minimum acceptance rate of M1
# ---------------------------------------------------------------------------

class TestMinimumAr:
    @pytest.mark.criterion(1, C1)
    def test_theoretical_value(self):
        assert 0.675 <= theoretical_ar_m1(1.99) <= 0.685

    @pytest.mark.criterion(1, C1)
    def test_local_sweep_runtime(self, sweep):
        assert sweep["m1_seconds"] < 60.0

    @pytest.mark.criterion(1, C1)
    def test_empirical_minimum_value(self, sweep):
        _, value = empirical_minimum(sweep["records"], MethodId.M1)
        assert abs(value - 0.68) <= 0.01

    @pytest.mark.criterion(1, C1)
    def test_empirical_minimum_location(self, sweep):
        # theoretical_ar_m1(a + 1) == theoretical_ar_m1(a) on [1, 2), so 1.95
        # and 2.95 tie exactly and only sampling noise separates them
        alpha, value = empirical_minimum(sweep["records"], MethodId.M1)
        print(f"empirical M1 minimum {value:.6f} at alpha={alpha}")
        assert 1.9 <= alpha < 2.0


# ---------------------------------------------------------------------------
#  2. Sweep reproduction
# ---------------------------------------------------------------------------

class TestSweepReproduction:
    @pytest.mark.criterion(2, C2)
    def test_all_cells_present(self, sweep):
        records = sweep["records"]
        assert len(sweep["grid"]) == 581
        assert len(records) == 581 + 4 * 580
        assert all(r.n == 600_000 and r.accepted == 600_000 for r in records)

    @pytest.mark.criterion(2, C2)
    def test_cells_within_tolerance(self, sweep):
        bad = ar_violations(sweep["records"], NOISE_FLOOR)
        worst = max(abs(r.empirical_ar - r.theoretical_ar) for r in sweep["records"])
        print(f"largest |empirical - reference| = {worst:.5f}")
        assert bad == []


# ---------------------------------------------------------------------------
#  3. Rankings
# ---------------------------------------------------------------------------

def _leader_ok(row, method, strict=False):
    others = [v for m, v in row.items() if m is not method]
    if not others:
        return True
    if strict:
        return row[method] > max(others)
    return row[method] >= max(others) - NOISE_FLOOR


@pytest.fixture(scope="module")
def tables(sweep):
    return ar_table(sweep["records"], True), ar_table(sweep["records"], False)


class TestRankings:
    @pytest.mark.criterion(3, C3)
    @pytest.mark.parametrize("use_empirical", [False, True], ids=["reference", "empirical"])
    def test_m1_strictly_best_from_four(self, tables, use_empirical):
        table = tables[use_empirical]
        losers = [a for a in table if a >= 4.0 and not _leader_ok(table[a], MethodId.M1, strict=True)]
        assert losers == []

    @pytest.mark.criterion(3, C3)
    @pytest.mark.parametrize("use_empirical", [False, True], ids=["reference", "empirical"])
    def test_m1_best_near_one_and_above_two(self, tables, use_empirical):
        table = tables[use_empirical]
        span = [a for a in table if 1.0 <= a <= 1.35 or 2.0 <= a <= 2.37]
        assert len(span) == 8 + 8
        assert [a for a in span if not _leader_ok(table[a], MethodId.M1)] == []

    @pytest.mark.criterion(3, C3)
    @pytest.mark.parametrize("use_empirical", [False, True], ids=["reference", "empirical"])
    def test_best_leads_between(self, tables, use_empirical):
        table = tables[use_empirical]
        span = [a for a in table if 1.35 < a < 2.0]
        assert len(span) == 12
        assert [a for a in span if not _leader_ok(table[a], MethodId.M4_TSTUDENT)] == []

    @pytest.mark.criterion(3, C3)
    @pytest.mark.parametrize("use_empirical", [False, True], ids=["reference", "empirical"])
    def test_log_logistic_edges_m1_below_four(self, tables, use_empirical):
        table = tables[use_empirical]
        span = [a for a in table if 3.87 <= a < 4.0]
        assert span == [3.9, 3.95]
        for a in span:
            assert table[a][MethodId.M2_LOG_LOGISTIC] >= table[a][MethodId.M1] - (NOISE_FLOOR if use_empirical else 0.0)


# ---------------------------------------------------------------------------
#  4. Asymptotes
# ---------------------------------------------------------------------------

class TestAsymptotes:
    @pytest.mark.criterion(4, C4)
    @pytest.mark.parametrize("method", list(MethodId), ids=lambda m: m.name)
    def test_large_shape(self, method):
        batch = sample(method, 1000.0, 1.0, seed_stream(SEED).substream(1000 + method.ordinal), 10**6)
        print(f"{method.name}: empirical {batch.empirical_ar:.4f}, limit {asymptotic_ar(method):.4f}")
        assert abs(batch.empirical_ar - asymptotic_ar(method)) < 0.01
        if method is MethodId.M1:
            assert batch.empirical_ar >= 0.98


# ---------------------------------------------------------------------------
#  5. Integer shapes
# ---------------------------------------------------------------------------

class TestIntegerShapes:
    @pytest.mark.criterion(5, C5)
    @pytest.mark.parametrize("k", range(1, 31))
    def test_exact(self, k):
        batch = sample_m1(GammaParams(float(k)), seed_stream(SEED).substream(k), 10_000)
        assert batch.proposed == batch.accepted
        assert theoretical_ar_m1(float(k)) == 1.0


# ---------------------------------------------------------------------------
#  6. Envelope property
# ---------------------------------------------------------------------------

class TestEnvelope:
    @pytest.mark.criterion(6, C6)
    @pytest.mark.parametrize("alpha", [1.0, 1.01, 1.3, 1.5, 1.99, 2.0, 2.5, 3.7, 4.5, 10.2, 29.5])
    @pytest.mark.parametrize("beta", [0.1, 1.0, 10.0])
    def test_grid(self, alpha, beta):
        params = GammaParams(alpha, beta)
        prop = build_proposal(params)
        expected = (alpha - 1.0) / beta if alpha >= 2 else alpha / beta
        hi = gamma_quantile(params, 1.0 - 1e-6)
        r = envelope_check(
            lambda x: log_target(params, x), lambda x: log_proposal(prop, x), 0.0, hi, 10_000, focus=[expected]
        )
        assert r.max_relative_violation <= 1e-12
        assert r.passed
        if is_integer_shape(alpha):
            # hat and target coincide, so they touch at every point including expected
            assert log_proposal(prop, expected) == log_target(params, expected)
        else:
            assert len(r.tangency_points) == 1
            assert r.tangency_points[0] == pytest.approx(expected, rel=1e-3)


# ---------------------------------------------------------------------------
#  7. Optimal tangent point
# ---------------------------------------------------------------------------

class TestOptimalTangent:
    @pytest.mark.criterion(7, C7)
    @pytest.mark.parametrize("alpha", [1.1, 1.5, 1.9])
    @pytest.mark.parametrize("beta", [1.0, 3.0])
    def test_minimum(self, alpha, beta):
        params = GammaParams(alpha, beta)
        star = optimal_tangent(params)
        assert star == pytest.approx(alpha / beta)
        best = tangent_area(star, params)
        thetas = np.linspace((alpha - 1.0) / beta * 1.01, 10.0 * alpha / beta, 200)
        assert all(best <= tangent_area(t, params) for t in thetas)
        h = 1e-5 * star
        derivative = (tangent_area(star + h, params) - tangent_area(star - h, params)) / (2.0 * h)
        assert abs(derivative) / best < 1e-6


# ---------------------------------------------------------------------------
#  8. Rate invariance
# ---------------------------------------------------------------------------

class TestRateInvariance:
    @pytest.mark.criterion(8, C8)
    def test_theoretical_has_no_rate(self):
        assert list(inspect.signature(theoretical_ar_m1).parameters) == ["alpha"]
        for alpha in (1.5, 4.5):
            for beta in (0.1, 1.0, 10.0):
                params = GammaParams(alpha, beta)
                ratio = math.exp(log_target_area(params)) / proposal_area(params)
                assert ratio == pytest.approx(theoretical_ar_m1(alpha), rel=1e-12)

    @pytest.mark.criterion(8, C8)
    @pytest.mark.parametrize("alpha", [1.5, 4.5])
    def test_empirical(self, alpha):
        ars = [
            sample_m1(GammaParams(alpha, beta), seed_stream(SEED).substream(i), 600_000).empirical_ar
            for i, beta in enumerate((0.1, 1.0, 10.0))
        ]
        print(f"alpha={alpha}: {ars}")
        assert max(ars) - min(ars) < 0.005
        assert all(abs(a - theoretical_ar_m1(alpha)) < 0.005 for a in ars)


# ---------------------------------------------------------------------------
#  9. Distributional correctness
# ---------------------------------------------------------------------------

CASES = (
    [(MethodId.M1, a, b) for a in (1.5, 2.5, 4.0, 10.0) for b in (1.0, 3.0)]
    + [(MethodId.M4_TSTUDENT, 1.5, 1.0)]
    + [(m, a, 1.0) for m in BASELINES for a in (2.5, 4.0, 10.0)]
)


@pytest.fixture(scope="module")
def gof_reports():
    t0 = time.perf_counter()
    reports = {}
    for i, (method, alpha, beta) in enumerate(CASES):
        batch = sample(method, alpha, beta, seed_stream(SEED).substream(5000 + i), 10**5)
        reports[(method, alpha, beta)] = goodness_of_fit(batch.values, GammaParams(alpha, beta))
    return reports, time.perf_counter() - t0


class TestDistributions:
    @pytest.mark.criterion(9, C9)
    @pytest.mark.parametrize("case", CASES, ids=lambda c: f"{c[0].name}-{c[1]}-{c[2]}")
    def test_case(self, gof_reports, case):
        r = gof_reports[0][case]
        print(" ".join(r.lines()))
        assert r.ks_statistic < 1.628 / math.sqrt(10**5)
        assert max(abs(r.mean_err), abs(r.var_err), abs(r.skew_err)) < 4.0
        assert r.passed

    @pytest.mark.criterion(9, C9)
    def test_runtime(self, gof_reports):
        assert gof_reports[1] < 60.0


# ---------------------------------------------------------------------------
#  10. Closed form versus quadrature
# ---------------------------------------------------------------------------

def _m1_quadrature(alpha):
    params = GammaParams(alpha, 1.0)
    prop = build_proposal(params)
    mode = alpha - 1.0
    return quadrature_ar(
        lambda x: log_target(params, x), lambda x: log_proposal(prop, x),
        mode + 50.0 * math.sqrt(alpha), center=mode,
    )


class TestFormulaDiscrepancy:
    @pytest.mark.criterion(10, C10)
    def test_uncorrected_formula(self):
        assert uncorrected_ar_m1(2.5) == pytest.approx(1.7895, abs=1e-4)

    @pytest.mark.criterion(10, C10)
    def test_quadrature_and_monte_carlo(self):
        quad = _m1_quadrature(2.5)
        mc = sample_m1(GammaParams(2.5), seed_stream(SEED).substream(25), 10**6).empirical_ar
        print(f"quadrature {quad:.6f}, monte carlo {mc:.6f}, uncorrected {uncorrected_ar_m1(2.5):.6f}")
        assert abs(quad - 0.795) <= 0.005
        assert abs(mc - 0.795) <= 0.005

    @pytest.mark.criterion(10, C10)
    def test_corrected_matches_quadrature(self):
        alphas = np.random.default_rng(SEED).uniform(2.0, 30.0, 50)
        worst = max(abs(theoretical_ar_m1(a) - _m1_quadrature(a)) for a in alphas)
        print(f"largest |closed form - quadrature| = {worst:.2e}")
        assert worst < 1e-6
