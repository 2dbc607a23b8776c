"""End-to-end acceptance suite.

Each test covers one numbered criterion at its pinned tolerance and prints a
PASS line on success; run `pytest tests/test_acceptance.py -v -s` to see them.
All expected values come from closed forms or independent oracles computed
in-line.
"""

import math
import time

import numpy as np
import pytest

from ldplab import (
    Potential,
    axioms_check,
    deviation_mass_exact,
    deviation_mass_mc,
    deviation_series,
    equilibrium_measure,
    gibbs_ratio_audit,
    growth_estimate,
    leaf_measure,
    pressure,
    q_derivative,
    q_value,
    random_markov_measure,
    rate_fit,
    rate_scalar,
    recode,
    variational_gap,
)
from ldplab.ldp import Interval

from conftest import bernoulli_potential

GOLDEN_RATIO = (1 + math.sqrt(5)) / 2


def report(num, text):
    print(f"ACCEPTANCE {num:2d} {text}: PASS")


def binary_rate(alpha):
    return math.log(2) + alpha * math.log(alpha) + (1 - alpha) * math.log(1 - alpha)


def test_criterion_01_pressure_oracles(fs2, gm):
    start = time.perf_counter()
    assert pressure(fs2, Potential.zero(fs2)) == pytest.approx(math.log(2), abs=1e-10)
    assert pressure(gm, Potential.zero(gm)) == pytest.approx(math.log(GOLDEN_RATIO), abs=1e-10)
    for p in (0.1, 0.5, 0.9):
        assert pressure(fs2, bernoulli_potential(fs2, p)) == pytest.approx(0.0, abs=1e-10)
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    report(1, f"pressure oracles within 1e-10 ({elapsed:.2f}s)")


def test_criterion_02_smale_axioms(fs2, gm):
    start = time.perf_counter()
    for spec, name in ((fs2, "full 2-shift"), (gm, "golden-mean")):
        rep = axioms_check(spec, sample_count=1000, seed=2025)
        assert rep.ok, rep.violations
        assert rep.max_stable_ratio <= 0.5
        assert rep.max_unstable_ratio <= 0.5
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0
    report(2, f"axiom checks, 0 violations, ratio <= 1/2 ({elapsed:.2f}s)")


def test_criterion_03_variational_principle(fs2, gm):
    rng = np.random.default_rng(99)
    for spec in (fs2, gm):
        chain = recode(spec, 1)
        for pot in (Potential.zero(spec), bernoulli_potential(spec, 0.3)):
            p_top = pressure(spec, pot)
            mu_eq = equilibrium_measure(spec, pot)
            assert abs(variational_gap(spec, pot, mu_eq)) <= 1e-8
            for _ in range(500):
                nu = random_markov_measure(chain, rng)
                gap = variational_gap(spec, pot, nu)
                assert gap >= -1e-8
    report(3, "variational gap >= -1e-8 over 1000 random measures per system, "
              "0 at the equilibrium measure")


def test_criterion_04_conditional_gibbs_audit(fs2, gm):
    start = time.perf_counter()
    worst_drift = 0.0
    for spec in (fs2, gm):
        for pot in (Potential.zero(spec), bernoulli_potential(spec, 0.3)):
            mu = leaf_measure(spec, pot, (0,))
            for r in (0, 1, 2):
                rep = gibbs_ratio_audit(mu, n_max=18, r=r)
                assert 0 < rep.k_min <= rep.k_max < math.inf
                assert rep.drift < 0.05, (spec.alphabet_size, r, rep.drift)
                worst_drift = max(worst_drift, rep.drift)
    elapsed = time.perf_counter() - start
    assert elapsed < 60.0
    report(4, f"pinching constants finite, worst drift {worst_drift:.2e} < 5% "
              f"({elapsed:.1f}s)")


def test_criterion_05_duality(fs2, gm):
    worst = 0.0
    for spec in (fs2, gm):
        z = Potential.zero(spec)
        ind1 = Potential.indicator(spec, 1)
        for t in np.linspace(-3.0, 3.0, 61):
            alpha = q_derivative(spec, z, ind1, t)
            value = rate_scalar(spec, z, ind1, alpha)
            err = abs(t * alpha - value - q_value(spec, z, ind1, t))
            worst = max(worst, err)
            assert err <= 1e-6
    report(5, f"double Legendre transform recovers q, worst error {worst:.2e}")


def test_criterion_06_scalar_rate_closed_form(fs2):
    z = Potential.zero(fs2)
    ind1 = Potential.indicator(fs2, 1)
    worst = 0.0
    for alpha in np.linspace(0.01, 0.99, 99):
        err = abs(rate_scalar(fs2, z, ind1, float(alpha)) - binary_rate(float(alpha)))
        worst = max(worst, err)
        assert err <= 1e-8
    report(6, f"99-point binary entropy grid, worst error {worst:.2e}")


def test_criterion_07_decay_rate_full_shift(fs2):
    start = time.perf_counter()
    mu = leaf_measure(fs2, Potential.zero(fs2), (0,))
    ind1 = Potential.indicator(fs2, 1)
    series = deviation_series(mu, ind1, Interval(0.7, 1.0), range(100, 501, 50))
    target = binary_rate(0.7)
    fit = rate_fit(series)
    assert abs(fit.estimate - target) <= 0.005
    last = series.points[-1]
    assert last.n == 500
    assert abs(-last.log_mass / last.n - target) < 0.01
    elapsed = time.perf_counter() - start
    assert elapsed < 30.0
    report(7, f"fitted rate {fit.estimate:.6f} vs {target:.6f} "
              f"(|diff| = {abs(fit.estimate - target):.2e}, {elapsed:.1f}s)")


def test_criterion_08_decay_rate_golden_mean(gm):
    z = Potential.zero(gm)
    ind1 = Potential.indicator(gm, 1)
    mu = leaf_measure(gm, z, (0,))
    series = deviation_series(mu, ind1, Interval(0.4, 0.5), range(100, 501, 50))
    fit = rate_fit(series)
    independent = rate_scalar(gm, z, ind1, 0.4)
    assert abs(fit.estimate - independent) <= 0.01
    report(8, f"golden-mean fitted rate {fit.estimate:.6f} vs Legendre "
              f"{independent:.6f}")


def test_criterion_09_growth_estimates(fs2, gm):
    worst_at_40 = 0.0
    for spec in (fs2, gm):
        ind1 = Potential.indicator(spec, 1)
        for pot in (Potential.zero(spec), bernoulli_potential(spec, 0.3)):
            q = q_value(spec, pot, ind1, 1.0)
            mu = leaf_measure(spec, pot, (1,))
            devs = [(n, abs(growth_estimate(mu, ind1, n) - q)) for n in range(5, 41, 5)]
            C = max(n * d for n, d in devs)
            assert all(d <= C / n + 1e-12 for n, d in devs)
            d40 = devs[-1][1]
            assert d40 < 0.02, (spec.alphabet_size, d40)
            worst_at_40 = max(worst_at_40, d40)
    report(9, f"growth converges at O(1/n), worst |dev| at n=40 is {worst_at_40:.4f}")


def test_criterion_10_monte_carlo(fs2):
    start = time.perf_counter()
    mu = leaf_measure(fs2, Potential.zero(fs2), (0,))
    ind1 = Potential.indicator(fs2, 1)
    iv = Interval(0.7, 1.0)
    exact = deviation_mass_exact(mu, ind1, iv, 20).mass
    assert exact == pytest.approx(60460 / 1048576, abs=1e-15)

    tilt = math.log(7 / 3)
    big = deviation_mass_mc(mu, ind1, iv, 20, samples=10 ** 6, tilt=tilt, seed=2025)
    assert abs(big.mass - exact) <= 3 * big.stderr

    estimates, variances = [], []
    for seed in range(50):
        p = deviation_mass_mc(mu, ind1, iv, 20, samples=10 ** 5, tilt=tilt, seed=seed)
        estimates.append(p.mass)
        variances.append(p.stderr ** 2)
    avg = float(np.mean(estimates))
    combined = math.sqrt(sum(variances)) / len(estimates)
    assert abs(avg - exact) <= 4 * combined
    elapsed = time.perf_counter() - start
    report(10, f"tilted MC within {abs(big.mass - exact) / big.stderr:.2f} sigma, "
               f"50-seed average within {abs(avg - exact) / combined:.2f} combined sigma "
               f"({elapsed:.1f}s)")
