from fractions import Fraction

import numpy as np
import pytest

from demonwork import expsim, qcore, states, witnesses, workx
from demonwork.expsim import QuadCounts
from demonwork.qcore import BlochDir, DensityOp, GreatCircle

EXAMPLE = QuadCounts(*expsim.EXAMPLE_COUNTS)
BELL = states.phi_state(np.pi / 4)


def test_simulate_counts_zero_outcomes():
    rec = expsim.simulate_counts(BELL, [0.0, 0.0], rate=800, duration=10, seed=1)
    assert rec.counts[0, 1] == 0 and rec.counts[1, 0] == 0
    assert rec.counts.sum() > 7000


def test_simulate_counts_poisson_mean():
    n_pp = [expsim.simulate_counts(BELL, [0.0, 0.0], 800, 10, seed=s).counts[0, 0] for s in range(1000)]
    # 1000 draws of mean 4000: std. error of the mean is 2
    assert abs(np.mean(n_pp) - 4000) < 3 * 2


def test_count_record_json_round_trip():
    rec = expsim.simulate_counts(BELL, [0.1, 0.7], 100, 1, seed=2, circle=GreatCircle.from_normal([1, 1, 0]))
    back = expsim.CountRecord.from_json(rec.to_json())
    assert back.to_json() == rec.to_json()
    assert np.array_equal(back.counts, rec.counts)


def test_seeded_runs_are_reproducible():
    a = expsim.simulate_counts(BELL, [0.3, 0.3], 270, 30, seed=7)
    b = expsim.simulate_counts(BELL, [0.3, 0.3], 270, 30, seed=7)
    assert np.array_equal(a.counts, b.counts)
    rho = states.werner_like(0.9, 0.8)
    p1 = expsim.work2_protocol(rho, seed=3)
    p2 = expsim.work2_protocol(rho, seed=3)
    assert np.array_equal(p1.counts, p2.counts)


def test_stat_params_validated():
    with pytest.raises(ValueError):
        expsim.simulate_counts(BELL, [0, 0], rate=0, duration=1, seed=0)
    with pytest.raises(ValueError):
        expsim.work2_protocol(BELL, seed=None)
    with pytest.raises(ValueError):
        QuadCounts(-1, 0, 0, 0)
    with pytest.raises(ZeroDivisionError):
        expsim.joint_from_counts(QuadCounts(0, 0, 0, 0))


def test_printed_estimators_exact():
    p_ab, p_a, p_b = estimators = expsim.printed_estimators(EXAMPLE)
    fr = [Fraction(x).limit_denominator(10**6) for x in estimators]
    assert fr == [Fraction(58, 8137), Fraction(3751, 8137), Fraction(3636, 8137)]
    assert expsim.printed_estimators(QuadCounts(5, 5, 5, 5)) == (0.25, 0.5, 0.5)


def test_printed_estimator_index_convention():
    # the printed p_A sums N_pp + N_mp, i.e. the canonical marginal of the second party
    _, p_a, p_b = expsim.printed_estimators(EXAMPLE)
    joint = expsim.joint_from_counts(EXAMPLE)
    assert p_a == pytest.approx(joint.marginal([1])[0], abs=1e-15)
    assert p_b == pytest.approx(joint.marginal([0])[0], abs=1e-15)


def test_joint_from_example_counts():
    j = expsim.joint_from_counts(EXAMPLE).flat()
    assert np.allclose(j, [0.4397, 0.00713, 0.02126, 0.5319], atol=5e-5)
    # entropy arithmetic done by hand
    p = np.array(expsim.EXAMPLE_COUNTS) / 8137
    pa = np.array([p[0] + p[1], p[2] + p[3]])
    pb = np.array([p[0] + p[2], p[1] + p[3]])
    h = lambda x: -np.sum(x * np.log2(x))
    oracle = 1 - h(p) + 0.5 * (h(pa) + h(pb))
    assert float(workx.work_from_joint(j.reshape(2, 2))) == pytest.approx(oracle, abs=1e-12)
    assert oracle == pytest.approx(0.819, abs=1e-3)


def test_perfect_correlation_counts():
    for k in (1, 10, 1000):
        j = expsim.joint_from_counts(QuadCounts(k, 0, 0, k))
        assert float(workx.work_from_joint(j.probs)) == pytest.approx(1.0)


def test_joint_from_counts_converges(rng):
    circle = GreatCircle.xz()
    for _ in range(50):
        rho = qcore.random_density(2, rng)
        t = rng.uniform(0, np.pi)
        means = 1e6 * expsim.quad_probabilities(rho, circle, t)
        q = QuadCounts(*rng.poisson(means))
        est = expsim.joint_from_counts(q).flat()
        exact = qcore.born_joint_dist(rho, [circle.point(t)] * 2).flat()
        assert 0.5 * np.abs(est - exact).sum() < 5e-3


def test_quad_probabilities_sum_to_one(rng):
    rho = qcore.random_density(2, rng)
    c = GreatCircle.from_normal(qcore.random_direction(rng))
    assert expsim.quad_probabilities(rho, c, 0.4).sum() == pytest.approx(1.0)


@pytest.mark.parametrize("n_angles", [5, 19])
def test_exact_protocol_matches_model(n_angles, rng):
    rho = qcore.random_density(2, rng)
    c = GreatCircle.from_normal(qcore.random_direction(rng))
    exact = expsim.work2_protocol(rho, c, n_angles, exact=True).average
    assert exact == pytest.approx(expsim.noiseless_protocol_value(rho, c, n_angles), abs=1e-12)
    assert exact == pytest.approx(workx.avg_work2(rho, c, 2 * n_angles).average, abs=1e-12)


def test_protocol_quadrature_converges():
    for rho in (states.werner_like(0.9, np.pi / 4), states.werner_like(0.9, 0.91)):
        coarse = expsim.noiseless_protocol_value(rho, GreatCircle.xz(), 19)
        fine = workx.avg_work2(rho, GreatCircle.xz(), 1024).average
        assert abs(coarse - fine) < 1e-3


def test_sigma_propagation_scaling():
    rho = states.werner_like(0.98, 0.91)
    counts = expsim.work2_protocol(rho, seed=11).counts
    s1 = expsim.sigma_work_propagation(counts)
    s100 = expsim.sigma_work_propagation(counts * 100)
    assert s1 / s100 == pytest.approx(10, rel=0.05)
    assert 1e-3 < s1 < 1e-2


def test_sigma_propagation_matches_monte_carlo():
    rho = states.werner_like(0.98, 0.91)
    pr = expsim.work2_protocol(rho, seed=4)
    mc = expsim.monte_carlo_sigma(expsim.protocol_work_from_counts, pr.counts, 1000, seed=4)
    assert pr.sigma == pytest.approx(mc, rel=0.2)


def test_monte_carlo_sigma_properties():
    counts = np.array([100.0, 200.0, 300.0])
    assert expsim.monte_carlo_sigma(lambda c: 1.0, counts, 100, 0) == 0.0
    stat = lambda c: c[0] / c.sum()
    a = expsim.monte_carlo_sigma(stat, counts * 30, 1000, 1)
    b = expsim.monte_carlo_sigma(stat, counts * 30, 2000, 1)
    assert abs(a - b) / a < 0.1
    with pytest.raises(ValueError):
        expsim.monte_carlo_sigma(stat, counts, 10, 0)


def test_tomography_exact_reconstruction(rng):
    for n in (1, 2, 3):
        rho = qcore.random_density(n, rng)
        rec = expsim.simulate_tomography(rho, exact=True)
        est = expsim.linear_inversion(rec, physical=False)
        assert np.max(np.abs(est.matrix - rho.matrix)) < 1e-9


def test_tomography_projection_is_physical(rng):
    for seed in range(20):
        rec = expsim.simulate_tomography(states.ghz_cluster(), rate=20, duration=1, seed=seed)
        est = expsim.linear_inversion(rec)
        assert np.linalg.eigvalsh(est.matrix)[0] > -1e-12
        assert np.trace(est.matrix).real == pytest.approx(1.0)


def test_project_to_physical_keeps_valid_states(rng):
    rho = qcore.random_density(2, rng)
    assert np.allclose(expsim.project_to_physical(rho.matrix), rho.matrix)
    bad = np.diag([0.7, 0.5, -0.1, -0.1]).astype(complex)
    out = expsim.project_to_physical(bad)
    assert np.allclose(out, np.diag([0.6, 0.4, 0, 0]))


def test_tomography_of_mixed_state_is_unbiased():
    rate, duration = 200, 30
    rec = expsim.simulate_tomography(DensityOp.maximally_mixed(2), rate, duration, seed=9)
    est = expsim.pauli_estimates(rec)
    comps = est.ravel()[1:]
    # each single-qubit component averages 3 settings, correlations use 1
    sigma = 1 / np.sqrt(rate * duration)
    assert np.all(np.abs(comps) < 3 * sigma)


def test_tomography_record_round_trip_and_validation():
    rec = expsim.simulate_tomography(BELL, 10, 1, seed=0)
    back = expsim.TomographyRecord.from_json(rec.to_json())
    assert np.array_equal(back.counts, rec.counts)
    partial = expsim.TomographyRecord(rec.bases[:-1], rec.counts[:-1])
    with pytest.raises(ValueError):
        expsim.pauli_estimates(partial)


def test_tomography_sigma_scale():
    rho = states.werner_like(0.98, 0.91)
    rec = expsim.simulate_tomography(rho, 270, 30, seed=2)
    sigma = expsim.tomography_monte_carlo_sigma(lambda r: witnesses.max_bell(r, 36).value, rec, 200, seed=2)
    assert 1e-3 < sigma < 3e-2
