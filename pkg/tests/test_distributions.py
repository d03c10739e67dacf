import math

import numpy as np
import pytest
from hypothesis import given, settings
from scipy.integrate import quad

import biasforge as bf
from conftest import atoms_strategy


# ---------------------------------------------------------------------------
# moments
# ---------------------------------------------------------------------------

def test_moment_uniform_square():
    assert bf.moment(bf.uniform(-1, 1), 2) == pytest.approx(1 / 3, abs=1e-12)


def test_moment_symmetric_two_point():
    d = bf.from_atoms([(-1, 0.5), (1, 0.5)])
    assert bf.moment(d, 4) == 1.0


def test_moment_three_point_brute_force():
    # oracle: plain atom sum
    xs, w = [-1.0, 0.0, 2.0], 1 / 3
    expected = sum(w * x**4 for x in xs)
    d = bf.from_atoms([(x, w) for x in xs])
    assert bf.moment(d, 4) == pytest.approx(expected, rel=1e-14)
    assert expected == pytest.approx(17 / 3)


def test_moment_zeroth_is_one():
    assert bf.moment(bf.normal(), 0) == 1.0


def test_moment_matches_catalog_closed_forms():
    # quadrature route vs closed forms
    assert bf.moment(bf.exponential(2.0), 3) == pytest.approx(math.factorial(3) / 8, rel=1e-9)
    assert bf.moment(bf.normal(0, 2), 4) == pytest.approx(3 * 16, rel=1e-9)
    hn = bf.half_normal(1.5)
    assert bf.moment(hn, 2) == pytest.approx(1.5**2, rel=1e-9)
    assert bf.moment(hn, 1) == pytest.approx(1.5 * math.sqrt(2 / math.pi), rel=1e-9)


def test_moment_heavy_tail_raises():
    cauchy = bf.Distribution(kind="analytic-catalog", lo=-np.inf, hi=np.inf,
                             density=lambda x: 1.0 / (np.pi * (1 + np.asarray(x, float) ** 2)))
    with pytest.raises(bf.NonIntegrable):
        bf.moment(cauchy, 2)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def test_sample_dirac(rng):
    d = bf.from_atoms([(3.0, 1.0)])
    assert np.array_equal(bf.sample(d, rng, 5), np.full(5, 3.0))


def test_sample_uniform_clt_band():
    n = 100_000
    draws = bf.sample(bf.uniform(0, 1), bf.RandomSource(17), n)
    sigma = math.sqrt(1 / 12)
    assert abs(draws.mean() - 0.5) < 4 * sigma / math.sqrt(n)


def test_sample_exponential_ks():
    n = 100_000
    draws = bf.sample(bf.exponential(1.0), bf.RandomSource(23), n)
    stat = bf.ks_statistic(draws, lambda t: 1 - np.exp(-t))
    assert stat < bf.ks_critical(n, 0.01)


def test_sample_determinism():
    for d in (bf.uniform(0, 1), bf.normal(), bf.from_atoms([(0, 0.25), (1, 0.75)])):
        a = bf.sample(d, bf.RandomSource(99), 1000)
        b = bf.sample(d, bf.RandomSource(99), 1000)
        assert np.array_equal(a, b)


def test_density_only_has_no_sampler(rng):
    d = bf.Distribution(kind="constructed", lo=0, hi=1, density=lambda x: np.ones_like(x))
    with pytest.raises(bf.NoSampler):
        bf.sample(d, rng, 3)


# ---------------------------------------------------------------------------
# tilting
# ---------------------------------------------------------------------------

def test_tilt_unit_weight_keeps_law():
    d = bf.uniform(-1, 1)
    t = bf.tilt(d, lambda x: np.ones_like(np.asarray(x, float)))
    xs = np.linspace(-1, 1, 21)
    assert np.allclose(t.density(xs), d.density(xs), atol=1e-12)
    assert bf.moment(t, 3) == pytest.approx(bf.moment(d, 3), abs=1e-10)


def test_tilt_uniform_positive_part_weight():
    # w(y) = y+ (y+1): normalizer E[w] = 5/12, density (12/5) y(y+1)/2 on [0,1]
    d = bf.uniform(-1, 1)
    w = lambda y: np.maximum(np.asarray(y, float), 0.0) * (np.asarray(y, float) + 1.0)
    z_oracle = quad(lambda y: max(y, 0) * (y + 1) * 0.5, -1, 1, points=[0])[0]
    assert z_oracle == pytest.approx(5 / 12, abs=1e-12)
    t = bf.tilt(d, w, weight_kinks=(0.0,))
    for y in (0.25, 0.5, 0.9):
        assert t.density(y) == pytest.approx((12 / 5) * y * (y + 1) / 2, rel=1e-9)
    assert t.density(-0.5) == 0.0


def test_tilt_atoms_squared_weight_unchanged():
    d = bf.from_atoms([(-1, 0.5), (1, 0.5)])
    t = bf.tilt(d, lambda x: np.asarray(x, float) ** 2)
    assert t.atoms == d.atoms


def test_tilt_moment_reweighting_uniform():
    d = bf.uniform(0, 1)
    w = lambda x: np.asarray(x, float) ** 2
    t = bf.tilt(d, w)
    # E_nu[Y^n] = E[X^n w(X)] / E[w(X)]
    lhs = bf.moment(t, 3)
    rhs = bf.moment(d, 5) / bf.moment(d, 2)
    assert lhs == pytest.approx(rhs, rel=1e-9)


@settings(max_examples=30, deadline=None)
@given(atoms_strategy())
def test_tilt_moment_reweighting_atoms(d):
    w = lambda x: np.asarray(x, float) ** 2 + 0.5
    t = bf.tilt(d, w)
    for n in (1, 2, 3):
        num = sum(m * (x**2 + 0.5) * x**n for x, m in d.atoms)
        den = sum(m * (x**2 + 0.5) for x, m in d.atoms)
        assert bf.moment(t, n) == pytest.approx(num / den, rel=1e-12, abs=1e-12)


def test_tilt_negative_weight_rejected():
    with pytest.raises(bf.NegativeWeight):
        bf.tilt(bf.uniform(-1, 1), lambda x: np.asarray(x, float))


def test_tilt_zero_normalizer():
    d = bf.from_atoms([(-1, 0.5), (1, 0.5)])
    with pytest.raises(bf.ZeroNormalizer):
        bf.tilt(d, lambda x: np.zeros_like(np.asarray(x, float)))


def test_tilt_rejection_sampler_agrees():
    d = bf.uniform(-1, 1)
    w = lambda y: np.maximum(np.asarray(y, float), 0.0) * (np.asarray(y, float) + 1.0)
    t = bf.tilt(d, w, method="rejection", weight_kinks=(0.0,))
    n = 20_000
    draws = bf.sample(t, bf.RandomSource(5), n)
    cdf = bf.numeric_cdf(bf.tilt(d, w, weight_kinks=(0.0,)))
    assert bf.ks_statistic(draws, cdf) < bf.ks_critical(n, 0.01)
    assert np.array_equal(draws, bf.sample(t, bf.RandomSource(5), n))


def test_tilt_rejection_budget():
    d = bf.uniform(0, 1)
    w = lambda x: np.where(np.asarray(x, float) < 1e-5, 1.0, 0.0)
    t = bf.tilt(d, w, method="rejection", envelope=1.0, weight_kinks=(1e-5,))
    with pytest.raises(bf.RejectionBudget):
        bf.sample(t, bf.RandomSource(1), 500)


def test_tilt_empirical_becomes_atoms():
    d = bf.from_samples([0.0, 1.0, 1.0, 2.0])
    t = bf.tilt(d, lambda x: np.asarray(x, float))
    assert t.atoms is not None
    # weights proportional to x: masses 0, 1/4, 1/4, 2/4 -> {1: 1/2, 2: 1/2}
    assert t.atoms == ((1.0, 0.5), (2.0, 0.5))


# ---------------------------------------------------------------------------
# mixtures
# ---------------------------------------------------------------------------

def test_mixture_single_component_is_identity():
    d = bf.uniform(0, 1)
    assert bf.make_mixture([d], [1.0]) is d


def test_mixture_half_normals_reconstruct_normal():
    sig = 1.3
    mix = bf.make_mixture([bf.half_normal(sig), bf.negative_half_normal(sig)], [0.5, 0.5])
    z = bf.normal(0, sig)
    xs = np.linspace(-4, 4, 81)
    xs = xs[np.abs(xs) > 1e-9]  # the half-normal edge point itself
    assert np.allclose(mix.density(xs), z.density(xs), atol=1e-12)


def test_mixture_piecewise_density():
    mix = bf.make_mixture([bf.uniform(0, 1), bf.uniform(1, 2)], [0.25, 0.75])
    assert mix.density(0.5) == pytest.approx(0.25)
    assert mix.density(1.5) == pytest.approx(0.75)


def test_mixture_weight_validation():
    with pytest.raises(bf.WeightMismatch):
        bf.make_mixture([bf.uniform(0, 1)], [0.5, 0.5])
    with pytest.raises(bf.WeightMismatch):
        bf.make_mixture([bf.uniform(0, 1), bf.uniform(1, 2)], [0.6, 0.6])


@settings(max_examples=30, deadline=None)
@given(atoms_strategy(), atoms_strategy())
def test_mixture_moments_weighted_sums(d1, d2):
    mix = bf.make_mixture([d1, d2], [0.3, 0.7])
    for n in (1, 2, 3):
        expected = 0.3 * bf.moment(d1, n) + 0.7 * bf.moment(d2, n)
        assert bf.moment(mix, n) == pytest.approx(expected, rel=1e-12, abs=1e-12)


def test_mixture_sampler_deterministic():
    mix = bf.make_mixture([bf.uniform(0, 1), bf.normal()], [0.4, 0.6])
    a = bf.sample(mix, bf.RandomSource(31), 500)
    b = bf.sample(mix, bf.RandomSource(31), 500)
    assert np.array_equal(a, b)


# ---------------------------------------------------------------------------
# invariants: normalization, CDF endpoints
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("d", [
    bf.uniform(-1, 1),
    bf.exponential(1.0),
    bf.normal(),
    bf.half_normal(1.2),
    bf.negative_half_normal(0.8),
    bf.make_mixture([bf.uniform(0, 1), bf.uniform(1, 2)], [0.25, 0.75]),
])
def test_density_integrates_to_one(d):
    lo, hi = d.effective_support()
    total = bf.integrate_fn(lambda x: float(d.density(x)), lo, hi, points=d.kinks)
    assert total == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("d", [bf.uniform(-2, 3), bf.exponential(0.5), bf.normal(1, 2),
                               bf.half_normal(1.0)])
def test_cdf_endpoints_and_monotonicity(d):
    lo, hi = d.effective_support()
    xs = np.linspace(lo, hi, 200)
    cdf = d.cdf(xs)
    assert np.all(np.diff(cdf) >= -1e-12)
    assert d.cdf(lo) == pytest.approx(0.0, abs=1e-9)
    assert d.cdf(hi) == pytest.approx(1.0, abs=1e-9)


# ---------------------------------------------------------------------------
# empirical laws and I/O
# ---------------------------------------------------------------------------

def test_empirical_moments_are_sample_averages(rng):
    values = [0.5, 1.0, 2.5, -1.0]
    d = bf.from_samples(values)
    assert d.density is None
    assert bf.moment(d, 2) == pytest.approx(np.mean(np.array(values) ** 2))
    draws = bf.sample(d, rng, 100)
    assert set(draws) <= set(values)


def test_atoms_validation():
    with pytest.raises(bf.InputError):
        bf.from_atoms([(0.0, 0.4), (1.0, 0.4)])  # masses sum to 0.8
    with pytest.raises(bf.InputError):
        bf.from_atoms([(0.0, -0.2), (1.0, 1.2)])


def test_dist_from_json_and_csv(tmp_path):
    d = bf.dist_from_json({"family": "uniform", "params": {"lo": -1, "hi": 1}})
    assert d.lo == -1 and d.hi == 1
    d = bf.dist_from_json({"atoms": [[0, 0.5], [2, 0.5]]})
    assert d.atoms == ((0.0, 0.5), (2.0, 0.5))
    path = tmp_path / "samples.csv"
    path.write_text("x\n1.0\n2.0\n3.5\n")
    d = bf.dist_from_json({"empirical_csv": str(path)})
    assert d.samples.size == 3
    mix = bf.dist_from_json({"mixture": {"components": [
        {"family": "uniform", "params": {"lo": 0, "hi": 1}},
        {"family": "uniform", "params": {"lo": 1, "hi": 2}}], "weights": [0.25, 0.75]}})
    assert mix.density(1.5) == pytest.approx(0.75)
    with pytest.raises(bf.InputError):
        bf.dist_from_json({"family": "cauchy"})
    with pytest.raises(bf.InputError):
        bf.dist_from_json({"family": "uniform", "params": {"low": 0}})


def test_random_source_contract():
    rs = bf.RandomSource(7)
    assert rs.position == 0
    rs.uniform(10)
    assert rs.position == 10
    assert rs.derive(5).seed == 12
