import math

import numpy as np
import pytest
from scipy.integrate import quad

import biasforge as bf
from biasforge import NodeSet, Polynomial, SignChangeSpec


def x_plus_spec(node):
    return SignChangeSpec(bf.plus_part, NodeSet((node,)), kinks=(0.0,))


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def test_validate_zero_bias_on_uniform(uniform_sym):
    report = bf.validate_spec(bf.zero_bias_spec(), uniform_sym)
    assert report.passed


def test_validate_ambiguous_specs_both_pass(uniform_sym):
    assert bf.validate_spec(x_plus_spec(-1.0), uniform_sym).passed
    assert bf.validate_spec(x_plus_spec(0.0), uniform_sym).passed


def test_validate_misplaced_node_fails(uniform_sym):
    spec = SignChangeSpec(lambda x: np.asarray(x, float), NodeSet((1.0,)))
    report = bf.validate_spec(spec, uniform_sym)
    assert not report.passed
    assert report.worst_value < -1e-10
    assert 0.0 < report.worst_point < 1.0


def test_validate_accepts_grid_probe():
    spec = bf.zero_bias_spec()
    assert bf.validate_spec(spec, np.linspace(-5, 5, 100)).passed


def test_orientation_is_fixed():
    with pytest.raises(bf.InputError):
        SignChangeSpec(lambda x: x, NodeSet((0.0,)), orientation="nonpos-on-last-interval")


# ---------------------------------------------------------------------------
# normalizer
# ---------------------------------------------------------------------------

def test_alpha_worked_values(uniform_sym):
    assert bf.alpha_of(uniform_sym, x_plus_spec(-1.0)) == pytest.approx(5 / 12, abs=1e-12)
    assert bf.alpha_of(uniform_sym, x_plus_spec(0.0)) == pytest.approx(1 / 6, abs=1e-12)
    assert bf.alpha_of(uniform_sym, bf.unit_bias_spec()) == pytest.approx(1.0, abs=1e-12)


def test_alpha_degenerate_and_negative():
    with pytest.raises(bf.DegenerateAlpha):
        bf.alpha_of(bf.dirac(0.0), bf.zero_bias_spec())
    flipped = SignChangeSpec(lambda x: -np.asarray(x, float), NodeSet((0.0,)))
    with pytest.raises(bf.NegativeAlpha):
        bf.alpha_of(bf.from_atoms([(-1, 0.5), (1, 0.5)]), flipped)


def test_bias_rejects_sign_violation(uniform_sym):
    spec = SignChangeSpec(lambda x: np.asarray(x, float), NodeSet((1.0,)))
    with pytest.raises(bf.SignViolation):
        bf.bias(uniform_sym, spec)


# ---------------------------------------------------------------------------
# the transform (k = 1 closed-form densities)
# ---------------------------------------------------------------------------

def test_coin_zero_bias_is_uniform():
    coin = bf.from_atoms([(-1, 0.5), (1, 0.5)])
    t = bf.bias(coin, bf.zero_bias_spec())
    assert t.alpha == pytest.approx(1.0)
    for x in (-0.9, -0.3, 0.0, 0.4, 1.0):
        assert t.density(x) == pytest.approx(0.5, abs=1e-12)
    assert t.density(1.2) == 0.0


def test_unit_bias_is_identity_in_law(uniform_sym):
    t = bf.bias(uniform_sym, bf.unit_bias_spec())
    xs = np.linspace(-0.99, 0.99, 21)
    assert np.allclose(t.density(xs), uniform_sym.density(xs), atol=1e-9)
    assert t.alpha == pytest.approx(1.0)
    assert t.law.kind == "constructed"


def test_ambiguity_density_q(uniform_sym):
    t = bf.bias(uniform_sym, x_plus_spec(0.0))
    ts = np.linspace(-1, 1, 101)
    closed = np.where((ts >= 0) & (ts <= 1), 1.5 * (1 - ts**2), 0.0)
    assert np.max(np.abs(t.density(ts) - closed)) <= 1e-9


def test_density_k1_worked_values(uniform_sym):
    assert bf.density_k1(uniform_sym, x_plus_spec(0.0), 0.0) == pytest.approx(1.5, rel=1e-9)
    assert bf.density_k1(uniform_sym, x_plus_spec(-1.0), -0.5) == pytest.approx(0.6, rel=1e-9)
    assert bf.density_k1(uniform_sym, x_plus_spec(0.0), 5.0) == 0.0
    assert bf.density_k1(uniform_sym, x_plus_spec(0.0), -5.0) == 0.0


def test_density_k1_atoms_exact():
    d = bf.from_atoms([(-1, 1 / 3), (0, 1 / 3), (2, 1 / 3)])
    spec = bf.zero_bias_spec()
    alpha = bf.alpha_of(d, spec)  # E[X^2] = 5/3
    assert alpha == pytest.approx(5 / 3)
    # p(t) = E[X (1{0<=t<=X} - 1{X<t<0})]/alpha: on (0,2] only the atom at 2 counts
    assert bf.density_k1(d, spec, 1.0) == pytest.approx((2 / 3) / alpha)
    # on [-1,0) only the atom at -1 counts, with a sign flip
    assert bf.density_k1(d, spec, -0.5) == pytest.approx((1 / 3) / alpha)


# ---------------------------------------------------------------------------
# density lifting (k >= 2)
# ---------------------------------------------------------------------------

def test_lift_density_rectangle_inner():
    inner = lambda u: 0.5 if -1 <= u <= 1 else 0.0
    assert bf.lift_density(inner, 0.0, 2, 0.0, inner_support=(-1, 1)) == pytest.approx(1.0, rel=1e-9)
    assert bf.lift_density(inner, 0.0, 2, 0.5, inner_support=(-1, 1)) == pytest.approx(0.5, rel=1e-8)
    assert bf.lift_density(inner, 0.0, 2, 3.0, inner_support=(-1, 1)) == 0.0
    assert bf.lift_density(inner, 0.0, 2, -0.5, inner_support=(-1, 1)) == pytest.approx(0.5, rel=1e-8)


def test_lift_density_level_guard():
    with pytest.raises(bf.InputError):
        bf.lift_density(lambda u: 1.0, 0.0, 1, 0.5)


def two_node_transform():
    # B(x) = x (x - 0.5) with both roots declared: product weight is a square
    U = bf.uniform(-1, 1)
    B = lambda x: np.asarray(x, float) * (np.asarray(x, float) - 0.5)
    return U, SignChangeSpec(B, NodeSet((0.0, 0.5)))


def test_two_node_density_normalizes_and_matches_sampler():
    U, spec = two_node_transform()
    t = bf.bias(U, spec)
    lo, hi = t.law.lo, t.law.hi
    # fine trapezoid: exact up to slope jumps for the gridded evaluator
    xs = np.linspace(lo, hi, 20001)
    total = np.trapezoid(np.asarray(t.density(xs)), xs)
    assert total == pytest.approx(1.0, abs=1e-6)
    n = 30_000
    draws = t.sample(n, bf.RandomSource(3))
    assert bf.ks_statistic(draws, bf.numeric_cdf(t.law)) < bf.ks_critical(n, 0.01)


def test_two_node_sampler_moments_match_recipe():
    U, spec = two_node_transform()
    t = bf.bias(U, spec)
    n = 200_000
    draws = t.sample(n, bf.RandomSource(8))
    for p in (1, 2, 3):
        exact = t.moment(p)
        se = np.std(draws**p, ddof=1) / math.sqrt(n)
        assert abs(draws.__pow__(p).mean() - exact) < 4 * se


# ---------------------------------------------------------------------------
# exact defining identity (two independent routes)
# ---------------------------------------------------------------------------

def test_defining_identity_matched_order_randomized():
    rng = np.random.default_rng(123)
    done = 0
    while done < 40:
        k = int(rng.integers(0, 4))
        X = bf.random_discrete(rng)
        spec = bf.random_valid_spec(rng, k)
        F = Polynomial.monomial(int(rng.integers(0, 7)))
        try:
            rep = bf.check_identity_exact(X, spec, k, F, tol=1e-10)
        except (bf.DegenerateAlpha, bf.DegenerateBeta):
            continue
        assert rep.passed, (k, F.degree, rep.lhs, rep.rhs)
        done += 1


def test_order_zero_identity_is_tilt():
    # with no nodes the transform is the plain reweighting, exactly on atoms
    X = bf.from_atoms([(-1, 0.25), (0.5, 0.25), (2, 0.5)])
    B = lambda x: np.asarray(x, float) ** 2 + 0.25
    spec = SignChangeSpec(B, NodeSet(()))
    t = bf.bias(X, spec)
    table = {-1.0: 2.0, 0.5: -1.0, 2.0: 5.0}  # arbitrary bounded F given by a table
    lhs = sum(m * float(B(x)) * table[x] for x, m in X.atoms)
    rhs = t.alpha * sum(m * table[x] for x, m in t.law.atoms)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_identity_sensitivity_to_alpha():
    # a 1e-3 relative normalizer error must flip the exact report to fail
    d = bf.from_atoms([(-1, 1 / 3), (0, 1 / 3), (2, 1 / 3)])
    rep = bf.check_identity_exact(d, bf.zero_bias_spec(), 1, Polynomial.monomial(3), tol=1e-10)
    assert rep.passed
    rhs_perturbed = rep.rhs * (1 + 1e-3)
    scale = max(1.0, abs(rep.lhs), abs(rhs_perturbed))
    assert abs(rep.lhs - rhs_perturbed) > 1e-10 * scale


# ---------------------------------------------------------------------------
# ambiguity of node choices
# ---------------------------------------------------------------------------

def test_ambiguity_pointwise_relation(uniform_sym):
    spec_lo, spec_hi = x_plus_spec(-1.0), x_plus_spec(0.0)
    alpha = bf.alpha_of(uniform_sym, spec_lo)
    beta = bf.alpha_of(uniform_sym, spec_hi)
    b_mean = bf.expectation(uniform_sym, bf.plus_part, points=(0.0,))
    for t in (-1.0, -0.6, -0.2, 0.0, 0.3, 0.8):
        p = bf.density_k1(uniform_sym, spec_lo, t, alpha=alpha)
        q = bf.density_k1(uniform_sym, spec_hi, t, alpha=beta)
        jump = b_mean if -1 <= t < 0 else 0.0
        assert alpha * p - beta * q == pytest.approx(jump, abs=1e-8)


def test_zero_mean_bias_makes_node_choice_irrelevant(uniform_sym):
    # dead zone on [-0.5, 0.5] and E[B(X)] = 0: every legal node gives one law
    def dead_zone(x):
        arr = np.asarray(x, float)
        return np.sign(arr) * np.maximum(np.abs(arr) - 0.5, 0.0)

    ts = np.linspace(-1, 1, 201)
    densities = []
    for node in (-0.5, 0.0, 0.5):
        spec = SignChangeSpec(dead_zone, NodeSet((node,)), kinks=(-0.5, 0.5))
        t = bf.bias(uniform_sym, spec)
        densities.append(np.asarray(t.density(ts)))
    assert np.max(np.abs(densities[0] - densities[1])) <= 1e-8
    assert np.max(np.abs(densities[1] - densities[2])) <= 1e-8


# ---------------------------------------------------------------------------
# mixtures of transforms
# ---------------------------------------------------------------------------

def test_mixture_bias_single_component(uniform_sym):
    spec = x_plus_spec(0.0)
    direct = bf.bias(uniform_sym, spec)
    mixed = bf.mixture_bias([uniform_sym], [1.0], spec)
    assert mixed.alpha == pytest.approx(direct.alpha, rel=1e-12)
    ts = np.linspace(-0.5, 1.0, 31)
    assert np.allclose(mixed.density(ts), direct.density(ts), atol=1e-9)


def test_mixture_bias_weights():
    spec = bf.zero_bias_spec()
    mixed = bf.mixture_bias([bf.uniform(0, 1), bf.uniform(1, 2)], [0.5, 0.5], spec)
    assert mixed.alpha == pytest.approx(0.5 * (1 / 3) + 0.5 * (7 / 3), rel=1e-10)
    assert mixed.recipe.weights[0] == pytest.approx(1 / 8, rel=1e-9)
    assert mixed.recipe.weights[1] == pytest.approx(7 / 8, rel=1e-9)
    # equal per-component normalizers give uniform index weights
    even = bf.mixture_bias([bf.uniform(-1, 1), bf.uniform(-1, 1)], [0.5, 0.5], spec)
    assert even.recipe.weights == pytest.approx((0.5, 0.5))


def test_mixture_bias_equals_bias_of_mixture():
    spec = bf.zero_bias_spec()
    comps = [bf.uniform(0, 1), bf.uniform(1, 2)]
    via_parts = bf.mixture_bias(comps, [0.5, 0.5], spec)
    via_mixture = bf.bias(bf.make_mixture(comps, [0.5, 0.5]), spec)
    assert via_parts.alpha == pytest.approx(via_mixture.alpha, rel=1e-10)
    ts = np.linspace(0.05, 1.95, 41)
    assert np.max(np.abs(np.asarray(via_parts.density(ts))
                         - np.asarray(via_mixture.density(ts)))) <= 1e-8


def test_mixture_bias_allows_zero_alpha_components():
    spec = bf.zero_bias_spec()
    dead = bf.dirac(0.0)  # zero normalizer under the zero-node weight
    mixed = bf.mixture_bias([dead, bf.uniform(0, 1)], [0.5, 0.5], spec)
    assert mixed.recipe.weights == (1.0,)
    with pytest.raises(bf.DegenerateAlpha):
        bf.mixture_bias([dead], [1.0], spec)


# ---------------------------------------------------------------------------
# normalization and sampler agreement for the worked one-node laws
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("node", [-1.0, 0.0])
def test_one_node_law_normalization(uniform_sym, node):
    t = bf.bias(uniform_sym, x_plus_spec(node))
    total = quad(lambda x: float(t.density(x)), -1, 1, points=[0], limit=200)[0]
    assert total == pytest.approx(1.0, abs=1e-6)


def test_one_node_sampler_ks(uniform_sym):
    t = bf.bias(uniform_sym, x_plus_spec(-1.0))
    n = 30_000
    draws = t.sample(n, bf.RandomSource(12))
    assert bf.ks_statistic(draws, bf.numeric_cdf(t.law)) < bf.ks_critical(n, 0.01)


def test_three_node_density_near_nodes():
    # evaluation points adjacent to nodes once made the lifted integral's
    # decaying-tail form nearly singular; the density must stay finite,
    # nonnegative and correctly normalized there
    U = bf.uniform(-1.5, 1.5)
    nodes = (-0.8, 0.1, 0.9)

    def B(x):
        arr = np.asarray(x, float)
        out = np.ones_like(arr)
        for xj in nodes:
            out = out * (arr - xj)
        return out

    t = bf.bias(U, SignChangeSpec(B, NodeSet(nodes)))
    probes = [x + s for x in nodes for s in (-1e-3, 0.0, 1e-3)]
    vals = np.asarray(t.density(np.array(probes)))
    assert np.all(np.isfinite(vals)) and np.all(vals >= 0)
    xs = np.linspace(t.law.lo, t.law.hi, 20001)
    total = np.trapezoid(np.asarray(t.density(xs)), xs)
    assert total == pytest.approx(1.0, abs=1e-6)
    n = 20_000
    draws = t.sample(n, bf.RandomSource(31))
    assert bf.ks_statistic(draws, bf.numeric_cdf(t.law)) < bf.ks_critical(n, 0.01)
