"""Linear-operator transforms of order two and higher, coupling-based
Wasserstein bound arithmetic, and fixed-point checks.

An operator  L f = f^{(m)} - sum_j B_j f^{(j)}  with admissible coefficient
sign patterns induces a transform X*: mix the order-lifted transforms of X
under each B_j with weights proportional to their normalizers.  A law Z is
a fixed point of the induced transform exactly when its density solves the
corresponding differential equation (first order: log-derivative equals
-B/alpha), which is what ``fixed_point_check`` probes numerically.

The bound constants c_i come from operator-specific smoothness estimates
for solutions of the associated equation; they are caller inputs here and
are never computed by this package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    AllBetaZero,
    DegenerateAlpha,
    DegenerateBeta,
    InputError,
    NegativeWeight,
    ParityMismatch,
    ZeroNormalizer,
)
from .distributions import (
    DEFAULT_QUAD,
    Distribution,
    QuadratureConfig,
    RandomSource,
    as_array_fn,
    integrate_fn,
    make_mixture,
    sample,
    tilt,
    vectorize_scalar,
)
from .transform import (
    ALPHA_TOL,
    BiasedDistribution,
    MixtureRecipe,
    SignChangeSpec,
    alpha_of,
    bias,
    expectation,
)
from .higher import bias_to_order, second_difference_transform

_B0_GRID = 4097


# ---------------------------------------------------------------------------
# operator description
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SteinOperator:
    """L f = f^{(m)} - sum_{j<m} B_j f^{(j)} with each coefficient wrapped in
    a sign-change spec whose node count matches the parity of m - j."""

    order: int
    coeffs: tuple  # SignChangeSpec for B_0 ... B_{m-1}
    location: float = 0.0

    def __post_init__(self):
        if self.order < 1:
            raise InputError("operator order must be >= 1")
        if len(self.coeffs) != self.order:
            raise InputError(f"need {self.order} coefficient specs, got {len(self.coeffs)}")
        for j, spec in enumerate(self.coeffs):
            kj = spec.k
            if kj > self.order - j:
                raise InputError(f"coefficient {j} has too many sign changes")
            if (self.order - j - kj) % 2 != 0:
                raise ParityMismatch(
                    f"coefficient {j}: {kj} sign changes vs derivative order {self.order - j}")


# ---------------------------------------------------------------------------
# second order
# ---------------------------------------------------------------------------

def _check_nonnegative(X: Distribution, B0: Callable, cfg: QuadratureConfig):
    if X.atoms is not None:
        pts = np.array([x for x, _ in X.atoms])
    else:
        lo, hi = X.effective_support(cfg)
        pts = np.linspace(lo, hi, _B0_GRID)
    vals = as_array_fn(B0)(pts)
    worst = int(np.argmin(vals))
    if vals[worst] < -1e-12:
        raise NegativeWeight(f"order-0 coefficient is negative at x={pts[worst]!r}")


def second_order_transform(X: Distribution, B0: Callable, B1: SignChangeSpec,
                           rng: Optional[RandomSource] = None,
                           cfg: QuadratureConfig = DEFAULT_QUAD,
                           B0_kinks: Sequence[float] = ()) -> BiasedDistribution:
    """Transform X* for the operator f'' - B1 f' - B0 f with B0 >= 0 and B1
    sign-compatible at its single node a:

        alpha E[f''(X*)] = E[B0(X)(f(X) - f(a) - f'(a)(X-a))
                            + B1(X)(f'(X) - f'(a))].

    X* mixes the second-difference transform of the B0-tilted law with the
    one-node B1 transform, weighted by alpha_1, alpha_2."""
    if B1.k != 1:
        raise InputError("the order-1 coefficient needs exactly one sign-change node")
    a = float(B1.nodes[0])
    _check_nonnegative(X, B0, cfg)
    pts = (a,) + tuple(B0_kinks)

    alpha1 = 0.5 * expectation(X, lambda x: float(B0(x)) * (float(x) - a) ** 2, cfg,
                               points=pts)
    try:
        alpha2 = alpha_of(X, B1, cfg)
    except DegenerateAlpha:
        alpha2 = 0.0
    alpha = alpha1 + alpha2
    if not alpha > ALPHA_TOL:
        raise DegenerateAlpha("alpha_1 + alpha_2 is numerically zero")

    parts = []
    weights = []
    if alpha1 > ALPHA_TOL:
        try:
            tilted = tilt(X, B0, cfg, weight_kinks=B0_kinks)
        except ZeroNormalizer as exc:
            # B0 >= 0 with zero mean forces alpha_1 = 0; reaching here means the
            # numbers disagree, and guessing a fallback law would be unsound.
            raise DegenerateAlpha(
                "order-0 coefficient has zero expectation but a positive "
                f"second-moment normalizer ({alpha1!r})") from exc
        parts.append(second_difference_transform(tilted, a, cfg=cfg))
        weights.append(alpha1 / alpha)
    if alpha2 > ALPHA_TOL:
        parts.append(bias(X, B1, cfg=cfg))
        weights.append(alpha2 / alpha)

    law = make_mixture([p.law for p in parts], weights)
    x_support = X.effective_support(cfg) if X.atoms is None else None
    closed = vectorize_scalar(
        lambda t: second_order_density(X, B0, B1.bias, a, t, cfg, alpha=alpha,
                                       kinks=tuple(B0_kinks) + B1.quad_points,
                                       support=x_support))
    law = replace(law, kind="constructed", density=closed,
                  label=f"second-order({X.label or X.kind}; a={a})")
    return BiasedDistribution(law, alpha=alpha, beta=None,
                              recipe=MixtureRecipe(tuple(parts), tuple(weights)), rng=rng)


def second_order_density(X: Distribution, B0: Callable, B1: Callable, a: float, t: float,
                         cfg: QuadratureConfig = DEFAULT_QUAD,
                         alpha: Optional[float] = None,
                         kinks: Sequence[float] = (),
                         support: Optional[tuple] = None) -> float:
    """Density of the second-order transform:

        q(t) = E[(B1(X) + B0(X)(X - t)) (1{a <= t <= X} - 1{X < t < a})] / alpha,

    exact on atoms, quadrature otherwise."""
    a, t = float(a), float(t)
    if alpha is None:
        pts = (a,) + tuple(kinks)
        alpha1 = 0.5 * expectation(X, lambda x: float(B0(x)) * (float(x) - a) ** 2, cfg,
                                   points=pts)
        alpha2 = expectation(X, lambda x: float(B1(x)) * (float(x) - a), cfg, points=pts)
        alpha = alpha1 + alpha2
        if not alpha > ALPHA_TOL:
            raise DegenerateAlpha("alpha_1 + alpha_2 is numerically zero")

    def load(x):
        return float(B1(x)) + float(B0(x)) * (float(x) - t)

    pairs = X.atoms
    if pairs is None and X.samples is not None:
        pairs = [(x, 1.0 / X.samples.size) for x in X.samples]
    if pairs is not None:
        acc = 0.0
        for x, m in pairs:
            if a <= t <= x:
                acc += m * load(x)
            elif x < t < a:
                acc -= m * load(x)
        return acc / alpha

    if X.density is not None:
        lo_x, hi_x = support if support is not None else X.effective_support(cfg)
        dens = X.density
        kernel = lambda x: load(x) * float(dens(x))
        pts = X.kinks + (a,) + tuple(kinks)
        if t >= a:
            if t >= hi_x:
                return 0.0
            return integrate_fn(kernel, max(t, lo_x), hi_x, cfg, points=pts) / alpha
        if t <= lo_x:
            return 0.0
        return -integrate_fn(kernel, lo_x, min(t, hi_x), cfg, points=pts) / alpha

    raise InputError("second-order density needs atoms or a density on the input law")


# ---------------------------------------------------------------------------
# general order
# ---------------------------------------------------------------------------

def higher_order_transform(X: Distribution, op: SteinOperator,
                           rng: Optional[RandomSource] = None,
                           cfg: QuadratureConfig = DEFAULT_QUAD) -> BiasedDistribution:
    """Transform X* for a general order-m operator: the order-lifted
    transforms under each coefficient, mixed with weights proportional to
    their normalizers beta_j.  Coefficients with beta_j = 0 contribute a
    zero-weight placeholder."""
    from .higher import beta_of

    m = op.order
    betas = []
    for j, spec in enumerate(op.coeffs):
        try:
            betas.append(beta_of(X, spec, m - j, cfg))
        except (DegenerateBeta, DegenerateAlpha, ZeroNormalizer):
            betas.append(0.0)
    total = float(sum(betas))
    if not total > ALPHA_TOL:
        raise AllBetaZero("every coefficient normalizer vanishes")

    parts = []
    weights = []
    for j, (spec, bj) in enumerate(zip(op.coeffs, betas)):
        if bj > ALPHA_TOL:
            parts.append(bias_to_order(X, spec, m - j, cfg=cfg))
            weights.append(bj / total)
    law = make_mixture([p.law for p in parts], weights)
    law = replace(law, kind="constructed", label=f"operator-transform(order={m})")
    return BiasedDistribution(law, alpha=total, beta=total,
                              recipe=MixtureRecipe(tuple(parts), tuple(weights)), rng=rng)


# ---------------------------------------------------------------------------
# distance-bound arithmetic
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DistanceBound:
    """Ingredients and result of a coupling-based Wasserstein bound; the
    bound is the exact stated combination of its ingredients."""

    order: int
    constants: tuple
    coupling_gap: float
    alpha_dev: float
    residuals: tuple
    bound: float
    f_at_node: Optional[float] = None


def _as_constants(c, names):
    if isinstance(c, dict):
        vals = tuple(float(c[n]) for n in names)
    else:
        vals = tuple(float(v) for v in c)
    if len(vals) != len(names):
        raise InputError(f"need constants {names}")
    if any(not math.isfinite(v) or v < 0 for v in vals):
        raise InputError("bound constants must be finite and nonnegative")
    return vals


def first_order_bound(coupling_gap: float, alpha: float, b_mean: float, c,
                      f_at_node: Optional[float] = None) -> DistanceBound:
    """c2 E|X - X'| + c1 |1 - alpha| + c0 |E B(X)|; when the solution value
    at the node is known, |f(x_1)| replaces c0."""
    c0, c1, c2 = _as_constants(c, ("c0", "c1", "c2"))
    gap = float(coupling_gap)
    dev = abs(1.0 - float(alpha))
    res = abs(float(b_mean))
    third = abs(float(f_at_node)) if f_at_node is not None else c0
    bound = c2 * gap + c1 * dev + third * res
    return DistanceBound(order=1, constants=(c0, c1, c2), coupling_gap=gap,
                         alpha_dev=dev, residuals=(res,), bound=float(bound),
                         f_at_node=None if f_at_node is None else float(f_at_node))


def second_order_bound(coupling_gap: float, alpha: float, residuals, c) -> DistanceBound:
    """c3 E|X - X*| + c2 |1 - alpha| + c1 |E[B0(X)(X-a) + B1(X)]| + c0 |E B0(X)|."""
    c0, c1, c2, c3 = _as_constants(c, ("c0", "c1", "c2", "c3"))
    r1, r0 = (abs(float(residuals[0])), abs(float(residuals[1])))
    gap = float(coupling_gap)
    dev = abs(1.0 - float(alpha))
    bound = c3 * gap + c2 * dev + c1 * r1 + c0 * r0
    return DistanceBound(order=2, constants=(c0, c1, c2, c3), coupling_gap=gap,
                         alpha_dev=dev, residuals=(r1, r0), bound=float(bound))


def first_order_coupling_stats(X: Distribution, spec: SignChangeSpec, n: int, seed: int,
                               coupling: str = "independent",
                               cfg: QuadratureConfig = DEFAULT_QUAD) -> dict:
    """Monte Carlo estimates of the first-order bound ingredients.

    coupling="self" identifies X' with X (valid exactly at a fixed point of
    the transform, where the coupling gap vanishes); "independent" draws X'
    from the freshly built transform on a derived stream."""
    if coupling not in ("self", "independent"):
        raise InputError("coupling must be 'self' or 'independent'")
    rs = RandomSource(seed)
    xs = sample(X, rs, n)
    w = as_array_fn(spec.tilt_weight)(xs) / math.factorial(spec.k)
    b = as_array_fn(spec.bias)(xs)
    if coupling == "self":
        gaps = np.zeros_like(xs)
    else:
        transform = bias(X, spec, cfg=cfg)
        ys = transform.sample(n, rs.derive(1_000_003))
        gaps = np.abs(xs - ys)

    def mean_se(v):
        return float(np.mean(v)), float(np.std(v, ddof=1) / math.sqrt(len(v)))

    gap, gap_se = mean_se(gaps)
    alpha_hat, alpha_se = mean_se(w)
    b_mean, b_se = mean_se(b)
    return {"coupling": coupling, "n": int(n), "seed": int(seed),
            "coupling_gap": gap, "coupling_gap_se": gap_se,
            "alpha": alpha_hat, "alpha_se": alpha_se,
            "b_mean": b_mean, "b_mean_se": b_se}


# ---------------------------------------------------------------------------
# fixed-point checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FixedPointReport:
    mode: str
    max_residual: float
    argmax: float
    n_probes: int


def _d1(f, t, h):
    def diff(hh):
        return (float(f(t + hh)) - float(f(t - hh))) / (2.0 * hh)

    return (4.0 * diff(h / 2) - diff(h)) / 3.0


def _d2(f, t, h):
    ft = float(f(t))

    def diff(hh):
        return (float(f(t + hh)) - 2.0 * ft + float(f(t - hh))) / hh**2

    return (4.0 * diff(h / 2) - diff(h)) / 3.0


def fixed_point_check(Z: Distribution, spec: Optional[SignChangeSpec] = None,
                      mode: str = "first-order",
                      B0: Optional[Callable] = None, B1: Optional[Callable] = None,
                      B1_deriv: Optional[Callable] = None, a: float = 0.0,
                      probes=None, h: float = 1e-4,
                      density_floor: float = 1e-6, node_margin: float = 1e-2,
                      cfg: QuadratureConfig = DEFAULT_QUAD) -> FixedPointReport:
    """Residual of the fixed-point differential equation on a probe grid.

    First order: a fixed point's density satisfies p'/p = -B/alpha, so the
    report carries max |p'(t)/p(t) + B(t)/alpha| over probes with
    p(t) > density_floor.  Second order: residual of
    alpha p'' = (B0 - B1') p - B1 p'.  Node neighborhoods are excluded
    because the density may kink there."""
    if Z.density is None:
        raise InputError("fixed-point check needs a density")
    p = Z.density

    if mode == "first-order":
        if spec is None:
            raise InputError("first-order mode needs a sign-change spec")
        nodes = tuple(spec.nodes)
        alpha = alpha_of(Z, spec, cfg)
    elif mode == "second-order":
        if B0 is None or B1 is None:
            raise InputError("second-order mode needs B0 and B1")
        nodes = (float(a),)
        alpha1 = 0.5 * expectation(Z, lambda x: float(B0(x)) * (float(x) - a) ** 2, cfg,
                                   points=nodes)
        alpha2 = expectation(Z, lambda x: float(B1(x)) * (float(x) - a), cfg, points=nodes)
        alpha = alpha1 + alpha2
        if not alpha > ALPHA_TOL:
            raise DegenerateAlpha("operator normalizer is zero on the target")
        if B1_deriv is None:
            B1_deriv = lambda t, _B1=B1: _d1(_B1, t, h)
    else:
        raise InputError("mode must be 'first-order' or 'second-order'")

    if probes is None:
        lo, hi = Z.effective_support(cfg)
        probes = np.linspace(lo + 2 * node_margin, hi - 2 * node_margin, 201)
    pts = [float(t) for t in np.asarray(probes, dtype=float).ravel()
           if all(abs(t - x) >= node_margin for x in nodes)]

    worst, arg, used = 0.0, math.nan, 0
    for t in pts:
        pt = float(p(t))
        if pt <= density_floor:
            continue
        used += 1
        if mode == "first-order":
            res = abs(_d1(p, t, h) / pt + float(spec.bias(t)) / alpha)
        else:
            res = abs(alpha * _d2(p, t, h)
                      - (float(B0(t)) - float(B1_deriv(t))) * pt
                      + float(B1(t)) * _d1(p, t, h))
        if res > worst:
            worst, arg = res, t
    return FixedPointReport(mode=mode, max_residual=worst, argmax=arg, n_probes=used)
