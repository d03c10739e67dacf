"""Construction of sign-change biased distributions.

A biasing function B together with k declared sign-change nodes
x_1 < ... < x_k (the product prod(x - x_j) * B(x) nonnegative on the
support) induces a transformed law: tilt the input by that product to get
a seed variable Y, then shrink through independent factors U_j with
density j*u^{j-1} on (0,1),

    Z_0 = Y,   Z_j = x_j + U_j * (Z_{j-1} - x_j),

and the transform is Z_k.  Its normalizer is
alpha = E[B(X) * prod(X - x_j)] / k!, which is positive whenever the sign
pattern holds and the transform is nondegenerate.  For k >= 1 the result
always has a density: a closed form for one node, and a one-node density
lifted level by level for more.

Node choices matter: when B vanishes on an interval, different declared
nodes give genuinely different transforms, so nodes are always the
caller's explicit input and are never inferred from B.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    DegenerateAlpha,
    InputError,
    NegativeAlpha,
    NonIntegrable,
    SignViolation,
)
from .distributions import (
    DEFAULT_QUAD,
    Distribution,
    QuadratureConfig,
    RandomSource,
    TabulatedDensity,
    as_array_fn,
    integrate_fn,
    make_mixture,
    moment,
    sample,
    tilt,
    vectorize_scalar,
)
from .polynomials import NodeSet

VALIDATION_GRID = 4097
NODE_PROBE_EPS = 1e-6
SIGN_TOL = 1e-10
ALPHA_TOL = 1e-12
DENSITY_GRID = 2049
_LIFT_GRID = 8193


# ---------------------------------------------------------------------------
# sign-change specifications
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SignChangeSpec:
    """A biasing function plus its declared ordered sign-change nodes.

    Only the orientation with the bias nonnegative on the last interval is
    supported; specs of the opposite orientation are rejected rather than
    silently negated.  ``kinks`` lists non-smooth points of the bias other
    than the nodes (e.g. the origin for a positive-part bias declared at a
    different node); quadrature treats them as break points.
    """

    bias: Callable
    nodes: NodeSet = NodeSet(())
    orientation: str = "nonneg-on-last-interval"
    kinks: tuple = ()
    label: str = ""

    def __post_init__(self):
        if self.orientation != "nonneg-on-last-interval":
            raise InputError("only the 'nonneg-on-last-interval' orientation is supported")
        if not isinstance(self.nodes, NodeSet):
            object.__setattr__(self, "nodes", NodeSet(tuple(self.nodes)))
        object.__setattr__(self, "kinks", tuple(float(x) for x in self.kinks))

    @property
    def k(self) -> int:
        return len(self.nodes)

    @property
    def quad_points(self) -> tuple:
        return tuple(self.nodes) + self.kinks

    def bias_values(self, x):
        return as_array_fn(self.bias)(x)

    def node_product(self, x):
        arr = np.asarray(x, dtype=float)
        out = np.ones_like(arr, dtype=float)
        for xj in self.nodes:
            out = out * (arr - xj)
        return out

    def tilt_weight(self, x):
        """prod(x - x_j) * B(x): the nonnegative tilting weight."""
        arr = np.asarray(x, dtype=float)
        out = self.node_product(arr) * self.bias_values(arr)
        return float(out) if arr.ndim == 0 else out


def sign_spec(a: float = 0.0) -> SignChangeSpec:
    """The sign biasing function with its single change at ``a``."""
    a = float(a)
    return SignChangeSpec(lambda x: np.sign(np.asarray(x, dtype=float) - a),
                          NodeSet((a,)), kinks=(a,), label=f"sign(x-{a})")


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    worst_value: float
    worst_point: float
    n_probes: int
    tol: float


def validate_spec(spec: SignChangeSpec, probe, tol: float = SIGN_TOL,
                  cfg: QuadratureConfig = DEFAULT_QUAD) -> ValidationReport:
    """Probe prod(x - x_j) * B(x) >= -tol on atoms or a dense support grid.

    Ambiguous specs (B vanishing on whole intervals) pass for every legal
    node choice; distinct choices are distinct specs by design.
    """
    if isinstance(probe, Distribution):
        if probe.atoms is not None:
            pts = np.array([x for x, _ in probe.atoms])
        else:
            lo, hi = probe.effective_support(cfg)
            pts = np.linspace(lo, hi, VALIDATION_GRID)
    else:
        pts = np.asarray(probe, dtype=float).ravel()
    near_nodes = np.array([x + s * NODE_PROBE_EPS for x in spec.nodes for s in (-1.0, 1.0)])
    pts = np.concatenate((pts, near_nodes)) if near_nodes.size else pts
    vals = spec.tilt_weight(pts)
    worst = int(np.argmin(vals))
    return ValidationReport(passed=bool(vals[worst] >= -tol),
                            worst_value=float(vals[worst]),
                            worst_point=float(pts[worst]),
                            n_probes=int(pts.size), tol=tol)


# ---------------------------------------------------------------------------
# the normalizer
# ---------------------------------------------------------------------------

def expectation(X: Distribution, fn: Callable, cfg: QuadratureConfig = DEFAULT_QUAD,
                points: Sequence[float] = ()) -> float:
    """E[fn(X)]: exact on atoms, sample average on empirical laws,
    quadrature against the density otherwise."""
    if X.atoms is not None:
        return float(sum(m * float(fn(x)) for x, m in X.atoms))
    if X.samples is not None:
        return float(np.mean(as_array_fn(fn)(X.samples)))
    if X.density is not None:
        if isinstance(X.density, TabulatedDensity):
            return X.density.integrate_weighted(fn, X.lo, X.hi)
        dens = X.density
        return integrate_fn(lambda x: float(dens(x)) * float(fn(x)), X.lo, X.hi, cfg,
                            points=tuple(points) + X.kinks)
    if X.components is not None:
        return float(sum(w * expectation(c, fn, cfg, points)
                         for c, w in zip(X.components, X.weights)))
    raise InputError("no expectation route for this distribution")


def alpha_of(X: Distribution, spec: SignChangeSpec,
             cfg: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Normalizer alpha = E[B(X) * prod(X - x_j)] / k!.

    Raises NegativeAlpha when the sign pattern is violated in expectation
    and DegenerateAlpha when the transform would be degenerate.
    """
    a = expectation(X, spec.tilt_weight, cfg, points=spec.quad_points) / math.factorial(spec.k)
    if a < -ALPHA_TOL:
        raise NegativeAlpha(f"normalizer {a!r} < 0: sign-change spec violated")
    if abs(a) <= ALPHA_TOL:
        raise DegenerateAlpha(f"normalizer {a!r} is numerically zero")
    return float(a)


# ---------------------------------------------------------------------------
# recipes and the biased-distribution value
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BiasRecipe:
    """Construction record of a k-node transform: the tilted seed law plus
    the node shifts applied through the shrink factors."""

    source: Distribution
    spec: SignChangeSpec
    seed_law: Distribution
    alpha: float


@dataclass(frozen=True)
class MixtureRecipe:
    parts: tuple       # BiasedDistribution values (zero-weight parts omitted)
    weights: tuple


@dataclass(frozen=True)
class BiasedDistribution:
    """A transformed law together with its normalizer(s) and construction
    record.  Immutable; sampling requires a caller-owned RandomSource
    (``rng`` is just a convenience default)."""

    law: Distribution
    alpha: float
    beta: Optional[float] = None
    recipe: object = None
    rng: Optional[RandomSource] = None

    def __post_init__(self):
        if not self.alpha > 0:
            raise DegenerateAlpha("alpha must be positive")
        if self.beta is not None and not self.beta > 0:
            raise DegenerateAlpha("beta must be positive when present")

    def sample(self, n: int, rng: Optional[RandomSource] = None) -> np.ndarray:
        rs = rng or self.rng
        if rs is None:
            raise InputError("no RandomSource supplied")
        return sample(self.law, rs, n)

    def density(self, t):
        if self.law.density is None:
            raise InputError("this transform has no density (order-0 discrete case)")
        return self.law.density(t)

    def moment(self, p: int, cfg: QuadratureConfig = DEFAULT_QUAD) -> float:
        """E[Z^p] through the construction record (exact on atom seeds)."""
        return recipe_moments(self.recipe, p, cfg)[p]


def seed_moments(recipe: BiasRecipe, top: int, cfg: QuadratureConfig = DEFAULT_QUAD) -> np.ndarray:
    """Moments E[Y^p], p = 0..top, of the tilted seed variable."""
    return np.array([moment(recipe.seed_law, p, cfg) for p in range(top + 1)])


def _shrink_moments(mom: np.ndarray, nodes: Sequence[float]) -> np.ndarray:
    """Propagate moments through Z_j = x_j + U_j (Z_{j-1} - x_j) using
    independence and E[U_j^r] = j / (j + r)."""
    top = len(mom) - 1
    out = np.array(mom, dtype=float)
    for j, xj in enumerate(nodes, start=1):
        centered = np.empty(top + 1)
        for r in range(top + 1):
            centered[r] = sum(math.comb(r, s) * (-xj) ** (r - s) * out[s]
                              for s in range(r + 1))
        nxt = np.empty(top + 1)
        for p in range(top + 1):
            nxt[p] = sum(math.comb(p, r) * xj ** (p - r) * (j / (j + r)) * centered[r]
                         for r in range(p + 1))
        out = nxt
    return out


def recipe_moments(recipe, top: int, cfg: QuadratureConfig = DEFAULT_QUAD) -> np.ndarray:
    """Moments E[Z^p], p = 0..top, of a transform through its recipe.

    Dispatches on the recipe type; higher-order chains are handled by the
    chain module, which registers its hook here.
    """
    if isinstance(recipe, BiasRecipe):
        return _shrink_moments(seed_moments(recipe, top, cfg), recipe.spec.nodes)
    if isinstance(recipe, MixtureRecipe):
        total = np.zeros(top + 1)
        for part, w in zip(recipe.parts, recipe.weights):
            total += w * recipe_moments(part.recipe, top, cfg)
        return total
    handler = _RECIPE_HOOKS.get(type(recipe).__name__)
    if handler is None:
        raise InputError(f"unknown recipe type {type(recipe).__name__}")
    return handler(recipe, top, cfg)


_RECIPE_HOOKS: dict = {}


def register_recipe_moments(name: str, handler) -> None:
    _RECIPE_HOOKS[name] = handler


# ---------------------------------------------------------------------------
# densities
# ---------------------------------------------------------------------------

def density_k1(X: Distribution, spec: SignChangeSpec, t: float,
               cfg: QuadratureConfig = DEFAULT_QUAD, alpha: Optional[float] = None,
               support: Optional[tuple] = None) -> float:
    """Closed-form density of the one-node transform:

        p(t) = E[B(X) (1{x_1 <= t <= X} - 1{X < t < x_1})] / alpha,

    exact on atoms, quadrature otherwise.  ``support`` can carry a
    precomputed effective-support interval to avoid re-probing infinite
    tails on every evaluation."""
    if spec.k != 1:
        raise InputError("density_k1 needs exactly one sign-change node")
    x1 = spec.nodes[0]
    a = alpha if alpha is not None else alpha_of(X, spec, cfg)
    t = float(t)
    B = spec.bias

    pairs = X.atoms
    if pairs is None and X.samples is not None:
        pairs = [(x, 1.0 / X.samples.size) for x in X.samples]
    if pairs is not None:
        acc = 0.0
        for x, m in pairs:
            if x1 <= t <= x:
                acc += m * float(B(x))
            elif x < t < x1:
                acc -= m * float(B(x))
        return acc / a

    if X.density is not None:
        if isinstance(X.density, TabulatedDensity):
            if t >= x1:
                return X.density.integrate_weighted(B, t, np.inf) / a
            return -X.density.integrate_weighted(B, -np.inf, t) / a
        lo_x, hi_x = support if support is not None else X.effective_support(cfg)
        dens = X.density
        kernel = lambda x: float(B(x)) * float(dens(x))
        pts = X.kinks + spec.quad_points
        if t >= x1:
            if t >= hi_x:
                return 0.0
            return integrate_fn(kernel, max(t, lo_x), hi_x, cfg, points=pts) / a
        if t <= lo_x:
            return 0.0
        return -integrate_fn(kernel, lo_x, min(t, hi_x), cfg, points=pts) / a

    raise InputError("one-node density needs atoms or a density on the input law")


def lift_density(inner_density: Callable, node: float, level: int, t: float,
                 cfg: QuadratureConfig = DEFAULT_QUAD,
                 inner_support: Optional[tuple] = None) -> float:
    """One level of the density recursion: the law with ``level`` nodes has

        p(t) = level * ∫_0^1 inner(node + (t - node)/u) u^{level-2} du.

    Away from the node the substitution s = (t - node)/u gives a decaying
    integrand in the inner variable; close to the node that form is nearly
    singular, so the original bounded-integrand form is evaluated on a fine
    grid instead."""
    if level < 2:
        raise InputError("lift_density applies from level 2 upward")
    node, t = float(node), float(t)
    d = t - node
    inner = inner_density
    if d == 0.0:
        return level / (level - 1.0) * float(inner(node))

    def original_form():
        us = np.linspace(1e-6, 1.0, _LIFT_GRID)
        vals = as_array_fn(inner)(node + d / us) * us ** (level - 2)
        return level * float(np.trapezoid(vals, us))

    scale = level * abs(d) ** (level - 1)

    if isinstance(inner, TabulatedDensity):
        span = float(inner.xs[-1] - inner.xs[0])
        if abs(d) < 1e-2 * max(span, 1e-12):
            return original_form()
        weight = lambda u: np.abs(np.asarray(u, dtype=float) - node) ** (-level)
        if d > 0:
            return scale * inner.integrate_weighted(weight, t, np.inf)
        return scale * inner.integrate_weighted(weight, -np.inf, t)

    if inner_support is not None:
        lo_i, hi_i = float(inner_support[0]), float(inner_support[1])
        if (d > 0 and t > hi_i) or (d < 0 and t < lo_i):
            return 0.0
        kernel = lambda u: float(inner(u)) * abs(u - node) ** (-level)
        try:
            if d > 0:
                return scale * integrate_fn(kernel, t, hi_i, cfg)
            return scale * integrate_fn(kernel, lo_i, t, cfg)
        except NonIntegrable:
            return original_form()

    return original_form()


def _chain_density_builder(X: Distribution, spec: SignChangeSpec, alpha: float,
                           cfg: QuadratureConfig):
    """Deferred construction of the k >= 2 density: reduce to the one-node
    transform of the residual bias, then lift one node per level, caching
    every level on a grid."""
    nodes = tuple(spec.nodes)

    def build() -> TabulatedDensity:
        lo, hi = X.effective_support(cfg)
        lo = min(lo, nodes[0])
        hi = max(hi, nodes[-1])
        B = spec.bias

        def residual_bias(x, _rest=nodes[1:]):
            arr = np.asarray(x, dtype=float)
            out = as_array_fn(B)(arr)
            for xj in _rest:
                out = out * (arr - xj)
            return float(out) if arr.ndim == 0 else out

        spec1 = SignChangeSpec(residual_bias, NodeSet(nodes[:1]), kinks=spec.kinks + nodes[1:])
        a1 = alpha * math.factorial(len(nodes))  # one-node normalizer of the reduction
        x_support = X.effective_support(cfg)
        level_fn = vectorize_scalar(
            lambda s: density_k1(X, spec1, s, cfg, alpha=a1, support=x_support))
        table = TabulatedDensity.from_callable(level_fn, lo, hi, DENSITY_GRID,
                                               knots=nodes + X.kinks)
        for lvl in range(2, len(nodes) + 1):
            node = nodes[lvl - 1]
            prev = table
            level_fn = vectorize_scalar(
                lambda s, _p=prev, _n=node, _l=lvl: lift_density(
                    _p, _n, _l, s, cfg, inner_support=(lo, hi)))
            table = TabulatedDensity.from_callable(level_fn, lo, hi, DENSITY_GRID,
                                                   knots=nodes)
        return table

    return build


class _Deferred:
    """Memoized thunk."""

    def __init__(self, builder):
        self._builder = builder
        self._value = None

    def get(self):
        if self._value is None:
            self._value = self._builder()
        return self._value


# ---------------------------------------------------------------------------
# the transform itself
# ---------------------------------------------------------------------------

def bias(X: Distribution, spec: SignChangeSpec, rng: Optional[RandomSource] = None,
         cfg: QuadratureConfig = DEFAULT_QUAD, check: bool = True) -> BiasedDistribution:
    """Construct the sign-change biased law of X under ``spec``.

    With zero nodes the result is simply the tilt of X by B.  With k >= 1
    nodes the sampler implements the seed-and-shrink construction and the
    law carries a density evaluator (closed form for one node, the lifted
    recursion otherwise)."""
    if check:
        report = validate_spec(spec, X, cfg=cfg)
        if not report.passed:
            raise SignViolation(
                f"sign pattern fails at x={report.worst_point!r} "
                f"(value {report.worst_value:.3e})")
    alpha = alpha_of(X, spec, cfg)
    seed_law = tilt(X, spec.tilt_weight, cfg, weight_kinks=spec.quad_points)
    recipe = BiasRecipe(source=X, spec=spec, seed_law=seed_law, alpha=alpha)
    k = spec.k

    if k == 0:
        law = replace(seed_law, kind="constructed")
        return BiasedDistribution(law, alpha, None, recipe, rng)

    nodes = tuple(spec.nodes)

    def draw(rs: RandomSource, n: int):
        z = sample(seed_law, rs, n)
        for j, xj in enumerate(nodes, start=1):
            u = rs.uniform(n) ** (1.0 / j)
            z = xj + u * (z - xj)
        return z

    lo_x, hi_x = X.effective_support(cfg)
    lo = min(lo_x, nodes[0])
    hi = max(hi_x, nodes[-1])

    if k == 1:
        dens = vectorize_scalar(
            lambda t: max(0.0, density_k1(X, spec, t, cfg, alpha=alpha,
                                          support=(lo_x, hi_x))))
        cdf = None
    else:
        thunk = _Deferred(_chain_density_builder(X, spec, alpha, cfg))

        def dens(x, _t=thunk):
            return _t.get().pdf(x)

        def cdf(x, _t=thunk):
            return _t.get().cdf(x)

    law_kinks = tuple(sorted({*nodes, *spec.kinks,
                              *(kk for kk in X.kinks if lo <= kk <= hi)}))
    law = Distribution(kind="constructed", lo=lo, hi=hi, density=dens, cdf=cdf,
                       sampler=draw, kinks=law_kinks,
                       label=f"bias({X.label or X.kind}; k={k})")
    return BiasedDistribution(law, alpha, None, recipe, rng)


def mixture_bias(components: Sequence[Distribution], gamma: Sequence[float],
                 spec: SignChangeSpec, rng: Optional[RandomSource] = None,
                 cfg: QuadratureConfig = DEFAULT_QUAD) -> BiasedDistribution:
    """Transform of a mixture: per-component transforms reweighted by
    alpha_s * gamma_s / alpha.  Components with vanishing normalizer are
    allowed and receive zero weight."""
    comps = list(components)
    gs = np.asarray(list(gamma), dtype=float)
    if len(comps) != gs.size or len(comps) == 0:
        raise InputError("components and gamma must have equal, positive length")
    if np.any(gs < 0) or abs(gs.sum() - 1.0) > 1e-12:
        raise InputError("gamma must be a probability vector")

    alphas = []
    for comp in comps:
        try:
            alphas.append(alpha_of(comp, spec, cfg))
        except DegenerateAlpha:
            alphas.append(0.0)
    total = float(np.dot(alphas, gs))
    if total <= ALPHA_TOL:
        raise DegenerateAlpha("every component has a vanishing normalizer")

    parts = []
    weights = []
    for comp, a_s, g_s in zip(comps, alphas, gs):
        w = a_s * g_s / total
        if w > 0.0:
            parts.append(bias(comp, spec, cfg=cfg))
            weights.append(w)
    law = make_mixture([p.law for p in parts], weights)
    law = replace(law, kind="constructed")
    return BiasedDistribution(law, total, None,
                              MixtureRecipe(tuple(parts), tuple(weights)), rng)
