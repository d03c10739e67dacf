"""Distribution substrate: analytic catalog, atoms, empirical samples,
tilting, mixtures, one-dimensional quadrature and the deterministic
sampling contract.

Laws are immutable ``Distribution`` values.  Samplers draw from a
caller-owned ``RandomSource``; equal seeds give identical streams, which
is what makes every experiment in this package reproducible.  Infinite
supports are integrated after truncating the tails where the integrand
falls below ``tail_eps`` times its peak (all catalog densities decay at
least exponentially, so the truncation is harmless at the configured
tolerances).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate as _sciint
from scipy.special import ndtr, ndtri

from .errors import (
    InputError,
    NegativeWeight,
    NoSampler,
    NonIntegrable,
    RejectionBudget,
    WeightMismatch,
    ZeroNormalizer,
)

ATOM_MASS_TOL = 1e-12
ZERO_NORMALIZER_TOL = 1e-12
NEGATIVE_WEIGHT_TOL = -1e-12
ENVELOPE_GRID = 4097
ENVELOPE_INFLATION = 1.1
REJECTION_BUDGET = 10**6
INVERSE_CDF_GRID = 8193
_PROBE_GRID = 4097
_MASK64 = (1 << 64) - 1


# ---------------------------------------------------------------------------
# random source
# ---------------------------------------------------------------------------

@dataclass
class RandomSource:
    """Seeded random stream.  Single-owner: never share one source across
    concurrent tasks; derive independent sources instead."""

    seed: int
    position: int = 0

    def __post_init__(self):
        self._gen = np.random.default_rng(int(self.seed) & _MASK64)

    def uniform(self, n: int) -> np.ndarray:
        """n i.i.d. U(0,1) draws, advancing the stream."""
        self.position += int(n)
        return self._gen.random(int(n))

    def derive(self, offset: int) -> "RandomSource":
        """Independent source with a seed at a fixed offset from this one."""
        return RandomSource((int(self.seed) + int(offset)) & _MASK64)


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = 1e-9
    rel_tol: float = 1e-9
    max_subdivisions: int = 200
    tail_eps: float = 1e-16  # truncate tails where |integrand| < tail_eps * peak

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise InputError("quadrature tolerances must be positive")
        if self.max_subdivisions < 10:
            raise InputError("max_subdivisions too small")


DEFAULT_QUAD = QuadratureConfig()


def as_array_fn(f: Callable) -> Callable:
    """Wrap ``f`` so it maps ndarray -> ndarray of the same shape, falling
    back to elementwise evaluation for scalar-only callables."""

    def g(x):
        arr = np.asarray(x, dtype=float)
        try:
            y = np.asarray(f(arr), dtype=float)
            if y.shape == arr.shape:
                return y
        except (TypeError, ValueError, ZeroDivisionError, IndexError):
            pass
        flat = np.array([float(f(float(v))) for v in arr.ravel()])
        return flat.reshape(arr.shape)

    return g


def vectorize_scalar(f: Callable[[float], float]) -> Callable:
    """Lift a scalar function to accept arrays (loop-based; the scalar
    path is the hot one for quadrature kernels)."""

    def g(x):
        arr = np.asarray(x, dtype=float)
        if arr.ndim == 0:
            return float(f(float(arr)))
        return np.array([f(float(v)) for v in arr.ravel()]).reshape(arr.shape)

    return g


def _effective_bounds(f, lo, hi, eps):
    """Finite integration window for a possibly infinite interval.

    Probes the integrand on a tangent-spaced grid and keeps the hull of
    points where it exceeds eps * peak.  Raises NonIntegrable when the
    integrand has not decayed by |x| ~ 1e6.
    """
    if math.isfinite(lo) and math.isfinite(hi):
        return float(lo), float(hi)
    half = math.pi / 2 - 1e-6
    xs = np.tan(np.linspace(-half, half, _PROBE_GRID))
    xs = xs[(xs >= lo) & (xs <= hi)]
    if math.isfinite(lo):
        xs = np.concatenate(([lo], xs))
    if math.isfinite(hi):
        xs = np.concatenate((xs, [hi]))
    vals = np.abs(as_array_fn(f)(xs))
    vals[~np.isfinite(vals)] = 0.0
    peak = vals.max()
    if peak <= 0.0:
        return 0.0, 0.0
    mask = vals >= eps * peak
    idx = np.nonzero(mask)[0]
    first, last = idx[0], idx[-1]
    if (first == 0 and not math.isfinite(lo)) or (last == len(xs) - 1 and not math.isfinite(hi)):
        raise NonIntegrable("integrand tail has not decayed below the truncation threshold")
    a = xs[max(first - 1, 0)]
    b = xs[min(last + 1, len(xs) - 1)]
    return float(a), float(b)


def integrate_fn(f, lo, hi, cfg: QuadratureConfig = DEFAULT_QUAD, points: Sequence[float] = ()):
    """Adaptive quadrature of ``f`` on [lo, hi]; infinite endpoints are
    truncated by the tail rule.  ``points`` are known kink locations."""
    lo_e, hi_e = _effective_bounds(f, lo, hi, cfg.tail_eps)
    if not lo_e < hi_e:
        return 0.0
    pts = sorted({float(p) for p in points if lo_e < float(p) < hi_e})
    out = _sciint.quad(
        f, lo_e, hi_e,
        epsabs=cfg.abs_tol, epsrel=cfg.rel_tol,
        limit=cfg.max_subdivisions, points=pts or None,
        full_output=1,
    )
    val, abserr = out[0], out[1]
    if len(out) >= 4 and abserr > max(100 * cfg.abs_tol, 1e-6 * max(1.0, abs(val))):
        raise NonIntegrable(f"quadrature did not converge (err={abserr:.3g}): {out[3]}")
    return float(val)


# ---------------------------------------------------------------------------
# tabulated densities (grid caches, numeric CDFs, inverse-CDF sampling)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TabulatedDensity:
    """Density sampled on a fixed grid with a trapezoid CDF.

    Linear interpolation between grid points; zero outside.  ``ys`` is
    rescaled so that the tabulated mass is exactly one (the raw mass is
    kept for diagnostics).
    """

    xs: np.ndarray
    ys: np.ndarray
    cum: np.ndarray
    raw_mass: float

    @staticmethod
    def from_callable(f, lo, hi, n=INVERSE_CDF_GRID, knots=()):
        xs = np.linspace(float(lo), float(hi), int(n))
        extra = [float(k) for k in knots if lo < float(k) < hi]
        if extra:
            xs = np.unique(np.concatenate((xs, np.asarray(extra))))
        ys = np.clip(as_array_fn(f)(xs), 0.0, None)
        cum = np.concatenate(([0.0], np.cumsum(0.5 * (ys[1:] + ys[:-1]) * np.diff(xs))))
        mass = float(cum[-1])
        if mass <= ZERO_NORMALIZER_TOL:
            raise ZeroNormalizer("tabulated density has zero mass")
        ys = ys / mass
        cum = np.maximum.accumulate(cum / mass)
        cum[-1] = 1.0
        return TabulatedDensity(xs, ys, cum, mass)

    def __call__(self, x):
        return self.pdf(x)

    def pdf(self, x):
        arr = np.asarray(x, dtype=float)
        out = np.interp(arr, self.xs, self.ys, left=0.0, right=0.0)
        return float(out) if arr.ndim == 0 else out

    def cdf(self, x):
        arr = np.asarray(x, dtype=float)
        out = np.interp(arr, self.xs, self.cum, left=0.0, right=1.0)
        return float(out) if arr.ndim == 0 else out

    def ppf(self, u):
        return np.interp(u, self.cum, self.xs)

    def integrate_weighted(self, w, a, b):
        """∫_a^b w(x) * pdf(x) dx by per-segment Simpson (exact for the
        linear density times a quadratic weight).

        The weight is evaluated a hair inside the outer endpoints so that
        integration up to a jump point of w (for example a sign node)
        picks up the one-sided limit rather than the jump value."""
        a = max(float(a), float(self.xs[0]))
        b = min(float(b), float(self.xs[-1]))
        if not a < b:
            return 0.0
        cuts = np.unique(np.concatenate((self.xs[(self.xs > a) & (self.xs < b)], [a, b])))
        left, right = cuts[:-1], cuts[1:]
        mid = 0.5 * (left + right)
        wv = as_array_fn(w)
        nudge = 1e-9 * (b - a)
        wl_pts = left.copy()
        wl_pts[0] = min(wl_pts[0] + nudge, mid[0])
        wr_pts = right.copy()
        wr_pts[-1] = max(wr_pts[-1] - nudge, mid[-1])
        fl = self.pdf(left) * wv(wl_pts)
        fm = self.pdf(mid) * wv(mid)
        fr = self.pdf(right) * wv(wr_pts)
        return float(np.sum((right - left) / 6.0 * (fl + 4.0 * fm + fr)))


# ---------------------------------------------------------------------------
# the Distribution value
# ---------------------------------------------------------------------------

_KINDS = ("analytic-catalog", "discrete-atoms", "empirical-sample",
          "tilted", "mixture", "constructed")


@dataclass(frozen=True)
class Distribution:
    """Immutable law: optional density/CDF, optional atoms, optional sampler.

    ``kinks`` lists known non-smooth points of the density (support edges,
    mixture junctions, transform nodes); quadrature passes them as break
    points.
    """

    kind: str
    lo: float
    hi: float
    density: Optional[Callable] = None
    cdf: Optional[Callable] = None
    atoms: Optional[tuple] = None
    sampler: Optional[Callable] = None        # (RandomSource, n) -> ndarray
    samples: Optional[np.ndarray] = None      # empirical kind only
    components: Optional[tuple] = None        # mixture kind
    weights: Optional[tuple] = None
    kinks: tuple = ()
    label: str = ""

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise InputError(f"unknown distribution kind {self.kind!r}")
        if not self.lo <= self.hi:
            raise InputError("support must satisfy lo <= hi")
        if self.atoms is not None:
            masses = np.array([m for _, m in self.atoms], dtype=float)
            if np.any(masses <= 0):
                raise InputError("atom masses must be positive")
            if abs(masses.sum() - 1.0) > ATOM_MASS_TOL:
                raise InputError(f"atom masses sum to {masses.sum()!r}, not 1")

    @property
    def moment_oracle(self) -> Callable[[int], float]:
        return lambda n: moment(self, n)

    def effective_support(self, cfg: QuadratureConfig = DEFAULT_QUAD):
        """Finite interval carrying all but a ``tail_eps`` sliver of mass."""
        if math.isfinite(self.lo) and math.isfinite(self.hi):
            return float(self.lo), float(self.hi)
        if self.atoms is not None:
            xs = [x for x, _ in self.atoms]
            return min(xs), max(xs)
        if self.density is None:
            raise InputError("cannot bound an infinite support without a density")
        return _effective_bounds(self.density, self.lo, self.hi, cfg.tail_eps)


def _sorted_atoms(pairs):
    merged = {}
    for x, m in pairs:
        merged[float(x)] = merged.get(float(x), 0.0) + float(m)
    return tuple(sorted((x, m) for x, m in merged.items() if m > 0.0))


def _atom_sampler(atoms):
    xs = np.array([x for x, _ in atoms])
    cum = np.cumsum([m for _, m in atoms])
    cum[-1] = 1.0

    def draw(rs: RandomSource, n: int):
        return xs[np.searchsorted(cum, rs.uniform(n), side="right")]

    return draw


def from_atoms(pairs, label="") -> Distribution:
    """Discrete law from (location, mass) pairs; duplicates are merged."""
    atoms = _sorted_atoms(pairs)
    if not atoms:
        raise InputError("no atoms with positive mass")
    masses = np.array([m for _, m in atoms])
    if abs(masses.sum() - 1.0) > ATOM_MASS_TOL:
        raise WeightMismatch(f"atom masses sum to {masses.sum()!r}")
    xs = [x for x, _ in atoms]
    return Distribution(kind="discrete-atoms", lo=min(xs), hi=max(xs),
                        atoms=atoms, sampler=_atom_sampler(atoms), label=label)


def dirac(x: float) -> Distribution:
    return from_atoms(((float(x), 1.0),), label=f"dirac({x})")


def from_samples(values, label="empirical") -> Distribution:
    """Empirical law: moments are sample averages, sampling is bootstrap,
    and no density is ever exposed."""
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise InputError("empirical sample is empty")
    arr = arr.copy()
    arr.setflags(write=False)

    def draw(rs: RandomSource, n: int):
        idx = np.minimum((rs.uniform(n) * arr.size).astype(int), arr.size - 1)
        return arr[idx]

    return Distribution(kind="empirical-sample", lo=float(arr.min()), hi=float(arr.max()),
                        sampler=draw, samples=arr, label=label)


def uniform(lo: float, hi: float) -> Distribution:
    if not lo < hi:
        raise InputError("uniform needs lo < hi")
    lo, hi = float(lo), float(hi)
    h = 1.0 / (hi - lo)

    def dens(x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= lo) & (x <= hi), h, 0.0)

    def cdf(x):
        x = np.asarray(x, dtype=float)
        return np.clip((x - lo) * h, 0.0, 1.0)

    return Distribution(kind="analytic-catalog", lo=lo, hi=hi, density=dens, cdf=cdf,
                        sampler=lambda rs, n: lo + (hi - lo) * rs.uniform(n),
                        kinks=(lo, hi), label=f"uniform[{lo},{hi}]")


def exponential(rate: float = 1.0) -> Distribution:
    if rate <= 0:
        raise InputError("rate must be positive")
    lam = float(rate)

    def dens(x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, lam * np.exp(-lam * np.clip(x, 0, None)), 0.0)

    def cdf(x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, -np.expm1(-lam * np.clip(x, 0, None)), 0.0)

    return Distribution(kind="analytic-catalog", lo=0.0, hi=math.inf, density=dens, cdf=cdf,
                        sampler=lambda rs, n: -np.log1p(-rs.uniform(n)) / lam,
                        kinks=(0.0,), label=f"exponential({lam})")


def normal(mean: float = 0.0, std: float = 1.0) -> Distribution:
    if std <= 0:
        raise InputError("std must be positive")
    mu, sig = float(mean), float(std)
    c = 1.0 / (sig * math.sqrt(2 * math.pi))

    def dens(x):
        z = (np.asarray(x, dtype=float) - mu) / sig
        return c * np.exp(-0.5 * z * z)

    return Distribution(kind="analytic-catalog", lo=-math.inf, hi=math.inf, density=dens,
                        cdf=lambda x: ndtr((np.asarray(x, dtype=float) - mu) / sig),
                        sampler=lambda rs, n: mu + sig * ndtri(rs.uniform(n)),
                        label=f"normal({mu},{sig})")


def half_normal(sigma: float = 1.0) -> Distribution:
    """|Z| for Z ~ normal(0, sigma^2); second moment equals sigma^2."""
    if sigma <= 0:
        raise InputError("sigma must be positive")
    sig = float(sigma)
    c = 2.0 / (sig * math.sqrt(2 * math.pi))

    def dens(x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, c * np.exp(-0.5 * (x / sig) ** 2), 0.0)

    def cdf(x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, 2.0 * ndtr(np.clip(x, 0, None) / sig) - 1.0, 0.0)

    return Distribution(kind="analytic-catalog", lo=0.0, hi=math.inf, density=dens, cdf=cdf,
                        sampler=lambda rs, n: sig * ndtri(0.5 * (1.0 + rs.uniform(n))),
                        kinks=(0.0,), label=f"half-normal({sig})")


def negative_half_normal(sigma: float = 1.0) -> Distribution:
    sig = float(sigma)
    base = half_normal(sig)

    def dens(x):
        return base.density(-np.asarray(x, dtype=float))

    def cdf(x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, 2.0 * ndtr(np.clip(x, None, 0) / sig), 1.0)

    return Distribution(kind="analytic-catalog", lo=-math.inf, hi=0.0, density=dens, cdf=cdf,
                        sampler=lambda rs, n: -sig * ndtri(0.5 * (1.0 + rs.uniform(n))),
                        kinks=(0.0,), label=f"negative-half-normal({sig})")


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def moment(d: Distribution, n: int, cfg: QuadratureConfig = DEFAULT_QUAD) -> float:
    """E[X^n]: exact atom sum for discrete laws, sample average for
    empirical ones, quadrature otherwise."""
    if n < 0 or int(n) != n:
        raise InputError("moment order must be a nonnegative integer")
    n = int(n)
    if n == 0:
        return 1.0
    if d.atoms is not None:
        return float(sum(m * x**n for x, m in d.atoms))
    if d.samples is not None:
        return float(np.mean(d.samples**n))
    if d.density is not None:
        dens = d.density
        return integrate_fn(lambda x: float(dens(x)) * x**n, d.lo, d.hi, cfg, points=d.kinks)
    if d.components is not None:
        return float(sum(w * moment(c, n, cfg) for c, w in zip(d.components, d.weights)))
    raise NonIntegrable("distribution exposes no moment route")


def sample(d: Distribution, rng: RandomSource, n: int) -> np.ndarray:
    """n i.i.d. draws; deterministic given the seed of ``rng``."""
    if n < 1:
        raise InputError("need n >= 1 draws")
    if d.sampler is None:
        raise NoSampler(f"no sampling route for {d.label or d.kind}")
    return np.asarray(d.sampler(rng, int(n)), dtype=float)


def _rejection_sampler(d: Distribution, w, envelope, cfg):
    wv = as_array_fn(w)

    def draw(rs: RandomSource, n: int):
        out = np.empty(int(n))
        filled = 0
        proposals = 0
        while filled < n:
            batch = max(1024, 2 * (n - filled))
            proposals += batch
            if proposals > REJECTION_BUDGET:
                raise RejectionBudget(
                    f"rejection sampler exceeded {REJECTION_BUDGET} proposals")
            xs = sample(d, rs, batch)
            acc = rs.uniform(batch) * envelope <= np.clip(wv(xs), 0.0, None)
            take = min(int(acc.sum()), n - filled)
            out[filled:filled + take] = xs[acc][:take]
            filled += take
        return out

    return draw


class _LazyTable:
    """Build a TabulatedDensity on first use (keeps construction cheap for
    laws whose sampler may never be exercised)."""

    def __init__(self, builder):
        self._builder = builder
        self._table = None

    def get(self) -> TabulatedDensity:
        if self._table is None:
            self._table = self._builder()
        return self._table


def tilt(d: Distribution, w: Callable, cfg: QuadratureConfig = DEFAULT_QUAD,
         envelope: Optional[float] = None, method: str = "auto",
         weight_kinks: Sequence[float] = ()) -> Distribution:
    """Reweighted law with density proportional to w times the density of d.

    Discrete laws stay discrete (exact reweighting).  Density-bearing laws
    multiply densities and renormalize by quadrature; they sample through a
    numeric inverse CDF by default, or by rejection against ``d`` when
    ``method="rejection"`` (grid-estimated envelope inflated by 1.1, with a
    proposal budget).  Laws that only expose a sampler always use rejection.
    ``weight_kinks`` declares non-smooth points of w for the quadrature.
    """
    if method not in ("auto", "rejection", "inverse-cdf"):
        raise InputError(f"unknown tilt sampling method {method!r}")
    wv = as_array_fn(w)
    kinks = tuple(sorted({*d.kinks, *(float(x) for x in weight_kinks)}))

    if d.atoms is not None:
        xs = np.array([x for x, _ in d.atoms])
        ms = np.array([m for _, m in d.atoms])
        wx = wv(xs)
        if wx.min() < NEGATIVE_WEIGHT_TOL:
            raise NegativeWeight(f"weight is negative at x={xs[wx.argmin()]!r}")
        wx = np.clip(wx, 0.0, None)
        z = float(np.sum(ms * wx))
        if z <= ZERO_NORMALIZER_TOL:
            raise ZeroNormalizer("tilting weight has zero expectation on the atoms")
        new = [(x, m * wi / z) for x, m, wi in zip(xs, ms, wx) if m * wi > 0.0]
        return from_atoms(new, label=f"tilt({d.label})")

    if d.samples is not None:
        n = d.samples.size
        return tilt(from_atoms([(x, 1.0 / n) for x in d.samples]), w, cfg)

    if d.density is None and d.components is not None:
        zs = []
        tilted = []
        for comp in d.components:
            try:
                tc = tilt(comp, w, cfg, envelope=envelope, method=method,
                          weight_kinks=weight_kinks)
                zc = integrate_fn(lambda x, c=comp: float(c.density(x)) * float(wv(x)),
                                  comp.lo, comp.hi, cfg,
                                  points=comp.kinks + tuple(weight_kinks)) \
                    if comp.density is not None else \
                    float(sum(m * max(float(wv(x)), 0.0) for x, m in comp.atoms))
            except ZeroNormalizer:
                tc, zc = None, 0.0
            tilted.append(tc)
            zs.append(zc)
        total = sum(wt * z for wt, z in zip(d.weights, zs))
        if total <= ZERO_NORMALIZER_TOL:
            raise ZeroNormalizer("tilting weight has zero expectation on the mixture")
        comps = [(tc, wt * z / total) for tc, wt, z in zip(tilted, d.weights, zs) if z > 0]
        return replace(make_mixture([c for c, _ in comps], [p for _, p in comps]),
                       kind="tilted")

    if d.density is not None:
        lo_e, hi_e = d.effective_support(cfg)
        grid = np.linspace(lo_e, hi_e, ENVELOPE_GRID)
        wg = wv(grid)
        if wg.min() < NEGATIVE_WEIGHT_TOL:
            raise NegativeWeight(f"weight is negative at x={grid[wg.argmin()]!r}")
        base_dens = d.density
        if isinstance(base_dens, TabulatedDensity):
            z = base_dens.integrate_weighted(lambda x: np.clip(wv(x), 0.0, None),
                                             d.lo, d.hi)
        else:
            z = integrate_fn(lambda x: float(base_dens(x)) * max(float(wv(x)), 0.0),
                             d.lo, d.hi, cfg, points=kinks)
        if z <= ZERO_NORMALIZER_TOL:
            raise ZeroNormalizer("tilting weight has zero expectation")

        def dens(x):
            arr = np.asarray(x, dtype=float)
            out = np.clip(wv(arr), 0.0, None) * as_array_fn(base_dens)(arr) / z
            return float(out) if arr.ndim == 0 else out

        if method == "rejection":
            env = envelope if envelope is not None else float(wg.max()) * ENVELOPE_INFLATION
            if env <= 0:
                raise ZeroNormalizer("rejection envelope is zero")
            draw = _rejection_sampler(d, w, env, cfg)
        else:
            table = _LazyTable(lambda: TabulatedDensity.from_callable(
                dens, lo_e, hi_e, INVERSE_CDF_GRID, knots=kinks))

            def draw(rs: RandomSource, n: int):
                return table.get().ppf(rs.uniform(n))

        return Distribution(kind="tilted", lo=d.lo, hi=d.hi, density=dens,
                            sampler=draw, kinks=kinks, label=f"tilt({d.label})")

    if d.sampler is not None:
        if envelope is None:
            lo_e, hi_e = d.effective_support(cfg) if math.isfinite(d.lo) and math.isfinite(d.hi) \
                else (d.lo, d.hi)
            if not (math.isfinite(lo_e) and math.isfinite(hi_e)):
                raise InputError("rejection tilting needs a finite support or an envelope")
            grid = np.linspace(lo_e, hi_e, ENVELOPE_GRID)
            wg = wv(grid)
            if wg.min() < NEGATIVE_WEIGHT_TOL:
                raise NegativeWeight(f"weight is negative at x={grid[wg.argmin()]!r}")
            envelope = float(wg.max()) * ENVELOPE_INFLATION
        if envelope <= 0:
            raise ZeroNormalizer("rejection envelope is zero")
        return Distribution(kind="tilted", lo=d.lo, hi=d.hi,
                            sampler=_rejection_sampler(d, w, envelope, cfg),
                            kinks=kinks, label=f"tilt({d.label})")

    raise NoSampler("distribution exposes neither atoms, density, nor sampler")


def make_mixture(components: Sequence[Distribution], weights: Sequence[float]) -> Distribution:
    """Mixture law.  Exact atom merge when every component is discrete;
    pointwise weighted density when every component has one."""
    comps = tuple(components)
    ws = np.asarray(list(weights), dtype=float)
    if len(comps) != ws.size or len(comps) == 0:
        raise WeightMismatch("components and weights must have equal, positive length")
    if np.any(ws < 0):
        raise WeightMismatch("mixture weights must be nonnegative")
    if abs(ws.sum() - 1.0) > ATOM_MASS_TOL:
        raise WeightMismatch(f"mixture weights sum to {ws.sum()!r}, not 1")
    if len(comps) == 1:
        return comps[0]

    if all(c.atoms is not None for c in comps):
        pairs = [(x, w * m) for c, w in zip(comps, ws) for x, m in c.atoms if w > 0]
        return from_atoms(pairs, label="mixture")

    lo = min(c.lo for c in comps)
    hi = max(c.hi for c in comps)
    kinks = tuple(sorted({k for c in comps for k in c.kinks}))

    dens = None
    if all(c.density is not None for c in comps):
        fns = [as_array_fn(c.density) for c in comps]

        def dens(x, _fns=fns, _ws=ws):
            arr = np.asarray(x, dtype=float)
            out = sum(w * f(arr) for f, w in zip(_fns, _ws))
            return float(out) if arr.ndim == 0 else out

    cdf = None
    if all(c.cdf is not None for c in comps):
        cfns = [as_array_fn(c.cdf) for c in comps]

        def cdf(x, _fns=cfns, _ws=ws):
            arr = np.asarray(x, dtype=float)
            out = sum(w * f(arr) for f, w in zip(_fns, _ws))
            return float(out) if arr.ndim == 0 else out

    cum = np.cumsum(ws)
    cum[-1] = 1.0

    def draw(rs: RandomSource, n: int):
        idx = np.searchsorted(cum, rs.uniform(n), side="right")
        out = np.empty(int(n))
        for j, comp in enumerate(comps):
            mask = idx == j
            cnt = int(mask.sum())
            if cnt:
                out[mask] = sample(comp, rs, cnt)
        return out

    return Distribution(kind="mixture", lo=lo, hi=hi, density=dens, cdf=cdf,
                        sampler=draw, components=comps, weights=tuple(float(w) for w in ws),
                        kinks=kinks, label="mixture")


def cache_density(d: Distribution, n: int = 2049, cfg: QuadratureConfig = DEFAULT_QUAD) -> Distribution:
    """Replace a law's density by a normalized grid tabulation (and gain a
    numeric CDF).  The sampler is kept as constructed."""
    if d.density is None:
        raise InputError("cannot cache a law without a density")
    lo_e, hi_e = d.effective_support(cfg)
    table = TabulatedDensity.from_callable(d.density, lo_e, hi_e, n, knots=d.kinks)
    return replace(d, density=table, cdf=table.cdf)


def numeric_cdf(d: Distribution, n: int = INVERSE_CDF_GRID,
                cfg: QuadratureConfig = DEFAULT_QUAD) -> Callable:
    """CDF evaluator obtained by integrating the density numerically."""
    if d.cdf is not None:
        return d.cdf
    if d.density is None:
        raise InputError("no density to integrate")
    if isinstance(d.density, TabulatedDensity):
        return d.density.cdf
    lo_e, hi_e = d.effective_support(cfg)
    return TabulatedDensity.from_callable(d.density, lo_e, hi_e, n, knots=d.kinks).cdf


# ---------------------------------------------------------------------------
# JSON / CSV interfaces
# ---------------------------------------------------------------------------

_FAMILIES = {
    "uniform": (uniform, ("lo", "hi")),
    "exponential": (exponential, ("rate",)),
    "normal": (normal, ("mean", "std")),
    "half-normal": (half_normal, ("sigma",)),
    "negative-half-normal": (negative_half_normal, ("sigma",)),
}


def catalog_families() -> dict:
    return {name: list(params) for name, (_, params) in _FAMILIES.items()}


def dist_from_json(obj) -> Distribution:
    """Build a law from its JSON description.

    Accepted forms: {"family": name, "params": {...}}, {"atoms": [[x, p]...]},
    {"empirical": [values]}, {"empirical_csv": path}, and
    {"mixture": {"components": [...], "weights": [...]}}.
    """
    if not isinstance(obj, dict):
        raise InputError("distribution spec must be a JSON object")
    if "family" in obj:
        name = obj["family"]
        if name not in _FAMILIES:
            raise InputError(f"unknown family {name!r}; known: {sorted(_FAMILIES)}")
        ctor, param_names = _FAMILIES[name]
        params = obj.get("params", {})
        unknown = set(params) - set(param_names)
        if unknown:
            raise InputError(f"unknown parameters {sorted(unknown)} for family {name!r}")
        return ctor(**params)
    if "atoms" in obj:
        return from_atoms([(float(x), float(p)) for x, p in obj["atoms"]])
    if "empirical" in obj:
        return from_samples(obj["empirical"])
    if "empirical_csv" in obj:
        return load_empirical_csv(obj["empirical_csv"])
    if "mixture" in obj:
        spec = obj["mixture"]
        comps = [dist_from_json(c) for c in spec["components"]]
        return make_mixture(comps, spec["weights"])
    raise InputError("distribution spec needs one of: family, atoms, empirical, "
                     "empirical_csv, mixture")


def load_empirical_csv(path) -> Distribution:
    """Empirical law from a one-column CSV of samples (header row optional)."""
    values = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            try:
                values.append(float(row[0]))
            except ValueError:
                continue  # header or comment line
    if not values:
        raise InputError(f"no numeric samples found in {path}")
    return from_samples(values, label=f"empirical:{path}")
