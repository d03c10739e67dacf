"""Polynomial substrate: dense polynomials, node sets, Lagrange
interpolation, the interpolation-residual coefficients in their two
equivalent forms, correction polynomials, iterated antiderivatives and
sign-compatible primitives.

Degrees stay small (single digits) throughout the package, so the dense
monomial representation is well conditioned enough; interpolation also
offers direct barycentric evaluation at a point to avoid coefficient
round-off in tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import InputError, ParityMismatch
from .distributions import DEFAULT_QUAD, QuadratureConfig, integrate_fn

MIN_NODE_GAP = 1e-8


# ---------------------------------------------------------------------------
# dense polynomials
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Polynomial:
    """Real polynomial, monomial basis, low degree first.

    Canonical form: trailing zero coefficients stripped; the zero
    polynomial is the empty tuple.
    """

    coeffs: tuple = ()

    def __post_init__(self):
        cs = tuple(float(c) for c in self.coeffs)
        while cs and cs[-1] == 0.0:
            cs = cs[:-1]
        object.__setattr__(self, "coeffs", cs)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1  # -1 for the zero polynomial

    def __call__(self, x):
        if not self.coeffs:
            arr = np.asarray(x, dtype=float)
            return 0.0 if arr.ndim == 0 else np.zeros_like(arr)
        out = npoly.polyval(np.asarray(x, dtype=float), self.coeffs)
        return float(out) if np.ndim(out) == 0 else out

    def __add__(self, other: "Polynomial") -> "Polynomial":
        return Polynomial(tuple(npoly.polyadd(self.coeffs or (0.0,), other.coeffs or (0.0,))))

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return Polynomial(tuple(npoly.polysub(self.coeffs or (0.0,), other.coeffs or (0.0,))))

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        if not self.coeffs or not other.coeffs:
            return Polynomial(())
        return Polynomial(tuple(npoly.polymul(self.coeffs, other.coeffs)))

    def scale(self, c: float) -> "Polynomial":
        return Polynomial(tuple(c * a for a in self.coeffs))

    def derivative(self, order: int = 1) -> "Polynomial":
        if order < 0:
            raise InputError("derivative order must be nonnegative")
        if order == 0 or not self.coeffs:
            return self
        if order > self.degree:
            return Polynomial(())
        return Polynomial(tuple(npoly.polyder(self.coeffs, m=order)))

    def antiderivative(self) -> "Polynomial":
        """Primitive vanishing at zero."""
        if not self.coeffs:
            return Polynomial(())
        return Polynomial(tuple(npoly.polyint(self.coeffs)))

    @staticmethod
    def monomial(degree: int, coeff: float = 1.0) -> "Polynomial":
        return Polynomial((0.0,) * degree + (float(coeff),))


# ---------------------------------------------------------------------------
# node sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NodeSet:
    """Strictly increasing real nodes; consecutive nodes must be at least
    MIN_NODE_GAP apart because divided quantities 1/(x_l - x_r) appear
    throughout."""

    nodes: tuple = ()

    def __post_init__(self):
        ns = tuple(float(x) for x in self.nodes)
        object.__setattr__(self, "nodes", ns)
        for a, b in zip(ns, ns[1:]):
            if b - a < MIN_NODE_GAP:
                raise InputError(f"nodes {a} and {b} are closer than {MIN_NODE_GAP}")

    def __len__(self):
        return len(self.nodes)

    def __iter__(self):
        return iter(self.nodes)

    def __getitem__(self, i):
        return self.nodes[i]

    def product_poly(self) -> Polynomial:
        """The monic polynomial with the nodes as simple roots."""
        p = Polynomial((1.0,))
        for x in self.nodes:
            p = p * Polynomial((-x, 1.0))
        return p

    def interval_index(self, x: float) -> int:
        """1-based index of the interval (-inf,x_1], (x_1,x_2], ..., (x_k,inf)."""
        return int(np.searchsorted(np.asarray(self.nodes), x, side="left")) + 1


# ---------------------------------------------------------------------------
# Lagrange interpolation
# ---------------------------------------------------------------------------

def lagrange_poly(nodes: NodeSet | Sequence[float], values: Sequence[float]) -> Polynomial:
    """Interpolation polynomial of degree <= len(nodes)-1 through
    (node, value) pairs; the zero polynomial for an empty node set."""
    ns = tuple(nodes)
    vs = tuple(float(v) for v in values)
    if len(ns) != len(vs):
        raise InputError("need one value per node")
    out = Polynomial(())
    for k, (xk, vk) in enumerate(zip(ns, vs)):
        if vk == 0.0:
            continue
        basis = Polynomial((1.0,))
        denom = 1.0
        for j, xj in enumerate(ns):
            if j == k:
                continue
            basis = basis * Polynomial((-xj, 1.0))
            denom *= xk - xj
        out = out + basis.scale(vk / denom)
    return out


def lagrange_value(nodes: NodeSet | Sequence[float], values: Sequence[float], x) -> float:
    """Barycentric evaluation of the interpolation polynomial at a point
    (avoids the coefficient round-off of the dense form)."""
    ns = np.asarray(tuple(nodes), dtype=float)
    vs = np.asarray(tuple(values), dtype=float)
    if ns.size != vs.size:
        raise InputError("need one value per node")
    if ns.size == 0:
        return 0.0
    x = float(x)
    hit = np.nonzero(ns == x)[0]
    if hit.size:
        return float(vs[hit[0]])
    w = np.array([1.0 / np.prod(ns[k] - np.delete(ns, k)) for k in range(ns.size)])
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        q = w / (x - ns)
        out = np.sum(q * vs) / np.sum(q)
    if not np.isfinite(out):  # x within rounding of a node: 1/(x - node) overflowed
        return float(vs[np.argmin(np.abs(x - ns))])
    return float(out)


# ---------------------------------------------------------------------------
# interpolation-residual coefficients (two equivalent forms)
# ---------------------------------------------------------------------------

def complete_homogeneous(nodes: Sequence[float], degree: int) -> float:
    """Complete homogeneous symmetric polynomial of the given degree in the
    nodes (sum of all monomials of that total degree, repeats allowed)."""
    if degree < 0:
        return 0.0
    h = np.zeros(degree + 1)
    h[0] = 1.0
    for x in nodes:
        for t in range(1, degree + 1):
            h[t] += x * h[t - 1]
    return float(h[degree])


def power_sum_ratio(nodes: Sequence[float], exponent: int) -> float:
    """sum_l x_l^n / prod_{r != l} (x_l - x_r).

    Equals the complete homogeneous symmetric polynomial of degree
    n - k + 1 in the k nodes, and vanishes for n <= k - 2.
    """
    ns = tuple(float(x) for x in nodes)
    if len(ns) == 0:
        raise InputError("need at least one node")
    total = 0.0
    for l, xl in enumerate(ns):
        denom = 1.0
        for r, xr in enumerate(ns):
            if r != l:
                denom *= xl - xr
        total += xl**exponent / denom
    return total


def interp_coeff(nodes: Sequence[float], i: int, j: int, method: str = "symmetric") -> float:
    """Coefficient of x^i in the degree-j quotient of the monomial
    interpolation residual: (x^{k+j} - interpolant) / prod(x - x_l),
    up to the falling-factorial scale.

    Both forms agree; the symmetric recurrence is the default because the
    power-sum form is ill conditioned for clustered nodes.
    """
    ns = tuple(float(x) for x in nodes)
    k = len(ns)
    if k < 1:
        raise InputError("need at least one node")
    if not 0 <= i <= j:
        raise InputError("need 0 <= i <= j")
    if method == "symmetric":
        return complete_homogeneous(ns, j - i)
    if method == "power-sum":
        return power_sum_ratio(ns, k + j - i - 1)
    raise InputError(f"unknown method {method!r}; use 'symmetric' or 'power-sum'")


def correction_poly(derivs_at_zero: Sequence[float], nodes: Sequence[float], m: int,
                    method: str = "symmetric") -> Polynomial:
    """Degree <= m-1 correction polynomial that lets a biasing function with
    k < m sign changes drive an order-m identity.

    ``derivs_at_zero`` holds the k-th through (m-1)-th derivatives at zero
    of the test function.  Zero polynomial when k == m; the truncated
    Maclaurin polynomial when k == 0.
    """
    ns = tuple(float(x) for x in nodes)
    k = len(ns)
    if m < 0 or k > m:
        raise InputError("need 0 <= k <= m")
    if (m - k) % 2 != 0:
        raise ParityMismatch(f"k={k} and m={m} have different parity")
    ds = tuple(float(v) for v in derivs_at_zero)
    if len(ds) != m - k:
        raise InputError(f"need {m - k} derivative values, got {len(ds)}")
    if k == m:
        return Polynomial(())
    if k == 0:
        return Polynomial(tuple(ds[j] / math.factorial(j) for j in range(m)))
    inner = []
    for i in range(m - k):
        c = sum(ds[j] * interp_coeff(ns, i, j, method) / math.factorial(k + j)
                for j in range(i, m - k))
        inner.append(c)
    prod = Polynomial((1.0,))
    for x in ns:
        prod = prod * Polynomial((-x, 1.0))
    return prod * Polynomial(tuple(inner))


# ---------------------------------------------------------------------------
# iterated antiderivatives & sign-compatible primitives
# ---------------------------------------------------------------------------

def iterated_antiderivative(f: Callable, a: float, m: int, x: float,
                            cfg: QuadratureConfig = DEFAULT_QUAD) -> float:
    """m-th iterated primitive of f anchored at a, evaluated at x, via the
    single-integral reduction  ∫_a^x f(t) (x-t)^{m-1}/(m-1)! dt."""
    if m < 1:
        raise InputError("need m >= 1")
    a, x = float(a), float(x)
    if a == x:
        return 0.0
    scale = 1.0 / math.factorial(m - 1)

    def kernel(t):
        return float(f(t)) * (x - t) ** (m - 1) * scale

    if x > a:
        return integrate_fn(kernel, a, x, cfg)
    return -integrate_fn(kernel, x, a, cfg)


def sign_compatible_primitive(f: Callable, nodes: NodeSet | Sequence[float], x: float,
                              cfg: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Evaluate the unique m-th primitive of a nonnegative f that vanishes
    at every node and alternates sign across the node intervals, ending
    nonnegative on the right.

    Construction: the m-fold primitive anchored at the largest node, minus
    its interpolation polynomial at the nodes.
    """
    ns = tuple(nodes)
    m = len(ns)
    if m < 1:
        raise InputError("need at least one node")
    anchor = ns[-1]
    gx = iterated_antiderivative(f, anchor, m, x, cfg)
    gvals = [iterated_antiderivative(f, anchor, m, xk, cfg) for xk in ns]
    return gx - lagrange_value(ns, gvals, x)


# ---------------------------------------------------------------------------
# piecewise polynomials (test-function substrate)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PiecewisePoly:
    """Piecewise polynomial with global-coordinate pieces.

    ``pieces[i]`` applies on [breaks[i-1], breaks[i]); pieces[0] on
    (-inf, breaks[0]) and pieces[-1] on [breaks[-1], inf).
    """

    breaks: tuple
    pieces: tuple  # len(breaks) + 1 Polynomial values

    def __post_init__(self):
        if len(self.pieces) != len(self.breaks) + 1:
            raise InputError("need one more piece than breaks")
        bs = tuple(float(b) for b in self.breaks)
        if any(b2 <= b1 for b1, b2 in zip(bs, bs[1:])):
            raise InputError("breaks must be strictly increasing")
        object.__setattr__(self, "breaks", bs)

    def __call__(self, x):
        arr = np.asarray(x, dtype=float)
        scalar = arr.ndim == 0
        arr = np.atleast_1d(arr)
        idx = np.searchsorted(np.asarray(self.breaks), arr, side="right")
        out = np.empty_like(arr)
        for i, piece in enumerate(self.pieces):
            mask = idx == i
            if mask.any():
                out[mask] = piece(arr[mask])
        return float(out[0]) if scalar else out

    def derivative(self, order: int = 1) -> "PiecewisePoly":
        return PiecewisePoly(self.breaks, tuple(p.derivative(order) for p in self.pieces))

    def antiderivative(self, anchor: float = 0.0) -> "PiecewisePoly":
        """Continuous primitive vanishing at ``anchor``."""
        raw = [p.antiderivative() for p in self.pieces]
        shifted = [raw[0]]
        for i, b in enumerate(self.breaks):
            prev = shifted[i]
            nxt = raw[i + 1]
            shifted.append(nxt + Polynomial((prev(b) - nxt(b),)))
        out = PiecewisePoly(self.breaks, tuple(shifted))
        c = out(anchor)
        return PiecewisePoly(self.breaks, tuple(p + Polynomial((-c,)) for p in out.pieces))

    @staticmethod
    def linear_interpolant(knots: Sequence[float], values: Sequence[float],
                           extend: str = "constant") -> "PiecewisePoly":
        """Piecewise-linear function through the knots; constant or zero
        extension outside the knot range."""
        ks = tuple(float(k) for k in knots)
        vs = tuple(float(v) for v in values)
        if len(ks) != len(vs) or len(ks) < 2:
            raise InputError("need >= 2 knots with matching values")
        pieces = []
        if extend == "constant":
            pieces.append(Polynomial((vs[0],)))
        elif extend == "zero":
            pieces.append(Polynomial(()))
        else:
            raise InputError("extend must be 'constant' or 'zero'")
        for (x0, y0), (x1, y1) in zip(zip(ks, vs), zip(ks[1:], vs[1:])):
            slope = (y1 - y0) / (x1 - x0)
            pieces.append(Polynomial((y0 - slope * x0, slope)))
        pieces.append(Polynomial((vs[-1],)) if extend == "constant" else Polynomial(()))
        return PiecewisePoly(ks, tuple(pieces))
