"""Exact finite-cutoff Gaussian-integral formulas.

For a mean-zero Gaussian field with covariance K and points x_1..x_l, the
tilted moment of a bounded function V factorizes into an l-dimensional
Gaussian expectation

    < e^{phi(J)} V(phi(x_1)) ... V(phi(x_l)) > / < e^{phi(J)} >
        = (2 pi)^{-l/2} det(M)^{-1/2} int dw  V(sqrt(K(0)) w_1) ...
          V(sqrt(K(0)) w_l) exp(-(w - q)^T M^{-1} (w - q) / 2),

where M = I + m has the normalized off-diagonal covariances
m_ij = K(x_i - x_j)/K(0) and q_i = (K J)(x_i)/sqrt(K(0)).  This module
assembles M (with a Schur row-sum bound and a positive-definiteness
verdict), evaluates the expectation for l <= 3 by adaptive product
Gauss-Legendre panels, and evaluates the l = 1 case integrated over the box
(the leading term of the connected generating functional) in the two scalar
scales

    ratio = (2 pi)^{-1/2} int_B dx int dw V(s_plus w)
            exp(-(w - s_minus a(x))^2 / 2).

Discontinuous V would destroy spectral accuracy of a naive rule, so every
declared jump of V (and the Gaussian mean) splits the integration domain
into panels; the w-range is truncated at 12 standard deviations from the
mean, far below every tolerance used here since V is bounded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .exceptions import NotPositiveDefiniteError, QuadratureError
from .lattice import SpectralDensity, SourceField, TorusLattice
from .propagator import ModelParams, QuadratureSpec, covariance_at, covariance_zero

__all__ = [
    "GAUSS_WINDOW",
    "OverlapMatrix",
    "ScaleParams",
    "ell_point_expectation",
    "erf_derivative_coefficient",
    "gauss_mean",
    "hermite_number",
    "one_point_ratio",
    "overlap_matrix",
    "pair_expectation_grid",
    "shifted_gaussian_mean",
    "source_vector",
]

# Half-width of the integration window in units of the (unit) marginal
# standard deviation: exp(-72) is far below every tolerance in use.
GAUSS_WINDOW = 12.0

_SQRT_2PI = math.sqrt(2.0 * math.pi)
_BASE_NODES = 24


@dataclass(frozen=True)
class ScaleParams:
    """The two scalar scales of the one-point formula.

    s_plus multiplies the argument of V; s_minus multiplies the source
    shift.  They may come from a renormalization exponent via
    (sqrt(z K(0)), sqrt(z / K(0))) or be supplied directly.
    """

    s_plus: float
    s_minus: float

    def __post_init__(self):
        if not (self.s_plus > 0 and self.s_minus > 0):
            raise ValueError("scale parameters must be strictly positive")


@lru_cache(maxsize=64)
def _leggauss(n: int):
    return np.polynomial.legendre.leggauss(n)


def _breakpoints(mu: np.ndarray, splits) -> np.ndarray:
    """Sorted panel breakpoints per mean: window edges, the mean, and every
    split clipped into the window (clipping may create zero-width panels,
    which carry zero weight)."""
    lo = mu - GAUSS_WINDOW
    hi = mu + GAUSS_WINDOW
    cols = [lo, mu, hi]
    cols.extend(np.clip(float(s), lo, hi) for s in splits)
    pts = np.stack(np.broadcast_arrays(*cols), axis=-1)
    pts.sort(axis=-1)
    return pts


def _panel_rule(breaks: np.ndarray, n: int):
    """Gauss-Legendre nodes/weights on each panel, flattened per row."""
    xg, wg = _leggauss(n)
    lo = breaks[..., :-1, None]
    hi = breaks[..., 1:, None]
    half = 0.5 * (hi - lo)
    nodes = 0.5 * (hi + lo) + half * xg
    weights = half * wg
    out_shape = breaks.shape[:-1] + (-1,)
    return nodes.reshape(out_shape), weights.reshape(out_shape)


def _refinement_nodes(ell: int = 1):
    n = _BASE_NODES if ell < 3 else 12
    while True:
        yield n
        n *= 2


def shifted_gaussian_mean(f, mu, splits=(), quad: QuadratureSpec | None = None,
                          block: int = 2048) -> np.ndarray:
    """E[f(w)] for w ~ N(mu, 1), elementwise over an array of means.

    Panels are split at the mean and at every entry of ``splits``; the rule
    is refined by doubling the node count until two successive levels agree
    within the tolerances, else a diagnostic error carries the partial
    estimate.
    """
    quad = quad or QuadratureSpec()
    mu = np.asarray(mu, dtype=float)
    flat = np.atleast_1d(mu).ravel()
    out = np.empty_like(flat)
    for start in range(0, flat.size, block):
        out[start:start + block] = _shifted_mean_block(
            f, flat[start:start + block], splits, quad)
    return out.reshape(mu.shape) if mu.shape else out[0]


def _shifted_mean_block(f, mu, splits, quad):
    breaks = _breakpoints(mu, splits)
    prev = None
    levels = _refinement_nodes()
    for _ in range(quad.max_refinements + 1):
        n = next(levels)
        nodes, weights = _panel_rule(breaks, n)
        density = np.exp(-0.5 * (nodes - mu[..., None]) ** 2) / _SQRT_2PI
        vals = np.sum(f(nodes) * density * weights, axis=-1)
        if prev is not None:
            if np.all(np.abs(vals - prev) <= quad.abs_tol + quad.rel_tol * np.abs(vals)):
                return vals
        prev = vals
    raise QuadratureError(
        "shifted Gaussian mean did not converge within the refinement budget",
        partial_estimate=prev,
    )


def gauss_mean(v, quad: QuadratureSpec | None = None) -> float:
    """(2 pi)^{-1/2} int dw V(w) e^{-w^2/2}, split at V's declared jumps."""
    return float(shifted_gaussian_mean(v, 0.0, v.discontinuities, quad))


# --- overlap matrices --------------------------------------------------------

@dataclass(eq=False)
class OverlapMatrix:
    """I + alpha * m for a point configuration, with diagnostics.

    ``offdiag`` is the matrix m of normalized covariances K(x_i - x_j)/K(0)
    with zero diagonal; ``schur_bound`` is max_i sum_j |m_ij|, an upper
    bound for the operator norm of m; ``positive_definite`` is the verdict
    of an attempted Cholesky factorization of the assembled matrix.
    """

    points: np.ndarray
    alpha: float
    offdiag: np.ndarray
    matrix: np.ndarray
    schur_bound: float
    positive_definite: bool
    cov_zero: float

    @property
    def ell(self) -> int:
        return self.matrix.shape[0]


def _pairwise_ratio_lattice(points, params, lat):
    density = SpectralDensity.build(lat, params.mass, params.cutoff, z=1.0)
    p2 = lat.momentum_squared()
    c0 = density.zero_lag
    vol = lat.length**lat.d

    def cov(dx):
        phases = np.zeros(p2.shape)
        for axis in range(lat.d):
            p = lat.axis_momenta()
            shape = [1] * lat.d
            shape[axis] = lat.n
            phases = phases + (p * dx[axis]).reshape(shape)
        return float(np.sum(density.weights * np.cos(phases))) / vol

    return cov, c0


def overlap_matrix(points, params: ModelParams, alpha: float = 1.0,
                   source: str = "continuum", lat: TorusLattice | None = None,
                   quad: QuadratureSpec | None = None) -> OverlapMatrix:
    """Assemble M_alpha = I + alpha m for a configuration of points.

    ``source`` selects where the covariances come from: ``continuum`` uses
    the proper-time integral, ``lattice`` the spectral kernel of ``lat``
    (so quadrature matches Monte Carlo on the same lattice with no
    discretization gap).  A failed factorization is reported in the verdict,
    not raised: configurations with close pairs are expected to produce it.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != params.d:
        raise ValueError(f"points must have {params.d} components")
    if np.any(pts < -0.5 * params.length) or np.any(pts > params.length):
        raise ValueError("points must lie inside the box")
    ell = pts.shape[0]

    if source == "continuum":
        c0 = covariance_zero(params)
        cov = lambda dx: covariance_at(dx, params, quad)
    elif source == "lattice":
        if lat is None:
            raise ValueError("lattice covariance source requires a lattice")
        cov, c0 = _pairwise_ratio_lattice(pts, params, lat)
    else:
        raise ValueError(f"unknown covariance source '{source}'")

    m = np.zeros((ell, ell))
    for i in range(ell):
        for k in range(i + 1, ell):
            m[i, k] = m[k, i] = cov(pts[i] - pts[k]) / c0
    matrix = np.eye(ell) + alpha * m
    schur = float(np.abs(m).sum(axis=1).max()) if ell > 1 else 0.0
    try:
        np.linalg.cholesky(matrix)
        pd = True
    except np.linalg.LinAlgError:
        pd = False
    return OverlapMatrix(points=pts, alpha=float(alpha), offdiag=m, matrix=matrix,
                         schur_bound=schur, positive_definite=pd, cov_zero=c0)


def source_vector(points, cj_field: SourceField, ctilde0: float) -> np.ndarray:
    """q_i = (K J)(x_i) / sqrt(K(0)) read off a convolved source at lattice sites."""
    lat = cj_field.lat
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    idx = np.rint(pts / lat.spacing).astype(int) % lat.n
    if not np.allclose(idx * lat.spacing, np.mod(pts, lat.length),
                       atol=1e-9 * lat.spacing, rtol=0.0):
        raise ValueError("points do not sit on lattice sites")
    vals = cj_field.values[tuple(idx.T)]
    return vals / math.sqrt(ctilde0)


# --- multivariate expectation ------------------------------------------------

def _axis_breakpoints(center: float, splits) -> np.ndarray:
    lo, hi = center - GAUSS_WINDOW, center + GAUSS_WINDOW
    pts = sorted({lo, center, hi, *(min(max(float(s), lo), hi) for s in splits)})
    return np.asarray(pts)


def _grid_value(vvals, weights, centered, inv, norm, chunk=64):
    """Sum prod_i V_i w_i * pdf over the product grid, chunked on axis 0."""
    ell = len(vvals)
    total = 0.0
    k0 = vvals[0].shape[0]
    for start in range(0, k0, chunk):
        stop = min(start + chunk, k0)
        acc = None
        # quadratic form sum_ab inv[a,b] u_a u_b on the (chunked) grid
        for a in range(ell):
            ua = centered[a][start:stop] if a == 0 else centered[a]
            sa = [1] * ell
            sa[a] = -1
            ua = ua.reshape(sa)
            for b in range(ell):
                ub = centered[b][start:stop] if b == 0 else centered[b]
                sb = [1] * ell
                sb[b] = -1
                ub = ub.reshape(sb)
                term = inv[a, b] * ua * ub
                acc = term if acc is None else acc + term
        integrand = np.exp(-0.5 * acc) * norm
        for a in range(ell):
            fa = vvals[a] * weights[a]
            fa = fa[start:stop] if a == 0 else fa
            sa = [1] * ell
            sa[a] = -1
            integrand = integrand * fa.reshape(sa)
        total += float(integrand.sum())
    return total


def ell_point_expectation(v, overlap: OverlapMatrix, q, ctilde0: float,
                          quad: QuadratureSpec | None = None) -> float:
    """The l-dimensional Gaussian expectation of prod_i V(sqrt(K(0)) w_i).

    Requires a positive-definite overlap matrix (the caller excludes
    configurations too close to the diagonal) and l <= 3, beyond which
    deterministic product quadrature is not worth its geometric cost.
    The result is bounded by sup|V|^l.
    """
    quad = quad or QuadratureSpec()
    ell = overlap.ell
    if ell > 3:
        raise ValueError("deterministic product quadrature is capped at 3 points")
    if not overlap.positive_definite:
        raise NotPositiveDefiniteError(
            "overlap matrix is not positive definite; exclude near-diagonal "
            "configurations before taking expectations"
        )
    if not ctilde0 > 0:
        raise ValueError("the covariance at zero lag must be positive")
    q = np.zeros(ell) if q is None else np.asarray(q, dtype=float).reshape(ell)

    scale = math.sqrt(ctilde0)
    splits = [t / scale for t in v.discontinuities]
    inv = np.linalg.inv(overlap.matrix)
    norm = 1.0 / ((2.0 * math.pi) ** (0.5 * ell)
                  * math.sqrt(np.linalg.det(overlap.matrix)))
    breaks = [_axis_breakpoints(q[i], splits) for i in range(ell)]

    prev = None
    levels = _refinement_nodes(ell)
    for _ in range(quad.max_refinements + 1):
        n = next(levels)
        nodes, weights, vvals, centered = [], [], [], []
        for i in range(ell):
            nd, wt = _panel_rule(breaks[i], n)
            nodes.append(nd)
            weights.append(wt)
            vvals.append(np.asarray(v(scale * nd), dtype=float))
            centered.append(nd - q[i])
        val = _grid_value(vvals, weights, centered, inv, norm)
        if prev is not None and abs(val - prev) <= quad.abs_tol + quad.rel_tol * abs(val):
            return val
        prev = val
    raise QuadratureError(
        f"{ell}-point expectation did not converge within the refinement budget",
        partial_estimate=prev,
    )


def pair_expectation_grid(v, rho, q0: float, ctilde0: float,
                          quad: QuadratureSpec | None = None,
                          chunk: int = 64) -> np.ndarray:
    """E[V(s w_1) V(s w_2)] for a batch of correlations, common scalar mean.

    Vectorizes the two-point expectation over an array of off-diagonal
    entries rho (|rho| < 1), all sharing the same mean q0 and scale
    s = sqrt(ctilde0).  Used where the two-point structure depends on the
    points only through their separation.
    """
    quad = quad or QuadratureSpec()
    rho = np.asarray(rho, dtype=float)
    flat = rho.ravel()
    if flat.size and np.max(np.abs(flat)) >= 1.0:
        raise NotPositiveDefiniteError("pair correlations must satisfy |rho| < 1")
    scale = math.sqrt(ctilde0)
    splits = [t / scale for t in v.discontinuities]
    breaks = _axis_breakpoints(q0, splits)

    prev = None
    levels = _refinement_nodes()
    for _ in range(quad.max_refinements + 1):
        n = next(levels)
        nodes, weights = _panel_rule(breaks, n)
        fw = np.asarray(v(scale * nodes), dtype=float) * weights
        u = nodes - q0
        out = np.empty(flat.shape)
        for start in range(0, flat.size, chunk):
            r = flat[start:start + chunk, None, None]
            det = 1.0 - r * r
            quadform = (u[:, None] ** 2 + u[None, :] ** 2
                        - 2.0 * r * u[:, None] * u[None, :]) / det
            pdf = np.exp(-0.5 * quadform) / (2.0 * math.pi * np.sqrt(det))
            out[start:start + chunk] = np.einsum("i,j,rij->r", fw, fw, pdf)
        if prev is not None:
            if np.all(np.abs(out - prev) <= quad.abs_tol + quad.rel_tol * np.abs(out)):
                return out.reshape(rho.shape)
        prev = out
    raise QuadratureError(
        "pair expectation batch did not converge within the refinement budget",
        partial_estimate=prev,
    )


def one_point_ratio(v, a_field: SourceField, scales,
                    quad: QuadratureSpec | None = None) -> float:
    """(2 pi)^{-1/2} int_B dx int dw V(s_plus w) e^{-(w - s_minus a(x))^2 / 2}.

    The outer integral is the Riemann sum over the lattice carried by
    ``a_field``; the inner integral is the adaptive panel rule.  Bounded by
    sup|V| * L^d, and exactly zero for odd V with a vanishing shift field.
    """
    s_plus = float(scales.s_plus)
    s_minus = float(scales.s_minus)
    if not s_plus > 0:
        raise ValueError("s_plus must be positive")
    splits = [t / s_plus for t in v.discontinuities]
    mu = s_minus * a_field.values.ravel()
    site_means = shifted_gaussian_mean(lambda w: v(s_plus * w), mu, splits, quad)
    return float(a_field.lat.cell_volume * site_means.sum())


# --- derivatives of the Gaussian error profile -------------------------------

def hermite_number(k: int) -> int:
    """Value at zero of the k-th probabilist Hermite polynomial (exact integer)."""
    if k < 0:
        raise ValueError("order must be nonnegative")
    if k == 0:
        return 1
    prev, cur = 1, 0  # orders 0 and 1
    for j in range(2, k + 1):
        prev, cur = cur, -(j - 1) * prev
    return cur


def erf_derivative_coefficient(n: int) -> float:
    """n-th derivative of erf(w / sqrt(2)) at w = 0.

    Since the first derivative is sqrt(2/pi) e^{-w^2/2}, the higher ones are
    Hermite numbers up to sign: zero for even n, and
    sqrt(2/pi) (-1)^k (2k-1)!! for n = 2k + 1.
    """
    if n < 1:
        raise ValueError("derivative order must be >= 1")
    return math.sqrt(2.0 / math.pi) * (-1) ** (n - 1) * hermite_number(n - 1)
