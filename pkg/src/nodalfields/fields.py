"""Exact realizations of stationary Gaussian fields with atomic spectra.

A sample is a finite trigonometric sum: one (cos, sin) coefficient pair per
antipodal atom pair, so values and derivatives are available in closed form
anywhere.  With i.i.d. standard normal coefficients the sample reproduces the
measure's covariance function exactly; there is no discretization in the law.

Coefficients come from a counter-based generator (Philox) keyed by
(seed, stream index), so Monte Carlo batches are reproducible independently of
evaluation order or worker count.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import GridTooCoarse
from .measures import SpectralMeasure, antipodal_pairs, covariance

# Resolution rule: at least this many grid nodes per minimal wavelength before
# sign-based counting is trusted; the default grid uses POINTS_PER_WAVELENGTH.
MIN_POINTS_PER_WAVELENGTH = 12
POINTS_PER_WAVELENGTH = 16


@dataclass(frozen=True)
class SquareDomain:
    """Centered square [-R, R]^2."""
    R: float

    def descriptor(self) -> str:
        return f"square R={self.R:.17g}"


@dataclass(frozen=True)
class TorusDomain:
    """Unit torus, fundamental domain [0, 1)^2, periodic in both axes."""

    def descriptor(self) -> str:
        return "torus"


@dataclass(frozen=True)
class FieldSample:
    """One realization: frequencies plus drawn Gaussian coefficients.

    Evaluation formula (kappa the measure's exponent factor, s = freq_scale):

        f(x) = origin_coeff * sqrt(w0)
             + sum_k sqrt(W_k) * (a_k cos(kappa*s*<xi_k, x>)
                                  + b_k sin(kappa*s*<xi_k, x>))

    with W_k the total mass of the antipodal pair {xi_k, -xi_k} and xi_k the
    lexicographic-max representative.
    """

    measure: SpectralMeasure
    reps: np.ndarray          # (m, 2) pair representatives
    pair_weights: np.ndarray  # (m,) total pair masses
    coeff_a: np.ndarray
    coeff_b: np.ndarray
    origin_weight: float = 0.0
    origin_coeff: float = 0.0
    seed: int | None = None
    stream: int = 0
    freq_scale: float = 1.0

    def __post_init__(self):
        for arr in (self.reps, self.pair_weights, self.coeff_a, self.coeff_b):
            arr.setflags(write=False)

    @property
    def frequencies(self) -> np.ndarray:
        """(m, 2) angular frequency vectors kappa * freq_scale * xi_k."""
        return self.measure.kappa_value * self.freq_scale * self.reps

    @property
    def max_frequency(self) -> float:
        if len(self.reps) == 0:
            return 0.0
        return float(np.hypot(*self.frequencies.T).max())

    def min_wavelength(self) -> float:
        fmax = self.max_frequency
        return math.inf if fmax == 0.0 else 2.0 * math.pi / fmax

    def amplitudes(self) -> np.ndarray:
        return np.sqrt(self.pair_weights)

    def with_coeffs(self, coeff_a, coeff_b, origin_coeff=None) -> "FieldSample":
        return FieldSample(
            measure=self.measure, reps=self.reps, pair_weights=self.pair_weights,
            coeff_a=np.asarray(coeff_a, dtype=float),
            coeff_b=np.asarray(coeff_b, dtype=float),
            origin_weight=self.origin_weight,
            origin_coeff=self.origin_coeff if origin_coeff is None else float(origin_coeff),
            seed=None, stream=0, freq_scale=self.freq_scale)


@dataclass
class ScalarGrid:
    """Field values (and optional derivative grids) on a regular lattice.

    values[i, j] is the field at (xs[i], ys[j]).
    """

    domain: object
    h: float
    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray
    d1: np.ndarray | None = None
    d2: np.ndarray | None = None
    d11: np.ndarray | None = None
    d12: np.ndarray | None = None
    d22: np.ndarray | None = None
    seed: int | None = None
    kappa: str = "two_pi"
    meta: dict = field(default_factory=dict)

    @property
    def periodic(self) -> bool:
        return isinstance(self.domain, TorusDomain)


def _philox(seed: int, stream: int) -> np.random.Generator:
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, stream & 0xFFFFFFFFFFFFFFFF],
                   dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def sample(rho: SpectralMeasure, seed: int, stream: int = 0,
           freq_scale: float = 1.0) -> FieldSample:
    """Draw one field realization; deterministic in (seed, stream)."""
    reps, pw, w0 = antipodal_pairs(rho)
    m = len(pw)
    coeffs = _philox(seed, stream).standard_normal(2 * m + 1)
    return FieldSample(
        measure=rho, reps=reps, pair_weights=pw,
        coeff_a=coeffs[0:2 * m:2].copy(), coeff_b=coeffs[1:2 * m:2].copy(),
        origin_weight=w0, origin_coeff=float(coeffs[2 * m]),
        seed=seed, stream=stream, freq_scale=freq_scale)


def inject_sample(rho: SpectralMeasure, coeffs, origin_coeff: float = 0.0,
                  freq_scale: float = 1.0) -> FieldSample:
    """Bypass the RNG with explicit (a_k, b_k) pairs, in canonical pair order.

    Analysis/test hook: canonical order is lexicographically descending
    representatives (see measures.antipodal_pairs).
    """
    reps, pw, w0 = antipodal_pairs(rho)
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (len(pw), 2):
        raise ValueError(f"expected {(len(pw), 2)} coefficient array, got {coeffs.shape}")
    return FieldSample(
        measure=rho, reps=reps, pair_weights=pw,
        coeff_a=coeffs[:, 0].copy(), coeff_b=coeffs[:, 1].copy(),
        origin_weight=w0, origin_coeff=float(origin_coeff),
        seed=None, stream=0, freq_scale=freq_scale)


def evaluate(s: FieldSample, x, order: int = 0):
    """Value / (value, gradient) / (value, gradient, Hessian) at a point."""
    x = np.asarray(x, dtype=float)
    C = s.frequencies
    amp = s.amplitudes()
    ph = C @ x
    ca, sa = np.cos(ph), np.sin(ph)
    wa, wb = amp * s.coeff_a, amp * s.coeff_b
    val = float(ca @ wa + sa @ wb) + s.origin_coeff * math.sqrt(s.origin_weight)
    if order == 0:
        return val
    trig = wb * ca - wa * sa          # d/dphase of each pair term
    grad = C.T @ trig
    if order == 1:
        return val, grad
    curv = -(wa * ca + wb * sa)       # second derivative in phase
    hess = np.einsum("k,ki,kj->ij", curv, C, C)
    return val, grad, hess


def evaluate_batch(s: FieldSample, pts, order: int = 0):
    """Vectorized evaluation at an (N, 2) array of points."""
    pts = np.asarray(pts, dtype=float)
    C = s.frequencies
    amp = s.amplitudes()
    ph = pts @ C.T                    # (N, m)
    ca, sa = np.cos(ph), np.sin(ph)
    wa, wb = amp * s.coeff_a, amp * s.coeff_b
    vals = ca @ wa + sa @ wb + s.origin_coeff * math.sqrt(s.origin_weight)
    if order == 0:
        return vals
    grads = (ca * wb - sa * wa) @ C   # (N, 2)
    return vals, grads


def grid_axes(domain, h: float):
    """Lattice axes for a domain; torus spacing is snapped to 1/n."""
    if isinstance(domain, SquareDomain):
        n = int(math.floor(2.0 * domain.R / h + 1e-9)) + 1
        xs = -domain.R + h * np.arange(n)
        return xs, xs.copy(), h
    if isinstance(domain, TorusDomain):
        n = max(2, int(round(1.0 / h)))
        xs = np.arange(n) / n
        return xs, xs.copy(), 1.0 / n
    raise TypeError(f"unknown domain {domain!r}")


def _check_resolution(s: FieldSample, h: float):
    lam = s.min_wavelength()
    if math.isfinite(lam) and h > lam / MIN_POINTS_PER_WAVELENGTH * (1 + 1e-9):
        warnings.warn(
            f"grid spacing {h:.4g} gives fewer than {MIN_POINTS_PER_WAVELENGTH} "
            f"points per minimal wavelength {lam:.4g}", GridTooCoarse,
            stacklevel=3)


def default_spacing(s: FieldSample) -> float:
    """Resolution rule: POINTS_PER_WAVELENGTH nodes per minimal wavelength."""
    lam = s.min_wavelength()
    if not math.isfinite(lam):
        return 0.25
    return lam / POINTS_PER_WAVELENGTH


def evaluate_grid(s: FieldSample, domain, h: float | None = None,
                  order: int = 0) -> ScalarGrid:
    """Evaluate on the lattice of a square or torus domain.

    order 0 fills values; 1 adds first-derivative grids; 2 adds the three
    second-derivative grids.  Accumulates per frequency pair, so memory stays
    at a few lattice-sized buffers.
    """
    if h is None:
        h = default_spacing(s)
    if h <= 0:
        raise ValueError("h must be positive")
    _check_resolution(s, h)
    xs, ys, h_eff = grid_axes(domain, h)
    C = s.frequencies
    amp = s.amplitudes()
    wa, wb = amp * s.coeff_a, amp * s.coeff_b

    # separability: cos(c1 x + c2 y) splits into outer products of the 1-D
    # cos/sin tables, so every jet grid is one matrix product
    # U (nx, 2m) @ V (2m, ny) instead of a per-pair lattice sweep.
    phx = np.outer(xs, C[:, 0])
    phy = np.outer(ys, C[:, 1])
    cx, sx = np.cos(phx), np.sin(phx)
    cy, sy = np.cos(phy), np.sin(phy)
    U = np.hstack([cx, sx])
    S1 = (wa * cy + wb * sy).T              # pairs along rows
    S2 = (wb * cy - wa * sy).T
    base = s.origin_coeff * math.sqrt(s.origin_weight)

    def combine(top, bottom):
        return U @ np.vstack([top, bottom])

    val = combine(S1, S2) + base
    d1 = d2 = d11 = d12 = d22 = None
    c1 = C[:, 0][:, None]
    c2 = C[:, 1][:, None]
    if order >= 1:
        d1 = combine(c1 * S2, -c1 * S1)
        d2 = combine(c2 * S2, -c2 * S1)
    if order >= 2:
        d11 = combine(-c1 * c1 * S1, -c1 * c1 * S2)
        d12 = combine(-c1 * c2 * S1, -c1 * c2 * S2)
        d22 = combine(-c2 * c2 * S1, -c2 * c2 * S2)

    return ScalarGrid(domain=domain, h=h_eff, xs=xs, ys=ys, values=val,
                      d1=d1, d2=d2, d11=d11, d12=d12, d22=d22,
                      seed=s.seed, kappa=s.measure.kappa,
                      meta={"stream": s.stream, "freq_scale": s.freq_scale})


def grid_from_callable(fn, domain, h: float) -> ScalarGrid:
    """Grid of an arbitrary function fn(X, Y) (vectorized); analysis hook."""
    xs, ys, h_eff = grid_axes(domain, h)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    return ScalarGrid(domain=domain, h=h_eff, xs=xs, ys=ys,
                      values=np.asarray(fn(X, Y), dtype=float))


def cilleruelo_field(seed: int, stream: int = 0) -> FieldSample:
    """Sample of the four-atom axis measure with kappa = 1.

    The result is (1/sqrt(2)) * (xi1 cos x1 + xi2 sin x1 + xi3 cos x2
    + xi4 sin x2); use cilleruelo_amplitudes for the Rayleigh form.
    """
    from .measures import preset
    return sample(preset("cilleruelo", kappa="one"), seed, stream)


def cilleruelo_amplitudes(s: FieldSample):
    """(a1, eta1, a2, eta2) with f = (1/sqrt 2)(a1 cos(x1+eta1) + a2 cos(x2+eta2))."""
    a1 = math.hypot(s.coeff_a[0], s.coeff_b[0])
    a2 = math.hypot(s.coeff_a[1], s.coeff_b[1])
    eta1 = math.atan2(-s.coeff_b[0], s.coeff_a[0])
    eta2 = math.atan2(-s.coeff_b[1], s.coeff_a[1])
    return a1, eta1, a2, eta2


def representation_covariance(s: FieldSample, x, y) -> float:
    """E[f(x) f(y)] computed symbolically from the coefficient structure.

    Independent of the drawn coefficients; equals covariance(rho, x - y) when
    freq_scale is 1.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ph = s.frequencies @ (x - y)
    return float(np.dot(s.pair_weights, np.cos(ph))) + s.origin_weight


def covariance_mc(rho: SpectralMeasure, x, M: int, seed: int):
    """Monte Carlo validation of the sampler against the analytic covariance.

    Returns (mean, stderr) of f(0) * f(x) over M independent samples, sample i
    drawn from the (seed, i) stream.
    """
    if M < 100:
        raise ValueError("need M >= 100")
    reps, pw, w0 = antipodal_pairs(rho)
    m = len(pw)
    amp = np.sqrt(pw)
    C = rho.kappa_value * reps
    x = np.asarray(x, dtype=float)

    def design(pt):
        ph = C @ pt
        u = np.empty(2 * m + 1)
        u[0:2 * m:2] = amp * np.cos(ph)
        u[1:2 * m:2] = amp * np.sin(ph)
        u[2 * m] = math.sqrt(w0)
        return u

    U = np.vstack([design(np.zeros(2)), design(x)])
    prods = np.empty(M)
    for i in range(M):
        coeffs = _philox(seed, i).standard_normal(2 * m + 1)
        v = U @ coeffs
        prods[i] = v[0] * v[1]
    mean = float(prods.mean())
    stderr = float(prods.std(ddof=1) / math.sqrt(M))
    return mean, stderr
