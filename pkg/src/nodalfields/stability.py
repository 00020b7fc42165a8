"""Stability gauges, coupled sampling, and the perturbation sandwich.

A field is beta-stable on a region when max(|f|, |grad f|) stays above beta
everywhere; stable nodal patterns survive uniform perturbations smaller than
beta, so for coupled draws that are close in C^1 the counts of the perturbed
field at R -/+ 1 must sandwich the count of the reference field at R.  All
gauges are grid minima/maxima (an upper estimate of the true min; h recorded).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainMismatch
from .fields import (
    FieldSample,
    ScalarGrid,
    SquareDomain,
    _philox,
    default_spacing,
    evaluate_grid,
    inject_sample,
)
from .measures import SpectralMeasure, antipodal_pairs, preset
from .topology import count_components_plane


@dataclass(frozen=True)
class StabilityProfile:
    """Grid min of max(|f|, |grad f|) plus the grid C^2 norm."""

    minmax: float
    c2_norm: float
    h: float
    domain_descriptor: str

    def to_dict(self):
        return {"kind": "stability_profile", "minmax": self.minmax,
                "c2_norm": self.c2_norm, "h": self.h,
                "domain": self.domain_descriptor}


def stability_profile(s: FieldSample, domain, h: float | None = None) -> StabilityProfile:
    if h is None:
        h = default_spacing(s)
    g = evaluate_grid(s, domain, h, order=2)
    grad = np.hypot(g.d1, g.d2)
    minmax = float(np.maximum(np.abs(g.values), grad).min())
    c2 = max(float(np.abs(arr).max())
             for arr in (g.values, g.d1, g.d2, g.d11, g.d12, g.d22))
    return StabilityProfile(minmax=minmax, c2_norm=c2, h=g.h,
                            domain_descriptor=g.domain.descriptor())


def _c1_distance_grids(g1: ScalarGrid, g2: ScalarGrid) -> float:
    if g1.values.shape != g2.values.shape or abs(g1.h - g2.h) > 1e-12 \
            or g1.domain.descriptor() != g2.domain.descriptor():
        raise DomainMismatch("grids do not share a domain")
    return max(float(np.abs(g1.values - g2.values).max()),
               float(np.abs(g1.d1 - g2.d1).max()),
               float(np.abs(g1.d2 - g2.d2).max()))


def c1_distance(s1: FieldSample, s2: FieldSample, domain,
                h: float | None = None) -> float:
    """Grid C^1 distance: max over |f1-f2|, |d1 f1-d1 f2|, |d2 f1-d2 f2|."""
    if h is None:
        h = min(default_spacing(s1), default_spacing(s2))
    g1 = evaluate_grid(s1, domain, h, order=1)
    g2 = evaluate_grid(s2, domain, h, order=1)
    return _c1_distance_grids(g1, g2)


# ---------------------------------------------------------------------------
# Coupling

def _pair_distance(p: np.ndarray, q: np.ndarray):
    """Distance between antipodal pairs and the aligning sign for q."""
    d_plus = float(np.hypot(p[0] - q[0], p[1] - q[1]))
    d_minus = float(np.hypot(p[0] + q[0], p[1] + q[1]))
    return (d_plus, 1.0) if d_plus <= d_minus else (d_minus, -1.0)


def _transport_plan(reps0, pw0, reps1, pw1):
    """Greedy nearest matching with mass splitting between two pair lists."""
    entries = []
    cand = []
    for i in range(len(pw0)):
        for j in range(len(pw1)):
            d, sgn = _pair_distance(reps0[i], reps1[j])
            cand.append((d, i, j, sgn))
    cand.sort(key=lambda t: (t[0], t[1], t[2]))
    rem0 = pw0.astype(float).copy()
    rem1 = pw1.astype(float).copy()
    for d, i, j, sgn in cand:
        if rem0[i] <= 1e-15 or rem1[j] <= 1e-15:
            continue
        m = min(rem0[i], rem1[j])
        entries.append((i, j, sgn, m))
        rem0[i] -= m
        rem1[j] -= m
    return entries, rem0, rem1


def coupled_sample(rho0: SpectralMeasure, rho1: SpectralMeasure, seed: int,
                   stream: int = 0, freq_scale: float = 1.0):
    """Draw (f0, f1) with shared Gaussian coefficients on transported mass.

    Antipodal-pair representatives are greedily matched by distance on the
    half-disc (mass splitting allowed); matched mass reuses one coefficient
    pair in both fields, leftover mass gets independent coefficients, so each
    marginal law is exact while the fields decouple only on unmatched mass.
    Identical measures yield identical samples.
    """
    reps0, pw0, w0_0 = antipodal_pairs(rho0)
    reps1, pw1, w0_1 = antipodal_pairs(rho1)
    entries, left0, left1 = _transport_plan(reps0, pw0, reps1, pw1)

    n_draw = 2 * len(entries) + 2 * len(pw0) + 2 * len(pw1) + 3
    z = _philox(seed, stream).standard_normal(n_draw)
    pos = 0

    acc0 = np.zeros((len(pw0), 2))
    acc1 = np.zeros((len(pw1), 2))
    for i, j, sgn, m in entries:
        a, b = z[pos], z[pos + 1]
        pos += 2
        acc0[i, 0] += math.sqrt(m) * a
        acc0[i, 1] += math.sqrt(m) * b
        acc1[j, 0] += math.sqrt(m) * a
        acc1[j, 1] += math.sqrt(m) * sgn * b
    for i in range(len(pw0)):
        if left0[i] > 1e-15:
            acc0[i, 0] += math.sqrt(left0[i]) * z[pos]
            acc0[i, 1] += math.sqrt(left0[i]) * z[pos + 1]
        pos += 2
    for j in range(len(pw1)):
        if left1[j] > 1e-15:
            acc1[j, 0] += math.sqrt(left1[j]) * z[pos]
            acc1[j, 1] += math.sqrt(left1[j]) * z[pos + 1]
        pos += 2

    # origin channel: shared coefficient on the matched mass
    c_shared = z[pos]
    o0 = o1 = 0.0
    m_sh = min(w0_0, w0_1)
    if w0_0 > 0:
        o0 = (math.sqrt(m_sh) * c_shared
              + math.sqrt(w0_0 - m_sh) * z[pos + 1]) / math.sqrt(w0_0)
    if w0_1 > 0:
        o1 = (math.sqrt(m_sh) * c_shared
              + math.sqrt(w0_1 - m_sh) * z[pos + 2]) / math.sqrt(w0_1)

    with np.errstate(invalid="ignore", divide="ignore"):
        c0 = np.where(pw0[:, None] > 0, acc0 / np.sqrt(pw0)[:, None], 0.0)
        c1 = np.where(pw1[:, None] > 0, acc1 / np.sqrt(pw1)[:, None], 0.0)

    f0 = inject_sample(rho0, c0, origin_coeff=o0, freq_scale=freq_scale)
    f1 = inject_sample(rho1, c1, origin_coeff=o1, freq_scale=freq_scale)
    return f0, f1


@dataclass
class SandwichReport:
    M: int
    filtered: int
    violations: int
    beta: float
    R: float

    @property
    def violation_rate(self) -> float:
        return self.violations / self.filtered if self.filtered else 0.0

    def to_dict(self):
        return {"kind": "stability_report", "M": self.M,
                "filtered": self.filtered, "violations": self.violations,
                "violation_rate": self.violation_rate,
                "beta": self.beta, "R": self.R}


def _subcensus(grid: ScalarGrid, R_inner: float) -> int:
    """Interior count on the centered subsquare of an already evaluated grid."""
    R_outer = grid.domain.R
    k = int(round((R_outer - R_inner) / grid.h))
    if abs(k * grid.h - (R_outer - R_inner)) > 1e-9:
        raise DomainMismatch("subsquare is not grid-aligned")
    sl = slice(k, grid.values.shape[0] - k)
    sub = ScalarGrid(domain=SquareDomain(R_inner), h=grid.h,
                     xs=grid.xs[sl], ys=grid.ys[sl],
                     values=grid.values[sl, sl])
    return count_components_plane(sub).interior_components


def sandwich_check(rho0: SpectralMeasure, rho1: SpectralMeasure, R: float,
                   M: int, beta: float, seed: int,
                   h: float | None = None) -> SandwichReport:
    """Fraction of stable-and-close coupled draws violating the count sandwich.

    Filters: min-max of the reference field above 2*beta on the outer square
    (stability) and grid C^1 distance below beta (closeness); beta = inf
    disables both filters.  Among filtered draws the perturbed counts at
    R -/+ 1 must bracket the reference count at R.
    """
    filtered = violations = 0
    for i in range(M):
        f0, f1 = coupled_sample(rho0, rho1, seed, stream=i)
        if h is None:
            h = min(default_spacing(f0), default_spacing(f1))
        outer = SquareDomain(R + 1.0)
        g0 = evaluate_grid(f0, outer, h, order=1)
        g1 = evaluate_grid(f1, outer, h, order=1)
        if math.isfinite(beta):
            minmax = float(np.maximum(np.abs(g0.values),
                                      np.hypot(g0.d1, g0.d2)).min())
            if minmax <= 2.0 * beta:
                continue
            if _c1_distance_grids(g0, g1) >= beta:
                continue
        filtered += 1
        n0_R = _subcensus(g0, R)
        n1_lo = _subcensus(g1, R - 1.0)
        n1_hi = _subcensus(g1, R + 1.0)
        if not (n1_lo <= n0_R <= n1_hi):
            violations += 1
    return SandwichReport(M=M, filtered=filtered, violations=violations,
                          beta=beta, R=R)


# ---------------------------------------------------------------------------
# Deterministic example fields over three antipodal pairs

_AMP2 = 1.0 + 0.8 ** 2 + 1.0  # squared amplitudes of the printed formulas
_SQ = math.sqrt(_AMP2)


def section7_measure(which: str) -> SpectralMeasure:
    if which in ("f", "g"):
        return preset("section7_three_pair")
    if which == "monochromatic_g":
        return preset("section7_monochromatic_six_point")
    raise ValueError("which must be 'f', 'g', or 'monochromatic_g'")


def section7_field(which: str, perturbation=None) -> FieldSample:
    """The deterministic witness fields, exactly injected.

    'f'  = sin x + 0.8 sin 3x + sin y     (many compact components)
    'g'  = sin x + 0.8 sin 3x + 0.2 sin y (none)
    'monochromatic_g' = 2 cos x + cos y    (none; monochromatic measure)

    perturbation: 6 coefficients (eps1..eps6) adding
    eps1 sin x + eps2 cos x + eps3 sin 3x + eps4 cos 3x + eps5 sin y
    + eps6 cos y for the three-pair fields, or 4 coefficients adding
    eps1 sin x + eps2 sin y + eps3 cos((x+y)/sqrt 2) + eps4 sin((x+y)/sqrt 2)
    for the monochromatic one.
    """
    if which in ("f", "g"):
        rho = section7_measure(which)
        # canonical pair order: (1,0) [freq 3x], (1/3,0) [freq x], (0,1/3) [freq y]
        b_y = _SQ if which == "f" else 0.2 * _SQ
        coeffs = np.array([[0.0, _SQ], [0.0, _SQ], [0.0, b_y]])
        if perturbation is not None:
            e = np.asarray(perturbation, dtype=float)
            if e.shape != (6,):
                raise ValueError("need 6 perturbation coefficients")
            coeffs = coeffs + np.array([
                [e[3] * _SQ / 0.8, e[2] * _SQ / 0.8],
                [e[1] * _SQ, e[0] * _SQ],
                [e[5] * _SQ, e[4] * _SQ]])
        return inject_sample(rho, coeffs, freq_scale=3.0)

    rho = section7_measure("monochromatic_g")
    sq3 = math.sqrt(3.0)
    # canonical pair order: (1,0), (1/sqrt2,1/sqrt2), (0,1)
    coeffs = np.array([[2.0 * sq3, 0.0], [0.0, 0.0], [sq3, 0.0]])
    if perturbation is not None:
        e = np.asarray(perturbation, dtype=float)
        if e.shape != (4,):
            raise ValueError("need 4 perturbation coefficients")
        coeffs = coeffs + np.array([
            [0.0, e[0] * sq3],
            [e[2] * sq3, e[3] * sq3],
            [0.0, e[1] * sq3]])
    return inject_sample(rho, coeffs, freq_scale=1.0)
