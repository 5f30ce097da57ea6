"""Weakly coupled one-dimensional wells and their delta-interaction limit.

The bent-edge effective model is a Schrödinger operator on the line with a
small compactly supported potential,

    L_delta = -d^2/dx^2 + delta V(x),        <V> = int V dx < 0,

whose single bound state sits at depth O(delta^2).  Rescaling y = delta x
maps it unitarily onto

    M_delta = -d^2/dy^2 + delta^{-1} V(y/delta),

so spec L_delta = delta^2 spec M_delta, and as delta -> 0 the squeezed well
converges to the delta interaction <V> delta_0 with

    M_eff = -d^2/dy^2 + <V> delta_0,
    spec M_eff = {-<V>^2/4} union [0, infinity),
    ground state sqrt(|<V>|/2) exp(<V>|y|/2).

This module solves M_delta by finite differences on a Dirichlet window,
evaluates the effective model in closed form, and compares the quadratic
forms p_delta and p_eff on explicit H^1 test families: the difference is

    p_delta(psi) - p_eff(psi) = int V(x) (psi(delta x)^2 - psi(0)^2) dx,

controlled by C sqrt(delta) ||psi||_{H^1}^2 through the pointwise Sobolev
bound |psi(a)^2 - psi(0)^2| <= 2 ||psi psi'|| sqrt(|a|).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import make_interp_spline
from scipy.linalg import eigh_tridiagonal

from .curved import CurvatureProfile, LongitudinalProfile, bump_envelope
from .degennes import TruncationError, UniversalConstants
from .errors import ConfigError, DataError
from .numerics import composite_line_rule

__all__ = [
    "PotentialProfile",
    "WeakCouplingResult",
    "EffectiveSpectrum",
    "FormComparisonReport",
    "ConvergenceFit",
    "square_well",
    "bump_potential",
    "tabulated_potential",
    "potential_from_curvature",
    "solve_M_delta",
    "solve_L_delta",
    "effective_spectrum",
    "default_test_family",
    "form_comparison",
    "fit_convergence_exponent",
]

_SWEEP_DELTAS = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)


# ----------------------------------------------------------------------
# Potential profiles
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class PotentialProfile:
    """Compactly supported potential V with its delta-interaction mass <V>.

    ``well`` is the exact piecewise-constant square well (the only
    discontinuous member, kept analytic rather than splined); ``table``
    covers sampled continuous potentials.  ``mean`` is int V dx -- the
    strength of the limiting delta interaction -- and ``abs_moment_half``
    is int |V(x)| sqrt(|x|) dx, the constant in the sqrt(delta) form
    comparison envelope.
    """

    kind: str
    depth: float
    half_width: float
    center: float
    x_lo: float
    x_hi: float
    mean: float
    abs_moment_half: float
    _spline: object
    _antiderivative: object

    def value_at(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "well":
            inside = np.abs(x - self.center) <= self.half_width
            return np.where(inside, self.depth, 0.0)
        out = np.zeros_like(x)
        inside = (x > self.x_lo) & (x < self.x_hi)
        if np.any(inside):
            out[inside] = self._spline(x[inside])
        return out

    def _cumulative(self, x: np.ndarray) -> np.ndarray:
        clipped = np.clip(x, self.x_lo, self.x_hi)
        if self.kind == "well":
            return self.depth * (clipped - self.x_lo)
        return self._antiderivative(clipped)

    def cell_average(self, x, width: float) -> np.ndarray:
        """Mean of V over [x - width/2, x + width/2].

        Grid eigensolves sample V through this instead of point values:
        cell averages keep the sampled mass int V dx exact, which a point
        sample of a discontinuous well misses by O(depth * width) with a
        sign set by rounding at the jump.
        """
        x = np.asarray(x, dtype=float)
        half = 0.5 * width
        return (self._cumulative(x + half) - self._cumulative(x - half)) / width

    @property
    def support(self) -> tuple[float, float]:
        return (self.x_lo, self.x_hi)


def _abs_half_moment(profile_values, nodes, weights) -> float:
    return float(weights @ (np.abs(profile_values) * np.sqrt(np.abs(nodes))))


def _support_edges(x_lo: float, x_hi: float) -> list[float]:
    # Split at 0 where sqrt(|x|) kinks, so the moment rule stays accurate.
    if x_lo < 0.0 < x_hi:
        return [x_lo, 0.0, x_hi]
    return [x_lo, x_hi]


def square_well(mean: float = -2.0, *, half_width: float = 1.0,
                center: float = 0.0) -> PotentialProfile:
    """Square well V = mean/(2 half_width) on [center-hw, center+hw]."""
    if half_width <= 0.0:
        raise ConfigError(f"half_width must be positive, got {half_width}")
    depth = mean / (2.0 * half_width)
    x_lo, x_hi = center - half_width, center + half_width
    nodes, weights = composite_line_rule(_support_edges(x_lo, x_hi))
    moment = _abs_half_moment(np.full_like(nodes, depth), nodes, weights)
    return PotentialProfile(
        kind="well", depth=depth, half_width=float(half_width),
        center=float(center), x_lo=x_lo, x_hi=x_hi, mean=float(mean),
        abs_moment_half=moment, _spline=None, _antiderivative=None)


def tabulated_potential(x, v) -> PotentialProfile:
    """Continuous potential from samples vanishing at the window edges."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if x.ndim != 1 or x.shape != v.shape or x.size < 8:
        raise DataError(
            "potential table needs two matching 1-d arrays with >= 8 samples")
    if not np.all(np.diff(x) > 0.0):
        raise DataError("potential samples must be strictly increasing in x")
    scale = float(np.max(np.abs(v)))
    if scale > 0.0 and max(abs(v[0]), abs(v[-1])) > 1e-12 * scale:
        raise DataError(
            "potential must vanish at the sample window edges (it is "
            "extended by zero outside)")
    spline = make_interp_spline(x, v, k=min(5, x.size - 1))
    nodes, weights = composite_line_rule(_support_edges(float(x[0]), float(x[-1])))
    vals = spline(nodes)
    return PotentialProfile(
        kind="table", depth=float(np.min(vals)), half_width=0.0,
        center=0.5 * float(x[0] + x[-1]), x_lo=float(x[0]), x_hi=float(x[-1]),
        mean=float(weights @ vals),
        abs_moment_half=_abs_half_moment(vals, nodes, weights),
        _spline=spline, _antiderivative=spline.antiderivative())


def bump_potential(mean: float = -2.0, *, radius: float = 1.0,
                   center: float = 0.0, n_samples: int = 2001) -> PotentialProfile:
    """Smooth single-sign mollifier bump with prescribed int V dx."""
    if radius <= 0.0:
        raise ConfigError(f"bump radius must be positive, got {radius}")
    u = np.linspace(-1.0, 1.0, n_samples)
    core = np.zeros_like(u)
    interior = np.abs(u) < 1.0
    core[interior] = np.exp(-1.0 / (1.0 - u[interior] ** 2))
    raw = tabulated_potential(center + radius * u, core)
    return tabulated_potential(center + radius * u, core * (mean / raw.mean))


def potential_from_curvature(curvature: CurvatureProfile,
                             constants: UniversalConstants) -> PotentialProfile:
    """The bent-edge effective potential V = -c1 kappa."""
    return tabulated_potential(curvature.samples_s,
                               -constants.c1 * curvature.samples_kappa)


# ----------------------------------------------------------------------
# Dirichlet-window eigensolves
# ----------------------------------------------------------------------

def _dirichlet_ground(potential: np.ndarray, h: float) -> tuple[float, np.ndarray]:
    """Lowest Dirichlet eigenpair of -u'' + potential u on the interior grid."""
    diag = 2.0 / (h * h) + potential
    off = np.full(potential.size - 1, -1.0 / (h * h))
    vals, vecs = eigh_tridiagonal(diag, off, select="i", select_range=(0, 0))
    u = vecs[:, 0]
    u = u / math.sqrt(float(np.sum(u * u)) * h)
    if u[u.size // 2] < 0.0:
        u = -u
    return float(vals[0]), u


def _refined_count(n: int, width: float, feature: float) -> int:
    """Smallest odd node count >= n whose step resolves ``feature``/8."""
    if feature <= 0.0:
        return n if n % 2 == 1 else n + 1
    target = feature / 8.0
    needed = int(math.ceil(width / target)) + 1
    n_eff = max(n, needed)
    return n_eff if n_eff % 2 == 1 else n_eff + 1


@dataclass(frozen=True)
class WeakCouplingResult:
    """Ground state of the squeezed-well operator M_delta on a window.

    ``nu`` is the bottom Dirichlet eigenvalue, ``l_value`` = delta^2 nu the
    corresponding eigenvalue of the unscaled operator L_delta, and
    ``effective`` = -<V>^2/4 the delta-interaction limit.  ``bound`` is
    False when no negative eigenvalue exists (repulsive or vanishing V):
    that is a result, not an error.
    """

    delta: float
    nu: float
    effective: float
    gap: float          # nu - effective (signed; -> 0 from above)
    l_value: float      # delta^2 nu
    bound: bool
    window: float
    n_effective: int
    grid: np.ndarray
    ground_state: np.ndarray
    tail_mass: float


def solve_M_delta(profile: PotentialProfile, delta: float, *,
                  window: float | None = None,
                  n: int = 16001) -> WeakCouplingResult:
    """Finite-difference ground state of M_delta = -d^2 + V(y/delta)/delta.

    The Dirichlet window defaults to Y = 40/|<V>| (twenty decay lengths of
    the limiting bound state); the step is refined automatically so the
    rescaled well, of width delta * supp V, is resolved by at least eight
    nodes.  Raises a truncation error when the window cannot hold the
    bound state's tails at 1e-10, or when the computed ground state still
    touches the wall.
    """
    if delta <= 0.0:
        raise ConfigError(f"delta must be positive, got {delta}")
    support = max(abs(profile.x_lo), abs(profile.x_hi))
    if window is None:
        if profile.mean < 0.0:
            window = 40.0 / abs(profile.mean)
        else:
            # No bound state to resolve; any box clear of the well works.
            window = max(20.0, 4.0 * support)
    if window <= 0.0:
        raise ConfigError(f"window must be positive, got {window}")
    if profile.mean < 0.0:
        tail = math.exp(profile.mean * window) / abs(profile.mean)
        if tail > 1e-10:
            raise TruncationError(
                f"window {window:.3g} holds only exp({profile.mean:.3g} * Y) "
                f"= {tail:.3e} of the bound-state tail; need <= 1e-10")

    if delta * support >= window:
        raise ConfigError(
            f"rescaled support delta*supp V = {delta * support:.3g} does "
            f"not fit in the window {window:.3g}")
    n_eff = _refined_count(n, 2.0 * window,
                           delta * (profile.x_hi - profile.x_lo) / 2.0)
    y = np.linspace(-window, window, n_eff)
    h = y[1] - y[0]
    inner = y[1:-1]
    w_vals = profile.cell_average(inner / delta, h / delta) / delta
    nu, u = _dirichlet_ground(w_vals, h)

    bound = nu < 0.0
    outer = int(0.05 * u.size)
    tail_mass = float(np.sum(u[:outer] ** 2) + np.sum(u[-outer:] ** 2)) * h
    if bound and tail_mass > 1e-8:
        raise TruncationError(
            f"ground state carries mass {tail_mass:.3e} in the outer 10% "
            "of the window; enlarge it")
    effective = -profile.mean ** 2 / 4.0
    return WeakCouplingResult(
        delta=delta,
        nu=nu,
        effective=effective,
        gap=nu - effective,
        l_value=delta * delta * nu,
        bound=bound,
        window=float(window),
        n_effective=n_eff,
        grid=inner,
        ground_state=u,
        tail_mass=tail_mass,
    )


def solve_L_delta(profile: PotentialProfile, delta: float, *,
                  window: float, n: int) -> float:
    """Lowest Dirichlet eigenvalue of L_delta = -d^2 + delta V directly.

    Exists to check the scaling covariance spec L = delta^2 spec M on
    matched windows; the production path is solve_M_delta.
    """
    if delta <= 0.0:
        raise ConfigError(f"delta must be positive, got {delta}")
    if window <= 0.0:
        raise ConfigError(f"window must be positive, got {window}")
    n_eff = _refined_count(n, 2.0 * window,
                           (profile.x_hi - profile.x_lo) / 2.0)
    x = np.linspace(-window, window, n_eff)
    h = x[1] - x[0]
    value, _ = _dirichlet_ground(delta * profile.cell_average(x[1:-1], h), h)
    return value


# ----------------------------------------------------------------------
# Effective delta-interaction model
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class EffectiveSpectrum:
    """Spectrum of -d^2/dy^2 + <V> delta_0: one bound state iff <V> < 0."""

    mean: float
    bound: bool
    eigenvalue: float       # -<V>^2/4 when bound, nan otherwise
    essential_min: float    # 0.0: the continuous spectrum is [0, infinity)

    def ground_state_at(self, y) -> np.ndarray:
        """Normalized even profile sqrt(|<V>|/2) exp(<V>|y|/2)."""
        if not self.bound:
            raise ConfigError(
                f"<V> = {self.mean:.6g} >= 0: the delta interaction has no "
                "bound state")
        y = np.asarray(y, dtype=float)
        return math.sqrt(-self.mean / 2.0) * np.exp(0.5 * self.mean * np.abs(y))


def effective_spectrum(profile: PotentialProfile) -> EffectiveSpectrum:
    """Closed-form spectrum of the limiting delta interaction."""
    bound = profile.mean < 0.0
    return EffectiveSpectrum(
        mean=profile.mean,
        bound=bound,
        eigenvalue=-profile.mean ** 2 / 4.0 if bound else float("nan"),
        essential_min=0.0,
    )


# ----------------------------------------------------------------------
# Form comparison on H^1 test families
# ----------------------------------------------------------------------

def default_test_family(count: int = 20) -> list[LongitudinalProfile]:
    """Deterministic family of normalized smooth bumps straddling 0."""
    centers = (-1.5, -0.7, 0.0, 0.4, 1.1)
    radii = (0.6, 0.9, 1.3, 1.8, 2.5)
    return [
        bump_envelope(center=centers[i % 5], radius=radii[(i * 3 + i // 5) % 5])
        for i in range(count)
    ]


@dataclass(frozen=True)
class FormComparisonReport:
    """Worst H^1-relative defect between p_delta and p_eff over a family.

    defect(psi) = int V(x) (psi(delta x)^2 - psi(0)^2) dx -- the kinetic
    terms cancel exactly -- and each ratio divides by ||psi||_{H^1}^2.
    ``envelope_constant`` is the fitted C in defect <= C sqrt(delta).
    """

    delta: float
    max_ratio: float
    ratios: tuple
    defects: tuple
    envelope_constant: float


def form_comparison(profile: PotentialProfile, delta: float,
                    test_functions) -> FormComparisonReport:
    """Compare the squeezed-well and delta-interaction quadratic forms."""
    if delta <= 0.0:
        raise ConfigError(f"delta must be positive, got {delta}")
    if not test_functions:
        raise DataError("form comparison needs at least one test function")
    defects = []
    ratios = []
    for psi in test_functions:
        edges = [profile.x_lo]
        for kink in sorted(getattr(psi, "kinks", ())):
            mapped = kink / delta
            if profile.x_lo < mapped < profile.x_hi:
                edges.append(mapped)
        edges.append(profile.x_hi)
        nodes, weights = composite_line_rule(edges)
        v_vals = profile.value_at(nodes)
        psi_sq = psi.value(delta * nodes) ** 2
        peak_sq = float(psi.value(np.array([0.0]))[0] ** 2)
        defect = float(weights @ (v_vals * psi_sq)) - profile.mean * peak_sq
        h1 = psi.norm_sq + psi.prime_norm_sq
        defects.append(defect)
        ratios.append(abs(defect) / h1)
    max_ratio = max(ratios)
    return FormComparisonReport(
        delta=delta,
        max_ratio=max_ratio,
        ratios=tuple(ratios),
        defects=tuple(defects),
        envelope_constant=max_ratio / math.sqrt(delta),
    )


# ----------------------------------------------------------------------
# Convergence of nu(delta)
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class ConvergenceFit:
    """Log-log fit |nu(delta) - effective| ~ constant * delta^exponent."""

    exponent: float
    constant: float
    deltas: tuple
    gaps: tuple


def fit_convergence_exponent(results) -> ConvergenceFit:
    """Fit the convergence rate of nu(delta) toward -<V>^2/4."""
    pts = sorted((r.delta, abs(r.gap)) for r in results if r.bound)
    if len(pts) < 3:
        raise DataError(
            f"exponent fit needs >= 3 bound-state results, got {len(pts)}")
    deltas = np.array([p[0] for p in pts])
    gaps = np.array([p[1] for p in pts])
    if np.any(np.diff(deltas) <= 0.0):
        raise DataError("sweep deltas must be distinct")
    if np.any(gaps <= 0.0):
        raise DataError("every sweep point needs a nonzero gap to fit a rate")
    design = np.column_stack([np.ones_like(deltas), np.log(deltas)])
    coef, *_ = np.linalg.lstsq(design, np.log(gaps), rcond=None)
    return ConvergenceFit(
        exponent=float(coef[1]),
        constant=float(math.exp(coef[0])),
        deltas=tuple(float(d) for d in deltas),
        gaps=tuple(float(g) for g in gaps),
    )
