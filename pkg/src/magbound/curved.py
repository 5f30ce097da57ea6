"""Curved half-plane trial states: tubular quadratures and the curvature bound.

A magnetic half-plane whose boundary is gently bent (curvature delta*kappa
with kappa compactly supported) is analyzed in boundary coordinates (s, t):
arc length along the edge and distance from it.  For a product trial state
psi(s, t) = g(s) f_ell(t) -- truncated transverse ground-state profile,
real longitudinal envelope -- the magnetic quadratic form is a sum of
one-dimensional t-quadratures weighted by g^2 and g'^2,

    Q(psi) = int g(s)^2 [P1(b) + P3(b)] ds + int g'(s)^2 P2(b) ds,
    b = delta * kappa(s),

    P1(b) = int (1 - b t) f_ell'(t)^2 dt               (exactly linear in b)
    P2(b) = int f_ell(t)^2 / (1 - b t) dt
    P3(b) = int (xi0 - t + b t^2/2)^2 f_ell(t)^2 / (1 - b t) dt,

with the squared norm N(psi) = int g^2 (n_ell - b m1) ds exactly linear as
well.  Outside the curvature support b = 0 and every integrand freezes, so
the infinite s-integrals reduce to a finite window plus closed-form tails:
the evaluation is a plain quadrature with no asymptotic steps.

To first order in delta the per-s energy slope at b = 0 is the universal
number

    A = int [(xi0-t) t^2 + t (t-xi0)^2] f*^2 - t f*'^2 + theta0 t f*^2 dt
      = -c1 < 0,

so a bend with positive total curvature <kappa> = int kappa ds acts on the
envelope as an attractive one-dimensional delta well of strength
c1 <kappa> delta.  The minimizing exponential envelope certifies

    inf spec <= theta0 - (c1 <kappa> / 2)^2 delta^2 + O(delta^3),

and a least-squares fit of the measured gap against delta^2 recovers the
coefficient (c1 <kappa> / 2)^2.  The effective envelope functional

    F_delta(g) = (1 + C delta) ||g'||^2
                 + delta int (-c1 kappa + C delta kappa^2) g^2 ds

bounds the trial quotient gap from above term by term once C dominates the
curvature-expansion remainders, uniformly in g.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.interpolate import make_interp_spline

from .degennes import (
    CutoffProfile,
    FellProfile,
    HalfLineGrid,
    UniversalConstants,
    build_f_ell,
    solve_h_xi,
)
from .errors import ConfigError, DataError
from .numerics import (
    composite_line_rule,
    fd_derivative,
    gauss_legendre_panels,
    simpson_weights,
)

__all__ = [
    "CurvatureProfile",
    "LongitudinalProfile",
    "TubularTrialState",
    "TubularFormReport",
    "AIdentityReport",
    "EffectiveFormReport",
    "NormInverseReport",
    "CurvedBoundReport",
    "CurvedFitReport",
    "tabulated_curvature",
    "bump_curvature",
    "rescaled_curvature",
    "exponential_envelope",
    "bump_envelope",
    "minimizing_envelope",
    "tube_profile",
    "tubular_state",
    "tubular_form",
    "compute_a_coefficient",
    "effective_form",
    "norm_inverse_expansion",
    "curved_upper_bound",
    "curved_sweep",
    "fit_curvature_coefficient",
]


# ----------------------------------------------------------------------
# Line quadrature shared by every s-integral in this module
# ----------------------------------------------------------------------

_PANELS_PER_UNIT = 12
_PANEL_ORDER = 12


def _line_rule(edges: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes/weights over consecutive segments.

    Every s-integral (curvature moments, window pieces of the tubular
    form, envelope moments) runs through this one rule, so identities
    relating them hold to rounding rather than to resampling error.
    """
    try:
        return composite_line_rule(edges, panels_per_unit=_PANELS_PER_UNIT,
                                   order=_PANEL_ORDER)
    except ValueError as err:
        raise DataError(str(err)) from err


# ----------------------------------------------------------------------
# Curvature profiles
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class CurvatureProfile:
    """Compactly supported curvature kappa, splined from samples.

    ``mean`` is the total curvature int kappa ds (the strength of the
    effective delta well is c1 * mean * delta) and ``square_integral`` is
    int kappa^2 ds; both are evaluated with the same composite
    Gauss-Legendre rule as the tubular form integrals.
    """

    samples_s: np.ndarray
    samples_kappa: np.ndarray
    s_lo: float
    s_hi: float
    mean: float
    square_integral: float
    max_value: float
    _spline: object

    def kappa_at(self, s) -> np.ndarray:
        """Curvature at s (vectorized); identically zero off the support."""
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        inside = (s > self.s_lo) & (s < self.s_hi)
        if np.any(inside):
            out[inside] = self._spline(s[inside])
        return out

    def integral_up_to(self, s) -> np.ndarray:
        """Running integral of kappa from far left up to s (vectorized)."""
        s = np.asarray(s, dtype=float)
        clipped = np.clip(s, self.s_lo, self.s_hi)
        return self._spline.antiderivative()(clipped)

    @property
    def support(self) -> tuple[float, float]:
        return (self.s_lo, self.s_hi)


def tabulated_curvature(s, kappa) -> CurvatureProfile:
    """Build a curvature profile from samples on its support window.

    The samples must be strictly increasing in s and vanish at both window
    edges: the profile is extended by zero outside, and a jump there would
    silently break the exact window/tail split of the tubular form.
    """
    s = np.asarray(s, dtype=float)
    kappa = np.asarray(kappa, dtype=float)
    if s.ndim != 1 or s.shape != kappa.shape or s.size < 8:
        raise DataError(
            "curvature table needs two matching 1-d arrays with >= 8 samples")
    if not np.all(np.diff(s) > 0.0):
        raise DataError("curvature samples must be strictly increasing in s")
    scale = float(np.max(np.abs(kappa)))
    if scale > 0.0 and max(abs(kappa[0]), abs(kappa[-1])) > 1e-12 * scale:
        raise DataError(
            "curvature must vanish at the sample window edges (the profile "
            "is extended by zero outside its support)")
    spline = make_interp_spline(s, kappa, k=min(5, s.size - 1))
    nodes, weights = _line_rule([float(s[0]), float(s[-1])])
    vals = spline(nodes)
    return CurvatureProfile(
        samples_s=s,
        samples_kappa=kappa,
        s_lo=float(s[0]),
        s_hi=float(s[-1]),
        mean=float(weights @ vals),
        square_integral=float(weights @ (vals * vals)),
        max_value=float(max(np.max(vals), np.max(kappa), 0.0)),
        _spline=spline,
    )


def bump_curvature(mean: float = 1.0, *, radius: float = 1.0,
                   center: float = 0.0, n_samples: int = 2001) -> CurvatureProfile:
    """Smooth single-sign bump with prescribed total curvature.

    The mollifier exp(-1/(1-u^2)) is sampled on [-1, 1], splined, and
    scaled so the quadrature value of int kappa ds equals ``mean``: the
    normalization uses the same rule as every consumer of the profile, so
    the prescription is exact rather than approximate.
    """
    if radius <= 0.0:
        raise ConfigError(f"bump radius must be positive, got {radius}")
    if n_samples < 64:
        raise ConfigError(f"bump needs >= 64 samples, got {n_samples}")
    u = np.linspace(-1.0, 1.0, n_samples)
    core = np.zeros_like(u)
    interior = np.abs(u) < 1.0
    core[interior] = np.exp(-1.0 / (1.0 - u[interior] ** 2))
    raw = tabulated_curvature(center + radius * u, core)
    return tabulated_curvature(center + radius * u, core * (mean / raw.mean))


def rescaled_curvature(profile: CurvatureProfile, mean: float) -> CurvatureProfile:
    """Same shape, rescaled so the total curvature equals ``mean``."""
    if profile.mean == 0.0:
        raise ConfigError("cannot rescale a profile with zero total curvature")
    factor = mean / profile.mean
    return tabulated_curvature(profile.samples_s, profile.samples_kappa * factor)


# ----------------------------------------------------------------------
# Longitudinal envelopes
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class LongitudinalProfile:
    """Real envelope g(s) on the line with closed-form norms.

    ``exponential``: g(s) = amplitude sqrt(rate) exp(-rate |s - center|),
    the minimizer of the effective delta-well functional; it has a kink at
    ``center``, recorded in ``kinks`` so quadrature windows split there.

    ``bump``: mollifier supported on [center - radius, center + radius],
    normalized so int g^2 = amplitude^2; smooth, no kinks.

    All integrals factor the amplitude out analytically (``unit_*``
    quantities are for amplitude one), which keeps quadratic functionals
    of the envelope exactly quadratic under amplitude rescaling.
    """

    kind: str
    rate: float
    center: float
    radius: float
    amplitude: float
    unit_prime_norm_sq: float
    unit_peak_sq: float
    _height: float
    kinks: tuple

    @property
    def norm_sq(self) -> float:
        return self.amplitude ** 2

    @property
    def prime_norm_sq(self) -> float:
        return self.amplitude ** 2 * self.unit_prime_norm_sq

    @property
    def peak_sq(self) -> float:
        """g(center)^2."""
        return self.amplitude ** 2 * self.unit_peak_sq

    def scaled(self, factor: float) -> "LongitudinalProfile":
        """The envelope factor * g."""
        return LongitudinalProfile(
            kind=self.kind, rate=self.rate, center=self.center,
            radius=self.radius, amplitude=factor * self.amplitude,
            unit_prime_norm_sq=self.unit_prime_norm_sq,
            unit_peak_sq=self.unit_peak_sq, _height=self._height,
            kinks=self.kinks)

    # -- pointwise values -----------------------------------------------

    def unit_value(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if self.kind == "exponential":
            return math.sqrt(self.rate) * np.exp(-self.rate * np.abs(s - self.center))
        u = (s - self.center) / self.radius
        out = np.zeros_like(u)
        inside = np.abs(u) < 1.0
        out[inside] = self._height * np.exp(-1.0 / (1.0 - u[inside] ** 2))
        return out

    def unit_prime(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if self.kind == "exponential":
            return -self.rate * np.sign(s - self.center) * self.unit_value(s)
        u = (s - self.center) / self.radius
        out = np.zeros_like(u)
        inside = np.abs(u) < 1.0
        ui = u[inside]
        core = self._height * np.exp(-1.0 / (1.0 - ui ** 2))
        out[inside] = core * (-2.0 * ui / (1.0 - ui ** 2) ** 2) / self.radius
        return out

    def value(self, s) -> np.ndarray:
        return self.amplitude * self.unit_value(s)

    def prime(self, s) -> np.ndarray:
        return self.amplitude * self.unit_prime(s)


def exponential_envelope(rate: float, *, center: float = 0.0,
                         amplitude: float = 1.0) -> LongitudinalProfile:
    """Normalized two-sided exponential sqrt(rate) exp(-rate |s - center|)."""
    if rate <= 0.0:
        raise ConfigError(f"exponential envelope needs rate > 0, got {rate}")
    return LongitudinalProfile(
        kind="exponential", rate=float(rate), center=float(center),
        radius=0.0, amplitude=float(amplitude),
        unit_prime_norm_sq=float(rate) ** 2, unit_peak_sq=float(rate),
        _height=0.0, kinks=(float(center),))


def bump_envelope(*, center: float = 0.0, radius: float = 1.0,
                  amplitude: float = 1.0) -> LongitudinalProfile:
    """Smooth compactly supported envelope with int g^2 = amplitude^2."""
    if radius <= 0.0:
        raise ConfigError(f"bump radius must be positive, got {radius}")
    nodes, weights = _line_rule([-1.0, 1.0])
    core = np.exp(-1.0 / (1.0 - nodes ** 2))
    norm_unit = radius * float(weights @ (core * core))
    height = 1.0 / math.sqrt(norm_unit)
    dcore = core * (-2.0 * nodes / (1.0 - nodes ** 2) ** 2)
    prime_sq = float(weights @ (dcore * dcore)) * height ** 2 / radius
    return LongitudinalProfile(
        kind="bump", rate=0.0, center=float(center), radius=float(radius),
        amplitude=float(amplitude),
        unit_prime_norm_sq=prime_sq,
        unit_peak_sq=(height * math.exp(-1.0)) ** 2,
        _height=height, kinks=())


def minimizing_envelope(curvature: CurvatureProfile, delta: float,
                        constants: UniversalConstants) -> LongitudinalProfile:
    """Ground state of the effective delta well: rate c1 <kappa> delta / 2.

    Exists only for bends with positive total curvature; otherwise the
    effective well is repulsive or absent and there is nothing to minimize.
    """
    rate = 0.5 * constants.c1 * curvature.mean * delta
    if rate <= 0.0:
        raise ConfigError(
            "minimizing envelope needs positive total curvature and delta "
            f"(got int kappa ds = {curvature.mean:.6g}, delta = {delta:.6g})")
    return exponential_envelope(rate)


# ----------------------------------------------------------------------
# Transverse profile and trial state
# ----------------------------------------------------------------------

def tube_profile(delta: float, constants: UniversalConstants, *,
                 rho: float = 0.5, h: float = 2e-3, t_pad: float = 4.0,
                 cutoff_kind: str = "smooth") -> FellProfile:
    """Transverse profile f_ell at truncation ell = delta^(-rho).

    Mirrors the grid policy of the corner assembly: the step is tightened
    for short ell (the cutoff transition narrows with ell) and the grid
    is extended beyond ell so the Gaussian tail never touches the
    artificial Dirichlet wall.
    """
    if delta <= 0.0:
        raise ConfigError(f"delta must be positive, got {delta}")
    if not 0.0 < rho < 1.0:
        raise ConfigError(f"truncation exponent rho must lie in (0,1), got {rho}")
    ell = delta ** (-rho)
    if ell < 2.0:
        raise ConfigError(
            f"truncation length ell = delta^-rho = {ell:.3f} < 2: the "
            "cutoff would overlap the profile core; decrease delta or rho")
    h_eff = min(h, ell / 4000.0)
    t_max = max(20.0, ell + t_pad)
    n = 2 * int(math.ceil(t_max / (2.0 * h_eff))) + 1
    grid = HalfLineGrid(t_max=t_max, n=n, scheme="fd4")
    solution = solve_h_xi(constants.xi0, grid)
    return build_f_ell(solution, CutoffProfile(ell=ell, kind=cutoff_kind))


@dataclass(frozen=True)
class TubularTrialState:
    """Product trial state g(s) f_ell(t) with transverse functionals.

    The envelope must be L^2-normalized; the transverse factor is the
    truncated profile.  The stored scalars are the t-integrals entering
    the per-s decomposition of the tubular form.
    """

    envelope: LongitudinalProfile
    transverse: FellProfile
    kinetic: float         # int f_ell'^2
    kinetic_moment: float  # int t f_ell'^2
    potential: float       # int (t - xi0)^2 f_ell^2
    transverse_norm: float  # int f_ell^2
    first_moment: float    # int t f_ell^2
    a_moment: float        # int [t^2 (xi0-t) + t (xi0-t)^2] f_ell^2

    @property
    def flat_energy(self) -> float:
        """Per-s energy of the straight tube: int f_ell'^2 + (t-xi0)^2 f_ell^2."""
        return self.kinetic + self.potential

    @property
    def a_coefficient(self) -> float:
        """Quadrature estimate of the curvature-response coefficient.

        -int t f_ell'^2 + int [t^2(xi0-t) + t(xi0-t)^2] f_ell^2
        + theta0 int t f_ell^2, which converges to -c1 as ell grows.
        """
        return (-self.kinetic_moment + self.a_moment
                + self.transverse.solution.mu * self.first_moment)


def tubular_state(envelope: LongitudinalProfile,
                  transverse: FellProfile) -> TubularTrialState:
    """Assemble the product trial state and its transverse functionals."""
    if abs(envelope.norm_sq - 1.0) > 1e-9:
        raise ConfigError(
            f"envelope must be L^2-normalized: int g^2 = {envelope.norm_sq!r}")
    grid = transverse.grid
    t = grid.nodes
    w = simpson_weights(grid.n, grid.h)
    f = transverse.values
    fp = fd_derivative(f, grid.h, order=4)
    f2 = f * f
    fp2 = fp * fp
    xi0 = transverse.solution.xi
    return TubularTrialState(
        envelope=envelope,
        transverse=transverse,
        kinetic=float(w @ fp2),
        kinetic_moment=float(w @ (t * fp2)),
        potential=float(w @ ((t - xi0) ** 2 * f2)),
        transverse_norm=float(w @ f2),
        first_moment=float(w @ (t * f2)),
        a_moment=float(w @ ((t * t * (xi0 - t) + t * (xi0 - t) ** 2) * f2)),
    )


# ----------------------------------------------------------------------
# Tubular quadratic form
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class TubularFormReport:
    """Exact tubular form of a product state, split into its three terms.

    total = transverse_energy + longitudinal_kinetic + momentum_potential,
    each an exact quadrature (finite curvature window plus closed-form
    straight tails).  ``transverse_model`` restates the transverse term
    through its exact linear-in-curvature form; the residual is rounding.
    ``norm_model`` is the first-order norm 1 - delta xi0 int kappa g^2
    (for a normalized envelope); its defect against the exact ``norm_sq``
    measures only profile truncation, not an expansion error.
    """

    delta: float
    ell: float
    total: float
    transverse_energy: float
    longitudinal_kinetic: float
    momentum_potential: float
    transverse_model: float
    norm_sq: float
    norm_model: float
    quotient: float
    kappa_g2: float        # int kappa g^2
    kappa_sq_g2: float     # int kappa^2 g^2
    window_norm: float     # int_window g^2
    window_prime: float    # int_window g'^2
    tube_margin: float     # 1 - delta max(kappa,0) ell
    theta0_grid: float
    a_coefficient: float


def _window_rule(curvature: CurvatureProfile,
                 envelope: LongitudinalProfile) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature over the curvature support, split at envelope kinks."""
    edges = [curvature.s_lo]
    for kink in sorted(envelope.kinks):
        if curvature.s_lo < kink < curvature.s_hi:
            edges.append(kink)
    edges.append(curvature.s_hi)
    return _line_rule(edges)


def tubular_form(curvature: CurvatureProfile, state: TubularTrialState,
                 delta: float) -> TubularFormReport:
    """Evaluate the tubular quadratic form and norm of the product state.

    Refuses geometries where the tubular Jacobian 1 - delta kappa t drops
    to 1/2 or below somewhere in the truncated tube: past that point the
    coordinates degenerate and the quadratures stop meaning anything.
    """
    prof = state.transverse
    sol = prof.solution
    xi0 = sol.xi
    ell = prof.ell
    margin = 1.0 - delta * max(0.0, curvature.max_value) * ell
    if margin < 0.5:
        raise ConfigError(
            f"tube too wide: min Jacobian 1 - delta*kappa*t = {margin:.4f} "
            "< 0.5 on the truncated tube; decrease delta or the truncation "
            "exponent rho")

    g = state.envelope
    t = prof.grid.nodes
    wt = simpson_weights(prof.grid.n, prof.grid.h)
    f2 = prof.values ** 2
    wf2 = wt * f2

    snodes, swts = _window_rule(curvature, g)
    kap = curvature.kappa_at(snodes)
    g2 = g.value(snodes) ** 2
    gp2 = g.prime(snodes) ** 2

    window_norm = float(swts @ g2)
    window_prime = float(swts @ gp2)
    kappa_g2 = float(swts @ (kap * g2))
    kappa_sq_g2 = float(swts @ (kap * kap * g2))

    # Per-s transverse quadratures inside the curvature window.  The
    # Jacobian is replaced by 1 where the profile vanishes: those nodes
    # contribute nothing, and beyond the truncation the Jacobian may
    # cross zero without affecting the state.
    transverse_energy = 0.0
    longitudinal_kinetic = 0.0
    momentum_potential = 0.0
    for i in range(snodes.size):
        b = delta * kap[i]
        denom = np.where(f2 > 0.0, 1.0 - b * t, 1.0)
        momentum = xi0 - t + 0.5 * b * t * t
        transverse_energy += swts[i] * g2[i] * (state.kinetic - b * state.kinetic_moment)
        longitudinal_kinetic += swts[i] * gp2[i] * float(np.sum(wf2 / denom))
        momentum_potential += swts[i] * g2[i] * float(
            np.sum(wf2 * momentum * momentum / denom))

    # Straight tails: outside the window kappa = 0, so the per-s factors
    # are the flat constants and the envelope integrals have closed forms.
    transverse_energy += state.kinetic * (g.norm_sq - window_norm)
    longitudinal_kinetic += state.transverse_norm * (g.prime_norm_sq - window_prime)
    momentum_potential += state.potential * (g.norm_sq - window_norm)

    total = transverse_energy + longitudinal_kinetic + momentum_potential
    norm_sq = state.transverse_norm * g.norm_sq - delta * state.first_moment * kappa_g2
    return TubularFormReport(
        delta=delta,
        ell=ell,
        total=total,
        transverse_energy=transverse_energy,
        longitudinal_kinetic=longitudinal_kinetic,
        momentum_potential=momentum_potential,
        transverse_model=state.kinetic * g.norm_sq - delta * state.kinetic_moment * kappa_g2,
        norm_sq=norm_sq,
        norm_model=g.norm_sq - delta * xi0 * kappa_g2,
        quotient=total / norm_sq,
        kappa_g2=kappa_g2,
        kappa_sq_g2=kappa_sq_g2,
        window_norm=window_norm,
        window_prime=window_prime,
        tube_margin=margin,
        theta0_grid=sol.mu,
        a_coefficient=state.a_coefficient,
    )


# ----------------------------------------------------------------------
# The universal curvature-response coefficient
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class AIdentityReport:
    """A = int [(xi0-t)t^2 + t(t-xi0)^2] f*^2 - t f*'^2 + theta0 t f*^2 dt.

    Since (xi0-t)t^2 + t(t-xi0)^2 = -xi0 t (t-xi0), regrouping gives

        A = [int t (t-xi0)(t-2 xi0) f*^2]
            - [int t (f*'^2 + (t-xi0)^2 f*^2) - theta0 int t f*^2]
          = cross_group + energy_group = c1/2 - 3 c1/2 = -c1.
    """

    value: float
    cross_group: float   # the moment grouping, equal to c1/2
    energy_group: float  # minus the t-weighted energy excess, equal to -3 c1/2


def compute_a_coefficient(constants: UniversalConstants) -> AIdentityReport:
    """Evaluate A from the ground-state moment identities (no new quadrature)."""
    cross = constants.weighted["cross_t"]
    energy = constants.weighted["energy_t"]
    return AIdentityReport(
        value=cross - energy,
        cross_group=cross,
        energy_group=-energy,
    )


# ----------------------------------------------------------------------
# Effective envelope functional
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class EffectiveFormReport:
    """F_delta(g) = (1 + C delta) ||g'||^2 + delta int (-c1 kappa + C delta kappa^2) g^2.

    The three addends are reported separately; the amplitude of the
    envelope is factored out analytically, so the functional is exactly
    quadratic under envelope rescaling.
    """

    value: float
    kinetic_term: float    # (1 + C delta) ||g'||^2
    well_term: float       # -c1 delta int kappa g^2
    defect_term: float     # C delta^2 int kappa^2 g^2
    kappa_g2: float
    kappa_sq_g2: float
    delta: float
    c_hat: float


def effective_form(curvature: CurvatureProfile, envelope: LongitudinalProfile,
                   delta: float, constants: UniversalConstants, *,
                   c_hat: float = 1.0) -> EffectiveFormReport:
    """Evaluate the effective one-dimensional envelope functional."""
    if delta <= 0.0:
        raise ConfigError(f"delta must be positive, got {delta}")
    if c_hat < 0.0:
        raise ConfigError(f"the remainder constant must be >= 0, got {c_hat}")
    snodes, swts = _window_rule(curvature, envelope)
    kap = curvature.kappa_at(snodes)
    unit_g2 = envelope.unit_value(snodes) ** 2
    unit_kappa_g2 = float(swts @ (kap * unit_g2))
    unit_kappa_sq_g2 = float(swts @ (kap * kap * unit_g2))
    unit_kinetic = (1.0 + c_hat * delta) * envelope.unit_prime_norm_sq
    unit_well = -constants.c1 * delta * unit_kappa_g2
    unit_defect = c_hat * delta * delta * unit_kappa_sq_g2
    amp2 = envelope.amplitude ** 2
    return EffectiveFormReport(
        value=amp2 * (unit_kinetic + unit_well + unit_defect),
        kinetic_term=amp2 * unit_kinetic,
        well_term=amp2 * unit_well,
        defect_term=amp2 * unit_defect,
        kappa_g2=amp2 * unit_kappa_g2,
        kappa_sq_g2=amp2 * unit_kappa_sq_g2,
        delta=delta,
        c_hat=c_hat,
    )


# ----------------------------------------------------------------------
# Norm inverse expansion
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class NormInverseReport:
    """Finite geometric expansion of ||psi||^-2 around the straight tube.

    With x = xi0 delta int kappa g^2 (for a normalized envelope),

        value = 1 + x + x^2 (1 + sum_{j=1..order-2} (2x)^j),

    which matches 1/(1 - x) up to the controlled remainder: the partial
    sums bracket the true inverse, 1 + x below and value above.
    """

    value: float
    x: float           # xi0 delta int kappa g^2
    g_moment: float    # int kappa g^2
    order: int
    first_order: float  # 1 + x, the lower bracket


def norm_inverse_expansion(curvature: CurvatureProfile,
                           envelope: LongitudinalProfile, delta: float,
                           constants: UniversalConstants, *,
                           order: int = 3) -> NormInverseReport:
    """Expand the inverse squared norm of the product state in delta.

    Refuses to evaluate outside the geometric convergence region
    2 xi0 delta |int kappa g^2| < 1, where the finite expansion no longer
    brackets anything.
    """
    if order < 3:
        raise ConfigError(f"expansion order must be >= 3, got {order}")
    if abs(envelope.norm_sq - 1.0) > 1e-9:
        raise ConfigError(
            f"expansion assumes a normalized envelope: int g^2 = {envelope.norm_sq!r}")
    snodes, swts = _window_rule(curvature, envelope)
    kap = curvature.kappa_at(snodes)
    g2 = envelope.value(snodes) ** 2
    g_moment = float(swts @ (kap * g2))
    x = constants.xi0 * delta * g_moment
    if 2.0 * abs(x) >= 1.0:
        raise ConfigError(
            f"norm expansion diverges: 2 xi0 delta |int kappa g^2| = "
            f"{2.0 * abs(x):.4f} >= 1")
    tail = sum((2.0 * x) ** j for j in range(1, order - 1))
    return NormInverseReport(
        value=1.0 + x + x * x * (1.0 + tail),
        x=x,
        g_moment=g_moment,
        order=order,
        first_order=1.0 + x,
    )


# ----------------------------------------------------------------------
# Upper bound, sweep, fit
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class CurvedBoundReport:
    """Trial-state certificate for one delta.

    ``certified`` means the exact quotient sits strictly below theta0, so
    the bent edge has spectrum below the essential threshold.  When the
    total curvature is not positive the effective well is not attractive;
    the report then carries no numbers, only the reason.
    """

    delta: float
    certified: bool
    reason: str
    ell: float
    rate: float
    quotient: float
    gap: float              # theta0 - quotient
    effective_value: float  # F_delta(g)
    effective_bound: float  # theta0 + F_delta(g)
    slack: float            # effective_bound - quotient (>= 0 when the bound holds)
    a_coefficient: float
    tube_margin: float
    kappa_g2: float
    norm_sq: float


def curved_upper_bound(curvature: CurvatureProfile, delta: float,
                       constants: UniversalConstants, *,
                       rho: float = 0.5, c_hat: float = 1.0,
                       h: float = 2e-3,
                       profile: FellProfile | None = None) -> CurvedBoundReport:
    """Certify spectrum below theta0 for a bend of positive total curvature.

    For int kappa ds <= 0 a no-certificate report is returned (the trial
    family proves nothing there; it is not an input error).  The gate is
    applied at quadrature resolution relative to the Cauchy-Schwarz bound
    sqrt(width * int kappa^2) on the mean, so an antisymmetric bend whose
    mean vanishes only up to rounding is still recognized as non-binding.
    A transverse ``profile`` may be passed in to share the eigen-solve
    across calls at the same delta.
    """
    nan = float("nan")
    mean_scale = math.sqrt(
        max(0.0, curvature.square_integral) * (curvature.s_hi - curvature.s_lo))
    if curvature.mean <= 1e-12 * mean_scale:
        return CurvedBoundReport(
            delta=delta, certified=False,
            reason=("total curvature int kappa ds = "
                    f"{curvature.mean:.6g} is not positive at quadrature "
                    "resolution: the effective well is not attractive and "
                    "this trial family yields no certificate"),
            ell=nan, rate=nan, quotient=nan, gap=nan, effective_value=nan,
            effective_bound=nan, slack=nan, a_coefficient=nan,
            tube_margin=nan, kappa_g2=nan, norm_sq=nan)
    envelope = minimizing_envelope(curvature, delta, constants)
    if profile is None:
        profile = tube_profile(delta, constants, rho=rho, h=h)
    state = tubular_state(envelope, profile)
    form = tubular_form(curvature, state, delta)
    eff = effective_form(curvature, envelope, delta, constants, c_hat=c_hat)
    gap = constants.theta0 - form.quotient
    bound = constants.theta0 + eff.value
    return CurvedBoundReport(
        delta=delta,
        certified=bool(gap > 0.0),
        reason="",
        ell=form.ell,
        rate=envelope.rate,
        quotient=form.quotient,
        gap=gap,
        effective_value=eff.value,
        effective_bound=bound,
        slack=bound - form.quotient,
        a_coefficient=form.a_coefficient,
        tube_margin=form.tube_margin,
        kappa_g2=form.kappa_g2,
        norm_sq=form.norm_sq,
    )


def curved_sweep(curvature: CurvatureProfile, deltas,
                 constants: UniversalConstants, *,
                 rho: float = 0.5, c_hat: float = 1.0,
                 h: float = 2e-3) -> list[CurvedBoundReport]:
    """Upper bounds over a range of deltas (one eigen-solve per delta)."""
    return [curved_upper_bound(curvature, float(d), constants,
                               rho=rho, c_hat=c_hat, h=h)
            for d in deltas]


@dataclass(frozen=True)
class CurvedFitReport:
    """Least-squares fit of gap(delta) = coefficient delta^2 + slope delta^3."""

    coefficient: float
    slope: float
    residual: float  # rms residual of gap/delta^2 against the fitted line
    deltas: tuple
    gaps: tuple


def fit_curvature_coefficient(sweep, constants: UniversalConstants) -> CurvedFitReport:
    """Fit the delta^2 coefficient of the gap below theta0.

    Accepts CurvedBoundReport entries or (delta, quotient) pairs.  The gap
    has an O(delta^3) remainder, so gap/delta^2 is regressed on [1, delta];
    the intercept estimates (c1 <kappa> / 2)^2.
    """
    pts = []
    for item in sweep:
        if isinstance(item, CurvedBoundReport):
            if not item.certified:
                raise DataError(
                    f"sweep entry at delta = {item.delta:.6g} carries no "
                    "certificate; fit the certified range only")
            pts.append((item.delta, item.quotient))
        else:
            delta, quotient = item
            pts.append((float(delta), float(quotient)))
    pts.sort()
    deltas = np.array([p[0] for p in pts])
    gaps = constants.theta0 - np.array([p[1] for p in pts])
    if deltas.size < 4:
        raise DataError(f"fit needs >= 4 sweep points, got {deltas.size}")
    if np.any(np.diff(deltas) <= 0.0):
        raise DataError("sweep deltas must be distinct")
    if deltas[-1] < 4.0 * deltas[0]:
        raise DataError(
            "sweep must span at least a factor 4 in delta to separate the "
            f"delta^2 and delta^3 terms (got {deltas[0]:.3g}..{deltas[-1]:.3g})")
    if np.any(gaps <= 0.0):
        raise DataError(
            "every sweep point must lie strictly below theta0 to fit a "
            "gap coefficient")
    y = gaps / deltas ** 2
    design = np.column_stack([np.ones_like(deltas), deltas])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    return CurvedFitReport(
        coefficient=float(coef[0]),
        slope=float(coef[1]),
        residual=float(np.sqrt(np.mean(resid ** 2))),
        deltas=tuple(float(d) for d in deltas),
        gaps=tuple(float(v) for v in gaps),
    )
