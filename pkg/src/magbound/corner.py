"""Trial states on the almost-flat corner sector of opening pi - delta.

The sector is split by its bisector into two congruent halves; on the
upper half the state is a transverse ground-state profile times a plane
wave, bent through an angular transition layer of width gamma/2 where the
phase interpolates, and the lower half is the gauge-reflected copy

    u_-(x) = exp(-i phi(S x)) * conj(u_+(S x)),

with S the bisector reflection and phi the quadratic gauge phase that
intertwines the Landau potential A = (-x2, 0) with its reflection.  The
reflected construction makes |Psi| and the magnetic energy density exactly
symmetric under S, so both half-sector energies coincide identically.

Region energies reduce to one-dimensional integrals of the transverse
profile: the trapezoid energy tensorizes (rectangle minus an exactly
integrable wedge, factor tan((delta+gamma)/2)), and the transition-sector
energy collapses onto the profile grid after the substitution t = r sin
theta.  Assembling them with an exponential longitudinal cutoff eta gives
the upper bound

    quotient <= theta0 - (c1^2/4) delta^2 + O(delta^{5/2}),

whose coefficient is recovered by a least-squares fit in sqrt(delta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import make_interp_spline

from .degennes import (
    CutoffProfile,
    FellProfile,
    HalfLineGrid,
    UniversalConstants,
    _mollifier_step,
    _mollifier_step_prime,
    build_f_ell,
    solve_h_xi,
)
from .errors import AssemblyError, ConfigError, DataError
from .numerics import fd_derivative, simpson_weights


# ----------------------------------------------------------------------
# Configuration, geometry, phases
# ----------------------------------------------------------------------

DELTA_MAX = 0.3
GAMMA_MAX = 0.6


@dataclass(frozen=True)
class CornerTrialConfig:
    """Parameters of the corner trial state.

    gamma defaults to sqrt(delta) and ell to 1/sqrt(delta); epsilon is the
    plateau length of the longitudinal cutoff eta_+.  ``chi`` selects the
    angular transition profile; ``eta_kind`` selects the cutoff family
    ("exponential" with rate eta_alpha, by default c1*delta/2, or
    "plateau" of length eta_length with a unit smoothstep ramp).
    """

    delta: float
    gamma: float | None = None
    ell: float | None = None
    epsilon: float = 1.0
    chi: str = "linear"
    chi_width: float = 0.1
    eta_kind: str = "exponential"
    eta_alpha: float | None = None
    eta_length: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.delta <= DELTA_MAX:
            raise ConfigError(
                f"delta must lie in (0, {DELTA_MAX}], got {self.delta}")
        gamma = self.delta ** 0.5 if self.gamma is None else self.gamma
        object.__setattr__(self, "gamma", float(gamma))
        if not self.delta <= self.gamma <= GAMMA_MAX:
            raise ConfigError(
                f"gamma must lie in [delta, {GAMMA_MAX}], got {self.gamma}")
        if self.gamma >= math.pi - self.delta:
            raise ConfigError("gamma must stay below the sector opening")
        ell = self.delta ** -0.5 if self.ell is None else self.ell
        object.__setattr__(self, "ell", float(ell))
        if self.ell <= 0.0:
            raise ConfigError(f"ell must be positive, got {self.ell}")
        if self.epsilon <= 0.0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")
        if self.chi not in ("linear", "mollified"):
            raise ConfigError(f"unknown transition profile {self.chi!r}")
        if not 0.0 < self.chi_width < 0.5:
            raise ConfigError(f"chi_width must lie in (0, 0.5), got {self.chi_width}")
        if self.eta_kind not in ("exponential", "plateau"):
            raise ConfigError(f"unknown eta family {self.eta_kind!r}")
        if self.eta_kind == "plateau" and self.eta_length is None:
            raise ConfigError("plateau cutoff needs eta_length")

    @property
    def footprint(self) -> float:
        """Largest x1 reached by the transition sector, ell*tan((delta+gamma)/2)."""
        return self.ell * math.tan(0.5 * (self.delta + self.gamma))


@dataclass(frozen=True)
class CornerGeometry:
    """Bisector reflection and region bookkeeping of the split sector."""

    delta: float
    gamma: float
    ell: float

    @property
    def opening(self) -> float:
        return math.pi - self.delta

    @property
    def theta_bisector(self) -> float:
        return 0.5 * (math.pi - self.delta)

    @property
    def theta_lo(self) -> float:
        return self.theta_bisector - 0.5 * self.gamma

    @property
    def theta_hi(self) -> float:
        return self.theta_bisector + 0.5 * self.gamma

    @property
    def r_star(self) -> float:
        """Radius of the transition sector, ell / cos((delta+gamma)/2)."""
        return self.ell / math.cos(0.5 * (self.delta + self.gamma))

    @property
    def reflection_matrix(self) -> np.ndarray:
        d = self.delta
        return np.array([[-math.cos(d), math.sin(d)],
                         [math.sin(d), math.cos(d)]])

    def reflect(self, points: np.ndarray) -> np.ndarray:
        """Apply the bisector reflection S to points of shape (..., 2)."""
        p = np.asarray(points, dtype=float)
        d = self.delta
        x1 = -p[..., 0] * math.cos(d) + p[..., 1] * math.sin(d)
        x2 = p[..., 0] * math.sin(d) + p[..., 1] * math.cos(d)
        return np.stack([x1, x2], axis=-1)

    def region_of(self, points: np.ndarray) -> np.ndarray:
        """Region tag per point: 'T+', 'V+', 'V-', 'T-', 'zero' (inside the
        sector, outside the support), or 'outside' (outside the sector)."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        r = np.hypot(p[..., 0], p[..., 1])
        theta = np.arctan2(p[..., 1], p[..., 0])
        tags = np.full(p.shape[:-1], "outside", dtype="<U7")
        inside = (theta > 0.0) & (theta < self.opening) & (r > 0.0)
        tags[inside] = "zero"
        refl_x2 = p[..., 0] * math.sin(self.delta) + p[..., 1] * math.cos(self.delta)
        tags[inside & (theta < self.theta_lo) & (p[..., 1] < self.ell)] = "T+"
        tags[inside & (theta >= self.theta_lo) & (theta < self.theta_bisector)
             & (r < self.r_star)] = "V+"
        tags[inside & (theta >= self.theta_bisector) & (theta <= self.theta_hi)
             & (r < self.r_star)] = "V-"
        tags[inside & (theta > self.theta_hi) & (refl_x2 < self.ell)] = "T-"
        return tags

    def phi(self, points: np.ndarray) -> np.ndarray:
        """Reflection gauge phase phi(x) = sin(2d)/4 (x1^2-x2^2) - x1 x2 sin^2 d.

        Its gradient satisfies grad phi(x) = S A(S x) + A(x) for the Landau
        potential A = (-x2, 0), which is exactly what makes the reflected
        partner isoenergetic; phi(Sx) = phi(x).
        """
        p = np.asarray(points, dtype=float)
        d = self.delta
        x1, x2 = p[..., 0], p[..., 1]
        return (0.25 * math.sin(2.0 * d) * (x1 * x1 - x2 * x2)
                - x1 * x2 * math.sin(d) ** 2)

    def phi_gradient(self, points: np.ndarray) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        d = self.delta
        x1, x2 = p[..., 0], p[..., 1]
        g1 = 0.5 * math.sin(2.0 * d) * x1 - math.sin(d) ** 2 * x2
        g2 = -0.5 * math.sin(2.0 * d) * x2 - math.sin(d) ** 2 * x1
        return np.stack([g1, g2], axis=-1)

    def phi_hat(self, theta: np.ndarray) -> np.ndarray:
        """phi on the unit circle: phi(r, theta) = r^2 * phi_hat(theta)."""
        d = self.delta
        theta = np.asarray(theta, dtype=float)
        return (0.25 * math.sin(2.0 * d) * np.cos(2.0 * theta)
                - 0.5 * math.sin(d) ** 2 * np.sin(2.0 * theta))

    def phi_hat_prime(self, theta: np.ndarray) -> np.ndarray:
        d = self.delta
        theta = np.asarray(theta, dtype=float)
        return (-0.5 * math.sin(2.0 * d) * np.sin(2.0 * theta)
                - math.sin(d) ** 2 * np.cos(2.0 * theta))


def geometry_of(config: CornerTrialConfig) -> CornerGeometry:
    return CornerGeometry(delta=config.delta, gamma=config.gamma, ell=config.ell)


@dataclass(frozen=True)
class TransitionProfile:
    """Odd angular transition chi with chi(s) = sign(s) for |s| >= 1.

    kind "linear" is chi(s) = s on [-1, 1] (the energy-minimal profile,
    Lipschitz only); "mollified" blends the two linear pieces over a band
    of half-width ``width`` below |s| = 1 with the C-infinity mollifier
    step, so the profile is smooth; "cubic" adds coeff * s(1-s^2) to the
    linear profile (an admissible perturbation used to probe optimality).
    """

    kind: str = "linear"
    width: float = 0.1
    coeff: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("linear", "mollified", "cubic"):
            raise ConfigError(f"unknown transition profile {self.kind!r}")
        if not 0.0 < self.width < 0.5:
            raise ConfigError(f"width must lie in (0, 0.5), got {self.width}")

    def chi(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        a = np.abs(s)
        if self.kind == "linear":
            out = np.minimum(a, 1.0)
        elif self.kind == "cubic":
            out = np.minimum(a, 1.0)
            core = a < 1.0
            out = np.where(core, a + self.coeff * a * (1.0 - a * a), out)
        else:
            w = self.width
            v = np.clip((a - (1.0 - w)) / w, 0.0, 1.0)
            m = _mollifier_step(v)
            out = np.where(a < 1.0, a * (1.0 - m) + m, 1.0)
        return out * np.sign(s)

    def chi_prime(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        a = np.abs(s)
        if self.kind == "linear":
            return np.where(a < 1.0, 1.0, 0.0)
        if self.kind == "cubic":
            return np.where(a < 1.0, 1.0 + self.coeff * (1.0 - 3.0 * a * a), 0.0)
        w = self.width
        v = np.clip((a - (1.0 - w)) / w, 0.0, 1.0)
        m = _mollifier_step(v)
        dm = np.where((v > 0.0) & (v < 1.0), _mollifier_step_prime(v) / w, 0.0)
        return np.where(a < 1.0, (1.0 - m) + (1.0 - a) * dm, 0.0)

    def chi_prime_sq_integral(self, *, order: int = 32) -> float:
        """integral of chi'(s)^2 over (-1, 0); equals 1 iff chi is linear."""
        if self.kind == "linear":
            return 1.0
        if self.kind == "cubic":
            # (1 + c(1-3s^2))^2 integrates to 1 + (4/5) c^2 on (-1, 0).
            return 1.0 + 0.8 * self.coeff ** 2
        edges = [-1.0, -1.0 + self.width, 0.0]
        total = 0.0
        x0, w0 = np.polynomial.legendre.leggauss(order)
        for a, b in zip(edges[:-1], edges[1:]):
            s = 0.5 * (b - a) * x0 + 0.5 * (a + b)
            total += 0.5 * (b - a) * float(w0 @ self.chi_prime(s) ** 2)
        return total


def transition_profile(config: CornerTrialConfig) -> TransitionProfile:
    return TransitionProfile(kind=config.chi, width=config.chi_width)


@dataclass(frozen=True)
class PhaseAssembly:
    """Transition phase alpha(r, theta) = b r^2 - chi((2(theta-theta_b))/gamma)
    (a r - b r^2).

    a = xi0 sin((delta+gamma)/2) makes alpha match the plane-wave phase
    xi0 r cos(theta) on the ray theta_b - gamma/2 for every r; b = sin(delta)/4
    makes 2 alpha(r, theta_b) = -r^2 phi_hat(theta_b) on the bisector, which
    is the continuity condition against the reflected lower half.
    """

    geometry: CornerGeometry
    xi0: float
    chi: TransitionProfile = field(default_factory=TransitionProfile)

    @property
    def a(self) -> float:
        g = self.geometry
        return self.xi0 * math.sin(0.5 * (g.delta + g.gamma))

    @property
    def b(self) -> float:
        return 0.25 * math.sin(self.geometry.delta)

    def chi_at(self, theta) -> np.ndarray:
        g = self.geometry
        return self.chi.chi(2.0 * (np.asarray(theta) - g.theta_bisector) / g.gamma)

    def chi_prime_at(self, theta) -> np.ndarray:
        g = self.geometry
        s = 2.0 * (np.asarray(theta) - g.theta_bisector) / g.gamma
        return (2.0 / g.gamma) * self.chi.chi_prime(s)

    def alpha(self, r, theta) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return self.b * r * r - self.chi_at(theta) * (self.a * r - self.b * r * r)

    def alpha_r(self, r, theta) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return 2.0 * self.b * r - self.chi_at(theta) * (self.a - 2.0 * self.b * r)

    def alpha_theta(self, r, theta) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return -self.chi_prime_at(theta) * (self.a * r - self.b * r * r)


# ----------------------------------------------------------------------
# Longitudinal cutoff family
# ----------------------------------------------------------------------

def _smoothstep_poly_integrals() -> tuple[float, float]:
    """(integral of (1-S5)^2, integral of S5'^2) on (0,1) for the quintic step."""
    s5 = np.polynomial.Polynomial([0.0, 0.0, 0.0, 10.0, -15.0, 6.0])
    ramp = 1.0 - s5
    val = (ramp * ramp).integ()
    der = s5.deriv()
    val2 = (der * der).integ()
    return float(val(1.0) - val(0.0)), float(val2(1.0) - val2(0.0))


_RAMP_SQ, _RAMP_PRIME_SQ = _smoothstep_poly_integrals()


@dataclass(frozen=True)
class EtaPlus:
    """Longitudinal cutoff on the half line, identically 1 on (0, plateau).

    "exponential": exp(-alpha (x - plateau)) beyond the plateau (the
    Euler-Lagrange family of the cutoff optimization).  "plateau": a unit
    quintic-smoothstep ramp from 1 to 0 on (plateau, plateau + ramp).
    """

    kind: str
    plateau: float
    alpha: float = 0.0
    ramp: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("exponential", "plateau"):
            raise ConfigError(f"unknown eta family {self.kind!r}")
        if self.plateau <= 0.0:
            raise ConfigError("eta plateau must be positive")
        if self.kind == "exponential" and self.alpha <= 0.0:
            raise ConfigError("exponential eta needs alpha > 0")
        if self.kind == "plateau" and self.ramp <= 0.0:
            raise ConfigError("plateau eta needs a positive ramp width")

    def value(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        u = x - self.plateau
        if self.kind == "exponential":
            return np.where(u <= 0.0, 1.0, np.exp(-self.alpha * np.maximum(u, 0.0)))
        v = np.clip(u / self.ramp, 0.0, 1.0)
        return 1.0 - v**3 * (10.0 - 15.0 * v + 6.0 * v * v)

    def prime(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        u = x - self.plateau
        if self.kind == "exponential":
            inside = u > 0.0
            return np.where(
                inside, -self.alpha * np.exp(-self.alpha * np.maximum(u, 0.0)), 0.0)
        v = u / self.ramp
        core = (v > 0.0) & (v < 1.0)
        vv = np.clip(v, 0.0, 1.0)
        return np.where(core, -30.0 * vv**2 * (1.0 - vv) ** 2 / self.ramp, 0.0)

    @property
    def norm_sq(self) -> float:
        if self.kind == "exponential":
            return self.plateau + 0.5 / self.alpha
        return self.plateau + self.ramp * _RAMP_SQ

    @property
    def prime_norm_sq(self) -> float:
        if self.kind == "exponential":
            return 0.5 * self.alpha
        return _RAMP_PRIME_SQ / self.ramp

    def support_radius(self, tol: float = 1e-8) -> float:
        """x beyond which eta < tol (finite quadrature window)."""
        if self.kind == "exponential":
            return self.plateau + math.log(1.0 / tol) / self.alpha
        return self.plateau + self.ramp


def eta_plus_of(config: CornerTrialConfig, constants: UniversalConstants) -> EtaPlus:
    if config.eta_kind == "plateau":
        return EtaPlus(kind="plateau", plateau=config.eta_length)
    alpha = config.eta_alpha
    if alpha is None:
        alpha = 0.5 * constants.c1 * config.delta
    return EtaPlus(kind="exponential", plateau=config.epsilon, alpha=alpha)


# ----------------------------------------------------------------------
# Trial state assembly
# ----------------------------------------------------------------------

def corner_profile(config: CornerTrialConfig,
                   constants: UniversalConstants,
                   *,
                   h: float = 2e-3,
                   t_pad: float = 4.0,
                   cutoff_kind: str = "smooth") -> FellProfile:
    """Transverse profile f_ell on a grid long enough for this config.

    The step is tightened for short ell: the cutoff transition has width
    0.2 ell, and its mollifier derivatives grow like the inverse width, so
    a fixed step would lose four digits of Simpson accuracy by ell ~ 2.
    """
    h_eff = min(h, config.ell / 4000.0)
    t_max = max(20.0, config.ell + t_pad)
    n = 2 * int(math.ceil(t_max / (2.0 * h_eff))) + 1
    grid = HalfLineGrid(t_max=t_max, n=n, scheme="fd4")
    solution = solve_h_xi(constants.xi0, grid)
    cutoff = CutoffProfile(ell=config.ell, kind=cutoff_kind)
    return build_f_ell(solution, cutoff)


@dataclass(frozen=True)
class CornerTrialState:
    """Five-branch trial state: evaluation, densities, region quadratures."""

    config: CornerTrialConfig
    constants: UniversalConstants
    profile: FellProfile
    geometry: CornerGeometry
    phases: PhaseAssembly
    eta: EtaPlus
    _spline: object
    _spline_prime: object

    # -- pointwise amplitude interpolation ------------------------------

    def f_at(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        grid = self.profile.grid
        out = np.zeros_like(t)
        inside = (t >= 0.0) & (t <= grid.t_max)
        out[inside] = self._spline(t[inside])
        return out

    def f_prime_at(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        grid = self.profile.grid
        out = np.zeros_like(t)
        inside = (t >= 0.0) & (t <= grid.t_max)
        out[inside] = self._spline_prime(t[inside])
        return out

    # -- branch values ---------------------------------------------------

    def branch_value(self, region: str, points: np.ndarray) -> np.ndarray:
        """Evaluate the closed-form branch of one region at given points.

        Points need not lie inside the region: this is what interface
        continuity checks compare across a shared boundary.
        """
        p = np.atleast_2d(np.asarray(points, dtype=float))
        x1, x2 = p[..., 0], p[..., 1]
        r = np.hypot(x1, x2)
        theta = np.arctan2(x2, x1)
        xi0 = self.constants.xi0
        g = self.geometry
        if region == "T+":
            return self.f_at(x2) * np.exp(1j * xi0 * x1)
        if region == "V+":
            return self.f_at(r * np.sin(theta)) * np.exp(
                1j * self.phases.alpha(r, theta))
        if region == "V-":
            theta_ref = math.pi - g.delta - theta
            amp = self.f_at(r * np.sin(theta_ref))
            phase = -(r * r) * g.phi_hat(theta) - self.phases.alpha(r, theta_ref)
            return amp * np.exp(1j * phase)
        if region == "T-":
            t_ref = x1 * math.sin(g.delta) + x2 * math.cos(g.delta)
            x1_ref = -x1 * math.cos(g.delta) + x2 * math.sin(g.delta)
            return self.f_at(t_ref) * np.exp(-1j * (xi0 * x1_ref + g.phi(p)))
        raise ValueError(f"no closed-form branch for region {region!r}")

    def value(self, points: np.ndarray) -> np.ndarray:
        """Pointwise value of Psi (region-dispatched)."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        tags = self.geometry.region_of(p)
        out = np.zeros(p.shape[:-1], dtype=complex)
        for region in ("T+", "V+", "V-", "T-"):
            mask = tags == region
            if np.any(mask):
                out[mask] = self.branch_value(region, p[mask])
        return out

    def truncated_value(self, points: np.ndarray) -> np.ndarray:
        """eta * Psi (the finite-energy test function)."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        long_coord = np.where(
            np.arctan2(p[..., 1], p[..., 0]) <= self.geometry.theta_bisector,
            p[..., 0],
            -p[..., 0] * math.cos(self.geometry.delta)
            + p[..., 1] * math.sin(self.geometry.delta))
        return self.eta.value(long_coord) * self.value(p)

    # -- branch energy densities (analytic gradients) ---------------------

    def branch_density(self, region: str, points: np.ndarray) -> np.ndarray:
        """|(-i grad + A) Psi|^2 through the branch formulas, A = (-x2, 0)."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        x1, x2 = p[..., 0], p[..., 1]
        r = np.hypot(x1, x2)
        theta = np.arctan2(x2, x1)
        xi0 = self.constants.xi0
        g = self.geometry
        if region == "T+":
            w, dw = self.f_at(x2), self.f_prime_at(x2)
            return dw * dw + (xi0 - x2) ** 2 * w * w
        if region == "V+":
            t = r * np.sin(theta)
            w, dw = self.f_at(t), self.f_prime_at(t)
            dr = self.phases.alpha_r(r, theta) - 0.5 * r * np.sin(2.0 * theta)
            dth = (self.phases.alpha_theta(r, theta) / r
                   + r * np.sin(theta) ** 2)
            return dw * dw + (dr * dr + dth * dth) * w * w
        if region == "V-":
            theta_ref = math.pi - g.delta - theta
            t = r * np.sin(theta_ref)
            w, dw = self.f_at(t), self.f_prime_at(t)
            s_r = (-2.0 * r * g.phi_hat(theta)
                   - self.phases.alpha_r(r, theta_ref))
            s_th = (-(r * r) * g.phi_hat_prime(theta)
                    + self.phases.alpha_theta(r, theta_ref))
            dr = s_r - 0.5 * r * np.sin(2.0 * theta)
            dth = s_th / r + r * np.sin(theta) ** 2
            return dw * dw + (dr * dr + dth * dth) * w * w
        if region == "T-":
            t_ref = x1 * math.sin(g.delta) + x2 * math.cos(g.delta)
            w, dw = self.f_at(t_ref), self.f_prime_at(t_ref)
            grad_phi = g.phi_gradient(p)
            c1 = xi0 * math.cos(g.delta) - grad_phi[..., 0] - x2
            c2 = -xi0 * math.sin(g.delta) - grad_phi[..., 1]
            return dw * dw + (c1 * c1 + c2 * c2) * w * w
        raise ValueError(f"no density formula for region {region!r}")

    # -- region quadratures ------------------------------------------------

    def region_energy(self, region: str, *, order: int = 16) -> float:
        """integral over the region of |(-i grad + A)(eta Psi)|^2.

        The cutoff gradient is orthogonal to the amplitude gradient in
        every region, so the density splits exactly into
        eta^2 |(-i grad + A) Psi|^2 + eta'^2 |Psi|^2.
        """
        _require_plateau_covers_transition(self.config)
        g = self.geometry
        ell = g.ell
        plateau = self.profile.cutoff.plateau * ell
        if region in ("T+", "T-"):
            x_cut = ell * math.tan(0.5 * (g.delta + g.gamma))
            y_edges = _with_splits(0.0, ell, [plateau], 4)
            x_outer = self.eta.support_radius(1e-9)
            x_breaks = sorted({self.eta.plateau, x_cut,
                               *_eta_tail_breaks(self.eta, x_outer)})

            def xlo(y):
                return y * math.tan(0.5 * (g.delta + g.gamma))

            total = 0.0
            ny, (yn, yw) = _gl_segments(y_edges, order)
            for y, wy in zip(yn, yw):
                x_edges = [xlo(y)] + [bk for bk in x_breaks if bk > xlo(y)]
                if x_edges[-1] < x_outer:
                    x_edges.append(x_outer)
                nx, (xn, xw) = _gl_segments(x_edges, order)
                pts_plus = np.stack([xn, np.full_like(xn, y)], axis=-1)
                if region == "T+":
                    pts = pts_plus
                else:
                    pts = g.reflect(pts_plus)
                dens = self.branch_density(region, pts)
                # the reflection fixes the transverse coordinate, so the
                # amplitude under eta'^2 is f(y) on both trapezoids
                f_y = float(self.f_at(np.array([y]))[0])
                eta_v = self.eta.value(xn)
                eta_p = self.eta.prime(xn)
                total += wy * float(
                    xw @ (eta_v**2 * dens + eta_p**2 * f_y**2))
            return total
        if region in ("V+", "V-"):
            theta_splits = []
            if self.phases.chi.kind == "mollified":
                blend = g.theta_lo + 0.5 * g.gamma * self.phases.chi.width
                theta_splits.append(
                    blend if region == "V+" else math.pi - g.delta - blend)
            if region == "V+":
                th0, th1 = g.theta_lo, g.theta_bisector
                sin_arg = lambda th: math.sin(th)
            else:
                th0, th1 = g.theta_bisector, g.theta_hi
                sin_arg = lambda th: math.sin(th + g.delta)
            ntheta, (tn, tw) = _gl_segments(
                _with_splits(th0, th1, theta_splits, 3), order)
            total = 0.0
            for th, wth in zip(tn, tw):
                s = sin_arg(th)
                r_support = min(ell / s, g.r_star)
                r_edges = _with_splits(0.0, r_support,
                                       [self.profile.cutoff.plateau * ell / s], 3)
                nr, (rn, rw) = _gl_segments(r_edges, order)
                pts = np.stack([rn * math.cos(th), rn * math.sin(th)], axis=-1)
                dens = self.branch_density(region, pts)
                total += wth * float(rw @ (dens * rn))
            return total
        raise ValueError(f"no quadrature for region {region!r}")


def _with_splits(a: float, b: float, splits: list[float], n_sub: int) -> list[float]:
    """Panel edges on [a, b]: interior splits, each gap subdivided n_sub times."""
    pts = [a] + [s for s in sorted(splits) if a < s < b] + [b]
    edges: list[float] = []
    for lo, hi in zip(pts[:-1], pts[1:]):
        edges.extend(np.linspace(lo, hi, n_sub + 1)[:-1].tolist())
    edges.append(b)
    return edges


def _eta_tail_breaks(eta: EtaPlus, outer: float) -> list[float]:
    """Geometric panel edges resolving an exponential cutoff tail."""
    if eta.kind != "exponential":
        return [eta.plateau + eta.ramp, outer]
    scale = 1.0 / eta.alpha
    breaks = []
    step = 0.5 * scale
    x = eta.plateau
    while x < outer:
        breaks.append(x)
        x += step
        step = min(step * 1.7, 2.0 * scale)
    breaks.append(outer)
    return breaks


def _gl_segments(edges: list[float], order: int):
    """Concatenated Gauss-Legendre nodes/weights over arbitrary panel edges."""
    x0, w0 = np.polynomial.legendre.leggauss(order)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        nodes.append(0.5 * (b - a) * x0 + 0.5 * (a + b))
        weights.append(0.5 * (b - a) * w0)
    n = np.concatenate(nodes)
    w = np.concatenate(weights)
    return len(edges) - 1, (n, w)


def _require_plateau_covers_transition(config: CornerTrialConfig) -> None:
    if config.footprint > config.epsilon + 1e-12:
        raise ConfigError(
            f"transition footprint ell*tan((delta+gamma)/2) = {config.footprint:.6g} "
            f"exceeds the cutoff plateau epsilon = {config.epsilon}; the exact "
            "wedge reductions need eta = 1 on the whole transition sector")


def _gluing_check(state: CornerTrialState, tol: float = 1e-12) -> float:
    """Max branch mismatch across the three internal interfaces."""
    g = state.geometry
    r = np.linspace(1e-3, 0.999 * g.r_star, 41)
    worst = 0.0
    for theta, left, right in (
            (g.theta_lo, "T+", "V+"),
            (g.theta_bisector, "V+", "V-"),
            (g.theta_hi, "V-", "T-")):
        pts = np.stack([r * math.cos(theta), r * math.sin(theta)], axis=-1)
        va = state.branch_value(left, pts)
        vb = state.branch_value(right, pts)
        worst = max(worst, float(np.max(np.abs(va - vb))))
    # outer boundary of the support: the profile itself vanishes
    for theta, region in ((g.theta_lo + 0.3 * g.gamma, "V+"),
                          (g.theta_hi - 0.1 * g.gamma, "V-")):
        pts = np.array([[g.r_star * math.cos(theta), g.r_star * math.sin(theta)]])
        worst = max(worst, float(np.max(np.abs(state.branch_value(region, pts)))))
    if worst > tol:
        raise AssemblyError(
            f"branch mismatch {worst:.3e} exceeds the gluing tolerance {tol:.1e}")
    return worst


def assemble_trial_state(config: CornerTrialConfig,
                         constants: UniversalConstants,
                         f_ell: FellProfile,
                         *,
                         gluing_tol: float = 1e-12) -> CornerTrialState:
    """Build the five-branch state and verify interface continuity."""
    geometry = geometry_of(config)
    phases = PhaseAssembly(geometry=geometry, xi0=constants.xi0,
                           chi=transition_profile(config))
    eta = eta_plus_of(config, constants)
    nodes = f_ell.grid.nodes
    spline = make_interp_spline(nodes, f_ell.values, k=5)
    state = CornerTrialState(config=config, constants=constants,
                             profile=f_ell, geometry=geometry, phases=phases,
                             eta=eta, _spline=spline,
                             _spline_prime=spline.derivative())
    _gluing_check(state, gluing_tol)
    return state


# ----------------------------------------------------------------------
# Reflected partner (generic fields)
# ----------------------------------------------------------------------

def reflected_partner(u_plus: Callable[[np.ndarray], np.ndarray],
                      geometry: CornerGeometry) -> Callable[[np.ndarray], np.ndarray]:
    """u_-(x) = exp(-i phi(Sx)) conj(u_+(Sx)): the isoenergetic reflection.

    Works for any finite-energy field on the upper half-sector; the gauge
    phase phi makes the magnetic energy density of u_- at x equal that of
    u_+ at Sx pointwise.
    """

    def u_minus(points: np.ndarray) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        refl = geometry.reflect(p)
        return np.exp(-1j * geometry.phi(refl)) * np.conj(u_plus(refl))

    return u_minus


def magnetic_energy_quadrature(u: Callable[[np.ndarray], np.ndarray],
                               domain: dict,
                               *,
                               order: int = 16,
                               n_panels: int = 8,
                               fd_step: float = 1e-3) -> float:
    """integral over a box/strip of |(-i grad + A) u|^2, A = (-x2, 0).

    The gradient is taken by Richardson-extrapolated central differences
    of the supplied field, so this is independent of any closed-form
    derivative bookkeeping.  domain kinds:
      {"kind": "box", "x": (x0, x1), "y": (y0, y1)}
      {"kind": "strip", "y": (y0, y1), "xlo": callable, "xhi": callable}
      optional "map": points -> points applied after node generation
      (with "jacobian": constant area factor of that map).
    """
    kind = domain["kind"]
    y0, y1 = domain["y"]
    ny, (yn, yw) = _gl_segments(_with_splits(y0, y1, [], n_panels), order)
    total = 0.0
    for y, wy in zip(yn, yw):
        if kind == "box":
            x0, x1 = domain["x"]
        elif kind == "strip":
            x0, x1 = domain["xlo"](y), domain["xhi"](y)
        else:
            raise ValueError(f"unknown domain kind {kind!r}")
        if x1 <= x0:
            continue
        nx, (xn, xw) = _gl_segments(_with_splits(x0, x1, [], n_panels), order)
        pts = np.stack([xn, np.full_like(xn, y)], axis=-1)
        if "map" in domain:
            pts = domain["map"](pts)
        dens = _magnetic_density_fd(u, pts, fd_step)
        total += wy * float(xw @ dens)
    return total * float(domain.get("jacobian", 1.0))


def _magnetic_density_fd(u, points: np.ndarray, h: float) -> np.ndarray:
    val = u(points)
    grads = []
    for axis in range(2):
        e = np.zeros(2)
        e[axis] = 1.0
        g_h = (u(points + h * e) - u(points - h * e)) / (2.0 * h)
        g_h2 = (u(points + 0.5 * h * e) - u(points - 0.5 * h * e)) / h
        grads.append((4.0 * g_h2 - g_h) / 3.0)
    c1 = -1j * grads[0] - points[..., 1] * val
    c2 = -1j * grads[1]
    return (c1 * np.conj(c1) + c2 * np.conj(c2)).real


# ----------------------------------------------------------------------
# Region energies reduced to the profile grid
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class SectorEnergyReport:
    """Transition-sector energy: 2D quadrature and its 1D effective model."""

    quadrature: float
    model: float          # (gamma/2) * J_{delta,gamma} for the linear profile
    model_general: float  # three-term model with the chi'^2 weight
    c_chi: float
    j_model: float        # the 1D integral J_{delta,gamma}
    difference: float     # quadrature - model_general


def sector_energy(config: CornerTrialConfig,
                  constants: UniversalConstants,
                  f_ell: FellProfile,
                  *,
                  chi: TransitionProfile | None = None,
                  order: int = 24) -> SectorEnergyReport:
    """Energy of Psi on the upper transition sector V+.

    Quadrature route: substitute t = r sin(theta); the t-integral then
    lives on the profile grid (composite Simpson, the same weights as
    every other profile functional), and the theta-integral is smooth on
    panels between the transition breakpoints.

    Model route: the effective 1D functional with the angular layer
    integrated out; for a general transition profile only the chi'^2
    moment survives,

      (gamma/2) [ I(f' ^2 + t^2 f^2) - 2 I(W t f^2) + c_chi I(W^2 f^2) ],

    with W(t) = xi0 (1 + delta/gamma) - delta t / (2 gamma), I(.) the
    t-weighted profile integral, and c_chi = integral of chi'^2; the
    linear profile has c_chi = 1, which recombines into
    (gamma/2) * integral (f'^2 + (t - W)^2 f^2) t dt.
    """
    geometry = geometry_of(config)
    phases = PhaseAssembly(geometry=geometry, xi0=constants.xi0,
                           chi=chi if chi is not None else transition_profile(config))
    grid = f_ell.grid
    t = grid.nodes
    w = f_ell.values
    order_fd = 2 if grid.scheme == "fd2" else 4
    dw = fd_derivative(w, grid.h, order=order_fd)
    sw = simpson_weights(grid.n, grid.h)

    gamma, delta = config.gamma, config.delta
    a, b = phases.a, phases.b

    # theta quadrature with panels split at the mollification breakpoints
    th0, th1 = geometry.theta_lo, geometry.theta_bisector
    splits = []
    prof = phases.chi
    if prof.kind == "mollified":
        splits.append(th0 + 0.5 * gamma * prof.width)
    ntheta, (tn, tw) = _gl_segments(_with_splits(th0, th1, splits, 3), order)

    quad = 0.0
    fp2 = sw @ (dw * dw * t)
    for th, wth in zip(tn, tw):
        s = math.sin(th)
        r = t / s
        chi_v = phases.chi_at(th)
        chi_p = phases.chi_prime_at(th)
        g1 = r * (2.0 * b - s * math.cos(th)) - chi_v * (a - 2.0 * b * r)
        g2 = t * s - chi_p * (a - b * r)
        integrand = (g1 * g1 + g2 * g2) * w * w * t
        quad += wth / (s * s) * (fp2 + float(sw @ integrand))

    w_eff = constants.xi0 * (1.0 + delta / gamma) - 0.5 * delta * t / gamma
    j_model = float(sw @ ((dw * dw + (t - w_eff) ** 2 * w * w) * t))
    c_chi = phases.chi.chi_prime_sq_integral()
    t1 = float(sw @ ((dw * dw + t * t * w * w) * t))
    t2 = -2.0 * float(sw @ (w_eff * t * t * w * w))
    t3 = c_chi * float(sw @ (w_eff**2 * w * w * t))
    model_general = 0.5 * gamma * (t1 + t2 + t3)
    model = 0.5 * gamma * j_model
    return SectorEnergyReport(quadrature=float(quad), model=model,
                              model_general=model_general, c_chi=c_chi,
                              j_model=j_model,
                              difference=float(quad) - model_general)


@dataclass(frozen=True)
class TrapezoidEnergyReport:
    """eta-weighted energy on the straight trapezoid: rectangle minus wedge."""

    value: float
    rectangle: float
    wedge: float
    tan_coefficient: float
    q_transverse: float   # integral f'^2 + (xi0 - t)^2 f^2 dt
    k_weighted: float     # the same integrand weighted by t
    eta_norm_sq: float
    model: float          # theta0 ||eta||^2 - ((gamma+delta)/2) K
    remainder: float      # value - model


def trapezoid_energy(config: CornerTrialConfig,
                     constants: UniversalConstants,
                     f_ell: FellProfile) -> TrapezoidEnergyReport:
    """Energy of eta^2 |(-i grad + A) Psi|^2 on the trapezoid T+_{delta,gamma}.

    Tensorization is exact: the plane-wave energy density is independent
    of x1, so the trapezoid integral is the full-rectangle energy
    ||eta||^2 q minus the wedge between the transition ray and the
    vertical axis, and the substitution t = r sin(theta) evaluates the
    wedge exactly as tan((delta+gamma)/2) * K with K the t-weighted
    transverse energy.  Requires eta = 1 on the wedge footprint.
    """
    _require_plateau_covers_transition(config)
    eta = eta_plus_of(config, constants)
    grid = f_ell.grid
    t = grid.nodes
    w = f_ell.values
    order_fd = 2 if grid.scheme == "fd2" else 4
    dw = fd_derivative(w, grid.h, order=order_fd)
    sw = simpson_weights(grid.n, grid.h)
    xi0 = constants.xi0
    q_transverse = float(sw @ (dw * dw + (xi0 - t) ** 2 * w * w))
    k_weighted = f_ell.k_weighted
    tan_coeff = math.tan(0.5 * (config.delta + config.gamma))
    rectangle = eta.norm_sq * q_transverse
    wedge = tan_coeff * k_weighted
    value = rectangle - wedge
    model = constants.theta0 * eta.norm_sq - 0.5 * (
        config.gamma + config.delta) * k_weighted
    return TrapezoidEnergyReport(value=value, rectangle=rectangle, wedge=wedge,
                                 tan_coefficient=tan_coeff,
                                 q_transverse=q_transverse,
                                 k_weighted=k_weighted,
                                 eta_norm_sq=eta.norm_sq,
                                 model=model, remainder=value - model)


# ----------------------------------------------------------------------
# The assembled upper bound
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class CornerBoundReport:
    """All terms of the Rayleigh-quotient upper bound at one delta."""

    delta: float
    gamma: float
    ell: float
    epsilon: float
    quotient: float
    gap: float               # theta0 - quotient (positive = strict binding)
    n_half: float            # half the squared L2 norm of eta Psi
    q_half: float            # half its magnetic energy
    i_delta_model: float     # (-c1 delta / 2 + ||eta'||^2) / ||eta||^2
    j_weighted: float        # K - cross moment (the order-delta energy slope)
    c1_residual: float       # J - theta0 M1 - c1  (exponentially small)
    w_transverse: float      # q - mu n (transverse energy excess)
    m1: float
    n_ell: float
    eta_norm_sq: float
    eta_prime_norm_sq: float
    theta0_grid: float
    theta0_ref: float
    sector: SectorEnergyReport
    trapezoid: TrapezoidEnergyReport


def corner_upper_bound(config: CornerTrialConfig,
                       constants: UniversalConstants,
                       f_ell: FellProfile | None = None) -> CornerBoundReport:
    """Assemble the Rayleigh quotient of the truncated corner trial state.

    By the reflection symmetry both half-sector energies and norms are
    equal, so the quotient is computed from the upper half alone:

      N/2 = ||eta||^2 n_ell - tan(delta/2) M1
      Q/2 = [rectangle - wedge] + E(V+) + n_ell ||eta'||^2

    all pieces being exact reductions of the 2D integrals (no asymptotic
    step is taken; the small-delta model enters only through the reported
    i_delta_model decomposition).
    """
    if f_ell is None:
        f_ell = corner_profile(config, constants)
    _require_plateau_covers_transition(config)
    eta = eta_plus_of(config, constants)
    sector = sector_energy(config, constants, f_ell)
    trapezoid = trapezoid_energy(config, constants, f_ell)

    n_ell = f_ell.norm_sq
    m1 = f_ell.first_moment
    mu = f_ell.solution.mu
    w_transverse = trapezoid.q_transverse - mu * n_ell

    n_half = eta.norm_sq * n_ell - math.tan(0.5 * config.delta) * m1
    if n_half <= 0.0:
        raise ConfigError("trial state has nonpositive half-norm; enlarge eta")
    q_half = trapezoid.value + sector.quadrature + n_ell * eta.prime_norm_sq
    quotient = q_half / n_half
    theta0 = constants.theta0
    j_weighted = f_ell.j_functional
    i_delta_model = ((-0.5 * constants.c1 * config.delta + eta.prime_norm_sq)
                     / eta.norm_sq)
    return CornerBoundReport(
        delta=config.delta, gamma=config.gamma, ell=config.ell,
        epsilon=config.epsilon, quotient=quotient, gap=theta0 - quotient,
        n_half=n_half, q_half=q_half, i_delta_model=i_delta_model,
        j_weighted=j_weighted,
        c1_residual=j_weighted - theta0 * m1 - constants.c1,
        w_transverse=w_transverse, m1=m1, n_ell=n_ell,
        eta_norm_sq=eta.norm_sq, eta_prime_norm_sq=eta.prime_norm_sq,
        theta0_grid=mu, theta0_ref=theta0,
        sector=sector, trapezoid=trapezoid)


def corner_sweep(deltas, constants: UniversalConstants,
                 **config_kwargs) -> list[CornerBoundReport]:
    """Upper-bound reports over a list of delta values (default scalings)."""
    reports = []
    for delta in deltas:
        config = CornerTrialConfig(delta=float(delta), **config_kwargs)
        reports.append(corner_upper_bound(config, constants))
    return reports


# ----------------------------------------------------------------------
# Cutoff optimization and the delta^2 fit
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class EtaOptimumReport:
    """Closed forms of the exponential-cutoff functional I(eta)."""

    d: float                 # c1 * delta
    epsilon: float
    alpha_star: float        # exact minimizer of (a^2 - d a)/(1 + 2 eps a)
    i_star: float
    alpha_simple: float      # the leading-order choice d/2
    i_simple: float
    norm_sq_simple: float    # eps + 1/d at alpha = d/2
    prime_norm_sq_simple: float  # d/4


def i_delta_closed(alpha: float, d: float, epsilon: float) -> float:
    """I(eta_alpha) = (alpha^2 - d alpha) / (1 + 2 epsilon alpha)."""
    return (alpha * alpha - d * alpha) / (1.0 + 2.0 * epsilon * alpha)


def optimize_eta(delta: float, epsilon: float, c1: float) -> EtaOptimumReport:
    """Minimize the cutoff functional over the exponential family.

    I(eta) = (||eta'||^2 - (c1 delta / 2)) / ||eta||^2 on eta = 1 on
    (0, epsilon), exp(-alpha(x - epsilon)) beyond; with d = c1 delta the
    closed form is (alpha^2 - d alpha)/(1 + 2 epsilon alpha), minimized at
    alpha = (-1 + sqrt(1 + 2 epsilon d)) / (2 epsilon) = d/2 + O(d^2), and
    I at the simplified choice alpha = d/2 is -d^2/4 + O(d^3).
    """
    if delta <= 0.0 or epsilon <= 0.0 or c1 <= 0.0:
        raise ConfigError("optimize_eta needs positive delta, epsilon, c1")
    d = c1 * delta
    alpha_star = (-1.0 + math.sqrt(1.0 + 2.0 * epsilon * d)) / (2.0 * epsilon)
    alpha_simple = 0.5 * d
    return EtaOptimumReport(
        d=d, epsilon=epsilon,
        alpha_star=alpha_star,
        i_star=i_delta_closed(alpha_star, d, epsilon),
        alpha_simple=alpha_simple,
        i_simple=i_delta_closed(alpha_simple, d, epsilon),
        norm_sq_simple=epsilon + 1.0 / d,
        prime_norm_sq_simple=0.25 * d)


@dataclass(frozen=True)
class FitReport:
    """Extrapolation of (theta0 - quotient)/delta^2 to delta = 0."""

    coefficient: float       # fitted value at delta = 0
    slope: float             # coefficient of sqrt(delta)
    residual: float          # rms misfit of the linear model
    deltas: tuple
    values: tuple            # (theta0 - quotient) / delta^2 per point


def fit_delta_squared_coefficient(sweep, theta0: float | None = None) -> FitReport:
    """Fit gap/delta^2 = c0 + c1 sqrt(delta) and extrapolate to delta = 0.

    The sqrt(delta) regressor matches the leading remainder order of the
    assembled bound (the cutoff optimization is exact to O(delta^{5/2})).
    Accepts either bound reports (as produced by corner_sweep) or raw
    (delta, quotient) pairs.  Requires >= 4 points spanning a decade,
    strictly positive gaps, and gaps increasing with delta.
    """
    pts = sorted(
        (item.delta, item.quotient) if isinstance(item, CornerBoundReport)
        else (float(item[0]), float(item[1]))
        for item in sweep)
    if len(pts) < 4:
        raise DataError(f"need at least 4 sweep points, got {len(pts)}")
    deltas = np.array([p[0] for p in pts])
    quotients = np.array([p[1] for p in pts])
    if deltas[-1] < 10.0 * deltas[0]:
        raise DataError("sweep must span at least one decade in delta")
    if theta0 is None:
        from .degennes import reference_constants
        theta0 = reference_constants().theta0
    gaps = theta0 - quotients
    if np.any(gaps <= 0.0):
        raise DataError("nonpositive gap in sweep: the bound does not certify "
                        "binding at these deltas")
    if np.any(np.diff(gaps) <= 0.0):
        raise DataError("gaps must increase with delta")
    y = gaps / deltas**2
    x = np.sqrt(deltas)
    design = np.stack([np.ones_like(x), x], axis=-1)
    coef, res, _, _ = np.linalg.lstsq(design, y, rcond=None)
    pred = design @ coef
    rms = float(np.sqrt(np.mean((y - pred) ** 2)))
    return FitReport(coefficient=float(coef[0]), slope=float(coef[1]),
                     residual=rms, deltas=tuple(deltas.tolist()),
                     values=tuple(y.tolist()))
