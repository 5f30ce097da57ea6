"""Half-line magnetic-fiber oscillators H_xi = -d^2/dt^2 + (t-xi)^2 on
L^2(0, t_max) with a Neumann condition at t = 0.

Provides the ground-state family mu(xi), the minimizing pair
(xi0, theta0), the universal constant c1 = f(0)^2/3, moment/energy
identities of the ground state, cutoff profiles zeta, and the truncated
profile f_ell = zeta(t/ell) f used by the trial-state modules.

Discretization: uniform grid, ghost-node Neumann fold at t = 0, Dirichlet
at t = t_max (the state is Gaussian-small there). Two schemes:

* ``fd2``: classical 3-point stencil, O(h^2) eigenvalues.
* ``fd4``: 5-point stencil with a one-entry boundary correction
  -(h xi)/3 at (0,0) that cancels the third-derivative fold bias
  (u'''(0) = -2 xi u(0) from the ODE), restoring O(h^4) eigenvalues.

Both schemes are posed as the generalized symmetric-definite pencil
S u = mu B u with S = B A symmetric banded and B = diag(1/2, 1, ..., 1)
(the half weight at t = 0 is what makes the folded stencil self-adjoint).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eig_banded
from scipy.optimize import brentq, minimize_scalar

from .numerics import (
    banded_matvec,
    fd_derivative,
    lowest_eig_banded,
    simpson_partial,
    simpson_uniform,
    simpson_weights,
)


class TruncationError(RuntimeError):
    """Grid too short: the ground state carries non-negligible tail mass."""


class ConvergenceError(RuntimeError):
    """Eigensolver failed to converge within its iteration budget."""


class BracketError(RuntimeError):
    """Minimizer landed on the boundary of the search bracket."""


# ----------------------------------------------------------------------
# Grid and operator assembly
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class HalfLineGrid:
    """Uniform grid on [0, t_max] with an odd node count (Simpson-ready)."""

    t_max: float = 20.0
    n: int = 4001
    scheme: str = "fd4"

    def __post_init__(self) -> None:
        if self.t_max <= 0.0:
            raise ValueError(f"t_max must be positive, got {self.t_max}")
        if self.n < 9 or self.n % 2 == 0:
            raise ValueError(f"n must be odd and >= 9, got {self.n}")
        if self.scheme not in ("fd2", "fd4"):
            raise ValueError(f"unknown scheme {self.scheme!r}")

    @property
    def h(self) -> float:
        return self.t_max / (self.n - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max, self.n)


def operator_bands(grid: HalfLineGrid, xi: float):
    """Symmetric banded matrix S = B A for H_xi, plus the diagonal of B.

    S is returned in LAPACK banded storage of shape (2*kb+1, m) with
    m = n - 1 unknowns (the Dirichlet node at t_max is eliminated).
    """
    h = grid.h
    m = grid.n - 1
    t = grid.nodes[:m]
    v = (t - xi) ** 2
    b_diag = np.ones(m)
    b_diag[0] = 0.5
    if grid.scheme == "fd2":
        kb = 1
        ab = np.zeros((3, m))
        ab[1, :] = 2.0 / h**2 + v
        ab[0, 1:] = -1.0 / h**2
        ab[2, :-1] = -1.0 / h**2
        # Neumann fold at node 0: row [2, -2]/h^2; B-weight 1/2 makes it
        # symmetric with entries 1/h^2 and -1/h^2.
        ab[1, 0] = 1.0 / h**2 + 0.5 * v[0]
    else:
        kb = 2
        c = 1.0 / (12.0 * h**2)
        ab = np.zeros((5, m))
        ab[2, :] = 30.0 * c + v
        ab[1, 1:] = -16.0 * c
        ab[3, :-1] = -16.0 * c
        ab[0, 2:] = c
        ab[4, :-2] = c
        # Neumann fold: row 1 picks up the reflected outer entry, row 0
        # keeps its diagonal but is halved by B; the extra -(h xi)/3
        # cancels the even-fold bias caused by u'''(0) = -2 xi u(0).
        ab[2, 1] = 31.0 * c + v[1]
        ab[2, 0] = 0.5 * (30.0 * c + v[0] - h * xi / 3.0)
        ab[1, 1] = -16.0 * c  # S[0,1] = (1/2)(-32 c)
        ab[0, 2] = c          # S[0,2] = (1/2)(2 c)
        # Dirichlet end: drop couplings to the pinned node; odd fold of
        # the outermost entry at the last interior row.
        ab[2, m - 1] = 29.0 * c + v[m - 1]
    return ab, b_diag, kb


# ----------------------------------------------------------------------
# Ground-state solve
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class DeGennesSolution:
    """Ground state of H_xi on a grid: eigenvalue, samples, tail mass."""

    xi: float
    mu: float
    eigenfunction: np.ndarray  # length grid.n, Simpson-normalized, >= 0
    grid: HalfLineGrid
    tail_mass: float  # integral of f^2 over [t_max/2, t_max]

    @property
    def h(self) -> float:
        return self.grid.h

    @property
    def t(self) -> np.ndarray:
        return self.grid.nodes


def solve_h_xi(xi: float, grid: HalfLineGrid, *,
               strict_tail: bool = True,
               tail_sweeps: int = 0) -> DeGennesSolution:
    """Lowest Neumann eigenpair of -u'' + (t-xi)^2 u on the grid.

    The returned eigenfunction has n samples (a zero is appended at the
    Dirichlet node), is Simpson-normalized to unit L^2 norm, and is
    positive. ``strict_tail=False`` skips the truncation guard so that
    deliberately short grids can still be inspected.

    The eigenvalue is re-evaluated from the converged vector through the
    summed-by-parts quadratic form: squaring first differences avoids the
    eps/h^2 rounding that a matrix-vector product contributes, so the
    reported value is noise-free to ~1e-14 instead of ~1e-11.
    """
    ab, b_diag, _ = operator_bands(grid, xi)
    _, u = lowest_eig_banded(ab, b_diag, shift=0.4, min_iter=tail_sweeps)
    f = np.concatenate([u, [0.0]])
    nrm2 = simpson_uniform(f * f, grid.h)
    f = f / math.sqrt(nrm2)
    mu = quadratic_form(grid, xi, f) / b_norm_sq(grid, f)
    tail = _window_mass(f, grid)
    if strict_tail and tail > 1e-10:
        raise TruncationError(
            f"tail mass {tail:.3e} on [{grid.t_max / 2}, {grid.t_max}] "
            f"exceeds 1e-10; increase t_max")
    return DeGennesSolution(xi=float(xi), mu=float(mu), eigenfunction=f,
                            grid=grid, tail_mass=float(tail))


def quadratic_form(grid: HalfLineGrid, xi: float, f: np.ndarray) -> float:
    """B-weighted discrete energy of full-grid samples f (length n).

    Evaluates f^T S f (S = B A as in ``operator_bands``) in the
    cancellation-free factored form

        sum e_j^2 / h^2  +  (h^2/12) |L2 f|_B^2  +  sum B V f^2  + corr,

    where e are first differences and L2 the folded 3-point operator;
    the identity A = L2 + (h^2/12) L2^2 holds exactly including the even
    fold at 0 and the odd/Dirichlet fold at t_max, because L2 preserves
    both reflection symmetries. The fd2 scheme drops the L2^2 term.
    Returned with the h factor: approximates integral f'^2 + (t-xi)^2 f^2.
    """
    f = np.asarray(f, dtype=float)
    if f.shape[0] != grid.n:
        raise ValueError("sample count does not match the grid")
    h = grid.h
    m = grid.n - 1
    u = f[:m]
    t = grid.nodes[:m]
    v = (t - xi) ** 2
    b = np.ones(m)
    b[0] = 0.5

    e = np.diff(f)  # u_{j+1} - u_j, j = 0..m-1, with f[m] pinned to 0
    q2 = math.fsum((e * e).tolist()) / h**2
    qv = math.fsum((b * v * u * u).tolist())
    total = q2 + qv
    if grid.scheme == "fd4":
        delta = np.empty(m)
        delta[0] = 2.0 * e[0]                     # even fold
        delta[1:] = e[1:m] - e[:m - 1]
        q4 = math.fsum((b * delta * delta).tolist()) / (12.0 * h**2)
        total += q4
        total += 0.5 * (-h * xi / 3.0) * u[0] ** 2
    return h * total


def b_norm_sq(grid: HalfLineGrid, f: np.ndarray) -> float:
    """B-weighted squared norm (trapezoid with the Dirichlet end pinned)."""
    m = grid.n - 1
    u = np.asarray(f, dtype=float)[:m]
    b = np.ones(m)
    b[0] = 0.5
    return grid.h * math.fsum((b * u * u).tolist())


def _window_mass(f: np.ndarray, grid: HalfLineGrid) -> float:
    """Mass of f^2 on the outer half of the grid, [t_max/2, t_max]."""
    total = simpson_uniform(f * f, grid.h)
    inner = simpson_partial(f * f, grid.h, grid.t_max / 2.0)
    return float(total - inner)


def dense_oracle_mu(xi: float, grid: HalfLineGrid, *,
                    with_vector: bool = False):
    """Independent eigenvalue via LAPACK's full banded diagonalizer.

    Symmetrizes the pencil by similarity, C = B^{-1/2} S B^{-1/2}, and
    calls a direct (non-iterative) dense-banded eigensolver. Used as an
    oracle against the inverse-iteration path.
    """
    ab, b_diag, kb = operator_bands(grid, xi)
    m = ab.shape[1]
    sq = np.sqrt(b_diag)
    c = np.zeros((kb + 1, m))  # upper banded storage for eig_banded
    for k in range(kb + 1):
        # row (kb - k) of upper storage holds C[i, i+k]
        if k == 0:
            c[kb, :] = ab[kb, :] / (sq * sq)
        else:
            c[kb - k, k:] = ab[kb - k, k:] / (sq[:-k] * sq[k:])
    if not with_vector:
        w = eig_banded(c, lower=False, eigvals_only=True,
                       select="i", select_range=(0, 0))
        return float(w[0])
    w, vecs = eig_banded(c, lower=False, select="i", select_range=(0, 0))
    u = vecs[:, 0] / sq
    if u[0] < 0:
        u = -u
    f = np.concatenate([u, [0.0]])
    f /= math.sqrt(simpson_uniform(f * f, grid.h))
    return float(w[0]), f


# ----------------------------------------------------------------------
# Universal constants
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class UniversalConstants:
    """Minimizer data of xi -> mu(xi) and the derived ground-state constants."""

    theta0: float
    xi0: float
    c1: float
    mu_second: float
    moments: dict  # centered moments k -> integral of (t-xi0)^k f^2
    weighted: dict  # t-weighted energy and cross-moment identities
    grid: HalfLineGrid


def find_theta0(grid: HalfLineGrid | None = None,
                bracket: tuple[float, float] = (0.5, 1.2)) -> UniversalConstants:
    """Minimize mu over xi, then polish with the first-moment root.

    The bracketing minimizer locates xi0 to ~1e-8; the zero of
    m1(xi) = integral (t-xi) u_xi^2 dt (which is -mu'(xi)/2 by first-order
    eigenvalue perturbation) pins it to full precision, because the moment
    crosses zero transversally while mu is flat at its minimum.
    """
    if grid is None:
        grid = reference_grid()
    if grid.t_max < 15.0:
        raise ValueError(
            f"constants require t_max >= 15 (Gaussian tail), got {grid.t_max}")

    def mu_of(xi: float) -> float:
        return solve_h_xi(xi, grid).mu

    res = minimize_scalar(mu_of, bounds=bracket, method="bounded",
                          options={"xatol": 1e-10})
    xi_min = float(res.x)
    lo, hi = bracket
    if not (lo + 1e-6 < xi_min < hi - 1e-6):
        raise BracketError(
            f"minimizer {xi_min} at the edge of bracket {bracket}")

    # Polish: at the minimizer mu(xi0) = xi0^2 (boundary identity), and
    # mu - xi^2 crosses zero transversally with slope ~ -2 xi0. Rooting it
    # exploits the eigenvalue superconvergence of the scheme, pinning xi0
    # far more tightly than the flat minimum of mu itself can.
    def gap_of(xi: float) -> float:
        return mu_of(xi) - xi * xi

    width = 1e-6
    while width < 1e-2:
        a, b = xi_min - width, xi_min + width
        if gap_of(a) * gap_of(b) < 0.0:
            xi0 = brentq(gap_of, a, b, xtol=1e-13, rtol=8.9e-16)
            break
        width *= 4.0
    else:
        raise BracketError("boundary-identity polish found no sign change")

    sol0 = solve_h_xi(xi0, grid)
    theta0 = sol0.mu
    c1 = sol0.eigenfunction[0] ** 2 / 3.0

    step = 1e-3
    mus = [mu_of(xi0 + k * step) for k in (-2, -1, 0, 1, 2)]
    mu_second = (-mus[0] + 16 * mus[1] - 30 * mus[2] + 16 * mus[3] - mus[4]) / (
        12 * step**2)
    if mu_second <= 0.0:
        raise ConvergenceError(f"second derivative {mu_second} not positive")

    moments_table = {k: moment(sol0, k) for k in (1, 2, 3)}
    weighted = {
        "energy_t": weighted_energy_identity(sol0),
        "cross_t": moment(sol0, 1, lambda t: t * (t - 2 * xi0)),
    }
    return UniversalConstants(theta0=float(theta0), xi0=float(xi0),
                              c1=float(c1), mu_second=float(mu_second),
                              moments=moments_table, weighted=weighted,
                              grid=grid)


def reference_grid() -> HalfLineGrid:
    """Grid used for the package's frozen reference constants."""
    return HalfLineGrid(t_max=25.0, n=32001, scheme="fd4")


@lru_cache(maxsize=1)
def reference_constants() -> UniversalConstants:
    """Package-wide constants (theta0, xi0, c1, ...), computed once."""
    return find_theta0(reference_grid())


# ----------------------------------------------------------------------
# Ground-state functionals
# ----------------------------------------------------------------------

def moment(solution: DeGennesSolution, k: int, weight=None) -> float:
    """Integral of (t - xi)^k w(t) f^2 dt by the grid's Simpson rule."""
    t = solution.t
    f2 = solution.eigenfunction**2
    vals = (t - solution.xi) ** k * f2
    if weight is not None:
        vals = vals * weight(t)
    return simpson_uniform(vals, solution.h)


def weighted_energy_identity(solution: DeGennesSolution,
                             derivative_order: int | None = None) -> float:
    """t-weighted energy defect: integral (f'^2 + (xi-t)^2 f^2 - mu f^2) t dt.

    At the minimizing xi this equals (3/2) c1; away from it the raw value
    is returned without any assertion.
    """
    if derivative_order is None:
        derivative_order = 2 if solution.grid.scheme == "fd2" else 4
    t = solution.t
    f = solution.eigenfunction
    df = fd_derivative(f, solution.h, order=derivative_order)
    vals = (df**2 + ((solution.xi - t) ** 2 - solution.mu) * f**2) * t
    return simpson_uniform(vals, solution.h)


# ----------------------------------------------------------------------
# Cutoff profiles and the truncated profile f_ell
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class CutoffProfile:
    """Even cutoff zeta: 1 on [-plateau, plateau], 0 outside [-1, 1].

    ``smooth`` uses the classic exp(-1/x) mollifier step (C-infinity);
    ``quintic`` uses the C^2 polynomial smoothstep. Scaled by ell via
    f_ell(t) = zeta(t/ell) f(t).
    """

    ell: float
    kind: str = "smooth"
    plateau: float = 0.8

    def __post_init__(self) -> None:
        if self.ell <= 0.0:
            raise ValueError(f"ell must be positive, got {self.ell}")
        if self.kind not in ("smooth", "quintic"):
            raise ValueError(f"unknown cutoff kind {self.kind!r}")
        if not 0.0 < self.plateau < 1.0:
            raise ValueError(f"plateau must lie in (0,1), got {self.plateau}")

    def zeta(self, x) -> np.ndarray:
        """Cutoff value at scaled coordinate x (vectorized)."""
        x = np.abs(np.asarray(x, dtype=float))
        v = (1.0 - x) / (1.0 - self.plateau)  # 1 at |x|=plateau, 0 at |x|=1
        v = np.clip(v, 0.0, 1.0)
        return self._step(v)

    def zeta_prime(self, x) -> np.ndarray:
        """Derivative d zeta / dx (vectorized, odd)."""
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        v = (1.0 - ax) / (1.0 - self.plateau)
        inside = (v > 0.0) & (v < 1.0)
        out = np.zeros_like(ax)
        vv = np.where(inside, v, 0.5)
        dstep = self._step_prime(vv)
        out = np.where(inside, -dstep / (1.0 - self.plateau), 0.0)
        return out * np.sign(x)

    def _step(self, v: np.ndarray) -> np.ndarray:
        if self.kind == "quintic":
            return v**3 * (10.0 - 15.0 * v + 6.0 * v**2)
        return _mollifier_step(v)

    def _step_prime(self, v: np.ndarray) -> np.ndarray:
        if self.kind == "quintic":
            return 30.0 * v**2 * (1.0 - v) ** 2
        return _mollifier_step_prime(v)


def _sigma(v: np.ndarray) -> np.ndarray:
    out = np.zeros_like(v)
    pos = v > 0.0
    out[pos] = np.exp(-1.0 / v[pos])
    return out


def _mollifier_step(v: np.ndarray) -> np.ndarray:
    v = np.clip(v, 0.0, 1.0)
    a = _sigma(v)
    b = _sigma(1.0 - v)
    return a / (a + b)


def _mollifier_step_prime(v: np.ndarray) -> np.ndarray:
    v = np.clip(v, 0.0, 1.0)
    a = _sigma(v)
    b = _sigma(1.0 - v)
    da = np.zeros_like(v)
    db = np.zeros_like(v)
    pos = v > 0.0
    da[pos] = a[pos] / v[pos] ** 2
    neg = v < 1.0
    db[neg] = -b[neg] / (1.0 - v[neg]) ** 2
    s = a + b
    return (da * b - a * db) / s**2


@dataclass(frozen=True)
class FellProfile:
    """Truncated profile f_ell = zeta(t/ell) f on a grid, with the
    quadratic functionals used by the trial-state assemblies."""

    values: np.ndarray
    solution: DeGennesSolution
    cutoff: CutoffProfile
    norm_sq: float        # integral f_ell^2
    q_energy: float       # integral f_ell'^2 + (t-xi)^2 f_ell^2 (discrete form)
    energy_excess: float  # q_energy - mu * norm (cancellation-free)
    first_moment: float   # integral t f_ell^2
    k_weighted: float     # integral (f_ell'^2 + (xi-t)^2 f_ell^2) t
    cross_moment: float   # integral (t-xi)(t-2 xi) t f_ell^2

    @property
    def ell(self) -> float:
        return self.cutoff.ell

    @property
    def grid(self) -> HalfLineGrid:
        return self.solution.grid

    @property
    def j_functional(self) -> float:
        """K-weighted energy minus the cross moment (the order-delta slope)."""
        return self.k_weighted - self.cross_moment


def build_f_ell(solution: DeGennesSolution, cutoff: CutoffProfile) -> FellProfile:
    """Truncate the ground state at scale ell and package its functionals.

    The energy excess q(f_ell) - mu * |f_ell|^2 is evaluated through the
    commutator split

        <(zeta^2 - 1) v, r>  +  <zeta v, [S, zeta] v>  +  (q(v) - mu n(v))

    with r = (S - mu B) v. The first two pieces confine all matvec
    rounding to the cutoff transition region (where the profile is
    Gaussian-small); the last is the defining residual of mu and is below
    1e-16 by construction. This matches the direct difference wherever
    that difference is above its own rounding floor, and stays meaningful
    far below it.
    """
    grid = solution.grid
    if cutoff.ell > grid.t_max:
        raise ValueError(
            f"ell = {cutoff.ell} exceeds the grid length {grid.t_max}")
    t = grid.nodes
    h = grid.h
    zeta = cutoff.zeta(t / cutoff.ell)
    w = zeta * solution.eigenfunction

    norm_sq = simpson_uniform(w * w, h)
    first_moment = simpson_uniform(t * w * w, h)

    ab, b_diag, kb = operator_bands(grid, solution.xi)
    v = solution.eigenfunction[:-1]
    zv = zeta[:-1]
    m = v.shape[0]
    mu = solution.mu

    sv = banded_matvec(ab, v)
    r = sv - mu * (b_diag * v)
    term1 = h * float(((zv * zv - 1.0) * v) @ r)

    comm = np.zeros(m)
    for k in range(1, kb + 1):
        upper = ab[kb - k, k:]   # S[i, i+k]
        dz = zv[k:] - zv[:-k]
        comm[:-k] += upper * dz * v[k:]
        comm[k:] += upper * (-dz) * v[:-k]
    term2 = h * float((zv * v) @ comm)

    term0 = (quadratic_form(grid, solution.xi, solution.eigenfunction)
             - mu * b_norm_sq(grid, solution.eigenfunction))
    excess = term1 + term2 + term0

    q_energy = quadratic_form(grid, solution.xi, w)
    energy_excess = excess

    order = 2 if grid.scheme == "fd2" else 4
    dw = fd_derivative(w, h, order=order)
    k_weighted = simpson_uniform((dw**2 + (solution.xi - t) ** 2 * w * w) * t, h)
    cross_moment = simpson_uniform(
        (t - solution.xi) * (t - 2.0 * solution.xi) * t * w * w, h)

    return FellProfile(values=w, solution=solution, cutoff=cutoff,
                       norm_sq=float(norm_sq), q_energy=float(q_energy),
                       energy_excess=float(energy_excess),
                       first_moment=float(first_moment),
                       k_weighted=float(k_weighted),
                       cross_moment=float(cross_moment))


# ----------------------------------------------------------------------
# Tail certification
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class TailReport:
    tail_mass: float
    rates: list  # (t, local decay rate of log f)
    superexponential: bool
    truncation_warning: bool


def _tail_resolved(solution: DeGennesSolution) -> DeGennesSolution:
    """A companion solve whose deep tail is componentwise accurate.

    Two effects fake the deep tail of a standard solve. The fd4 stencil
    mixes signs, so its LU solve cancels and the eigenvector drowns in
    rounding noise below ~1e-25. And with either scheme, the all-ones
    start leaves a ghost that only contracts by ~(mu-shift)/(V(t)-shift)
    per sweep, far slower than eigenvalue convergence. The companion
    therefore uses fd2 (an M-matrix: its LU solve is subtraction-free,
    reproducing a positive Gaussian tail to relative precision) driven
    for 60 sweeps, enough to flush the ghost out to t ~ 30.
    """
    grid2 = HalfLineGrid(solution.grid.t_max, solution.grid.n, "fd2")
    return solve_h_xi(solution.xi, grid2, strict_tail=False, tail_sweeps=60)


def verify_tail_decay(solution: DeGennesSolution) -> TailReport:
    """Certify super-exponential decay on the outer half of the grid.

    Measures the local decay rate -d(log f)/dt at a ladder of points in
    [t_max/2, t_max] and checks that it increases (Gaussian-type decay);
    flags a truncation warning when the outer-half mass exceeds 1e-10.
    The mass is taken from the given solution; the rates from a
    tail-resolved companion solve.
    """
    grid = solution.grid
    mass = _window_mass(solution.eigenfunction, grid)

    resolved = _tail_resolved(solution)
    f = resolved.eigenfunction
    t = resolved.t
    rates = []
    fractions = (0.55, 0.65, 0.75, 0.85)
    for frac in fractions:
        i = int(round(frac * (grid.n - 1)))
        i = min(max(i, 2), grid.n - 3)
        if f[i - 1] <= 0.0 or f[i + 1] <= 0.0:
            continue
        rate = -(math.log(f[i + 1]) - math.log(f[i - 1])) / (2.0 * grid.h)
        rates.append((float(t[i]), float(rate)))
    increasing = all(r2 > r1 for (_, r1), (_, r2) in zip(rates, rates[1:]))
    return TailReport(tail_mass=float(mass), rates=rates,
                      superexponential=bool(increasing and len(rates) >= 2),
                      truncation_warning=bool(mass > 1e-10))


def local_decay_rate(solution: DeGennesSolution, t_point: float) -> float:
    """Local decay rate -d(log f)/dt at the grid node nearest t_point.

    For a Gaussian-type tail this grows linearly in t, which is what
    distinguishes super-exponential from merely exponential decay.
    Measured on a tail-resolved companion solve (see _tail_resolved).
    """
    resolved = _tail_resolved(solution)
    grid = resolved.grid
    f = resolved.eigenfunction
    i = int(round(t_point / grid.h))
    i = min(max(i, 1), grid.n - 2)
    if f[i - 1] <= 0.0 or f[i + 1] <= 0.0:
        raise ValueError(f"eigenfunction not positive near t={t_point}")
    return -(math.log(f[i + 1]) - math.log(f[i - 1])) / (2.0 * grid.h)
