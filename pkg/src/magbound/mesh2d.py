"""Structured band meshes for truncated magnetic domains.

The bound states this package certifies live within a few unit lengths of
the boundary (the transverse profile decays like exp(-(t-xi0)^2/2)), so
instead of meshing a full truncated sector we mesh a band of width W
along the physical boundary and close it with artificial Dirichlet walls:
the omitted bulk carries ~exp(-(W-xi0)^2) of the state and perturbs the
eigenvalue far below the truncation effects that the radius study already
tracks.

Three boundary shapes are supported:

* corner: the convex wedge {x2 > 0, x2 > -x1 tan(delta)} of opening
  pi - delta.  Each half (split along the bisector) is covered by a
  sheared lattice spanned by the boundary ray and the bisector direction,
  so boundary nodes sit exactly on the rays and the two halves share
  their seam nodes exactly ("zipper" mesh).  Cells are congruent
  parallelograms with acute included angle (pi - delta)/2; splitting
  along the short diagonal yields uniformly acute triangles.
* curved: the band {c(s) + t n(s)} along a curve whose tangent angle is
  delta * int kappa, mapped from a uniform (s, t) grid.
* halfplane / box: straight reference geometries for calibration.

All meshes are deterministic functions of their parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .curved import CurvatureProfile
from .errors import AssemblyError, ConfigError

__all__ = [
    "Mesh2D",
    "TruncatedDomain",
    "corner_domain",
    "curved_domain",
    "halfplane_domain",
    "box_domain",
]


@dataclass(frozen=True)
class Mesh2D:
    """Conforming triangle mesh with Dirichlet tags on artificial walls.

    ``dirichlet`` marks nodes on artificial truncation boundaries; every
    other boundary node is physical and receives the natural (magnetic
    Neumann) treatment simply by carrying no constraint.
    """

    nodes: np.ndarray       # (n, 2) float
    triangles: np.ndarray   # (m, 3) int32
    dirichlet: np.ndarray   # (n,) bool

    @property
    def node_count(self) -> int:
        return self.nodes.shape[0]

    @property
    def interior_count(self) -> int:
        return int(np.sum(~self.dirichlet))

    def areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


@dataclass(frozen=True)
class TruncatedDomain:
    """A meshed, truncated slice of one of the model geometries."""

    kind: str               # corner | curved | halfplane | box
    delta: float
    radius: float
    width: float
    h: float
    mesh: Mesh2D
    curvature: CurvatureProfile | None

    @property
    def unknowns(self) -> int:
        return self.mesh.interior_count


def _validate_mesh(mesh: Mesh2D, h: float) -> None:
    areas = mesh.areas()
    if areas.size == 0:
        raise AssemblyError("mesh has no triangles")
    if float(np.min(areas)) <= 1e-6 * h * h:
        raise AssemblyError(
            f"degenerate triangle (area {np.min(areas):.3e}) in the mesh")
    used = np.zeros(mesh.node_count, dtype=bool)
    used[mesh.triangles.ravel()] = True
    if not np.all(used):
        raise AssemblyError("mesh contains nodes not used by any triangle")


def _grid_counts(radius: float, width: float, h: float,
                 t_step: float) -> tuple[int, int]:
    if h <= 0.0:
        raise ConfigError(f"mesh size must be positive, got {h}")
    if h > 0.25:
        raise ConfigError(
            f"mesh size {h} cannot resolve the unit magnetic length "
            "(need h <= 0.25)")
    if radius <= 2.0 * h:
        raise ConfigError(f"radius {radius} does not fit a band at h = {h}")
    if width <= 2.0 * t_step:
        raise ConfigError(f"band width {width} too small for h = {h}")
    return int(math.ceil(radius / h)), int(math.ceil(width / t_step))


def _split_quads(quad_corners: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    """Split quads (i00, i10, i11, i01) along their shorter diagonal.

    The shorter diagonal of a (near-)parallelogram connects its obtuse
    corners, so both resulting triangles are acute and every cotangent
    weight in the assembled operator stays nonnegative.
    """
    p = nodes[quad_corners]
    main = np.sum((p[:, 2] - p[:, 0]) ** 2, axis=1)
    cross = np.sum((p[:, 3] - p[:, 1]) ** 2, axis=1)
    use_cross = cross <= main
    i00, i10, i11, i01 = (quad_corners[:, k] for k in range(4))
    tris = np.empty((2 * quad_corners.shape[0], 3), dtype=np.int32)
    tris[0::2] = np.where(use_cross[:, None],
                          np.column_stack([i00, i10, i01]),
                          np.column_stack([i00, i10, i11]))
    tris[1::2] = np.where(use_cross[:, None],
                          np.column_stack([i10, i11, i01]),
                          np.column_stack([i00, i11, i01]))
    return tris


def _structured_quads(n_s: int, n_t: int, index) -> np.ndarray:
    u, v = np.meshgrid(np.arange(n_s), np.arange(n_t), indexing="ij")
    u, v = u.ravel(), v.ravel()
    return np.column_stack(
        [index(u, v), index(u + 1, v), index(u + 1, v + 1), index(u, v + 1)])


def corner_domain(delta: float, radius: float, h: float, *,
                  width: float = 5.0) -> TruncatedDomain:
    """Band mesh of the wedge {x2 > 0, x2 > -x1 tan(delta)}.

    The wedge opens by pi - delta; its bisector makes the angle
    beta = (pi - delta)/2 with each boundary ray.  Half the band is the
    image of a uniform (u, v) grid under (u, v) -> u h e_ray + v h e_bis,
    the other half is its mirror image, and the shared v-column on the
    bisector zips the two halves together without any unstructured glue.
    """
    if not 0.0 < delta < 2.0:
        raise ConfigError(f"corner parameter must be in (0, 2), got {delta}")
    beta = 0.5 * (math.pi - delta)
    sin_beta = math.sin(beta)
    n_s, n_t = _grid_counts(radius, width, h, h * sin_beta)

    e_ray = np.array([1.0, 0.0])
    e_bis = np.array([math.cos(beta), math.sin(beta)])
    u = np.arange(n_s + 1)[:, None, None]
    v = np.arange(n_t + 1)[None, :, None]
    half_a = h * (u * e_ray[None, None, :] + v * e_bis[None, None, :])
    half_a = half_a.reshape(-1, 2)

    mirror = np.array([
        [math.cos(2 * beta), math.sin(2 * beta)],
        [math.sin(2 * beta), -math.cos(2 * beta)],
    ])
    # Mirror every column except the seam (u = 0), which both halves share.
    half_b = half_a.reshape(n_s + 1, n_t + 1, 2)[1:].reshape(-1, 2) @ mirror.T
    nodes = np.vstack([half_a, half_b])

    col = n_t + 1
    offset = (n_s + 1) * col

    def index_a(uu, vv):
        return (uu * col + vv).astype(np.int32)

    def index_b(uu, vv):
        return np.where(uu == 0, vv, offset + (uu - 1) * col + vv).astype(
            np.int32)

    tris = np.vstack([
        _split_quads(_structured_quads(n_s, n_t, index_a), nodes),
        _split_quads(_structured_quads(n_s, n_t, index_b), nodes),
    ])

    dirichlet = np.zeros(nodes.shape[0], dtype=bool)
    uu_a = np.arange(n_s + 1)[:, None]
    vv_a = np.arange(n_t + 1)[None, :]
    dirichlet[:offset] = ((uu_a == n_s) | (vv_a == n_t)).ravel()
    uu_b = np.arange(1, n_s + 1)[:, None]
    dirichlet[offset:] = ((uu_b == n_s) | (vv_a == n_t)).ravel()

    mesh = Mesh2D(nodes=nodes, triangles=tris, dirichlet=dirichlet)
    _validate_mesh(mesh, h)
    return TruncatedDomain(kind="corner", delta=float(delta),
                           radius=n_s * h, width=n_t * h * sin_beta, h=float(h),
                           mesh=mesh, curvature=None)


def _curve_frame(curvature: CurvatureProfile, delta: float,
                 s_nodes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Positions and tangent angles of the boundary curve at the s grid.

    The tangent angle is delta * int kappa (running integral); positions
    integrate (cos, sin) of it with a Gauss rule per grid interval, so
    node placement is exact to quadrature precision.
    """
    theta = delta * curvature.integral_up_to(s_nodes)

    order = 8
    x_ref, w_ref = np.polynomial.legendre.leggauss(order)
    mid = 0.5 * (s_nodes[:-1] + s_nodes[1:])
    half = 0.5 * np.diff(s_nodes)
    quad_s = mid[:, None] + half[:, None] * x_ref[None, :]
    quad_theta = delta * curvature.integral_up_to(quad_s.ravel())
    quad_theta = quad_theta.reshape(quad_s.shape)
    dx = half * (np.cos(quad_theta) @ w_ref)
    dy = half * (np.sin(quad_theta) @ w_ref)

    points = np.empty((s_nodes.size, 2))
    points[0] = (s_nodes[0], 0.0)
    points[1:, 0] = s_nodes[0] + np.cumsum(dx)
    points[1:, 1] = np.cumsum(dy)
    return points, theta


def _check_tube_injective(points: np.ndarray, s_nodes: np.ndarray,
                          width: float) -> None:
    """Reject boundary curves whose band would overlap itself.

    Within a valid tube, two curve points closer than 2W in the plane are
    also close along the curve (arc length exceeds the chord by at most a
    curvature-bounded factor).  A pair that is plane-close but arc-far
    means distant pieces of the band collide, so the (s, t) coordinates
    stop being injective and the mesh would double-cover that region.
    """
    tree = cKDTree(points)
    pairs = tree.query_pairs(2.0 * width, output_type="ndarray")
    if pairs.size == 0:
        return
    arc_gap = np.abs(s_nodes[pairs[:, 0]] - s_nodes[pairs[:, 1]])
    worst = float(np.max(arc_gap))
    if worst > 4.0 * width:
        raise ConfigError(
            f"boundary curve points with arc separation {worst:.2f} come "
            f"within {2.0 * width:.2f} of each other: the band of width "
            f"{width} self-intersects")


def curved_domain(curvature: CurvatureProfile, delta: float, radius: float,
                  h: float, *, width: float = 4.5) -> TruncatedDomain:
    """Band mesh along a curved boundary with tangent turning delta*kappa."""
    if delta <= 0.0:
        raise ConfigError(f"delta must be positive, got {delta}")
    margin = 1.0 - delta * max(curvature.max_value, 0.0) * width
    if margin < 0.2:
        raise ConfigError(
            f"band of width {width} leaves tubular margin {margin:.3f} < 0.2; "
            "shrink width or delta")
    n_s, n_t = _grid_counts(2.0 * radius, width, h, h)
    s_nodes = np.linspace(-radius, radius, n_s + 1)
    points, theta = _curve_frame(curvature, delta, s_nodes)
    _check_tube_injective(points, s_nodes, width)
    normals = np.column_stack([-np.sin(theta), np.cos(theta)])
    t_nodes = np.linspace(0.0, width, n_t + 1)
    nodes = (points[:, None, :]
             + t_nodes[None, :, None] * normals[:, None, :]).reshape(-1, 2)

    col = n_t + 1

    def index(uu, vv):
        return (uu * col + vv).astype(np.int32)

    tris = _split_quads(_structured_quads(n_s, n_t, index), nodes)
    uu = np.arange(n_s + 1)[:, None]
    vv = np.arange(n_t + 1)[None, :]
    dirichlet = ((uu == 0) | (uu == n_s) | (vv == n_t)).ravel()

    mesh = Mesh2D(nodes=nodes, triangles=tris, dirichlet=dirichlet)
    _validate_mesh(mesh, h)
    return TruncatedDomain(kind="curved", delta=float(delta),
                           radius=float(radius), width=float(width),
                           h=float(h), mesh=mesh, curvature=curvature)


def _rectangle_mesh(s_lo: float, s_hi: float, width: float, h: float,
                    dirichlet_sides: tuple[bool, bool, bool]) -> Mesh2D:
    """Uniform rectangle mesh; sides = (s ends, top t = width, bottom t = 0)."""
    n_s, n_t = _grid_counts(s_hi - s_lo, width, h, h)
    s_nodes = np.linspace(s_lo, s_hi, n_s + 1)
    t_nodes = np.linspace(0.0, width, n_t + 1)
    nodes = np.column_stack([
        np.repeat(s_nodes, n_t + 1), np.tile(t_nodes, n_s + 1)])
    col = n_t + 1

    def index(uu, vv):
        return (uu * col + vv).astype(np.int32)

    tris = _split_quads(_structured_quads(n_s, n_t, index), nodes)
    uu = np.arange(n_s + 1)[:, None]
    vv = np.arange(n_t + 1)[None, :]
    ends, top, bottom = dirichlet_sides
    mask = np.zeros((n_s + 1, n_t + 1), dtype=bool)
    if ends:
        mask |= (uu == 0) | (uu == n_s)
    if top:
        mask |= (vv == n_t)
    if bottom:
        mask |= (vv == 0)
    return Mesh2D(nodes=nodes, triangles=tris, dirichlet=mask.ravel())


def halfplane_domain(radius: float, h: float, *,
                     width: float = 5.0) -> TruncatedDomain:
    """Straight boundary strip [-R, R] x [0, W]; bottom edge is physical."""
    if radius <= 2.0 * h or width <= 2.0 * h:
        raise ConfigError("halfplane band does not fit the requested h")
    mesh = _rectangle_mesh(-radius, radius, width, h, (True, True, False))
    _validate_mesh(mesh, h)
    return TruncatedDomain(kind="halfplane", delta=0.0, radius=float(radius),
                           width=float(width), h=float(h), mesh=mesh,
                           curvature=None)


def box_domain(side: float, h: float) -> TruncatedDomain:
    """Fully physical square box (no artificial boundary anywhere)."""
    if side <= 2.0 * h:
        raise ConfigError("box side does not fit the requested h")
    mesh = _rectangle_mesh(0.0, side, side, h, (False, False, False))
    _validate_mesh(mesh, h)
    return TruncatedDomain(kind="box", delta=0.0, radius=float(side),
                           width=float(side), h=float(h), mesh=mesh,
                           curvature=None)
