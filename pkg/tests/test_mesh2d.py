"""Band meshes: geometry exactness, boundary tags, validation guards.

The corner band is a "zipper" of two sheared half-lattices meeting on the
bisector; every frozen count below is a deterministic function of the
build parameters.  Geometry checks assert exact placement (boundary nodes
on the rays / curve, shared seam) rather than approximate closeness,
because the builders construct those nodes directly.
"""

import math

import numpy as np
import pytest

from magbound.curved import bump_curvature
from magbound.errors import AssemblyError, ConfigError
from magbound.mesh2d import (
    box_domain,
    corner_domain,
    curved_domain,
    halfplane_domain,
)

# Frozen mesh inventories at the probe parameters.
CORNER_NODES = 6413
CORNER_UNKNOWNS = 6188
CORNER_TRIANGLES = 12480
HALFPLANE_NODES = 6171
HALFPLANE_UNKNOWNS = 5950
BOX_NODES = 1681
CURVED_NODES = 11086
CURVED_UNKNOWNS = 10755


@pytest.fixture(scope="module")
def corner():
    return corner_domain(0.5, 6.0, 0.1)


@pytest.fixture(scope="module")
def curved():
    return curved_domain(bump_curvature(), 0.2, 12.0, 0.1)


class TestCornerMesh:
    def test_inventory(self, corner):
        assert corner.mesh.node_count == CORNER_NODES
        assert corner.unknowns == CORNER_UNKNOWNS
        assert corner.mesh.triangles.shape[0] == CORNER_TRIANGLES
        assert corner.kind == "corner"
        assert corner.radius == pytest.approx(6.0, abs=1e-12)

    def test_total_area_matches_cell_count(self, corner):
        # Two halves of congruent parallelogram cells, each of area
        # h^2 sin(beta); the triangulation must tile them exactly.
        beta = 0.5 * (math.pi - 0.5)
        n_s = round(corner.radius / 0.1)
        n_t = round(corner.width / (0.1 * math.sin(beta)))
        exact = 2 * n_s * n_t * 0.01 * math.sin(beta)
        assert corner.mesh.areas().sum() == pytest.approx(exact, rel=1e-13)

    def test_all_triangles_positive(self, corner):
        areas = corner.mesh.areas()
        assert float(areas.min()) > 1e-4

    def test_boundary_rays_carry_nodes(self, corner):
        # Physical boundary nodes sit exactly on the two wedge rays.
        nodes = corner.mesh.nodes
        beta = 0.5 * (math.pi - 0.5)
        n_s = round(corner.radius / 0.1)
        on_ray1 = np.abs(nodes[:, 1]) < 1e-13
        ray2 = np.array([math.cos(2 * beta), math.sin(2 * beta)])
        cross = nodes[:, 0] * ray2[1] - nodes[:, 1] * ray2[0]
        on_ray2 = np.abs(cross) < 1e-13
        assert int(on_ray1.sum()) == n_s + 1
        assert int(on_ray2.sum()) == n_s + 1
        # The tip belongs to both rays and is a physical (free) node.
        tip = np.flatnonzero(np.all(np.abs(nodes) < 1e-13, axis=1))
        assert tip.size == 1
        assert not corner.mesh.dirichlet[tip[0]]

    def test_seam_shared_exactly(self, corner):
        # The bisector column is stored once; its nodes lie on the
        # bisector to rounding, so the two halves conform without glue.
        beta = 0.5 * (math.pi - 0.5)
        n_t = round(corner.width / (0.1 * math.sin(beta)))
        bis = np.array([math.cos(beta), math.sin(beta)])
        seam = corner.mesh.nodes[: n_t + 1]
        perp = seam - (seam @ bis)[:, None] * bis
        assert float(np.abs(perp).max()) < 1e-14

    def test_dirichlet_only_on_artificial_walls(self, corner):
        walls = corner.mesh.dirichlet
        assert int(walls.sum()) == CORNER_NODES - CORNER_UNKNOWNS
        # No tagged node may lie on the physical boundary (the rays),
        # except where the artificial wall meets them at radius R.
        nodes = corner.mesh.nodes[walls]
        on_ray1 = np.abs(nodes[:, 1]) < 1e-13
        assert np.all(np.abs(nodes[on_ray1, 0]) > corner.radius - 1e-9)

    def test_delta_range_validated(self):
        with pytest.raises(ConfigError):
            corner_domain(0.0, 6.0, 0.1)
        with pytest.raises(ConfigError):
            corner_domain(2.0, 6.0, 0.1)


class TestCurvedMesh:
    def test_inventory(self, curved):
        assert curved.mesh.node_count == CURVED_NODES
        assert curved.unknowns == CURVED_UNKNOWNS
        assert curved.kind == "curved"

    def test_area_matches_tube_jacobian(self, curved):
        # The continuum band area is int (1 - delta kappa(s) t) dt ds
        # = 2 R W - delta <kappa> W^2 / 2; the linear mesh tiles it to
        # O(h^2).
        model = 2 * 12.0 * 4.5 - 0.2 * bump_curvature().mean * 4.5**2 / 2
        assert curved.mesh.areas().sum() == pytest.approx(model, abs=5e-4)

    def test_physical_boundary_on_curve(self, curved):
        # The t = 0 row must consist of free nodes placed on the curve;
        # heights vanish exactly on the straight tails (kappa = 0 there).
        n_t = round(4.5 / 0.1)
        row = curved.mesh.nodes[:: n_t + 1]
        tags = curved.mesh.dirichlet[:: n_t + 1]
        assert not np.any(tags[1:-1])
        # Heights vanish exactly on the incoming straight tail (kappa = 0
        # there); the outgoing tail is tilted by the total turning angle.
        incoming = row[:, 0] < -2.0
        assert float(np.abs(row[incoming, 1]).max()) < 1e-12
        outgoing = row[:, 0] > 2.0
        slope = np.tan(0.2 * bump_curvature().mean)
        rises = np.diff(row[outgoing, 1]) / np.diff(row[outgoing, 0])
        assert np.allclose(rises, slope, atol=1e-12)

    def test_tube_margin_guard(self):
        with pytest.raises(ConfigError):
            curved_domain(bump_curvature(), 0.25, 12.0, 0.1)

    def test_self_intersecting_band_rejected(self):
        # A gentle 5.5-radian loop keeps the local tube margin valid but
        # brings distant pieces of the band together.
        loop = bump_curvature(mean=5.5, radius=8.0)
        with pytest.raises(ConfigError, match="self-intersects"):
            curved_domain(loop, 1.0, 40.0, 0.1, width=1.0)

    def test_delta_validated(self):
        with pytest.raises(ConfigError):
            curved_domain(bump_curvature(), -0.1, 12.0, 0.1)


class TestStraightDomains:
    def test_halfplane_inventory(self):
        hp = halfplane_domain(6.0, 0.1)
        assert hp.mesh.node_count == HALFPLANE_NODES
        assert hp.unknowns == HALFPLANE_UNKNOWNS
        assert hp.mesh.areas().sum() == pytest.approx(60.0, rel=1e-13)

    def test_halfplane_bottom_row_free(self):
        hp = halfplane_domain(6.0, 0.1)
        bottom = np.abs(hp.mesh.nodes[:, 1]) < 1e-13
        ends = np.abs(np.abs(hp.mesh.nodes[:, 0]) - 6.0) < 1e-13
        assert not np.any(hp.mesh.dirichlet[bottom & ~ends])
        top = np.abs(hp.mesh.nodes[:, 1] - hp.width) < 1e-13
        assert np.all(hp.mesh.dirichlet[top])

    def test_box_fully_free(self):
        bx = box_domain(4.0, 0.1)
        assert bx.mesh.node_count == BOX_NODES
        assert bx.unknowns == BOX_NODES
        assert not np.any(bx.mesh.dirichlet)

    def test_size_guards(self):
        with pytest.raises(ConfigError):
            halfplane_domain(0.1, 0.1)
        with pytest.raises(ConfigError):
            box_domain(4.0, -0.1)
        with pytest.raises(ConfigError):
            halfplane_domain(6.0, 0.3)  # cannot resolve the magnetic length
        with pytest.raises(ConfigError):
            halfplane_domain(6.0, 0.1, width=0.15)
