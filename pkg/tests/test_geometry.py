import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from blobsim import geometry
from blobsim.geometry import (
    Box,
    BoxRegion,
    Cylinder,
    CylinderSection,
    Patch,
    Sphere,
    SphericalShell,
    build_layers,
    list_surfaces,
    penalty_domain,
)

SPHERE = Sphere((0.0, 0.0, 0.0), 1.0)
BOX = Box((0.0, 0.0, 0.0), (2.0, 1.0, 1.0))
CYL = Cylinder((0.0, 0.0, 0.0), (0.0, 0.0, 1.0), 2.0, 0.5)


def inside_oracle(dom, pts):
    """Membership by the analytic definition, independent of dist()."""
    pts = np.atleast_2d(pts)
    if isinstance(dom, Sphere):
        return np.linalg.norm(pts - dom.center, axis=1) <= dom.radius
    if isinstance(dom, Box):
        return np.all(pts >= dom.lo, axis=1) & np.all(pts <= dom.hi, axis=1)
    ax, _, r = dom.local(pts)
    return (ax >= 0.0) & (ax <= dom.length) & (r <= dom.radius)


class TestDistProject:
    def test_sphere_examples(self):
        assert SPHERE.dist((0.0, 0.0, 0.0)) == 0.0
        assert SPHERE.dist((2.0, 0.0, 0.0)) == pytest.approx(1.0, abs=1e-15)
        np.testing.assert_allclose(SPHERE.project((2.0, 0.0, 0.0)), [1.0, 0.0, 0.0], atol=1e-15)

    def test_box_corner_distance(self, rng):
        # nearest feature of [0,2]x[0,1]^2 to (3, 2, 0.5) is the corner (2, 1, 0.5-line)
        x = np.array([3.0, 2.0, 0.5])
        assert BOX.dist(x) == pytest.approx(math.sqrt(2.0), rel=1e-14)
        # cross-check against a dense sampled minimizer over the box
        samples = BOX.sample_inside(200_000, rng)
        dmin = np.linalg.norm(samples - x, axis=1).min()
        assert BOX.dist(x) <= dmin
        assert dmin - BOX.dist(x) < 2e-2  # corner feature: sampled min converges ~ n^(-1/3)

    def test_cylinder_axis_projection(self, rng):
        # on the axis below the base cap: nearest point is the base center
        x = np.array([0.0, 0.0, -1.0])
        np.testing.assert_allclose(CYL.project(x), [0.0, 0.0, 0.0], atol=1e-15)
        assert CYL.dist(x) == pytest.approx(1.0)
        # sampled minimizer cross-check for a generic exterior point
        y = np.array([0.9, 0.4, 2.7])
        samples = CYL.sample_inside(200_000, rng)
        dmin = np.linalg.norm(samples - y, axis=1).min()
        assert CYL.dist(y) <= dmin
        assert dmin - CYL.dist(y) < 2e-2

    def test_projection_identity_inside(self, rng):
        for dom in (SPHERE, BOX, CYL):
            pts = dom.sample_inside(500, rng)
            np.testing.assert_array_equal(dom.project(pts), pts)
            assert np.all(dom.dist(pts) == 0.0)

    @pytest.mark.parametrize("dom", [SPHERE, BOX, CYL], ids=["sphere", "box", "cylinder"])
    def test_dist_matches_projection_everywhere(self, dom, rng):
        lo, hi = dom.bbox(pad=1.5)
        pts = lo + rng.random((10_000, 3)) * (hi - lo)
        d = dom.dist(pts)
        gap = np.abs(d - np.linalg.norm(pts - dom.project(pts), axis=1))
        assert gap.max() <= 1e-10
        np.testing.assert_array_equal(d == 0.0, inside_oracle(dom, pts))

    def test_outward_gradient_direction(self, rng):
        for dom in (SPHERE, BOX, CYL):
            lo, hi = dom.bbox(pad=1.0)
            pts = lo + rng.random((2000, 3)) * (hi - lo)
            d = dom.dist(pts)
            out = d > 1e-6
            g = (pts[out] - dom.project(pts[out])) / d[out, None]
            np.testing.assert_allclose(np.linalg.norm(g, axis=1), 1.0, atol=1e-12)

    @given(st.tuples(*[st.floats(-4, 4) for _ in range(3)]))
    @settings(max_examples=200, deadline=None)
    def test_projection_idempotent(self, xyz):
        for dom in (SPHERE, BOX, CYL):
            p = dom.project(np.array(xyz))
            assert dom.dist(p) <= 1e-12
            np.testing.assert_allclose(dom.project(p), p, atol=1e-12)


class TestPatches:
    def test_sphere_area(self):
        (s,) = list_surfaces(SPHERE)
        assert s.area() == pytest.approx(4.0 * math.pi, rel=1e-12)

    def test_box_faces_cover_surface(self):
        faces = list_surfaces(BOX)
        assert len(faces) == 6
        total = sum(f.area() for f in faces)
        assert total == pytest.approx(2.0 * (1.0 + 2.0 + 2.0), rel=1e-12)

    def test_cylinder_partition(self):
        surfs = list_surfaces(CYL, outlet_radius=0.25)
        assert len(surfs) == 4
        total = sum(s.area() for s in surfs)
        analytic = 2.0 * math.pi * 0.5 * 2.0 + 2.0 * math.pi * 0.5**2
        assert total == pytest.approx(analytic, rel=1e-12)
        # the split cap still covers the full disc
        assert surfs[1].area() + surfs[2].area() == pytest.approx(math.pi * 0.25, rel=1e-12)

    @pytest.mark.parametrize(
        "dom,outlet", [(SPHERE, None), (BOX, None), (CYL, 0.25)],
        ids=["sphere", "box", "cylinder"],
    )
    def test_quadrature_weights_integrate_area(self, dom, outlet):
        for s in list_surfaces(dom, outlet_radius=outlet):
            pts, w = s.quad_points()
            assert w.sum() == pytest.approx(s.area(), rel=1e-12)
            # boundary points really lie on the boundary
            assert np.max(dom.dist(pts)) <= 1e-12

    def test_surface_samples_on_boundary(self, rng):
        for dom, outlet in ((SPHERE, None), (BOX, None), (CYL, 0.25)):
            for s in list_surfaces(dom, outlet_radius=outlet):
                pts, normals = s.sample(256, rng)
                assert np.max(dom.dist(pts)) <= 1e-12
                np.testing.assert_allclose(np.linalg.norm(normals, axis=1), 1.0, atol=1e-12)

    def test_unknown_patch_kind_rejected(self):
        (s,) = list_surfaces(SPHERE)
        with pytest.raises(ValueError):
            Patch(0, s, "robin")


class TestLayers:
    def test_sphere_shells(self):
        # b = sqrt(R * spacing) at the reference count 1600
        b = math.sqrt(1600.0 ** (-1.0 / 3.0))
        patches = [Patch(0, list_surfaces(SPHERE)[0], geometry.DIRICHLET)]
        (cell,) = build_layers(SPHERE, patches, b)
        assert cell.interior.r_lo == pytest.approx(1.0 - 0.29240, abs=5e-6)
        assert cell.interior.r_hi == 1.0
        assert cell.exterior.r_lo == 1.0
        assert cell.exterior.r_hi == pytest.approx(1.29240, abs=5e-6)
        vol = 4.0 / 3.0 * math.pi * (1.0 - (1.0 - b) ** 3)
        assert cell.interior.volume() == pytest.approx(vol, rel=1e-12)

    def test_box_face_slabs(self):
        patches = [Patch(i, s, geometry.WALL) for i, s in enumerate(list_surfaces(BOX))]
        cells = build_layers(BOX, patches, 0.1)
        c0 = cells[0]  # -x face
        np.testing.assert_allclose([c0.interior.lo[0], c0.interior.hi[0]], [0.0, 0.1])
        np.testing.assert_allclose([c0.exterior.lo[0], c0.exterior.hi[0]], [-0.1, 0.0])
        assert c0.interior.volume() == pytest.approx(0.1, rel=1e-12)

    def test_pipe_outlet_cell_footprint(self):
        from blobsim.presets import derive_params

        p = derive_params("pipe", 1000)
        assert p.layer_depth == pytest.approx(0.190, abs=5e-4)
        surfs = list_surfaces(CYL, outlet_radius=0.25)
        patches = [Patch(i, s, geometry.WALL) for i, s in enumerate(surfs)]
        cells = build_layers(CYL, patches, p.layer_depth)
        outlet = cells[1]
        assert outlet.interior.r_hi == 0.25
        assert outlet.interior.ax_lo == pytest.approx(2.0 - p.layer_depth)
        assert outlet.interior.ax_hi == 2.0
        assert outlet.exterior.ax_lo == 2.0

    def test_layer_too_thick_rejected(self):
        patches = [Patch(0, list_surfaces(SPHERE)[0], geometry.DIRICHLET)]
        with pytest.raises(ValueError, match="inradius"):
            build_layers(SPHERE, patches, 1.5)

    def test_thick_layer_warns(self, caplog):
        patches = [Patch(0, list_surfaces(SPHERE)[0], geometry.DIRICHLET)]
        with caplog.at_level("WARNING"):
            build_layers(SPHERE, patches, 0.6)
        assert any("smallest feature size" in m for m in caplog.messages)
        # the reference configurations stay below the warning threshold
        caplog.clear()
        with caplog.at_level("WARNING"):
            build_layers(SPHERE, patches, 0.2924)
            build_layers(BOX, [Patch(0, list_surfaces(BOX)[0], geometry.DIRICHLET)], 0.4606)
        assert not caplog.messages

    @pytest.mark.parametrize(
        "dom,outlet", [(SPHERE, None), (BOX, None), (CYL, 0.25)],
        ids=["sphere", "box", "cylinder"],
    )
    def test_samples_split_cleanly_across_the_boundary(self, dom, outlet, rng):
        b = 0.15
        patches = [Patch(i, s, geometry.WALL) for i, s in enumerate(list_surfaces(dom, outlet_radius=outlet))]
        for cell in build_layers(dom, patches, b):
            pin = cell.interior.sample(3000, rng)
            assert np.all(dom.dist(pin) == 0.0)
            assert np.all(cell.interior.contains(pin))
            pex = cell.exterior.sample(3000, rng)
            dex = dom.dist(pex)
            assert np.all(dex > 0.0)
            assert np.all(dex <= b * (1.0 + 1e-12))
            assert np.all(cell.exterior.contains(pex))


class TestRegionSampling:
    def test_slab_sample_means(self, rng):
        region = BoxRegion((0.0, 0.0, 0.0), (0.1, 1.0, 1.0))
        pts = region.sample(100_000, rng)
        center = np.array([0.05, 0.5, 0.5])
        sigma = (region.hi - region.lo) / math.sqrt(12.0) / math.sqrt(100_000)
        assert np.all(np.abs(pts.mean(axis=0) - center) < 3.0 * sigma)

    def test_shell_radial_cdf(self, rng):
        shell = SphericalShell((0.0, 0.0, 0.0), 0.7, 1.0)
        r = np.linalg.norm(shell.sample(20_000, rng), axis=1)

        def cdf(x):
            return (x**3 - 0.7**3) / (1.0 - 0.7**3)

        assert stats.kstest(r, cdf).pvalue > 0.01

    def test_cylinder_section_radial_cdf(self, rng):
        sec = CylinderSection((0.0, 0.0, 0.0), (0.0, 0.0, 1.0), 0.0, 0.2, 0.0, 0.5)
        pts = sec.sample(20_000, rng)
        r = np.linalg.norm(pts[:, :2], axis=1)
        assert stats.kstest(r, lambda x: x**2 / 0.25).pvalue > 0.01

    def test_degenerate_regions_rejected(self):
        with pytest.raises(ValueError):
            BoxRegion((0.0, 0.0, 0.0), (0.0, 1.0, 1.0))
        with pytest.raises(ValueError):
            SphericalShell((0.0, 0.0, 0.0), 1.0, 1.0)
        with pytest.raises(ValueError):
            CylinderSection((0.0, 0.0, 0.0), (0.0, 0.0, 1.0), 0.0, 0.0, 0.0, 0.5)

    def test_region_volumes(self):
        assert SphericalShell((0, 0, 0), 0.5, 1.0).volume() == pytest.approx(
            4.0 / 3.0 * math.pi * (1.0 - 0.125), rel=1e-12
        )
        assert CylinderSection((0, 0, 0), (0, 0, 1), 0.0, 2.0, 0.25, 0.5).volume() == pytest.approx(
            math.pi * (0.25 - 0.0625) * 2.0, rel=1e-12
        )


class TestPenaltyDomain:
    def test_sphere_dirichlet_grows_radius(self):
        patches = [Patch(0, list_surfaces(SPHERE)[0], geometry.DIRICHLET)]
        pen = penalty_domain(SPHERE, patches, 0.2924)
        assert isinstance(pen, Sphere)
        assert pen.radius == pytest.approx(1.2924)

    def test_box_single_face_extension(self):
        surfs = list_surfaces(BOX)
        patches = [Patch(i, s, geometry.DIRICHLET if i == 0 else geometry.WALL) for i, s in enumerate(surfs)]
        pen = penalty_domain(BOX, patches, 0.25)
        np.testing.assert_allclose(pen.lo, [-0.25, 0.0, 0.0])
        np.testing.assert_allclose(pen.hi, [2.0, 1.0, 1.0])

    def test_flux_walls_leave_domain_alone(self):
        surfs = list_surfaces(CYL, outlet_radius=0.25)
        kinds = [geometry.NEUMANN, geometry.NEUMANN, geometry.WALL, geometry.WALL]
        patches = [Patch(i, s, k) for i, (s, k) in enumerate(zip(surfs, kinds))]
        pen = penalty_domain(CYL, patches, 0.19)
        assert pen is CYL

    def test_cylinder_cap_dirichlet_lengthens(self):
        surfs = list_surfaces(CYL)
        patches = [Patch(0, surfs[0], geometry.DIRICHLET)]
        pen = penalty_domain(CYL, patches, 0.5)
        assert pen.length == pytest.approx(2.5)
        np.testing.assert_allclose(pen.base, [0.0, 0.0, -0.5])
