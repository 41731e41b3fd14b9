"""Tests for level sets, contours and distances."""

import math

import numpy as np
import pytest

from tvgeo.core.errors import EmptyContour, RadiusTooSmall
from tvgeo.core.geometry import (BinaryRegion, ContourSet, boundary_pixels, coarea_tv,
                                 contours, curves_to_mask, density_ratio, distance_map,
                                 hausdorff, isoperimetric_ok, jordan_decompose, level_set,
                                 perimeter, perimeter_bounds, periodic_edt, reconstruct,
                                 set_energy, tube_contains)
from tvgeo.core.grid import GridImage, total_variation
from tvgeo.core.shapes import Disc, Rectangle


def _shoelace(curve):
    x, y = curve[:, 0], curve[:, 1]
    return 0.5 * float(np.sum(x[:-1] * y[1:] - x[1:] * y[:-1]))


def _circle(r, m=2048):
    t = 2 * np.pi * np.arange(m + 1) / m
    return np.column_stack([0.5 + r * np.cos(t), 0.5 + r * np.sin(t)])


@pytest.fixture
def annulus() -> BinaryRegion:
    outer = Disc(0.5, 0.5, 0.3).mask(64)
    inner = Disc(0.5, 0.5, 0.15).mask(64)
    return BinaryRegion(outer & ~inner)


class TestLevelSets:
    def test_conventions(self):
        u = GridImage(np.array([[-1.0, 0.0], [0.5, 1.0]]))
        assert level_set(u, 0.5).mask.tolist() == [[False, False], [True, True]]
        assert level_set(u, -0.5).mask.tolist() == [[True, False], [False, False]]
        zero = level_set(u, 0.0)
        assert zero.zero_level
        assert zero.mask.tolist() == [[False, True], [True, True]]

    def test_region_basics(self):
        region = BinaryRegion(np.eye(4, dtype=bool))
        assert region.n == 4
        assert region.area == 0.25
        assert region.complement().area == 0.75
        assert BinaryRegion(np.zeros((4, 4), dtype=bool)).empty


class TestContours:
    def test_disc_perimeter(self):
        region = BinaryRegion(Disc(0.5, 0.5, 0.25).mask(128))
        assert perimeter(region) == pytest.approx(math.pi / 2, rel=0.03)

    def test_empty_and_full(self):
        assert perimeter(BinaryRegion(np.zeros((16, 16), dtype=bool))) == 0.0
        assert perimeter(BinaryRegion(np.ones((16, 16), dtype=bool))) == 0.0

    def test_annulus_decomposition(self, annulus):
        comps = jordan_decompose(annulus)
        assert len(comps) == 1
        assert len(comps[0].outer) == 1
        assert len(comps[0].holes) == 1
        assert _shoelace(comps[0].outer[0]) > 0
        assert _shoelace(comps[0].holes[0]) < 0
        assert not comps[0].wrapped

    def test_contour_flags(self, annulus):
        curves = contours(annulus)
        assert curves.count == 2
        assert sorted(curves.holes) == [False, True]
        assert not any(curves.wrapped)

    def test_reconstruct(self, annulus):
        rebuilt = reconstruct(jordan_decompose(annulus), 64)
        mismatch = np.logical_xor(rebuilt.mask, annulus.mask).sum()
        assert mismatch <= 0.15 * annulus.mask.sum()

    def test_band_wraps(self):
        mask = np.zeros((32, 32), dtype=bool)
        mask[:, 10:20] = True
        curves = contours(BinaryRegion(mask))
        assert curves.count >= 1
        assert all(curves.wrapped)

    def test_extend(self, annulus):
        curves = contours(annulus)
        total = ContourSet(64)
        total.extend(curves)
        total.extend(curves)
        assert total.count == 4
        assert total.total_length == pytest.approx(2 * curves.total_length)


class TestMeasures:
    def test_isoperimetric(self):
        assert isoperimetric_ok(BinaryRegion(Disc(0.5, 0.5, 0.2).mask(64)))

    def test_coarea_matches_total_variation(self):
        n = 256
        u = GridImage(Rectangle(0.2, 0.2, 0.6, 0.6).mask(n).astype(float)
                      + Rectangle(0.4, 0.4, 0.2, 0.2).mask(n))
        ts = np.arange(0.05, 2.0, 0.1)
        assert coarea_tv(u, ts) == pytest.approx(total_variation(u), rel=0.03)

    def test_coarea_needs_levels(self):
        with pytest.raises(ValueError):
            coarea_tv(GridImage.zeros(16), np.array([0.5]))

    def test_perimeter_bounds(self):
        v = GridImage(8.0 * Disc(0.5, 0.5, 0.25).mask(64))
        p_min, p_max = perimeter_bounds(v)
        assert p_min == pytest.approx(math.pi / 2)
        assert p_max == pytest.approx(8.0 * math.sqrt(math.pi / 16), rel=0.02)

    def test_set_energy(self):
        region = BinaryRegion(Disc(0.5, 0.5, 0.25).mask(64))
        v = GridImage(np.full((64, 64), 8.0))
        assert set_energy(region, v) == pytest.approx(perimeter(region) - 8.0 * region.area)
        assert set_energy(BinaryRegion(np.zeros((64, 64), dtype=bool)), v) == 0.0
        with pytest.raises(ValueError):
            set_energy(region, v, sign=0)

    def test_set_energy_disc_is_calibrated(self):
        n = 256
        disc = Disc(0.5, 0.5, 0.25)
        v = GridImage(8.0 * disc.mask(n))
        region = BinaryRegion(disc.mask(n))
        assert abs(set_energy(region, v)) <= 0.02 * disc.perimeter

    def test_set_energy_smaller_disc_positive(self):
        n = 256
        v = GridImage(8.0 * Disc(0.5, 0.5, 0.25).mask(n))
        half = BinaryRegion(Disc(0.5, 0.5, 0.125).mask(n))
        # P - 8 |E| = pi/4 - pi/8 for the concentric half-radius disc
        assert set_energy(half, v) == pytest.approx(math.pi / 8, abs=0.03)

    def test_density_ratio_deep_inside(self):
        region = BinaryRegion(Disc(0.5, 0.5, 0.25).mask(64))
        assert density_ratio(region, (32, 32), 8 / 64) == (1.0, 0.0)

    def test_density_ratio_half_plane(self):
        mask = np.zeros((64, 64), dtype=bool)
        mask[:32] = True
        inside, outside = density_ratio(BinaryRegion(mask), (31, 20), 8 / 64)
        assert inside == pytest.approx(0.5, abs=0.1)
        assert inside + outside == pytest.approx(1.0)

    def test_density_ratio_radius(self):
        with pytest.raises(RadiusTooSmall):
            density_ratio(BinaryRegion(np.ones((64, 64), dtype=bool)), (0, 0), 1 / 64)

    def test_boundary_pixels(self):
        mask = np.zeros((16, 16), dtype=bool)
        mask[4:8, 4:8] = True
        pix = boundary_pixels(BinaryRegion(mask))
        assert len(pix) == 12
        assert all(4 <= i < 8 and 4 <= j < 8 for i, j in pix)


class TestDistances:
    def test_periodic_edt(self):
        mask = np.ones((16, 16), dtype=bool)
        mask[0, 0] = False
        d = periodic_edt(mask)
        assert d[0, 0] == 0.0
        assert d[8, 8] == pytest.approx(math.sqrt(128))
        assert d[15, 15] == pytest.approx(math.sqrt(2))
        assert np.all(np.isinf(periodic_edt(np.ones((4, 4), dtype=bool))))

    def test_distance_map_tube(self):
        source = np.zeros((32, 32), dtype=bool)
        source[16, 16] = True
        dmap = distance_map(BinaryRegion(source))
        assert dmap.dist[16, 16] == 0.0
        assert dmap.dist[16, 20] == pytest.approx(4 / 32)
        assert dmap.tube(2 / 32).mask.sum() == 13
        assert dmap.at(np.array([[0.5, 0.5 + 2 / 32]]))[0] == pytest.approx(2 / 32)

    def test_hausdorff_of_circles(self):
        a = ContourSet(64, [_circle(0.2)], [False], [False])
        b = ContourSet(64, [_circle(0.25)], [False], [False])
        assert hausdorff(a, b) == pytest.approx(0.05, abs=1e-3)
        assert hausdorff(a, a) == pytest.approx(0.0, abs=1e-3)

    def test_hausdorff_of_translated_circle(self):
        a = ContourSet(64, [_circle(0.2)], [False], [False])
        moved = _circle(0.2) + np.array([0.01, 0.0])
        b = ContourSet(64, [moved], [False], [False])
        assert hausdorff(a, b) == pytest.approx(0.01, abs=1 / 64)
        assert hausdorff(a, b) == pytest.approx(hausdorff(b, a))

    def test_hausdorff_empty(self):
        a = ContourSet(64, [_circle(0.2)], [False], [False])
        with pytest.raises(EmptyContour):
            hausdorff(a, ContourSet(64))

    def test_curves_to_mask(self):
        mask = curves_to_mask(ContourSet(64, [_circle(0.25)], [False], [False])).mask
        assert mask[48, 32]
        assert not mask[32, 32]

    def test_tube_contains(self):
        curves = ContourSet(64, [_circle(0.3)], [False], [False])
        source = BinaryRegion(Disc(0.5, 0.5, 0.25).mask(64))
        inside = tube_contains(curves, source, 0.08)
        assert inside.contained
        assert inside.worst_violation == 0.0
        assert inside.max_distance == pytest.approx(0.05, abs=0.02)
        outside = tube_contains(curves, source, 0.02)
        assert not outside.contained
        assert outside.worst_violation == pytest.approx(0.03, abs=0.02)

    def test_tube_from_curves(self):
        a = ContourSet(64, [_circle(0.2)], [False], [False])
        b = ContourSet(64, [_circle(0.25)], [False], [False])
        assert tube_contains(a, b, 0.1).contained
        assert not tube_contains(a, b, 0.01).contained

    def test_empty_curves_contained(self):
        source = BinaryRegion(Disc(0.5, 0.5, 0.25).mask(32))
        assert tube_contains(ContourSet(32), source, 0.0).contained
        with pytest.raises(ValueError):
            tube_contains(ContourSet(32), source, -1.0)
