"""Tests for numeric certificates and stability experiments."""

import math

import numpy as np
import pytest

from tvgeo.core import analytic
from tvgeo.core.certify import (SATISFIED, UNVERIFIABLE, VIOLATED, StabilityRecord,
                                boundary_contours, burger_osher_bound, extended_support,
                                hausdorff_convergence, jump_height_bound, mnc_estimate, noise,
                                non_expansiveness, saturation, stability_experiment, _judge)
from tvgeo.core.errors import NoOracle
from tvgeo.core.geometry import BinaryRegion
from tvgeo.core.grid import GridImage
from tvgeo.core.shapes import Ellipse, parse_shape
from tvgeo.core.solver import SolverConfig, project_unit_balls


class TestNoise:
    def test_seeded(self):
        a, na = noise(64, 0.1, 7)
        b, nb = noise(64, 0.1, 7)
        np.testing.assert_array_equal(a.values, b.values)
        assert na == nb
        assert na == pytest.approx(0.1, rel=0.05)

    def test_seeds_differ(self):
        a, _ = noise(16, 0.1, 1)
        b, _ = noise(16, 0.1, 2)
        assert not np.array_equal(a.values, b.values)

    def test_zero_and_negative(self):
        w, norm = noise(16, 0.0, 0)
        assert norm == 0.0
        with pytest.raises(ValueError):
            noise(16, -0.1, 0)

    def test_saturation(self, random_field):
        sat = saturation(project_unit_balls(random_field))
        assert sat.values.min() >= 0.0
        assert sat.values.max() <= 1.0 + 1e-12


class TestMinimalNormCertificate:
    def test_disc_sweep(self, disc_image):
        cfg = SolverConfig(lam=0.08, max_iters=3000, gap_tol=1e-8)
        seen = []
        sweep = mnc_estimate(disc_image, [0.08, 0.04], cfg, progress=seen.append)
        assert len(sweep) == 2
        assert [e.lam for e in sweep] == [0.08, 0.04]
        assert seen[1] is sweep[1]
        assert math.isnan(sweep.differences[0])
        assert sweep.differences[1] < 0.3
        assert sweep[1].l2_norm == pytest.approx(2 * math.sqrt(math.pi), rel=0.2)
        assert abs(sweep.norm_slope) < 0.3

    def test_order_checked(self, disc_image):
        with pytest.raises(ValueError):
            mnc_estimate(disc_image, [0.04, 0.08])
        with pytest.raises(ValueError):
            mnc_estimate(disc_image, [])

    def test_extended_support(self, disc_image):
        cfg = SolverConfig(lam=0.05, max_iters=1000)
        support = extended_support(disc_image, 0.05, 0.05, cfg)
        assert not support.region.empty
        assert support.region.area < 0.5
        tight = support.threshold(0.01).mask
        assert np.all(support.region.mask[tight])

    def test_extended_support_epsilon(self, disc_image):
        with pytest.raises(ValueError):
            extended_support(disc_image, 0.05, 0.5)


class TestDiagnostics:
    def test_burger_osher_formula(self):
        u = GridImage.zeros(16)
        v0 = GridImage(np.full((16, 16), 2.0))
        tube = BinaryRegion(np.zeros((16, 16), dtype=bool))
        bo = burger_osher_bound(u, v0, tube, 0.5, 0.1, 0.02)
        assert bo.lhs == 0.0
        assert bo.rhs == pytest.approx(0.02 ** 2 / 0.2 + 0.1 * 4 / 2 + 0.02 * 2)
        assert bo.satisfied
        with pytest.raises(ValueError):
            burger_osher_bound(u, v0, tube, 1.0, 0.1, 0.02)

    def test_jump_height(self):
        assert jump_height_bound(0.1, 0.05, 0.5) == pytest.approx(8.0)

    def test_non_expansive(self, disc_image, rng):
        y2 = GridImage(disc_image.values + 0.05 * rng.standard_normal(disc_image.values.shape))
        check = non_expansiveness(disc_image, y2, 0.05, SolverConfig(lam=0.05, max_iters=1000))
        assert check.holds

    def test_boundary_contours(self):
        shape = parse_shape("union disc 0.25 0.5 0.1; disc 0.75 0.5 0.1")
        curves = boundary_contours(shape, 64, samples=256)
        assert curves.count == 2
        assert all(len(c) == 257 for c in curves.curves)
        assert curves.total_length == pytest.approx(2 * 2 * math.pi * 0.1, rel=1e-3)

    def test_hausdorff_convergence(self, disc):
        steps = hausdorff_convergence(disc, 32, k_max=1, seed=3,
                                      cfg=SolverConfig(lam=0.1, max_iters=500))
        assert [s.k for s in steps] == [0, 1]
        assert steps[1].lam == pytest.approx(0.05)
        assert steps[1].noise_norm < steps[0].noise_norm
        assert steps[1].distance < 0.1
        assert steps[0].distance >= steps[1].distance


def _record(**kwargs):
    base = dict(lam=0.04, sigma=0.0, seed=0, r=0.0625, noise_norm=0.0, contained=True,
                worst_violation=0.0, hausdorff={}, certificate_distance=0.0,
                noise_deviation=0.0, oracle_offset=0.0, delta_half_r=0.1, bo_lhs=0.0,
                bo_rhs=1.0, jump_bound=None, max_level_area=0.2, perimeter_violations=0,
                iters=1, gap=0.0)
    base.update(kwargs)
    return StabilityRecord(**base)


class TestJudge:
    def test_satisfied(self):
        rec = _record()
        _judge(rec, 0.5)
        assert rec.hypothesis == SATISFIED
        assert rec.hypothesis_threshold == pytest.approx(0.1 * 0.0625)

    def test_violated_by_deviation(self):
        rec = _record(noise_deviation=1.0)
        _judge(rec, 0.5)
        assert rec.hypothesis == VIOLATED

    def test_violated_by_noise(self):
        rec = _record(noise_norm=0.1)
        _judge(rec, 0.5)
        assert rec.hypothesis == VIOLATED

    def test_unverifiable(self):
        rec = _record(delta_half_r=None)
        _judge(rec, 0.5)
        assert rec.hypothesis == UNVERIFIABLE
        assert rec.analytic_hypothesis == UNVERIFIABLE

    def test_analytic_verdict_uses_oracle_distance(self):
        rec = _record(certificate_distance=1.0)
        _judge(rec, 0.5)
        assert rec.hypothesis == SATISFIED
        assert rec.analytic_hypothesis == VIOLATED

    def test_analytic_verdict_satisfied(self):
        rec = _record(certificate_distance=0.001)
        _judge(rec, 0.5)
        assert rec.analytic_hypothesis == SATISFIED

    def test_measured_distance(self):
        assert _record(noise_deviation=0.1, oracle_offset=0.2).measured_distance == pytest.approx(0.3)


class TestStability:
    @pytest.fixture
    def cfg(self):
        return SolverConfig(lam=0.04, max_iters=4000)

    def test_small_experiment(self, disc, cfg):
        report = stability_experiment(disc, 32, [0.04], [0.0, 0.001], [1, 2], [4 / 32],
                                      cfg=cfg, levels=(0.3, 0.5), threads=2)
        assert len(report.records) == 3
        assert [(r.sigma, r.seed) for r in report.records] == [(0.0, 1), (0.001, 1), (0.001, 2)]
        clean = report.records[0]
        assert clean.noise_norm == 0.0
        assert clean.noise_deviation == 0.0
        assert clean.hypothesis == SATISFIED
        assert clean.contained
        assert clean.delta_half_r == pytest.approx(analytic.disc_delta(0.25, 2 / 32))
        assert set(report.lines) == {(0.04, 0.0, 1), (0.04, 0.001, 1), (0.04, 0.001, 2)}
        assert report.c_tilde == pytest.approx(math.sqrt(max(r.max_level_area
                                                             for r in report.records)))
        assert 0.0 <= report.containment_rate <= 1.0

    def test_threads_do_not_change_results(self, disc, cfg):
        args = (disc, 32, [0.04], [0.001], [5], [4 / 32])
        one = stability_experiment(*args, cfg=cfg, levels=(0.5,), threads=1)
        two = stability_experiment(*args, cfg=cfg, levels=(0.5,), threads=2)
        assert [r.certificate_distance for r in one.records] == \
            [r.certificate_distance for r in two.records]

    def test_needs_oracle(self):
        with pytest.raises(NoOracle):
            stability_experiment(Ellipse(0.5, 0.5, 0.3, 0.2), 32, [0.04], [0.0], [0], [0.1])

    def test_needs_lists(self, disc):
        with pytest.raises(ValueError):
            stability_experiment(disc, 32, [], [0.0], [0], [0.1])
        with pytest.raises(ValueError):
            stability_experiment(disc, 32, [0.04], [0.0], [0], [])
