import math

import numpy as np
import pytest

from fso_geoloss.beam import BeamParams, beam_width
from fso_geoloss.geometry import Orientation, Pose, Position, spherical_mean_position, tracking_orientation
from fso_geoloss.geoloss import (
    ApproxParams,
    ChannelInputs,
    DetectorParams,
    approx_bounds,
    approx_mean,
    approx_mean_batch,
    approx_params,
    bound_lower,
    bound_upper,
    channel_coefficient,
    exact_loss,
    exact_loss_batch,
    loss_db,
)

BEAM = BeamParams(w0=1e-3, wavelength=1550e-9, cn2=1e-14)
DET = DetectorParams(a=0.1)


def tracked_pose(radius, alpha, beta, fy=0.0, fz=0.0):
    mu = spherical_mean_position(radius, alpha, beta)
    orient = tracking_orientation(mu)
    return Pose(Position(mu.rx, mu.ry + fy, mu.rz + fz), orient)


class TestExactLoss:
    def test_centered_orthogonal_closed_form(self):
        for a in (0.01, 0.05, 0.1, 0.2):
            for dist in (500.0, 1000.0, 2000.0):
                pose = tracked_pose(dist, 0.0, math.pi / 2)
                w = beam_width(BEAM, dist)
                expected = 1.0 - math.exp(-2.0 * a * a / (w * w))
                got = exact_loss(pose, BEAM, DetectorParams(a))
                assert got == pytest.approx(expected, rel=1e-8)

    def test_default_value(self):
        # frozen: 1 - exp(-2 a^2 / w(1 km)^2) with w = 0.4934910867329322
        got = exact_loss(tracked_pose(1000.0, 0.0, math.pi / 2), BEAM, DET)
        assert got == pytest.approx(0.07884249409492505, rel=1e-9)

    @pytest.mark.filterwarnings("ignore:far-field")
    def test_far_footprint_decays_to_zero(self):
        pose = tracked_pose(1000.0, 0.0, math.pi / 2, fy=30.0)
        assert exact_loss(pose, BEAM, DET) <= 1e-12

    def test_energy_conservation_with_huge_detector(self):
        pose = tracked_pose(1000.0, math.pi / 8, 5 * math.pi / 8)
        assert exact_loss(pose, BEAM, DetectorParams(a=8.0)) == pytest.approx(1.0, abs=1e-8)

    def test_bounded_by_unit_interval(self):
        for u in (0.0, 0.1, 0.25, 0.6):
            v = exact_loss(tracked_pose(1000.0, 0.2, 1.4, fy=u), BEAM, DET)
            assert 0.0 <= v <= 1.0


class TestBounds:
    def test_orthogonal_bounds_coincide(self):
        for u in (0.0, 0.08, 0.2):
            pose = tracked_pose(1000.0, 0.0, math.pi / 2, fy=u, fz=0.3 * u)
            ex = exact_loss(pose, BEAM, DET)
            assert bound_lower(pose, BEAM, DET) == pytest.approx(ex, abs=1e-8)
            assert bound_upper(pose, BEAM, DET) == pytest.approx(ex, abs=1e-8)

    def test_centered_oblique_bounds_coincide(self):
        pose = tracked_pose(1000.0, math.pi / 4, math.pi / 2)
        ex = exact_loss(pose, BEAM, DET)
        assert bound_lower(pose, BEAM, DET) == pytest.approx(ex, abs=1e-8)
        assert bound_upper(pose, BEAM, DET) == pytest.approx(ex, abs=1e-8)

    def test_ordering_randomized(self):
        rng = np.random.default_rng(42)
        for _ in range(60):
            alpha = rng.uniform(-math.pi / 3, math.pi / 3)
            beta = rng.uniform(math.pi / 3, 2 * math.pi / 3)
            u = rng.uniform(0.0, 3.0 * DET.a)
            ang = rng.uniform(0.0, 2.0 * math.pi)
            pose = tracked_pose(1000.0, alpha, beta,
                                fy=u * math.cos(ang), fz=u * math.sin(ang))
            low = bound_lower(pose, BEAM, DET)
            ex = exact_loss(pose, BEAM, DET)
            upp = bound_upper(pose, BEAM, DET)
            assert low <= ex + 2e-9
            assert ex <= upp + 2e-9

    def test_bounds_strictly_separate_for_oblique_offset(self):
        pose = tracked_pose(1000.0, math.pi / 4, math.pi / 2, fy=0.1, fz=0.1)
        assert bound_upper(pose, BEAM, DET) - bound_lower(pose, BEAM, DET) > 1e-4


class TestApprox:
    def test_orthogonal_params(self):
        ap = approx_params(tracked_pose(1000.0, 0.0, math.pi / 2), BEAM, DET)
        w = beam_width(BEAM, 1000.0)
        nu = DET.a / w * math.sqrt(math.pi / 2)
        assert ap.nu_min == pytest.approx(nu, rel=1e-12)
        assert ap.nu_max == pytest.approx(nu, rel=1e-12)
        assert ap.nu_min == pytest.approx(0.2540, abs=1e-4)
        assert ap.a0 == pytest.approx(0.0787, abs=1e-4)
        assert ap.k_min == ap.k_max == ap.k_mean
        assert ap.k_mean == pytest.approx(1.0441303013596828, rel=1e-12)

    def test_param_invariants_randomized(self):
        rng = np.random.default_rng(33)
        for _ in range(80):
            alpha = rng.uniform(-math.pi / 3, math.pi / 3)
            beta = rng.uniform(math.pi / 3, 2 * math.pi / 3)
            ap = approx_params(tracked_pose(1000.0, alpha, beta, fy=rng.uniform(0, 0.3)),
                               BEAM, DET)
            assert 0.0 < ap.a0 < 1.0
            assert ap.k_min <= ap.k_mean <= ap.k_max
            assert ap.k_mean == pytest.approx(0.5 * (ap.k_min + ap.k_max), rel=1e-15)
            assert ap.u >= 0.0

    def test_bounds_at_zero_offset(self):
        pose = tracked_pose(1000.0, 0.3, 1.7)
        ap = approx_params(pose, BEAM, DET)
        low, upp = approx_bounds(ap)
        # tracked pose: u is footprint rounding residue, so both collapse to a0
        assert ap.u <= 1e-12
        assert low == pytest.approx(ap.a0, rel=1e-12)
        assert upp == pytest.approx(ap.a0, rel=1e-12)
        assert approx_mean(ap) == pytest.approx(ap.a0, rel=1e-12)

    def test_mean_within_bounds(self):
        for u in (0.0, 0.05, 0.15, 0.3):
            ap = approx_params(tracked_pose(1000.0, math.pi / 8, 5 * math.pi / 8, fy=u),
                               BEAM, DET)
            low, upp = approx_bounds(ap)
            assert low <= approx_mean(ap) <= upp

    def test_displaced_orthogonal_value(self):
        # frozen: A0 * exp(-2*0.01/(k*w^2)) at the default link
        ap = approx_params(tracked_pose(1000.0, 0.0, math.pi / 2, fy=0.1), BEAM, DET)
        expected = ap.a0 * math.exp(-2.0 * 0.01 / (ap.k_mean * ap.w**2))
        assert approx_mean(ap) == pytest.approx(expected, rel=1e-14)
        assert approx_mean(ap) == pytest.approx(0.07274412194782998, rel=1e-9)

    def test_close_to_exact_at_center(self):
        pose = tracked_pose(1000.0, 0.0, math.pi / 2)
        ap = approx_params(pose, BEAM, DET)
        assert approx_mean(ap) == pytest.approx(exact_loss(pose, BEAM, DET), rel=0.02)


class TestMonotoneDecay:
    def test_exact_and_approx_decay_in_offset(self):
        us = np.linspace(0.0, 0.4, 9)
        for direction in ((1.0, 0.0), (0.0, 1.0), (0.6, -0.8)):
            ex, am = [], []
            for u in us:
                pose = tracked_pose(1000.0, math.pi / 8, 5 * math.pi / 8,
                                    fy=u * direction[0], fz=u * direction[1])
                ex.append(exact_loss(pose, BEAM, DET))
                am.append(approx_mean(approx_params(pose, BEAM, DET)))
            assert all(a >= b - 1e-12 for a, b in zip(ex, ex[1:]))
            assert all(a >= b - 1e-15 for a, b in zip(am, am[1:]))


class TestBatchKernels:
    def test_exact_batch_matches_scalar(self):
        poses = [tracked_pose(1000.0, a, b, fy=f)
                 for a, b, f in [(0.0, math.pi / 2, 0.0), (0.2, 1.5, 0.1),
                                 (math.pi / 8, 5 * math.pi / 8, 0.05)]]
        rx = np.array([p.position.rx for p in poses])
        ry = np.array([p.position.ry for p in poses])
        rz = np.array([p.position.rz for p in poses])
        th = np.array([p.orientation.theta for p in poses])
        ph = np.array([p.orientation.phi for p in poses])
        batch = exact_loss_batch(rx, ry, rz, th, ph, BEAM, DET)
        for i, p in enumerate(poses):
            assert batch[i] == pytest.approx(exact_loss(p, BEAM, DET), rel=1e-9)

    def test_approx_batch_matches_scalar(self):
        poses = [tracked_pose(1000.0, a, b, fy=f)
                 for a, b, f in [(0.0, math.pi / 2, 0.2), (-0.3, 1.2, 0.02)]]
        rx = np.array([p.position.rx for p in poses])
        ry = np.array([p.position.ry for p in poses])
        rz = np.array([p.position.rz for p in poses])
        th = np.array([p.orientation.theta for p in poses])
        ph = np.array([p.orientation.phi for p in poses])
        batch = approx_mean_batch(rx, ry, rz, th, ph, BEAM, DET)
        for i, p in enumerate(poses):
            assert batch[i] == pytest.approx(
                approx_mean(approx_params(p, BEAM, DET)), rel=1e-12)


class TestChannelComposition:
    def test_identity(self):
        assert channel_coefficient(ChannelInputs(1.0, 1.0, 1.0), 0.37) == 0.37

    def test_zero_factor(self):
        assert channel_coefficient(ChannelInputs(0.0, 1.0, 1.0), 0.5) == 0.0

    def test_product(self):
        assert channel_coefficient(ChannelInputs(0.5, 0.8, 1.2), 0.1) == pytest.approx(0.048)

    def test_validation(self):
        with pytest.raises(ValueError):
            ChannelInputs(1.0, 0.0, 1.0)
        with pytest.raises(ValueError):
            ChannelInputs(1.0, 1.5, 1.0)
        with pytest.raises(ValueError):
            channel_coefficient(ChannelInputs(1.0, 1.0, 1.0), -0.1)


class TestLossDb:
    def test_values(self):
        assert loss_db(0.1) == pytest.approx(10.0)
        assert loss_db(1.0) == 0.0

    def test_zero_maps_to_inf(self):
        assert loss_db(0.0) == math.inf

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            loss_db(-1e-9)
