"""Self-check suite behind the `validate` subcommand.

Each check re-derives a model property through an independent route
(brute-force series, closed forms, sampling) and compares at a fixed
tolerance.  Quadrature-dependent tolerances scale with the configured
rel_tol so a loosened tolerance loosens the checks consistently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import beam as beam_mod
from . import geoloss as geoloss_mod
from . import geometry, numerics, stochastic

DEFAULT_BEAM = beam_mod.BeamParams(w0=1e-3, wavelength=1550e-9, cn2=1e-14)
DEFAULT_DETECTOR = geoloss_mod.DetectorParams(a=0.1)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _erf_series(x: float, terms: int = 2000) -> float:
    total = 0.0
    term = x
    for n in range(terms):
        total += term / (2 * n + 1)
        term *= -x * x / (n + 1)
    return 2.0 / math.sqrt(math.pi) * total


def _i0_series(x: float, terms: int = 2000) -> float:
    total = 1.0
    term = 1.0
    q = x * x / 4.0
    for k in range(1, terms):
        term *= q / (k * k)
        total += term
    return total


def check_erf_oracle(rel_tol: float) -> CheckResult:
    grid = np.geomspace(1e-4, 3.5, 40)
    worst = 0.0
    for x in grid:
        ref = _erf_series(float(x))
        worst = max(worst, abs(numerics.erf(float(x)) / ref - 1.0))
        if numerics.erf(float(-x)) != -numerics.erf(float(x)):
            return CheckResult("erf_series_oracle", False, f"odd symmetry broken at {x}")
    return CheckResult("erf_series_oracle", worst <= 1e-12,
                       f"max rel err {worst:.2e} (tol 1e-12)")


def check_i0_oracle(rel_tol: float) -> CheckResult:
    grid = np.geomspace(1e-3, 120.0, 40)
    worst = 0.0
    for x in grid:
        ref = _i0_series(float(x))
        worst = max(worst, abs(numerics.bessel_i0(float(x)) / ref - 1.0))
    return CheckResult("i0_series_oracle", worst <= 1e-10,
                       f"max rel err {worst:.2e} (tol 1e-10)")


def check_eig_trace_det(rel_tol: float) -> CheckResult:
    rng = np.random.default_rng(404)
    worst = 0.0
    for _ in range(200):
        a, c = rng.uniform(0.1, 10, 2)
        bb = rng.uniform(-math.sqrt(a * c), math.sqrt(a * c))
        m = numerics.SymMatrix2(a, bb, c)
        l1, l2 = numerics.eig_sym2(m)
        worst = max(
            worst,
            abs((l1 + l2) / m.trace() - 1.0),
            abs((l1 * l2 - m.det()) / max(abs(m.det()), 1e-30)),
        )
    return CheckResult("eig_trace_det", worst <= 1e-12,
                       f"max rel residual {worst:.2e} (tol 1e-12)")


def check_disk_rotation_invariance(rel_tol: float) -> CheckResult:
    w2 = 0.2
    def make(rot):
        c, s = math.cos(rot), math.sin(rot)
        def f(y, z):
            yr, zr = c * y - s * z + 0.04, s * y + c * z - 0.03
            return np.exp(-(1.3 * yr * yr + 0.6 * zr * zr + 0.4 * yr * zr) / w2)
        return f
    base = numerics.disk_quadrature(make(0.0), 0.1, rel_tol)
    worst = max(
        abs(numerics.disk_quadrature(make(rot), 0.1, rel_tol) / base - 1.0)
        for rot in (0.7, 2.0, 4.5)
    )
    return CheckResult("disk_rotation_invariance", worst <= 10 * rel_tol,
                       f"max rel spread {worst:.2e} (tol {10 * rel_tol:.0e})")


def check_tracking_round_trip(rel_tol: float) -> CheckResult:
    worst = 0.0
    for rx in (1000.0, 600.0, -800.0):
        for ry in (-300.0, 0.0, 450.0):
            for rz in (-400.0, 0.0, 250.0):
                p = geometry.Position(rx, ry, rz)
                f = geometry.footprint_center(
                    geometry.Pose(p, geometry.tracking_orientation(p)))
                worst = max(worst, f.offset())
    return CheckResult("tracking_round_trip", worst <= 1e-9,
                       f"max footprint offset {worst:.2e} m (tol 1e-9)")


def check_footprint_affine(rel_tol: float) -> CheckResult:
    mu = geometry.spherical_mean_position(1000.0, 0.2, 1.8)
    o = geometry.tracking_orientation(mu)
    f0 = geometry.footprint_center(geometry.Pose(mu, o))
    worst = 0.0
    for delta in (0.01, -0.2, 3.0):
        f = geometry.footprint_center(
            geometry.Pose(geometry.Position(mu.rx, mu.ry + delta, mu.rz + delta), o))
        worst = max(worst, abs(f.fy - f0.fy - delta), abs(f.fz - f0.fz - delta))
    return CheckResult("footprint_affine", worst <= 1e-9,
                       f"max slope deviation {worst:.2e} m (tol 1e-9)")


def _orientation_grid():
    thetas = np.linspace(0.0, 2.0 * math.pi, 17)[:-1]
    phis = np.linspace(0.15, math.pi - 0.15, 9)
    for t in thetas:
        for p in phis:
            o = geometry.Orientation(float(t), float(p))
            try:
                geometry.incidence_angle(o)
            except geometry.DegenerateGeometryError:
                continue
            yield o


def check_ellipse_identity(rel_tol: float) -> CheckResult:
    worst = 0.0
    for o in _orientation_grid():
        ep = beam_mod.ellipse_params(o)
        s2 = math.sin(ep.psi) ** 2
        worst = max(
            worst,
            abs(ep.rho_y * ep.rho_z - ep.rho_yz**2 - s2),
            abs(ep.rho_min * ep.rho_max * s2 - 1.0),
            abs(1.0 / ep.rho_min + 1.0 / ep.rho_max - (ep.rho_y + ep.rho_z)),
        )
    return CheckResult("ellipse_identity", worst <= 1e-12,
                       f"max identity residual {worst:.2e} (tol 1e-12)")


def check_energy_conservation(rel_tol: float) -> CheckResult:
    tol = 1e-10 + 10 * rel_tol
    worst = 0.0
    for alpha, beta in ((0.0, math.pi / 2), (math.pi / 8, 5 * math.pi / 8),
                        (-math.pi / 4, math.pi / 3)):
        mu = geometry.spherical_mean_position(1000.0, alpha, beta)
        pose = geometry.Pose(mu, geometry.tracking_orientation(mu))
        ep = beam_mod.ellipse_params(pose.orientation)
        w = beam_mod.beam_width(DEFAULT_BEAM, mu.norm())
        radius = 6.0 * w * math.sqrt(ep.rho_max)
        total = numerics.disk_quadrature(
            lambda y, z: beam_mod.intensity_on_pd((y, z), pose, DEFAULT_BEAM),
            radius, rel_tol)
        worst = max(worst, abs(total - 1.0))
    return CheckResult("energy_conservation", worst <= tol,
                       f"max |integral - 1| = {worst:.2e} (tol {tol:.1e})")


def _bound_ordering_poses(n: int, seed: int = 11):
    rng = np.random.default_rng(seed)
    a = DEFAULT_DETECTOR.a
    poses = []
    for _ in range(n):
        alpha = rng.uniform(-math.pi / 3, math.pi / 3)
        beta = rng.uniform(math.pi / 3, 2 * math.pi / 3)
        u = rng.uniform(0.0, 3.0 * a)
        ang = rng.uniform(0.0, 2.0 * math.pi)
        mu = geometry.spherical_mean_position(1000.0, alpha, beta)
        o = geometry.tracking_orientation(mu)
        shifted = geometry.Position(mu.rx, mu.ry + u * math.cos(ang),
                                    mu.rz + u * math.sin(ang))
        poses.append(geometry.Pose(shifted, o))
    return poses


def check_bound_ordering(rel_tol: float, n: int = 150) -> CheckResult:
    slack = 2.0 * rel_tol
    worst = -math.inf
    for pose in _bound_ordering_poses(n):
        low = geoloss_mod.bound_lower(pose, DEFAULT_BEAM, DEFAULT_DETECTOR, rel_tol)
        ex = geoloss_mod.exact_loss(pose, DEFAULT_BEAM, DEFAULT_DETECTOR, rel_tol)
        upp = geoloss_mod.bound_upper(pose, DEFAULT_BEAM, DEFAULT_DETECTOR, rel_tol)
        worst = max(worst, low - ex, ex - upp)
    return CheckResult("bound_ordering", worst <= slack,
                       f"max ordering violation {worst:.2e} (slack {slack:.0e})")


def check_orthogonal_collapse(rel_tol: float) -> CheckResult:
    tol = 10 * rel_tol
    mu = geometry.spherical_mean_position(1000.0, 0.0, math.pi / 2)
    o = geometry.tracking_orientation(mu)
    worst = 0.0
    for u in (0.0, 0.05, 0.15, 0.3):
        pose = geometry.Pose(geometry.Position(mu.rx, mu.ry + u, mu.rz), o)
        ex = geoloss_mod.exact_loss(pose, DEFAULT_BEAM, DEFAULT_DETECTOR, rel_tol)
        low = geoloss_mod.bound_lower(pose, DEFAULT_BEAM, DEFAULT_DETECTOR, rel_tol)
        upp = geoloss_mod.bound_upper(pose, DEFAULT_BEAM, DEFAULT_DETECTOR, rel_tol)
        worst = max(worst, abs(low - ex), abs(upp - ex))
    return CheckResult("orthogonal_collapse", worst <= tol,
                       f"max |bound - exact| = {worst:.2e} (tol {tol:.0e})")


def check_closed_form_orthogonal(rel_tol: float) -> CheckResult:
    tol = max(1e-8, 10 * rel_tol)
    worst = 0.0
    for a in (0.01, 0.05, 0.1, 0.2):
        for dist in (500.0, 1000.0, 2000.0):
            mu = geometry.Position(dist, 0.0, 0.0)
            pose = geometry.Pose(mu, geometry.tracking_orientation(mu))
            w = beam_mod.beam_width(DEFAULT_BEAM, dist)
            ref = 1.0 - math.exp(-2.0 * a * a / (w * w))
            ex = geoloss_mod.exact_loss(pose, DEFAULT_BEAM,
                                        geoloss_mod.DetectorParams(a), rel_tol)
            worst = max(worst, abs(ex / ref - 1.0))
    return CheckResult("closed_form_orthogonal", worst <= tol,
                       f"max rel err {worst:.2e} (tol {tol:.0e})")


def check_pdf_normalization(rel_tol: float) -> CheckResult:
    from scipy.integrate import quad

    worst = 0.0
    a0, w = 0.0787, 0.4935
    for q in (0.3, 0.7, 1.0):
        for varpi in (0.5, 2.0, 10.0):
            lam1 = 1.0
            lam2 = q * q * lam1
            k_mean = varpi * 4.0 * q * (lam1 + lam2) / ((1.0 + q * q) * w * w)
            pdf = stochastic.GeoLossPdf(
                hoyt=stochastic.HoytParams(q=q, omega=lam1 + lam2,
                                           lambda1=lam1, lambda2=lam2),
                a0=a0, k_mean=k_mean, w=w, varpi=varpi)
            val, _ = quad(stochastic.pdf_hg, 0.0, a0, args=(pdf,), limit=300)
            worst = max(worst, abs(val - 1.0))
    return CheckResult("pdf_normalization", worst <= 1e-6,
                       f"max |integral - 1| = {worst:.2e} (tol 1e-6)")


def check_rayleigh_reduction(rel_tol: float) -> CheckResult:
    a0, w = 0.0787, 0.4935
    worst = 0.0
    for varpi in (0.5, 2.0, 6.0):
        lam = 1.0
        k_mean = varpi * 4.0 * (2.0 * lam) / (2.0 * w * w)
        pdf = stochastic.GeoLossPdf(
            hoyt=stochastic.HoytParams(q=1.0, omega=2.0 * lam,
                                       lambda1=lam, lambda2=lam),
            a0=a0, k_mean=k_mean, w=w, varpi=varpi)
        for frac in np.linspace(1e-6, 1.0, 23):
            x = float(frac * a0)
            full = stochastic.pdf_hg(x, pdf)
            ray = stochastic.pdf_hg_rayleigh(x, varpi, a0)
            worst = max(worst, abs(full - ray) / max(ray, 1e-300))
    return CheckResult("rayleigh_reduction", worst <= 1e-12,
                       f"max rel gap {worst:.2e} (tol 1e-12)")


def check_linearization_convergence(rel_tol: float) -> CheckResult:
    d = stochastic.PoseDistribution.from_spherical(
        1000.0, math.pi / 8, 5 * math.pi / 8, sigma_p=0.01, sigma_o=1e-4)
    base = np.array([0.02, -0.015, 0.01, 2e-4, -1.5e-4])
    errors = []
    for t in (1.0, 0.5, 0.25):
        eps = t * base
        lin = stochastic.linearized_footprint(d, eps)
        pose = geometry.Pose(
            geometry.Position(d.mu_r.rx + eps[0], d.mu_r.ry + eps[1],
                              d.mu_r.rz + eps[2]),
            geometry.Orientation(d.mu_omega.theta + eps[3],
                                 d.mu_omega.phi + eps[4]))
        f = geometry.footprint_center(pose)
        errors.append(math.hypot(f.fy - lin.fy, f.fz - lin.fz))
    quadratic = errors[1] <= 0.5 * errors[0] and errors[2] <= 0.5 * errors[1]
    return CheckResult("linearization_convergence", quadratic,
                       f"errors {errors[0]:.2e} -> {errors[1]:.2e} -> {errors[2]:.2e}")


def check_approx_bracket(rel_tol: float) -> CheckResult:
    ok = True
    worst = 0.0
    for pose in _bound_ordering_poses(40, seed=12):
        ap = geoloss_mod.approx_params(pose, DEFAULT_BEAM, DEFAULT_DETECTOR)
        low, upp = geoloss_mod.approx_bounds(ap)
        mean = geoloss_mod.approx_mean(ap)
        worst = max(worst, low - mean, mean - upp)
        ok = ok and low <= mean <= upp
    return CheckResult("approx_bracket", ok,
                       f"max bracket violation {worst:.2e}")


def check_hoyt_sampling(rel_tol: float) -> CheckResult:
    lam1, lam2 = 4.0, 1.0
    rng = np.random.default_rng(2718)
    g1 = rng.normal(0.0, math.sqrt(lam1), 1_000_000)
    g2 = rng.normal(0.0, math.sqrt(lam2), 1_000_000)
    mean_sq = float(np.mean(g1 * g1 + g2 * g2))
    rel = abs(mean_sq / (lam1 + lam2) - 1.0)
    return CheckResult("hoyt_sampling_power", rel <= 0.01,
                       f"E[u^2]/Omega - 1 = {rel:.2e} (tol 1e-2)")


def check_sensitivity_ordering(rel_tol: float) -> CheckResult:
    mu_x = 1000.0
    d0 = stochastic.PoseDistribution.from_spherical(mu_x, 0.0, math.pi / 2,
                                                    sigma_p=0.01, sigma_o=1e-4)
    bump = 1e-9
    s0 = stochastic.covariance_sigma(d0)
    d_o = stochastic.PoseDistribution.from_spherical(
        mu_x, 0.0, math.pi / 2, sigma_p=0.01,
        sigma_o=math.sqrt(1e-8 + bump))
    d_p = stochastic.PoseDistribution.from_spherical(
        mu_x, 0.0, math.pi / 2, sigma_p=math.sqrt(1e-4 + bump), sigma_o=1e-4)
    dl_do = (stochastic.covariance_sigma(d_o).a11 - s0.a11) / bump
    dl_dp = (stochastic.covariance_sigma(d_p).a11 - s0.a11) / bump
    ratio = dl_do / dl_dp
    ok = abs(dl_do - mu_x**2) / mu_x**2 <= 1e-3 and abs(dl_dp - 1.0) <= 1e-3 \
        and ratio > 1e4
    return CheckResult(
        "sensitivity_ordering", ok,
        f"dVar/dsigma_o^2 = {dl_do:.4g} (mu_x^2 = {mu_x**2:.4g}), "
        f"dVar/dsigma_p^2 = {dl_dp:.4g}")


ALL_CHECKS = (
    check_erf_oracle,
    check_i0_oracle,
    check_eig_trace_det,
    check_disk_rotation_invariance,
    check_tracking_round_trip,
    check_footprint_affine,
    check_ellipse_identity,
    check_energy_conservation,
    check_bound_ordering,
    check_orthogonal_collapse,
    check_closed_form_orthogonal,
    check_pdf_normalization,
    check_rayleigh_reduction,
    check_linearization_convergence,
    check_approx_bracket,
    check_hoyt_sampling,
    check_sensitivity_ordering,
)


def run_validation(rel_tol: float = geoloss_mod.DEFAULT_REL_TOL) -> list[CheckResult]:
    """Run every check; quadrature-based tolerances scale with rel_tol."""
    return [check(rel_tol) for check in ALL_CHECKS]
