"""Seeded Monte Carlo engine for loss statistics and empirical densities.

Trial i draws its pose from the counter-based substream (seed, i), so the
sample array is a pure function of the plan: evaluation order, chunking
into worker threads, and the thread count never change a single bit of the
output.  Losses are written into a preallocated array by trial index and
all statistics are computed from that array with numpy's pairwise sums.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.random import Philox
from scipy.integrate import quad
from scipy.stats import chi2 as _chi2_dist

from . import geoloss as geoloss_mod
from .beam import BeamParams
from .geoloss import DetectorParams
from .numerics import QuadratureError
from .stochastic import (
    CounterStream,
    GeoLossPdf,
    PoseDistribution,
    gaussian_from_uniforms,
    pdf_hg,
    raw_to_open_uniform,
)

LOSS_KERNELS = ("exact", "approx_mean")

# chunk size is part of the reproducibility contract: batched quadrature
# converges a chunk jointly, so chunk composition must not depend on the
# worker count
CHUNK = 1024

QUANTILE_LEVELS = (0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99)

THREADS_ENV = "FSO_GEOLOSS_THREADS"


class GofInconclusiveError(RuntimeError):
    """Too few samples for a meaningful test; raise n_trials."""


@dataclass(frozen=True)
class TrialPlan:
    n_trials: int
    seed: int
    distribution: PoseDistribution
    beam: BeamParams
    detector: DetectorParams
    loss_kernel: str = "exact"
    rel_tol: float = geoloss_mod.DEFAULT_REL_TOL

    def __post_init__(self):
        if self.n_trials < 1:
            raise ValueError(f"n_trials must be >= 1, got {self.n_trials!r}")
        if self.loss_kernel not in LOSS_KERNELS:
            raise ValueError(
                f"unknown loss kernel {self.loss_kernel!r}; pick one of {LOSS_KERNELS}"
            )


@dataclass(frozen=True)
class LossStats:
    mean_linear: float
    mean_db: float
    std_linear: float
    n: int
    quantiles: dict[float, float]
    mean_db_per_sample: float
    degenerate_trials: int = 0


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    total: int
    underflow: int = 0
    overflow: int = 0


def resolve_threads(threads: int | None = None) -> int:
    """Worker-thread count: explicit argument, else the env cap, else 1."""
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "1"))
    return max(1, threads)


def _chunk_eps(seed: int, start: int, count: int, sigmas: np.ndarray) -> np.ndarray:
    """Pose perturbations for trials [start, start+count), shape (count, 5).

    Regenerates exactly what per-trial CounterStream draws would produce.
    """
    per = CounterStream.RAWS_PER_TRIAL
    bg = Philox(key=seed)
    bg.advance(start * (per // 4))
    raw = bg.random_raw(count * per).reshape(count, per)[:, :5]
    return gaussian_from_uniforms(raw_to_open_uniform(raw), sigmas)


def _chunk_losses(plan: TrialPlan, start: int, count: int):
    """Losses and degenerate-trial count for one contiguous chunk."""
    d = plan.distribution
    eps = _chunk_eps(plan.seed, start, count, d.sigmas())
    rx = d.mu_r.rx + eps[:, 0]
    ry = d.mu_r.ry + eps[:, 1]
    rz = d.mu_r.rz + eps[:, 2]
    theta = (d.mu_omega.theta + eps[:, 3]) % (2.0 * math.pi)
    phi = d.mu_omega.phi + eps[:, 4]

    ok = (
        (phi > 0.0) & (phi < math.pi)
        & (np.abs(np.cos(theta)) >= 1e-12)
        & (np.abs(np.sin(phi)) >= 1e-12)
        & (np.abs(np.sin(phi) * np.cos(theta)) >= 1e-12)
        & (rx != 0.0)
    )
    losses = np.zeros(count)
    if ok.all():
        sel = slice(None)
    else:
        sel = np.nonzero(ok)[0]
    try:
        if plan.loss_kernel == "exact":
            vals = geoloss_mod.exact_loss_batch(
                rx[sel], ry[sel], rz[sel], theta[sel], phi[sel],
                plan.beam, plan.detector, plan.rel_tol,
            )
        else:
            vals = geoloss_mod.approx_mean_batch(
                rx[sel], ry[sel], rz[sel], theta[sel], phi[sel],
                plan.beam, plan.detector,
            )
    except QuadratureError as e:
        raise QuadratureError(
            f"{e} (trials [{start}, {start + count}))",
            e.best_estimate, e.last_diff) from e
    losses[sel] = vals
    return losses, int(count - int(ok.sum()))


def run_trials(plan: TrialPlan, threads: int | None = None):
    """Run the plan; returns (samples, LossStats).

    `threads` parallelizes chunk evaluation only; output is bit-identical
    for any thread count.
    """
    n = plan.n_trials
    samples = np.empty(n)
    starts = list(range(0, n, CHUNK))
    degenerate = 0

    def work(start: int):
        count = min(CHUNK, n - start)
        return start, _chunk_losses(plan, start, count)

    n_threads = resolve_threads(threads)
    if n_threads == 1 or len(starts) == 1:
        results = map(work, starts)
        for start, (losses, bad) in results:
            samples[start:start + len(losses)] = losses
            degenerate += bad
    else:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            for start, (losses, bad) in pool.map(work, starts):
                samples[start:start + len(losses)] = losses
                degenerate += bad

    return samples, summarize(samples, degenerate)


def summarize(samples: np.ndarray, degenerate: int = 0) -> LossStats:
    """Deterministic summary statistics of a loss sample array."""
    mean = float(np.mean(samples))
    with np.errstate(divide="ignore"):
        per_sample_db = -10.0 * np.log10(samples)
    qs = np.quantile(samples, QUANTILE_LEVELS)
    return LossStats(
        mean_linear=mean,
        mean_db=geoloss_mod.loss_db(mean),
        std_linear=float(np.std(samples)),
        n=len(samples),
        quantiles={lv: float(q) for lv, q in zip(QUANTILE_LEVELS, qs)},
        mean_db_per_sample=float(np.mean(per_sample_db)),
        degenerate_trials=degenerate,
    )


def build_histogram(samples, n_bins: int, value_range=None) -> Histogram:
    """Equal-width histogram; out-of-range samples land in under/overflow."""
    samples = np.asarray(samples)
    if samples.size == 0:
        raise ValueError("cannot histogram an empty sample array")
    if n_bins < 1:
        raise ValueError(f"n_bins must be >= 1, got {n_bins!r}")
    if value_range is None:
        lo, hi = float(samples.min()), float(samples.max())
        if lo == hi:
            hi = lo + (abs(lo) if lo else 1.0) * 1e-9
    else:
        lo, hi = map(float, value_range)
        if not lo < hi:
            raise ValueError(f"empty histogram range ({lo!r}, {hi!r})")
    edges = np.linspace(lo, hi, n_bins + 1)
    counts, _ = np.histogram(samples, bins=edges)
    return Histogram(
        edges=edges,
        counts=counts,
        total=int(counts.sum()),
        underflow=int((samples < lo).sum()),
        overflow=int((samples > hi).sum()),
    )


def _bin_probabilities(h: Histogram, pdf: GeoLossPdf) -> np.ndarray:
    """Model probability of each histogram cell plus the two open tails.

    Integrates the analytic density bin by bin (support-clipped), with the
    mass below edges[0] and above edges[-1] as extra first/last cells.
    """
    edges = np.clip(h.edges, 0.0, pdf.a0)
    probs = np.empty(len(h.counts) + 2)
    running = 0.0
    cell_edges = np.concatenate([[0.0], edges, [pdf.a0]])
    for i in range(len(cell_edges) - 1):
        lo, hi = cell_edges[i], cell_edges[i + 1]
        if hi <= lo:
            probs[i] = 0.0
            continue
        val, _err = quad(pdf_hg, lo, hi, args=(pdf,), limit=200)
        probs[i] = max(val, 0.0)
        running += probs[i]
    # absorb quadrature slack so the cells sum to exactly one
    if running > 0:
        probs /= running
    return probs


def chi_square_gof(h: Histogram, pdf: GeoLossPdf, min_expected: float = 5.0):
    """Pearson chi-square of a histogram against the analytic density.

    Tail cells are merged inward until each carries at least `min_expected`
    expected counts.  Returns (statistic, dof, p_value).
    """
    observed = np.concatenate([[h.underflow], h.counts, [h.overflow]]).astype(float)
    n = observed.sum()
    expected = n * _bin_probabilities(h, pdf)

    obs, exp = list(observed), list(expected)
    while len(exp) > 1 and exp[0] < min_expected:
        exp[1] += exp[0]; obs[1] += obs[0]
        del exp[0], obs[0]
    while len(exp) > 1 and exp[-1] < min_expected:
        exp[-2] += exp[-1]; obs[-2] += obs[-1]
        del exp[-1], obs[-1]
    if len(exp) < 2 or min(exp) < min_expected:
        raise GofInconclusiveError(
            f"{len(exp)} usable cells with min expected count "
            f"{min(exp):.2f}; raise n_trials or widen bins"
        )
    obs, exp = np.asarray(obs), np.asarray(exp)
    stat = float(np.sum((obs - exp) ** 2 / exp))
    dof = len(exp) - 1
    return stat, dof, float(_chi2_dist.sf(stat, dof))


def sturges_bins(n: int) -> int:
    return max(4, int(math.ceil(math.log2(max(n, 2)) + 1)))
