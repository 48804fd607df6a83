"""Special functions, disk quadrature, and a 2x2 symmetric eigensolver.

Everything here is pure and deterministic: identical inputs give
bit-identical outputs, so results are reproducible across runs and across
any parallel evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

_SQRT_PI = math.sqrt(math.pi)
_LOG_MAX = 709.782712893384  # log(DBL_MAX)


class QuadratureError(RuntimeError):
    """Disk quadrature failed to converge; carries the best estimate."""

    def __init__(self, message, best_estimate, last_diff):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.last_diff = last_diff


@dataclass(frozen=True)
class SymMatrix2:
    """Symmetric 2x2 matrix; a12 is the shared off-diagonal entry."""

    a11: float
    a12: float
    a22: float

    def trace(self) -> float:
        return self.a11 + self.a22

    def det(self) -> float:
        return self.a11 * self.a22 - self.a12 * self.a12

    def is_psd(self, tol: float = 0.0) -> bool:
        return self.a11 >= -tol and self.a22 >= -tol and self.det() >= -tol


def erf(x: float) -> float:
    """Error function, library-free, relative error below 1e-12.

    Maclaurin series for |x| <= 3; beyond that the complement is evaluated
    with the standard continued fraction and subtracted from 1.
    """
    if x != x:
        return x
    ax = abs(x)
    if ax <= 3.0:
        # sum (-1)^n x^(2n+1) / (n! (2n+1)), scaled by 2/sqrt(pi)
        term = ax
        total = ax
        n = 0
        x2 = ax * ax
        while True:
            n += 1
            term *= -x2 / n
            contrib = term / (2 * n + 1)
            total += contrib
            if abs(contrib) < 1e-18 * abs(total) + 5e-324:
                break
        val = 2.0 / _SQRT_PI * total
    else:
        val = 1.0 - _erfc_cf(ax)
    return -val if x < 0 else val


def _erfc_cf(x: float) -> float:
    # erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    # evaluated bottom-up with enough levels for x >= 3
    levels = 60
    cf = 0.0
    for n in range(levels, 0, -1):
        cf = (n / 2.0) / (x + cf)
    return math.exp(-x * x) / _SQRT_PI / (x + cf)


def bessel_i0(x: float) -> float:
    """Modified Bessel function I0, relative error below 1e-10.

    Power series for |x| <= 15, asymptotic expansion beyond.  Raises
    OverflowError once I0(x) itself exceeds the double range (|x| ~ 713).
    """
    r = _log_bessel_i0(x)
    if r > _LOG_MAX:
        raise OverflowError(f"bessel_i0 overflows for x={x!r}")
    return math.exp(r)


def _log_bessel_i0(x: float) -> float:
    """log(I0(x)); never overflows for finite x."""
    ax = abs(x)
    if ax <= 15.0:
        q = ax * ax / 4.0
        term = 1.0
        total = 1.0
        k = 0
        while True:
            k += 1
            term *= q / (k * k)
            total += term
            if term < 1e-18 * total:
                break
        return math.log(total)
    # I0(x) ~ exp(x)/sqrt(2 pi x) * sum_k prod_j (2j-1)^2 / (k! (8x)^k)
    term = 1.0
    total = 1.0
    k = 0
    while True:
        k += 1
        nxt = term * (2 * k - 1) ** 2 / (8.0 * k * ax)
        if nxt >= term:  # past the optimal truncation point
            break
        term = nxt
        total += term
        if term < 1e-18 * total:
            break
    return ax + math.log(total) - 0.5 * math.log(2.0 * math.pi * ax)


@lru_cache(maxsize=32)
def _polar_rule(order: int, radius: float):
    """Tensor Gauss-Legendre nodes/weights on the radius-`radius` disk.

    `order` radial points on [0, radius] and 2*order angular points on
    [0, 2pi); the radial Jacobian r is folded into the weights.  Returns
    flat (y, z, w) arrays.
    """
    xr, wr = np.polynomial.legendre.leggauss(order)
    r = 0.5 * radius * (xr + 1.0)
    wr = 0.5 * radius * wr * r
    xt, wt = np.polynomial.legendre.leggauss(2 * order)
    t = math.pi * (xt + 1.0)
    wt = math.pi * wt
    y = np.multiply.outer(r, np.cos(t)).ravel()
    z = np.multiply.outer(r, np.sin(t)).ravel()
    w = np.multiply.outer(wr, wt).ravel()
    return y, z, w


_BASE_ORDER = 8
_MAX_LEVEL = 6  # orders 8, 16, ..., 512


def disk_quadrature(f, radius: float, rel_tol: float = 1e-9):
    """Integrate f(y, z) over the disk y^2 + z^2 <= radius^2.

    Parameters
    ----------
    f : callable
        Must accept equal-shape 1-D arrays (y, z) and return the integrand
        values with shape (..., len(y)); a leading axis batches independent
        integrands that are converged together.
    radius : float
        Disk radius, > 0.
    rel_tol : float
        Convergence target: successive doubled-order estimates must agree
        to rel_tol in relative terms (with a tiny absolute floor).

    Returns the estimate (scalar, or an array matching f's leading axes).
    Raises QuadratureError if doubling the order `_MAX_LEVEL` times never
    converges.  An integral cancelling to far below eps times the gross
    mass integral(|f|) is resolved only to that rounding floor.
    """
    if not radius > 0.0:
        raise ValueError(f"radius must be positive, got {radius!r}")
    if not 0.0 < rel_tol < 1.0:
        raise ValueError(f"rel_tol must be in (0, 1), got {rel_tol!r}")

    prev = None
    for level in range(_MAX_LEVEL + 1):
        y, z, w = _polar_rule(_BASE_ORDER << level, radius)
        vals = np.asarray(f(y, z))
        # ufunc reduction, not BLAS: bit-identical under concurrent callers
        est = np.sum(vals * w, axis=-1)
        if prev is not None:
            diff = np.abs(est - prev)
            gross = np.sum(np.abs(vals) * w, axis=-1)
            tol = np.maximum(rel_tol * np.abs(est), 1e-13 * gross) + 1e-300
            if np.all(diff <= tol):
                return est if est.ndim else float(est)
        prev = est
    raise QuadratureError(
        f"disk quadrature did not converge to rel_tol={rel_tol:g} "
        f"within {_MAX_LEVEL} refinements",
        best_estimate=prev if prev.ndim else float(prev),
        last_diff=float(np.max(diff)),
    )


def eig_sym2(m: SymMatrix2) -> tuple[float, float]:
    """Eigenvalues of a symmetric 2x2 matrix, largest first (closed form)."""
    mean = 0.5 * (m.a11 + m.a22)
    disc = math.hypot(0.5 * (m.a11 - m.a22), m.a12)
    return mean + disc, mean - disc
