"""Heat kernel of the Liouville operator -1/2 d^2/dx^2 + q e^x by spectral quadrature.

The continuous spectrum is labelled by u > 0 with eigenfunctions
psi_u(x) = (1/pi) sqrt(u sinh(pi u)) K_{iu}(sqrt(8 q) e^{x/2}).  This module
also hosts the adaptive u-integrator shared with the pricing module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConvergenceError, GridResolutionError, TailBoundError
from .quadrature import panel_rule
from .specfun import bessel_k_imag_scaled


@dataclass(frozen=True)
class QuadratureSpec:
    """Truncation and tolerance policy for spectral u-integrals.

    ``u_max=None`` selects ``default_u_max(tau, rel_tol)`` at the call site.
    """

    u_max: float | None = None
    rel_tol: float = 1e-10
    max_panels: int = 512
    panel_order: int = 16
    abs_floor: float = 1e-14

    def __post_init__(self):
        if self.u_max is not None and not self.u_max > 0.0:
            raise ValueError(f"u_max must be > 0, got {self.u_max}")
        if not 0.0 < self.rel_tol <= 1e-3:
            raise ValueError(f"rel_tol must lie in (0, 1e-3], got {self.rel_tol}")
        if self.max_panels < 4:
            raise ValueError(f"max_panels must be >= 4, got {self.max_panels}")
        if not 8 <= self.panel_order <= 64:
            raise ValueError(f"panel_order must lie in [8, 64], got {self.panel_order}")
        if self.abs_floor < 0.0:
            raise ValueError(f"abs_floor must be >= 0, got {self.abs_floor}")

    def resolve_u_max(self, tau: float) -> float:
        return self.u_max if self.u_max is not None else default_u_max(tau, self.rel_tol)


@dataclass(frozen=True)
class KernelPoint:
    tau: float
    x: float
    x_prime: float
    q: float

    def __post_init__(self):
        if not self.tau > 0.0:
            raise ValueError(f"tau must be > 0, got {self.tau}")
        if not self.q > 0.0:
            raise ValueError(f"q must be > 0, got {self.q}")


@dataclass(frozen=True)
class SpectralIntegral:
    value: float
    error: float
    n_evals: int
    tail: float


def default_u_max(tau: float, rel_tol: float = 1e-10) -> float:
    """Cutoff past which exp(-u^2 tau / 8) is below ``rel_tol`` with margin."""
    return max(40.0, math.sqrt(8.0 * math.log(1.0 / rel_tol) / tau) + 10.0)


def integrate_spectrum(
    integrand: Callable[[np.ndarray], np.ndarray],
    u_max: float,
    tau: float,
    spec: QuadratureSpec,
    *,
    min_panels: int | None = None,
) -> SpectralIntegral:
    """Integrate ``integrand`` over (0, u_max) with composite Gauss-Legendre.

    The panel count doubles until two successive estimates agree to the
    tolerance.  Gauss nodes never touch u = 0.  The neglected tail beyond
    ``u_max`` is bounded from the last panel using the Gaussian damping
    exp(-u^2 tau / 8) that every spectral integrand carries.
    """
    n = min_panels or max(4, int(math.ceil(u_max / 4.0)))
    n = min(n, spec.max_panels)
    evals = 0
    prev = None
    while True:
        nodes, weights = panel_rule(0.0, u_max, n, spec.panel_order)
        vals = np.asarray(integrand(nodes), dtype=float)
        evals += nodes.size
        total = float(np.dot(weights, vals))
        l1 = float(np.dot(weights, np.abs(vals)))
        if prev is not None:
            err = abs(total - prev)
            scale = max(abs(total), l1 * 1e-3)
            if err <= spec.rel_tol * scale + spec.abs_floor:
                break
        if 2 * n > spec.max_panels:
            if prev is None:
                prev = total
                err = math.inf
            raise ConvergenceError(
                f"spectral integral not converged with {n} panels (last change {err:.2e})"
            )
        prev = total
        n *= 2
    # tail beyond u_max: |f| decays at least like exp(-u^2 tau/8) * poly(u)
    last = np.abs(vals[-spec.panel_order:]).max()
    tail = last * 4.0 / (u_max * tau)
    # cancellation already limits the result to rel_tol of the absolute integral
    if tail > spec.rel_tol * max(abs(total), l1) + spec.abs_floor:
        raise TailBoundError(
            f"truncation tail {tail:.2e} at u_max={u_max:g} exceeds tolerance (value {total:.3e})"
        )
    return SpectralIntegral(total, err + tail, evals, tail)


def _log_sinh_pi(u: np.ndarray) -> np.ndarray:
    """log(sinh(pi u)) for u > 0 without overflow."""
    pu = np.pi * u
    return pu + np.log(-np.expm1(-2.0 * pu)) - math.log(2.0)


def eigenfunction(u, x, q):
    """Normalized continuum eigenfunction (1/pi) sqrt(u sinh(pi u)) K_{iu}(sqrt(8q) e^{x/2})."""
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0.0):
        raise ValueError("eigenfunction requires u > 0")
    if np.any(np.asarray(q) <= 0.0):
        raise ValueError("eigenfunction requires q > 0")
    z = np.sqrt(8.0 * np.asarray(q, dtype=float)) * np.exp(0.5 * np.asarray(x, dtype=float))
    log_k, mant = bessel_k_imag_scaled(u, z)
    with np.errstate(under="ignore"):
        out = mant * np.exp(log_k + 0.5 * (np.log(u) + _log_sinh_pi(u))) / np.pi
    return out[()]


def _kernel_integrand(tau: float, z1, z2):
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)

    def f(u):
        uu = u.reshape((1,) * z1.ndim + (-1,))
        l1, m1 = bessel_k_imag_scaled(uu, z1[..., None])
        l2, m2 = bessel_k_imag_scaled(uu, z2[..., None])
        expo = l1 + l2 + _log_sinh_pi(uu) + np.log(uu) - uu * uu * tau / 8.0
        with np.errstate(under="ignore"):
            return m1 * m2 * np.exp(expo) / np.pi**2

    return f


def heat_kernel(p: KernelPoint, spec: QuadratureSpec = QuadratureSpec()) -> float:
    """Heat kernel K(tau, x, x'; q) as the spectral integral over u."""
    return heat_kernel_detail(p, spec).value


def heat_kernel_detail(p: KernelPoint, spec: QuadratureSpec = QuadratureSpec()) -> SpectralIntegral:
    c = math.sqrt(8.0 * p.q)
    z1, z2 = sorted((c * math.exp(0.5 * p.x), c * math.exp(0.5 * p.x_prime)))
    f = _kernel_integrand(p.tau, np.float64(z1), np.float64(z2))
    return integrate_spectrum(f, spec.resolve_u_max(p.tau), p.tau, spec)


def heat_kernel_grid(tau: float, x: float, x_prime, q: float,
                     spec: QuadratureSpec = QuadratureSpec()) -> np.ndarray:
    """Heat kernel for one ``x`` and an array of ``x_prime`` on a shared u-grid.

    The convergence test applies to the whole vector (sup-norm relative to
    its largest entry).
    """
    if not tau > 0.0 or not q > 0.0:
        raise ValueError("tau and q must be > 0")
    xp = np.atleast_1d(np.asarray(x_prime, dtype=float))
    c = math.sqrt(8.0 * q)
    z1 = c * math.exp(0.5 * x)
    z2 = c * np.exp(0.5 * xp)
    u_max = spec.resolve_u_max(tau)
    # the product K_{iu}(z1) K_{iu}(z2) oscillates in u at rate |ln(z1/z2)| / 2
    rate = 0.5 * float(np.max(np.abs(np.log(z2 / z1)))) + 1.0
    n = max(4, int(math.ceil(u_max * rate / 8.0)))
    prev = None
    while True:
        nodes, weights = panel_rule(0.0, u_max, n, spec.panel_order)
        l1, m1 = bessel_k_imag_scaled(nodes, z1)
        l2, m2 = bessel_k_imag_scaled(nodes[None, :], z2[:, None])
        common = l1 + _log_sinh_pi(nodes) + np.log(nodes) - nodes * nodes * tau / 8.0
        with np.errstate(under="ignore"):
            vals = m2 * np.exp(l2 + common) * (m1 / np.pi**2)
        total = vals @ weights
        if prev is not None:
            err = np.max(np.abs(total - prev))
            if err <= spec.rel_tol * np.max(np.abs(total)) + spec.abs_floor:
                return total
        if 2 * n > spec.max_panels:
            raise ConvergenceError("heat_kernel_grid: spectral integral not converged")
        prev = total
        n *= 2


def completeness_defect(
    x: float,
    q: float,
    f: Callable[[np.ndarray], np.ndarray],
    grid,
    spec: QuadratureSpec = QuadratureSpec(u_max=40.0),
) -> float:
    """|integral of I(x, x') f(x') dx' - f(x)| with I the tau -> 0 kernel cut at u_max.

    ``grid`` is an increasing array of x' nodes (trapezoid rule).  The inner
    Bessel factor oscillates in x' with wavenumber up to u_max / 2, so the
    grid spacing must not exceed pi / u_max.
    """
    if not q > 0.0:
        raise ValueError("q must be > 0")
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 3 or np.any(np.diff(grid) <= 0.0):
        raise ValueError("grid must be a strictly increasing 1-D array with >= 3 nodes")
    u_max = spec.u_max if spec.u_max is not None else 40.0
    if np.max(np.diff(grid)) > math.pi / u_max:
        raise GridResolutionError(
            f"grid spacing {np.max(np.diff(grid)):.3g} exceeds pi/u_max = {math.pi / u_max:.3g}"
        )
    fx = np.asarray(f(grid), dtype=float)
    target = float(np.asarray(f(np.array([x])), dtype=float).ravel()[0])
    if not np.any(fx) and target == 0.0:
        return 0.0
    w = _trapezoid_weights(grid)
    c = math.sqrt(8.0 * q)
    zp = c * np.exp(0.5 * grid)
    z0 = c * math.exp(0.5 * x)
    n_panels = max(8, int(math.ceil(u_max / 2.0)))
    nodes, weights = panel_rule(0.0, u_max, n_panels, spec.panel_order)
    lk, mk = bessel_k_imag_scaled(nodes[:, None], zp[None, :])
    with np.errstate(under="ignore"):
        inner = (mk * np.exp(lk)) @ (w * fx)
    l0, m0 = bessel_k_imag_scaled(nodes, z0)
    with np.errstate(under="ignore"):
        outer = m0 * np.exp(l0 + _log_sinh_pi(nodes)) * nodes / np.pi**2
    return abs(float(np.dot(weights, outer * inner)) - target)


def _trapezoid_weights(grid: np.ndarray) -> np.ndarray:
    d = np.diff(grid)
    w = np.zeros_like(grid)
    w[:-1] += 0.5 * d
    w[1:] += 0.5 * d
    return w
