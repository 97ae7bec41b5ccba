"""Spectral valuation of continuously averaged arithmetic Asian options.

Prices are expressed through the dimensionless variables R = r / sigma^2,
tau = sigma^2 t, nu = 2R - 1, x = ln S0 and k = K tau / (4 e^x).  The put is
computed from its spectral representation; the call follows by put-call
parity because the direct call integral does not converge term by term.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConvergenceError, SmallTauWarning
from .kernel import QuadratureSpec, default_u_max, integrate_spectrum
from .quadrature import panel_rule
from .specfun import (
    FunctionAccuracy,
    gamma_upper,
    laguerre,
    log_gamma,
    whittaker_w,
    whittaker_w_scaled,
)

SMALL_TAU = 0.05
# Whittaker evaluations in the u-integrals: each value is checked to this
# accuracy, and its estimated error is carried into the price error.
_W_ACCURACY = FunctionAccuracy(rel_tol=1e-7)


@dataclass(frozen=True)
class MarketParams:
    spot: float
    strike: float
    rate: float
    vol: float
    expiry: float

    def __post_init__(self):
        for name in ("spot", "strike", "rate", "vol", "expiry"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not self.spot > 0.0:
            raise ValueError(f"spot must be > 0, got {self.spot}")
        if not self.strike >= 0.0:
            raise ValueError(f"strike must be >= 0, got {self.strike}")
        if not self.vol > 0.0:
            raise ValueError(f"vol must be > 0, got {self.vol}")
        if not self.expiry > 0.0:
            raise ValueError(f"expiry must be > 0, got {self.expiry}")


@dataclass(frozen=True)
class DimensionlessParams:
    R: float
    tau: float
    nu: float
    x: float
    k: float

    def __post_init__(self):
        if not self.tau > 0.0:
            raise ValueError(f"tau must be > 0, got {self.tau}")
        if not self.k >= 0.0:
            raise ValueError(f"k must be >= 0, got {self.k}")
        if abs(self.nu - (2.0 * self.R - 1.0)) > 1e-12 * max(1.0, abs(self.nu)):
            raise ValueError("nu must equal 2R - 1")

    @property
    def spot(self) -> float:
        return math.exp(self.x)

    @property
    def strike(self) -> float:
        return 4.0 * self.k * math.exp(self.x) / self.tau

    @classmethod
    def from_reduced(cls, R: float, tau: float, x: float, strike: float) -> "DimensionlessParams":
        return cls(R, tau, 2.0 * R - 1.0, x, strike * tau / (4.0 * math.exp(x)))


@dataclass(frozen=True)
class SpectralPrice:
    value: float
    quad_error_estimate: float
    n_integrand_evals: int
    n_discrete_terms: int


def to_dimensionless(m: MarketParams) -> DimensionlessParams:
    R = m.rate / m.vol**2
    tau = m.vol**2 * m.expiry
    x = math.log(m.spot)
    return DimensionlessParams(R, tau, 2.0 * R - 1.0, x, m.strike * tau / (4.0 * m.spot))


def discrete_term_count(nu: float) -> int:
    """Number of bound-state summands n = 0 .. floor(-nu/2); zero when nu > 0."""
    if nu > 0.0:
        return 0
    return int(math.floor(-nu / 2.0)) + 1


def _discrete_coefficients(nu: float, tau: float) -> list[tuple[int, float]]:
    """(n, 2(-nu-2n) / (n! Gamma(1-nu-n)) * exp(n(nu+n) tau/2)) for non-vanishing summands."""
    out = []
    for n in range(discrete_term_count(nu)):
        weight = -nu - 2.0 * n
        if weight == 0.0:
            continue
        c = 2.0 * weight / (math.factorial(n) * math.gamma(1.0 - nu - n))
        out.append((n, c * math.exp(n * (nu + n) * tau / 2.0)))
    return out


def _log_spectral_weight(nu: float, tau: float, u: np.ndarray) -> np.ndarray:
    """log of exp(-(u^2+nu^2) tau/8) |Gamma((nu+iu)/2)|^2 sinh(pi u) u."""
    pu = np.pi * u
    log_sinh = pu + np.log(-np.expm1(-2.0 * pu)) - math.log(2.0)
    lg = 2.0 * np.real(log_gamma((nu + 1j * u) / 2.0))
    return lg + log_sinh + np.log(u) - (u * u + nu * nu) * tau / 8.0


def pricing_u_max(tau: float, rel_tol: float = 1e-10) -> float:
    """Default spectral cutoff for the Whittaker integrands.

    Their modulus grows like exp(pi u / 4) before the Gaussian factor
    exp(-u^2 tau / 8) takes over, so the cutoff solves
    u^2 tau / 8 - pi u / 4 = ln(1 / rel_tol), plus the usual margin.
    """
    b = math.pi / 4.0
    u_star = (b + math.sqrt(b * b + 0.5 * tau * math.log(1.0 / rel_tol))) / (tau / 4.0)
    return max(default_u_max(tau, rel_tol), u_star + 10.0)


def _spectral_part(kappa: float, z: float, log_prefactor: float, dp: DimensionlessParams,
                   spec: QuadratureSpec, acc: FunctionAccuracy):
    """(1/2 pi^2) integral of exp(log_prefactor) W_{kappa, iu/2}(z) times the spectral weight."""
    nu, tau = dp.nu, dp.tau
    w_err = [0.0]

    def f(u):
        ls, mant, est = whittaker_w_scaled(kappa, 0.5j * u, z, acc)
        with np.errstate(under="ignore"):
            vals = mant.real * np.exp(ls + log_prefactor + _log_spectral_weight(nu, tau, u)) / (2.0 * math.pi**2)
        # error bound of the latest (finest) rule, from per-node accuracy estimates
        w_err[0] = float(np.sum(np.abs(vals) * est)) * (u_max / u.size)
        return vals

    u_max = spec.u_max if spec.u_max is not None else pricing_u_max(tau, spec.rel_tol)
    res = integrate_spectrum(f, u_max, tau, spec, min_panels=max(4, int(math.ceil(u_max / 8.0))))
    return res, w_err[0]


def pricing_kernel(dp: DimensionlessParams, xi: float, spec: QuadratureSpec = QuadratureSpec(),
                   acc: FunctionAccuracy | None = None) -> float:
    """Transition density of the integrated price, scaled so that payoffs integrate against it.

    The continuum part is an integral over u of Whittaker functions
    W_{(1-nu)/2, iu/2}(2 e^x / xi); bound states add finitely many terms when
    nu <= 0.
    """
    return pricing_kernel_detail(dp, xi, spec, acc)[0]


def pricing_kernel_detail(dp: DimensionlessParams, xi: float, spec: QuadratureSpec = QuadratureSpec(),
                          acc: FunctionAccuracy | None = None) -> tuple[float, float, int]:
    """(value, error estimate, integrand evaluations) of the pricing kernel at ``xi``."""
    if not xi > 0.0:
        raise ValueError(f"xi must be > 0, got {xi}")
    acc = acc or _W_ACCURACY
    nu = dp.nu
    ex = math.exp(dp.x)
    z = 2.0 * ex / xi
    kappa = 0.5 * (1.0 - nu)
    log_pref = -0.5 * z + kappa * math.log(z)
    res, w_err = _spectral_part(kappa, z, log_pref, dp, spec, acc)
    value = res.value
    err = res.error + w_err
    for n, coef in _discrete_coefficients(nu, dp.tau):
        ls, mant, est = whittaker_w_scaled(kappa, -nu / 2.0 - n, z, acc)
        term = coef * float(mant.real) * math.exp(float(ls) + log_pref)
        value += term
        err += abs(term) * float(est)
    return value, err, res.n_evals


def _put_log_prefactor(dp: DimensionlessParams) -> tuple[float, float]:
    """(kappa, log of (2k)^((3+nu)/2) e^(-1/(4k))) for the put integrand."""
    k = dp.k
    return -(3.0 + dp.nu) / 2.0, 0.5 * (3.0 + dp.nu) * math.log(2.0 * k) - 1.0 / (4.0 * k)


def put_price(dp: DimensionlessParams, spec: QuadratureSpec = QuadratureSpec(), *,
              printed_sign: bool = False, include_discrete: bool = True,
              acc: FunctionAccuracy | None = None) -> SpectralPrice:
    """Spectral value of the arithmetic-average Asian put (currency of the spot).

    ``printed_sign=True`` swaps the discount exp(-R tau) for exp(+R tau), a
    diagnostic that reproduces a known typo in the literature.
    ``include_discrete=False`` drops the bound-state terms (diagnostic only).
    """
    n_disc = discrete_term_count(dp.nu)
    if dp.k == 0.0:
        return SpectralPrice(0.0, 0.0, 0, n_disc)
    if dp.tau < SMALL_TAU:
        warnings.warn(
            f"tau = {dp.tau:.3g} < {SMALL_TAU}: spectral convergence is slow, u_max raised to "
            f"{spec.u_max or pricing_u_max(dp.tau, spec.rel_tol):.1f}",
            SmallTauWarning,
            stacklevel=2,
        )
    acc = acc or _W_ACCURACY
    kappa, log_pref = _put_log_prefactor(dp)
    z = 1.0 / (2.0 * dp.k)
    res, w_err = _spectral_part(kappa, z, log_pref, dp, spec, acc)
    inner = res.value
    err = res.error + w_err
    if include_discrete:
        for n, coef in _discrete_coefficients(dp.nu, dp.tau):
            ls, mant, est = whittaker_w_scaled(kappa, -dp.nu / 2.0 - n, z, acc)
            term = coef * float(mant.real) * math.exp(float(ls) + log_pref)
            inner += term
            err += abs(term) * float(est)
    sign = 1.0 if printed_sign else -1.0
    scale = math.exp(sign * dp.R * dp.tau + dp.x) / dp.tau
    return SpectralPrice(scale * inner, scale * err, res.n_evals, n_disc)


def parity_adjustment(dp: DimensionlessParams) -> float:
    """((1 - e^{-R tau}) / (R tau)) e^x - e^{-R tau} K, with the R -> 0 limit handled."""
    rt = dp.R * dp.tau
    factor = -math.expm1(-rt) / rt if abs(rt) > 1e-8 else 1.0 - rt / 2.0 + rt * rt / 6.0
    return factor * math.exp(dp.x) - math.exp(-rt) * dp.strike


def call_price(dp: DimensionlessParams, spec: QuadratureSpec = QuadratureSpec(), *,
               printed_sign: bool = False, acc: FunctionAccuracy | None = None) -> SpectralPrice:
    """Call value from the spectral put through put-call parity."""
    put = put_price(dp, spec, printed_sign=printed_sign, acc=acc)
    return SpectralPrice(put.value + parity_adjustment(dp), put.quad_error_estimate,
                         put.n_integrand_evals, put.n_discrete_terms)


# ---------------------------------------------------------------------------
# Consistency checks
# ---------------------------------------------------------------------------


def _u_two(b: float, z: float) -> float:
    """Tricomi U(2, b, z) from U(0) = 1 and U(1, b, z) = z^(1-b) e^z Gamma(b-1, z)."""
    if abs(b - 2.0) < 1e-6:
        return math.exp(z) * float(gamma_upper(-1.0, z))
    u1 = z ** (1.0 - b) * math.exp(z) * float(gamma_upper(b - 1.0, z))
    return (1.0 + (b - 2.0 - z) * u1) / (b - 2.0)


def put_summand_closed_form(nu: float, n: int, z: float) -> float:
    """W_{-(3+nu)/2, -nu/2-n}(z) without Whittaker machinery.

    The Kummer parameters are a = 2 - n and b = 1 - nu - 2n, so the Tricomi
    function reduces to a Laguerre polynomial (n >= 2), an incomplete gamma
    function (n = 1, where W_{mu-1/2, mu}(z) = z^(1/2-mu) e^(z/2) Gamma(2 mu, z)),
    or one step of the contiguous recurrence in a (n = 0).
    """
    mu = -nu / 2.0 - n
    b = 1.0 - nu - 2.0 * n
    if n >= 2:
        m = n - 2
        u = (-1) ** m * math.factorial(m) * float(laguerre(m, b - 1.0, z))
    elif n == 1:
        return z ** (0.5 - mu) * math.exp(0.5 * z) * float(gamma_upper(2.0 * mu, z))
    else:
        u = _u_two(b, z)
    return math.exp(-0.5 * z) * z ** (mu + 0.5) * u


def kernel_summand_closed_form(nu: float, n: int, z: float) -> float:
    """W_{(1-nu)/2, -nu/2-n}(z) = (-1)^n n! z^((1-nu)/2 - n) e^(-z/2) L_n^(-nu-2n)(z)."""
    return ((-1) ** n * math.factorial(n) * z ** ((1.0 - nu) / 2.0 - n) * math.exp(-0.5 * z)
            * float(laguerre(n, -nu - 2.0 * n, z)))


def discrete_terms_crosscheck(dp: DimensionlessParams, n_max: int | None = None) -> float:
    """Largest relative gap between Whittaker and polynomial/incomplete-gamma summands.

    Covers the put summands at z = 1/(2k) and the pricing-kernel summands at
    z = 1/(2k) and z = 2.  Summands with a vanishing coefficient are skipped.
    """
    count = discrete_term_count(dp.nu)
    if count == 0:
        return 0.0
    nu = dp.nu
    points = [2.0] + ([1.0 / (2.0 * dp.k)] if dp.k > 0.0 else [])
    acc = FunctionAccuracy(rel_tol=1e-12)
    worst = 0.0
    for n in range(count if n_max is None else min(count, n_max + 1)):
        if -nu - 2.0 * n == 0.0:
            continue
        mu = -nu / 2.0 - n
        for z in points:
            pairs = [
                (whittaker_w(-(3.0 + nu) / 2.0, mu, z, acc).real, put_summand_closed_form(nu, n, z)),
                (whittaker_w((1.0 - nu) / 2.0, mu, z, acc).real, kernel_summand_closed_form(nu, n, z)),
            ]
            for a, b in pairs:
                worst = max(worst, abs(a - b) / max(abs(b), 1e-300))
    return worst


def payoff_integral_closed_form(nu: float, rho: complex, k: float, x: float) -> complex:
    """4 e^{2x} (2k)^((3+nu)/2) e^(-1/(4k)) W_{-(3+nu)/2, rho/2}(1/(2k))."""
    w = whittaker_w(-(3.0 + nu) / 2.0, complex(rho) / 2.0, 1.0 / (2.0 * k))
    return complex(4.0 * math.exp(2.0 * x + 0.5 * (3.0 + nu) * math.log(2.0 * k) - 1.0 / (4.0 * k)) * w)


def payoff_integral_quadrature(nu: float, rho: complex, k: float, x: float, n_panels: int = 40,
                               order: int = 24) -> complex:
    """Direct quadrature over xi in (0, K tau) of the put payoff against the kernel building block.

    Integrand: (K tau - xi) (2 e^x / xi)^((1-nu)/2) e^(-e^x/xi) W_{(1-nu)/2, rho/2}(2 e^x / xi),
    with K tau = 4 k e^x.  Uses xi = K tau e^(-s), s >= 0, because the
    integrand vanishes faster than any power as xi -> 0.
    """
    ex = math.exp(x)
    ktau = 4.0 * k * ex
    s_hi = math.log(max(ex / ktau, 1.0)) + 7.0
    nodes, weights = panel_rule(0.0, s_hi, n_panels, order)
    xi = ktau * np.exp(-nodes)
    z = 2.0 * ex / xi
    w = whittaker_w(np.full(z.shape, (1.0 - nu) / 2.0), np.full(z.shape, complex(rho) / 2.0), z)
    g = (ktau - xi) * np.exp(0.5 * (1.0 - nu) * np.log(z) - 0.5 * z) * w * xi
    return complex(np.dot(weights, g))


@dataclass(frozen=True)
class MomentResult:
    zeroth: float
    first: float
    n_xi: int


def kernel_moments(dp: DimensionlessParams, spec: QuadratureSpec = QuadratureSpec(rel_tol=1e-7),
                   s_range: tuple[float, float] = (-12.0, 8.0), order: int = 48) -> MomentResult:
    """Integrals of P and xi P over xi > 0, in the variable s = ln xi.

    P is a bell in s centred near the log of the mean of the integrated
    price, with width of order sqrt(tau); one Gauss-Legendre rule covers
    +-10 widths of it, clipped to ``s_range``.  The rule is rejected if P has
    not decayed at its ends.
    """
    ex = math.exp(dp.x)
    rt = dp.R * dp.tau
    mean_v = ex * (math.expm1(rt) / dp.R if dp.R != 0.0 else dp.tau)
    centre = math.log(mean_v)
    width = math.sqrt(dp.tau / 3.0) + 0.02
    lo = max(s_range[0], centre - 10.0 * width - 0.2)
    hi = min(s_range[1], centre + 10.0 * width + 0.3)
    nodes, weights = panel_rule(lo, hi, 1, order)
    xi = np.exp(nodes)
    vals = np.array([pricing_kernel(dp, float(v), spec) for v in xi])
    peak = float(np.max(np.abs(vals * xi)))
    edge_pts = [v for v, bound in ((lo, s_range[0]), (hi, s_range[1])) if v != bound]
    for s_edge in edge_pts:
        edge = abs(pricing_kernel(dp, math.exp(s_edge), spec)) * math.exp(s_edge)
        if edge > 1e-8 * peak:
            raise ConvergenceError(f"kernel_moments: P has not decayed at s = {s_edge:.2f}")
    w = weights * xi
    return MomentResult(float(np.dot(w, vals)), float(np.dot(w * xi, vals)), int(xi.size))


def analytic_moments(dp: DimensionlessParams) -> tuple[float, float]:
    """Exact zeroth and first moments of the pricing kernel: 4 e^x and 4 e^{2x} (e^{R tau} - 1)/R."""
    ex = math.exp(dp.x)
    rt = dp.R * dp.tau
    growth = math.expm1(rt) / dp.R if dp.R != 0.0 else dp.tau
    return 4.0 * ex, 4.0 * ex * ex * growth


def moment_check(dp: DimensionlessParams, order: int,
                 spec: QuadratureSpec = QuadratureSpec(rel_tol=1e-7),
                 reference: Callable[[DimensionlessParams], tuple[float, float]] = analytic_moments) -> float:
    """Relative residual of the order-0 or order-1 kernel moment against ``reference``."""
    if order not in (0, 1):
        raise ValueError("order must be 0 or 1")
    m = kernel_moments(dp, spec)
    got = m.zeroth if order == 0 else m.first
    want = reference(dp)[order]
    return abs(got - want) / abs(want)
