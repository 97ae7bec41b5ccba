"""Special functions needed by the spectral pricing formulas.

All routines work in double precision and broadcast over numpy arrays.
Functions whose evaluation can suffer cancellation (Tricomi U, Whittaker W)
estimate the loss of significance and raise :class:`ConvergenceError` when
the requested relative tolerance is out of reach.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, PoleError, UnderflowWarning
from .quadrature import panel_rule

EPS = float(np.finfo(float).eps)


@dataclass(frozen=True)
class FunctionAccuracy:
    rel_tol: float = 1e-10
    abs_floor: float = 1e-14

    def __post_init__(self):
        if not 0.0 < self.rel_tol <= 1e-3:
            raise ValueError(f"rel_tol must lie in (0, 1e-3], got {self.rel_tol}")
        if self.abs_floor < 0.0:
            raise ValueError(f"abs_floor must be >= 0, got {self.abs_floor}")


DEFAULT_ACCURACY = FunctionAccuracy()


def _out(arr, like_scalar: bool):
    return np.asarray(arr).reshape(())[()] if like_scalar else arr


# ---------------------------------------------------------------------------
# Gamma function
# ---------------------------------------------------------------------------

_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _is_gamma_pole(z: np.ndarray) -> np.ndarray:
    return (z.imag == 0.0) & (z.real <= 0.0) & (z.real == np.round(z.real))


def log_gamma(z):
    """Principal branch of log Gamma(z) for complex ``z``.

    Lanczos approximation (g = 7, nine terms) for Re z >= 1/2; smaller real
    parts are shifted up with the recurrence Gamma(z + 1) = z Gamma(z), which
    keeps the branch cut on the negative real axis.
    """
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(_is_gamma_pole(z)):
        raise PoleError(f"log_gamma: pole at {z[_is_gamma_pole(z)][0].real:g}")
    shift = np.maximum(0, np.ceil(0.5 - z.real)).astype(int)
    w = z + shift - 1.0
    series = np.full_like(w, _LANCZOS_COEF[0])
    for k, c in enumerate(_LANCZOS_COEF[1:], start=1):
        series += c / (w + k)
    t = w + _LANCZOS_G + 0.5
    res = _HALF_LOG_2PI + (w + 0.5) * np.log(t) - t + np.log(series)
    for k in range(int(shift.max(initial=0))):
        m = shift > k
        res[m] -= np.log(z[m] + k)
    return _out(res, scalar)


def rgamma_log(z):
    """log(1/Gamma(z)) with ``-inf`` real part at the poles (where 1/Gamma = 0)."""
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    out = np.full(z.shape, -np.inf + 0j)
    ok = ~_is_gamma_pole(z)
    if np.any(ok):
        out[ok] = -log_gamma(z[ok])
    return _out(out, scalar)


def gamma_weight(nu, u):
    """|Gamma((nu + i u) / 2)|**2, the weight of the continuous spectrum."""
    lg = log_gamma((np.asarray(nu, dtype=float) + 1j * np.asarray(u, dtype=float)) / 2.0)
    return np.exp(2.0 * np.real(lg))


# ---------------------------------------------------------------------------
# Modified Bessel function of imaginary order
# ---------------------------------------------------------------------------


_K_CHUNK = 2048


def _sinh_minus_id(d: np.ndarray) -> np.ndarray:
    """sinh(d) - d without cancellation for small |d|."""
    d = np.asarray(d, dtype=float)
    d2 = d * d
    small = d * d2 * (1 / 6 + d2 * (1 / 120 + d2 * (1 / 5040 + d2 * (1 / 362880 + d2 / 39916800))))
    with np.errstate(over="ignore"):
        big = np.sinh(d) - d
    return np.where(np.abs(d) < 0.5, small, big)


def _bessel_k_imag_scaled(a: np.ndarray, x: np.ndarray, order: int = 16):
    """Return ``(log_scale, value)`` with K_{ia}(x) = value * exp(log_scale).

    The cosine integral is moved onto the path where Im(-x cosh t + i a t)
    is constant.  For a <= x the path leaves the imaginary axis at the saddle
    i*arcsin(a/x) and the integrand is positive.  For a > x the saddle sits at
    arccosh(a/x) + i*pi/2; the path runs along Im t = pi/2 up to it (a bounded
    oscillatory piece) and then follows steepest descent to infinity.
    """
    over = a > x
    ratio = np.where(over, a / x, 1.0)
    sigma0 = np.where(over, np.arccosh(ratio), 0.0)
    chi = np.where(over, a * sigma0 - np.sqrt(np.maximum(a * a - x * x, 0.0)), 0.0)
    s_in = np.where(over, 0.0, a / np.where(x > 0, x, 1.0))
    tau0 = np.where(over, 0.5 * np.pi, np.arcsin(np.clip(s_in, 0.0, 1.0)))
    log_scale = np.where(over, -0.5 * np.pi * a, -x * np.cos(tau0) - a * tau0)

    # steepest-descent tail: choose the cutoff where the integrand is < e^-45
    span = np.maximum(1.0, np.arccosh(np.maximum((np.abs(log_scale) + 50.0) / x, 1.0)) - sigma0)
    for _ in range(12):
        probe = sigma0 + span
        r_probe, _, _ = _path_terms(a, x, sigma0, chi, over, probe)
        short = r_probe - log_scale > -45.0
        if not np.any(short):
            break
        span = np.where(short, 2.0 * span, span)

    nodes, weights = panel_rule(sigma0, sigma0 + span, 16, order)
    r, taup, ok = _path_terms(a[..., None], x[..., None], sigma0[..., None], chi[..., None],
                              over[..., None], nodes)
    integrand = np.exp(r - log_scale[..., None])
    chi_b = chi[..., None]
    integrand = np.where(over[..., None], integrand * (np.cos(chi_b) - taup * np.sin(chi_b)), integrand)
    value = np.sum(weights * np.where(ok, integrand, 0.0), axis=-1)

    if np.any(over):
        phase_span = np.where(over, a * sigma0, 0.0)
        n_pan = int(np.ceil(phase_span.max() / np.pi)) + 2
        hn, hw = panel_rule(np.zeros_like(sigma0), sigma0, n_pan, order)
        horiz = np.sum(hw * np.cos(a[..., None] * hn - x[..., None] * np.sinh(hn)), axis=-1)
        value = value + np.where(over, horiz, 0.0)
    return log_scale, value


def _path_terms(a, x, sigma0, chi, over, sigma):
    """Exponent R(sigma) and slope tau'(sigma) along the descent path."""
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        xs = x * np.sinh(sigma)
        d = sigma - sigma0
        n_over = a * _sinh_minus_id(d) + 2.0 * x * np.sinh(sigma0) * np.sinh(0.5 * d) ** 2
        n_under = (x - a) * np.sinh(sigma) + a * _sinh_minus_id(sigma)
        num = np.where(over, n_over, n_under)
        sin_t = 1.0 - num / xs
        cos_t = np.sqrt(np.maximum(num * (2.0 * xs - num), 0.0)) / xs
        tau = np.arctan2(sin_t, cos_t)
        r = -x * np.cosh(sigma) * cos_t - a * tau
        top = -2.0 * x * np.sinh(0.5 * (sigma + sigma0)) * np.sinh(0.5 * d) + num / np.tanh(sigma)
        taup = np.where(over, top / (xs * cos_t), 0.0)
        ok = np.isfinite(r) & np.isfinite(taup)
    return np.where(ok, r, -np.inf), np.where(ok, taup, 0.0), ok


def bessel_k_imag_scaled(u, z):
    """K_{iu}(z) as ``(log_scale, mantissa)`` so that tiny values keep full precision."""
    a, x = np.broadcast_arrays(np.abs(np.asarray(u, dtype=float)), np.asarray(z, dtype=float))
    if np.any(x <= 0.0):
        raise ValueError("bessel_k_imag requires z > 0")
    shape = a.shape
    af, xf = a.ravel().astype(float), x.ravel().astype(float)
    ls = np.empty(af.shape)
    v = np.empty(af.shape)
    for start in range(0, af.size, _K_CHUNK):
        sl = slice(start, start + _K_CHUNK)
        ls[sl], v[sl] = _bessel_k_imag_scaled(af[sl], xf[sl])
    return ls.reshape(shape), v.reshape(shape)


def bessel_k_imag(u, z):
    """Modified Bessel function K_{iu}(z) for real order u and z > 0.

    Equal to the integral of exp(-z cosh t) cos(u t) over t > 0, evaluated on
    a deformed contour so that the exponentially small values for u > z come
    out without cancellation.  Symmetric in ``u``.  Emits
    :class:`UnderflowWarning` when the result underflows to zero.
    """
    scalar = np.ndim(u) == 0 and np.ndim(z) == 0
    a, x = np.broadcast_arrays(np.abs(np.atleast_1d(np.asarray(u, dtype=float))),
                               np.atleast_1d(np.asarray(z, dtype=float)))
    if np.any(x <= 0.0):
        raise ValueError("bessel_k_imag requires z > 0")
    log_scale, value = bessel_k_imag_scaled(a, x)
    if np.any(log_scale < -740.0):
        warnings.warn("bessel_k_imag underflowed to zero", UnderflowWarning, stacklevel=2)
    with np.errstate(under="ignore"):
        out = value * np.exp(log_scale)
    return _out(out, scalar)


# ---------------------------------------------------------------------------
# Tricomi U and Whittaker W
# ---------------------------------------------------------------------------

_U_CHUNK = 128
_M_SERIES_MAX_Z = 250.0
_M_SERIES_MAX_TERMS = 1500
_M_SERIES_FIRST_Z = 60.0
_M_SERIES_ACCEPT = 1e3


def _u_laplace(a: np.ndarray, b: np.ndarray, z: np.ndarray):
    """Laplace-integral route for U(a, b, z), scaled.

    Returns ``(log_scale, value, loss)`` with U = value * exp(log_scale) and
    ``loss`` the ratio of the integral of |integrand| to |result|.

    The parameter ``a`` is first raised by an integer so that Re a >= 1; the
    integral of exp(-z t) t^(a-1) (1 + t)^(b-a-1) is taken along the ray
    arg t = arg(a), which damps the t^(i Im a) oscillation, and the
    recurrence in ``a`` (stable in the downward direction, where U is the
    minimal solution) brings the result back.
    """
    n_shift = np.maximum(0, np.ceil(1.0 - a.real)).astype(int)
    a1 = a + n_shift
    c = b - a1 - 1.0
    theta = np.clip(np.angle(a1), -0.5 * np.pi + 0.04, 0.5 * np.pi - 0.04)
    rot = np.exp(1j * theta)
    alpha = a1.real

    def log_integrand(s):
        t = np.exp(s) * rot[:, None]
        return (-z[:, None] * t + a1[:, None] * (s + 1j * theta[:, None])
                + c[:, None] * np.log1p(t))

    # coarse scan to locate the bulk of the integrand on the log-radius axis
    centre = np.log(np.maximum(alpha, 1.0) / z)
    coarse = centre[:, None] + np.linspace(-60.0, 25.0, 341)[None, :]
    with np.errstate(over="ignore", under="ignore"):
        lg = log_integrand(coarse)
    mag = lg.real
    peak = mag.max(axis=1)
    keep = mag > peak[:, None] - 42.0
    idx = np.arange(coarse.shape[1])
    first = np.where(keep, idx, coarse.shape[1]).min(axis=1)
    last = np.where(keep, idx, -1).max(axis=1)
    lo = coarse[np.arange(len(a)), np.maximum(first - 1, 0)]
    hi = coarse[np.arange(len(a)), np.minimum(last + 1, coarse.shape[1] - 1)]

    # step from the largest log-derivative over the bulk
    t_c = np.exp(coarse) * rot[:, None]
    with np.errstate(over="ignore", invalid="ignore"):
        dlog = -z[:, None] * t_c + a1[:, None] + c[:, None] * t_c / (1.0 + t_c)
    rate = np.max(np.where(keep, np.abs(dlog), 0.0), axis=1)
    h_need = np.minimum(0.25, 1.5 / np.maximum(rate, 1e-300))
    n_nodes = int(np.ceil(np.max((hi - lo) / h_need))) + 1
    s = lo[:, None] + (hi - lo)[:, None] * np.linspace(0.0, 1.0, n_nodes)[None, :]
    h = (hi - lo) / (n_nodes - 1)
    with np.errstate(under="ignore"):
        lg = log_integrand(s)
        m = lg.real.max(axis=1)
        f = np.exp(lg - m[:, None])
    t = np.exp(s) * rot[:, None]
    j0 = h * f.sum(axis=1)
    f1 = f * (t / (1.0 + t))
    j1 = h * f1.sum(axis=1)
    l1 = h * np.abs(f).sum(axis=1)
    l1b = h * np.abs(f1).sum(axis=1)
    loss = np.maximum(l1 / np.abs(j0), l1b / np.abs(j1))

    # U(a1) and U(a1 + 1) with a common scale exp(m)
    g0 = rgamma_log(a1)
    g1 = rgamma_log(a1 + 1.0)
    u_hi = j1 * np.exp(g1 - g0)
    u_lo = j0
    aa = a1.copy()
    for step in range(int(n_shift.max(initial=0))):
        active = n_shift > step
        u_new = -(b - 2.0 * aa - z) * u_lo - aa * (aa - b + 1.0) * u_hi
        with np.errstate(divide="ignore", invalid="ignore"):
            growth = (np.abs((b - 2.0 * aa - z) * u_lo) + np.abs(aa * (aa - b + 1.0) * u_hi)) / np.abs(u_new)
        growth = np.where(np.isfinite(growth), growth, 1.0)
        loss = np.where(active, loss * np.maximum(growth, 1.0), loss)
        u_hi = np.where(active, u_lo, u_hi)
        u_lo = np.where(active, u_new, u_lo)
        aa = np.where(active, aa - 1.0, aa)
    log_scale = m + g0.real
    value = u_lo * np.exp(1j * g0.imag)
    return log_scale, value, loss


def _m_series(a: np.ndarray, b: np.ndarray, z: np.ndarray):
    """Kummer series M(a, b, z); returns (sum, largest |term|)."""
    term = np.ones(a.shape, dtype=complex)
    total = term.copy()
    biggest = np.ones(a.shape)
    done = np.zeros(a.shape, dtype=bool)
    for n in range(_M_SERIES_MAX_TERMS):
        term = term * (a + n) / ((b + n) * (n + 1.0)) * z
        total = total + np.where(done, 0.0, term)
        biggest = np.maximum(biggest, np.where(done, 0.0, np.abs(term)))
        done |= (np.abs(term) <= 1e-17 * np.abs(total)) & (n + 1.0 > np.abs(a) + z)
        done |= term == 0
        if done.all():
            break
    return total, biggest, done


def _u_series(a: np.ndarray, b: np.ndarray, z: np.ndarray):
    """Connection-formula route: U as a combination of two Kummer M series."""
    log_scale = np.zeros(a.shape)
    value = np.zeros(a.shape, dtype=complex)
    loss = np.full(a.shape, np.inf)
    near_int = np.abs(b - np.round(b.real)) < 1e-3
    ok = ~near_int
    if not np.any(ok):
        return log_scale, value, loss
    a, b, z = a[ok], b[ok], z[ok]
    lc1 = log_gamma(1.0 - b) + rgamma_log(a - b + 1.0)
    lc2 = log_gamma(b - 1.0) + rgamma_log(a) + (1.0 - b) * np.log(z)
    m1, big1, ok1 = _m_series(a, b, z)
    m2, big2, ok2 = _m_series(a - b + 1.0, 2.0 - b, z)
    scale = np.maximum(np.where(np.isfinite(lc1.real), lc1.real, -np.inf),
                       np.where(np.isfinite(lc2.real), lc2.real, -np.inf))
    scale = np.where(np.isfinite(scale), scale, 0.0)
    with np.errstate(under="ignore", invalid="ignore", divide="ignore"):
        e1 = np.where(np.isfinite(lc1.real), np.exp(lc1 - scale), 0.0)
        e2 = np.where(np.isfinite(lc2.real), np.exp(lc2 - scale), 0.0)
        v = e1 * m1 + e2 * m2
        ls = (np.abs(e1) * big1 + np.abs(e2) * big2) / np.abs(v)
    ls = np.where(ok1 & ok2 & np.isfinite(ls), ls, np.inf)
    log_scale[ok], value[ok], loss[ok] = scale, v, ls
    return log_scale, value, loss


def _kummer_u_scaled(a, b, z):
    """Pick the better-conditioned route element by element.

    The Kummer-series combination is cheap and is tried first for moderate
    ``z``; the Laplace integral handles whatever the series cannot do to
    about 1e-12.
    """
    a, b, z = (np.ravel(v) for v in np.broadcast_arrays(
        np.asarray(a, dtype=complex), np.asarray(b, dtype=complex), np.asarray(z, dtype=float)))
    log_scale = np.zeros(a.shape)
    value = np.zeros(a.shape, dtype=complex)
    loss = np.full(a.shape, np.inf)
    for start in range(0, a.size, _U_CHUNK):
        sl = slice(start, start + _U_CHUNK)
        ac, bc, zc = a[sl], b[sl], z[sl]
        ls, v, lo = log_scale[sl], value[sl], loss[sl]
        cand = zc < _M_SERIES_FIRST_Z
        if np.any(cand):
            idx = np.flatnonzero(cand)
            ls[idx], v[idx], lo[idx] = _u_series(ac[idx], bc[idx], zc[idx])
        todo = ~(lo <= _M_SERIES_ACCEPT)
        if np.any(todo):
            idx = np.flatnonzero(todo)
            ls2, v2, lo2 = _u_laplace(ac[idx], bc[idx], zc[idx])
            better = lo2 < lo[idx]
            j = idx[better]
            ls[j], v[j], lo[j] = ls2[better], v2[better], lo2[better]
            retry = idx[(lo[idx] > 1e3) & (zc[idx] < _M_SERIES_MAX_Z) & ~cand[idx]]
            if retry.size:
                ls3, v3, lo3 = _u_series(ac[retry], bc[retry], zc[retry])
                better = lo3 < lo[retry]
                j = retry[better]
                ls[j], v[j], lo[j] = ls3[better], v3[better], lo3[better]
    return log_scale, value, loss


def _check_loss(loss: np.ndarray, acc: FunctionAccuracy, what: str):
    est = 8.0 * EPS * loss
    bad = ~(est <= acc.rel_tol)
    if np.any(bad):
        worst = float(np.nanmax(np.where(np.isfinite(est), est, np.inf)))
        raise ConvergenceError(f"{what}: estimated relative error {worst:.2e} exceeds {acc.rel_tol:.1e}")


def kummer_u(a, b, z, acc: FunctionAccuracy = DEFAULT_ACCURACY):
    """Tricomi confluent hypergeometric function U(a, b, z) for z > 0.

    ``a`` and ``b`` may be complex. Integer ``b`` needs no special treatment
    because the Laplace-integral route has no removable singularities there.
    """
    shape = np.broadcast(np.asarray(a), np.asarray(b), np.asarray(z)).shape
    if np.any(np.asarray(z, dtype=float) <= 0.0):
        raise ValueError("kummer_u requires z > 0")
    log_scale, value, loss = _kummer_u_scaled(a, b, z)
    _check_loss(loss, acc, "kummer_u")
    with np.errstate(under="ignore", over="ignore"):
        out = value * np.exp(log_scale)
    return out.reshape(shape)[()] if shape == () else out.reshape(shape)


def whittaker_w(kappa, mu, z, acc: FunctionAccuracy = DEFAULT_ACCURACY):
    """Whittaker function W_{kappa,mu}(z) = exp(-z/2) z^(mu+1/2) U(mu-kappa+1/2, 1+2mu, z).

    Complex result; for real ``kappa`` and real or purely imaginary ``mu`` the
    imaginary part is rounding noise.
    """
    kappa, mu, z = np.broadcast_arrays(np.asarray(kappa, dtype=float),
                                       np.asarray(mu, dtype=complex), np.asarray(z, dtype=float))
    shape = kappa.shape
    if np.any(z <= 0.0):
        raise ValueError("whittaker_w requires z > 0")
    log_scale, value, loss = _kummer_u_scaled(mu - kappa + 0.5, 1.0 + 2.0 * mu, z)
    _check_loss(loss, acc, "whittaker_w")
    zf, muf = z.ravel(), mu.ravel()
    expo = log_scale - 0.5 * zf + (muf + 0.5) * np.log(zf)
    with np.errstate(under="ignore", over="ignore"):
        out = value * np.exp(expo)
    return out.reshape(shape)[()] if shape == () else out.reshape(shape)


def whittaker_w_scaled(kappa, mu, z, acc: FunctionAccuracy = DEFAULT_ACCURACY):
    """W_{kappa,mu}(z) as ``(log_scale, mantissa, est_rel_error)``.

    W = mantissa * exp(log_scale); callers combine ``log_scale`` with their
    own large or small prefactors before exponentiating.
    """
    kappa, mu, z = np.broadcast_arrays(np.asarray(kappa, dtype=float),
                                       np.asarray(mu, dtype=complex), np.asarray(z, dtype=float))
    shape = kappa.shape
    if np.any(z <= 0.0):
        raise ValueError("whittaker_w requires z > 0")
    log_scale, value, loss = _kummer_u_scaled(mu - kappa + 0.5, 1.0 + 2.0 * mu, z)
    _check_loss(loss, acc, "whittaker_w")
    zf, muf = z.ravel(), mu.ravel()
    expo = log_scale - 0.5 * zf + (muf + 0.5) * np.log(zf)
    value = value * np.exp(1j * expo.imag)
    return expo.real.reshape(shape), value.reshape(shape), (8.0 * EPS * loss).reshape(shape)


def whittaker_m(kappa, mu, z):
    """Whittaker M_{kappa,mu}(z) from the Kummer series (used for consistency checks)."""
    kappa, mu, z = np.broadcast_arrays(np.asarray(kappa, dtype=complex),
                                       np.asarray(mu, dtype=complex), np.asarray(z, dtype=float))
    shape = kappa.shape
    a = (mu - kappa + 0.5).ravel()
    b = (1.0 + 2.0 * mu).ravel()
    zf = z.ravel()
    series, _, done = _m_series(a, b, zf)
    if not done.all():
        raise ConvergenceError("whittaker_m: Kummer series did not converge")
    out = np.exp(-0.5 * zf + (mu.ravel() + 0.5) * np.log(zf)) * series
    return out.reshape(shape)[()] if shape == () else out.reshape(shape)


# ---------------------------------------------------------------------------
# Laguerre polynomials and the incomplete gamma function
# ---------------------------------------------------------------------------


def laguerre(n: int, alpha, z):
    """Generalized Laguerre polynomial L_n^alpha(z) by the three-term recurrence."""
    if n < 0:
        raise ValueError("laguerre degree must be >= 0")
    alpha = np.asarray(alpha, dtype=float)
    z = np.asarray(z, dtype=float)
    prev = np.ones(np.broadcast(alpha, z).shape)
    if n == 0:
        return prev[()]
    cur = 1.0 + alpha - z
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 + alpha - z) * cur - (k + alpha) * prev) / (k + 1)
    return np.asarray(cur)[()]


def _gamma_upper_cf(a: float, z: float) -> float:
    """Continued fraction for Gamma(a, z), modified Lentz; good for z >= a + 1."""
    tiny = 1e-300
    b = z + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        d = tiny if abs(d) < tiny else d
        c = b + an / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    else:
        raise ConvergenceError(f"gamma_upper continued fraction failed at a={a}, z={z}")
    return math.exp(-z + a * math.log(z)) * h


def _gamma_lower_series(a: float, z: float) -> float:
    """Lower incomplete gamma by its power series (a > 0)."""
    term = 1.0 / a
    total = term
    for n in range(1, 10000):
        term *= z / (a + n)
        total += term
        if abs(term) < abs(total) * 1e-17:
            break
    return math.exp(-z + a * math.log(z)) * total


def _gamma_upper_scalar(a: float, z: float) -> float:
    if z <= 0.0:
        raise ValueError("gamma_upper requires z > 0")
    if z >= a + 1.0 or z >= 1.0:
        if z >= a + 1.0:
            return _gamma_upper_cf(a, z)
    if a > 0.0:
        return math.gamma(a) - _gamma_lower_series(a, z)
    # a <= 0 and z < 1: step up to a positive order and recur down
    m = int(math.floor(-a)) + 1
    top = a + m
    if top >= z + 1.0:
        val = math.gamma(top) - _gamma_lower_series(top, z) if top > 0 else _gamma_upper_cf(top, z)
    else:
        val = _gamma_upper_cf(top, z)
    if top == 1.0 and a == math.floor(a):
        val = math.exp(-z)
    for k in range(m):
        s = top - 1.0 - k
        if s == 0.0:
            val = _exp_integral_e1(z)
        else:
            val = (val - math.exp(-z + s * math.log(z))) / s
    return val


def _exp_integral_e1(z: float) -> float:
    """E1(z) = Gamma(0, z)."""
    if z >= 1.0:
        return _gamma_upper_cf(0.0, z)
    total = 0.0
    term = 1.0
    for k in range(1, 200):
        term *= -z / k
        total += term / k
        if abs(term / k) < 1e-18:
            break
    return -0.57721566490153286 - math.log(z) - total


def gamma_upper(a, z):
    """Upper incomplete gamma function Gamma(a, z) for real ``a`` and z > 0.

    Continued fraction when z >= a + 1, otherwise Gamma(a) minus the lower
    series; non-positive ``a`` with small ``z`` goes through the recurrence
    Gamma(a, z) = (Gamma(a + 1, z) - z^a e^-z) / a.
    """
    vec = np.vectorize(_gamma_upper_scalar, otypes=[float])
    out = vec(np.asarray(a, dtype=float), np.asarray(z, dtype=float))
    if not np.all(np.isfinite(out)):
        raise OverflowError("gamma_upper overflowed")
    return out[()]
