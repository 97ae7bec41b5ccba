"""Inverse Laplace transform of q^(-nu/2) K_rho(sqrt(8q) e^{x/2}).

``inv_laplace_bessel`` is the closed Whittaker form used in production;
``bromwich_oracle`` evaluates the defining line integral numerically and is
kept independent of the Whittaker machinery so that it can validate it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConvergenceError, TailBoundError
from .specfun import DEFAULT_ACCURACY, FunctionAccuracy, whittaker_w


@dataclass(frozen=True)
class BromwichSpec:
    """Line Re q = eps, |Im q| <= t_span, starting with n_nodes trapezoid nodes.

    ``t_span=None`` picks the span from the decay of the integrand.
    """

    eps: float = 1.0
    t_span: float | None = None
    n_nodes: int = 2000
    rel_tol: float = 1e-10
    max_doublings: int = 6

    def __post_init__(self):
        if not self.eps > 0.0:
            raise ValueError(f"eps must be > 0, got {self.eps}")
        if self.t_span is not None and not self.t_span > 0.0:
            raise ValueError(f"t_span must be > 0, got {self.t_span}")
        if self.n_nodes < 200:
            raise ValueError(f"n_nodes must be >= 200, got {self.n_nodes}")
        if not 0.0 < self.rel_tol <= 1e-3:
            raise ValueError(f"rel_tol must lie in (0, 1e-3], got {self.rel_tol}")


@dataclass(frozen=True)
class LineIntegral:
    value: complex
    error: float
    tail: float
    n_nodes: int


def inv_laplace_bessel(nu: float, rho: complex, x: float, xi: float,
                       acc: FunctionAccuracy = DEFAULT_ACCURACY) -> complex:
    """Closed form (8 e^x)^(-1/2) xi^((nu-1)/2) e^(-e^x/xi) W_{(1-nu)/2, rho/2}(2 e^x / xi)."""
    if not xi > 0.0:
        raise ValueError(f"xi must be > 0, got {xi}")
    ex = math.exp(x)
    z = 2.0 * ex / xi
    w = whittaker_w((1.0 - nu) / 2.0, complex(rho) / 2.0, z, acc)
    return complex(w * math.exp(0.5 * (nu - 1.0) * math.log(xi) - ex / xi) / math.sqrt(8.0 * ex))


def besselk_complex(rho: complex, w: np.ndarray, h: float = 0.04) -> np.ndarray:
    """K_rho(w) for |arg w| <= pi/3 from the integral of exp(-w cosh s) cosh(rho s) over s > 0.

    Trapezoid rule in s.  The integrand is analytic in the strip
    |Im s| < pi/2 - |arg w|, so the rule converges like
    exp(-2 pi (pi/2 - |arg w|) / h); on the Bromwich line |arg w| <= pi/4.
    """
    w = np.asarray(w, dtype=complex)
    if np.any(w.real <= 0.0) or np.any(np.abs(np.angle(w)) > math.pi / 3.0):
        raise ValueError("besselk_complex requires |arg w| <= pi/3")
    rho = complex(rho)
    s_max = 1.0
    while np.min(w.real) * math.cosh(s_max) - abs(rho.real) * s_max < 50.0:
        s_max += 0.5
    s = np.arange(0.0, s_max + h, h)
    weights = np.full(s.shape, h)
    weights[0] = 0.5 * h
    out = np.empty(w.shape, dtype=complex)
    flat_w, flat_out = w.ravel(), out.ravel()
    cs = np.cosh(s)
    ch = np.cosh(rho * s) * weights
    for start in range(0, flat_w.size, 4096):
        blk = flat_w[start:start + 4096]
        with np.errstate(under="ignore"):
            flat_out[start:start + 4096] = np.exp(-blk[:, None] * cs[None, :]) @ ch
    return flat_out.reshape(w.shape)


def _end_derivatives(fun: Callable[[np.ndarray], np.ndarray], t0: float,
                     d: float = 0.02) -> tuple[complex, complex]:
    """First and third derivative of ``fun`` at ``t0`` by central differences."""
    v = fun(t0 + d * np.arange(-2, 3))
    first = (v[0] - 8 * v[1] + 8 * v[3] - v[4]) / (12 * d)
    third = (-v[0] + 2 * v[1] - 2 * v[3] + v[4]) / (2 * d**3)
    return complex(first), complex(third)


def _ibp_tail(g: Callable[[np.ndarray], np.ndarray], xi: float, T: float, terms: int = 3) -> complex:
    """Integral of exp(i xi t) g(t) over t > T by repeated integration by parts."""
    d = max(1e-3 * T, 1e-3)  # g itself carries no fast oscillation
    pts = T + d * np.arange(-3, 4)
    vals = g(pts)
    derivs = [vals[3],
              (vals[4] - vals[2]) / (2 * d),
              (vals[4] - 2 * vals[3] + vals[2]) / d**2,
              (vals[5] - 2 * vals[4] + 2 * vals[2] - vals[1]) / (2 * d**3)]
    ia = 1j * xi
    acc = 0.0 + 0.0j
    for k in range(min(terms, 3) + 1):
        acc += (-1) ** k * derivs[k] / ia ** (k + 1)
    return complex(-np.exp(ia * T) * acc)


def line_integral(
    g: Callable[[np.ndarray], np.ndarray],
    xi: float,
    eps: float,
    t_span: float,
    n_nodes: int,
    *,
    conjugate_symmetric: bool,
    rel_tol: float = 1e-10,
    max_doublings: int = 6,
    tail_terms: int = 0,
) -> LineIntegral:
    """(1/2 pi i) times the integral of exp(xi q) G(q) along Re q = eps.

    ``g(t)`` must return G(eps + i t).  With ``conjugate_symmetric`` only
    t >= 0 is sampled.  The step is halved until two trapezoid sums agree
    to ``rel_tol``.  ``tail_terms`` > 0 adds an integration-by-parts estimate
    of the part beyond ``t_span`` (needed for slowly decaying G).
    """
    lo = 0.0 if conjugate_symmetric else -t_span
    n = n_nodes
    prev = None
    for _ in range(max_doublings + 1):
        t = np.linspace(lo, t_span, n + 1)
        h = t[1] - t[0]
        f = np.exp(1j * xi * t) * g(t)
        wts = np.full(t.shape, h)
        wts[0] = wts[-1] = 0.5 * h
        if tail_terms:
            # Euler-Maclaurin end correction at t_span; the sampled ends do not vanish
            d = 0.05 / max(xi, 1.0)
            fp, fppp = _end_derivatives(lambda tt: np.exp(1j * xi * tt) * g(tt), t_span, d)
            end_fix = -h * h / 12.0 * fp + h**4 / 720.0 * fppp
            if not conjugate_symmetric:
                gp, gppp = _end_derivatives(lambda tt: np.exp(1j * xi * tt) * g(tt), -t_span, d)
                end_fix += h * h / 12.0 * gp - h**4 / 720.0 * gppp
        else:
            end_fix = 0.0
        if conjugate_symmetric:
            body = (float(np.dot(wts, f.real)) + float(np.real(end_fix))) / math.pi
        else:
            body = (complex(np.dot(wts, f)) + end_fix) / (2.0 * math.pi)
        if prev is not None and abs(body - prev) <= rel_tol * abs(body):
            break
        prev = body
        n *= 2
    else:
        raise ConvergenceError(f"Bromwich trapezoid not stable after {max_doublings} refinements")
    scale = math.exp(xi * eps)
    tail = 0.0
    if tail_terms:
        tail_c = _ibp_tail(g, xi, t_span, tail_terms)
        if conjugate_symmetric:
            tail = tail_c.real / math.pi
        else:
            tail_m = _ibp_tail(lambda s: g(-s), -xi, t_span, tail_terms)
            tail = (tail_c + tail_m) / (2.0 * math.pi)
    value = (body + tail) * scale
    # last 10% of the interval, as a truncation diagnostic
    cut = t >= 0.9 * t_span
    last = float(np.sum(wts[cut] * np.abs(f[cut]))) / math.pi * scale
    err = abs(body - prev) * scale if prev is not None else math.inf
    return LineIntegral(value, err, last, t.size)


def _auto_span(x: float, nu: float, rho: complex, rel_tol: float) -> float:
    """Imaginary half-length where |q^(-nu/2) K_rho(sqrt(8q) e^{x/2})| has decayed enough.

    Along the line, Re sqrt(8 q) e^{x/2} grows like 2 sqrt(t) e^{x/2}.
    """
    c = 2.0 * math.exp(0.5 * x)
    target = math.log(1.0 / rel_tol) + 16.0 + max(0.0, -0.5 * nu) * 4.0 + 2.0 * abs(complex(rho))
    return max(50.0, (target / c) ** 2)


def bromwich_oracle(nu: float, rho: complex, x: float, xi: float,
                    spec: BromwichSpec = BromwichSpec()) -> LineIntegral:
    """Numerical Bromwich integral of exp(xi q) q^(-nu/2) K_rho(sqrt(8 q) e^{x/2})."""
    if not xi > 0.0:
        raise ValueError(f"xi must be > 0, got {xi}")
    rho = complex(rho)
    eps = spec.eps
    span = spec.t_span if spec.t_span is not None else _auto_span(x, nu, rho, spec.rel_tol)
    c = math.sqrt(8.0) * math.exp(0.5 * x)
    sym = rho.real == 0.0 or rho.imag == 0.0

    def g(t):
        q = eps + 1j * np.asarray(t, dtype=float)
        return q ** (-0.5 * nu) * besselk_complex(rho, c * np.sqrt(q))

    n0 = max(spec.n_nodes, int(math.ceil(span / (eps / 4.0))))
    res = line_integral(g, xi, eps, span, n0, conjugate_symmetric=sym,
                        rel_tol=spec.rel_tol, max_doublings=spec.max_doublings)
    if res.tail > 10.0 * spec.rel_tol * max(abs(res.value), 1e-300):
        raise TailBoundError(
            f"Bromwich truncation: last 10% of the line carries {res.tail:.2e} (value {res.value:.3e})"
        )
    return res


def elementary_pair_check(xi: float = 1.0, spec: BromwichSpec = BromwichSpec(t_span=2000.0)) -> float:
    """Inverse transform of 1/q through the same line engine; the exact answer is 1."""
    eps = spec.eps
    res = line_integral(lambda t: 1.0 / (eps + 1j * np.asarray(t, dtype=float)), xi, eps,
                        spec.t_span or 2000.0, max(spec.n_nodes, int(4 * (spec.t_span or 2000.0) / eps)),
                        conjugate_symmetric=True, rel_tol=spec.rel_tol,
                        max_doublings=spec.max_doublings, tail_terms=3)
    return float(np.real(res.value))
