"""Command-line front end: spectral and Monte Carlo prices for one contract.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from dataclasses import asdict
from typing import Sequence

from .errors import AsianSpectralError
from .kernel import QuadratureSpec
from .mc import MCConfig, estimate_many, parity_residual_detail
from .pricing import MarketParams, call_price, parity_adjustment, put_price, to_dimensionless

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3

CSV_FIELDS = (
    "kind", "method", "spot", "strike", "rate", "vol", "expiry", "value", "quad_error_estimate",
    "mc_mean", "mc_stderr", "difference", "within_3_sigma", "parity_residual",
)

_CONFIG_KEYS = {
    "spot": float, "strike": float, "rate": float, "vol": float, "expiry": float,
    "kind": str, "method": str, "umax": float, "rel_tol": float, "paths": int,
    "steps": int, "seed": int, "output": str, "threads": int, "parity_check": bool,
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="asian-spectral", description="Price continuously averaged arithmetic Asian options.")
    p.add_argument("--spot", type=float, help="spot price S0 (> 0)")
    p.add_argument("--strike", type=float, help="strike K (>= 0)")
    p.add_argument("--rate", type=float, help="risk-free rate r per year")
    p.add_argument("--vol", type=float, help="volatility sigma per sqrt(year) (> 0)")
    p.add_argument("--expiry", type=float, help="time to expiry t in years (> 0)")
    p.add_argument("--kind", choices=("put", "call"), default="call")
    p.add_argument("--method", choices=("spectral", "mc", "both"), default="spectral")
    p.add_argument("--umax", type=float, default=None, help="spectral cutoff (default: automatic)")
    p.add_argument("--rel-tol", dest="rel_tol", type=float, default=1e-10)
    p.add_argument("--paths", type=int, default=200_000, help="Monte Carlo paths (antithetic pairs count twice)")
    p.add_argument("--steps", type=int, default=252)
    p.add_argument("--seed", type=int, default=12345)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--config", default=None, help="key=value file; command-line flags take precedence")
    p.add_argument("--output", choices=("json", "csv", "text"), default="json")
    p.add_argument("--parity-check", dest="parity_check", action="store_true",
                   help="price put and call spectrally and report the parity residual")
    return p


def read_config(path: str) -> dict:
    """Parse a key=value file; '#' starts a comment and keys may use '-' or '_'."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise _UsageError(f"{path}:{lineno}: expected key=value")
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in _CONFIG_KEYS:
                raise _UsageError(f"{path}:{lineno}: unknown key {key!r}")
            conv = _CONFIG_KEYS[key]
            try:
                if conv is bool:
                    out[key] = value.lower() in ("1", "true", "yes", "on")
                else:
                    out[key] = conv(value)
            except ValueError:
                raise _UsageError(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
    return out


def _parse(argv: Sequence[str]) -> argparse.Namespace:
    parser = build_parser()
    first = parser.parse_args(argv)
    if first.config:
        try:
            parser.set_defaults(**read_config(first.config))
        except OSError as exc:
            raise _UsageError(f"cannot read config: {exc}") from None
        first = parser.parse_args(argv)
    missing = [n for n in ("spot", "strike", "rate", "vol", "expiry") if getattr(first, n) is None]
    if missing:
        raise _UsageError("missing required value(s): " + ", ".join(missing))
    if first.kind not in ("put", "call") or first.method not in ("spectral", "mc", "both"):
        raise _UsageError("kind must be put|call and method must be spectral|mc|both")
    return first


def _finite(v):
    return v if v is None or math.isfinite(v) else None


def compute(args: argparse.Namespace) -> dict:
    """Run the requested pricing and return the report dictionary."""
    market = MarketParams(args.spot, args.strike, args.rate, args.vol, args.expiry)
    quad = QuadratureSpec(u_max=args.umax, rel_tol=args.rel_tol)
    dp = to_dimensionless(market)
    report = {
        "inputs": {**asdict(market), "kind": args.kind},
        "dimensionless": asdict(dp),
        "method": args.method,
        "value": None,
        "quad_error_estimate": None,
        "mc_mean": None,
        "mc_stderr": None,
        "parity_residual": None,
        "warnings": [],
    }
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if args.method in ("spectral", "both") or args.parity_check:
            price_fn = put_price if args.kind == "put" else call_price
            sp = price_fn(dp, quad)
            report["value"] = sp.value
            report["quad_error_estimate"] = sp.quad_error_estimate
            report["n_integrand_evals"] = sp.n_integrand_evals
            report["n_discrete_terms"] = sp.n_discrete_terms
            if args.parity_check:
                put = put_price(dp, quad).value
                call = call_price(dp, quad).value
                adj = parity_adjustment(dp)
                report["parity_residual"] = (call - put - adj) / max(abs(call), abs(put), 1e-300)
        if args.method in ("mc", "both"):
            cfg = MCConfig(n_paths=args.paths, n_steps=args.steps, seed=args.seed,
                           n_threads=args.threads)
            est = estimate_many(market, [market.strike], cfg)[args.kind][0]
            report["mc_mean"] = est.mean
            report["mc_stderr"] = est.stderr
            report["mc_paths"] = est.n_paths
            report["mc_seed"] = est.seed
            par = parity_residual_detail(market, cfg)
            report["mc_parity_residual"] = par.residual
            report["mc_parity_stderr"] = par.stderr
            if args.method == "both":
                diff = report["value"] - est.mean
                report["difference"] = diff
                report["within_3_sigma"] = bool(abs(diff) <= 3.0 * est.stderr)
    seen = []
    for w in caught:
        text = f"{w.category.__name__}: {w.message}"
        if text not in seen:
            seen.append(text)
    report["warnings"] = seen
    return report


def _as_text(report: dict) -> str:
    lines = []
    inp = report["inputs"]
    lines.append(f"{inp['kind']} S0={inp['spot']:g} K={inp['strike']:g} r={inp['rate']:g} "
                 f"sigma={inp['vol']:g} t={inp['expiry']:g} method={report['method']}")
    if report["value"] is not None:
        lines.append(f"spectral value     {report['value']:.10f}  (error estimate {report['quad_error_estimate']:.2e})")
    if report["mc_mean"] is not None:
        lines.append(f"monte carlo mean   {report['mc_mean']:.10f}  (stderr {report['mc_stderr']:.2e})")
    if "difference" in report:
        flag = "yes" if report["within_3_sigma"] else "NO"
        lines.append(f"difference         {report['difference']:+.3e}  within 3 sigma: {flag}")
    if report["parity_residual"] is not None:
        lines.append(f"parity residual    {report['parity_residual']:.3e}")
    for w in report["warnings"]:
        lines.append(f"warning: {w}")
    return "\n".join(lines) + "\n"


def _as_csv(report: dict) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    row = {k: report["inputs"].get(k) for k in ("kind", "spot", "strike", "rate", "vol", "expiry")}
    row["method"] = report["method"]
    for k in ("value", "quad_error_estimate", "mc_mean", "mc_stderr", "difference",
              "within_3_sigma", "parity_residual"):
        v = report.get(k)
        row[k] = "" if v is None else (repr(v) if isinstance(v, float) else v)
    writer.writerow(row)
    return buf.getvalue()


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        clean = {k: (_finite(v) if isinstance(v, float) else v) for k, v in report.items()}
        return json.dumps(clean, indent=2) + "\n"
    if fmt == "csv":
        return _as_csv(report)
    return _as_text(report)


def run(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _parse(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        report = compute(args)
    except AsianSpectralError as exc:
        if isinstance(exc, ValueError):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INVALID
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ArithmeticError, OverflowError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    sys.stdout.write(render(report, args.output))
    return EXIT_OK


def main() -> None:
    sys.exit(run())
