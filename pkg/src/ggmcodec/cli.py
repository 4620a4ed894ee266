"""Command-line front end: every experiment as a subcommand with CSV/JSON output.

Exit codes: 0 success, 2 validation, 3 I/O, 4 numeric, 5 corrupt stream.
All commands are deterministic given their inputs (and --seed where one
applies); rerunning writes byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import warnings
import os
import sys

import numpy as np

from . import bounds, fitting, lut, model, simulate
from .errors import CorruptionError, DomainError, NumericError

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_NUMERIC = 4
EXIT_CORRUPTION = 5


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _read_symbols(path: str) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    try:
        return np.array([int(ln) for ln in lines], dtype=np.int64)
    except ValueError as exc:
        raise DomainError(f"symbols file {path!r}: {exc}") from exc


def _write_symbols(path: str, symbols: np.ndarray) -> None:
    _write_text(path, "".join(f"{int(s)}\n" for s in symbols))


def _read_params_csv(path: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().lower()
        if header.replace(" ", "") != "beta,alpha,mu":
            raise DomainError(
                f"params file {path!r} must start with header 'beta,alpha,mu'"
            )
        rows = []
        for ln in fh:
            ln = ln.strip()
            if not ln:
                continue
            parts = ln.split(",")
            if len(parts) != 3:
                raise DomainError(f"params file {path!r}: bad row {ln!r}")
            try:
                rows.append([float(p) for p in parts])
            except ValueError as exc:
                raise DomainError(f"params file {path!r}: {exc}") from exc
    if not rows:
        raise DomainError(f"params file {path!r} has no rows")
    arr = np.array(rows, dtype=np.float64)
    return arr[:, 0], arr[:, 1], arr[:, 2]


def _load_grid(path: str) -> lut.LutGrid:
    with open(path, "rb") as fh:
        return lut.LutGrid.from_bytes(fh.read())


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_mismatch_grid(args) -> int:
    betas = np.linspace(args.beta_range[0], args.beta_range[1], args.beta_count)
    alphas = np.geomspace(args.alpha_range[0], args.alpha_range[1], args.alpha_count)
    if args.beta_range[0] > args.beta_range[1] or args.alpha_range[0] <= 0:
        raise DomainError("invalid grid ranges")
    out = ["beta,alpha,mu,noisy_bits,rounded_bits,delta,clipped"]
    for mu in args.mus:
        for b in betas:
            for a in alphas:
                params = model.GgmParams(mu=float(mu), alpha=float(a), beta=float(b))
                noisy = model.noisy_rate(params, zero_center=False)
                rounded = model.rounded_rate(params, zero_center=False)
                if rounded > 1e-12:
                    raw = (noisy - rounded) / rounded
                elif noisy <= 1e-12:
                    raw = 0.0
                else:
                    raw = float("inf")
                clipped = raw > 1.0
                delta = min(raw, 1.0)
                out.append(
                    f"{params.beta!r},{params.alpha!r},{params.mu!r},"
                    f"{noisy!r},{rounded!r},{delta!r},{int(clipped)}"
                )
    _write_text(args.output, "\n".join(out) + "\n")
    return EXIT_OK


def cmd_bound_curve(args) -> int:
    lo, hi = args.beta_range
    if not model.BETA_MIN <= lo < hi <= model.BETA_MAX:
        raise DomainError(
            f"beta range must satisfy {model.BETA_MIN} <= lo < hi <= {model.BETA_MAX}"
        )
    out = ["beta,alpha_bound"]
    for b in np.linspace(lo, hi, args.knots):
        out.append(f"{float(b)!r},{bounds.compute_bound(float(b))!r}")
    _write_text(args.output, "\n".join(out) + "\n")
    return EXIT_OK


def _source_from_args(args) -> simulate.Source2dSpec:
    name = args.source
    if name.upper() in simulate.SOURCES:
        return simulate.source_by_name(name)
    with open(name, encoding="utf-8") as fh:
        try:
            spec = json.load(fh)
            return simulate.Source2dSpec(
                base_cov=np.array(spec["base_cov"], dtype=np.float64),
                components=tuple((c[0], c[1]) for c in spec["components"]),
            )
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise DomainError(f"bad source spec {name!r}: {exc}") from exc


def cmd_rd_sim(args) -> int:
    spec = _source_from_args(args)
    steps = np.geomspace(args.step_range[0], args.step_range[1], args.steps)
    curves = {
        kind: simulate.run_rd(spec, kind, steps, n=args.samples, seed=args.seed)
        for kind in ("gm", "ggm")
    }
    bd = simulate.bd_rate(curves["gm"], curves["ggm"])
    rows = ["model,rate,mse,quality"]
    for kind, curve in curves.items():
        for p in curve.points:
            rows.append(f"{kind},{p.rate!r},{p.mse!r},{p.quality!r}")
    _write_text(args.output, "\n".join(rows) + "\n")
    summary = {
        "schema_version": SCHEMA_VERSION,
        "source": args.source,
        "samples": args.samples,
        "seed": args.seed,
        "bd_rate_percent": bd,
    }
    _write_text(args.summary, json.dumps(summary, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_build_grid(args) -> int:
    bound_table = bounds.build_bound_table() if args.bounded else None
    grid = lut.build_lut(
        args.beta_samples,
        args.alpha_samples,
        bound_table=bound_table,
        beta_range=tuple(args.beta_range),
        alpha_range=tuple(args.alpha_range),
    )
    with open(args.grid_out, "wb") as fh:
        fh.write(grid.to_bytes())
    return EXIT_OK


def cmd_encode(args) -> int:
    grid = _load_grid(args.grid)
    symbols = _read_symbols(args.symbols)
    pstream = lut.ParamStream.from_params(grid, *_read_params_csv(args.params_file))
    bits = lut.encode(symbols, pstream, grid)
    blob = bits.to_bytes()
    with open(args.out, "wb") as fh:
        fh.write(blob)
    report = {
        "schema_version": SCHEMA_VERSION,
        "symbol_count": int(symbols.size),
        "actual_bits": len(blob) * 8,
        "estimated_bits": lut.stream_estimated_bits(symbols, pstream, grid),
    }
    text = json.dumps(report, sort_keys=True)
    if args.report:
        _write_text(args.report, text + "\n")
    print(text)
    return EXIT_OK


def cmd_decode(args) -> int:
    grid = _load_grid(args.grid)
    pstream = lut.ParamStream.from_params(grid, *_read_params_csv(args.params_file))
    with open(args.bits, "rb") as fh:
        bits = lut.Bitstream.from_bytes(fh.read())
    symbols = lut.decode(bits, pstream, grid)
    _write_symbols(args.out, symbols)
    return EXIT_OK


def cmd_fit(args) -> int:
    try:
        with warnings.catch_warnings():
            # empty files are reported as a validation error below
            warnings.simplefilter("ignore", UserWarning)
            raw = np.loadtxt(args.samples, ndmin=1)
    except ValueError as exc:
        raise DomainError(f"samples file {args.samples!r}: {exc}") from exc
    if raw.size == 0:
        raise DomainError(f"samples file {args.samples!r} is empty")
    if args.mode == "grid":
        betas = np.linspace(args.beta_range[0], args.beta_range[1], args.beta_count)
        alphas = np.geomspace(args.alpha_range[0], args.alpha_range[1], args.alpha_count)
        symbols = np.rint(raw).astype(np.int64)
        if args.grid_csv:
            _write_text(
                args.grid_csv, fitting.grid_avg_bits(symbols, betas, alphas).to_csv()
            )
        result = fitting.discrete_grid_fit(symbols, betas, alphas)
    elif args.mode == "mle":
        result = fitting.mle_fit(raw, mu_mode=args.mu_mode)
    else:  # r2: score the MLE fit against the sample histogram
        fit = fitting.mle_fit(raw, mu_mode=args.mu_mode)
        r2 = fitting.r_squared(raw, fit.params, bins=args.bins)
        result = fitting.FitResult(
            params=fit.params, objective=r2, method=fitting.FitMethod.PDF_R2
        )
    _write_text(args.output, result.to_json() + "\n")
    print(result.to_json())
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser wiring
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ggmcodec",
        description="Generalized Gaussian entropy modeling and table-driven range coding",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mismatch-grid", help="noisy vs rounded rate sweep as CSV")
    p.add_argument("--beta-count", type=int, default=30)
    p.add_argument("--beta-range", type=float, nargs=2, default=[0.5, 4.0])
    p.add_argument("--alpha-count", type=int, default=30)
    p.add_argument("--alpha-range", type=float, nargs=2, default=[0.01, 60.0])
    p.add_argument("--mus", type=float, nargs="+", default=[0.0, 0.5])
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_mismatch_grid)

    p = sub.add_parser("bound-curve", help="scale lower bound per shape as CSV")
    p.add_argument("--knots", type=int, default=64)
    p.add_argument("--beta-range", type=float, nargs=2, default=[0.5, 4.0])
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_bound_curve)

    p = sub.add_parser("rd-sim", help="rate-distortion curves and delta rate")
    p.add_argument("--source", default="X1", help="X1, X2, X3 or a JSON spec file")
    p.add_argument("--samples", type=int, default=simulate.DEFAULT_SAMPLES)
    p.add_argument("--steps", type=int, default=12)
    p.add_argument("--step-range", type=float, nargs=2, default=[0.12, 7.0])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--summary", required=True)
    p.set_defaults(func=cmd_rd_sim)

    p = sub.add_parser("build-grid", help="precompute CDF tables for coding")
    p.add_argument("--beta-samples", type=int, default=20)
    p.add_argument("--alpha-samples", type=int, default=160)
    p.add_argument("--beta-range", type=float, nargs=2, default=list(lut.DEFAULT_BETA_RANGE))
    p.add_argument("--alpha-range", type=float, nargs=2, default=list(lut.DEFAULT_ALPHA_RANGE))
    p.add_argument("--bounded", action="store_true",
                   help="clamp table scales up to the shape-dependent bound")
    p.add_argument("--grid-out", required=True)
    p.set_defaults(func=cmd_build_grid)

    p = sub.add_parser("encode", help="range-code a symbols file")
    p.add_argument("--grid", required=True)
    p.add_argument("--params-file", required=True)
    p.add_argument("--symbols", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="reconstruct a symbols file from a bitstream")
    p.add_argument("--grid", required=True)
    p.add_argument("--params-file", required=True)
    p.add_argument("--bits", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("fit", help="fit model parameters to a samples file")
    p.add_argument("--samples", required=True)
    p.add_argument("--mode", choices=["grid", "mle", "r2"], default="mle")
    p.add_argument("--mu-mode", choices=["fixed_zero", "sample_mean"], default="fixed_zero")
    p.add_argument("--beta-count", type=int, default=15)
    p.add_argument("--beta-range", type=float, nargs=2, default=[0.5, 4.0])
    p.add_argument("--alpha-count", type=int, default=33)
    p.add_argument("--alpha-range", type=float, nargs=2, default=[0.05, 60.0])
    p.add_argument("--bins", type=int, default=None)
    p.add_argument("--grid-csv")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_fit)

    return parser


def main(argv=None) -> int:
    threads = os.environ.get("GGMCODEC_THREADS")
    if threads:
        try:
            import numba

            numba.set_num_threads(max(1, int(threads)))
        except (ValueError, ImportError):
            print(f"ignoring invalid GGMCODEC_THREADS={threads!r}", file=sys.stderr)
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DomainError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except CorruptionError as exc:
        print(f"corrupt stream: {exc}", file=sys.stderr)
        return EXIT_CORRUPTION
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
