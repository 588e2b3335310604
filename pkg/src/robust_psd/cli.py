"""Command-line front end.

Subcommands: ``estimate`` (PSD from a sample file), ``theory`` (closed-form
tables), ``simulate`` (seeded Monte Carlo tables). Data goes to stdout,
progress to stderr. Exit codes: 0 success, 2 usage error, 3 input error,
4 numerical/domain error. With ``--server URL`` the computation is delegated
to a running service instance; output is identical either way.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

import httpx
import numpy as np

from . import __version__, mc, spectrum, tables, theory
from . import taper as taper_mod

_EDOF_MODE_CHOICES = {"squared": "squared", "paper-literal": "paper_literal"}


class UsageError(Exception):
    """Bad flag value; carries the offending flag name."""

    def __init__(self, flag: str, message: str):
        super().__init__(f"{flag}: {message}")
        self.flag = flag


class InputError(Exception):
    """Unreadable or unparseable input data."""


def _parse_int_list(flag: str, text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(part) for part in text.split(",") if part.strip() != "")
    except ValueError:
        raise UsageError(flag, f"expected comma-separated integers, got {text!r}")
    if not values:
        raise UsageError(flag, "list is empty")
    return values


def _parse_float_list(flag: str, text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(part) for part in text.split(",") if part.strip() != "")
    except ValueError:
        raise UsageError(flag, f"expected comma-separated numbers, got {text!r}")
    if not values:
        raise UsageError(flag, "list is empty")
    return values


def _require(flag: str, ok: bool, message: str) -> None:
    if not ok:
        raise UsageError(flag, message)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robust-psd",
        description="Quantile-based Welch PSD estimation, theory tables, and "
        "seeded simulations.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common_output(p):
        p.add_argument("--out-format", choices=("csv", "json"), default="csv")
        p.add_argument("--server", default=None, metavar="URL",
                       help="delegate computation to a running service")

    est = sub.add_parser("estimate", help="estimate a PSD from a sample file")
    est.add_argument("--input", required=True, help="path to sample data")
    est.add_argument("--format", choices=("f64le", "csv"), default="f64le",
                     help="input encoding: little-endian float64 or text")
    est.add_argument("--fs", type=float, default=1.0)
    est.add_argument("--nseg", type=int, default=256)
    est.add_argument("--overlap", type=float, default=0.5)
    est.add_argument("--window", choices=taper_mod.TAPER_KINDS, default="hann")
    est.add_argument("--quantile", type=float, default=0.5)
    est.add_argument("--bias-method", choices=theory.BIAS_METHODS,
                     default="harmonic")
    est.add_argument("--mean", action="store_true",
                     help="segment-averaged baseline instead of a quantile")
    est.add_argument("--no-edof", dest="use_edof", action="store_false")
    est.add_argument("--edof-mode", choices=sorted(_EDOF_MODE_CHOICES),
                     default="squared")
    est.add_argument("--detrend", action="store_true",
                     help="remove each segment's mean before tapering")
    est.add_argument("--sided", choices=("one", "two"), default="two")
    add_common_output(est)

    th = sub.add_parser("theory", help="closed-form bias/variance/edof tables")
    th_sub = th.add_subparsers(dest="theory_command", required=True)

    th_bias = th_sub.add_parser("bias", help="bias factors by method")
    th_bias.add_argument("--k-list", required=True)
    th_bias.add_argument("--q-list", required=True)
    add_common_output(th_bias)

    th_var = th_sub.add_parser("variance", help="variance and limiting variance")
    th_var.add_argument("--k-list", required=True)
    th_var.add_argument("--q-list", required=True)
    add_common_output(th_var)

    th_edof = th_sub.add_parser("edof", help="equivalent degrees of freedom")
    th_edof.add_argument("--window", choices=taper_mod.TAPER_KINDS,
                         default="hann")
    th_edof.add_argument("--overlap", type=float, default=0.5)
    th_edof.add_argument("--k", type=int, required=True)
    th_edof.add_argument("--nseg", type=int, default=256)
    th_edof.add_argument("--mode", choices=sorted(_EDOF_MODE_CHOICES),
                         default="squared")
    add_common_output(th_edof)

    th_opt = th_sub.add_parser("optimum", help="variance-minimizing quantile")
    th_opt.add_argument("--k", type=int, required=True)
    th_opt.add_argument("--q-step", type=float, default=0.01)
    add_common_output(th_opt)

    sim = sub.add_parser("simulate", help="seeded Monte Carlo experiments")
    sim_sub = sim.add_subparsers(dest="simulate_command", required=True)
    for kind in ("bias", "variance"):
        p = sim_sub.add_parser(kind)
        p.add_argument("--k-min", type=int, default=None)
        p.add_argument("--k-max", type=int, default=None)
        p.add_argument("--k-list", default=None,
                       help="explicit segment counts (overrides --k-min/--k-max)")
        p.add_argument("--q-list", required=True)
        p.add_argument("--trials", type=int, default=10_000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--nseg", type=int, default=256)
        p.add_argument("--overlap", type=float, default=0.5)
        p.add_argument("--window", choices=taper_mod.TAPER_KINDS,
                       default="hann")
        p.add_argument("--bias-methods", default=None,
                       help="comma-separated subset of "
                       f"{{{','.join(mc.EXPERIMENT_METHODS)}}}")
        p.add_argument("--no-edof", dest="use_edof", action="store_false")
        p.add_argument("--edof-mode", choices=sorted(_EDOF_MODE_CHOICES),
                       default="squared")
        p.add_argument("--sigma", type=float, default=1.0)
        p.add_argument("--fs", type=float, default=1.0)
        p.add_argument("--threads", type=int, default=None,
                       help="worker processes (default: ROBUST_PSD_THREADS)")
        add_common_output(p)

    return parser


# ---------------------------------------------------------------- validation


def _validate_common_signal_args(args) -> None:
    _require("--fs", args.fs > 0 and math.isfinite(args.fs), "must be positive")
    _require("--nseg", args.nseg >= 2, "must be at least 2")
    _require("--overlap", 0.0 <= args.overlap < 1.0, "must be in [0, 1)")


def _validate_estimate(args) -> None:
    _validate_common_signal_args(args)
    _require("--quantile", 0.0 <= args.quantile <= 1.0, "must be in [0, 1]")


def _validate_simulate(args) -> tuple[int, ...]:
    _validate_common_signal_args(args)
    _require("--trials", args.trials >= 1, "must be at least 1")
    _require("--seed", args.seed >= 0, "must be non-negative")
    _require("--sigma", args.sigma > 0 and math.isfinite(args.sigma),
             "must be positive")
    if args.threads is not None:
        _require("--threads", args.threads >= 0, "must be non-negative")
    if args.k_list is not None:
        k_list = _parse_int_list("--k-list", args.k_list)
    else:
        _require("--k-min", args.k_min is not None,
                 "required unless --k-list is given")
        _require("--k-max", args.k_max is not None,
                 "required unless --k-list is given")
        _require("--k-min", args.k_min >= 1, "must be at least 1")
        _require("--k-max", args.k_max >= args.k_min,
                 "must be at least --k-min")
        k_list = tuple(range(args.k_min, args.k_max + 1))
    _require("--k-list", all(k >= 1 for k in k_list),
             "segment counts must be at least 1")
    q_list = _parse_float_list("--q-list", args.q_list)
    _require("--q-list", all(0.0 <= q <= 1.0 for q in q_list),
             "quantiles must be in [0, 1]")
    args.k_values = k_list
    args.q_values = q_list
    return k_list


# ---------------------------------------------------------------- rendering


def _emit_metadata(out, meta: dict[str, str]) -> None:
    for key, value in meta.items():
        out.write(f"# {key}={value}\n")


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    if isinstance(x, float):
        return tables.format_float(x)
    return str(x)


def _print_table_csv(meta: dict[str, str], header: list[str],
                     rows: list[list], out) -> None:
    _emit_metadata(out, meta)
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(_fmt(v) for v in row) + "\n")


def _print_json(payload: dict, out) -> None:
    json.dump(payload, out, indent=2, allow_nan=False)
    out.write("\n")


def _none_if_nan(x: float) -> float | None:
    return None if x is None or math.isnan(x) else x


# ---------------------------------------------------------------- estimate


def _load_samples(path: str, fmt: str) -> np.ndarray:
    if fmt == "f64le":
        try:
            data = np.fromfile(path, dtype="<f8")
        except OSError as exc:
            raise InputError(f"{path}: {exc.strerror or exc}") from exc
        if data.size < 2:
            raise InputError(f"{path}: expected at least 2 float64 samples, "
                             f"got {data.size}")
        return data.astype(float)
    values: list[float] = []
    try:
        handle = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from exc
    with handle:
        for lineno, line in enumerate(handle, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            for token in body.replace(",", " ").split():
                try:
                    values.append(float(token))
                except ValueError:
                    raise InputError(
                        f"{path}:{lineno}: could not parse {token!r} as a number"
                    ) from None
    if len(values) < 2:
        raise InputError(f"{path}: expected at least 2 samples, got {len(values)}")
    return np.asarray(values, dtype=float)


def _estimate_payload_local(args, samples: np.ndarray) -> dict:
    est = spectrum.estimate_psd(
        samples,
        args.fs,
        n_seg=args.nseg,
        overlap=args.overlap,
        window=args.window,
        quantile=args.quantile,
        bias_method=args.bias_method,
        use_edof=args.use_edof,
        edof_mode=_EDOF_MODE_CHOICES[args.edof_mode],
        detrend=args.detrend,
        mean=args.mean,
    )
    if args.sided == "one":
        est = spectrum.one_sided(est)
    return {
        "schema_version": tables.SCHEMA_VERSION,
        "frequency": est.freqs.tolist(),
        "psd": est.psd.tolist(),
        "fs": est.fs,
        "method": est.method,
        "k": est.k,
        "edof": est.edof,
        "q": est.q,
        "bias_method": est.bias_method,
        "bias_factor": est.bias_factor,
        "effective_k": est.effective_k,
        "sided": args.sided,
    }


def _estimate_payload_remote(args, samples: np.ndarray) -> dict:
    body = {
        "samples": samples.tolist(),
        "fs": args.fs,
        "n_seg": args.nseg,
        "overlap": args.overlap,
        "window": args.window,
        "quantile": args.quantile,
        "bias_method": args.bias_method,
        "mean": args.mean,
        "use_edof": args.use_edof,
        "edof_mode": _EDOF_MODE_CHOICES[args.edof_mode],
        "detrend": args.detrend,
        "sided": args.sided,
    }
    return _post(args.server, "/v1/estimate", body)


def cmd_estimate(args, out) -> int:
    _validate_estimate(args)
    samples = _load_samples(args.input, args.format)
    payload = (_estimate_payload_remote if args.server else
               _estimate_payload_local)(args, samples)
    if args.out_format == "json":
        payload["input"] = args.input
        _print_json(payload, out)
        return 0
    meta = {
        "schema_version": payload["schema_version"],
        "command": "estimate",
        "input": args.input,
        "format": args.format,
        "fs": _fmt(float(payload["fs"])),
        "nseg": str(args.nseg),
        "overlap": _fmt(float(args.overlap)),
        "window": args.window,
        "method": payload["method"],
        "k": str(payload["k"]),
        "edof": _fmt(float(payload["edof"])),
        "sided": payload["sided"],
    }
    if payload["method"] == "quantile":
        meta["quantile"] = _fmt(float(payload["q"]))
        meta["bias_method"] = payload["bias_method"]
        meta["bias_factor"] = _fmt(float(payload["bias_factor"]))
        meta["effective_k"] = _fmt(float(payload["effective_k"]))
    rows = [[f, p] for f, p in zip(payload["frequency"], payload["psd"])]
    _print_table_csv(meta, ["frequency", "psd"], rows, out)
    return 0


# ---------------------------------------------------------------- theory


def _theory_grid(args) -> tuple[tuple[int, ...], tuple[float, ...]]:
    k_list = _parse_int_list("--k-list", args.k_list)
    _require("--k-list", all(k >= 1 for k in k_list), "counts must be >= 1")
    q_list = _parse_float_list("--q-list", args.q_list)
    _require("--q-list", all(0.0 <= q <= 1.0 for q in q_list),
             "quantiles must be in [0, 1]")
    return k_list, q_list


def _factor_or_none(method: str, k: int, q: float) -> float | None:
    try:
        return theory.bias_factor(method, k, q)
    except ValueError:
        return None


def cmd_theory_bias(args, out) -> int:
    k_list, q_list = _theory_grid(args)
    if args.server:
        payload = _post(args.server, "/v1/theory/bias",
                        {"k_list": list(k_list), "q_list": list(q_list)})
        rows = payload["rows"]
    else:
        rows = [
            {
                "k": k,
                "q": q,
                "none": 1.0,
                "allen": _factor_or_none("allen", k, q),
                "harmonic": theory.bias_factor("harmonic", k, q),
                "digamma": _factor_or_none("digamma", k, q),
                "limit": _factor_or_none("limit", k, q),
            }
            for k in k_list
            for q in q_list
        ]
    meta = {
        "schema_version": tables.SCHEMA_VERSION,
        "command": "theory bias",
        "k_list": ",".join(str(k) for k in k_list),
        "q_list": ",".join(_fmt(q) for q in q_list),
    }
    if args.out_format == "json":
        _print_json({"schema_version": meta["schema_version"],
                     "metadata": meta, "rows": rows}, out)
        return 0
    header = ["k", "q", "none", "allen", "harmonic", "digamma", "limit"]
    body = [[r[name] for name in header] for r in rows]
    _print_table_csv(meta, header, body, out)
    return 0


def cmd_theory_variance(args, out) -> int:
    k_list, q_list = _theory_grid(args)
    if args.server:
        payload = _post(args.server, "/v1/theory/variance",
                        {"k_list": list(k_list), "q_list": list(q_list)})
        rows = payload["rows"]
    else:
        rows = []
        for k in k_list:
            for q in q_list:
                try:
                    var_theory = theory.variance_digamma(k, q, 1.0)
                except ValueError:
                    var_theory = None
                try:
                    var_limit = theory.variance_limit(k, q, 1.0)
                except ValueError:
                    var_limit = None
                rows.append({"k": k, "q": q, "var_theory": var_theory,
                             "var_limit": var_limit})
    meta = {
        "schema_version": tables.SCHEMA_VERSION,
        "command": "theory variance",
        "k_list": ",".join(str(k) for k in k_list),
        "q_list": ",".join(_fmt(q) for q in q_list),
        "p_true": "1",
    }
    if args.out_format == "json":
        _print_json({"schema_version": meta["schema_version"],
                     "metadata": meta, "rows": rows}, out)
        return 0
    header = ["k", "q", "var_theory", "var_limit"]
    body = [[r[name] for name in header] for r in rows]
    _print_table_csv(meta, header, body, out)
    return 0


def cmd_theory_edof(args, out) -> int:
    _require("--k", args.k >= 1, "must be at least 1")
    _require("--nseg", args.nseg >= 2, "must be at least 2")
    _require("--overlap", 0.0 <= args.overlap < 1.0, "must be in [0, 1)")
    if args.server:
        payload = _post(args.server, "/v1/theory/edof", {
            "window": args.window, "overlap": args.overlap, "k": args.k,
            "n_seg": args.nseg, "mode": _EDOF_MODE_CHOICES[args.mode],
        })
        nu, ratio = payload["edof"], payload["ratio"]
    else:
        tp = taper_mod.normalize_energy(taper_mod.make_taper(args.window,
                                                             args.nseg))
        n_overlap = int(np.floor(args.overlap * args.nseg + 0.5))
        nu = taper_mod.edof(tp, args.k, n_overlap,
                            mode=_EDOF_MODE_CHOICES[args.mode])
        ratio = nu / (2.0 * args.k)
    meta = {
        "schema_version": tables.SCHEMA_VERSION,
        "command": "theory edof",
    }
    row = {"window": args.window, "overlap": args.overlap, "k": args.k,
           "n_seg": args.nseg, "mode": args.mode, "edof": nu, "ratio": ratio}
    if args.out_format == "json":
        _print_json({"schema_version": meta["schema_version"],
                     "metadata": meta, "rows": [row]}, out)
        return 0
    header = ["window", "overlap", "k", "n_seg", "mode", "edof", "ratio"]
    _print_table_csv(meta, header, [[row[name] for name in header]], out)
    return 0


def cmd_theory_optimum(args, out) -> int:
    _require("--k", args.k >= 2, "must be at least 2")
    _require("--q-step", 0.0 < args.q_step < 0.5, "must be in (0, 0.5)")
    if args.server:
        payload = _post(args.server, "/v1/theory/optimum",
                        {"k": args.k, "q_step": args.q_step})
        q_opt = payload["q_opt"]
        rows = [(r["q"], r["var"]) for r in payload["rows"]]
    else:
        grid = np.round(np.arange(args.q_step, 1.0, args.q_step), 10)
        q_opt, rows = theory.scan_variance_optimum(args.k, grid)
    meta = {
        "schema_version": tables.SCHEMA_VERSION,
        "command": "theory optimum",
        "k": str(args.k),
        "q_step": _fmt(float(args.q_step)),
        "q_opt": _fmt(float(q_opt)),
    }
    if args.out_format == "json":
        _print_json({"schema_version": meta["schema_version"],
                     "metadata": meta,
                     "rows": [{"q": q, "var": v} for q, v in rows]}, out)
        return 0
    _print_table_csv(meta, ["q", "var"], [[q, v] for q, v in rows], out)
    return 0


# ---------------------------------------------------------------- simulate


def _simulate_config(args) -> mc.ExperimentConfig:
    methods = ("digamma",) if args.simulate_command == "variance" else ("harmonic",)
    if args.bias_methods is not None:
        parts = tuple(p.strip() for p in args.bias_methods.split(",")
                      if p.strip())
        _require("--bias-methods", len(parts) > 0, "list is empty")
        for part in parts:
            _require("--bias-methods", part in mc.EXPERIMENT_METHODS,
                     f"unknown method {part!r}")
        methods = parts
    return mc.ExperimentConfig(
        k_list=args.k_values,
        q_list=args.q_values,
        trials=args.trials,
        seed=args.seed,
        n_seg=args.nseg,
        overlap=args.overlap,
        window=args.window,
        bias_methods=methods,
        use_edof=args.use_edof,
        edof_mode=_EDOF_MODE_CHOICES[args.edof_mode],
        sigma=args.sigma,
        fs=args.fs,
    )


def cmd_simulate(args, out) -> int:
    _validate_simulate(args)
    kind = args.simulate_command
    cfg = _simulate_config(args)
    if args.server:
        body = {
            "kind": kind,
            "k_list": list(cfg.k_list),
            "q_list": list(cfg.q_list),
            "trials": cfg.trials,
            "seed": cfg.seed,
            "n_seg": cfg.n_seg,
            "overlap": cfg.overlap,
            "window": cfg.window,
            "bias_methods": list(cfg.bias_methods),
            "use_edof": cfg.use_edof,
            "edof_mode": cfg.edof_mode,
            "sigma": cfg.sigma,
            "fs": cfg.fs,
            "threads": args.threads,
        }
        payload = _post(args.server, "/v1/simulate", body)
        rows = [
            mc.ExperimentRow(
                k=r["k"], edof_half=r["edof_half"], q=r["q"],
                method=r["method"], bias_db=r["bias_db"],
                var_sim=r["var_sim"],
                var_theory=(math.nan if r["var_theory"] is None
                            else r["var_theory"]),
                var_limit=(math.nan if r["var_limit"] is None
                           else r["var_limit"]),
                trials=r["trials"],
            )
            for r in payload["rows"]
        ]
        meta = dict(payload["metadata"])
    else:
        def progress(done: int, total: int) -> None:
            print(f"progress: cell {done}/{total}", file=sys.stderr, flush=True)

        runner = (mc.run_bias_experiment if kind == "bias"
                  else mc.run_variance_experiment)
        rows = runner(cfg, threads=args.threads, progress=progress)
        meta = tables.experiment_metadata(cfg, kind)
    if args.out_format == "json":
        payload = {
            "schema_version": tables.SCHEMA_VERSION,
            "metadata": meta,
            "rows": [
                {
                    "k": r.k, "edof_half": r.edof_half, "q": r.q,
                    "method": r.method, "bias_db": r.bias_db,
                    "var_sim": r.var_sim,
                    "var_theory": _none_if_nan(r.var_theory),
                    "var_limit": _none_if_nan(r.var_limit),
                    "trials": r.trials,
                }
                for r in rows
            ],
        }
        _print_json(payload, out)
        return 0
    out.write(tables.rows_to_csv(rows, meta))
    return 0


# ---------------------------------------------------------------- plumbing


def _post(server: str, path: str, body: dict) -> dict:
    url = server.rstrip("/") + path
    response = httpx.post(url, json=body,
                          timeout=httpx.Timeout(30.0, read=None))
    response.raise_for_status()
    return response.json()


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out = sys.stdout
    try:
        if args.command == "estimate":
            return cmd_estimate(args, out)
        if args.command == "theory":
            handler = {
                "bias": cmd_theory_bias,
                "variance": cmd_theory_variance,
                "edof": cmd_theory_edof,
                "optimum": cmd_theory_optimum,
            }[args.theory_command]
            return handler(args, out)
        if args.command == "simulate":
            return cmd_simulate(args, out)
        parser.error(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except httpx.HTTPStatusError as exc:
        detail = ""
        try:
            detail = exc.response.json().get("detail", "")
        except Exception:
            detail = exc.response.text[:200]
        print(f"error: server returned {exc.response.status_code}: {detail}",
              file=sys.stderr)
        return 4
    except httpx.RequestError as exc:
        print(f"error: cannot reach server: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
