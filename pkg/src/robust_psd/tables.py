"""CSV serialization for simulation tables.

Layout: leading ``# key=value`` metadata comment lines, then the fixed header
``k,edof_half,q,method,bias_db,var_sim,var_theory,var_limit,trials``, then one
row per (k, q, method). Floats are written with 17 significant digits so a
parse/serialize round trip is exact.
"""
from __future__ import annotations

import io
import math

from .mc import ExperimentConfig, ExperimentRow

SCHEMA_VERSION = "1"

CSV_HEADER = "k,edof_half,q,method,bias_db,var_sim,var_theory,var_limit,trials"


def experiment_metadata(cfg: ExperimentConfig, kind: str) -> dict[str, str]:
    """Full resolved configuration of a simulation, for output headers."""
    return {
        "command": f"simulate {kind}",
        "k_list": ",".join(str(k) for k in cfg.k_list),
        "q_list": ",".join(format_float(q) for q in cfg.q_list),
        "trials": str(cfg.trials),
        "seed": str(cfg.seed),
        "n_seg": str(cfg.n_seg),
        "overlap": format_float(cfg.overlap),
        "window": cfg.window,
        "bias_methods": ",".join(cfg.bias_methods),
        "use_edof": str(cfg.use_edof).lower(),
        "edof_mode": cfg.edof_mode,
        "sigma": format_float(cfg.sigma),
        "fs": format_float(cfg.fs),
        "bias_db_definition": "10*log10(grand_mean/p_true), interior bins",
    }


def format_float(x: float) -> str:
    """Shortest decimal form that round-trips a float64 exactly."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    return "%.17g" % x


def rows_to_csv(rows: list[ExperimentRow], metadata: dict[str, str] | None = None) -> str:
    out = io.StringIO()
    meta = {"schema_version": SCHEMA_VERSION}
    if metadata:
        meta.update({str(k): str(v) for k, v in metadata.items()})
    for key, value in meta.items():
        if any(ch in key for ch in "=\n") or "\n" in value:
            raise ValueError(f"metadata entry {key!r} not representable")
        out.write(f"# {key}={value}\n")
    out.write(CSV_HEADER + "\n")
    for row in rows:
        out.write(
            ",".join(
                (
                    str(row.k),
                    format_float(row.edof_half),
                    format_float(row.q),
                    row.method,
                    format_float(row.bias_db),
                    format_float(row.var_sim),
                    format_float(row.var_theory),
                    format_float(row.var_limit),
                    str(row.trials),
                )
            )
            + "\n"
        )
    return out.getvalue()


def parse_csv(text: str) -> tuple[list[ExperimentRow], dict[str, str]]:
    """Inverse of rows_to_csv; returns (rows, metadata)."""
    metadata: dict[str, str] = {}
    rows: list[ExperimentRow] = []
    header_seen = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" not in body:
                raise ValueError(f"line {lineno}: metadata comment without key=value")
            key, _, value = body.partition("=")
            metadata[key.strip()] = value.strip()
            continue
        if not header_seen:
            if line != CSV_HEADER:
                raise ValueError(f"line {lineno}: unexpected header {line!r}")
            header_seen = True
            continue
        parts = line.split(",")
        if len(parts) != 9:
            raise ValueError(f"line {lineno}: expected 9 fields, got {len(parts)}")
        rows.append(
            ExperimentRow(
                k=int(parts[0]),
                edof_half=float(parts[1]),
                q=float(parts[2]),
                method=parts[3],
                bias_db=float(parts[4]),
                var_sim=float(parts[5]),
                var_theory=float(parts[6]),
                var_limit=float(parts[7]),
                trials=int(parts[8]),
            )
        )
    if not header_seen:
        raise ValueError("missing header line")
    return rows, metadata
