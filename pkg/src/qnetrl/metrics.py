"""CSV metrics emission and parsing.

One row per training episode, preceded by `#`-prefixed metadata lines
(config hash, seed, package version) so a metrics file is self-describing.
Floats are rendered at 9 significant digits; reruns with the same config
and seed produce byte-identical files.
"""

from __future__ import annotations

import math

from . import __version__
from .config import RunConfig, config_hash
from .errors import IoError, ParseError
from .marl import EpisodeRow, MetricsTrace

HEADER = "episode,mean_global_cost,eval_cost,epsilon,critic_loss,actor_objective"
FLOAT_FIELDS = HEADER.split(",")[1:]


def _fmt(x: float) -> str:
    # 9 significant digits, enough to round-trip the plotting-relevant range
    return f"{float(x):.9g}"


def render_metrics(trace: MetricsTrace, config: RunConfig, seed: int) -> str:
    """Render a trace to the metrics CSV dialect (returned as one string)."""
    lines = [
        f"# config_hash={config_hash(config)}",
        f"# seed={seed}",
        f"# version={__version__}",
        HEADER,
    ]
    last = -1
    for row in trace.rows:
        if row.episode <= last:
            raise ValueError(f"episode numbers must increase: {row.episode} after {last}")
        last = row.episode
        fields = [str(row.episode)] + [_fmt(getattr(row, name)) for name in FLOAT_FIELDS]
        for name in FLOAT_FIELDS:
            if not math.isfinite(getattr(row, name)):
                raise ValueError(f"non-finite {name} in episode {row.episode}")
        lines.append(",".join(fields))
    return "\n".join(lines) + "\n"


def emit_metrics(trace: MetricsTrace, path, config: RunConfig, seed: int) -> None:
    text = render_metrics(trace, config, seed)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoError(f"cannot write metrics to {path}: {exc}") from exc


def parse_metrics(text: str):
    """Inverse of render_metrics: returns (metadata dict, MetricsTrace)."""
    meta = {}
    trace = MetricsTrace()
    saw_header = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if saw_header:
                raise ParseError(f"line {lineno}: metadata after header")
            body = line.lstrip("#").strip()
            if "=" not in body:
                raise ParseError(f"line {lineno}: metadata needs key=value")
            key, value = body.split("=", 1)
            meta[key.strip()] = value.strip()
            continue
        if not saw_header:
            if line != HEADER:
                raise ParseError(f"line {lineno}: expected header {HEADER!r}")
            saw_header = True
            continue
        parts = line.split(",")
        if len(parts) != 6:
            raise ParseError(f"line {lineno}: expected 6 fields, got {len(parts)}")
        try:
            row = EpisodeRow(
                episode=int(parts[0]),
                mean_global_cost=float(parts[1]),
                eval_cost=float(parts[2]),
                epsilon=float(parts[3]),
                critic_loss=float(parts[4]),
                actor_objective=float(parts[5]),
            )
        except ValueError as exc:
            raise ParseError(f"line {lineno}: {exc}") from exc
        trace.rows.append(row)
    if not saw_header:
        raise ParseError("no header line found")
    return meta, trace


def read_metrics(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read metrics from {path}: {exc}") from exc
    return parse_metrics(text)
