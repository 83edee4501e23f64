"""Output bundle: config echo, CSV tables and a YAML summary, written atomically.

Layout of ``<out>/``::

    config.yaml      fully defaulted configuration
    summary.yaml     verdict per acceptance criterion, measured vs threshold
    <table>.csv      one file per time series or probe table

Runtimes are logged, not stored, so that reruns produce identical bytes.
"""

from __future__ import annotations

import csv
import io
import os
import shutil
import tempfile
from pathlib import Path

import yaml

from .config import ExperimentConfig, dump_config
from .presets import PRESETS, PresetResult, Table


def _fmt(v) -> str:
    if isinstance(v, (int,)) and not isinstance(v, bool):
        return str(v)
    return repr(float(v))


def table_to_csv(table: Table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def summary_document(cfg: ExperimentConfig, result: PresetResult | None,
                     error: BaseException | None = None) -> dict:
    preset = PRESETS[cfg.preset]
    doc = {"preset": cfg.preset, "criterion": preset.criterion, "description": preset.summary,
           "seed": cfg.seed}
    if result is not None:
        doc["checks"] = [c.as_dict() for c in result.criteria]
    if error is not None:
        doc["error"] = {"type": type(error).__name__, "message": str(error)}
    doc["passed"] = bool(error is None and result is not None and result.passed)
    return doc


def write_bundle(out, cfg: ExperimentConfig, result: PresetResult | None,
                 error: BaseException | None = None) -> Path:
    """Write into a sibling temp directory, then rename onto ``out``."""
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{out.name}.", dir=out.parent))
    try:
        (tmp / "config.yaml").write_text(dump_config(cfg))
        summary = summary_document(cfg, result, error)
        (tmp / "summary.yaml").write_text(yaml.safe_dump(summary, sort_keys=False))
        if result is not None:
            for name, table in sorted(result.tables.items()):
                (tmp / f"{name}.csv").write_text(table_to_csv(table))
        old = None
        if out.exists():
            old = Path(tempfile.mkdtemp(prefix=f".{out.name}.old.", dir=out.parent))
            os.rename(out, old / "bundle")
        os.rename(tmp, out)
        if old is not None:
            shutil.rmtree(old)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return out
