"""CSV and JSON files for spectra, traces, tables and run manifests.

Floats are written with ``repr`` so every file reads back bit-identically.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import os
from collections.abc import Sequence
from pathlib import Path
from typing import Any, TypeVar

import numpy as np
from pydantic import BaseModel

from afcmemory.errors import ConfigError, SpectrumFormatError
from afcmemory.models import (
    CountHistogram,
    FourierCoefficientSet,
    OpticalDepthSpectrum,
    RunManifest,
    TimeTrace,
)
from afcmemory.spectral import spectrum_from_samples

logger = logging.getLogger(__name__)

DEFAULT_OUTPUT_DIR = Path("output")
MANIFEST_NAME = "manifest.json"
_OUT_DIR_ENV = "AFCMEMORY_OUT_DIR"

SPECTRUM_HEADER = ("frequency_hz", "optical_depth")
COEFFICIENT_HEADER = ("p", "re_b", "im_b")
TRACE_HEADER = ("time_s", "intensity")
HISTOGRAM_HEADER = ("gate_center_s", "counts")

M = TypeVar("M", bound=BaseModel)


def resolve_output_dir(out_dir: Path | str | None = None) -> Path:
    """Output directory: explicit argument, then $AFCMEMORY_OUT_DIR, then ./output."""
    if out_dir:
        path = Path(out_dir)
    elif os.getenv(_OUT_DIR_ENV):
        path = Path(os.environ[_OUT_DIR_ENV])
    else:
        path = DEFAULT_OUTPUT_DIR
    path.mkdir(parents=True, exist_ok=True)
    return path


def _fmt(value: float | None) -> str:
    if value is None:
        return ""
    return repr(float(value))


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[str]]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    logger.debug("Wrote %d rows to %s", len(rows), path)
    return path


# ---------------------------------------------------------------------------
# Spectra
# ---------------------------------------------------------------------------


def write_spectrum_csv(s: OpticalDepthSpectrum, path: Path | str) -> Path:
    rows = [(_fmt(nu), _fmt(d)) for nu, d in zip(s.frequencies, s.depth)]
    return _write_csv(Path(path), SPECTRUM_HEADER, rows)


def read_spectrum_csv(path: Path | str) -> OpticalDepthSpectrum:
    """Read a ``frequency_hz,optical_depth`` file.

    :raises SpectrumFormatError: On a bad header, a malformed or negative row,
        with the offending line number.
    :raises DomainError: If the frequencies are not uniformly spaced.
    """
    path = Path(path)
    frequencies: list[float] = []
    depth: list[float] = []
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != SPECTRUM_HEADER:
            raise SpectrumFormatError(
                f"expected header {','.join(SPECTRUM_HEADER)}, got {header}", line=1
            )
        for row in reader:
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 2:
                raise SpectrumFormatError(f"expected 2 fields, got {len(row)}", line=line)
            try:
                nu, d = float(row[0]), float(row[1])
            except ValueError as exc:
                raise SpectrumFormatError(f"not a number: {exc}", line=line) from exc
            if not (math.isfinite(nu) and math.isfinite(d)):
                raise SpectrumFormatError("non-finite value", line=line)
            if d < 0:
                raise SpectrumFormatError(f"negative optical depth {d}", line=line)
            frequencies.append(nu)
            depth.append(d)
    logger.info("Read %d spectrum samples from %s", len(depth), path)
    return spectrum_from_samples(
        np.array(frequencies), np.array(depth), source=str(path)
    )


def write_coefficients_csv(coeffs: FourierCoefficientSet, path: Path | str) -> Path:
    rows = [(str(p), _fmt(b.real), _fmt(b.imag)) for p, b in enumerate(coeffs.b)]
    return _write_csv(Path(path), COEFFICIENT_HEADER, rows)


def write_trace_csv(trace: TimeTrace, path: Path | str) -> Path:
    rows = [(_fmt(t), _fmt(i)) for t, i in zip(trace.times, trace.samples)]
    return _write_csv(Path(path), TRACE_HEADER, rows)


def write_histogram_csv(h: CountHistogram, path: Path | str) -> Path:
    rows = [(_fmt(t), str(int(c))) for t, c in zip(h.gate_centers, h.counts)]
    return _write_csv(Path(path), HISTOGRAM_HEADER, rows)


def write_table_csv(
    rows: Sequence[BaseModel], header: Sequence[str], path: Path | str
) -> Path:
    """Write model rows whose field names are ``header``; None becomes empty."""
    out = []
    for row in rows:
        data = row.model_dump()
        out.append([_fmt(data[name]) for name in header])
    return _write_csv(Path(path), header, out)


def read_table_csv(path: Path | str) -> list[dict[str, float | None]]:
    """Read a numeric table written by :func:`write_table_csv`."""
    with open(path, encoding="utf-8", newline="") as f:
        return [
            {k: float(v) if v != "" else None for k, v in row.items()}
            for row in csv.DictReader(f)
        ]


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------


def _sanitize(obj: Any) -> Any:
    """Make values JSON-safe: complex → [re, im], non-finite floats → strings."""
    if isinstance(obj, complex):
        return [_sanitize(obj.real), _sanitize(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if math.isinf(value):
            return "Infinity" if value > 0 else "-Infinity"
        if math.isnan(value):
            return None
        return value
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_sanitize(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    return obj


def write_json(data: Any, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(_sanitize(data), f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def load_document(model: type[M], path: Path | str) -> M:
    """Validate a JSON document against ``model``.

    :raises ConfigError: If the file is missing or not valid JSON.
    :raises pydantic.ValidationError: On bad or unknown fields.
    """
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return model.model_validate(data)


# ---------------------------------------------------------------------------
# Manifest
# ---------------------------------------------------------------------------


def canonical_json(config: Any) -> str:
    return json.dumps(_sanitize(config), sort_keys=True, separators=(",", ":"))


def config_digest(config: Any) -> str:
    """SHA-256 of the canonical (sorted, compact) JSON of ``config``."""
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


def write_manifest(manifest: RunManifest, out_dir: Path | str) -> Path:
    path = Path(out_dir) / MANIFEST_NAME
    write_json(manifest.model_dump(mode="json", by_alias=True), path)
    logger.info("Wrote run manifest %s", path)
    return path
