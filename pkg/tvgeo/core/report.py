"""
Run outputs: versioned CSV tables, SVG contour overlays and config sidecars.

CSV v1:
  - first line is the schema comment '# tvgeo-csv v1'
  - second line is the comma-separated column header
  - one row per record; floats use repr() (shortest round-trip form),
    booleans are 'true'/'false', missing values are empty

SVG 1.1 overlay:
  - viewBox '0 0 n n' in pixel units, x = grid column j, y = grid row i
  - one stroke-only <path> per curve, closed curves end with 'Z'
  - an optional '<!-- generated ... -->' timestamp comment (the only
    non-deterministic content, suppressible)

config.json:
  - {"tool", "version", "rng", "options": {...}} with the resolved options
"""

import datetime
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from tvgeo import __version__
from tvgeo.core.certify import RNG_NAME, StabilityRecord, StabilityReport
from tvgeo.core.geometry import ContourSet

CSV_MAGIC = '# tvgeo-csv v1'


def format_value(value) -> str:
    if value is None:
        return ''
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return 'nan'
        if math.isinf(v):
            return 'inf' if v > 0 else '-inf'
        return repr(v)
    return str(value)


def csv_text(columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    lines = [CSV_MAGIC, ','.join(columns)]
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"row has {len(row)} fields, header has {len(columns)}")
        lines.append(','.join(format_value(v) for v in row))
    return '\n'.join(lines) + '\n'


def write_csv(path: str | Path, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    Path(path).write_text(csv_text(columns, rows))


def read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    """Header and raw string rows of a CSV v1 file."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != CSV_MAGIC:
        raise ValueError(f"{path}: missing '{CSV_MAGIC}' header")
    columns = lines[1].split(',')
    return columns, [line.split(',') for line in lines[2:] if line]


def contour_csv_rows(curves: ContourSet) -> list[tuple]:
    """(curve_id, hole, x, y) rows, one per vertex."""
    rows = []
    for k, (curve, hole) in enumerate(zip(curves.curves, curves.holes)):
        for x, y in curve:
            rows.append((k, hole, float(x), float(y)))
    return rows


def contour_to_csv(curves: ContourSet, path: str | Path) -> None:
    write_csv(path, ['curve_id', 'hole', 'x', 'y'], contour_csv_rows(curves))


STABILITY_COLUMNS = [
    'lambda', 'sigma', 'seed', 'r', 'noise_norm', 'noise_ratio',
    'hypothesis', 'analytic_hypothesis', 'hypothesis_threshold', 'measured_distance',
    'certificate_distance', 'noise_deviation', 'oracle_offset', 'delta_half_r',
    'contained', 'worst_violation', 'hausdorff_max',
    'bo_lhs', 'bo_rhs', 'bo_satisfied', 'jump_bound',
    'max_level_area', 'perimeter_violations', 'iters', 'gap',
]


def _finite_max(values) -> float:
    finite = [v for v in values if math.isfinite(v)]
    return max(finite) if finite else math.nan


def stability_row(rec: StabilityRecord) -> tuple:
    return (rec.lam, rec.sigma, rec.seed, rec.r, rec.noise_norm, rec.noise_norm / rec.lam,
            rec.hypothesis, rec.analytic_hypothesis, rec.hypothesis_threshold, rec.measured_distance,
            rec.certificate_distance, rec.noise_deviation, rec.oracle_offset, rec.delta_half_r,
            rec.contained, rec.worst_violation, _finite_max(rec.hausdorff.values()),
            rec.bo_lhs, rec.bo_rhs, rec.bo_satisfied, rec.jump_bound,
            rec.max_level_area, rec.perimeter_violations, rec.iters, rec.gap)


def write_stability(report: StabilityReport, path: str | Path) -> None:
    """One CSV row per (lambda, sigma, seed, r) record, in key order."""
    write_csv(path, STABILITY_COLUMNS, [stability_row(r) for r in report.records])


def _path_d(curve: np.ndarray, n: int) -> str:
    # svg x is the grid column (domain y), svg y the grid row (domain x)
    pts = [f"{y * n:.3f},{x * n:.3f}" for x, y in curve]
    closed = len(curve) > 2 and np.allclose(curve[0], curve[-1])
    d = 'M' + ' L'.join(pts)
    return d + ' Z' if closed else d


def contour_to_svg(layers: Sequence[tuple[ContourSet, str]], n: int, title: str = '',
                   timestamp: bool = True, stroke_width: float = 0.5) -> str:
    """SVG document with one stroked path per curve; layers are (curves, colour) pairs."""
    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
           f'width="{n}" height="{n}" viewBox="0 0 {n} {n}">']
    if timestamp:
        now = datetime.datetime.now(datetime.timezone.utc).strftime('%Y-%m-%dT%H:%M:%SZ')
        out.append(f'<!-- generated by tvgeo {__version__} at {now} -->')
    if title:
        out.append(f'<title>{_escape(title)}</title>')
    out.append(f'<rect x="0" y="0" width="{n}" height="{n}" fill="white"/>')
    for curves, colour in layers:
        out.append(f'<g fill="none" stroke="{colour}" stroke-width="{stroke_width}">')
        for curve in curves.curves:
            out.append(f'<path d="{_path_d(curve, n)}"/>')
        out.append('</g>')
    out.append('</svg>')
    return '\n'.join(out) + '\n'


def write_svg(path: str | Path, layers: Sequence[tuple[ContourSet, str]], n: int,
              title: str = '', timestamp: bool = True) -> None:
    Path(path).write_text(contour_to_svg(layers, n, title=title, timestamp=timestamp))


def _escape(text: str) -> str:
    return text.replace('&', '&amp;').replace('<', '&lt;').replace('>', '&gt;')


def _jsonable(value):
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    return value


def write_config(out_dir: str | Path, tool: str, options: dict) -> Path:
    """Write the resolved run options to out_dir/config.json."""
    path = Path(out_dir) / 'config.json'
    doc = {
        'tool': tool,
        'version': __version__,
        'rng': RNG_NAME,
        'options': {k: _jsonable(v) for k, v in sorted(options.items())},
    }
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + '\n')
    return path
