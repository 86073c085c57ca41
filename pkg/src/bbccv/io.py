"""File formats: prediction matrices, datasets, grids, reports and bias tables.

Prediction matrix (CSV)
    header ``sample_id,label[,event],fold[,repeat],<config ids...>``; one row
    per (sample, repeat). Fold and repeat ids are 1-based. Missing cells hold
    the literal token ``NA`` so ragged early-dropping dumps survive tools that
    trim empty fields. A sample that a repeat never reached has fold ``NA``.

Report (JSON)
    ``{"tool": ..., "version": ..., "reports": [...]}`` with keys sorted and
    no timestamps, so identical runs give identical bytes. Floats use the
    shortest representation that round-trips exactly.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .errors import ParseError
from .learners import ConfigGrid, Dataset, expand_grid
from .selection import PredictionStore

__all__ = [
    "NA",
    "ReportDocument",
    "format_number",
    "load_dataset",
    "load_grid",
    "parse_prediction_matrix",
    "read_reports",
    "write_bias_table",
    "write_prediction_matrix",
    "write_reports",
]

NA = "NA"
TOOL = "bbccv"

_FIXED = ("sample_id", "label", "event", "fold", "repeat")


def format_number(v) -> str:
    """Canonical text for a number: integers without a decimal point, floats by repr."""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return NA
    if v.is_integer() and abs(v) < 2**53:
        return str(int(v))
    return repr(v)


def _delimiter(path, delimiter):
    if delimiter is not None:
        return delimiter
    return "\t" if str(path).endswith((".tsv", ".tab")) else ","


def _number(token: str, what: str, line: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"line {line}: {what} {token!r} is not a number") from None


def _int_id(token: str, what: str, line: int) -> int:
    v = _number(token, what, line)
    if not v.is_integer():
        raise ParseError(f"line {line}: {what} {token!r} is not an integer")
    return int(v)


# ---------------------------------------------------------------- prediction matrix


def parse_prediction_matrix(path, delimiter: str | None = None, K: int | None = None) -> PredictionStore:
    """Read a prediction-matrix file into a validated :class:`PredictionStore`."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh, delimiter=_delimiter(path, delimiter)))
    if not rows:
        raise ParseError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if header[:2] != ["sample_id", "label"]:
        raise ParseError(f"{path}: header must start with sample_id,label; got {header[:2]}")
    pos = 2
    has_event = len(header) > pos and header[pos] == "event"
    pos += has_event
    if len(header) <= pos or header[pos] != "fold":
        raise ParseError(f"{path}: expected a fold column after the label columns")
    pos += 1
    has_repeat = len(header) > pos and header[pos] == "repeat"
    pos += has_repeat
    config_ids = header[pos:]
    if not config_ids:
        raise ParseError(f"{path}: no configuration columns")
    if len(set(config_ids)) != len(config_ids):
        raise ParseError(f"{path}: duplicate configuration column names")
    if any(c in _FIXED or c == "" for c in config_ids):
        raise ParseError(f"{path}: malformed configuration column names")

    sample_order: dict[str, int] = {}
    labels: list = []
    cells: dict[tuple[int, int], tuple[int, list]] = {}
    n_repeats = 1
    for line, row in enumerate(rows[1:], start=2):
        if not row or all(not t.strip() for t in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"line {line}: expected {len(header)} fields, got {len(row)}")
        row = [t.strip() for t in row]
        sid = row[0]
        if row[1] in (NA, ""):
            raise ParseError(f"line {line}: missing label for sample {sid!r}")
        label = _number(row[1], "label", line)
        if math.isnan(label):
            raise ParseError(f"line {line}: NaN label for sample {sid!r}")
        if has_event:
            event = _int_id(row[2], "event", line)
            if event not in (0, 1):
                raise ParseError(f"line {line}: event must be 0 or 1")
            label = (label, event)
        f_tok = row[2 + has_event]
        fold = -1 if f_tok == NA else _int_id(f_tok, "fold", line)
        if fold != -1 and (fold < 1 or (K is not None and fold > K)):
            raise ParseError(f"line {line}: fold id {fold} out of range")
        repeat = _int_id(row[3 + has_event], "repeat", line) if has_repeat else 1
        if repeat < 1:
            raise ParseError(f"line {line}: repeat id {repeat} out of range")
        n_repeats = max(n_repeats, repeat)
        if sid not in sample_order:
            sample_order[sid] = len(labels)
            labels.append(label)
        elif labels[sample_order[sid]] != label:
            raise ParseError(f"line {line}: sample {sid!r} has conflicting labels")
        key = (sample_order[sid], repeat - 1)
        if key in cells:
            raise ParseError(f"line {line}: duplicate row for sample {sid!r}, repeat {repeat}")
        values = [np.nan if t == NA else _number(t, "prediction", line) for t in row[pos:]]
        if fold == -1 and not all(math.isnan(v) for v in values):
            raise ParseError(f"line {line}: predictions without a fold id")
        cells[key] = (fold - 1 if fold > 0 else -1, values)

    N, C = len(labels), len(config_ids)
    if N == 0:
        raise ParseError(f"{path}: no data rows")
    values = np.full((N, C, n_repeats), np.nan)
    fold_of = np.full((N, n_repeats), -1, dtype=np.int64)
    for (i, r), (fold, vals) in cells.items():
        values[i, :, r] = vals
        fold_of[i, r] = fold
    label_arr = np.array(labels, dtype=float)
    if not has_event and np.all(label_arr == np.round(label_arr)):
        label_arr = label_arr.astype(np.int64)
    store = PredictionStore(
        values=values,
        present=~np.isnan(values),
        labels=label_arr,
        fold_of=fold_of,
        config_ids=config_ids,
        sample_ids=list(sample_order),
    )
    return store


def write_prediction_matrix(store: PredictionStore, path, delimiter: str | None = None):
    """Write ``store`` in the prediction-matrix format (repeat-major row order)."""
    path = Path(path)
    survival = store.labels.ndim == 2
    with_repeat = store.n_repeats > 1
    header = ["sample_id", "label"] + (["event"] if survival else []) + ["fold"]
    header += (["repeat"] if with_repeat else []) + list(store.config_ids)
    ids = store.sample_ids or [str(i + 1) for i in range(store.n_samples)]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, delimiter=_delimiter(path, delimiter), lineterminator="\n")
        w.writerow(header)
        for r in range(store.n_repeats):
            for i in range(store.n_samples):
                if survival:
                    lab = [format_number(store.labels[i, 0]), format_number(int(store.labels[i, 1]))]
                else:
                    lab = [format_number(store.labels[i])]
                fold = store.fold_of[i, r]
                row = [str(ids[i])] + lab + [NA if fold < 0 else str(fold + 1)]
                if with_repeat:
                    row.append(str(r + 1))
                row += [
                    format_number(v) if ok else NA
                    for v, ok in zip(store.values[i, :, r], store.present[i, :, r])
                ]
                w.writerow(row)


# ---------------------------------------------------------------- datasets and grids


def load_dataset(path, label: str = "label", event: str | None = None, delimiter=None) -> Dataset:
    """Numeric CSV with a header; every column except the label(s) is a feature.

    With ``event`` set, labels become (time, event) pairs taken from the
    ``label`` and ``event`` columns.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh, delimiter=_delimiter(path, delimiter)) if r]
    if len(rows) < 2:
        raise ParseError(f"{path}: need a header and at least one data row")
    header = [h.strip() for h in rows[0]]
    if label not in header:
        raise ParseError(f"{path}: no {label!r} column")
    if event is not None and event not in header:
        raise ParseError(f"{path}: no {event!r} column")
    try:
        data = np.array([[float(t) for t in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise ParseError(f"{path}: non-numeric value ({exc})") from None
    if data.shape[1] != len(header):
        raise ParseError(f"{path}: ragged rows")
    li = header.index(label)
    target_cols = [li] + ([header.index(event)] if event else [])
    features = [j for j in range(len(header)) if j not in target_cols]
    if not features:
        raise ParseError(f"{path}: no feature columns")
    bad = np.flatnonzero(np.isnan(data[:, target_cols]).any(axis=1))
    if bad.size:
        raise ParseError(f"{path}: NaN label on data row {bad[0] + 1}")
    if event:
        y = data[:, target_cols]
    else:
        y = data[:, li]
        if np.all(y == np.round(y)):
            y = y.astype(np.int64)
    return Dataset(data[:, features], y)


def load_grid(path) -> ConfigGrid:
    """Configuration grid from JSON (see :func:`learners.expand_grid`)."""
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from None
    return expand_grid(raw)


# ---------------------------------------------------------------- reports


@dataclass
class ReportDocument:
    """Serializable summary of one protocol or correction run."""

    protocol: str
    metric: str
    estimate: float
    selected_config: str
    models_trained: int | None = None
    ci: list | None = None
    seed: int | None = None
    B: int | None = None
    alpha: float | None = None
    alpha_drop: float | None = None
    min_oos: int | None = None
    K: int | None = None
    repeats: int | None = None
    drop_trace: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["ci"] is not None:
            d["ci"] = [float(x) for x in d["ci"]]
        return _plain(d)

    @classmethod
    def from_dict(cls, d: dict) -> ReportDocument:
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ParseError(f"unknown report fields {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_protocol(cls, report, config_ids=None, **params) -> ReportDocument:
        """Build from a :class:`protocols.ProtocolReport` plus the run parameters."""
        trace = [
            {"fold": int(f), "config": config_ids[j] if config_ids else int(j), "p_hat": float(p)}
            for f, j, p in report.drop_trace
        ]
        extra = {k: v for k, v in report.details.items() if k not in params}
        if report.failed_configs:
            extra["failed_configs"] = dict(report.failed_configs)
        return cls(
            protocol=report.protocol,
            metric=report.metric,
            estimate=float(report.estimate),
            selected_config=report.selected_config_id,
            models_trained=int(report.models_trained),
            ci=None if report.ci is None else [float(report.ci[0]), float(report.ci[1])],
            drop_trace=trace,
            extra=extra,
            **params,
        )


def _plain(obj):
    """Recursively convert numpy scalars and arrays to JSON-native types."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return None if math.isnan(v) else v
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps_reports(docs) -> str:
    from . import __version__

    bundle = {"tool": TOOL, "version": __version__, "reports": [d.to_dict() for d in docs]}
    return json.dumps(bundle, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_reports(path, docs):
    Path(path).write_text(dumps_reports(docs))


def read_reports(path) -> list[ReportDocument]:
    try:
        bundle = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(bundle, dict) or "reports" not in bundle:
        raise ParseError(f"{path}: not a report bundle")
    return [ReportDocument.from_dict(d) for d in bundle["reports"]]


# ---------------------------------------------------------------- bias tables


def write_bias_table(study, json_path=None, csv_path=None):
    """Bias table as a JSON document and/or a flat CSV for plotting."""
    from . import __version__

    rows = [r.as_dict() for r in study.table()]
    if json_path is not None:
        doc = {
            "tool": TOOL,
            "version": __version__,
            "K": study.K,
            "B": study.B,
            "alpha_drop": study.alpha_drop,
            "min_oos": study.min_oos,
            "seeds": sorted({s.seed for s in study.settings}),
            "rows": rows,
        }
        Path(json_path).write_text(
            json.dumps(_plain(doc), indent=2, sort_keys=True, allow_nan=False) + "\n"
        )
    if csv_path is not None:
        cols = list(rows[0]) if rows else []
        with Path(csv_path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for r in rows:
                w.writerow(["" if r[c] is None else
                            (format_number(r[c]) if isinstance(r[c], (int, float)) else r[c])
                            for c in cols])
    return rows
