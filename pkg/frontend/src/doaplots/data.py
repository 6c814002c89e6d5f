"""CSV readers for the sparsedoa harness output schemas.

Three schemas are understood:

- sweep:   ``estimator,axis,value,rmse,failures,trials,mean_runtime_s``
           with optional trailing ``crlb_pc_up,crlb_fc_up`` columns;
- bounds:  ``snr_db,source_index,crlb_value,bound_name``;
- weights: ``lag,weight``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SchemaError",
    "MissingSeriesError",
    "SweepTable",
    "CrlbTable",
    "WeightTable",
    "read_sweep_csv",
    "read_crlb_csv",
    "read_weights_csv",
]

SWEEP_COLUMNS = (
    "estimator", "axis", "value", "rmse", "failures", "trials", "mean_runtime_s",
)
SWEEP_CRLB_COLUMNS = SWEEP_COLUMNS + ("crlb_pc_up", "crlb_fc_up")
CRLB_COLUMNS = ("snr_db", "source_index", "crlb_value", "bound_name")
WEIGHT_COLUMNS = ("lag", "weight")


class SchemaError(ValueError):
    """Input file does not conform to a known harness CSV schema."""


class MissingSeriesError(KeyError):
    """A requested series is absent from the input data."""


@dataclass(frozen=True)
class SweepTable:
    """RMSE sweep records grouped by estimator."""

    axis: str
    path: str
    rows: tuple[dict, ...] = field(repr=False)

    @property
    def estimators(self) -> tuple[str, ...]:
        seen = []
        for row in self.rows:
            if row["estimator"] not in seen:
                seen.append(row["estimator"])
        return tuple(seen)

    def series(self, estimator: str) -> tuple[np.ndarray, np.ndarray]:
        """(sweep values, rmse) for one estimator, in file order."""
        picked = [r for r in self.rows if r["estimator"] == estimator]
        if not picked:
            raise MissingSeriesError(
                f"estimator {estimator!r} not present in {self.path}"
            )
        x = np.array([r["value"] for r in picked])
        y = np.array([r["rmse"] for r in picked])
        return x, y

    def bound_series(self, column: str) -> tuple[np.ndarray, np.ndarray]:
        """(sweep values, bound) from an optional crlb column."""
        if any(column not in r for r in self.rows):
            raise MissingSeriesError(f"column {column!r} not present in {self.path}")
        first = self.rows[0]["estimator"]
        picked = [r for r in self.rows if r["estimator"] == first]
        x = np.array([r["value"] for r in picked])
        y = np.array([r[column] for r in picked])
        return x, y


@dataclass(frozen=True)
class CrlbTable:
    path: str
    rows: tuple[dict, ...] = field(repr=False)

    @property
    def bound_names(self) -> tuple[str, ...]:
        seen = []
        for row in self.rows:
            if row["bound_name"] not in seen:
                seen.append(row["bound_name"])
        return tuple(seen)

    def series(self, bound_name: str) -> tuple[np.ndarray, np.ndarray]:
        """(snr values, per-source RMS square-root bound) for one bound."""
        picked = [r for r in self.rows if r["bound_name"] == bound_name]
        if not picked:
            raise MissingSeriesError(
                f"bound {bound_name!r} not present in {self.path}"
            )
        snrs = sorted({r["snr_db"] for r in picked})
        values = []
        for snr in snrs:
            per_source = [r["crlb_value"] for r in picked if r["snr_db"] == snr]
            values.append(float(np.sqrt(np.mean(per_source))))
        return np.array(snrs), np.array(values)


@dataclass(frozen=True)
class WeightTable:
    path: str
    lags: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)


def _read_rows(path, expected_headers):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        header = tuple(h.strip() for h in header)
        for candidate in expected_headers:
            if header == candidate:
                break
        else:
            raise SchemaError(
                f"{path}: header {','.join(header)!r} does not match the "
                f"expected schema {','.join(expected_headers[0])!r}"
            )
        rows = []
        for lineno, raw in enumerate(reader, start=2):
            if not raw:
                continue
            if len(raw) != len(header):
                raise SchemaError(f"{path}:{lineno}: wrong number of fields")
            rows.append(dict(zip(header, raw)))
    return rows


def read_sweep_csv(path) -> SweepTable:
    raw = _read_rows(path, (SWEEP_COLUMNS, SWEEP_CRLB_COLUMNS))
    if not raw:
        raise SchemaError(f"{path}: no data rows")
    rows = []
    axes = set()
    for row in raw:
        parsed = {"estimator": row["estimator"], "axis": row["axis"]}
        try:
            for key in row:
                if key in ("estimator", "axis"):
                    continue
                parsed[key] = float(row[key])
        except ValueError as exc:
            raise SchemaError(f"{path}: non-numeric field: {exc}") from exc
        axes.add(row["axis"])
        rows.append(parsed)
    if len(axes) != 1:
        raise SchemaError(f"{path}: mixed sweep axes {sorted(axes)}")
    return SweepTable(axis=axes.pop(), path=str(path), rows=tuple(rows))


def read_crlb_csv(path) -> CrlbTable:
    raw = _read_rows(path, (CRLB_COLUMNS,))
    if not raw:
        raise SchemaError(f"{path}: no data rows")
    rows = []
    for row in raw:
        try:
            rows.append(
                {
                    "snr_db": float(row["snr_db"]),
                    "source_index": int(row["source_index"]),
                    "crlb_value": float(row["crlb_value"]),
                    "bound_name": row["bound_name"],
                }
            )
        except ValueError as exc:
            raise SchemaError(f"{path}: non-numeric field: {exc}") from exc
    return CrlbTable(path=str(path), rows=tuple(rows))


def read_weights_csv(path) -> WeightTable:
    raw = _read_rows(path, (WEIGHT_COLUMNS,))
    if not raw:
        raise SchemaError(f"{path}: no data rows")
    try:
        lags = np.array([int(r["lag"]) for r in raw])
        weights = np.array([int(r["weight"]) for r in raw])
    except ValueError as exc:
        raise SchemaError(f"{path}: non-integer field: {exc}") from exc
    order = np.argsort(lags)
    return WeightTable(path=str(path), lags=lags[order], weights=weights[order])
