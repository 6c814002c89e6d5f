"""Figure generation from sparsedoa CSV outputs."""

from .data import (
    CrlbTable,
    MissingSeriesError,
    SchemaError,
    SweepTable,
    WeightTable,
    read_crlb_csv,
    read_sweep_csv,
    read_weights_csv,
)
from .figures import FigureSpec, render

__all__ = [
    "CrlbTable",
    "FigureSpec",
    "MissingSeriesError",
    "SchemaError",
    "SweepTable",
    "WeightTable",
    "read_crlb_csv",
    "read_sweep_csv",
    "read_weights_csv",
    "render",
]
