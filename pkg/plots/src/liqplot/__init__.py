"""liqplot: publication-style figures from liqsim output files."""

from .cli import render
from .figures import (
    FigureSpec,
    baddebt_hist_figure,
    baddebt_series_figure,
    ltv_trace_figure,
    sigma_hist_figure,
)
from .io import SchemaError

__version__ = "0.1.0"

__all__ = [
    "FigureSpec",
    "SchemaError",
    "baddebt_hist_figure",
    "baddebt_series_figure",
    "ltv_trace_figure",
    "render",
    "sigma_hist_figure",
]
