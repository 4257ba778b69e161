"""``plot <kind> --in ... --out ...``: render one figure from simulator outputs."""

from __future__ import annotations

import argparse
import sys

import matplotlib

matplotlib.use("Agg")

from . import figures, io
from .figures import FigureSpec

KINDS = ("ltv_trace", "baddebt_series", "baddebt_hist", "sigma_hist")


def render(spec: FigureSpec) -> str:
    """Render the figure described by ``spec`` and write the image file."""
    if spec.kind == "ltv_trace":
        if len(spec.inputs) != 1:
            raise io.SchemaError("ltv_trace takes exactly one --in trace CSV")
        trace = io.read_ltv_trace(spec.inputs[0])
        prices = io.read_prices(spec.prices) if spec.prices else None
        fig = figures.ltv_trace_figure(
            trace, spec.threshold, spec.frontier, prices, spec.title)
    elif spec.kind == "baddebt_series":
        if not spec.inputs:
            raise io.SchemaError("baddebt_series needs at least one --in series CSV")
        series = [(io.series_label(p), io.read_series(p)) for p in spec.inputs]
        fig = figures.baddebt_series_figure(series, spec.title)
    elif spec.kind == "baddebt_hist":
        if len(spec.inputs) != 1:
            raise io.SchemaError("baddebt_hist takes exactly one --in final_samples CSV")
        samples = io.read_final_samples(spec.inputs[0])
        fig = figures.baddebt_hist_figure(samples, spec.bins, spec.title)
    elif spec.kind == "sigma_hist":
        if len(spec.inputs) != 1:
            raise io.SchemaError("sigma_hist takes exactly one --in sigma_fit CSV")
        fit = io.read_sigma_fit(spec.inputs[0])
        fig = figures.sigma_hist_figure(fit, spec.bins, spec.cutoff, spec.title)
    else:
        raise io.SchemaError(f"unknown figure kind {spec.kind!r}")
    fig.savefig(spec.output, dpi=150)
    return spec.output


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plot", description="Render figures from liqsim output files")
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("--in", dest="inputs", action="append", required=True,
                        metavar="FILE", help="input file (repeatable)")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--prices", default=None,
                        help="ltv_trace: optional OHLCV CSV overlay")
    parser.add_argument("--threshold", type=float, default=0.89,
                        help="ltv_trace: liquidation threshold line")
    parser.add_argument("--frontier", type=float, default=1.0 / 1.045,
                        help="ltv_trace: UC frontier line")
    parser.add_argument("--bins", type=int, default=50, help="histogram bin count")
    parser.add_argument("--cutoff", type=float, default=600.0,
                        help="sigma_hist: x-axis truncation")
    parser.add_argument("--title", default="", help="figure title")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(
        kind=args.kind,
        inputs=args.inputs,
        output=args.out,
        prices=args.prices,
        threshold=args.threshold,
        frontier=args.frontier,
        bins=args.bins,
        cutoff=args.cutoff,
        title=args.title,
    )
    try:
        path = render(spec)
    except io.SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
