"""Write u,v,value CSVs of residual fields for plotting.

    python3 scripts/export_heatmaps.py out/ --surface cone --fields W_norm divS2_norm absH
"""

import argparse
from pathlib import Path

from biconservative.analysis import GridSpec, analyze, emit_field_csv, emit_report
from biconservative.gallery import make_surface


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("outdir", type=Path)
    ap.add_argument("--surface", action="append", default=None, help="repeatable; default: a few gallery surfaces")
    ap.add_argument("--fields", nargs="+", default=["absH", "divS2_norm", "W_norm", "pmc"])
    ap.add_argument("--grid", default="64x64")
    args = ap.parse_args()

    surfaces = args.surface or ["cone", "s3", "cylinder_over_curve_r4", "monge"]
    args.outdir.mkdir(parents=True, exist_ok=True)
    for name in surfaces:
        report = analyze(make_surface(name), GridSpec.parse(args.grid))
        emit_report(report, "json", args.outdir / f"{name}.json")
        for f in args.fields:
            emit_field_csv(report, f, args.outdir / f"{name}_{f}.csv")
        print(f"{name}: flags {report.flags} -> {args.outdir}/{name}_*.csv")


if __name__ == "__main__":
    main()
