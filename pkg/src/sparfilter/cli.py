"""Command-line interface.

    sparfilter filter   --input prices.csv --returns log --out results/
    sparfilter sweep    --input returns.csv > sweep.csv
    sparfilter simulate --fixture appendix-a --n 50 --reps 100 --seed 7 --out sim/
    sparfilter simulate --identity 100 --ratios 0.1,0.5,1,1.5 --out fig1/
    sparfilter spectrum --input returns.csv
    sparfilter metrics  --truth sigma.csv --network network_maximal.csv

The JSON report goes to stdout; diagnostics go to stderr. Exit codes: 0 ok,
1 runtime/data error, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import os
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .covariance import (
    DataMatrix,
    log_returns,
    read_csv,
    read_matrix_csv,
    sample_covariance,
    standardize,
    to_correlation,
)
from .errors import SparFilterError
from .filtering import CostSpec, FilterResult, run_filter
from .metrics import recovery_metrics
from .network import EXTENSIONS, FORMATS, Network, build_network, export, from_edge_csv
from .shrinkage import ledoit_wolf
from .sim import (
    StudyConfig,
    TABLE1_ETAS,
    load_fixture,
    replicate_table1,
    spectrum_deviation_study,
    write_table1_csv,
)
from .spectral import DistanceSpec, mp_support, spectrum

REPORT_SCHEMA = "sparfilter.run-report/1"
UNHASHED_FIELDS = ("timing",)


# -- flag parsers -----------------------------------------------------------


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def parse_distance(text: str) -> DistanceSpec:
    if text == "linf":
        return DistanceSpec("linf")
    name, _, k = text.partition(":")
    if name != "minkowski":
        raise argparse.ArgumentTypeError(f"expected minkowski:K or linf, got {text!r}")
    try:
        return DistanceSpec("minkowski", float(k) if k else 2.0)
    except (ValueError, SparFilterError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def parse_band(text: str):
    if text in ("full", "mp"):
        return text
    lo, sep, hi = text.partition(":")
    try:
        band = (int(lo), int(hi))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected full, mp or PL:PH, got {text!r}") from None
    if not sep or not 1 <= band[0] <= band[1]:
        raise argparse.ArgumentTypeError(f"band must satisfy 1 <= PL <= PH, got {text!r}")
    return band


def parse_cost(text: str) -> CostSpec:
    name, _, args = text.partition(":")
    try:
        if name == "power":
            t1, t2 = (float(x) for x in args.split(","))
            return CostSpec.power(t1, t2)
        if name == "weight-ratio":
            return CostSpec.weight_ratio(float(args))
    except (ValueError, SparFilterError) as exc:
        raise argparse.ArgumentTypeError(f"invalid cost {text!r}: {exc}") from None
    raise argparse.ArgumentTypeError(f"expected power:T1,T2 or weight-ratio:S, got {text!r}")


def parse_formats(text: str) -> tuple[str, ...]:
    out = tuple(f.strip() for f in text.split(",") if f.strip())
    bad = [f for f in out if f not in FORMATS]
    if bad or not out:
        raise argparse.ArgumentTypeError(f"formats must be drawn from {','.join(FORMATS)}")
    return out


# -- report -----------------------------------------------------------------


@dataclasses.dataclass
class RunReport:
    input: dict
    shrinkage: dict
    options: dict
    maximal: dict
    tuned: dict
    timing: dict = dataclasses.field(default_factory=dict)
    schema: str = REPORT_SCHEMA

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        doc = json.loads(text)
        if doc.get("schema") != REPORT_SCHEMA:
            raise SparFilterError(f"unsupported report schema {doc.get('schema')!r}")
        return cls(**doc)

    def hashed(self) -> dict:
        return {k: v for k, v in self.to_dict().items() if k not in UNHASHED_FIELDS}


def _network_section(result: FilterResult, which: str) -> tuple[dict, Network]:
    if which == "maximal":
        eta, y, mat, rec = result.eta_star, result.y_star, result.matrix_star, result.record_star
    else:
        eta, y, mat, rec = result.eta_tilde, result.y_tilde, result.matrix_tilde, result.record_tilde
    net = build_network(mat)
    comps = net.components()
    section = {
        "eta": eta,
        "y": y,
        "edges": len(net.edges),
        "distance": rec.distance,
        "cost": rec.cost,
        "objective": rec.objective,
        "n_components": len(comps),
        "components": comps,
    }
    return section, net


def build_report(
    d: DataMatrix,
    result: FilterResult,
    options: dict,
    source: str,
    seconds: float,
) -> tuple[RunReport, dict[str, Network]]:
    lw = result.shrinkage
    maximal, net_max = _network_section(result, "maximal")
    tuned, net_tuned = _network_section(result, "tuned")
    band = result.dspec.band
    opts = dict(options)
    opts["band_resolved"] = list(band) if band else None
    report = RunReport(
        input={
            "path": source,
            "n": d.n,
            "p": d.p,
            "pn_ratio": d.p / d.n,
            "total_edges": result.table.total_edges,
        },
        shrinkage={"alpha1": lw.alpha1, "alpha2": lw.alpha2, "mu": lw.mu},
        options=opts,
        maximal=maximal,
        tuned=tuned,
        timing={"seconds": seconds},
    )
    return report, {"maximal": net_max, "tuned": net_tuned}


# -- commands ---------------------------------------------------------------


def _load_data(path: str, returns: str) -> DataMatrix:
    if not os.path.exists(path):
        raise FileNotFoundError(f"input file not found: {path}")
    d = read_csv(path)
    return log_returns(d) if returns == "log" else d


def _write_text(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8", newline="")


def _filter_options(args) -> tuple[DistanceSpec, CostSpec, dict]:
    dspec = args.distance
    cspec = args.cost
    opts = {
        "returns": args.returns,
        "scale": args.scale,
        "target": args.target,
        "distance": {"metric": dspec.metric, "kappa": dspec.kappa},
        "band": list(args.band) if isinstance(args.band, tuple) else args.band,
        "cost": dataclasses.asdict(cspec),
        "seed": args.seed,
    }
    return dspec, cspec, opts


def _run(args) -> tuple[DataMatrix, FilterResult, dict, float]:
    d = _load_data(args.input, args.returns)
    dspec, cspec, opts = _filter_options(args)
    start = time.perf_counter()
    result = run_filter(
        d,
        dspec,
        cspec,
        scale=args.scale,
        target=args.target,
        band=args.band,
        seed=args.seed,
        nercome_splits=args.nercome_splits,
    )
    return d, result, opts, time.perf_counter() - start


def cmd_filter(args) -> int:
    d, result, opts, seconds = _run(args)
    report, nets = build_report(d, result, opts, args.input, seconds)
    text = report.to_json()
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_text(out / "report.json", text)
        buf = io.StringIO()
        result.table.to_csv(buf)
        _write_text(out / "sweep.csv", buf.getvalue())
        for which, net in nets.items():
            for fmt in args.format:
                (out / f"network_{which}.{EXTENSIONS[fmt]}").write_bytes(export(net, fmt))
    sys.stdout.write(text)
    return 0


def cmd_sweep(args) -> int:
    _, result, _, _ = _run(args)
    result.table.to_csv(sys.stdout)
    return 0


def cmd_spectrum(args) -> int:
    d = _load_data(args.input, args.returns)
    work = standardize(d) if args.scale == "correlation" else d
    s = sample_covariance(work)
    if args.scale == "correlation":
        s = to_correlation(s)
    lw = ledoit_wolf(work)
    sample_spec = spectrum(s).values
    lw_spec = spectrum(lw.estimator)
    sigma2 = float(np.mean(sample_spec))
    support = mp_support(d.p / d.n, sigma2)
    doc = {
        "n": d.n,
        "p": d.p,
        "pn_ratio": d.p / d.n,
        "scale": args.scale,
        "sample_eigenvalues": [float(x) for x in sample_spec],
        "ledoit_wolf_eigenvalues": [float(x) for x in lw_spec.values],
        "alpha1": lw.alpha1,
        "alpha2": lw.alpha2,
        "mp_lower": support.lower,
        "mp_upper": support.upper,
        "deviating": int(np.count_nonzero(lw_spec.values > support.upper)),
    }
    sys.stdout.write(json.dumps(doc, indent=2) + "\n")
    return 0


def cmd_simulate(args) -> int:
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)

    if args.identity is not None:
        ratios = args.ratios or (0.1, 0.5, 1.0, 1.5)
        rows = spectrum_deviation_study(args.identity, ratios, args.seed)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["ratio", "n", "rank", "eigenvalue"])
        summary = []
        for r in rows:
            for k, lam in enumerate(r.eigenvalues, start=1):
                w.writerow([repr(r.ratio), r.n, k, repr(float(lam))])
            support = mp_support(args.identity / r.n, 1.0)
            summary.append(
                {
                    "ratio": r.ratio,
                    "n": r.n,
                    "max_deviation": r.max_deviation,
                    "mp_lower": support.lower,
                    "mp_upper": support.upper,
                }
            )
        doc = {"study": "spectrum-deviation", "p": args.identity, "seed": args.seed, "ratios": summary}
        text = json.dumps(doc, indent=2) + "\n"
        if out:
            _write_text(out / "spectrum.csv", buf.getvalue())
            _write_text(out / "spectrum.json", text)
        sys.stdout.write(text)
        return 0

    if args.sigma:
        if not os.path.exists(args.sigma):
            raise FileNotFoundError(f"sigma file not found: {args.sigma}")
        sigma = read_matrix_csv(args.sigma, "covariance")
    else:
        sigma = load_fixture(args.fixture)
    config = StudyConfig(
        sigma,
        n=args.n,
        replications=args.reps,
        seed=args.seed,
        thresholds=args.thresholds or TABLE1_ETAS,
    )
    rows = replicate_table1(config)
    buf = io.StringIO()
    write_table1_csv(rows, buf)
    doc = {
        "study": "threshold-recovery",
        "source": args.sigma or args.fixture,
        "n": config.n,
        "p": sigma.p,
        "replications": config.replications,
        "seed": config.seed,
        "rows": [{"eta": r.eta, "mean": r.mean, "sd": r.sd} for r in rows],
    }
    text = json.dumps(doc, indent=2) + "\n"
    if out:
        _write_text(out / "table1.csv", buf.getvalue())
        _write_text(out / "table1.json", text)
    sys.stdout.write(text)
    return 0


def cmd_metrics(args) -> int:
    for path in (args.truth, args.network):
        if not os.path.exists(path):
            raise FileNotFoundError(f"file not found: {path}")
    sigma = to_correlation(read_matrix_csv(args.truth, "covariance"))
    with open(args.network, "rb") as fh:
        net = from_edge_csv(fh.read(), sigma.labels)
    m = recovery_metrics(build_network(sigma), net, sigma)
    doc = {"p_t": m.p_t, "p_t_weighted": m.p_t_weighted, "p_f": m.p_f}
    sys.stdout.write(json.dumps(doc, indent=2) + "\n")
    return 0


# -- parser -----------------------------------------------------------------


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="CSV with a label header row")
    p.add_argument("--returns", choices=("none", "log"), default="none")
    p.add_argument("--scale", choices=("correlation", "covariance"), default="correlation")
    p.add_argument("--target", choices=("ledoit-wolf", "nercome"), default="ledoit-wolf")
    p.add_argument("--distance", type=parse_distance, default=DistanceSpec(), metavar="{minkowski:K|linf}")
    p.add_argument("--band", type=parse_band, default="full", metavar="{full|mp|PL:PH}")
    p.add_argument("--cost", type=parse_cost, default=CostSpec.power(0.0, 2.0), metavar="{power:T1,T2|weight-ratio:S}")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--nercome-splits", type=_positive_int, default=50)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparfilter", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("filter", help="maximal and tuned filtering of a data set")
    _add_pipeline_flags(p)
    p.add_argument("--out", help="directory for report.json, sweep.csv and network files")
    p.add_argument("--format", type=parse_formats, default=("edge_csv",), metavar="edge_csv,graph_json,graphml")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("sweep", help="print the threshold sweep table as CSV")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("spectrum", help="sample and shrinkage spectra with Marchenko-Pastur bounds")
    p.add_argument("--input", required=True)
    p.add_argument("--returns", choices=("none", "log"), default="none")
    p.add_argument("--scale", choices=("correlation", "covariance"), default="correlation")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("simulate", help="Monte-Carlo recovery or spectrum-deviation study")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--fixture", default="appendix-a")
    src.add_argument("--sigma", help="CSV of a true covariance matrix")
    src.add_argument("--identity", type=_positive_int, metavar="P", help="spectrum study for Sigma = I_P")
    p.add_argument("--n", type=_positive_int, default=50)
    p.add_argument("--reps", type=_positive_int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--thresholds", type=_float_list)
    p.add_argument("--ratios", type=_float_list)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("metrics", help="recovery metrics of an edge CSV against a true matrix")
    p.add_argument("--truth", required=True)
    p.add_argument("--network", required=True)
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SparFilterError, OSError) as exc:
        print(f"sparfilter: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
