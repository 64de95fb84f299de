"""Command line front end: ``uvjitter pdf|ber-sigma|ber-range|validate``.

Exit status is 0 on success, 1 when validation fails and 2 on bad input.
"""

import argparse
import csv
import datetime
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from .channel import LinkGeometry
from .counting import ber_jitter, ber_no_jitter, cdf_jitter, lambda_s, poisson_cdf
from .errors import NonSmoothPointError, UvJitterError
from .jitter import JitterSpec, expand_ftpd
from .montecarlo import McConfig, make_histogram, mc_ber, sample_power_mc
from .quadform import PowerDensity
from .scenario import Scenario, load_scenario

FLOAT_FMT = "%.12e"
RANGE_SWEEP = (30.0, 170.0, 8)


def write_csv(path, command, columns, rows):
    """CSV with a timestamped comment line, a header row and ``%.12e`` data."""
    stamp = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    with open(path, "w", newline="") as fh:
        fh.write(f"# uvjitter {command} generated {stamp}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([v if isinstance(v, (int, np.integer)) else FLOAT_FMT % v for v in row])


def _plot(path, xs, series, xlabel, ylabel, logy=False):
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return False
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, ys in series.items():
        ys = np.asarray(ys, dtype=float)
        if logy:
            ys = np.where(ys > 0, ys, np.nan)
        ax.plot(xs, ys, marker="o" if len(xs) < 40 else None, label=label)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return True


def _with_sigma(spec, sigma):
    return JitterSpec(mean=spec.mean, sigma=(sigma,) * 4)


def cmd_pdf(scen, out, plot=True):
    geom, params, det, spec, cfg = scen.geometry, scen.channel, scen.detector, scen.jitter, scen.mc
    model = expand_ftpd(geom, params, spec)
    dens = PowerDensity.from_model(model, spec)
    exact, _ = sample_power_mc(geom, params, spec, cfg, "exact")
    ftpd, _ = sample_power_mc(geom, params, spec, cfg, "ftpd", model=model)
    lo = min(exact.min(), ftpd.min())
    hi = max(exact.max(), ftpd.max())
    edges = np.linspace(lo, hi, cfg.bins + 1)
    h_exact = make_histogram(exact, cfg.bins, edges)
    h_ftpd = make_histogram(ftpd, cfg.bins, edges)
    centers = h_exact.centers
    f = np.zeros_like(centers) if dens.is_point_mass else dens.pdf(centers)
    write_csv(out / "pdf.csv", "pdf", ["e_r_w", "f_analytic", "hist_exact", "hist_ftpd"],
              zip(centers, f, h_exact.density, h_ftpd.density))

    lam_b = det.lambda_b
    lam0 = lambda_s(model.f0, det) + lam_b
    top = lambda_s(dens.support()[1], det) + lam_b
    ks = np.arange(0, int(top + 8 * math.sqrt(top) + 10))
    cj = cdf_jitter(ks, dens, det, lam_b)
    cn = poisson_cdf(ks, lam0)
    write_csv(out / "cdf.csv", "pdf", ["k", "cdf_jitter", "cdf_nojitter"], zip(ks, cj, cn))
    if plot:
        _plot(out / "pdf.svg", centers, {"analytic": f, "MC exact": h_exact.density,
                                         "MC FTPD": h_ftpd.density},
              "received power (W)", "density (1/W)")
    return [out / "pdf.csv", out / "cdf.csv"]


def _ber_point(geom, params, det, spec, cfg):
    """Analytic P_ej, no-jitter P_e, threshold and the MC estimate at one point."""
    lam_b = det.lambda_b
    model = expand_ftpd(geom, params, spec)
    pe, _ = ber_no_jitter(lambda_s(model.f0, det), lam_b)
    dens = PowerDensity.from_model(model, spec)
    pej, nth = ber_jitter(dens, det, lam_b)
    est = mc_ber(geom, params, spec, det, lam_b, nth, cfg, model=model)
    return pej, pe, nth, est


def _sweep_values(scen, variable, default):
    sw = scen.sweep
    if sw.variable == variable:
        return sw.values()
    return np.linspace(*default)


def cmd_ber_sigma(scen, out, plot=True):
    geom, params, det, spec, cfg = scen.geometry, scen.channel, scen.detector, scen.jitter, scen.mc
    rows = []
    for i, sigma in enumerate(_sweep_values(scen, "sigma", (0.0, 0.07, 8))):
        point_cfg = McConfig(cfg.seed + i, cfg.n_samples, cfg.n_symbols, cfg.bins, cfg.workers)
        try:
            pej, _, nth, est = _ber_point(geom, params, det, _with_sigma(spec, sigma), point_cfg)
            rows.append((sigma, pej, est.ber, est.ci_lo, est.ci_hi, nth))
        except NonSmoothPointError as exc:
            print(f"sigma={sigma:g}: {exc}", file=sys.stderr)
            rows.append((sigma, math.nan, math.nan, math.nan, math.nan, -1))
    write_csv(out / "ber_sigma.csv", "ber-sigma",
              ["sigma_rad", "ber_analytic", "ber_mc", "ci_lo", "ci_hi", "n_th"], rows)
    if plot:
        xs = [r[0] for r in rows]
        _plot(out / "ber_sigma.svg", xs, {"analytic": [r[1] for r in rows], "MC": [r[2] for r in rows]},
              "jitter standard deviation (rad)", "BER", logy=True)
    return [out / "ber_sigma.csv"]


def cmd_ber_range(scen, out, plot=True):
    geom, params, det, spec, cfg = scen.geometry, scen.channel, scen.detector, scen.jitter, scen.mc
    rows = []
    for i, r in enumerate(_sweep_values(scen, "range_m", RANGE_SWEEP)):
        point_cfg = McConfig(cfg.seed + i, cfg.n_samples, cfg.n_symbols, cfg.bins, cfg.workers)
        g = LinkGeometry(float(r), *geom.angles, geom.alpha_t, geom.alpha_r)
        try:
            pej, pe, _, est = _ber_point(g, params, det, spec, point_cfg)
            rows.append((r, pej, pe, est.ber, est.ci_lo, est.ci_hi))
        except NonSmoothPointError as exc:
            print(f"range={r:g} m: {exc}", file=sys.stderr)
            rows.append((r, math.nan, math.nan, math.nan, math.nan, math.nan))
    write_csv(out / "ber_range.csv", "ber-range",
              ["range_m", "ber_jitter", "ber_nojitter", "ber_mc", "ci_lo", "ci_hi"], rows)
    if plot:
        xs = [row[0] for row in rows]
        _plot(out / "ber_range.svg", xs, {"with jitter": [row[1] for row in rows],
                                          "without jitter": [row[2] for row in rows],
                                          "MC": [row[3] for row in rows]},
              "range (m)", "BER", logy=True)
    return [out / "ber_range.csv"]


def cmd_validate():
    from .validate import run_suite
    return run_suite()


def build_parser():
    parser = argparse.ArgumentParser(prog="uvjitter", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=["pdf", "ber-sigma", "ber-range", "validate"])
    parser.add_argument("--config", type=Path, help="scenario file (baseline link if omitted)")
    parser.add_argument("--out", type=Path, default=Path("."), help="output directory")
    parser.add_argument("--seed", type=int, help="override [mc] seed")
    parser.add_argument("--workers", type=int, help="override [mc] workers")
    parser.add_argument("--no-plot", action="store_true", help="skip SVG output")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "validate":
        return 0 if cmd_validate() else 1
    try:
        scen = load_scenario(args.config) if args.config else Scenario()
        if args.seed is not None:
            scen = scen.replace("mc", "seed", args.seed & 0xFFFFFFFFFFFFFFFF)
        if args.workers is not None:
            scen = scen.replace("mc", "workers", args.workers)
        args.out.mkdir(parents=True, exist_ok=True)
        command = {"pdf": cmd_pdf, "ber-sigma": cmd_ber_sigma, "ber-range": cmd_ber_range}[args.command]
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            files = command(scen, args.out, plot=not args.no_plot)
    except UvJitterError as exc:
        print(f"uvjitter: error: {exc}", file=sys.stderr)
        return 2
    for f in files:
        print(f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
