"""Command-line front end: presets and custom JSON configs to CSV/JSON results.

Subcommands: emission-pattern, cavity-sweep, hbt, cross-corr, throughput.
Every run is deterministic given (config, seed); all outputs land in --out.
Exit codes: 0 success, 2 usage/config error, 3 numerical failure.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import dipole, hbt, qd
from .designer import (
    CavityDesign,
    geometry_for,
    optimize_top_mirror,
    sweep_bottom_mirror,
    write_sweep_csvs,
)
from .errors import InvalidInput, NumericalFailure, UnsupportedInput
from .multilayer import DESIGN_WAVELENGTH_NM, LayerStack
from .presets import available_presets, load_preset

EXIT_USAGE = 2
EXIT_NUMERICAL = 3


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _geometry_from_config(config):
    if "homogeneous" in config:
        n = config["homogeneous"].get("refractive_index", 1.0)
        lam = config["homogeneous"].get("vacuum_wavelength", DESIGN_WAVELENGTH_NM)
        half = LayerStack(n, (), n)
        source = dipole.DipoleSource(lam, n, lam, lam)
        return dipole.EmissionGeometry(half, half, source), None
    if "design" not in config:
        raise InvalidInput("emission-pattern config needs a 'design' or 'homogeneous' block")
    design = CavityDesign(**config["design"])
    return geometry_for(design), design


def cmd_emission_pattern(config, out_dir):
    geometry, design = _geometry_from_config(config)
    pattern_cfg = config.get("pattern", {})
    na = config.get(
        "numerical_aperture", design.numerical_aperture if design else 0.5
    )
    spectrum = dipole.emission_pattern(
        geometry,
        angular_resolution=pattern_cfg.get("angular_resolution", 0.25),
        include_guided_spike=pattern_cfg.get("include_guided_spike", False),
    )
    csv_path = os.path.join(out_dir, "emission_pattern.csv")
    spectrum.to_csv(csv_path)
    eta = dipole.direct_collection_efficiency(geometry, na)
    summary = {
        "collection_efficiency": eta,
        "numerical_aperture": na,
        "total_power": spectrum.total_power,
        "guided_power": spectrum.guided_power,
        "radiated_power": spectrum.radiated_power(),
        "outputs": ["emission_pattern.csv"],
    }
    _write_json(os.path.join(out_dir, "summary.json"), summary)
    print(f"eta(NA={na:g}) = {100.0 * eta:.4f}%")
    return 0


def cmd_cavity_sweep(config, out_dir):
    study = config.get("study", "bottom")
    if study == "bottom":
        max_periods = config.get("max_periods", 25)
        if max_periods < 1:
            raise InvalidInput(f"max_periods must be >= 1, got {max_periods}")
        nas = config.get("numerical_apertures", [0.5])
        results = sweep_bottom_mirror(max_periods, nas)
        paths = write_sweep_csvs(out_dir, "fig5_geometry", results)
        summary = {}
        for na, res in results.items():
            summary[f"NA={na:g}"] = {
                "argmax_periods": res.best_parameter,
                "best_efficiency": res.best_efficiency,
                "asymptote_efficiency": res.efficiencies[-1],
            }
            print(
                f"NA={na:g}: argmax N={res.best_parameter}, "
                f"eta={100.0 * res.best_efficiency:.4f}%"
            )
    elif study == "top":
        res = optimize_top_mirror(
            bottom_periods=config.get("bottom_periods", 12),
            max_top=config.get("max_top", 10),
            numerical_aperture=config.get("numerical_aperture", 0.5),
        )
        paths = write_sweep_csvs(out_dir, "top_mirror_geometry", res)
        summary = {
            "argmax_top_periods": res.best_parameter,
            "best_efficiency": res.best_efficiency,
        }
        print(
            f"argmax top periods = {res.best_parameter}, "
            f"eta = {100.0 * res.best_efficiency:.4f}%"
        )
    else:
        raise InvalidInput(f"study must be 'bottom' or 'top', got {study!r}")
    summary["outputs"] = [os.path.basename(p) for p in paths]
    _write_json(os.path.join(out_dir, "summary.json"), summary)
    return 0


def _record_from_config(config, seed):
    source = config.get("source", "qd")
    if source == "qd":
        model = qd.QDModel(**config.get("model", {}))
        drive = qd.DriveProgram(**config.get("drive", {}))
        return qd.simulate(model, drive, seed), model, drive
    if source == "poisson_dc":
        p = config.get("poisson", {})
        return (
            qd.poisson_photon_record(p["rate_per_ns"], p["duration"], seed),
            None,
            None,
        )
    if source == "poisson_pulsed":
        p = config.get("poisson", {})
        return (
            qd.pulsed_poisson_record(
                p["repetition_rate"],
                p["mean_photons_per_pulse"],
                p["duration"],
                seed,
                jitter_ns=p.get("jitter_ns", 0.05),
            ),
            None,
            None,
        )
    raise InvalidInput(f"unknown source {source!r}")


def _detectors_from_config(config, record):
    det_cfg = dict(config.get("detectors", {}))
    ratio = config.get("noise_to_signal_ratio")
    target = config.get("target_g2_zero")
    if target is not None:
        if not 0.0 <= target < 1.0:
            raise InvalidInput(f"target_g2_zero must be in [0, 1), got {target}")
        # invert g2 = (2x + x^2) / (1 + x)^2 for the noise/signal ratio x
        ratio = 1.0 / np.sqrt(1.0 - target) - 1.0
    if ratio is not None:
        line = config.get("line_filter")
        signal_per_ns = len(record.times(line)) / record.duration
        det_cfg["dark_rate"] = ratio * signal_per_ns * 1e9
    return hbt.DetectorPair(**det_cfg), ratio


def cmd_hbt(config, out_dir, seed):
    record, model, drive = _record_from_config(config, seed)
    detectors, noise_ratio = _detectors_from_config(config, record)
    line = config.get("line_filter")
    clicks_a, clicks_b = hbt.detect(
        record, detectors, seed + 1, line_filter_a=line, line_filter_b=line
    )
    corr_cfg = config["correlation"]
    hist = hbt.correlate(
        clicks_a,
        clicks_b,
        corr_cfg["window"],
        corr_cfg["bin_width"],
        record.duration,
        source_lines=(line, line),
    )
    hist.to_csv(os.path.join(out_dir, "histogram.csv"))
    outputs = ["histogram.csv"]

    signal_per_ns = len(record.times(line)) / record.duration
    noise_per_ns = 2.0 * detectors.noise_rate_per_arm
    summary = {
        "n_clicks_a": int(hist.n_a),
        "n_clicks_b": int(hist.n_b),
        "signal_rate_per_ns": signal_per_ns,
        "noise_rate_per_ns": noise_per_ns,
        "g2_zero_measured": hist.g2_at(0.0),
        "g2_zero_eq1_prediction": hbt.g2_zero_closed_form(
            signal_per_ns, noise_per_ns, 0.0
        ),
    }
    if noise_ratio is not None:
        summary["noise_to_signal_ratio"] = noise_ratio

    analysis = config.get("analysis", {})
    if "repetition_rate" in analysis:
        areas = hbt.peak_area_analysis(
            hist, analysis["repetition_rate"], m_far=analysis.get("m_far", 10)
        )
        areas.to_csv(os.path.join(out_dir, "peak_areas.csv"))
        outputs.append("peak_areas.csv")
        summary["peak_area_zero"] = areas.area(0)
        summary["peak_area_one"] = areas.area(1)
    fit_cfg = analysis.get("decay_fit")
    if fit_cfg and drive is not None:
        centers, counts = qd.decay_profile(
            record, drive, line=fit_cfg.get("line", qd.LINE_X), bin_ps=fit_cfg.get("bin_ps", 50.0)
        )
        summary["fitted_decay_ns"] = qd.fit_decay_time(
            centers, counts, fit_cfg["t_start"], fit_cfg["t_stop"]
        )
    _write_json(os.path.join(out_dir, "summary.json"), summary)
    print(
        f"g2(0) measured = {summary['g2_zero_measured']:.4f}, "
        f"Eq.(1) prediction = {summary['g2_zero_eq1_prediction']:.4f}"
    )
    return 0


def cmd_cross_corr(config, out_dir, seed):
    lines = config.get("lines")
    if not lines or len(lines) != 2:
        raise InvalidInput("cross-corr config needs 'lines': [start_line, stop_line]")
    record, _, _ = _record_from_config(config, seed)
    detectors, _ = _detectors_from_config(config, record)
    corr_cfg = config["correlation"]
    hist = hbt.cross_correlate_lines(
        record,
        lines[0],
        lines[1],
        detectors,
        seed + 1,
        corr_cfg["window"],
        corr_cfg["bin_width"],
    )
    hist.to_csv(os.path.join(out_dir, "histogram.csv"))
    g2 = hist.g2()
    pos = hist.tau_centers > 0
    summary = {
        "lines": list(lines),
        "n_clicks_a": int(hist.n_a),
        "n_clicks_b": int(hist.n_b),
        "g2_max_positive_tau": float(np.max(g2[pos])),
        "g2_min_negative_tau": float(np.min(g2[~pos])),
        "g2_zero": hist.g2_at(0.0),
        "outputs": ["histogram.csv"],
    }
    _write_json(os.path.join(out_dir, "summary.json"), summary)
    print(
        f"cross-correlation {lines[0]} -> {lines[1]}: "
        f"g2(0) = {summary['g2_zero']:.4f}"
    )
    return 0


def cmd_throughput(config, out_dir):
    f = dict(config.get("factors", {}))
    if "rate_gain" not in f and "rate_from_mhz" in f:
        new, old = f.pop("rate_from_mhz")
        f["rate_gain"] = new / old
    if "qe_factor" not in f and "qe_window_ns" in f:
        f["qe_factor"] = qd.quantum_efficiency_factor(
            f.pop("qe_window_ns"), f.pop("qe_tau_ns")
        )
    ratio = qd.throughput_ratio(
        f["collection_gain"], f["rate_gain"], f["qe_factor"]
    )
    summary = {
        "collection_gain": f["collection_gain"],
        "rate_gain": f["rate_gain"],
        "qe_factor": f["qe_factor"],
        "throughput_ratio": ratio,
    }
    _write_json(os.path.join(out_dir, "summary.json"), summary)
    print(
        f"collection x{f['collection_gain']:g} * rate x{f['rate_gain']:g} * "
        f"QE x{f['qe_factor']:g} = {ratio:g}"
    )
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="speds",
        description="Planar-microcavity single-photon-diode simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("emission-pattern", "cavity-sweep", "hbt", "cross-corr", "throughput"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--preset", help=f"one of: {', '.join(available_presets())}")
        p.add_argument("--seed", type=int, help="override the config's seed")
        p.add_argument("--out", default=".", help="output directory")
    return parser


def _load_config(args):
    if args.config is None and args.preset is None:
        raise InvalidInput("provide --preset and/or --config")
    config = {}
    if args.preset is not None:
        config = load_preset(args.preset)
    if args.config is not None:
        with open(args.config) as fh:
            overrides = json.load(fh)
        config.update(overrides)
    declared = config.get("command")
    if declared is not None and declared != args.command:
        raise InvalidInput(
            f"config is for command {declared!r}, invoked as {args.command!r}"
        )
    return config


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args)
        os.makedirs(args.out, exist_ok=True)
        seed = args.seed if args.seed is not None else config.get("seed", 0)
        if args.command == "emission-pattern":
            return cmd_emission_pattern(config, args.out)
        if args.command == "cavity-sweep":
            return cmd_cavity_sweep(config, args.out)
        if args.command == "hbt":
            return cmd_hbt(config, args.out, seed)
        if args.command == "cross-corr":
            return cmd_cross_corr(config, args.out, seed)
        if args.command == "throughput":
            return cmd_throughput(config, args.out)
        raise InvalidInput(f"unknown command {args.command!r}")
    except (
        InvalidInput,
        UnsupportedInput,
        KeyError,
        TypeError,
        FileNotFoundError,
        json.JSONDecodeError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalFailure, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
