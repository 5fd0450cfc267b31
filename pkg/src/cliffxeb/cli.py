"""Command-line interface: ``cliffxeb run | mix | fit | gap | verify | export``."""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from importlib import metadata
from pathlib import Path

from .analysis import (FitInfeasibleError, MixRate, RateIndeterminateError, compare_to_digital_model,
                       fit_exponential, fit_with_offset, ideal_fixed_point, mixing_rate,
                       suggest_decay_window)
from .config import (ConfigError, LoadedConfig, experiment_from_fields, load_config, parse_window,
                     reproducibility_fields)
from .engine import ExperimentConfig, run_experiment
from .ensembles import EnsembleKind, EnsembleSpec, path_edges, read_edge_list
from .noise import NOISELESS, expected_cycle_fidelity
from .records import (MANIFEST_FILE, POINTS_FILE, SUMMARY_FILE, PointRecord, PointStore,
                      group_series, load_records, to_csv, to_svg)

EXIT_OK, EXIT_CONFIG, EXIT_FIT, EXIT_VERIFY = 0, 2, 3, 4


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def _now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())


def _write_json(path: Path, obj) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    os.replace(tmp, path)


def _window_arg(text):
    try:
        return parse_window(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _load(args) -> LoadedConfig:
    return load_config(args.config, seed=args.seed, workers=args.workers)


def _prepare_out_dir(out: Path, loaded: LoadedConfig, mode: str) -> dict:
    """Create or validate the manifest; refuses to mix results of different configs."""
    out.mkdir(parents=True, exist_ok=True)
    mpath = out / MANIFEST_FILE
    digest = loaded.config_hash()
    if mpath.exists():
        manifest = json.loads(mpath.read_text())
        if manifest.get("config_hash") != digest or manifest.get("mode") != mode:
            raise ConfigError("out_dir", f"{out} holds results of a different configuration")
        manifest["resumed_at"] = _now()
    else:
        manifest = {
            "mode": mode,
            "config": reproducibility_fields(loaded.experiment),
            "config_hash": digest,
            "master_seed": loaded.experiment.master_seed,
            "artifact_version": _version(),
            "created_at": _now(),
            "points": {},
        }
    _write_json(mpath, manifest)
    return manifest


def _execute(out: Path, exp: ExperimentConfig, manifest: dict, twin: bool, quiet: bool):
    store = PointStore(out / POINTS_FILE)
    done = store.completed()
    mpath = out / MANIFEST_FILE

    def skip(m, ideal):
        return (m, "ideal" if ideal else "noisy") in done

    def on_point(point, ideal):
        series = "ideal" if ideal else "noisy"
        store.append(PointRecord.from_point(exp, point, ideal))
        manifest["points"][f"{series}:{point.m}"] = "complete"
        _write_json(mpath, manifest)
        if not quiet:
            print(f"  {series:5s} m={point.m:4d}  q={point.q_hat:.6g} +/- {point.stderr:.3g}", file=sys.stderr)

    run_experiment(exp, skip=skip, on_point=on_point, noiseless_twin=twin)
    manifest["completed_at"] = _now()
    _write_json(mpath, manifest)
    return store.load()


def _fit_summary(records, window, p_dem=None, mix: MixRate | None = None) -> dict:
    noisy = [r.to_point() for r in records if r.series == "noisy"]
    fit = fit_exponential(noisy, window)
    out = {"fit": fit.as_dict()}
    try:
        free = fit_with_offset(noisy, fit.window, fit)
        out["free_offset"] = {"A": free.A, "A_stderr": free.A_stderr, "p": free.p, "p_stderr": free.p_stderr}
    except (FitInfeasibleError, RuntimeError, ValueError) as exc:
        out["free_offset"] = {"error": str(exc)}
    if p_dem is not None:
        out["p_dem"] = p_dem
        if mix is not None:
            out["comparison"] = compare_to_digital_model(fit, p_dem, mix).as_dict()
    return out


def cmd_run(args) -> int:
    loaded = _load(args)
    out = Path(args.out_dir)
    manifest = _prepare_out_dir(out, loaded, "run")
    exp = loaded.experiment
    records = _execute(out, exp, manifest, args.twin, args.quiet)
    summary = {"config_hash": loaded.config_hash(),
               "p_dem": expected_cycle_fidelity(exp.ensemble, exp.noise),
               "points": len(records)}
    window = args.window or loaded.window
    try:
        summary.update(_fit_summary(records, window, summary["p_dem"]))
    except FitInfeasibleError as exc:
        summary["fit"] = {"error": str(exc)}
    _write_json(out / SUMMARY_FILE, summary)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_mix(args) -> int:
    loaded = _load(args)
    if loaded.noise_keys_set and not loaded.experiment.noise.is_noiseless:
        print("warning: [noise] keys are ignored by mix; running noiseless", file=sys.stderr)
    exp = loaded.experiment
    exp = ExperimentConfig(exp.ensemble, NOISELESS, exp.cycle_counts, exp.circuits, exp.shots,
                           exp.master_seed, exp.workers, exp.resim_clean)
    loaded = LoadedConfig(exp, loaded.window, False, loaded.source)
    out = Path(args.out_dir)
    manifest = _prepare_out_dir(out, loaded, "mix")
    records = _execute(out, exp, manifest, False, args.quiet)
    points = [r.to_point() for r in records]
    n = exp.ensemble.n
    window = args.window
    if window is None:
        suggestion = suggest_decay_window(points, n)
        window = (points[0].m, suggestion[0]) if suggestion else None
    summary = {"target": ideal_fixed_point(n), "window": list(window) if window else None,
               "decay_window_suggestion": suggest_decay_window(points, n)}
    try:
        mix = mixing_rate(points, n, window)
    except (RateIndeterminateError, FitInfeasibleError) as exc:
        summary["error"] = str(exc)
        _write_json(out / SUMMARY_FILE, summary)
        print(f"rate indeterminate: {exc}", file=sys.stderr)
        return EXIT_FIT
    summary.update({"r": mix.r, "r_stderr": mix.r_stderr, "c": mix.c, "points_used": mix.points_used,
                    "r_ci95": [mix.r - 1.96 * mix.r_stderr, mix.r + 1.96 * mix.r_stderr]})
    _write_json(out / SUMMARY_FILE, summary)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


def _mix_from(source) -> MixRate:
    try:
        return MixRate(float(source), 0.0, (0, 0), 0.0, 0)
    except ValueError:
        pass
    path = Path(source)
    summary = json.loads((path / SUMMARY_FILE if path.is_dir() else path).read_text())
    if "r" not in summary:
        raise ConfigError("mix", f"{source} has no mixing rate")
    return MixRate(summary["r"], summary.get("c", 0.0), tuple(summary.get("window") or (0, 0)),
                   summary.get("r_stderr", 0.0), summary.get("points_used", 0))


def _p_dem_from_results(path: Path):
    mpath = (path if path.is_dir() else path.parent) / MANIFEST_FILE
    if not mpath.exists():
        return None
    exp = experiment_from_fields(json.loads(mpath.read_text())["config"])
    return expected_cycle_fidelity(exp.ensemble, exp.noise)


def cmd_fit(args) -> int:
    path = Path(args.results)
    records = load_records(path)
    p_dem = args.p_dem if args.p_dem is not None else _p_dem_from_results(path)
    mix = _mix_from(args.mix) if args.mix is not None else None
    try:
        summary = _fit_summary(records, args.window, p_dem, mix)
    except FitInfeasibleError as exc:
        print(f"fit infeasible: {exc}", file=sys.stderr)
        return EXIT_FIT
    if args.json:
        print(json.dumps(summary, indent=2, sort_keys=True))
    else:
        f = summary["fit"]
        print(f"p = {f['p']:.6f} +/- {f['p_stderr']:.2g}   B = {f['B']:.4g}   "
              f"window {f['window'][0]}:{f['window'][1]}  ({f['points_used']} points)")
        fo = summary["free_offset"]
        if "A" in fo:
            print(f"free-offset diagnostic: A = {fo['A']:.3g} +/- {fo['A_stderr']:.2g}")
        if p_dem is not None:
            print(f"digital error model p_dem = {p_dem:.6f}")
        if "comparison" in summary:
            c = summary["comparison"]
            print(f"mixing rate r = {c['mixing_rate']:.6f}: {'VALID' if c['valid'] else 'INVALID'}: {c['message']}")
    return EXIT_OK


def _gap_measure(args):
    from . import oracle

    if args.measure == "identity":
        return oracle.identity_measure()
    if args.measure == "uniform-c1":
        return oracle.uniform_c1_measure()
    kind = EnsembleKind(args.topology)
    if kind is EnsembleKind.GRID_2D:
        return EnsembleSpec.grid(args.rows or 1, args.cols or args.n)
    if kind is EnsembleKind.APPROX_TWIRL_GRAPH:
        edges = read_edge_list(args.edges) if args.edges else path_edges(args.n)
        return EnsembleSpec.twirl_graph(edges, n=args.n, k=args.k)
    return EnsembleSpec(kind, args.n, k=args.k)


def cmd_gap(args) -> int:
    from . import oracle

    n = 1 if args.measure == "uniform-c1" else args.n
    if n not in (1, 2):
        raise ConfigError("n", "spectral gap analysis supports n <= 2")
    T = oracle.build_twirl_matrix(_gap_measure(args), n)
    s = oracle.singular_values(T)
    try:
        sigma3 = oracle.third_singular_value(T)
    except oracle.ConstructionError as exc:
        print(f"construction error: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    report = {"n": n, "measure": args.measure, "topology": args.topology, "top_singular_values": s[:4].tolist(),
              "sigma3": sigma3, "gapped": sigma3 < 1 - 1e-6}
    print(json.dumps(report, indent=2, sort_keys=True) if args.json else
          f"sigma_1, sigma_2 = {s[0]:.12f}, {s[1]:.12f}\nsigma_3 = {sigma3:.6f}"
          f"  ({'gapped' if report['gapped'] else 'no gap'})")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verification import run_all

    results = run_all(quick=not args.full)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


def cmd_export(args) -> int:
    records = load_records(args.results)
    text = to_csv(records) if args.format == "csv" else to_svg(records)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cliffxeb", description="Clifford cross-entropy benchmarking")
    p.add_argument("--version", action="version", version=_version())
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("config")
        sp.add_argument("out_dir")
        sp.add_argument("--seed", type=int, help="override [seed] master_seed")
        sp.add_argument("--workers", type=int, help="override [budget] workers")
        sp.add_argument("--window", type=_window_arg, help="fit window lo:hi")
        sp.add_argument("--quiet", action="store_true")

    sp = sub.add_parser("run", help="run a noisy XEB sweep")
    common(sp)
    sp.add_argument("--twin", action="store_true", help="also run the noiseless twin series")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("mix", help="noiseless sweep and mixing rate")
    common(sp)
    sp.set_defaults(func=cmd_mix)

    sp = sub.add_parser("fit", help="fit a decay to saved results")
    sp.add_argument("results", help="output directory, points.jsonl or exported CSV")
    sp.add_argument("--window", type=_window_arg)
    sp.add_argument("--p-dem", type=float, help="digital-error-model rate (default: from the manifest)")
    sp.add_argument("--mix", help="mixing rate value or a mix output directory")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("gap", help="twirl-matrix spectrum for n <= 2")
    sp.add_argument("--measure", choices=["ensemble", "uniform-c1", "identity"], default="ensemble")
    sp.add_argument("--topology", default="chain1d", choices=[k.value for k in EnsembleKind])
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--rows", type=int)
    sp.add_argument("--cols", type=int)
    sp.add_argument("--k", type=int, default=2)
    sp.add_argument("--edges")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_gap)

    sp = sub.add_parser("verify", help="oracle cross-check suites")
    sp.add_argument("--full", action="store_true", help="full-size suites")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("export", help="export results as CSV or SVG")
    sp.add_argument("results")
    sp.add_argument("--format", choices=["csv", "svg"], default="csv")
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_export)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
