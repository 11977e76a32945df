"""Command-line entry point.

Subcommands: `wiener` (exact synthesis filter from a bank config),
`adapt` (adaptation run from an experiment config), `repro` (built-in
experiment presets) and `verify` (randomized property suites).

Exit codes: 0 success, 2 config error, 3 singular bank, 4 property
failure.  Human-readable summaries go to stdout; machine artifacts only
to files.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .harness import ExperimentConfig, PRESETS, run_experiment
from .properties import run_all
from .spectra import FilterBankSpec, InputPSD
from .wiener import SingularBankError, reconstruction_check, wiener_solve

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SINGULAR = 3
EXIT_PROPERTY = 4


class ConfigError(Exception):
    pass


def _load_json(path: Path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}:{e.colno}: invalid JSON: {e.msg}")


def _prepare_outdir(out: Path, filenames: list[str], force: bool) -> None:
    out.mkdir(parents=True, exist_ok=True)
    if force:
        return
    clashes = [f for f in filenames if (out / f).exists()]
    if clashes:
        raise ConfigError(
            f"refusing to overwrite {', '.join(clashes)} in {out} (use --force)")


def cmd_wiener(args) -> int:
    raw = _load_json(Path(args.config))
    try:
        fb = FilterBankSpec.from_json_dict(raw)
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"{args.config}: field 'fb': {e}" if "filters" not in raw
                          else f"{args.config}: {e}")
    if "input" in raw:
        from .harness import InputModel
        sx = InputModel.from_json_dict(raw["input"]).psd()
    else:
        sx = InputPSD.white()

    out = Path(args.out)
    _prepare_outdir(out, ["wiener.json", "residuals.csv"], args.force)
    try:
        ws = wiener_solve(fb, sx)
    except SingularBankError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_SINGULAR

    with open(out / "wiener.json", "w") as fh:
        json.dump(ws.to_json_dict(), fh, indent=2)
    verdict = "stable" if ws.stable else "UNSTABLE"
    print(f"Wiener synthesis filter: {ws.M}x{ws.L}, {verdict}")
    for p in ws.poles:
        print(f"  pole at {p:.6g} (|z| = {abs(p):.6g})")
    print(f"  identity residual |A S_vv - S_dv|: {ws.identity_residual:.3e}")
    if fb.is_maximally_decimated and ws.stable:
        rep = reconstruction_check(ws, fb, sx=sx, n_samples=20_000)
        rep.write_csv(out / "residuals.csv")
        print(f"  reconstruction residual (grid max): {rep.max_identity_residual:.3e}")
        print(f"  time-domain relative MSE: {rep.time_domain_mse:.3e}")
    print(f"wrote {out / 'wiener.json'}")
    return EXIT_OK


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    d = cfg.to_json_dict()
    if args.seed is not None:
        d["seed"] = args.seed
    if args.iters is not None:
        d["n_iters"] = args.iters
        d["snapshots"] = [k for k in d["snapshots"] if k <= args.iters] or (
            [args.iters] if args.iters > 0 else [])
    if getattr(args, "step", None) is not None:
        d["step"] = args.step
    return ExperimentConfig.from_json_dict(d)


def _run_and_write(cfg: ExperimentConfig, out: Path, force: bool) -> int:
    files = ["trace.csv", "taps_final.csv", "wiener.json", "metrics.json"]
    files += [f"taps_iter{k}.csv" for k in cfg.snapshots]
    _prepare_outdir(out, files, force)
    print(f"running {cfg.name}: {cfg.algorithm} step={cfg.step} "
          f"tap_len={cfg.tap_len} n_iters={cfg.n_iters} seed={cfg.seed}")
    try:
        result = run_experiment(cfg)
    except SingularBankError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_SINGULAR
    result.write(out)
    m = result.metrics
    if "steady_state_mse" in m:
        print(f"  steady-state MSE: {m['steady_state_mse']:.3e} "
              f"({m['final_mse_db_rel_initial']:.1f} dB vs initial)")
    if "tap_distance_rel" in m:
        print(f"  tap distance to Wiener: {m['tap_distance_rel']:.3e} relative")
    print(f"wrote result directory {out}")
    return EXIT_OK


def cmd_adapt(args) -> int:
    raw = _load_json(Path(args.config))
    try:
        cfg = ExperimentConfig.from_json_dict(raw)
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"{args.config}: {e}")
    cfg = _apply_overrides(cfg, args)
    return _run_and_write(cfg, Path(args.out), args.force)


def cmd_repro(args) -> int:
    cfg = PRESETS[args.preset]()
    cfg = _apply_overrides(cfg, args)
    return _run_and_write(cfg, Path(args.out), args.force)


def cmd_verify(args) -> int:
    results = run_all(seed=args.seed if args.seed is not None else 0,
                      quick=args.quick, inject_fault=args.inject_fault)
    for r in results:
        print(r.line())
    if all(r.passed for r in results):
        print("all properties passed")
        return EXIT_OK
    print("property failure", file=sys.stderr)
    return EXIT_PROPERTY


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ufbwiener",
        description="Matrix Wiener and adaptive synthesis filters for uniform filter banks")
    sub = p.add_subparsers(dest="command", required=True)

    pw = sub.add_parser("wiener", help="solve the exact synthesis filter for a bank")
    pw.add_argument("--config", required=True, help="FilterBankSpec JSON")
    pw.add_argument("--out", required=True, help="output directory")
    pw.add_argument("--force", action="store_true", help="overwrite existing outputs")
    pw.set_defaults(func=cmd_wiener)

    pa = sub.add_parser("adapt", help="run an adaptation experiment from a config")
    pa.add_argument("--config", required=True, help="ExperimentConfig JSON")
    pa.add_argument("--out", required=True)
    pa.add_argument("--seed", type=int)
    pa.add_argument("--iters", type=int)
    pa.add_argument("--step", type=float)
    pa.add_argument("--force", action="store_true")
    pa.set_defaults(func=cmd_adapt)

    pr = sub.add_parser("repro", help="reproduce a built-in experiment preset")
    pr.add_argument("preset", choices=sorted(PRESETS))
    pr.add_argument("--out", required=True)
    pr.add_argument("--seed", type=int)
    pr.add_argument("--iters", type=int)
    pr.add_argument("--step", type=float)
    pr.add_argument("--force", action="store_true")
    pr.set_defaults(func=cmd_repro)

    pv = sub.add_parser("verify", help="run the randomized property suites")
    pv.add_argument("--seed", type=int, default=0)
    pv.add_argument("--quick", action="store_true", help="reduced case counts")
    pv.add_argument("--inject-fault", action="store_true",
                    help="test-only: inject a wrong alias rotation; the suite must fail")
    pv.set_defaults(func=cmd_verify)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
