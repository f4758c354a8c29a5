"""Command-line entry point ``sim``.

Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .config import PRESETS, ConfigError, emit_config, load_config, render_device_table
from .dynamics import IntegrationError
from .protocol import make_named_state, run_protocol
from .sweep import check_conditions, emit_csv, pair_label, run_sweep, sweep_params

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2
METHOD_CHOICES = {"full": "full_lindblad", "unitary": "full_unitary", "effective": "effective"}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sim", description="Coupler-mediated register swap simulator")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="single protocol run for each configured state pair")
    p.add_argument("--config", required=True, help="JSON config path or preset name")
    p.add_argument("--method", choices=sorted(METHOD_CHOICES), default=None)
    p.add_argument("--crosstalk", type=float, default=None, help="uniform crosstalk as a fraction of g")
    p.add_argument("--alpha", type=float, default=None, help="rebuild detunings at this alpha")

    p = sub.add_parser("sweep", help="fidelity versus alpha, written as CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="CSV path (defaults to the config's output field)")

    p = sub.add_parser("check-conditions", help="dispersive and pair-isolation conditions")
    p.add_argument("--config", required=True)
    p.add_argument("--margin", type=float, default=1.0, help="required factor over the couplings")
    p.add_argument("--alpha", type=float, default=None)

    p = sub.add_parser("presets", help="built-in parameter sets")
    psub = p.add_subparsers(dest="action", required=True)
    psub.add_parser("list")
    show = psub.add_parser("show")
    show.add_argument("name")
    show.add_argument("--json", action="store_true", help="print the config document instead of the table")
    return parser


def _with_overrides(cfg, method=None, crosstalk=None):
    changes = {}
    if method is not None:
        changes["method"] = METHOD_CHOICES[method]
    if crosstalk is not None:
        changes["crosstalk"] = crosstalk
    return replace(cfg, **changes) if changes else cfg


def _simulate(args) -> int:
    cfg = _with_overrides(load_config(args.config), args.method, args.crosstalk)
    if args.alpha is not None:
        params = sweep_params(cfg, args.alpha)
    elif cfg.crosstalk > 0:
        params = cfg.params.with_uniform_crosstalk(cfg.crosstalk)
    else:
        params = cfg.params
    n = params.n_pairs
    print(f"{'state_pair':<14} {'fidelity':>10} {'avg_pe':>10} {'swap_ns':>10}  method")
    for kind_a, kind_b in cfg.state_pairs:
        res = run_protocol(
            params,
            make_named_state(kind_a, n),
            make_named_state(kind_b, n),
            method=cfg.method,
            crosstalk=bool(params.crosstalk),
            fock_levels=cfg.fock_levels,
            integrator=cfg.integrator,
        )
        print(
            f"{pair_label(kind_a, kind_b):<14} {res.fidelity:>10.6f} {res.avg_coupler_excitation:>10.6f} "
            f"{res.swap_time * 1e9:>10.4f}  {res.method}"
        )
    return EXIT_OK


def _sweep(args) -> int:
    cfg = load_config(args.config)
    out = args.out or cfg.output
    if not out:
        raise ConfigError("no output path: pass --out or set 'output' in the config")
    result = run_sweep(cfg)
    emit_csv(result, out)
    for label, peak in result.peaks().items():
        print(f"{label:<14} peak F = {peak.fidelity:.6f} at alpha = {peak.alpha:.4g} (avg P_e {peak.avg_pe:.4f})")
    print(f"wrote {len(result.rows)} rows to {out}")
    if result.errors:
        for r in result.errors:
            print(f"error at alpha={r.alpha:g} {r.state_pair}: {r.error}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def _check(args) -> int:
    cfg = load_config(args.config)
    print(check_conditions(cfg, args.margin, args.alpha))
    return EXIT_OK


def _presets(args) -> int:
    if args.action == "list":
        for name, cfg in PRESETS.items():
            print(f"{name:<18} {cfg.task:<9} {len(cfg.state_pairs)} state pairs")
        return EXIT_OK
    if args.name not in PRESETS:
        raise ConfigError(f"unknown preset {args.name!r}; available: {', '.join(PRESETS)}")
    cfg = PRESETS[args.name]
    print(emit_config(cfg) if args.json else render_device_table(cfg), end="\n" if not args.json else "")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    handler = {"simulate": _simulate, "sweep": _sweep, "check-conditions": _check, "presets": _presets}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationError, FloatingPointError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
