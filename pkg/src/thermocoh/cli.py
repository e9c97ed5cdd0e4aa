"""Command-line entry point: ``thermocoh simulate`` and ``thermocoh derive``.

Exit status: 0 on success, 2 if some sweep points failed, 1 on
configuration or usage errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import __version__
from .errors import ThermocohError, UsageError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PARTIAL = 2


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="thermocoh", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a parameter sweep or figure preset")
    sim.add_argument("--config", type=Path, help="scenario TOML file")
    sim.add_argument("--preset", help="figure preset supplying defaults (e.g. fig2a)")
    sim.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    sim.add_argument("--format", choices=("csv", "json"), default="json", help="peak table format")
    sim.add_argument("--backend", choices=("unitary", "lindblad"))
    sim.add_argument("--workers", type=int, help="worker processes (default: $THERMOCOH_WORKERS or CPU count)")
    sim.add_argument("--tmax", type=float, help="time horizon in units of 1/omega_m")
    sim.add_argument("--samples", type=int, help="number of output times")
    sim.add_argument("--list-presets", action="store_true", help="print preset names and exit")

    der = sub.add_parser("derive", help="coupling constants from circuit parameters")
    der.add_argument("--config", type=Path, required=True, help="circuit TOML file")
    der.add_argument("--out", type=Path, help="write JSON here instead of stdout")
    return ap


def _simulate(args) -> int:
    from . import sweep

    if args.list_presets:
        print("\n".join(sweep.PRESET_NAMES))
        return EXIT_OK
    if args.config is None and args.preset is None:
        raise UsageError("simulate needs --config and/or --preset")
    if args.config is not None:
        cfg = sweep.scenario_from_config(args.config, args.preset)
    else:
        cfg = sweep.preset(args.preset)
    changes = {}
    if args.backend:
        changes["backend"] = args.backend
    if args.tmax is not None:
        changes["horizon"] = args.tmax
    if args.samples is not None:
        changes["samples"] = args.samples
    if changes:
        cfg = cfg.replace(**changes)
    result = sweep.run_scenario(cfg, workers=args.workers)
    for path in result.write(args.out, args.format):
        print(path)
    failed = [r for r in result.rows if not r.ok]
    for r in failed:
        detail = r.error["message"] if r.error else r.status
        print(f"point {cfg.axis}={r.axis_value!r} variant={r.variant!r}: {detail}", file=sys.stderr)
    return EXIT_PARTIAL if failed else EXIT_OK


_DERIVED_UNITS = {
    "g0": "rad/s", "theta0": "rad", "theta": "rad", "g_x": "rad/s",
    "g_z": "rad/s", "g_m": "rad/s", "omega_q": "rad/s",
}


def _derive(args) -> int:
    from .circuit import derive_couplings
    from .config import load, parse_circuit

    data, loc = load(args.config)
    circuit, omega_m = parse_circuit(data, loc)
    d = derive_couplings(circuit)
    doc = {
        "circuit": dataclasses.asdict(circuit),
        "near_degenerate": circuit.near_degenerate,
        "couplings": dataclasses.asdict(d),
        "units": _DERIVED_UNITS,
    }
    if omega_m is not None:
        p = d.to_system_params(omega_m) if d.g0 >= 0 else None
        doc["omega_m"] = omega_m
        doc["normalized"] = None if p is None else {
            "omega_q": p.omega_q, "g0": p.g0, "theta": p.theta, "g_x": p.g_x, "g_z": p.g_z, "g_m": p.g_m,
        }
    text = json.dumps(doc, indent=2) + "\n"
    width = max(len(k) for k in _DERIVED_UNITS)
    table = "\n".join(
        f"{k:<{width}}  {v!r:>24}  {_DERIVED_UNITS[k]}" for k, v in dataclasses.asdict(d).items()
    )
    if args.out is not None:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(text, encoding="utf-8", newline="\n")
        print(table)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return _simulate(args)
        return _derive(args)
    except ThermocohError as exc:
        print(f"thermocoh: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
