"""``orbit-duel`` command line.

Exit codes: 0 success, 2 configuration error, 3 numerical divergence, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import baselines
from .errors import ConfigError, NumericalDivergenceError, OrbitDuelError, TrackFormatError
from .scenario import (
    Scenario,
    emit_beampattern,
    emit_cdf,
    evaluate_frame,
    load_tracks,
    nulling_scene,
    parse_scenario,
    rate_quantiles,
    read_records,
    run_to_directory,
)

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGENCE, EXIT_IO = 0, 2, 3, 4


def _load(args) -> Scenario:
    s = parse_scenario(args.scenario) if args.scenario else Scenario()
    over = {}
    if getattr(args, "frames", None) is not None:
        over["frames"] = args.frames
    if getattr(args, "min_elevation", None) is not None:
        over["min_elevation"] = args.min_elevation
    if getattr(args, "seed", None) is not None:
        over["seed"] = args.seed
    if over:
        beams = tuple(f for f in s.beampattern_frames if f < over.get("frames", s.frames))
        s = replace(s, beampattern_frames=beams, **over)
    return s


def _overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("--frames", type=int, help="number of orbital frames")
    p.add_argument("--min-elevation", type=float, help="satellite elevation mask in degrees")
    p.add_argument("--seed", type=int, help="global seed")


def cmd_run(args) -> int:
    s = _load(args)
    result = run_to_directory(s, args.out, workers=args.workers)
    q = result.quantiles()
    for k in s.sat_counts:
        print(f"k={k}: median {q[k]['median']:.4f} bits/s/Hz "
              f"(25% {q[k]['p25']:.4f}, 75% {q[k]['p75']:.4f})")
    print(f"wrote {Path(args.out)}")
    return EXIT_OK


def cmd_cdf(args) -> int:
    try:
        records = read_records(args.records)
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"{args.records}: malformed records file ({exc})") from None
    if not records:
        raise ConfigError(f"{args.records}: no records")
    emit_cdf(records, args.out)
    for k in sorted({r.k for r in records}):
        q = rate_quantiles([r.rate for r in records if r.k == k])
        print(f"k={k}: median {q['median']:.4f}, 25% {q['p25']:.4f}, 75% {q['p75']:.4f}")
    return EXIT_OK


def cmd_beampattern(args) -> int:
    s = _load(args)
    if not 0 <= args.frame < s.frames:
        raise ConfigError(f"frame {args.frame} outside [0, {s.frames})")
    k = args.k if args.k is not None else s.sat_counts[-1]
    if k not in s.sat_counts:
        s = replace(s, sat_counts=tuple(sorted(set(s.sat_counts) | {k})))
    outcome = evaluate_frame(s, load_tracks(s), args.frame, keep=True)
    if k not in outcome.solutions:
        print(f"no visible satellites at frame {args.frame}", file=sys.stderr)
        return EXIT_CONFIG
    sol, jam = outcome.solutions[k]
    emit_beampattern(sol, s.tx_array, jam, args.out, s.budget.wavelength)
    print(f"frame {args.frame}, k={k}: rate {sol.rate:.4f} bits/s/Hz -> {args.out}")
    return EXIT_OK


def cmd_nulling(args) -> int:
    s = _load(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    scene = nulling_scene(s)
    radii = args.radii or s.nulling.radii
    points = baselines.capacity_vs_radius(scene, radii)
    baselines.write_sweep(points, out / "sweep.csv")
    bound = baselines.no_jammer_capacity(scene)
    gm = baselines.ground_gain_map(scene, s.nulling.extent, s.nulling.resolution)
    baselines.write_gain_map(gm, out / "gainmap.csv")
    with open(out / "nulling.json", "w", encoding="utf-8") as fh:
        json.dump({"no_jammer_capacity": bound, "sweep": points}, fh, indent=2)
        fh.write("\n")
    print(f"no-jammer bound {bound:.4f} bits/s/Hz")
    for r, c in points:
        print(f"  ring {r / 1e3:8.2f} km: {c:.6f} bits/s/Hz ({c / bound:.1%})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="orbit-duel", description="Multi-satellite uplink anti-jamming game.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a campaign and write all outputs")
    r.add_argument("scenario", nargs="?", help="scenario file (defaults if omitted)")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--workers", type=int, help="worker processes (capped by ORBIT_DUEL_THREADS)")
    _overrides(r)
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("cdf", help="rebuild cdf.csv from records.csv")
    c.add_argument("records", help="records.csv from a previous run")
    c.add_argument("--out", default="cdf.csv")
    c.set_defaults(func=cmd_cdf)

    b = sub.add_parser("beampattern", help="equilibrium beampatterns at one frame")
    b.add_argument("scenario", nargs="?")
    b.add_argument("--frame", type=int, default=0)
    b.add_argument("--k", type=int, help="satellite count (default: largest in the sweep)")
    b.add_argument("--out", default="beampattern.csv")
    _overrides(b)
    b.set_defaults(func=cmd_beampattern)

    n = sub.add_parser("nulling-sweep", help="single-satellite ring-jammer study")
    n.add_argument("scenario", nargs="?")
    n.add_argument("--out", required=True, help="output directory")
    n.add_argument("--radii", type=float, nargs="+", help="ring radii in meters")
    _overrides(n)
    n.set_defaults(func=cmd_nulling)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, TrackFormatError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalDivergenceError as exc:
        print(f"numerical divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OrbitDuelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
