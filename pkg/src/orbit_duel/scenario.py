"""Scenario files, Monte Carlo campaigns over orbital frames, and their outputs.

Scenario file grammar
---------------------
UTF-8 text, one ``key = value`` pair per line. ``#`` starts a comment
(outside quotes), blank lines are ignored and keys may appear at most once.
Values are numbers, bare or quoted strings, ``none``, or
comma-separated lists, optionally wrapped in ``[...]``. Every omitted key
takes its default; see ``KEYS`` for the full list.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import baselines, linalg
from .channel import DishAntenna, LinkBudget, PlanarArray, build_channel, dish_gain, steering_matrix
from .constellation import (
    GroundSite,
    SatelliteTrack,
    WalkerConfig,
    enu_from_look,
    ingest_tracks,
    propagate_walker,
    select_nearest,
)
from .errors import ConfigError, DomainError, GeometryError
from .game import GameSolution, SolverConfig, solve

RECORD_HEADER = (
    "frame", "k", "n_sats", "visible", "rate_bps_hz", "rank_q0", "rank_q1",
    "iterations", "converged", "br_gap", "stationarity", "frame_seed",
)
CDF_HEADER = ("k", "rate_bps_hz", "cdf")
BEAM_HEADER = ("az_deg", "el_deg", "tx_gain_db", "jam_gain_db")
RANK_THRESHOLD = 0.01
THREADS_ENV = "ORBIT_DUEL_THREADS"


# ---------------------------------------------------------------- scenario


@dataclass(frozen=True)
class NullingConfig:
    """Single-satellite ring study used for ``gainmap.csv`` and ``nulling-sweep``."""

    altitude: float = 550.0e3
    n_jammers: int = 4
    ring_radius: float = 50.0e3
    extent: float = 100.0e3
    resolution: float = 2.5e3
    radii: tuple = (1e3, 2e3, 3e3, 5e3, 7e3, 10e3, 15e3, 20e3, 30e3, 40e3, 50e3)

    def __post_init__(self):
        if not (self.altitude > 0 and self.ring_radius > 0 and self.extent > 0 and self.resolution > 0):
            raise ConfigError("nulling geometry values must be positive")
        if self.n_jammers < 0:
            raise ConfigError("nulling.n_jammers must be >= 0")
        r = tuple(float(x) for x in self.radii)
        if not r or any(x <= 0 for x in r) or any(b <= a for a, b in zip(r, r[1:])):
            raise ConfigError("nulling.radii must be positive and strictly ascending")
        object.__setattr__(self, "radii", r)


@dataclass(frozen=True)
class Scenario:
    site: GroundSite = field(default_factory=GroundSite)
    walker: WalkerConfig = field(default_factory=WalkerConfig)
    track_file: str | None = None
    frames: int = 400
    frame_interval: float = 15.0
    sat_counts: tuple = (1, 3, 5)
    min_elevation: float = 40.0
    seed: int = 0
    jammer_type: str = "dish"
    jammer_bearing_deg: float = 0.0
    jammer_distance_m: float = 1000.0
    budget: LinkBudget = field(default_factory=LinkBudget)
    tx_array: PlanarArray = field(default_factory=PlanarArray)
    sat_array: PlanarArray = field(default_factory=PlanarArray)
    jammer_array: PlanarArray = field(default_factory=PlanarArray)
    dish: DishAntenna = field(default_factory=DishAntenna)
    solver: SolverConfig = field(default_factory=lambda: SolverConfig(max_iter=300))
    beampattern_frames: tuple = (0,)
    nulling: NullingConfig = field(default_factory=NullingConfig)

    def __post_init__(self):
        counts = tuple(int(k) for k in self.sat_counts)
        if not counts or counts[0] < 1 or any(b <= a for a, b in zip(counts, counts[1:])):
            raise ConfigError("sat_counts must be positive and strictly ascending")
        object.__setattr__(self, "sat_counts", counts)
        object.__setattr__(self, "beampattern_frames", tuple(int(f) for f in self.beampattern_frames))
        if self.frames < 1:
            raise ConfigError("frames must be >= 1")
        if not self.frame_interval > 0.0:
            raise ConfigError("frame_interval must be positive")
        if not -90.0 <= self.min_elevation <= 90.0:
            raise ConfigError("min_elevation must lie in [-90, 90]")
        if self.jammer_type not in ("dish", "array"):
            raise ConfigError(f"jammer.type must be 'dish' or 'array', got {self.jammer_type!r}")
        if not self.jammer_distance_m > 0.0:
            raise ConfigError("jammer.distance_m must be positive")
        if any(f < 0 or f >= self.frames for f in self.beampattern_frames):
            raise ConfigError("beampattern_frames must lie in [0, frames)")

    @property
    def jammer_offset_enu(self) -> np.ndarray:
        b = math.radians(self.jammer_bearing_deg)
        d = self.jammer_distance_m
        return np.array([d * math.sin(b), d * math.cos(b), 0.0])

    def to_dict(self) -> dict:
        out = asdict(self)
        out["budget"].pop("noise_power_w", None)
        out["kappa_w"] = self.budget.kappa
        return out


def _float(v: str) -> float:
    try:
        x = float(v)
    except ValueError:
        raise ConfigError(f"expected a number, got {v!r}") from None
    if not math.isfinite(x):
        raise ConfigError(f"expected a finite number, got {v!r}")
    return x


def _int(v: str) -> int:
    try:
        x = float(v)
    except ValueError:
        raise ConfigError(f"expected an integer, got {v!r}") from None
    if not x.is_integer():
        raise ConfigError(f"expected an integer, got {v!r}")
    return int(x)


def _opt_float(v: str):
    return None if v.lower() in ("none", "auto", "") else _float(v)


def _list(conv: Callable) -> Callable:
    def parse(v: str) -> tuple:
        v = v.strip()
        if v.startswith("[") and v.endswith("]"):
            v = v[1:-1]
        items = [s.strip() for s in v.split(",") if s.strip()]
        return tuple(conv(_unquote(s)) for s in items)

    return parse


def _opt_str(v: str):
    return None if v.lower() == "none" or v == "" else v


# key -> (group, field, converter); group "" is the Scenario itself
KEYS: dict[str, tuple[str, str, Callable]] = {
    "frames": ("", "frames", _int),
    "frame_interval": ("", "frame_interval", _float),
    "sat_counts": ("", "sat_counts", _list(_int)),
    "min_elevation": ("", "min_elevation", _float),
    "seed": ("", "seed", _int),
    "track_file": ("", "track_file", _opt_str),
    "beampattern_frames": ("", "beampattern_frames", _list(_int)),
    "site.latitude": ("site", "latitude", _float),
    "site.longitude": ("site", "longitude", _float),
    "site.altitude": ("site", "altitude", _float),
    "walker.altitude": ("walker", "altitude", _float),
    "walker.inclination": ("walker", "inclination", _float),
    "walker.planes": ("walker", "planes", _int),
    "walker.sats_per_plane": ("walker", "sats_per_plane", _int),
    "walker.phasing": ("walker", "phasing", _int),
    "walker.epoch_offset": ("walker", "epoch_offset", _float),
    "walker.raan_offset": ("walker", "raan_offset", _float),
    "jammer.type": ("", "jammer_type", lambda v: v.lower()),
    "jammer.bearing_deg": ("", "jammer_bearing_deg", _float),
    "jammer.distance_m": ("", "jammer_distance_m", _float),
    "budget.carrier_hz": ("budget", "carrier_hz", _float),
    "budget.bandwidth_hz": ("budget", "bandwidth_hz", _float),
    "budget.noise_psd_dbm_hz": ("budget", "noise_psd_dbm_hz", _float),
    "budget.atmospheric_loss_db": ("budget", "atmospheric_loss_db", _float),
    "budget.tx0_power_dbm": ("budget", "tx0_power_dbm", _float),
    "budget.tx1_power_dbm": ("budget", "tx1_power_dbm", _float),
    "dish.diameter": ("dish", "diameter", _float),
    "dish.peak_gain_dbi": ("dish", "peak_gain_dbi", _float),
    "solver.step_size": ("solver", "step_size", _opt_float),
    "solver.tol": ("solver", "tol", _opt_float),
    "solver.max_iter": ("solver", "max_iter", _int),
    "solver.bisection_tol": ("solver", "bisection_tol", _float),
    "solver.eig_cutoff": ("solver", "eig_cutoff", _float),
    "solver.max_backtracks": ("solver", "max_backtracks", _int),
    "nulling.altitude": ("nulling", "altitude", _float),
    "nulling.n_jammers": ("nulling", "n_jammers", _int),
    "nulling.ring_radius": ("nulling", "ring_radius", _float),
    "nulling.extent": ("nulling", "extent", _float),
    "nulling.resolution": ("nulling", "resolution", _float),
    "nulling.radii": ("nulling", "radii", _list(_float)),
}
for _prefix, _group in (("tx", "tx_array"), ("sat", "sat_array"), ("jammer", "jammer_array")):
    KEYS[f"{_prefix}.rows"] = (_group, "rows", _int)
    KEYS[f"{_prefix}.cols"] = (_group, "cols", _int)
    KEYS[f"{_prefix}.spacing"] = (_group, "spacing", _float)
    KEYS[f"{_prefix}.element_gain_dbi"] = (_group, "element_gain_dbi", _float)


def _unquote(v: str) -> str:
    if len(v) >= 2 and v[0] == v[-1] and v[0] in "\"'":
        return v[1:-1]
    return v


def _strip_comment(line: str) -> str:
    quote = None
    for i, ch in enumerate(line):
        if quote:
            if ch == quote:
                quote = None
        elif ch in "\"'":
            quote = ch
        elif ch == "#":
            return line[:i]
    return line


def parse_scenario_text(text: str, source: str = "<scenario>") -> Scenario:
    """Parse scenario text; unknown keys and bad values raise ConfigError."""
    groups: dict[str, dict[str, Any]] = {}
    seen: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key '{key}'")
        if key in seen:
            raise ConfigError(f"{source}:{lineno}: duplicate key '{key}'")
        seen.add(key)
        group, name, conv = KEYS[key]
        try:
            groups.setdefault(group, {})[name] = conv(_unquote(value))
        except ConfigError as exc:
            raise ConfigError(f"{source}:{lineno}: {key}: {exc}") from None
    return build_scenario(groups)


def build_scenario(groups: dict[str, dict[str, Any]]) -> Scenario:
    base = Scenario()
    top = dict(groups.get("", {}))
    try:
        for f in fields(Scenario):
            if f.name in groups:
                top[f.name] = replace(getattr(base, f.name), **groups[f.name])
        return replace(base, **top)
    except ConfigError:
        raise
    except (DomainError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def parse_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    s = parse_scenario_text(text, source=str(path))
    if s.track_file and not Path(s.track_file).is_absolute():
        s = replace(s, track_file=str(path.parent / s.track_file))
    return s


# ---------------------------------------------------------------- seeding

_MASK = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def frame_seed(seed: int, frame: int) -> int:
    """Per-frame seed, independent of the order in which frames are evaluated."""
    return splitmix64(splitmix64(seed & _MASK) ^ (frame & _MASK))


# ---------------------------------------------------------------- campaign


@dataclass(frozen=True)
class FrameRecord:
    frame: int
    k: int
    n_sats: int
    visible: bool
    rate: float
    rank_q0: int
    rank_q1: int
    iterations: int
    converged: bool
    br_gap: float
    stationarity: float
    frame_seed: int


@dataclass(eq=False)
class CampaignResult:
    scenario: Scenario
    records: list

    def rates(self, k: int) -> np.ndarray:
        return np.array([r.rate for r in self.records if r.k == k], dtype=float)

    def cdf(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        return empirical_cdf(self.rates(k))

    def quantiles(self) -> dict[int, dict[str, float]]:
        return {k: rate_quantiles(self.rates(k)) for k in self.scenario.sat_counts}

    def summary(self) -> dict:
        out: dict[str, Any] = {"quantiles": {}, "convergence": {}, "rank_q0": {}, "visibility": {}}
        for k in self.scenario.sat_counts:
            recs = [r for r in self.records if r.k == k]
            rates = np.array([r.rate for r in recs])
            vis = [r for r in recs if r.visible]
            q = rate_quantiles(rates)
            q["mean"] = float(np.mean(rates)) if rates.size else float("nan")
            q["frac_above_1"] = float(np.mean(rates > 1.0)) if rates.size else float("nan")
            out["quantiles"][str(k)] = q
            its = np.array([r.iterations for r in vis]) if vis else np.zeros(0)
            out["convergence"][str(k)] = {
                "converged_fraction": float(np.mean([r.converged for r in vis])) if vis else float("nan"),
                "median_iterations": float(np.median(its)) if its.size else float("nan"),
                "max_iterations": int(its.max()) if its.size else 0,
                "max_br_gap": float(max((r.br_gap for r in vis), default=float("nan"))),
                "max_stationarity": float(max((r.stationarity for r in vis), default=float("nan"))),
            }
            hist: dict[str, int] = {}
            for r in recs:
                hist[str(r.rank_q0)] = hist.get(str(r.rank_q0), 0) + 1
            out["rank_q0"][str(k)] = dict(sorted(hist.items(), key=lambda kv: int(kv[0])))
            out["visibility"][str(k)] = {
                "frames": len(recs),
                "invisible_frames": sum(not r.visible for r in recs),
                "short_frames": sum(r.visible and r.n_sats < k for r in recs),
            }
        out["records"] = len(self.records)
        out["config"] = self.scenario.to_dict()
        return out


def empirical_cdf(rates) -> tuple[np.ndarray, np.ndarray]:
    """Sorted rates and midpoint CDF values ``(i - 0.5) / N``."""
    x = np.sort(np.asarray(rates, dtype=float))
    n = x.size
    return x, (np.arange(1, n + 1) - 0.5) / max(n, 1)


def rate_quantiles(rates) -> dict[str, float]:
    r = np.asarray(rates, dtype=float)
    if r.size == 0:
        return {"median": float("nan"), "p25": float("nan"), "p75": float("nan")}
    p25, med, p75 = np.percentile(r, [25.0, 50.0, 75.0])
    return {"median": float(med), "p25": float(p25), "p75": float(p75)}


def load_tracks(s: Scenario) -> list[SatelliteTrack]:
    if s.track_file:
        tracks = ingest_tracks(s.track_file, s.frame_interval)
        short = [t.sat_id for t in tracks if t.n_frames < s.frames]
        if short:
            raise ConfigError(f"track file has fewer than {s.frames} frames for {short[0]}")
        return tracks
    return propagate_walker(s.walker, s.site, s.frames, s.frame_interval)


@dataclass(frozen=True)
class FrameOutcome:
    records: list
    solutions: dict  # k -> (GameSolution, jammer antenna); filled only on request


def _aim_dish(s: Scenario, tracks, frame) -> DishAntenna:
    off = s.jammer_offset_enu
    try:
        _, u = baselines.jammer_target(tracks, frame, off, s.min_elevation)
    except GeometryError:
        _, u = baselines.jammer_target(tracks, frame, off, 0.0)
    return s.dish.pointed_at(u)


def evaluate_frame(s: Scenario, tracks: Sequence[SatelliteTrack], frame: int, keep: bool = False) -> FrameOutcome:
    """Solve every ``k`` of the sweep at one frame, reusing the largest stack."""
    seed = frame_seed(s.seed, frame)
    b = s.budget
    sel = select_nearest(tracks, frame, s.sat_counts[-1], s.min_elevation)
    records, sols = [], {}
    if not sel:
        for k in s.sat_counts:
            records.append(FrameRecord(frame, k, 0, False, 0.0, 0, 0, 0, False, 0.0, 0.0, seed))
        return FrameOutcome(records, sols)

    off = s.jammer_offset_enu
    if s.jammer_type == "dish":
        jam = _aim_dish(s, tracks, frame)
    else:
        jam = s.jammer_array
    h0 = [build_channel(s.tx_array, s.sat_array, look, b, site_radius=s.site.radius).matrix for _, look in sel]
    h1 = [
        build_channel(jam, s.sat_array, look, b, tx_offset_enu=off, site_radius=s.site.radius).matrix
        for _, look in sel
    ]
    for k in s.sat_counts:
        m = min(k, len(sel))
        H0, H1 = np.vstack(h0[:m]), np.vstack(h1[:m])
        if s.jammer_type == "dish":
            sol = baselines.fixed_jammer_response(H0, H1, np.array([[b.e1]]), b.e0, b.kappa, s.solver)
        else:
            sol = solve(H0, H1, b.e0, b.e1, b.kappa, s.solver)
        records.append(
            FrameRecord(
                frame=frame, k=k, n_sats=m, visible=True, rate=float(sol.rate),
                rank_q0=linalg.effective_rank(sol.q0, RANK_THRESHOLD),
                rank_q1=linalg.effective_rank(sol.q1, RANK_THRESHOLD),
                iterations=sol.iterations, converged=sol.converged,
                br_gap=float(sol.br_gap), stationarity=float(sol.stationarity), frame_seed=seed,
            )
        )
        if keep:
            sols[k] = (sol, jam)
    return FrameOutcome(records, sols)


_WORKER: dict[str, Any] = {}


def _init_worker(s: Scenario, tracks) -> None:
    _WORKER["s"], _WORKER["tracks"] = s, tracks


def _work(frame: int) -> list:
    return evaluate_frame(_WORKER["s"], _WORKER["tracks"], frame).records


def worker_count(requested: int | None = None) -> int:
    n = requested if requested is not None else (os.cpu_count() or 1)
    cap = os.environ.get(THREADS_ENV)
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {cap!r}") from None
    return max(1, n)


def run_campaign(
    s: Scenario, tracks: Sequence[SatelliteTrack] | None = None, workers: int | None = None
) -> CampaignResult:
    """Evaluate every frame and sweep value; records come back in frame order."""
    tracks = load_tracks(s) if tracks is None else list(tracks)
    frames = range(s.frames)
    n = min(worker_count(workers), s.frames)
    if n <= 1:
        per_frame = [evaluate_frame(s, tracks, f).records for f in frames]
    else:
        with ProcessPoolExecutor(n, initializer=_init_worker, initargs=(s, tracks)) as pool:
            per_frame = list(pool.map(_work, frames, chunksize=max(1, s.frames // (4 * n))))
    return CampaignResult(scenario=s, records=[r for recs in per_frame for r in recs])


# ---------------------------------------------------------------- outputs


def _num(x: float) -> str:
    return repr(float(x))


def write_records(result: CampaignResult, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_HEADER)
        for r in result.records:
            w.writerow([
                r.frame, r.k, r.n_sats, int(r.visible), _num(r.rate), r.rank_q0, r.rank_q1,
                r.iterations, int(r.converged), _num(r.br_gap), _num(r.stationarity), r.frame_seed,
            ])


def read_records(path: str | Path) -> list[FrameRecord]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        if tuple(next(reader, ())) != RECORD_HEADER:
            raise ValueError(f"{path}: expected header {','.join(RECORD_HEADER)}")
        for row in reader:
            if not row:
                continue
            out.append(FrameRecord(
                frame=int(row[0]), k=int(row[1]), n_sats=int(row[2]), visible=row[3] == "1",
                rate=float(row[4]), rank_q0=int(row[5]), rank_q1=int(row[6]), iterations=int(row[7]),
                converged=row[8] == "1", br_gap=float(row[9]), stationarity=float(row[10]),
                frame_seed=int(row[11]),
            ))
    return out


def emit_cdf(result: CampaignResult | Sequence[FrameRecord], path: str | Path) -> None:
    """CSV ``k,rate_bps_hz,cdf`` with ascending rates per ``k``."""
    records = result.records if isinstance(result, CampaignResult) else list(result)
    if not records:
        raise ValueError("no records to summarize")
    ks = sorted({r.k for r in records})
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CDF_HEADER)
        for k in ks:
            x, c = empirical_cdf([r.rate for r in records if r.k == k])
            for xv, cv in zip(x, c):
                w.writerow([k, _num(xv), _num(cv)])


def read_cdf(path: str | Path) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    cols: dict[int, list[tuple[float, float]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        if tuple(next(reader, ())) != CDF_HEADER:
            raise ValueError(f"{path}: expected header {','.join(CDF_HEADER)}")
        for row in reader:
            if row:
                cols.setdefault(int(row[0]), []).append((float(row[1]), float(row[2])))
    return {k: (np.array([a for a, _ in v]), np.array([b for _, b in v])) for k, v in cols.items()}


def default_grid(step_deg: float = 2.0) -> tuple[np.ndarray, np.ndarray]:
    """Azimuth ``[0, 360)`` and elevation ``[40, 90]`` sample points in degrees."""
    az = np.arange(0.0, 360.0, step_deg)
    el = np.linspace(40.0, 90.0, int(round(50.0 / step_deg)) + 1)
    return az, el


def pattern_db(q, antenna, az, el, wavelength: float) -> np.ndarray:
    """``10 log10(a^H Q a / tr Q)`` over an ``(el, az)`` grid, shape ``(len(el), len(az))``.

    For a dish the pattern is its gain toward each direction.
    """
    az, el = np.asarray(az, dtype=float), np.asarray(el, dtype=float)
    ee, aa = np.meshgrid(el, az, indexing="ij")
    dirs = enu_from_look(aa.ravel(), ee.ravel(), 1.0)
    if isinstance(antenna, DishAntenna):
        off = np.degrees(np.arccos(np.clip(dirs @ np.asarray(antenna.boresight), -1.0, 1.0)))
        return np.asarray(dish_gain(antenna, off, wavelength), dtype=float).reshape(ee.shape)
    q = np.asarray(q, dtype=complex)
    tr = float(np.trace(q).real)
    a = steering_matrix(antenna, dirs, wavelength)
    if tr <= 0.0:
        return np.full(ee.shape, -np.inf)
    power = np.real(np.einsum("di,ij,dj->d", a.conj(), q, a)) / tr
    with np.errstate(divide="ignore"):
        return (10.0 * np.log10(np.maximum(power, 0.0))).reshape(ee.shape)


def emit_beampattern(
    solution: GameSolution,
    tx: PlanarArray,
    jammer: PlanarArray | DishAntenna,
    path: str | Path,
    wavelength: float,
    az=None,
    el=None,
) -> None:
    """CSV ``az_deg,el_deg,tx_gain_db,jam_gain_db`` of both equilibrium covariances."""
    if az is None or el is None:
        az, el = default_grid()
    tx_db = pattern_db(solution.q0, tx, az, el, wavelength)
    jam_db = pattern_db(solution.q1, jammer, az, el, wavelength)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BEAM_HEADER)
        for i, e in enumerate(el):
            for j, a in enumerate(az):
                w.writerow([_num(a), _num(e), _num(tx_db[i, j]), _num(jam_db[i, j])])


def read_beampattern(path: str | Path) -> np.ndarray:
    """Rows of ``(az, el, tx_gain_db, jam_gain_db)``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        if tuple(next(reader, ())) != BEAM_HEADER:
            raise ValueError(f"{path}: expected header {','.join(BEAM_HEADER)}")
        return np.array([[float(c) for c in row] for row in reader if row], dtype=float)


def nulling_scene(s: Scenario, ring_radius: float | None = None) -> baselines.RingJammerScene:
    n = s.nulling
    return baselines.RingJammerScene(
        altitude=n.altitude, ring_radius=ring_radius or n.ring_radius, n_jammers=n.n_jammers,
        sat_array=s.sat_array, jammer_dish=s.dish, budget=s.budget,
    )


def write_summary(result: CampaignResult, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(result.summary(), fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


def run_to_directory(s: Scenario, out: str | Path, workers: int | None = None) -> CampaignResult:
    """Run a campaign and write every output file into ``out``."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    tracks = load_tracks(s)
    result = run_campaign(s, tracks, workers)
    write_records(result, out / "records.csv")
    emit_cdf(result, out / "cdf.csv")
    k = s.sat_counts[-1]
    for f in s.beampattern_frames:
        outcome = evaluate_frame(s, tracks, f, keep=True)
        if k in outcome.solutions:
            sol, jam = outcome.solutions[k]
            emit_beampattern(sol, s.tx_array, jam, out / f"beampattern_{f}.csv", s.budget.wavelength)
    gm = baselines.ground_gain_map(nulling_scene(s), s.nulling.extent, s.nulling.resolution)
    baselines.write_gain_map(gm, out / "gainmap.csv")
    write_summary(result, out / "summary.json")
    return result


__all__ = [
    "CampaignResult", "FrameRecord", "NullingConfig", "Scenario", "emit_beampattern", "emit_cdf",
    "empirical_cdf", "evaluate_frame", "frame_seed", "parse_scenario", "parse_scenario_text",
    "rate_quantiles", "read_beampattern", "read_cdf", "read_records", "run_campaign",
    "run_to_directory", "splitmix64", "write_records",
]
