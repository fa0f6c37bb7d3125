"""Reference studies built on the channel model.

* A single nadir satellite receiving one ground user while a ring of dish
  jammers, all boresighted at the satellite, tries to drown it. The
  satellite uses the max-SINR (MVDR) receive beamformer ``w ~ P^-1 h0``.
* A fixed dish jammer against a multi-satellite uplink. With one jammer
  antenna the jammer's only freedom is its power, which it spends in full,
  so the game collapses to a single water-filling best response.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .channel import (
    DishAntenna,
    LinkBudget,
    PlanarArray,
    build_channel,
    db_to_linear,
    dish_gain,
    path_amplitude,
    satellite_frame,
    stack,
    steering_matrix,
    StackedChannel,
)
from .constellation import (
    EARTH_RADIUS_M,
    GroundSite,
    SatelliteTrack,
    enu_from_look,
    look_from_enu,
    require_visible,
    select_nearest,
)
from .errors import DomainError, GeometryError, ShapeError
from .game import GameSolution, SolverConfig, _Game

LN2 = math.log(2.0)

GAINMAP_HEADER = ("x_m", "y_m", "gain_db")
SWEEP_HEADER = ("radius_m", "capacity_bps_hz")


# ---------------------------------------------------------------- ring study


@dataclass(frozen=True)
class RingJammerScene:
    """One user at the origin, a satellite straight overhead, jammers on a ring.

    Ground points sit on a spherical Earth; ``(x, y)`` offsets are east and
    north great-circle displacements from the user. Jammer ``i`` sits at
    bearing ``ring_phase_deg + 360 i / n_jammers``.
    """

    altitude: float = 550.0e3
    ring_radius: float = 10.0e3
    n_jammers: int = 4
    ring_phase_deg: float = 0.0
    sat_array: PlanarArray = field(default_factory=PlanarArray)
    jammer_dish: DishAntenna = field(default_factory=DishAntenna)
    budget: LinkBudget = field(default_factory=LinkBudget)
    user_gain_dbi: float = 0.0
    earth_radius: float = EARTH_RADIUS_M

    def __post_init__(self):
        if not self.altitude > 0.0:
            raise DomainError("satellite altitude must be positive")
        if not self.ring_radius > 0.0:
            raise DomainError("ring radius must be positive")
        if self.n_jammers < 0:
            raise DomainError("jammer count must be >= 0")

    @property
    def satellite(self) -> np.ndarray:
        return np.array([0.0, 0.0, self.altitude])

    def with_radius(self, radius: float) -> "RingJammerScene":
        return replace(self, ring_radius=radius)

    def without_jammers(self) -> "RingJammerScene":
        return replace(self, n_jammers=0)

    def jammer_xy(self) -> np.ndarray:
        """Jammer ground offsets ``(east, north)`` in meters, shape ``(n_jammers, 2)``."""
        bearing = np.radians(self.ring_phase_deg + 360.0 * np.arange(self.n_jammers) / max(self.n_jammers, 1))
        return self.ring_radius * np.stack([np.sin(bearing), np.cos(bearing)], axis=1)

    def ground_enu(self, xy) -> np.ndarray:
        """Points on the sphere at great-circle offsets ``xy`` from the user, in user ENU."""
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        d = np.hypot(xy[:, 0], xy[:, 1])
        alpha = d / self.earth_radius
        with np.errstate(invalid="ignore", divide="ignore"):
            scale = np.where(d > 0.0, self.earth_radius * np.sin(alpha) / np.where(d > 0, d, 1.0), 1.0)
        up = self.earth_radius * (np.cos(alpha) - 1.0)
        return np.column_stack([xy[:, 0] * scale, xy[:, 1] * scale, up])

    def _frame(self) -> np.ndarray:
        return satellite_frame(self.satellite, self.earth_radius)

    def directions(self, xy) -> tuple[np.ndarray, np.ndarray]:
        """Unit directions (satellite frame) and ranges from the satellite to ground points."""
        v = self.ground_enu(xy) - self.satellite
        rng = np.linalg.norm(v, axis=1)
        return (v / rng[:, None]) @ self._frame().T, rng

    def channel(self, xy, tx_gain_dbi: float) -> np.ndarray:
        """Uplink channel vectors (rows) from ground points with the given TX gain."""
        dirs, rng = self.directions(xy)
        a = steering_matrix(self.sat_array, dirs, self.budget.wavelength)
        g = math.sqrt(float(db_to_linear(tx_gain_dbi)))
        coef = np.array([amp * np.exp(1j * ph) for amp, ph in (path_amplitude(self.budget, r) for r in rng)])
        return (g * coef)[:, None] * a

    def user_channel(self) -> np.ndarray:
        return self.channel([[0.0, 0.0]], self.user_gain_dbi)[0]

    def jammer_channels(self) -> np.ndarray:
        if self.n_jammers == 0:
            return np.zeros((0, self.sat_array.n_elements), dtype=complex)
        peak = dish_gain(self.jammer_dish, 0.0, self.budget.wavelength)
        return self.channel(self.jammer_xy(), peak)

    def jammer_powers(self) -> np.ndarray:
        return np.full(self.n_jammers, self.budget.e1 / max(self.n_jammers, 1))


def _interference(h0: np.ndarray, jam_channels, jam_powers, kappa: float) -> np.ndarray:
    n = h0.shape[0]
    hj = np.asarray(jam_channels, dtype=complex).reshape(-1, n) if len(jam_channels) else np.zeros((0, n), complex)
    pj = np.asarray(jam_powers, dtype=float).reshape(-1)
    if hj.shape[0] != pj.shape[0]:
        raise ShapeError(f"{hj.shape[0]} jammer channels but {pj.shape[0]} powers")
    p = (hj.T * pj) @ hj.conj()
    p = 0.5 * (p + p.conj().T)
    p[np.diag_indices_from(p)] += kappa
    return p


def mvdr_capacity(h0, jam_channels, jam_powers, e0: float, kappa: float) -> float:
    """``log2(1 + E0 h0^H P^-1 h0)`` with ``P = sum_j E_j h_j h_j^H + kappa I``.

    This is the rate of the max-SINR receive beamformer for a single-antenna
    user, and equals the game rate for a one-column ``H0``.
    """
    h0 = np.asarray(h0, dtype=complex).reshape(-1)
    if h0.size == 0:
        raise ShapeError("desired channel is empty")
    if not kappa > 0.0:
        raise DomainError("kappa must be positive")
    p = _interference(h0, jam_channels, jam_powers, kappa)
    sinr = float(np.real(h0.conj() @ np.linalg.solve(p, h0)))
    return math.log1p(e0 * max(sinr, 0.0)) / LN2


def mvdr_weights(h0, jam_channels, jam_powers, kappa: float) -> np.ndarray:
    """Unit-norm max-SINR receive weights ``P^-1 h0 / ||P^-1 h0||``."""
    h0 = np.asarray(h0, dtype=complex).reshape(-1)
    w = np.linalg.solve(_interference(h0, jam_channels, jam_powers, kappa), h0)
    return w / np.linalg.norm(w)


def scene_capacity(scene: RingJammerScene) -> float:
    b = scene.budget
    return mvdr_capacity(scene.user_channel(), scene.jammer_channels(), scene.jammer_powers(), b.e0, b.kappa)


def capacity_vs_radius(scene: RingJammerScene, radii: Sequence[float]) -> list[tuple[float, float]]:
    radii = [float(r) for r in radii]
    if any(r <= 0.0 for r in radii):
        raise DomainError("ring radii must be positive")
    return [(r, scene_capacity(scene.with_radius(r))) for r in radii]


def no_jammer_capacity(scene: RingJammerScene) -> float:
    return scene_capacity(scene.without_jammers())


@dataclass(frozen=True, eq=False)
class GainMap:
    """Absolute beamformer gain ``|w^H a|^2`` in dB on an east/north grid.

    ``gain_db[i, j]`` belongs to ``(x[j], y[i])``.
    """

    x: np.ndarray
    y: np.ndarray
    gain_db: np.ndarray

    @property
    def relative_db(self) -> np.ndarray:
        return self.gain_db - float(np.max(self.gain_db))

    def at(self, x: float, y: float) -> float:
        """Gain of the cell nearest to ``(x, y)``."""
        j = int(np.argmin(np.abs(self.x - x)))
        i = int(np.argmin(np.abs(self.y - y)))
        return float(self.gain_db[i, j])


def beam_gain_db(scene: RingJammerScene, w: np.ndarray, xy) -> np.ndarray:
    dirs, _ = scene.directions(xy)
    a = steering_matrix(scene.sat_array, dirs, scene.budget.wavelength)
    g = np.abs(a @ np.conj(w)) ** 2
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(np.maximum(g, 1e-300))


def ground_gain_map(scene: RingJammerScene, extent: float, resolution: float) -> GainMap:
    """Receive gain of the MVDR beam over ``[-extent, extent]^2`` at ``resolution`` spacing."""
    if not (extent > 0.0 and resolution > 0.0):
        raise DomainError("extent and resolution must be positive")
    n = int(round(2.0 * extent / resolution)) + 1
    axis = np.linspace(-extent, extent, n)
    b = scene.budget
    w = mvdr_weights(scene.user_channel(), scene.jammer_channels(), scene.jammer_powers(), b.kappa)
    xx, yy = np.meshgrid(axis, axis)
    g = beam_gain_db(scene, w, np.column_stack([xx.ravel(), yy.ravel()]))
    return GainMap(x=axis, y=axis.copy(), gain_db=g.reshape(n, n))


def write_gain_map(gm: GainMap, path: str | Path) -> None:
    """CSV ``x_m,y_m,gain_db`` with gains relative to the map maximum."""
    rel = gm.relative_db
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(GAINMAP_HEADER)
        for i, yv in enumerate(gm.y):
            for j, xv in enumerate(gm.x):
                w.writerow([repr(float(xv)), repr(float(yv)), repr(float(rel[i, j]))])


def read_gain_map(path: str | Path) -> GainMap:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != GAINMAP_HEADER:
            raise ValueError(f"{path}: expected header {','.join(GAINMAP_HEADER)}")
        rows = np.array([[float(c) for c in r] for r in reader if r], dtype=float)
    xs, ys = np.unique(rows[:, 0]), np.unique(rows[:, 1])
    grid = np.full((ys.size, xs.size), np.nan)
    grid[np.searchsorted(ys, rows[:, 1]), np.searchsorted(xs, rows[:, 0])] = rows[:, 2]
    return GainMap(x=xs, y=ys, gain_db=grid)


def write_sweep(points: Sequence[tuple[float, float]], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for r, c in points:
            w.writerow([repr(float(r)), repr(float(c))])


def read_sweep(path: str | Path) -> list[tuple[float, float]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != SWEEP_HEADER:
            raise ValueError(f"{path}: expected header {','.join(SWEEP_HEADER)}")
        return [(float(r), float(c)) for r, c in reader]


# ---------------------------------------------------------------- dish jammer


def jammer_target(
    tracks: Sequence[SatelliteTrack],
    frame: int,
    jammer_offset,
    min_elevation: float = 40.0,
) -> tuple[str, np.ndarray]:
    """Satellite nearest to the jammer and the unit ENU direction toward it.

    Only satellites at or above ``min_elevation`` as seen from the jammer
    qualify. Ties are broken by satellite id.
    """
    if not tracks:
        raise GeometryError("no satellites to aim at")
    az = np.array([t.azimuth[frame] for t in tracks])
    el = np.array([t.elevation[frame] for t in tracks])
    rng = np.array([t.range[frame] for t in tracks])
    rel = enu_from_look(az, el, rng) - np.asarray(jammer_offset, dtype=float)
    _, jel, jrng = look_from_enu(rel)
    ok = np.flatnonzero(jel >= min_elevation)
    if ok.size == 0:
        raise GeometryError(f"no satellite above {min_elevation} deg from the jammer at frame {frame}")
    best = min(ok, key=lambda i: (jrng[i], tracks[i].sat_id))
    return tracks[best].sat_id, rel[best] / jrng[best]


def dish_jammer_channels(
    tracks: Sequence[SatelliteTrack],
    frame: int,
    k: int,
    site: GroundSite,
    budget: LinkBudget,
    dish: DishAntenna,
    jammer_offset=(0.0, 1000.0, 0.0),
    *,
    tx: PlanarArray | None = None,
    sat_array: PlanarArray | None = None,
    min_elevation: float = 40.0,
) -> tuple[StackedChannel, StackedChannel, str]:
    """Stacked ``H0`` (TX array) and ``H1`` (aimed dish) toward the ``k`` nearest satellites.

    Returns the two stacks and the id of the satellite the dish is aimed at.
    """
    tx = tx or PlanarArray()
    sat_array = sat_array or PlanarArray()
    sel = select_nearest(tracks, frame, k, min_elevation)
    require_visible(sel, frame)
    target, u = jammer_target(tracks, frame, jammer_offset, min_elevation)
    aimed = dish.pointed_at(u)
    b0, b1 = [], []
    for sat_id, look in sel:
        b0.append(build_channel(tx, sat_array, look, budget, sat_id=sat_id, site_radius=site.radius))
        b1.append(
            build_channel(
                aimed, sat_array, look, budget, sat_id=sat_id,
                tx_offset_enu=jammer_offset, site_radius=site.radius,
            )
        )
    return stack(b0), stack(b1), target


def fixed_jammer_response(h0, h1, q1, e0: float, kappa: float, cfg: SolverConfig | None = None) -> GameSolution:
    """Transmitter best response to a jammer whose covariance ``q1`` is fixed."""
    cfg = cfg or SolverConfig()
    q1 = np.atleast_2d(np.asarray(q1, dtype=complex))
    e1 = max(float(np.trace(q1).real), 1e-300)
    g = _Game(h0, h1, e0, e1, kappa, cfg)
    p = g.p(q1)
    wf = g.best_response(p)
    return GameSolution(
        q0=wf.q0, q1=q1, rate=g.rate(wf.q0, p), iterations=1, converged=True,
        br_gap=0.0, stationarity=0.0, dead_channel=wf.dead,
    )


def dish_jammer_scenario(
    tracks: Sequence[SatelliteTrack],
    frame: int,
    k: int,
    site: GroundSite,
    budget: LinkBudget,
    dish: DishAntenna,
    jammer_offset=(0.0, 1000.0, 0.0),
    *,
    tx: PlanarArray | None = None,
    sat_array: PlanarArray | None = None,
    min_elevation: float = 40.0,
    cfg: SolverConfig | None = None,
) -> GameSolution:
    """Equilibrium against a single dish jammer aimed at its nearest satellite.

    A one-antenna jammer can only scale its power and the rate never rises
    with it, so ``Q1 = [[E1]]`` and the transmitter water-fills once.
    """
    h0, h1, _ = dish_jammer_channels(
        tracks, frame, k, site, budget, dish, jammer_offset,
        tx=tx, sat_array=sat_array, min_elevation=min_elevation,
    )
    return fixed_jammer_response(h0, h1, np.array([[budget.e1]]), budget.e0, budget.kappa, cfg)
