"""Satellite look angles for a fixed ground site.

Tracks come either from a synthetic Walker-delta constellation on circular
Keplerian orbits or from a per-frame CSV file. Geometry uses a spherical
Earth.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, DomainError, GeometryError, TrackFormatError

EARTH_RADIUS_M = 6371.0e3
EARTH_MU = 3.986004418e14  # m^3 / s^2
EARTH_ROTATION_RATE = 7.2921159e-5  # rad / s

TRACK_HEADER = ("sat_id", "frame", "az_deg", "el_deg", "range_m")


@dataclass(frozen=True)
class GroundSite:
    latitude: float = 40.0822
    longitude: float = -105.1092
    altitude: float = 1560.0

    def __post_init__(self):
        if not -90.0 <= self.latitude <= 90.0:
            raise ConfigError(f"latitude {self.latitude} outside [-90, 90]")
        if not -180.0 <= self.longitude <= 180.0:
            raise ConfigError(f"longitude {self.longitude} outside [-180, 180]")
        if not self.altitude >= -500.0:
            raise ConfigError(f"altitude {self.altitude} below -500 m")

    @property
    def radius(self) -> float:
        return EARTH_RADIUS_M + self.altitude

    def ecef(self) -> np.ndarray:
        lat, lon = math.radians(self.latitude), math.radians(self.longitude)
        return self.radius * np.array(
            [math.cos(lat) * math.cos(lon), math.cos(lat) * math.sin(lon), math.sin(lat)]
        )

    def enu_basis(self) -> np.ndarray:
        """Rows are the east, north and up unit vectors in ECEF."""
        lat, lon = math.radians(self.latitude), math.radians(self.longitude)
        sl, cl = math.sin(lat), math.cos(lat)
        so, co = math.sin(lon), math.cos(lon)
        return np.array(
            [
                [-so, co, 0.0],
                [-sl * co, -sl * so, cl],
                [cl * co, cl * so, sl],
            ]
        )


@dataclass(frozen=True)
class LookAngles:
    azimuth: float
    elevation: float
    range: float

    def __post_init__(self):
        if not (0.0 <= self.azimuth < 360.0):
            raise DomainError(f"azimuth {self.azimuth} outside [0, 360)")
        if not (-90.0 <= self.elevation <= 90.0):
            raise DomainError(f"elevation {self.elevation} outside [-90, 90]")
        if not (math.isfinite(self.range) and self.range > 0.0):
            raise DomainError(f"range {self.range} must be finite and positive")

    def enu(self) -> np.ndarray:
        """Satellite position in the site's local east-north-up frame (m)."""
        return enu_from_look(self.azimuth, self.elevation, self.range)


@dataclass(frozen=True, eq=False)
class SatelliteTrack:
    """Per-frame look angles of one satellite; frame ``i`` is at ``i * frame_interval``."""

    sat_id: str
    azimuth: np.ndarray
    elevation: np.ndarray
    range: np.ndarray
    frame_interval: float = 15.0

    def __post_init__(self):
        n = len(self.azimuth)
        if len(self.elevation) != n or len(self.range) != n:
            raise DomainError("track arrays must have equal length")
        for name in ("azimuth", "elevation", "range"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_frames(self) -> int:
        return len(self.azimuth)

    def look(self, frame: int) -> LookAngles:
        if not 0 <= frame < self.n_frames:
            raise IndexError(f"frame {frame} outside track of {self.n_frames} frames")
        return LookAngles(
            float(self.azimuth[frame]), float(self.elevation[frame]), float(self.range[frame])
        )

    def __eq__(self, other):
        if not isinstance(other, SatelliteTrack):
            return NotImplemented
        return (
            self.sat_id == other.sat_id
            and self.frame_interval == other.frame_interval
            and np.array_equal(self.azimuth, other.azimuth)
            and np.array_equal(self.elevation, other.elevation)
            and np.array_equal(self.range, other.range)
        )


@dataclass(frozen=True)
class WalkerConfig:
    """Walker-delta constellation ``inclination: T/P/F``.

    Defaults follow the first Starlink shell.
    """

    altitude: float = 550.0e3
    inclination: float = 53.0
    planes: int = 72
    sats_per_plane: int = 22
    phasing: int = 17
    epoch_offset: float = 0.0
    raan_offset: float = 0.0  # degrees

    def __post_init__(self):
        if not 200.0e3 <= self.altitude <= 2000.0e3:
            raise ConfigError(f"altitude {self.altitude} m outside [200 km, 2000 km]")
        if not 0.0 <= self.inclination <= 180.0:
            raise ConfigError(f"inclination {self.inclination} outside [0, 180]")
        if self.planes < 1 or self.sats_per_plane < 1:
            raise ConfigError("plane and satellite counts must be >= 1")
        if self.phasing < 0:
            raise ConfigError("phasing factor must be >= 0")

    @property
    def semi_major_axis(self) -> float:
        return EARTH_RADIUS_M + self.altitude

    @property
    def period(self) -> float:
        return orbital_period(self.altitude)

    @property
    def total(self) -> int:
        return self.planes * self.sats_per_plane


def orbital_period(altitude: float) -> float:
    a = EARTH_RADIUS_M + altitude
    return 2.0 * math.pi * math.sqrt(a**3 / EARTH_MU)


def enu_from_look(azimuth, elevation, rng) -> np.ndarray:
    az, el = np.radians(azimuth), np.radians(elevation)
    return np.stack(
        [rng * np.cos(el) * np.sin(az), rng * np.cos(el) * np.cos(az), rng * np.sin(el)], axis=-1
    )


def look_from_enu(enu) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Azimuth (deg, [0, 360)), elevation (deg) and range (m) of ENU vectors."""
    enu = np.asarray(enu, dtype=float)
    e, n, u = enu[..., 0], enu[..., 1], enu[..., 2]
    rng = np.hypot(np.hypot(e, n), u)
    el = np.degrees(np.arcsin(np.clip(u / rng, -1.0, 1.0)))
    az = np.mod(np.degrees(np.arctan2(e, n)), 360.0)
    # mod can round a tiny negative up to exactly 360.0
    az = np.where(az >= 360.0, 0.0, az)
    return az, el, rng


def offset_look(look: LookAngles, offset_enu: Sequence[float]) -> LookAngles:
    """Look angles of the same satellite seen from a point displaced on the site's tangent plane."""
    az, el, rng = look_from_enu(look.enu() - np.asarray(offset_enu, dtype=float))
    return LookAngles(float(az), float(el), float(rng))


def walker_positions_eci(cfg: WalkerConfig, times: np.ndarray) -> np.ndarray:
    """Inertial positions, shape ``(satellites, len(times), 3)``.

    Satellite ``p * sats_per_plane + s`` is slot ``s`` of plane ``p``.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    a = cfg.semi_major_axis
    n = math.sqrt(EARTH_MU / a**3)
    inc = math.radians(cfg.inclination)
    total = cfg.total
    p = np.repeat(np.arange(cfg.planes), cfg.sats_per_plane)
    s = np.tile(np.arange(cfg.sats_per_plane), cfg.planes)
    raan = 2.0 * np.pi * p / cfg.planes + math.radians(cfg.raan_offset)
    phase0 = 2.0 * np.pi * s / cfg.sats_per_plane + 2.0 * np.pi * cfg.phasing * p / total
    u = phase0[:, None] + n * (times[None, :] + cfg.epoch_offset)
    cu, su = np.cos(u), np.sin(u)
    co, so = np.cos(raan)[:, None], np.sin(raan)[:, None]
    ci, si = math.cos(inc), math.sin(inc)
    x = a * (cu * co - su * ci * so)
    y = a * (cu * so + su * ci * co)
    z = a * (su * si)
    return np.stack([x, y, z], axis=-1)


def propagate_walker(
    cfg: WalkerConfig, site: GroundSite, frames: int, dt: float = 15.0
) -> list[SatelliteTrack]:
    """Look angles of every constellation member at ``frames`` epochs spaced ``dt`` apart.

    The Earth-fixed frame coincides with the inertial one at t = 0.
    Satellites below the horizon are included.
    """
    if frames < 1:
        raise ConfigError("frames must be >= 1")
    if not dt > 0.0:
        raise ConfigError("dt must be positive")
    times = np.arange(frames) * dt
    eci = walker_positions_eci(cfg, times)
    theta = EARTH_ROTATION_RATE * times
    c, s = np.cos(theta), np.sin(theta)
    ecef = np.empty_like(eci)
    ecef[..., 0] = c * eci[..., 0] + s * eci[..., 1]
    ecef[..., 1] = -s * eci[..., 0] + c * eci[..., 1]
    ecef[..., 2] = eci[..., 2]
    enu = (ecef - site.ecef()) @ site.enu_basis().T
    az, el, rng = look_from_enu(enu)
    return [
        SatelliteTrack(
            sat_id=f"W{p:03d}-{s:03d}",
            azimuth=az[i],
            elevation=el[i],
            range=rng[i],
            frame_interval=dt,
        )
        for i, (p, s) in enumerate(
            (p, s) for p in range(cfg.planes) for s in range(cfg.sats_per_plane)
        )
    ]


def select_nearest(
    tracks: Sequence[SatelliteTrack], frame: int, k: int, min_elevation: float = 40.0
) -> list[tuple[str, LookAngles]]:
    """Up to ``k`` satellites above ``min_elevation``, nearest first (ties by id)."""
    if k < 1:
        raise DomainError("k must be >= 1")
    if not tracks:
        return []
    n = min(t.n_frames for t in tracks)
    if not 0 <= frame < n:
        raise IndexError(f"frame {frame} outside [0, {n})")
    el = np.array([t.elevation[frame] for t in tracks])
    rng = np.array([t.range[frame] for t in tracks])
    visible = np.flatnonzero(el >= min_elevation)
    order = sorted(visible, key=lambda i: (rng[i], tracks[i].sat_id))[:k]
    return [(tracks[i].sat_id, tracks[i].look(frame)) for i in order]


def visible_count(tracks: Sequence[SatelliteTrack], frame: int, min_elevation: float = 40.0) -> int:
    return int(sum(t.elevation[frame] >= min_elevation for t in tracks))


def write_tracks(tracks: Iterable[SatelliteTrack], path: str | Path) -> None:
    """Write tracks in the ``sat_id,frame,az_deg,el_deg,range_m`` CSV format."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACK_HEADER)
        for t in tracks:
            for f in range(t.n_frames):
                w.writerow(
                    [t.sat_id, f, repr(float(t.azimuth[f])), repr(float(t.elevation[f])),
                     repr(float(t.range[f]))]
                )


def ingest_tracks(path: str | Path, frame_interval: float = 15.0) -> list[SatelliteTrack]:
    """Parse a track CSV. Rows of one satellite must carry frames 0, 1, 2, ... in order."""
    rows: dict[str, list[tuple[float, float, float]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return []
        if tuple(h.strip() for h in header) != TRACK_HEADER:
            raise TrackFormatError(f"expected header {','.join(TRACK_HEADER)}", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 5:
                raise TrackFormatError(f"expected 5 fields, got {len(row)}", line=lineno)
            sat_id = row[0].strip()
            if not sat_id:
                raise TrackFormatError("empty sat_id", line=lineno)
            try:
                frame = int(row[1])
                az, el, rng = (float(x) for x in row[2:])
            except ValueError as exc:
                raise TrackFormatError(str(exc), line=lineno) from None
            try:
                LookAngles(az, el, rng)
            except DomainError as exc:
                raise TrackFormatError(str(exc), line=lineno) from None
            seq = rows.setdefault(sat_id, [])
            if frame != len(seq):
                raise TrackFormatError(
                    f"satellite {sat_id}: expected frame {len(seq)}, got {frame}", line=lineno
                )
            seq.append((az, el, rng))
    tracks = []
    for sat_id, seq in rows.items():
        arr = np.array(seq, dtype=float)
        tracks.append(SatelliteTrack(sat_id, arr[:, 0], arr[:, 1], arr[:, 2], frame_interval))
    return tracks


def require_visible(selection: list, frame: int) -> None:
    if not selection:
        raise GeometryError(f"no visible satellites at frame {frame}")
