"""Line-of-sight MIMO channel blocks between ground transmitters and satellites.

A block is the outer product ``c * a_sat a_tx^H`` of the satellite and
transmitter array responses, scaled by the complex path gain ``c``
(free-space loss, a flat atmospheric loss and the carrier phase).

Frames
------
Transmitter arrays look at the zenith with their x-axis due east, so a
direction in the site's ENU frame is already in array coordinates. A
satellite array looks at the Earth's center; its x-axis is the local
north projected onto the array plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .constellation import EARTH_RADIUS_M, LookAngles
from .errors import DomainError, GeometryError, ShapeError

SPEED_OF_LIGHT = 299_792_458.0


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


@dataclass(frozen=True)
class LinkBudget:
    carrier_hz: float = 10.0e9
    bandwidth_hz: float = 100.0e6
    noise_psd_dbm_hz: float = -205.0
    atmospheric_loss_db: float = 5.0
    tx0_power_dbm: float = 50.0
    tx1_power_dbm: float = 70.0
    noise_power_w: float = field(init=False, repr=False)

    def __post_init__(self):
        if not self.carrier_hz > 0.0:
            raise DomainError("carrier frequency must be positive")
        if not self.bandwidth_hz > 0.0:
            raise DomainError("bandwidth must be positive")
        if not self.atmospheric_loss_db >= 0.0:
            raise DomainError("atmospheric loss must be >= 0 dB")
        kappa_dbm = self.noise_psd_dbm_hz + 10.0 * math.log10(self.bandwidth_hz)
        object.__setattr__(self, "noise_power_w", dbm_to_watts(kappa_dbm))

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz

    @property
    def kappa(self) -> float:
        return self.noise_power_w

    @property
    def e0(self) -> float:
        return dbm_to_watts(self.tx0_power_dbm)

    @property
    def e1(self) -> float:
        return dbm_to_watts(self.tx1_power_dbm)


@dataclass(frozen=True)
class PlanarArray:
    """Uniform rectangular array in its own x-y plane; boresight is local +z.

    Spacing is in wavelengths.
    """

    rows: int = 6
    cols: int = 6
    spacing: float = 0.5
    element_gain_dbi: float = 0.0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise DomainError("array needs at least one row and one column")
        if not self.spacing > 0.0:
            raise DomainError("element spacing must be positive")

    @property
    def n_elements(self) -> int:
        return self.rows * self.cols

    @property
    def element_gain(self) -> float:
        return float(db_to_linear(self.element_gain_dbi))

    def element_positions(self, wavelength: float) -> np.ndarray:
        """Element coordinates in meters, shape ``(N, 3)``, centred on the origin.

        Element ``(p, q)`` (row ``p``, column ``q``) has flat index ``p * cols + q``.
        """
        d = self.spacing * wavelength
        p, q = np.meshgrid(np.arange(self.rows), np.arange(self.cols), indexing="ij")
        x = (q.ravel() - (self.cols - 1) / 2.0) * d
        y = (p.ravel() - (self.rows - 1) / 2.0) * d
        return np.stack([x, y, np.zeros_like(x)], axis=1)


@dataclass(frozen=True)
class DishAntenna:
    diameter: float = 0.6
    peak_gain_dbi: float = 40.0
    boresight: tuple = (0.0, 0.0, 1.0)  # ENU unit vector

    def __post_init__(self):
        if not self.diameter > 0.0:
            raise DomainError("dish diameter must be positive")
        if not self.peak_gain_dbi > 0.0:
            raise DomainError("dish peak gain must be positive")
        b = np.asarray(self.boresight, dtype=float)
        nb = np.linalg.norm(b)
        if b.shape != (3,) or not nb > 0.0:
            raise DomainError("dish boresight must be a non-zero 3-vector")
        object.__setattr__(self, "boresight", tuple(float(x) for x in b / nb))

    def pointed_at(self, direction_enu) -> "DishAntenna":
        return DishAntenna(self.diameter, self.peak_gain_dbi, tuple(direction_enu))


DISH_SIDELOBE_DBI = -10.0


def hpbw_deg(dish: DishAntenna, wavelength: float) -> float:
    return 70.0 * wavelength / dish.diameter


def dish_gain(dish: DishAntenna, off_boresight: float, wavelength: float):
    """Parabolic main lobe ``G_peak - 12 (theta / HPBW)^2`` dBi floored at -10 dBi.

    ``off_boresight`` in degrees, scalar or array.
    """
    theta = np.asarray(off_boresight, dtype=float)
    if np.any(theta < 0.0) or np.any(theta > 180.0):
        raise DomainError("off-boresight angle must lie in [0, 180] degrees")
    g = dish.peak_gain_dbi - 12.0 * (theta / hpbw_deg(dish, wavelength)) ** 2
    g = np.maximum(g, DISH_SIDELOBE_DBI)
    return float(g) if g.ndim == 0 else g


def fspl_db(rng: float, wavelength: float) -> float:
    return 20.0 * math.log10(4.0 * math.pi * rng / wavelength)


def path_amplitude(budget: LinkBudget, rng: float) -> tuple[float, float]:
    """Field amplitude and carrier phase (radians, in [0, 2*pi)) over ``rng`` meters."""
    if not rng > 0.0:
        raise DomainError("range must be positive")
    lam = budget.wavelength
    loss_db = fspl_db(rng, lam) + budget.atmospheric_loss_db
    amplitude = math.sqrt(10.0 ** (-loss_db / 10.0))
    phase = math.fmod(-2.0 * math.pi * math.fmod(rng / lam, 1.0), 2.0 * math.pi)
    if phase < 0.0:
        phase += 2.0 * math.pi
    return amplitude, phase


def steering_vector(array: PlanarArray, direction, wavelength: float) -> np.ndarray:
    """Response ``sqrt(g) * exp(+j 2 pi / lambda * r . k)`` of every element.

    ``direction`` is a unit vector in the array's local frame.
    """
    k = np.asarray(direction, dtype=float)
    if k.shape != (3,):
        raise DomainError("direction must be a 3-vector")
    if abs(np.linalg.norm(k) - 1.0) > 1e-9:
        raise DomainError("direction must be a unit vector")
    r = array.element_positions(wavelength)
    return math.sqrt(array.element_gain) * np.exp(1j * (2.0 * math.pi / wavelength) * (r @ k))


def steering_matrix(array: PlanarArray, directions, wavelength: float) -> np.ndarray:
    """Steering vectors for many unit directions at once, shape ``(n_dirs, N)``."""
    k = np.asarray(directions, dtype=float).reshape(-1, 3)
    r = array.element_positions(wavelength)
    return math.sqrt(array.element_gain) * np.exp(1j * (2.0 * math.pi / wavelength) * (k @ r.T))


def unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def angle_between_deg(a, b) -> float:
    c = float(np.clip(np.dot(unit(a), unit(b)), -1.0, 1.0))
    return math.degrees(math.acos(c))


def satellite_frame(sat_enu, site_radius: float = EARTH_RADIUS_M) -> np.ndarray:
    """Rows are the satellite array's x, y and boresight axes in site ENU.

    The boresight points at the Earth's center, which sits ``site_radius``
    below the site.
    """
    s = np.asarray(sat_enu, dtype=float)
    z = unit(np.array([0.0, 0.0, -site_radius]) - s)
    north = np.array([0.0, 1.0, 0.0])
    x = north - np.dot(north, z) * z
    if np.linalg.norm(x) < 1e-9:
        east = np.array([1.0, 0.0, 0.0])
        x = east - np.dot(east, z) * z
    x = unit(x)
    y = np.cross(z, x)
    return np.stack([x, y, z])


@dataclass(frozen=True, eq=False)
class ChannelBlock:
    sat_id: str
    matrix: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape


@dataclass(frozen=True, eq=False)
class StackedChannel:
    blocks: tuple
    matrix: np.ndarray
    row_offsets: tuple

    @property
    def sat_ids(self) -> tuple:
        return tuple(b.sat_id for b in self.blocks)

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def rows_of(self, sat_id: str) -> slice:
        i = self.sat_ids.index(sat_id)
        return slice(self.row_offsets[i], self.row_offsets[i + 1])


Transmitter = Union[PlanarArray, DishAntenna]


def build_channel(
    tx: Transmitter,
    sat_array: PlanarArray,
    look: LookAngles,
    budget: LinkBudget,
    *,
    sat_id: str = "",
    tx_offset_enu: Sequence[float] = (0.0, 0.0, 0.0),
    site_radius: float = EARTH_RADIUS_M,
) -> ChannelBlock:
    """LOS channel from a ground transmitter to one satellite, shape ``K x N_tx``.

    ``look`` gives the satellite as seen from the reference site; the
    transmitter may sit at ``tx_offset_enu`` on the site's tangent plane.
    A dish transmitter contributes the scalar ``sqrt(gain)`` toward the
    satellite, giving a single column.
    """
    sat = look.enu()
    tx_pos = np.asarray(tx_offset_enu, dtype=float)
    los = sat - tx_pos
    rng = float(np.linalg.norm(los))
    u_tx = los / rng
    if u_tx[2] <= 0.0:
        raise GeometryError("satellite is not above the transmitter's horizon")

    lam = budget.wavelength
    frame = satellite_frame(sat, site_radius)
    u_sat = frame @ (-u_tx)
    u_sat = u_sat / np.linalg.norm(u_sat)
    a_sat = steering_vector(sat_array, u_sat, lam)

    if isinstance(tx, DishAntenna):
        off = angle_between_deg(tx.boresight, u_tx)
        a_tx = np.array([math.sqrt(db_to_linear(dish_gain(tx, off, lam)))], dtype=complex)
    else:
        a_tx = steering_vector(tx, u_tx, lam)

    amp, phase = path_amplitude(budget, rng)
    h = (amp * np.exp(1j * phase)) * np.outer(a_sat, a_tx.conj())
    return ChannelBlock(sat_id=sat_id, matrix=h)


def stack(blocks: Sequence[ChannelBlock]) -> StackedChannel:
    """Concatenate blocks vertically in the given order."""
    blocks = tuple(blocks)
    if not blocks:
        raise ShapeError("cannot stack an empty list of blocks")
    cols = {b.matrix.shape[1] for b in blocks}
    if len(cols) != 1:
        raise ShapeError(f"blocks have mismatched column counts {sorted(cols)}")
    offsets = [0]
    for b in blocks:
        offsets.append(offsets[-1] + b.matrix.shape[0])
    return StackedChannel(
        blocks=blocks,
        matrix=np.vstack([b.matrix for b in blocks]),
        row_offsets=tuple(offsets),
    )
