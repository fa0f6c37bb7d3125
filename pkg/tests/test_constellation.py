import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from orbit_duel.constellation import (
    EARTH_MU,
    EARTH_RADIUS_M,
    EARTH_ROTATION_RATE,
    GroundSite,
    LookAngles,
    SatelliteTrack,
    WalkerConfig,
    ingest_tracks,
    look_from_enu,
    offset_look,
    orbital_period,
    propagate_walker,
    select_nearest,
    walker_positions_eci,
    write_tracks,
)
from orbit_duel.errors import ConfigError, DomainError, TrackFormatError


def _track(sat_id, el, rng, az=0.0):
    return SatelliteTrack(sat_id, [az], [el], [rng])


def test_zenith_pass_of_polar_orbit():
    dt, t_star = 10.0, 12
    t = t_star * dt
    cfg = WalkerConfig(
        altitude=550e3, inclination=90.0, planes=1, sats_per_plane=1, phasing=0,
        epoch_offset=-t, raan_offset=math.degrees(EARTH_ROTATION_RATE * t),
    )
    site = GroundSite(0.0, 0.0, 0.0)
    (track,) = propagate_walker(cfg, site, 25, dt)
    assert track.elevation[t_star] == pytest.approx(90.0, abs=0.5)
    assert abs(track.range[t_star] - 550e3) < 1e3
    assert track.elevation[t_star] == track.elevation.max()


def test_nadir_range():
    cfg = WalkerConfig(altitude=550e3, inclination=53.0, planes=1, sats_per_plane=1, phasing=0)
    (track,) = propagate_walker(cfg, GroundSite(0.0, 0.0, 0.0), 1, 15.0)
    assert track.range[0] == pytest.approx(550e3, abs=1e-6)
    assert track.elevation[0] == pytest.approx(90.0, abs=1e-9)


def test_period_from_repeat_geometry():
    cfg = WalkerConfig(planes=1, sats_per_plane=1, phasing=0)
    kepler = 2.0 * math.pi * math.sqrt((EARTH_RADIUS_M + 550e3) ** 3 / EARTH_MU)
    # first return of the inertial position, located on a coarse grid then refined
    ts = np.arange(4000.0, 8000.0, 1.0)
    p0 = walker_positions_eci(cfg, [0.0])[0, 0]
    d = np.linalg.norm(walker_positions_eci(cfg, ts)[0] - p0, axis=1)
    i = int(np.argmin(d))
    fine = np.linspace(ts[i] - 1.0, ts[i] + 1.0, 20001)
    df = np.linalg.norm(walker_positions_eci(cfg, fine)[0] - p0, axis=1)
    period = fine[int(np.argmin(df))]
    assert period == pytest.approx(kepler, abs=1e-3)
    assert orbital_period(550e3) == pytest.approx(kepler, rel=1e-12)
    assert period == pytest.approx(5730.1, abs=0.1)


def test_walker_validation():
    with pytest.raises(ConfigError):
        WalkerConfig(altitude=100e3)
    with pytest.raises(ConfigError):
        WalkerConfig(inclination=200.0)
    with pytest.raises(ConfigError):
        WalkerConfig(planes=0)
    with pytest.raises(ConfigError):
        propagate_walker(WalkerConfig(), GroundSite(), 0)


def test_ground_site_validation():
    with pytest.raises(ConfigError):
        GroundSite(latitude=95.0)
    with pytest.raises(ConfigError):
        GroundSite(longitude=-181.0)
    with pytest.raises(ConfigError):
        GroundSite(altitude=-600.0)


def test_look_angle_validation():
    with pytest.raises(DomainError):
        LookAngles(360.0, 45.0, 1e6)
    with pytest.raises(DomainError):
        LookAngles(0.0, 91.0, 1e6)
    with pytest.raises(DomainError):
        LookAngles(0.0, 45.0, 0.0)


def test_offset_look_north_shift():
    look = LookAngles(0.0, 90.0, 550e3)
    moved = offset_look(look, (0.0, 1000.0, 0.0))
    assert moved.azimuth == pytest.approx(180.0)
    assert moved.range == pytest.approx(math.hypot(550e3, 1000.0))


def test_ingest_one_row(tmp_path):
    f = tmp_path / "t.csv"
    f.write_text("sat_id,frame,az_deg,el_deg,range_m\nS1,0,0,90,550000\n")
    (t,) = ingest_tracks(f)
    assert t.sat_id == "S1" and t.n_frames == 1
    assert t.look(0) == LookAngles(0.0, 90.0, 550000.0)


def test_ingest_header_only(tmp_path):
    f = tmp_path / "t.csv"
    f.write_text("sat_id,frame,az_deg,el_deg,range_m\n")
    assert ingest_tracks(f) == []


def test_ingest_round_trip(tmp_path):
    tracks = propagate_walker(WalkerConfig(planes=6, sats_per_plane=5, phasing=1), GroundSite(), 7, 15.0)
    f = tmp_path / "t.csv"
    write_tracks(tracks, f)
    back = ingest_tracks(f)
    assert back == tracks
    f2 = tmp_path / "t2.csv"
    write_tracks(back, f2)
    assert f.read_bytes() == f2.read_bytes()


@pytest.mark.parametrize(
    "body, line",
    [
        ("S1,0,0,90\n", 2),
        ("S1,0,0,90,550000\nS1,2,0,90,550000\n", 3),
        ("S1,0,abc,90,550000\n", 2),
        ("S1,0,0,95,550000\n", 2),
        ("S1,0,10,50,-1\n", 2),
    ],
)
def test_ingest_errors_carry_line_numbers(tmp_path, body, line):
    f = tmp_path / "t.csv"
    f.write_text("sat_id,frame,az_deg,el_deg,range_m\n" + body)
    with pytest.raises(TrackFormatError) as err:
        ingest_tracks(f)
    assert err.value.line == line
    assert f"line {line}" in str(err.value)


def test_ingest_bad_header(tmp_path):
    f = tmp_path / "t.csv"
    f.write_text("id,frame,az,el,range\n")
    with pytest.raises(TrackFormatError):
        ingest_tracks(f)


def test_select_nearest_min_range():
    tracks = [_track("A", 60.0, 600e3), _track("B", 70.0, 550e3), _track("C", 50.0, 800e3)]
    assert [s for s, _ in select_nearest(tracks, 0, 1)] == ["B"]


def test_select_nearest_nothing_visible():
    tracks = [_track("A", 30.0, 600e3), _track("B", 10.0, 550e3)]
    assert select_nearest(tracks, 0, 5, 40.0) == []


def test_select_nearest_tie_by_id():
    tracks = [_track("Z", 60.0, 600e3), _track("A", 60.0, 600e3)]
    assert [s for s, _ in select_nearest(tracks, 0, 2)] == ["A", "Z"]


def test_select_nearest_frame_out_of_range():
    with pytest.raises(IndexError):
        select_nearest([_track("A", 60.0, 600e3)], 3, 1)


def test_select_nearest_matches_exhaustive_sort():
    tracks = propagate_walker(WalkerConfig(), GroundSite(), 1, 15.0)
    rows = []
    for t in tracks:
        if t.elevation[0] >= 40.0:
            rows.append((t.range[0], t.sat_id))
    rows.sort()
    expected = [sid for _, sid in rows[:5]]
    assert [s for s, _ in select_nearest(tracks, 0, 5, 40.0)] == expected


# ---------------------------------------------------------------- invariants


@pytest.mark.invariant
def test_walker_tracks_invariants():
    tracks = propagate_walker(WalkerConfig(), GroundSite(), 40, 15.0)
    az = np.concatenate([t.azimuth for t in tracks])
    rng = np.concatenate([t.range for t in tracks])
    assert np.all((az >= 0.0) & (az < 360.0))
    assert rng.min() >= 550e3 - 2e3
    for f in range(0, 40, 7):
        sel = select_nearest(tracks, f, 5, 40.0)
        r = [look.range for _, look in sel]
        assert r == sorted(r)
        assert all(look.elevation >= 40.0 for _, look in sel)


@pytest.mark.invariant
def test_walker_deterministic():
    a = propagate_walker(WalkerConfig(planes=8, sats_per_plane=4), GroundSite(), 5)
    b = propagate_walker(WalkerConfig(planes=8, sats_per_plane=4), GroundSite(), 5)
    assert a == b


@pytest.mark.invariant
@settings(max_examples=200, deadline=None)
@given(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6), st.floats(-1e6, 1e6))
def test_azimuth_normalized(e, n, u):
    if math.hypot(e, n, u) == 0.0:
        return
    az, el, rng = look_from_enu(np.array([e, n, u]))
    assert 0.0 <= float(az) < 360.0
    assert -90.0 <= float(el) <= 90.0


@pytest.mark.invariant
@settings(max_examples=50, deadline=None)
@given(
    st.lists(
        st.tuples(st.sampled_from("ABCDEFG"), st.floats(-10, 90), st.floats(5e5, 2e6)),
        min_size=1, max_size=12,
    ),
    st.integers(1, 6),
)
def test_select_nearest_property(rows, k):
    tracks = [_track(f"{sid}{i}", el, r) for i, (sid, el, r) in enumerate(rows)]
    sel = select_nearest(tracks, 0, k, 40.0)
    oracle = sorted((r, f"{sid}{i}") for i, (sid, el, r) in enumerate(rows) if el >= 40.0)[:k]
    assert [s for s, _ in sel] == [sid for _, sid in oracle]
