import math

import numpy as np
import pytest

from orbit_duel.baselines import (
    RingJammerScene,
    beam_gain_db,
    capacity_vs_radius,
    dish_jammer_channels,
    dish_jammer_scenario,
    fixed_jammer_response,
    ground_gain_map,
    jammer_target,
    mvdr_capacity,
    mvdr_weights,
    no_jammer_capacity,
    read_gain_map,
    read_sweep,
    scene_capacity,
    write_gain_map,
    write_sweep,
)
from orbit_duel.channel import DishAntenna, LinkBudget
from orbit_duel.constellation import GroundSite, SatelliteTrack, WalkerConfig, propagate_walker
from orbit_duel.errors import DomainError, GeometryError, ShapeError
from orbit_duel.game import interference_cov, rate
from oracles import crandn

SCENE = RingJammerScene()


def test_mvdr_without_jammers():
    h0 = np.array([1.0, 1j, -1.0])
    assert mvdr_capacity(h0, [], [], 2.0, 0.5) == pytest.approx(math.log2(1 + 2.0 * 3 / 0.5))


def test_mvdr_orthogonal_jammer_is_harmless():
    h0 = np.array([1.0, 0.0])
    hj = np.array([[0.0, 1.0]])
    assert mvdr_capacity(h0, hj, [1e6], 1.0, 1.0) == pytest.approx(1.0)


def test_mvdr_aligned_jammer_oracle():
    # jammer on the same spatial signature: SINR = E0 |h|^2 / (kappa + E1 |h|^2)
    h0 = np.array([1.0, 1.0])
    c = mvdr_capacity(h0, h0[None, :], [3.0], 1.0, 0.5)
    assert c == pytest.approx(math.log2(1 + 2.0 / (0.5 + 6.0)), rel=1e-12)


def test_mvdr_equals_game_rate():
    rng = np.random.default_rng(0)
    for _ in range(20):
        h0, hj = crandn(rng, 6), crandn(rng, 3, 6)
        pw = rng.uniform(0.1, 5.0, 3)
        p = interference_cov(hj.T, np.diag(pw), 0.2)
        expected = rate(h0[:, None], np.array([[1.7]]), p)
        assert mvdr_capacity(h0, hj, pw, 1.7, 0.2) == pytest.approx(expected, rel=1e-10)


def test_mvdr_errors():
    with pytest.raises(ShapeError):
        mvdr_capacity(np.ones(2), np.ones((2, 2)), [1.0], 1.0, 1.0)
    with pytest.raises(DomainError):
        mvdr_capacity(np.ones(2), [], [], 1.0, 0.0)


def test_mvdr_weights_unit_norm():
    w = mvdr_weights(np.array([1.0, 2.0]), np.array([[1.0, 0.0]]), [5.0], 1.0)
    assert np.linalg.norm(w) == pytest.approx(1.0)


def test_scene_geometry():
    xy = SCENE.jammer_xy()
    np.testing.assert_allclose(np.hypot(xy[:, 0], xy[:, 1]), 10e3)
    np.testing.assert_allclose(xy[0], [0.0, 10e3], atol=1e-9)
    pts = SCENE.ground_enu(xy)
    # points sit on the sphere through the user
    centre = np.array([0.0, 0.0, -SCENE.earth_radius])
    np.testing.assert_allclose(np.linalg.norm(pts - centre, axis=1), SCENE.earth_radius, rtol=1e-12)
    with pytest.raises(DomainError):
        RingJammerScene(ring_radius=0.0)


def test_capacity_sweep_monotone():
    sweep = capacity_vs_radius(SCENE, [1e3, 2e3, 5e3, 10e3, 20e3, 50e3])
    caps = [c for _, c in sweep]
    assert all(b >= a for a, b in zip(caps, caps[1:]))
    assert caps[-1] < no_jammer_capacity(SCENE)


def test_far_ring_recovers_bound():
    bound = no_jammer_capacity(SCENE)
    assert scene_capacity(SCENE.with_radius(500e3)) == pytest.approx(bound, rel=0.01)


def test_sinr_ratio_between_2_and_10_km():
    def sinr(r):
        return 2.0 ** scene_capacity(SCENE.with_radius(r)) - 1.0

    assert sinr(10e3) / sinr(2e3) >= 2.0


def test_sweep_validation():
    with pytest.raises(DomainError):
        capacity_vs_radius(SCENE, [0.0])


def test_sweep_round_trip(tmp_path):
    pts = capacity_vs_radius(SCENE, [1e3, 7.5e3])
    f = tmp_path / "sweep.csv"
    write_sweep(pts, f)
    assert read_sweep(f) == pts


def test_gain_map_peak_at_user_without_jammers():
    gm = ground_gain_map(SCENE.without_jammers(), 50e3, 5e3)
    i, j = np.unravel_index(np.argmax(gm.gain_db), gm.gain_db.shape)
    assert (gm.x[j], gm.y[i]) == (0.0, 0.0)


def test_gain_map_nulls_at_far_jammers():
    scene = SCENE.with_radius(50e3)
    gm = ground_gain_map(scene, 50e3, 2.5e3)
    rel = gm.relative_db
    for x, y in scene.jammer_xy():
        j = int(np.argmin(np.abs(gm.x - x)))
        i = int(np.argmin(np.abs(gm.y - y)))
        assert rel[i, j] <= -30.0


def test_close_ring_costs_user_gain():
    clear = mvdr_weights(SCENE.user_channel(), np.zeros((0, 36)), [], SCENE.budget.kappa)
    s2 = SCENE.with_radius(2e3)
    w2 = mvdr_weights(s2.user_channel(), s2.jammer_channels(), s2.jammer_powers(), s2.budget.kappa)
    g_clear = beam_gain_db(SCENE, clear, [[0.0, 0.0]])[0]
    g_jam = beam_gain_db(s2, w2, [[0.0, 0.0]])[0]
    assert g_clear - g_jam >= 10.0


def test_gain_map_round_trip(tmp_path):
    gm = ground_gain_map(SCENE, 10e3, 5e3)
    f = tmp_path / "gm.csv"
    write_gain_map(gm, f)
    back = read_gain_map(f)
    np.testing.assert_array_equal(back.x, gm.x)
    np.testing.assert_allclose(back.gain_db, gm.relative_db, atol=0.0)


@pytest.mark.invariant
def test_ring_rotation_symmetry():
    a = ground_gain_map(SCENE.with_radius(20e3), 20e3, 5e3).gain_db
    b = ground_gain_map(RingJammerScene(ring_radius=20e3, ring_phase_deg=90.0), 20e3, 5e3).gain_db
    # a quarter turn of the ring rotates the map by a quarter turn
    np.testing.assert_allclose(np.rot90(a, k=-1), b, atol=1e-6)


# ---------------------------------------------------------------- dish jammer


@pytest.fixture(scope="module")
def walker_tracks():
    return propagate_walker(WalkerConfig(), GroundSite(), 12, 15.0)


def test_jammer_target_prefers_nearest():
    up = SatelliteTrack("UP", [0.0], [90.0], [550e3])
    far = SatelliteTrack("FAR", [0.0], [60.0], [700e3])
    sid, u = jammer_target([far, up], 0, (0.0, 1000.0, 0.0))
    assert sid == "UP"
    assert np.linalg.norm(u) == pytest.approx(1.0)
    with pytest.raises(GeometryError):
        jammer_target([SatelliteTrack("LOW", [0.0], [10.0], [2e6])], 0, (0.0, 0.0, 0.0))


def test_dish_channels_shapes(walker_tracks):
    h0, h1, target = dish_jammer_channels(walker_tracks, 0, 3, GroundSite(), LinkBudget(), DishAntenna())
    assert h0.shape == (108, 36) and h1.shape == (108, 1)
    assert target in {t.sat_id for t in walker_tracks}


def test_fixed_jammer_response_is_best_response():
    rng = np.random.default_rng(3)
    h0, h1 = crandn(rng, 4, 2), crandn(rng, 4, 1)
    sol = fixed_jammer_response(h0, h1, [[2.0]], 1.0, 0.1)
    assert sol.iterations == 1 and sol.converged
    assert np.trace(sol.q0).real == pytest.approx(1.0, rel=1e-8)


def test_dish_rate_grows_with_k(walker_tracks):
    args = (walker_tracks, 0)
    fixed = (GroundSite(), LinkBudget(), DishAntenna())
    rates = [dish_jammer_scenario(*args, k, *fixed).rate for k in (1, 3, 5)]
    assert rates[0] <= rates[1] <= rates[2]


def test_dish_nothing_visible():
    low = [SatelliteTrack("LOW", [0.0], [10.0], [2e6])]
    with pytest.raises(GeometryError):
        dish_jammer_scenario(low, 0, 1, GroundSite(), LinkBudget(), DishAntenna())
