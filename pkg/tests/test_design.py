"""Two-stage design pipeline: sensing descent then rate restoration."""

import numpy as np
import pytest

from isacbeam import comm, design, manifold
from isacbeam.arrays import beampattern_trace
from isacbeam.errors import ConfigError, InfeasibleError
from isacbeam.rcg import RcgOptions
from isacbeam.scenario import make_scenario


@pytest.fixture(scope="module")
def small():
    return make_scenario(num_tx=8, num_rx=8, num_users=2,
                         target_angles_deg=(-40.0, 25.0),
                         target_ranges_m=(50.0, 60.0),
                         snapshots=64, seed=2)


@pytest.fixture(scope="module")
def small_results(small):
    return {mode: design.run(small, mode) for mode in design.MODES}


# --------------------------------------------------------- initial point

def test_initial_point_without_users_is_scaled_identity():
    s = make_scenario(num_tx=8, num_rx=8, num_users=0,
                      target_angles_deg=(-40.0, 25.0),
                      target_ranges_m=(50.0, 60.0), snapshots=64, seed=2)
    w0, flags = design.initial_point(s, 0.0)
    assert flags == ()
    expected = np.sqrt(s.power_budget / 8.0) * np.eye(8, dtype=complex)
    assert np.array_equal(w0, expected)


def test_initial_point_shape_and_active_users(small):
    # the warm start is structured, not rate-feasible: the row
    # retraction reshuffles the exact equal-rate powers, and stage II
    # restores the floor later
    r_min = design.rate_target(small)
    w0, flags = design.initial_point(small, r_min)
    assert flags == ()
    assert w0.shape == (8, small.num_streams)
    assert manifold.is_on_manifold(w0, small.row_radius)
    rep = comm.rates(w0, small.channel_matrix(), small.noise_power)
    assert rep.min_rate > 0.5 * r_min


def test_initial_point_clips_unpayable_rate_demand(small):
    w0, flags = design.initial_point(small, 30.0)
    assert flags == ("comm_power_clipped",)
    assert manifold.is_on_manifold(w0, small.row_radius)


def test_initial_point_falls_back_when_zf_impossible():
    s = make_scenario(num_tx=4, num_rx=4, num_users=6,
                      target_angles_deg=(-40.0, 25.0),
                      target_ranges_m=(50.0, 60.0), snapshots=64, seed=2)
    w0, flags = design.initial_point(s, 1.0)
    assert flags == ("zf_infeasible_fallback",)
    assert manifold.is_on_manifold(w0, s.row_radius)


def test_initial_point_zero_sensing_block(small):
    w0, flags = design.initial_point(small, 0.5, zero_sensing=True)
    assert flags == ()
    assert np.array_equal(w0[:, 2:], np.zeros((8, 8)))
    assert manifold.is_on_manifold(w0, small.row_radius)


# ------------------------------------------------------------------- run

def test_run_rejects_unknown_mode(small):
    with pytest.raises(ConfigError):
        design.run(small, "bogus")


def test_omnidirectional_covariance_is_scaled_identity(small, small_results):
    res = small_results["omnidirectional"]
    expected = (small.power_budget / 8.0) * np.eye(8)
    assert np.allclose(res.r_x, expected, atol=1e-12)
    assert res.traces == {"sp1": None, "sp2": None}
    assert res.stage_times == {}
    assert res.rates.min_rate == 0.0
    assert np.isfinite(res.sum_crlb) and res.sum_crlb > 0


def test_sensing_only_is_the_crlb_floor(small_results):
    floor = small_results["sensing_only"].sum_crlb
    for mode in ("sgcdf", "no_dedicated_stream", "omnidirectional"):
        assert floor <= small_results[mode].sum_crlb * (1.0 + 1e-9)


def test_rate_floor_met_by_constrained_modes(small, small_results):
    target = small.overload * comm.max_min_zf_rate(
        small.channel_matrix(), small.noise_power, small.power_budget)
    for mode in ("sgcdf", "no_dedicated_stream"):
        res = small_results[mode]
        assert res.r_min == pytest.approx(target, rel=1e-12)
        assert res.rates.min_rate >= res.r_min - 1e-6


def test_no_dedicated_stream_keeps_sensing_columns_zero(small_results):
    res = small_results["no_dedicated_stream"]
    assert np.array_equal(res.w[:, 2:], np.zeros((8, 8)))


def test_power_accounting(small, small_results):
    per_row = small.power_budget / 8.0
    for res in small_results.values():
        assert np.allclose(np.diag(res.r_x).real, per_row,
                           atol=1e-10 * small.power_budget)
        assert np.trace(res.r_x).real == pytest.approx(small.power_budget,
                                                       rel=1e-9)
        assert np.allclose(res.r_x, res.r_x.conj().T, atol=1e-12)
        assert np.allclose(res.r_x, res.w @ res.w.conj().T, atol=1e-12)


def test_zero_overload_collapses_to_sensing_only():
    s = make_scenario(num_tx=8, num_rx=8, num_users=2,
                      target_angles_deg=(-40.0, 25.0),
                      target_ranges_m=(50.0, 60.0),
                      snapshots=64, seed=4, overload=0.0)
    a = design.run(s, "sgcdf")
    b = design.run(s, "sensing_only")
    assert a.r_min == 0.0
    assert np.array_equal(a.w, b.w)
    assert a.traces["sp2"].termination == "target_met"
    assert a.traces["sp2"].iterations == 0


def test_single_target_design_points_at_it():
    s = make_scenario(num_tx=8, num_rx=8, num_users=0,
                      target_angles_deg=(25.0,), target_ranges_m=(60.0,),
                      snapshots=64, seed=6)
    res = design.run(s, "sensing_only", opts=RcgOptions(eps=1e-6))
    grid_deg = np.linspace(-90.0, 90.0, 361)
    gains = beampattern_trace(res.r_x, np.deg2rad(grid_deg))
    assert grid_deg[np.argmax(gains)] == 25.0


def test_run_is_deterministic(small, small_results):
    again = design.run(small, "sgcdf")
    ref = small_results["sgcdf"]
    assert np.array_equal(again.w, ref.w)
    assert again.sum_crlb == ref.sum_crlb
    assert again.traces["sp1"].iterations == ref.traces["sp1"].iterations
    assert again.traces["sp2"].iterations == ref.traces["sp2"].iterations


def test_stage_times_match_pipeline_shape(small_results):
    sg = small_results["sgcdf"]
    assert set(sg.stage_times) == {"sp1", "sp2"}
    assert all(t >= 0.0 for t in sg.stage_times.values())
    assert sg.wall_time >= sum(sg.stage_times.values()) - 1e-9
    assert set(small_results["sensing_only"].stage_times) == {"sp1"}
    assert small_results["sensing_only"].traces["sp2"] is None


# ---------------------------------------------------------------- stages

def test_solve_sp2_returns_feasible_start_unchanged(small):
    r_min = design.rate_target(small)
    w0, _ = design.initial_point(small, r_min)
    w, trace = design.solve_sp2(small, w0, 0.5 * r_min)
    assert w is w0
    assert trace.termination == "target_met"
    assert trace.iterations == 0


def test_solve_sp2_reports_unreachable_rate():
    s = make_scenario(num_tx=4, num_rx=4, num_users=1,
                      target_angles_deg=(-40.0, 25.0),
                      target_ranges_m=(50.0, 60.0), snapshots=64, seed=3)
    w_start, _ = design.initial_point(s, 0.0)
    with pytest.raises(InfeasibleError) as exc:
        design.solve_sp2(s, w_start, 30.0)
    assert exc.value.detail["r_min"] == 30.0
    assert exc.value.detail["gap"] > 0


def test_sp1_normalizes_and_descends(small_results):
    trace = small_results["sensing_only"].traces["sp1"]
    assert trace.initial_objective == pytest.approx(1.0, rel=1e-12)
    assert trace.final_objective <= 1.0
    assert np.all(np.diff(trace.objectives()) <= 0.0)


def test_rate_target_values(small):
    direct = small.overload * comm.max_min_zf_rate(
        small.channel_matrix(), small.noise_power, small.power_budget)
    assert design.rate_target(small) == pytest.approx(direct, rel=1e-12)
    no_users = make_scenario(num_tx=8, num_rx=8, num_users=0,
                             target_angles_deg=(-40.0, 25.0),
                             target_ranges_m=(50.0, 60.0),
                             snapshots=64, seed=2)
    assert design.rate_target(no_users) == 0.0
