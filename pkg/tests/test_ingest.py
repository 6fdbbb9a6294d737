import logging

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings, strategies as st

from leadsafety import ingest as ig
from leadsafety.model import OddBox, validate_incident

from conftest import make_incident, make_state

COLUMNS = ["frame", "id", "x", "y", "xVelocity", "yVelocity", "xAcceleration", "yAcceleration",
           "laneId", "precedingId", "width", "height", "class"]


def vehicle_rows(vid, x0, v, frames, lane=2, preceding=0, length=4.0, y=10.0, vclass="Car", rate=25.0):
    rows = []
    for k, f in enumerate(frames):
        rows.append([f, vid, x0 + v * k / rate - length / 2, y - 1.0, v, 0.0, 0.0, 0.0, lane,
                     preceding, length, 2.0, vclass])
    return rows


def write_csv(path, rows, columns=COLUMNS):
    pd.DataFrame(rows, columns=columns).to_csv(path, index=False)
    return path


def platoon(tmp_path, n_frames=100, cars=2, lane_change_at=None):
    frames = range(1, n_frames + 1)
    rows = []
    for c in range(cars):
        vid = c + 1
        car_rows = vehicle_rows(vid, 200.0 - 30.0 * c, 20.0 + c, frames, preceding=vid - 1 if c else 0)
        if lane_change_at is not None and c == cars - 1:
            for r in car_rows[lane_change_at:]:
                r[8] = 3
                r[9] = 0
        rows += car_rows
    return write_csv(tmp_path / "tracks.csv", rows)


# -- parsing

def test_parse_three_rows(tmp_path):
    path = write_csv(tmp_path / "a.csv", vehicle_rows(7, 50.0, 20.0, [1, 2, 3]))
    tracks = ig.parse_trajectory_csv(path)
    assert len(tracks) == 1 and len(tracks[0]) == 3
    tr = tracks[0]
    assert tr.vehicle_id == 7 and tr.vclass == "car"
    np.testing.assert_allclose(tr.x, [50.0, 50.8, 51.6])  # bbox corner shifted to the center
    assert tr.length == 4.0 and tr.width == 2.0


def test_missing_column_named(tmp_path):
    cols = [c for c in COLUMNS if c != "precedingId"]
    rows = [r[:9] + r[10:] for r in vehicle_rows(1, 0, 10, [1])]
    path = write_csv(tmp_path / "b.csv", rows, cols)
    with pytest.raises(ig.SchemaError, match="precedingId"):
        ig.parse_trajectory_csv(path)


def test_unit_conversion(tmp_path):
    path = write_csv(tmp_path / "c.csv", vehicle_rows(1, 0.0, 36.0, [1, 2]))
    schema = ig.CsvSchema(units={"v_long": "km/h"})
    assert ig.parse_trajectory_csv(path, schema)[0].v_long[0] == pytest.approx(10.0)


def test_non_numeric_cell_reports_row(tmp_path):
    rows = vehicle_rows(1, 0.0, 20.0, [1, 2, 3])
    rows[1][2] = "oops"
    with pytest.raises(ig.ParseError, match="row 3"):
        ig.parse_trajectory_csv(write_csv(tmp_path / "d.csv", rows))


def test_empty_file_warns(tmp_path, caplog):
    path = tmp_path / "e.csv"
    path.write_text("")
    with caplog.at_level(logging.WARNING):
        assert ig.parse_trajectory_csv(path) == []
    assert "empty" in caplog.text


def test_reverse_direction_rotated(tmp_path):
    rows = vehicle_rows(1, 300.0, -20.0, [1, 2, 3])
    tr = ig.parse_trajectory_csv(write_csv(tmp_path / "f.csv", rows))[0]
    assert tr.direction == -1
    assert (tr.v_long > 0).all() and np.all(np.diff(tr.x) > 0)


def test_schema_validation(tmp_path):
    with pytest.raises(ig.SchemaError):
        ig.CsvSchema(units={"x": "furlong"})
    with pytest.raises(ig.SchemaError):
        ig.CsvSchema(position_ref="corner")
    with pytest.raises(ig.SchemaError, match="unknown schema keys"):
        ig.CsvSchema.from_dict({"colums": {}})


# -- lead-pair extraction

def test_two_car_platoon(tmp_path):
    tracks = ig.parse_trajectory_csv(platoon(tmp_path))
    ds = ig.extract_lead_pairs(tracks, lanes=[2])
    assert ds.N_I == 1 and ds.N_s == 100
    inc = ds.incidents[0]
    assert (inc.sv_id, inc.pov_id) == (2, 1)
    # centers 30 m apart at frame 1, 4 m cars, follower 1 m/s faster
    assert inc.states[0].dhw == pytest.approx(26.0)
    assert inc.states[0].dv == pytest.approx(1.0)


def test_lane_change_truncates(tmp_path):
    tracks = ig.parse_trajectory_csv(platoon(tmp_path, lane_change_at=50))
    ds = ig.extract_lead_pairs(tracks, lanes=[2, 3])
    assert ds.N_I == 1 and ds.N_s == 50
    assert [s.t for s in ds.incidents[0].states] == list(range(1, 51))


def test_three_car_platoon(tmp_path):
    ds = ig.extract_lead_pairs(ig.parse_trajectory_csv(platoon(tmp_path, cars=3)), lanes=[2])
    assert sorted((i.sv_id, i.pov_id) for i in ds.incidents) == [(2, 1), (3, 2)]


def test_odd_filter_and_default_lanes(tmp_path):
    tracks = ig.parse_trajectory_csv(platoon(tmp_path))
    assert ig.rightmost_lanes(tracks) == {2}
    tight = OddBox(dhw=(0, 20), v_sv=(0, 45), dv=(-15, 15))
    assert ig.extract_lead_pairs(tracks, odd=tight).N_s == 0


def test_extracted_pov_always_ahead(tmp_path):
    ds = ig.extract_lead_pairs(ig.parse_trajectory_csv(platoon(tmp_path, cars=3)), lanes=[2])
    for inc in ds.incidents:
        for s in inc.states:
            assert s.pov.x > s.sv.x and s.dhw >= 0


# -- segmentation

def stream(pairs_and_times):
    return [(sv, pov, make_state(30, 20, 20, t=t)) for sv, pov, t in pairs_and_times]


def test_segment_examples():
    assert [len(i) for i in ig.segment_incidents(stream([(1, 2, t) for t in (4, 5, 6, 8, 9)]))] == [3, 2]
    assert [len(i) for i in ig.segment_incidents(stream([(1, 2, 0)]))] == [1]
    split = ig.segment_incidents(stream([(1, 2, 0), (1, 2, 1), (1, 3, 2), (1, 3, 3)]))
    assert [(i.pov_id, len(i)) for i in split] == [(2, 2), (3, 2)]
    assert ig.segment_incidents([]) == []


def test_segment_drops_after_collision():
    s = [(1, 2, make_state(5, 20, 15, t=0)), (1, 2, make_state(0.0, 20, 15, t=1, collision=True)),
         (1, 2, make_state(0.0, 20, 15, t=2, collision=True))]
    (inc,) = ig.segment_incidents(s)
    assert len(inc) == 2 and inc.collided


@given(st.lists(st.integers(1, 6), min_size=1, max_size=6))
def test_segment_roundtrip(lengths):
    incidents, t = [], 0
    for k, n in enumerate(lengths):
        incidents.append([(1, 2 + k % 2, make_state(30, 20, 20, t=t + j)) for j in range(n)])
        t += n + 1  # keep a gap between neighbours
    flat = [x for inc in incidents for x in inc]
    assert [len(i) for i in ig.segment_incidents(flat)] == lengths


# -- resampling

def rate_incident(n, hz):
    return make_incident([(50 - 0.01 * k, 20, 19.9) for k in range(n)], dt=1.0 / hz)


def test_resample_integer_strides():
    out = ig.resample(rate_incident(100, 25.0), 5.0)
    assert len(out) == 20 and out.frequency == 5.0
    assert out.states[1].dhw == pytest.approx(50 - 0.05)
    assert all(s.dt == pytest.approx(0.2) for s in out.states)
    assert len(ig.resample(rate_incident(100, 50.0), 5.0)) == 10
    same = ig.resample(rate_incident(7, 5.0), 5.0)
    assert [s.dhw for s in same.states] == [s.dhw for s in rate_incident(7, 5.0).states]
    assert validate_incident(out) == []


def test_resample_interpolates_fractional_ratio():
    out = ig.resample(rate_incident(31, 30.0), 20.0)
    assert len(out) == 21
    assert out.states[1].dhw == pytest.approx(50 - 0.015)


def test_resample_keeps_terminal_collision():
    rows = [(10 - k, 20, 15) for k in range(10)] + [(0.0, 20, 15)]
    out = ig.resample(make_incident(rows, dt=1 / 25), 5.0)
    assert out.collided and validate_incident(out) == []


def test_resample_upsampling_error():
    with pytest.raises(ValueError, match="upsampling unsupported"):
        ig.resample(rate_incident(10, 5.0), 25.0)


# -- synthetic scenarios

def script(**kw):
    base = dict(v_sv0=20.0, v_pov0=20.0, gap0=40.0, freq_hz=5.0, duration_s=10.0)
    base.update(kw)
    return ig.ScenarioScript.from_dict(base)


def test_synth_hold_keeps_gap():
    inc = ig.synth_scenario(script())
    assert len(inc) == 51
    np.testing.assert_allclose([s.dhw for s in inc.states], 40.0)


def test_synth_brake_to_stop():
    inc = ig.synth_scenario(script(gap0=200.0, pov_actions=[{"t_start": 0, "kind": "brake_to_stop",
                                                             "magnitude": 4.0}]))
    v_pov = np.array([s.v_pov for s in inc.states])
    assert v_pov[25] == 0.0 and v_pov[24] == pytest.approx(0.8)
    assert (v_pov[25:] == 0).all()


def test_synth_collision_time():
    inc = ig.synth_scenario(script(v_sv0=25.0, gap0=20.0))
    assert inc.collided and len(inc) == 21
    assert inc.states[-1].t * 0.2 == pytest.approx(4.0)
    assert inc.states[-2].dhw == pytest.approx(1.0)


def test_profile_motion_exact():
    x, v, a = ig.profile_motion(10.0, [ig.Action(1.0, "decel", 2.0)], np.array([0.0, 1.0, 3.0, 7.0]))
    np.testing.assert_allclose(v, [10, 10, 6, 0])
    np.testing.assert_allclose(x, [0, 10, 10 + 20 - 4, 10 + 25])


def test_script_validation(tmp_path):
    with pytest.raises(ig.ConfigError):
        script(duration_s=0)
    with pytest.raises(ig.ConfigError):
        script(v_sv0=-1)
    with pytest.raises(ig.ConfigError):
        script(pov_actions=[{"t_start": 0, "kind": "warp", "magnitude": 1}])
    with pytest.raises(ig.ConfigError):
        ig.ScenarioScript.from_dict({"v_sv0": 1})
    bad = tmp_path / "bad.yaml"
    bad.write_text("v_sv0: [unclosed")
    with pytest.raises(ig.ConfigError):
        ig.load_scenario(bad)


def test_load_scenario_yaml(tmp_path):
    p = tmp_path / "s.yaml"
    p.write_text("v_sv0: 25\nv_pov0: 20\ngap0: 20\nfreq_hz: 5\nduration_s: 10\n")
    assert ig.load_scenario(p).v_sv0 == 25


speeds = st.floats(0, 40)


@settings(max_examples=40, deadline=None)
@given(speeds, speeds, st.floats(0.5, 150), st.lists(
    st.tuples(st.floats(0, 9), st.sampled_from(ig.ACTION_KINDS), st.floats(0, 8)), max_size=3))
def test_synth_always_valid(v_sv, v_pov, gap, actions):
    acts = [{"t_start": t, "kind": k, "magnitude": m} for t, k, m in sorted(actions)]
    inc = ig.synth_scenario(script(v_sv0=v_sv, v_pov0=v_pov, gap0=gap, pov_actions=acts, sv_actions=acts[:1]))
    assert validate_incident(inc) == []


def test_synthetic_corpus_shape():
    ds = ig.synthetic_corpus(n_sv=2, states_per_sv=800, seed=3)
    assert len(ds.sv_ids) == 2
    assert ds.N_s >= 1600
    assert all(validate_incident(i) == [] for i in ds.incidents)
    again = ig.synthetic_corpus(n_sv=2, states_per_sv=800, seed=3)
    np.testing.assert_array_equal(ds.table.dhw, again.table.dhw)
