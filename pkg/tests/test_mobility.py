"""Traffic model: path construction, trace generation, CSV round-trip."""

import pytest

from vndnsim.mobility import (CSV_HEADER, KMH, Trace, TraceError,
                              TrafficParams, VehiclePath, build_path,
                              generate_trace, load_trace, save_trace)


# ---------------------------------------------------------------------------
# parameters

def test_params_validate_accepts_defaults():
    TrafficParams().validate()


def test_params_reject_mean_above_max():
    with pytest.raises(ValueError):
        TrafficParams(mean_speed_kmh=70.0, max_speed_kmh=60.0).validate()


def test_params_reject_stop_off_avenue():
    with pytest.raises(ValueError):
        TrafficParams(bus_stops=(200.0,)).validate()


def test_params_reject_negative_count():
    with pytest.raises(ValueError):
        TrafficParams(vehicle_count=-1).validate()


# ---------------------------------------------------------------------------
# single paths

def test_car_crossing_time_closed_form():
    # 172 m at 60 km/h: 172 / (60/3.6) = 10.32 s
    path = build_path(0, 5.0, 60.0 * KMH, 172.0)
    assert path.entry_time == 5.0
    assert path.exit_time == pytest.approx(15.32, abs=1e-9)
    assert path.mean_speed() == pytest.approx(60.0 * KMH)


def test_bus_path_dwells_at_each_stop():
    # 100 m at 10 m/s with stops at 30 and 60 for 5 s each
    path = build_path(1, 0.0, 10.0, 100.0, stops=(60.0, 30.0), dwell=5.0,
                      is_bus=True)
    assert path.samples == [
        (0.0, 0.0, 10.0),
        (3.0, 30.0, 0.0), (8.0, 30.0, 10.0),
        (11.0, 60.0, 0.0), (16.0, 60.0, 10.0),
        (20.0, 100.0, 10.0),
    ]
    assert path.exit_time == 20.0  # 10 s moving plus two dwells
    assert path.mean_speed() == pytest.approx(5.0)


def test_position_interpolates_between_samples():
    path = build_path(0, 0.0, 10.0, 100.0)
    assert path.position_at(0.0) == 0.0
    assert path.position_at(5.0) == pytest.approx(50.0)
    assert path.position_at(10.0) == 100.0


def test_position_none_while_off_avenue():
    path = build_path(0, 2.0, 10.0, 100.0)
    assert path.position_at(1.999) is None
    assert path.position_at(12.001) is None
    assert path.position_at(2.0) == 0.0
    assert path.position_at(12.0) == 100.0


def test_position_constant_during_dwell():
    path = build_path(1, 0.0, 10.0, 100.0, stops=(30.0,), dwell=5.0,
                      is_bus=True)
    assert path.position_at(4.0) == pytest.approx(30.0)
    assert path.position_at(7.9) == pytest.approx(30.0)
    assert path.position_at(9.0) == pytest.approx(40.0)


def test_stops_ignored_for_cars():
    path = build_path(0, 0.0, 10.0, 100.0, stops=(30.0,), dwell=5.0,
                      is_bus=False)
    assert len(path.samples) == 2
    assert path.exit_time == pytest.approx(10.0)


# ---------------------------------------------------------------------------
# trace generation

def test_empty_trace():
    trace = generate_trace(TrafficParams(vehicle_count=0))
    assert trace.vehicles == {}
    assert trace.mean_speed_kmh() == 0.0


def test_default_trace_shape():
    trace = generate_trace(TrafficParams())
    assert len(trace.vehicles) == 125
    assert sum(p.is_bus for p in trace.vehicles.values()) == 12
    assert all(0.0 <= p.entry_time < 300.0 for p in trace.vehicles.values())
    # everyone finishes within the residual crossing time after the window:
    # slowest cruise is 15.5 km/h (40 s) plus 45 s of bus dwell
    assert max(p.exit_time for p in trace.vehicles.values()) < 385.0


def test_default_trace_mean_speed_near_target():
    trace = generate_trace(TrafficParams())
    assert trace.mean_speed_kmh() == pytest.approx(31.0, rel=0.10)


def test_speeds_respect_distribution_bounds():
    params = TrafficParams()
    trace = generate_trace(params)
    low = 0.5 * params.mean_speed_kmh
    for path in trace.vehicles.values():
        cruise = max(s for _, _, s in path.samples)
        assert low * KMH <= cruise <= params.max_speed_kmh * KMH + 1e-9


def test_entries_are_stratified():
    # one vehicle per duration/count slot, in id order
    params = TrafficParams(vehicle_count=30)
    trace = generate_trace(params)
    slot = params.duration / 30
    for vid, path in trace.vehicles.items():
        assert vid * slot <= path.entry_time < (vid + 1) * slot


def test_same_seed_reproduces_exactly():
    a = generate_trace(TrafficParams())
    b = generate_trace(TrafficParams())
    assert a.vehicles.keys() == b.vehicles.keys()
    for vid in a.vehicles:
        assert a.vehicles[vid].samples == b.vehicles[vid].samples
        assert a.vehicles[vid].is_bus == b.vehicles[vid].is_bus


def test_different_seed_differs():
    a = generate_trace(TrafficParams(seed=1))
    b = generate_trace(TrafficParams(seed=2))
    assert any(a.vehicles[v].samples != b.vehicles[v].samples
               for v in a.vehicles)


# ---------------------------------------------------------------------------
# trace files

def _round_trip(tmp_path, trace, max_speed=60.0 * KMH):
    path = tmp_path / "trace.csv"
    save_trace(trace, path)
    return load_trace(path, trace.avenue_length, max_speed)


def test_save_load_round_trip_is_exact(tmp_path):
    trace = generate_trace(TrafficParams(vehicle_count=20))
    loaded = _round_trip(tmp_path, trace)
    assert loaded.vehicles.keys() == trace.vehicles.keys()
    for vid in trace.vehicles:
        assert loaded.vehicles[vid].samples == trace.vehicles[vid].samples


def _write(tmp_path, body):
    path = tmp_path / "bad.csv"
    path.write_text(CSV_HEADER + "\n" + body)
    return path


def test_load_rejects_wrong_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("time,vid,pos,speed\n")
    with pytest.raises(TraceError, match=":1:"):
        load_trace(path, 172.0, 20.0)


def test_load_rejects_malformed_row_with_line_number(tmp_path):
    path = _write(tmp_path, "0.0,0,0.0,5.0\n1.0,zero,10.0,5.0\n")
    with pytest.raises(TraceError, match=":3:"):
        load_trace(path, 172.0, 20.0)


def test_load_rejects_field_count(tmp_path):
    path = _write(tmp_path, "0.0,0,0.0\n")
    with pytest.raises(TraceError, match="expected 4 fields"):
        load_trace(path, 172.0, 20.0)


def test_load_rejects_position_outside_avenue(tmp_path):
    path = _write(tmp_path, "0.0,0,200.0,5.0\n")
    with pytest.raises(TraceError, match="position 200"):
        load_trace(path, 172.0, 20.0)


def test_load_rejects_speed_above_limit(tmp_path):
    path = _write(tmp_path, "0.0,0,0.0,25.0\n")
    with pytest.raises(TraceError, match="speed 25"):
        load_trace(path, 172.0, 20.0)


def test_load_rejects_time_going_backwards(tmp_path):
    path = _write(tmp_path, "0.0,0,0.0,5.0\n0.0,0,10.0,5.0\n")
    with pytest.raises(TraceError, match="time not increasing"):
        load_trace(path, 172.0, 20.0)


def test_load_rejects_reverse_motion(tmp_path):
    path = _write(tmp_path, "0.0,0,50.0,5.0\n1.0,0,40.0,5.0\n")
    with pytest.raises(TraceError, match="moves backwards"):
        load_trace(path, 172.0, 20.0)


def test_load_rejects_single_sample_vehicle(tmp_path):
    path = _write(tmp_path, "0.0,0,0.0,5.0\n")
    with pytest.raises(TraceError, match="fewer than 2 samples"):
        load_trace(path, 172.0, 20.0)


def test_trace_mean_includes_dwell_time():
    trace = Trace(100.0)
    trace.vehicles[0] = build_path(0, 0.0, 10.0, 100.0, stops=(50.0,),
                                   dwell=10.0, is_bus=True)
    # 100 m over 20 s: dwell halves the average
    assert trace.mean_speed_kmh() == pytest.approx(5.0 / KMH)
