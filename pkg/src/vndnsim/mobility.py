"""Avenue traffic model: synthetic trace generation and trace file handling.

Vehicles cross a one-way avenue at a constant cruise speed drawn from a
triangular distribution; a configurable fraction are buses that pull over
at each bus stop for a fixed dwell.  There is no car-following model, so a
trace is just a piecewise-linear position function per vehicle.  Traces
round-trip exactly through CSV, which keeps runs reproducible from a file.
"""

import random
from bisect import bisect_right
from dataclasses import dataclass, field

KMH = 1 / 3.6  # km/h in m/s


@dataclass
class TrafficParams:
    avenue_length: float = 172.0
    vehicle_count: int = 125
    duration: float = 300.0
    mean_speed_kmh: float = 31.0
    max_speed_kmh: float = 60.0
    bus_stops: tuple = (43.0, 86.0, 129.0)
    stop_dwell: float = 15.0
    bus_fraction: float = 0.10
    seed: int = 1

    def validate(self):
        if self.avenue_length <= 0:
            raise ValueError("avenue_length must be > 0")
        if self.vehicle_count < 0:
            raise ValueError("vehicle_count must be >= 0")
        if self.duration <= 0:
            raise ValueError("duration must be > 0")
        if not 0 < self.mean_speed_kmh <= self.max_speed_kmh:
            raise ValueError("need 0 < mean_speed_kmh <= max_speed_kmh")
        if not 0.0 <= self.bus_fraction <= 1.0:
            raise ValueError("bus_fraction must be in [0, 1]")
        if self.stop_dwell < 0:
            raise ValueError("stop_dwell must be >= 0")
        for stop in self.bus_stops:
            if not 0 < stop < self.avenue_length:
                raise ValueError("bus stop %r outside the avenue" % (stop,))


class VehiclePath:
    """Piecewise-linear motion of one vehicle.

    samples are (time_s, position_m, speed_mps) breakpoints; the speed
    column is the speed of the segment that starts at the sample.
    """

    __slots__ = ("vehicle_id", "samples", "is_bus", "_times", "_positions")

    def __init__(self, vehicle_id, samples, is_bus=False):
        self.vehicle_id = vehicle_id
        self.samples = samples
        self.is_bus = is_bus
        self._times = [s[0] for s in samples]
        self._positions = [s[1] for s in samples]

    @property
    def entry_time(self):
        return self._times[0]

    @property
    def exit_time(self):
        return self._times[-1]

    def position_at(self, t):
        """Interpolated position, or None while off the avenue."""
        times = self._times
        if t < times[0] or t > times[-1]:
            return None
        i = bisect_right(times, t)
        if i >= len(times):
            return self._positions[-1]
        if i == 0:
            return self._positions[0]
        t0, t1 = times[i - 1], times[i]
        p0, p1 = self._positions[i - 1], self._positions[i]
        if t1 == t0:
            return p1
        return p0 + (p1 - p0) * (t - t0) / (t1 - t0)

    def mean_speed(self):
        """Distance covered over time present, in m/s."""
        span = self.exit_time - self.entry_time
        if span <= 0:
            return 0.0
        return (self._positions[-1] - self._positions[0]) / span


@dataclass
class Trace:
    avenue_length: float
    vehicles: dict = field(default_factory=dict)  # vehicle_id -> VehiclePath

    def position_at(self, vehicle_id, t):
        return self.vehicles[vehicle_id].position_at(t)

    def mean_speed_kmh(self):
        """Average of per-vehicle (distance/time), dwell time included."""
        paths = self.vehicles.values()
        if not paths:
            return 0.0
        return sum(p.mean_speed() for p in paths) / len(self.vehicles) / KMH


def build_path(vehicle_id, entry_time, cruise_speed, avenue_length,
               stops=(), dwell=0.0, is_bus=False):
    """Breakpoint list for one vehicle; buses halt at each stop for `dwell`."""
    samples = [(entry_time, 0.0, cruise_speed)]
    t = entry_time
    pos = 0.0
    if is_bus and dwell > 0:
        for stop in sorted(stops):
            t += (stop - pos) / cruise_speed
            pos = stop
            samples.append((t, pos, 0.0))
            t += dwell
            samples.append((t, pos, cruise_speed))
    t += (avenue_length - pos) / cruise_speed
    samples.append((t, avenue_length, cruise_speed))
    return VehiclePath(vehicle_id, samples, is_bus)


def generate_trace(params):
    """Synthesize a seeded trace from traffic parameters.

    Entry times are stratified over the duration (one per slot, jittered),
    cruise speeds come from a triangular distribution between half the mean
    and the maximum with its mode at the mean, and the bus count is the
    rounded quota rather than a per-vehicle coin flip so run-to-run totals
    stay comparable.
    """
    params.validate()
    rng = random.Random("%d/traffic" % params.seed)
    count = params.vehicle_count
    mean = params.mean_speed_kmh * KMH
    top = params.max_speed_kmh * KMH
    low = 0.5 * mean
    slot = params.duration / count if count else 0.0
    bus_count = round(count * params.bus_fraction)
    buses = set(rng.sample(range(count), bus_count)) if bus_count else set()
    trace = Trace(params.avenue_length)
    for vid in range(count):
        entry = (vid + rng.random()) * slot
        speed = rng.triangular(low, top, mean) if top > low else mean
        trace.vehicles[vid] = build_path(
            vid, entry, speed, params.avenue_length,
            params.bus_stops, params.stop_dwell, vid in buses)
    return trace


CSV_HEADER = "time_s,vehicle_id,position_m,speed_mps"


def save_trace(trace, path):
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for vid in sorted(trace.vehicles):
            for t, pos, speed in trace.vehicles[vid].samples:
                # str() round-trips floats exactly
                fh.write("%s,%d,%s,%s\n" % (t, vid, pos, speed))


class TraceError(ValueError):
    pass


def load_trace(path, avenue_length, max_speed_mps):
    """Read a trace CSV back, validating every row against the model bounds."""
    rows = {}
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if header != CSV_HEADER:
            raise TraceError("%s:1: expected header %r" % (path, CSV_HEADER))
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise TraceError("%s:%d: expected 4 fields" % (path, lineno))
            try:
                t = float(parts[0])
                vid = int(parts[1])
                pos = float(parts[2])
                speed = float(parts[3])
            except ValueError:
                raise TraceError(
                    "%s:%d: malformed row %r" % (path, lineno, line)) from None
            if not 0.0 <= pos <= avenue_length:
                raise TraceError(
                    "%s:%d: position %g outside [0, %g]"
                    % (path, lineno, pos, avenue_length))
            if not 0.0 <= speed <= max_speed_mps + 1e-9:
                raise TraceError(
                    "%s:%d: speed %g outside [0, %g]"
                    % (path, lineno, speed, max_speed_mps))
            rows.setdefault(vid, []).append((lineno, t, pos, speed))
    trace = Trace(avenue_length)
    for vid, entries in sorted(rows.items()):
        samples = []
        for lineno, t, pos, speed in entries:
            if samples:
                if t <= samples[-1][0]:
                    raise TraceError(
                        "%s:%d: time not increasing for vehicle %d"
                        % (path, lineno, vid))
                if pos < samples[-1][1]:
                    raise TraceError(
                        "%s:%d: vehicle %d moves backwards"
                        % (path, lineno, vid))
            samples.append((t, pos, speed))
        if len(samples) < 2:
            raise TraceError("%s: vehicle %d has fewer than 2 samples" % (path, vid))
        trace.vehicles[vid] = VehiclePath(vid, samples)
    return trace
