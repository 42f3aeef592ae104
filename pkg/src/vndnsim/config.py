"""Scenario configuration: defaults, INI loading, and the settings hash.

Every knob lives in a dataclass with a workable default, so an empty file
(or no file) is a valid configuration.  The INI schema is closed: unknown
sections or keys are an error, because a silently ignored typo in a batch
config wastes hours of runs.

The settings hash covers everything EXCEPT the run seed, the deployment
mode and the scenario id.  Those three are the matrix axes; runs that only
differ along them belong to the same experiment and share a results
directory.
"""

import configparser
import hashlib
from dataclasses import dataclass, field

from .mobility import TrafficParams
from .wireless import PhyProfile
from .ndn import MODE_LABELS


class ConfigError(Exception):
    pass


@dataclass
class TopologyConfig:
    ap_count: int = 3
    ap_link_rate: float = 1e9     # bit/s, AP <-> router
    ap_link_delay: float = 0.0005
    backhaul_rate: float = 1e9    # bit/s, router <-> producer
    backhaul_delay: float = 0.030
    cs_capacity_ap: int = 10000
    cs_capacity_router: int = 10000
    hysteresis_margin: float = 5.0     # metres; see wireless.pick_access_point

    def validate(self):
        if self.ap_count < 1:
            raise ConfigError("topology.ap_count must be at least 1")
        if self.ap_link_rate <= 0 or self.backhaul_rate <= 0:
            raise ConfigError("topology link rates must be positive")
        if self.ap_link_delay < 0 or self.backhaul_delay < 0:
            raise ConfigError("topology link delays must not be negative")
        if self.cs_capacity_ap < 0 or self.cs_capacity_router < 0:
            raise ConfigError("topology cache capacities must not be negative")
        if self.hysteresis_margin < 0:
            raise ConfigError("topology.hysteresis_margin must not be negative")


@dataclass
class AppsConfig:
    scenario: int = 1            # 1 = all distinct, 2 = half shared
    rate_min: float = 50.0       # interests/s, lower bound of per-vehicle draw
    rate_max: float = 100.0
    shared_rate: float = 100.0   # name changes per second for shared consumers
    shared_fraction: float = 0.5
    interest_lifetime: float = 4.0
    payload_size: int = 1024

    def validate(self):
        if self.scenario not in (1, 2):
            raise ConfigError("apps.scenario must be 1 or 2")
        if not 0 < self.rate_min <= self.rate_max:
            raise ConfigError("apps rate bounds must satisfy 0 < rate_min <= rate_max")
        if self.shared_rate <= 0:
            raise ConfigError("apps.shared_rate must be positive")
        if not 0.0 <= self.shared_fraction <= 1.0:
            raise ConfigError("apps.shared_fraction must lie in [0, 1]")
        if self.interest_lifetime <= 0:
            raise ConfigError("apps.interest_lifetime must be positive")
        if self.payload_size < 0:
            raise ConfigError("apps.payload_size must not be negative")


@dataclass
class ModeConfig:
    deployment: str = "standard"
    mac_ttl: float = 2.0  # seconds a learned address stays usable

    def validate(self):
        if self.deployment not in MODE_LABELS:
            raise ConfigError("mode.deployment must be one of %s"
                              % ", ".join(MODE_LABELS))
        if self.mac_ttl <= 0:
            raise ConfigError("mode.mac_ttl must be positive")


@dataclass
class RunConfig:
    seed: int = 1
    association_check_interval: float = 0.1
    pit_sweep_interval: float = 1.0
    pit_capacity: int = 0  # 0 = unbounded
    trace_file: str = ""   # optional pre-generated mobility CSV

    def validate(self):
        if self.association_check_interval <= 0:
            raise ConfigError("run.association_check_interval must be positive")
        if self.pit_sweep_interval <= 0:
            raise ConfigError("run.pit_sweep_interval must be positive")
        if self.pit_capacity < 0:
            raise ConfigError("run.pit_capacity must not be negative")


@dataclass
class ScenarioConfig:
    phy: PhyProfile = field(default_factory=PhyProfile)
    topology: TopologyConfig = field(default_factory=TopologyConfig)
    traffic: TrafficParams = field(default_factory=TrafficParams)
    apps: AppsConfig = field(default_factory=AppsConfig)
    mode: ModeConfig = field(default_factory=ModeConfig)
    run: RunConfig = field(default_factory=RunConfig)

    def validate(self):
        try:
            self.phy.validate()
            self.traffic.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        self.topology.validate()
        self.apps.validate()
        self.mode.validate()
        self.run.validate()


def default_config():
    return ScenarioConfig()


# ---------------------------------------------------------------------------
# INI schema

def _float_tuple(text):
    parts = [p for p in (piece.strip() for piece in text.split(",")) if p]
    return tuple(float(p) for p in parts)


_SCHEMA = {
    "phy": {
        "unicast_rate": float,
        "basic_rate": float,
        "per_frame_overhead": float,
        "ack_overhead": float,
        "retry_limit": int,
        "range_m": float,
        "loss_rate": float,
        "broadcast_loss_rate": float,
        "queue_max_delay": float,
    },
    "topology": {
        "ap_count": int,
        "ap_link_rate": float,
        "ap_link_delay": float,
        "backhaul_rate": float,
        "backhaul_delay": float,
        "cs_capacity_ap": int,
        "cs_capacity_router": int,
        "hysteresis_margin": float,
    },
    "traffic": {
        "avenue_length": float,
        "vehicle_count": int,
        "duration": float,
        "mean_speed_kmh": float,
        "max_speed_kmh": float,
        "bus_stops": _float_tuple,
        "stop_dwell": float,
        "bus_fraction": float,
    },
    "apps": {
        "scenario": int,
        "rate_min": float,
        "rate_max": float,
        "shared_rate": float,
        "shared_fraction": float,
        "interest_lifetime": float,
        "payload_size": int,
    },
    "mode": {
        "deployment": str,
        "mac_ttl": float,
    },
    "run": {
        "seed": int,
        "association_check_interval": float,
        "pit_sweep_interval": float,
        "pit_capacity": int,
        "trace_file": str,
    },
}

_SECTION_TARGET = {
    "phy": "phy",
    "topology": "topology",
    "traffic": "traffic",
    "apps": "apps",
    "mode": "mode",
    "run": "run",
}


def load_config(path):
    """Parse an INI file into a ScenarioConfig; unknown names are errors."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError("cannot read config %s: %s" % (path, exc)) from exc
    except configparser.Error as exc:
        raise ConfigError("cannot parse config %s: %s" % (path, exc)) from exc

    cfg = ScenarioConfig()
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError("unknown config section [%s] in %s"
                              % (section, path))
        keys = _SCHEMA[section]
        target = getattr(cfg, _SECTION_TARGET[section])
        for key, raw in parser.items(section):
            if key not in keys:
                raise ConfigError("unknown key %s.%s in %s"
                                  % (section, key, path))
            convert = keys[key]
            try:
                value = convert(raw)
            except ValueError as exc:
                raise ConfigError("bad value for %s.%s: %r (%s)"
                                  % (section, key, raw, exc)) from exc
            setattr(target, key, value)
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# Canonical text and hash

_HASH_EXCLUDED = {("run", "seed"), ("mode", "deployment"), ("apps", "scenario")}


def canonical_items(cfg, include_axes=False):
    """Sorted (section.key, value) pairs describing the configuration."""
    items = []
    for section, schema in sorted(_SCHEMA.items()):
        target = getattr(cfg, _SECTION_TARGET[section])
        for key in sorted(schema):
            if not include_axes and (section, key) in _HASH_EXCLUDED:
                continue
            value = getattr(target, key)
            if isinstance(value, tuple):
                rendered = ",".join(repr(v) for v in value)
            elif isinstance(value, float):
                rendered = repr(value)
            else:
                rendered = str(value)
            items.append(("%s.%s" % (section, key), rendered))
    return items


def config_hash(cfg):
    """Short digest of all settings except seed, deployment and scenario."""
    text = "\n".join("%s=%s" % pair for pair in canonical_items(cfg))
    return hashlib.sha256(text.encode()).hexdigest()[:12]
