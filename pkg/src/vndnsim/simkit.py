"""Scenario assembly and the end-to-end run loop.

Topology is fixed in shape: `ap_count` roadside access points spread evenly
along the avenue, each wired to one router, which is wired to one producer.
Vehicles carry a consumer application and associate with whichever AP the
hysteresis rule picks.  Everything runs on a single event queue, so a run
is a pure function of its configuration and seed.

Seeded random streams are kept separate by purpose (traffic, app
assignment, nonces, radio losses) so that changing one knob does not
scramble the draws of an unrelated subsystem.
"""

import gc
import math
import random
from dataclasses import dataclass, replace

from . import mobility
from .events import EventQueue
from .ndn import (APP, WIRED, WIRELESS, Data, DeploymentMode, Face,
                  Forwarder, Interest)
from .stats import AppRow, NodeRow, RunMetrics
from .wireless import Bss, Frame, LinkStats, pick_access_point

DISTINCT = "distinct"
SHARED = "shared"

DISTINCT_PREFIX = ("veh",)
SHARED_PREFIX = ("shared",)

# face numbering per node role
V_APP, V_WIFI = 0, 1
AP_WIFI, AP_WIRE = 0, 1
P_WIRE, P_APP = 0, 1

AP_MAC_BASE = 0x020000AA0000
VEHICLE_MAC_BASE = 0x020000000000

DRAIN_TAIL = 5.0  # seconds the queue keeps running after the last exit


def distinct_name(vehicle_id, seq):
    return ("veh", str(vehicle_id), str(seq))


def shared_name(now, shared_rate):
    """All shared consumers asking at the same instant ask for this name."""
    return ("shared", str(int(now * shared_rate)))


@dataclass
class ConsumerSpec:
    kind: str    # DISTINCT or SHARED
    rate: float  # interests per second


def assign_apps(vehicle_ids, scenario, seed, rate_min=50.0, rate_max=100.0,
                shared_fraction=0.5):
    """Per-vehicle consumer specs for a scenario.

    Rates are drawn first for every vehicle in id order, then (scenario 2
    only) the shared group is sampled, so the rate draws do not depend on
    the scenario.  Scenario 2 makes ceil(n * shared_fraction) vehicles
    shared consumers.
    """
    ids = sorted(vehicle_ids)
    rng = random.Random("%d/apps" % seed)
    rates = {vid: rng.uniform(rate_min, rate_max) for vid in ids}
    shared = set()
    if scenario == 2 and ids:
        shared = set(rng.sample(ids, math.ceil(len(ids) * shared_fraction)))
    return {vid: ConsumerSpec(SHARED if vid in shared else DISTINCT,
                              rates[vid])
            for vid in ids}


class ConsumerApp:
    __slots__ = ("vehicle_id", "kind", "rate", "period", "shared_rate",
                 "seq", "interests_sent", "data_received")

    def __init__(self, vehicle_id, spec, shared_rate):
        self.vehicle_id = vehicle_id
        self.kind = spec.kind
        self.rate = spec.rate
        self.period = 1.0 / spec.rate
        self.shared_rate = shared_rate
        self.seq = 0
        self.interests_sent = 0
        self.data_received = 0

    def next_name(self, now):
        if self.kind == SHARED:
            return shared_name(now, self.shared_rate)
        name = distinct_name(self.vehicle_id, self.seq)
        self.seq += 1
        return name


class WiredLink:
    """Point-to-point pipe: serialization time plus propagation delay."""

    __slots__ = ("queue", "rate", "delay", "deliver", "ends")

    def __init__(self, queue, rate, delay, deliver, end_a, end_b):
        self.queue = queue
        self.rate = rate
        self.delay = delay
        self.deliver = deliver  # fn(node_id, face_id, packet, is_interest)
        self.ends = {end_a: end_b, end_b: end_a}

    def send(self, from_end, packet, is_interest):
        node_id, face_id = self.ends[from_end]
        latency = packet.size * 8.0 / self.rate + self.delay
        self.queue.schedule(latency, self.deliver,
                            node_id, face_id, packet, is_interest)


class Vehicle:
    __slots__ = ("vid", "node_id", "mac", "path", "forwarder", "app",
                 "bss_id", "active", "handovers")

    def __init__(self, vid, path, forwarder, app):
        self.vid = vid
        self.node_id = "v%d" % vid
        self.mac = VEHICLE_MAC_BASE + vid
        self.path = path
        self.forwarder = forwarder
        self.app = app
        self.bss_id = None
        self.active = False
        self.handovers = 0


class Simulation:
    """One configured run.  Build once, call run() once."""

    def __init__(self, cfg):
        cfg.validate()
        self.cfg = cfg
        self.queue = EventQueue()
        self.mode = DeploymentMode.from_label(cfg.mode.deployment)
        self.link_stats = LinkStats()
        seed = cfg.run.seed
        self._loss_rng = random.Random("%d/loss" % seed)
        self._nonce_rng = random.Random("%d/nonce" % seed)
        self._interest_lifetime = cfg.apps.interest_lifetime

        if cfg.run.trace_file:
            self.trace = mobility.load_trace(
                cfg.run.trace_file, cfg.traffic.avenue_length,
                cfg.traffic.max_speed_kmh * mobility.KMH)
        else:
            self.trace = mobility.generate_trace(
                replace(cfg.traffic, seed=seed))

        self.forwarders = {}
        self.wired = {}  # (node_id, face_id) -> WiredLink
        # vehicle positions sampled at the association check interval; the
        # radio reads this instead of interpolating per frame
        self._pos_cache = {}
        self._build_infrastructure()
        self._build_vehicles()

        exits = [v.path.exit_time for v in self.vehicles.values()]
        last = max(exits) if exits else cfg.traffic.duration
        self.horizon = last + DRAIN_TAIL

        interval = cfg.run.association_check_interval
        self.queue.schedule_at(interval, self._association_sweep)
        self.queue.schedule_at(cfg.run.pit_sweep_interval, self._pit_sweep)

    # -- construction -------------------------------------------------------

    def _build_infrastructure(self):
        cfg = self.cfg
        n = cfg.topology.ap_count
        length = cfg.traffic.avenue_length
        self.ap_sites = [(i, length * (2 * i + 1) / (2 * n)) for i in range(n)]
        self.bsses = []
        for i, pos in self.ap_sites:
            node_id = "ap%d" % i
            fwd = Forwarder(node_id, self.mode,
                            [Face(AP_WIFI, WIRELESS), Face(AP_WIRE, WIRED)],
                            cs_capacity=cfg.topology.cs_capacity_ap,
                            mac_ttl=cfg.mode.mac_ttl,
                            pit_capacity=cfg.run.pit_capacity)
            fwd.register_route(DISTINCT_PREFIX, AP_WIRE)
            fwd.register_route(SHARED_PREFIX, AP_WIRE)
            self.forwarders[node_id] = fwd
            self.bsses.append(Bss(node_id, AP_MAC_BASE + i, pos, channel=i,
                                  profile=cfg.phy, queue=self.queue,
                                  rng=self._loss_rng,
                                  deliver=self._deliver_frame,
                                  position_of=self._pos_cache.get,
                                  stats=self.link_stats))
            link = WiredLink(self.queue, cfg.topology.ap_link_rate,
                             cfg.topology.ap_link_delay, self._deliver_wire,
                             (node_id, AP_WIRE), ("router", i))
            self.wired[(node_id, AP_WIRE)] = link
            self.wired[("router", i)] = link

        router = Forwarder("router", self.mode,
                           [Face(i, WIRED) for i in range(n + 1)],
                           cs_capacity=cfg.topology.cs_capacity_router,
                           mac_ttl=cfg.mode.mac_ttl,
                           pit_capacity=cfg.run.pit_capacity)
        router.register_route(DISTINCT_PREFIX, n)
        router.register_route(SHARED_PREFIX, n)
        self.forwarders["router"] = router

        producer = Forwarder("producer", self.mode,
                             [Face(P_WIRE, WIRED), Face(P_APP, APP)],
                             mac_ttl=cfg.mode.mac_ttl,
                             pit_capacity=cfg.run.pit_capacity)
        producer.register_route(DISTINCT_PREFIX, P_APP)
        producer.register_route(SHARED_PREFIX, P_APP)
        self.forwarders["producer"] = producer
        self.producer_prefixes = (DISTINCT_PREFIX, SHARED_PREFIX)

        backhaul = WiredLink(self.queue, cfg.topology.backhaul_rate,
                             cfg.topology.backhaul_delay, self._deliver_wire,
                             ("router", n), ("producer", P_WIRE))
        self.wired[("router", n)] = backhaul
        self.wired[("producer", P_WIRE)] = backhaul

        self.fixed_order = ["ap%d" % i for i in range(n)] + ["router", "producer"]

    def _build_vehicles(self):
        cfg = self.cfg
        specs = assign_apps(self.trace.vehicles, cfg.apps.scenario,
                            cfg.run.seed, cfg.apps.rate_min,
                            cfg.apps.rate_max, cfg.apps.shared_fraction)
        self.vehicles = {}
        self.vehicles_by_node = {}
        self.active_vehicles = {}
        for vid in sorted(self.trace.vehicles):
            path = self.trace.vehicles[vid]
            node_id = "v%d" % vid
            fwd = Forwarder(node_id, self.mode,
                            [Face(V_APP, APP), Face(V_WIFI, WIRELESS)],
                            mac_ttl=cfg.mode.mac_ttl,
                            pit_capacity=cfg.run.pit_capacity)
            fwd.register_route((), V_WIFI)  # default route: the radio
            app = ConsumerApp(vid, specs[vid], cfg.apps.shared_rate)
            vehicle = Vehicle(vid, path, fwd, app)
            self.vehicles[vid] = vehicle
            self.vehicles_by_node[node_id] = vehicle
            self.forwarders[node_id] = fwd
            self.queue.schedule_at(path.entry_time, self._vehicle_enter, vid)

    # -- lifecycle events -----------------------------------------------------

    def _vehicle_enter(self, vid):
        vehicle = self.vehicles[vid]
        vehicle.active = True
        self.active_vehicles[vid] = vehicle
        now = self.queue.now
        self._associate(vehicle, now)
        self.queue.schedule(vehicle.app.period, self._consumer_fire, vid)
        self.queue.schedule_at(vehicle.path.exit_time, self._vehicle_exit, vid)

    def _vehicle_exit(self, vid):
        vehicle = self.vehicles[vid]
        vehicle.active = False
        del self.active_vehicles[vid]
        self._pos_cache.pop(vehicle.node_id, None)
        if vehicle.bss_id is not None:
            self.bsses[vehicle.bss_id].remove_member(vehicle.node_id)
            vehicle.bss_id = None

    def _consumer_fire(self, vid):
        vehicle = self.vehicles[vid]
        if not vehicle.active:
            return
        now = self.queue.now
        app = vehicle.app
        interest = Interest(app.next_name(now),
                            self._nonce_rng.getrandbits(32),
                            self._interest_lifetime)
        app.interests_sent += 1
        actions = vehicle.forwarder.on_incoming_interest(
            V_APP, None, interest, now)
        self._dispatch(vehicle.node_id, actions, now)
        nxt = now + app.period
        if nxt <= vehicle.path.exit_time:
            self.queue.schedule_at(nxt, self._consumer_fire, vid)

    def _association_sweep(self):
        now = self.queue.now
        for vehicle in list(self.active_vehicles.values()):
            self._associate(vehicle, now)
        nxt = now + self.cfg.run.association_check_interval
        if nxt <= self.horizon:
            self.queue.schedule_at(nxt, self._association_sweep)

    def _associate(self, vehicle, now):
        pos = vehicle.path.position_at(now)
        if pos is None:
            return
        self._pos_cache[vehicle.node_id] = pos
        choice = pick_access_point(pos, self.ap_sites, vehicle.bss_id,
                                   self.cfg.phy.range_m,
                                   self.cfg.topology.hysteresis_margin)
        if choice == vehicle.bss_id:
            return
        if vehicle.bss_id is not None:
            self.bsses[vehicle.bss_id].remove_member(vehicle.node_id)
            if choice is not None:
                vehicle.handovers += 1
        if choice is not None:
            self.bsses[choice].add_member(vehicle.node_id, vehicle.mac)
        vehicle.bss_id = choice

    def _pit_sweep(self):
        now = self.queue.now
        for node_id in self.fixed_order:
            self.forwarders[node_id].pit_expire(now)
        for vehicle in self.active_vehicles.values():
            vehicle.forwarder.pit_expire(now)
        nxt = now + self.cfg.run.pit_sweep_interval
        if nxt <= self.horizon:
            self.queue.schedule_at(nxt, self._pit_sweep)

    # -- packet movement -----------------------------------------------------

    def _dispatch(self, node_id, actions, now):
        if not actions:
            return
        fwd = self.forwarders[node_id]
        for act in actions:
            kind = fwd.faces[act.face_id].kind
            is_interest = act.is_interest
            packet = act.interest if is_interest else act.data
            if kind == WIRELESS:
                self._send_frames(node_id, act.dst_macs, packet, is_interest, now)
            elif kind == WIRED:
                self.wired[(node_id, act.face_id)].send(
                    (node_id, act.face_id), packet, is_interest)
            elif is_interest:
                self._producer_serve(packet, now)
            else:
                self.vehicles_by_node[node_id].app.data_received += 1

    def _send_frames(self, node_id, dst_macs, packet, is_interest, now):
        vehicle = self.vehicles_by_node.get(node_id)
        if vehicle is None:
            bss = self.bsses[int(node_id[2:])]  # an AP transmits in its own cell
            src_mac = bss.ap_mac
        elif vehicle.bss_id is None:
            LinkStats._bump(self.link_stats.link_losses, node_id, len(dst_macs))
            return
        else:
            bss = self.bsses[vehicle.bss_id]
            src_mac = vehicle.mac
        for dst in dst_macs:
            bss.enqueue(Frame(node_id, src_mac, dst, packet, is_interest), now)

    def _deliver_frame(self, node_id, frame, now):
        vehicle = self.vehicles_by_node.get(node_id)
        face_id = AP_WIFI if vehicle is None else V_WIFI
        fwd = self.forwarders[node_id]
        if frame.is_interest:
            actions = fwd.on_incoming_interest(face_id, frame.src_mac,
                                               frame.packet, now)
        else:
            actions = fwd.on_incoming_data(face_id, frame.src_mac,
                                           frame.packet, now)
        self._dispatch(node_id, actions, now)

    def _deliver_wire(self, node_id, face_id, packet, is_interest):
        now = self.queue.now
        fwd = self.forwarders[node_id]
        if is_interest:
            actions = fwd.on_incoming_interest(face_id, None, packet, now)
        else:
            actions = fwd.on_incoming_data(face_id, None, packet, now)
        self._dispatch(node_id, actions, now)

    def _producer_serve(self, interest, now):
        name = interest.name
        if not any(name[:len(p)] == p for p in self.producer_prefixes):
            return  # not ours; let the interest expire
        data = Data(name, self.cfg.apps.payload_size)
        actions = self.forwarders["producer"].on_incoming_data(
            P_APP, None, data, now)
        self._dispatch("producer", actions, now)

    # -- running -------------------------------------------------------------

    def run(self):
        enable_gc = gc.isenabled()
        gc.disable()
        try:
            self.queue.run(until=self.horizon)
        finally:
            if enable_gc:
                gc.enable()
        return self._collect()

    def _collect(self):
        metrics = RunMetrics(self.cfg.mode.deployment,
                             self.cfg.apps.scenario, self.cfg.run.seed)
        stats = self.link_stats
        kinds = dict.fromkeys(self.fixed_order, "ap")
        kinds["router"] = "router"
        kinds["producer"] = "producer"
        order = list(self.fixed_order)
        order += [self.vehicles[vid].node_id for vid in sorted(self.vehicles)]
        for node_id in order:
            fwd = self.forwarders[node_id]
            row = NodeRow(node_id, kinds.get(node_id, "vehicle"))
            row.nfd_packets_processed = fwd.counters["processed"]
            row.cs_hits = fwd.counters["cs_hits"]
            row.unsolicited_data = fwd.counters["unsolicited_data"]
            row.pit_expired = fwd.counters["pit_expired"]
            row.frames_broadcast = stats.frames_broadcast.get(node_id, 0)
            row.frames_unicast = stats.frames_unicast.get(node_id, 0)
            row.airtime_used_s = stats.airtime.get(node_id, 0.0)
            row.queue_drops = stats.queue_drops.get(node_id, 0)
            row.link_losses = stats.link_losses.get(node_id, 0)
            vehicle = self.vehicles_by_node.get(node_id)
            if vehicle is not None:
                row.interests_sent = vehicle.app.interests_sent
                row.data_received = vehicle.app.data_received
                row.handovers = vehicle.handovers
            metrics.nodes.append(row)
        for vid in sorted(self.vehicles):
            app = self.vehicles[vid].app
            metrics.apps.append(AppRow("v%d" % vid, app.kind,
                                       app.interests_sent, app.data_received))
        return metrics


def run_scenario(cfg):
    """Build and run one simulation; returns its RunMetrics."""
    return Simulation(cfg).run()
