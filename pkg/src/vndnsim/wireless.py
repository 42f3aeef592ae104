"""Abstracted Wi-Fi 6 link layer.

The model keeps only what the study needs: broadcast frames go out at the
slow basic service rate with no acknowledgement and no retry, unicast
frames ride the fast MCS rate with ACK plus a bounded retry burst, and
everything transmitted in one BSS serializes through a single FIFO medium.
Frames that would sit in the queue longer than ``queue_max_delay`` are
discarded instead of transmitted, which is what keeps an overloaded cell
from growing an unbounded backlog.  APs sit on orthogonal channels, so
cells never contend with each other.

Losses are reproducible: every random draw comes from the RNG handed to
the :class:`Bss`.
"""

from dataclasses import dataclass

from .ndn import BROADCAST as BROADCAST_MAC

FRAME_HEADER_BYTES = 34


@dataclass
class PhyProfile:
    """Link-layer constants for one scenario, all overridable via config."""

    unicast_rate: float = 143.4e6    # b/s, MCS data rate for unicast
    basic_rate: float = 1e6          # b/s, broadcast/basic service rate
    per_frame_overhead: float = 60e-6
    ack_overhead: float = 50e-6      # per unicast attempt
    retry_limit: int = 7
    range_m: float = 80.0
    loss_rate: float = 0.0           # per unicast attempt
    broadcast_loss_rate: float = 0.32  # per receiver, no recovery
    queue_max_delay: float = 0.5     # s a frame may wait before being dropped

    def validate(self):
        if not self.unicast_rate > self.basic_rate > 0:
            raise ValueError("rates must satisfy unicast_rate > basic_rate > 0")
        if self.retry_limit < 0:
            raise ValueError("retry_limit must be >= 0")
        for field in ("per_frame_overhead", "ack_overhead", "queue_max_delay"):
            if getattr(self, field) < 0:
                raise ValueError("%s must be >= 0" % field)
        for field in ("loss_rate", "broadcast_loss_rate"):
            p = getattr(self, field)
            if not 0.0 <= p < 1.0:
                raise ValueError("%s must be in [0, 1)" % field)
        if self.range_m <= 0:
            raise ValueError("range_m must be > 0")


def airtime(size_bytes, rate, profile):
    """Seconds one transmission occupies the medium (before any ACK)."""
    return profile.per_frame_overhead + size_bytes * 8.0 / rate


class Frame:
    __slots__ = ("src_node", "src_mac", "dst_mac", "packet", "is_interest", "size")

    def __init__(self, src_node, src_mac, dst_mac, packet, is_interest):
        self.src_node = src_node
        self.src_mac = src_mac
        self.dst_mac = dst_mac
        self.packet = packet
        self.is_interest = is_interest
        self.size = packet.size + FRAME_HEADER_BYTES


class LinkStats:
    """Per-node transmit counters, filled in by the Bss objects."""

    __slots__ = ("frames_broadcast", "frames_unicast", "airtime",
                 "queue_drops", "link_losses")

    def __init__(self):
        self.frames_broadcast = {}
        self.frames_unicast = {}
        self.airtime = {}
        self.queue_drops = {}
        self.link_losses = {}

    @staticmethod
    def _bump(table, key, amount=1):
        table[key] = table.get(key, 0) + amount


class Bss:
    """One AP's cell: member set plus the shared FIFO medium."""

    def __init__(self, ap_id, ap_mac, ap_position, channel, profile, queue,
                 rng, deliver, position_of, stats):
        self.ap_id = ap_id
        self.ap_mac = ap_mac
        self.ap_position = ap_position
        self.channel = channel
        self.profile = profile
        self.queue = queue          # EventQueue
        self.rng = rng
        self.deliver = deliver      # fn(node_id, frame, now)
        self.position_of = position_of  # fn(node_id) -> float | None
        self.stats = stats
        self.members = {}           # vehicle node_id -> mac
        self._mac_to_node = {ap_mac: ap_id}
        self._backlog = []          # list of (frame, enqueue_time); index head
        self._head = 0
        self.busy_until = 0.0
        self._busy = False

    # -- membership -----------------------------------------------------------

    def add_member(self, node_id, mac):
        self.members[node_id] = mac
        self._mac_to_node[mac] = node_id

    def remove_member(self, node_id):
        """Detach a vehicle; its queued frames go with it."""
        mac = self.members.pop(node_id, None)
        if mac is None:
            return
        del self._mac_to_node[mac]
        backlog = self._backlog
        if self._head < len(backlog):
            kept = [item for item in backlog[self._head:]
                    if item[0].src_node != node_id and item[0].dst_mac != mac]
            self._backlog = kept
            self._head = 0

    # -- transmission -----------------------------------------------------------

    def enqueue(self, frame, now):
        self._backlog.append((frame, now))
        if not self._busy:
            self._pump(now)

    def _pump(self, now):
        """Start the next queued frame, discarding ones that waited too long."""
        backlog = self._backlog
        max_delay = self.profile.queue_max_delay
        while self._head < len(backlog):
            frame, enq = backlog[self._head]
            self._head += 1
            if now - enq > max_delay:
                LinkStats._bump(self.stats.queue_drops, frame.src_node)
                continue
            self._transmit(frame, now)
            return
        # drained; reset the buffer so it doesn't grow forever
        self._backlog = []
        self._head = 0
        self._busy = False

    def _transmit(self, frame, now):
        profile = self.profile
        stats = self.stats
        if frame.dst_mac == BROADCAST_MAC:
            span = airtime(frame.size, profile.basic_rate, profile)
            receivers = self._broadcast_receivers(frame, now)
            LinkStats._bump(stats.frames_broadcast, frame.src_node)
        else:
            per_attempt = airtime(frame.size, profile.unicast_rate, profile) \
                + profile.ack_overhead
            attempts, delivered = self._unicast_outcome(frame, now)
            span = attempts * per_attempt
            receivers = []
            if delivered:
                receivers.append(self._mac_to_node[frame.dst_mac])
            else:
                LinkStats._bump(stats.link_losses, frame.src_node)
            LinkStats._bump(stats.frames_unicast, frame.src_node, attempts)
        LinkStats._bump(stats.airtime, frame.src_node, span)
        self._busy = True
        self.busy_until = now + span
        self.queue.schedule(span, self._finish, frame, receivers)

    def _finish(self, frame, receivers):
        now = self.queue.now
        for node_id in receivers:
            # membership may have changed mid-air
            if node_id == self.ap_id or node_id in self.members:
                self.deliver(node_id, frame, now)
        self._pump(now)

    def _broadcast_receivers(self, frame, now):
        """Per-receiver delivery draws, decided at transmission time."""
        src_pos = self._position(frame.src_node)
        p_loss = self.profile.broadcast_loss_rate
        reach = self.profile.range_m
        rng_random = self.rng.random
        receivers = []
        if frame.src_node != self.ap_id:
            if self._in_range(src_pos, self.ap_position, reach) and \
                    (p_loss == 0.0 or rng_random() >= p_loss):
                receivers.append(self.ap_id)
        position_of = self._position
        for node_id in self.members:
            if node_id == frame.src_node:
                continue
            if not self._in_range(src_pos, position_of(node_id), reach):
                continue
            if p_loss == 0.0 or rng_random() >= p_loss:
                receivers.append(node_id)
        return receivers

    def _unicast_outcome(self, frame, now):
        """(attempts, delivered); every attempt burns a full airtime slot."""
        profile = self.profile
        dst_node = self._mac_to_node.get(frame.dst_mac)
        max_attempts = profile.retry_limit + 1
        if dst_node is None:
            return max_attempts, False
        src_pos = self._position(frame.src_node)
        dst_pos = self._position(dst_node)
        if not self._in_range(src_pos, dst_pos, profile.range_m):
            return max_attempts, False
        p_loss = profile.loss_rate
        if p_loss == 0.0:
            return 1, True
        rng_random = self.rng.random
        for attempt in range(1, max_attempts + 1):
            if rng_random() >= p_loss:
                return attempt, True
        return max_attempts, False

    def _position(self, node_id):
        if node_id == self.ap_id:
            return self.ap_position
        return self.position_of(node_id)

    @staticmethod
    def _in_range(a, b, reach):
        if a is None or b is None:
            return False
        return abs(a - b) <= reach


def pick_access_point(position, aps, current, range_m, hysteresis_margin):
    """Choose which AP a vehicle at `position` should be associated with.

    `aps` is a list of (ap_id, position) pairs.  Returns the new ap_id or
    None when nothing is in range.  A handover away from a still-reachable
    AP only happens once another AP is closer by more than the hysteresis
    margin, which keeps vehicles from flapping at cell boundaries.
    """
    best = None
    best_dist = None
    current_dist = None
    for ap_id, ap_pos in aps:
        dist = abs(position - ap_pos)
        if ap_id == current:
            current_dist = dist
        if dist <= range_m and (best_dist is None or dist < best_dist):
            best = ap_id
            best_dist = dist
    if current is not None and current_dist is not None \
            and current_dist <= range_m:
        if best is None or best == current:
            return current
        if best_dist < current_dist - hysteresis_margin:
            return best
        return current
    return best
