"""NDN forwarding core: names, packets, the three tables, and the pipeline.

One :class:`Forwarder` is the packet brain of one node.  It owns the PIT,
FIB and content store, applies the deployment mode's destination policy for
wireless faces, and describes everything it wants transmitted as small
action objects.  What a face physically is (radio, wire, application) is
the caller's business; the forwarder only needs to know which faces carry
MAC addresses.

The passive learning scheme works with two lists:

* the MAC of whoever sent us an interest is remembered on the PIT
  in-record (so data can later be unicast downstream), and
* the MAC of whoever sent us data is remembered on the FIB next-hop it
  arrived through (so later interests can be unicast upstream).

Both lists are only ever fed by frames actually received on that face.
"""

from dataclasses import dataclass
from collections import OrderedDict, deque

# 48-bit all-ones group address
BROADCAST = 0xFFFFFFFFFFFF

MAX_NAME_BYTES = 8192

# Byte-size model for packets on the wire.  Real TLV encoding is out of
# scope; these constants keep airtime accounting in a realistic range.
_NAME_BASE = 2
_COMPONENT_OVERHEAD = 2
INTEREST_OVERHEAD = 16   # nonce, lifetime, selectors
DATA_OVERHEAD = 44       # metainfo plus signature block

WIRELESS = "wireless"
WIRED = "wired-p2p"
APP = "application"

UP = "up"
DOWN = "down"


# ---------------------------------------------------------------------------
# Names

def name_from_uri(uri):
    """Parse '/a/b/c' into a component tuple. '/' is the empty (root) name."""
    if not uri.startswith("/"):
        raise ValueError("name URIs start with '/': %r" % uri)
    trimmed = uri.strip("/")
    if not trimmed:
        return ()
    return tuple(trimmed.split("/"))


def name_to_uri(name):
    if not name:
        return "/"
    return "/" + "/".join(name)


def name_encoded_size(name):
    size = _NAME_BASE
    for comp in name:
        size += _COMPONENT_OVERHEAD + len(comp.encode("utf-8"))
    return size


def name_is_prefix(prefix, name):
    """True if `prefix` is a (non-strict) prefix of `name`."""
    return name[: len(prefix)] == prefix


def valid_name(name):
    return len(name) >= 1 and name_encoded_size(name) <= MAX_NAME_BYTES


# ---------------------------------------------------------------------------
# Packets

class Interest:
    __slots__ = ("name", "nonce", "lifetime", "size")

    def __init__(self, name, nonce, lifetime=4.0):
        self.name = name
        self.nonce = nonce
        self.lifetime = lifetime
        self.size = name_encoded_size(name) + INTEREST_OVERHEAD

    def __repr__(self):
        return "Interest(%s, nonce=%#x)" % (name_to_uri(self.name), self.nonce)


class Data:
    __slots__ = ("name", "payload_size", "freshness", "size")

    def __init__(self, name, payload_size, freshness=0.0):
        self.name = name
        self.payload_size = payload_size
        self.freshness = freshness
        self.size = name_encoded_size(name) + payload_size + DATA_OVERHEAD

    def __repr__(self):
        return "Data(%s, %dB)" % (name_to_uri(self.name), self.payload_size)


@dataclass(frozen=True)
class Face:
    face_id: int
    kind: str  # WIRELESS, WIRED or APP

    @property
    def wireless(self):
        return self.kind == WIRELESS


@dataclass(frozen=True)
class DeploymentMode:
    """Which wireless directions use learned-MAC unicast instead of broadcast."""

    up_unicast: bool
    down_unicast: bool

    @property
    def label(self):
        return _MODE_LABELS[(self.up_unicast, self.down_unicast)]

    @classmethod
    def from_label(cls, label):
        try:
            flags = _MODE_FLAGS[label.lower()]
        except KeyError:
            raise ValueError("unknown deployment mode: %r" % label) from None
        return cls(*flags)


_MODE_FLAGS = {
    "standard": (False, False),
    "up": (True, False),
    "down": (False, True),
    "proposal": (True, True),
}
_MODE_LABELS = {flags: label for label, flags in _MODE_FLAGS.items()}

MODE_LABELS = ("standard", "up", "down", "proposal")


def select_frame_destinations(direction, mode, candidates):
    """Pick link-layer destinations for one wireless transmission.

    `candidates` are learned MACs: in-record sender MACs for data going
    down, next-hop MACs (most recent last) for interests going up.  Falls
    back to broadcast whenever the mode says so or nothing was learned.
    Downstream unicast fans out one frame per interested MAC; upstream
    unicast sticks to the freshest single neighbor.
    """
    if direction == DOWN:
        if not mode.down_unicast or not candidates:
            return [BROADCAST]
        return list(candidates)
    if direction == UP:
        if not mode.up_unicast or not candidates:
            return [BROADCAST]
        return [candidates[-1]]
    raise ValueError("direction must be 'up' or 'down': %r" % direction)


# ---------------------------------------------------------------------------
# Tables

class InRecord:
    __slots__ = ("face_id", "nonces", "expiry", "sender_macs")

    def __init__(self, face_id, nonce, expiry, src_mac):
        self.face_id = face_id
        self.nonces = {nonce}
        self.expiry = expiry
        # dict used as an ordered set; never iterate a real set here or the
        # fan-out order would depend on hash seeds
        self.sender_macs = {}
        if src_mac is not None:
            self.sender_macs[src_mac] = None


class OutRecord:
    __slots__ = ("face_id", "nonce", "expiry")

    def __init__(self, face_id, nonce, expiry):
        self.face_id = face_id
        self.nonce = nonce
        self.expiry = expiry


class PitEntry:
    __slots__ = ("name", "in_records", "out_records", "nonces")

    def __init__(self, name):
        self.name = name
        self.in_records = {}   # face_id -> InRecord
        self.out_records = {}  # face_id -> OutRecord
        self.nonces = set()    # every nonce seen for this name while pending


class NextHop:
    __slots__ = ("face_id", "cost", "learned")

    def __init__(self, face_id, cost=1):
        self.face_id = face_id
        self.cost = cost
        self.learned = {}  # mac -> last observation time

    def live_macs(self, now, ttl):
        """Learned MACs still within ttl, oldest observation first."""
        learned = self.learned
        if not learned:
            return []
        cutoff = now - ttl
        stale = [mac for mac, seen in learned.items() if seen < cutoff]
        for mac in stale:
            del learned[mac]
        if not learned:
            return []
        return sorted(learned, key=learned.get)


class FibEntry:
    __slots__ = ("prefix", "next_hops")

    def __init__(self, prefix):
        self.prefix = prefix
        self.next_hops = []


class ContentStore:
    """Exact-match LRU store; capacity 0 accepts nothing."""

    def __init__(self, capacity):
        self.capacity = capacity
        self._store = OrderedDict()

    def lookup(self, name):
        data = self._store.get(name)
        if data is not None:
            self._store.move_to_end(name)
        return data

    def insert(self, data):
        if self.capacity <= 0:
            return
        store = self._store
        if data.name in store:
            store.move_to_end(data.name)
            store[data.name] = data
            return
        if len(store) >= self.capacity:
            store.popitem(last=False)
        store[data.name] = data

    def __len__(self):
        return len(self._store)

    def names(self):
        return list(self._store)


# ---------------------------------------------------------------------------
# Forwarder actions

class SendInterest:
    __slots__ = ("face_id", "interest", "dst_macs")
    is_interest = True

    def __init__(self, face_id, interest, dst_macs=None):
        self.face_id = face_id
        self.interest = interest
        self.dst_macs = dst_macs  # None on faces without MAC semantics

    @property
    def packet(self):
        return self.interest


class SendData:
    __slots__ = ("face_id", "data", "dst_macs")
    is_interest = False

    def __init__(self, face_id, data, dst_macs=None):
        self.face_id = face_id
        self.data = data
        self.dst_macs = dst_macs

    @property
    def packet(self):
        return self.data


# Nonces of satisfied or rejected entries stay poisonous this long.
DEAD_NONCE_LIFETIME = 6.0


class Forwarder:
    """Forwarding pipeline plus tables for a single node."""

    def __init__(self, node_id, mode, faces, cs_capacity=0,
                 mac_ttl=2.0, pit_capacity=0):
        self.node_id = node_id
        self.mode = mode
        self.faces = {f.face_id: f for f in faces}
        self.wireless_faces = frozenset(
            f.face_id for f in faces if f.kind == WIRELESS)
        self.cs = ContentStore(cs_capacity)
        self.pit = {}   # name -> PitEntry
        self.fib = {}   # prefix -> FibEntry
        self.mac_ttl = mac_ttl
        self.pit_capacity = pit_capacity  # 0 = unbounded
        self._dead_nonces = {}       # (name, nonce) -> expiry
        self._dead_order = deque()   # (expiry, key), expiry non-decreasing
        self.counters = {
            "processed": 0,
            "protocol_errors": 0,
            "duplicate_nonces": 0,
            "pit_overflow": 0,
            "cs_hits": 0,
            "no_route": 0,
            "unsolicited_data": 0,
            "pit_expired": 0,
        }

    # -- FIB management ----------------------------------------------------

    def register_route(self, prefix, face_id, cost=1):
        entry = self.fib.get(prefix)
        if entry is None:
            entry = self.fib[prefix] = FibEntry(prefix)
        for hop in entry.next_hops:
            if hop.face_id == face_id:
                hop.cost = cost
                return entry
        entry.next_hops.append(NextHop(face_id, cost))
        entry.next_hops.sort(key=lambda h: h.cost)
        return entry

    def longest_prefix_match(self, name):
        fib = self.fib
        for k in range(len(name), -1, -1):
            entry = fib.get(name[:k])
            if entry is not None:
                return entry
        return None

    # -- interest pipeline ---------------------------------------------------

    def on_incoming_interest(self, face_id, src_mac, interest, now):
        """Process one interest; returns the send actions it triggers."""
        self.counters["processed"] += 1
        name = interest.name
        # equivalent to valid_name(name): size was fixed at construction
        if not name or interest.size - INTEREST_OVERHEAD > MAX_NAME_BYTES:
            self.counters["protocol_errors"] += 1
            return []

        nonce = interest.nonce
        entry = self.pit.get(name)
        if (entry is not None and nonce in entry.nonces) or \
                (name, nonce) in self._dead_nonces:
            self.counters["duplicate_nonces"] += 1
            return []

        created = False
        if entry is None:
            if self.pit_capacity and len(self.pit) >= self.pit_capacity:
                self.counters["pit_overflow"] += 1
                return []
            entry = self.pit[name] = PitEntry(name)
            created = True

        expiry = now + interest.lifetime
        entry.nonces.add(nonce)
        rec = entry.in_records.get(face_id)
        if rec is None:
            rec = entry.in_records[face_id] = InRecord(face_id, nonce, expiry, src_mac)
        else:
            rec.nonces.add(nonce)
            if expiry > rec.expiry:
                rec.expiry = expiry
            if src_mac is not None:
                rec.sender_macs[src_mac] = None

        cached = self.cs.lookup(name)
        if cached is not None:
            self.counters["cs_hits"] += 1
            action = self._data_action_for(rec, cached)
            self._consume(entry, now)
            return [action]

        if not created:
            for out in entry.out_records.values():
                if out.expiry > now:
                    return []  # aggregated onto the pending upstream interest

        fib_entry = self.longest_prefix_match(name)
        hop = None
        if fib_entry is not None:
            for candidate in fib_entry.next_hops:  # sorted by cost
                if candidate.face_id != face_id:
                    hop = candidate
                    break
        if hop is None:
            # Unsatisfiable here.  Drop the entry (unless something is still
            # pending upstream) so stray broadcast data can't bounce off us.
            self.counters["no_route"] += 1
            if not any(o.expiry > now for o in entry.out_records.values()):
                self._consume(entry, now)
            return []

        entry.out_records[hop.face_id] = OutRecord(hop.face_id, nonce, expiry)
        dsts = None
        if hop.face_id in self.wireless_faces:
            dsts = select_frame_destinations(
                UP, self.mode, hop.live_macs(now, self.mac_ttl))
        return [SendInterest(hop.face_id, interest, dsts)]

    # -- data pipeline -------------------------------------------------------

    def on_incoming_data(self, face_id, src_mac, data, now):
        """Process one data packet; returns downstream send actions."""
        self.counters["processed"] += 1
        entry = self.pit.get(data.name)
        live = None
        if entry is not None:
            live = [r for r in entry.in_records.values() if r.expiry > now]
        if not live:
            if entry is not None:
                self._consume(entry, now)
                self.counters["pit_expired"] += 1
            self.counters["unsolicited_data"] += 1
            return []

        if src_mac is not None and face_id in self.wireless_faces:
            self._learn_upstream_mac(data.name, face_id, src_mac, now)

        self.cs.insert(data)

        actions = []
        for rec in live:
            if rec.face_id == face_id:
                continue  # never reflect data back where it came from
            actions.append(self._data_action_for(rec, data))
        self._consume(entry, now)
        return actions

    def _data_action_for(self, rec, data):
        dsts = None
        if rec.face_id in self.wireless_faces:
            dsts = select_frame_destinations(
                DOWN, self.mode, list(rec.sender_macs))
        return SendData(rec.face_id, data, dsts)

    def _learn_upstream_mac(self, name, face_id, src_mac, now):
        fib_entry = self.longest_prefix_match(name)
        if fib_entry is None:
            return
        for hop in fib_entry.next_hops:
            if hop.face_id == face_id:
                hop.learned[src_mac] = now
                return

    def _consume(self, entry, now):
        del self.pit[entry.name]
        expiry = now + DEAD_NONCE_LIFETIME
        dead = self._dead_nonces
        order = self._dead_order
        name = entry.name
        for nonce in entry.nonces:
            key = (name, nonce)
            dead[key] = expiry
            order.append((expiry, key))

    # -- maintenance ---------------------------------------------------------

    def pit_expire(self, now):
        """Drop dead records; returns names of entries expired unsatisfied."""
        expired = []
        for name in list(self.pit):
            entry = self.pit[name]
            ins = entry.in_records
            for fid in [f for f, r in ins.items() if r.expiry <= now]:
                del ins[fid]
            outs = entry.out_records
            for fid in [f for f, r in outs.items() if r.expiry <= now]:
                del outs[fid]
            if not ins:
                self._consume(entry, now)
                self.counters["pit_expired"] += 1
                expired.append(name)
        # dead nonces age in insertion order, so only the head needs looking at
        dead = self._dead_nonces
        order = self._dead_order
        while order and order[0][0] <= now:
            _, key = order.popleft()
            expiry = dead.get(key)
            if expiry is not None and expiry <= now:
                del dead[key]
        return expired

    # -- diagnostics -----------------------------------------------------------

    def dump_tables(self):
        """One record per line, for debugging and golden tests."""
        lines = []
        for name in sorted(self.pit):
            entry = self.pit[name]
            ins = ";".join(
                "%d<%s" % (r.face_id, ",".join("%012x" % m for m in r.sender_macs))
                for r in entry.in_records.values())
            outs = ";".join("%d" % r.face_id for r in entry.out_records.values())
            lines.append("pit %s in=[%s] out=[%s]" % (name_to_uri(name), ins, outs))
        for prefix in sorted(self.fib):
            entry = self.fib[prefix]
            hops = ";".join(
                "%d@%d<%s" % (h.face_id, h.cost,
                              ",".join("%012x" % m for m in h.learned))
                for h in entry.next_hops)
            lines.append("fib %s hops=[%s]" % (name_to_uri(prefix), hops))
        for name in self.cs.names():
            lines.append("cs %s" % name_to_uri(name))
        return "\n".join(lines)
