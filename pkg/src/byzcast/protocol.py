"""Per-node broadcast state machine.

A source multicasts its information ``m`` as ``(m, {})``; every relayed copy
carries the set of nodes it has visited so far.  In the oral model a node
always knows which neighbor handed it a message, so visited sets cannot be
spoofed hop-by-hop -- a liar can only lie about the part of the route it
controls.  A node accepts ``(m, S)`` from neighbor ``q`` when ``q`` is not
already listed in ``S`` and ``S`` still has room under the hop budget, records
``(m, S + {q})``, and forwards that extended copy.  It delivers ``m`` once its
records contain one visited set per configured bound, pairwise disjoint and
each within its bound: disjointness forces the copies to have travelled over
routes that share no relay, which is what makes forging expensive.

Everything here is pure: ``on_receive`` maps an immutable state and an
incoming message to a new state plus outputs, and never touches shared data,
so states can move freely between threads or processes.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

NodeId = int

# Payloads are opaque byte strings compared bytewise; nothing below ever
# inspects their content.
Information = bytes

# One record: (information, visited set stored as a sorted tuple).  Sorted
# tuples give records a single canonical form, so set membership and witness
# extraction are deterministic.
RecEntry = tuple[Information, tuple[NodeId, ...]]


class ProtocolError(Exception):
    """Contract violation, e.g. a message attributed to a non-neighbor."""


@dataclass(frozen=True)
class Setting:
    """The per-path hop bounds ``(H_1, ..., H_n)`` a deployment runs with.

    ``n`` is the number of disjoint routes a delivery needs; ``h_max`` caps
    how far any copy may travel.
    """

    bounds: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "bounds", tuple(self.bounds))
        if len(self.bounds) == 0:
            raise ValueError("setting needs at least one hop bound")
        if any(h < 1 for h in self.bounds):
            raise ValueError(f"hop bounds must be >= 1, got {self.bounds}")

    @property
    def n(self) -> int:
        return len(self.bounds)

    @property
    def h_max(self) -> int:
        return max(self.bounds)

    def __str__(self) -> str:
        return "-".join(str(h) for h in self.bounds)


@dataclass(frozen=True)
class Message:
    """An information payload plus the set of nodes it has visited."""

    info: Information
    visited: frozenset[NodeId] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "visited", frozenset(self.visited))


@dataclass(frozen=True)
class StepOutput:
    """Effects of one receive: deliveries made and messages to multicast.

    ``outgoing`` preserves emission order (forwarded copy before the
    delivery announcement) so schedulers stay reproducible.
    """

    new_deliveries: frozenset[Information] = frozenset()
    outgoing: tuple[Message, ...] = ()


@dataclass(frozen=True)
class NodeState:
    """Immutable per-node protocol state.

    ``source_neighbors`` lists which of this node's neighbors (at most one in
    any run) is the broadcast source; announcements from it are trusted
    directly.  The source node itself carries no special state -- it relays
    like everyone else, and its own information starts out in ``delivered``.
    """

    id: NodeId
    neighbors: frozenset[NodeId]
    source_neighbors: frozenset[NodeId] = frozenset()
    rec: frozenset[RecEntry] = frozenset()
    delivered: frozenset[Information] = frozenset()


def make_node_state(
    node_id: NodeId,
    neighbors,
    source_id: NodeId | None = None,
) -> NodeState:
    """Fresh state for one node; marks whether a neighbor is the source."""
    nbrs = frozenset(neighbors)
    src = frozenset({source_id}) if source_id in nbrs else frozenset()
    return NodeState(node_id, nbrs, src)


def source_init(info: Information) -> Message:
    """The source's one action: announce its information with an empty route."""
    return Message(info, frozenset())


def on_receive(
    state: NodeState, setting: Setting, sender: NodeId, msg: Message
) -> tuple[NodeState, StepOutput]:
    """Apply one received message and return the successor state plus effects.

    * An announcement from the source -- empty visited set -- is delivered
      immediately and re-announced as ``(info, {})``, once per information.
      Only the empty set qualifies: a non-empty visited set means the source
      is merely relaying someone else's copy, which earns no direct trust.
    * Anything else (including at the source itself, which relays like every
      correct node) is accepted when the sender is not already listed in the
      visited set and the set is still under the hop budget; the node records
      ``(info, S + {sender})``, forwards that extended copy, and re-evaluates
      the delivery rule for that information.  A record seen before changes
      nothing and forwards nothing.
    * Everything else is dropped without a state change.

    The same (sender, msg) applied twice leaves the state fixed and produces
    no further output, which keeps replay by faulty peers harmless.
    """
    if sender not in state.neighbors:
        raise ProtocolError(f"node {state.id}: message attributed to non-neighbor {sender}")

    if sender in state.source_neighbors and not msg.visited:
        if msg.info in state.delivered:
            return state, StepOutput()
        new_state = replace(state, delivered=state.delivered | {msg.info})
        out = StepOutput(frozenset({msg.info}), (Message(msg.info, frozenset()),))
        return new_state, out

    if sender in msg.visited or len(msg.visited) >= setting.h_max:
        return state, StepOutput()

    entry: RecEntry = (msg.info, tuple(sorted(msg.visited | {sender})))
    if entry in state.rec:
        return state, StepOutput()
    rec = state.rec | {entry}
    outgoing = [Message(msg.info, frozenset(entry[1]))]
    delivered = state.delivered
    new_deliveries: frozenset[Information] = frozenset()
    if msg.info not in delivered and check_delivery(rec, setting, msg.info) is not None:
        delivered = delivered | {msg.info}
        new_deliveries = frozenset({msg.info})
        outgoing.append(Message(msg.info, frozenset()))
    return (
        replace(state, rec=rec, delivered=delivered),
        StepOutput(new_deliveries, tuple(outgoing)),
    )


def check_delivery(
    rec, setting: Setting, info: Information
) -> tuple[tuple[NodeId, ...], ...] | None:
    """Find visited sets ``(S_1, ..., S_n)`` justifying delivery of ``info``.

    Searches the records for ``info`` for one entry per bound with
    ``|S_i| <= H_i`` and all chosen sets pairwise disjoint (each record used
    at most once).  The search is exact -- a witness is returned iff one
    exists -- and deterministic: entries are scanned in sorted order and
    bounds are filled smallest first.  Returns the witness ordered like
    ``setting.bounds``, or None.
    """
    entries = sorted({tuple(sorted(s)) for m, s in rec if m == info})
    n = setting.n
    if len(entries) < n:
        return None
    sets = [frozenset(e) for e in entries]
    order = sorted(range(n), key=lambda i: (setting.bounds[i], i))
    chosen: list[int] = [-1] * n

    def fill(k: int, used: frozenset[int], union: frozenset[NodeId]) -> bool:
        if k == n:
            return True
        i = order[k]
        bound = setting.bounds[i]
        # equal bounds are interchangeable: forcing ascending entry indices
        # among them skips redundant permutations
        start = 0
        if k > 0 and setting.bounds[order[k - 1]] == bound:
            start = chosen[order[k - 1]] + 1
        for ei in range(start, len(entries)):
            if ei in used:
                continue
            s = sets[ei]
            if len(s) > bound or (s & union):
                continue
            chosen[i] = ei
            if fill(k + 1, used | {ei}, union | s):
                return True
        chosen[i] = -1
        return False

    if fill(0, frozenset(), frozenset()):
        return tuple(entries[chosen[i]] for i in range(n))
    return None
