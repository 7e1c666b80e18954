"""Seeded asynchronous execution of the broadcast protocol.

The scheduler keeps one pool of in-flight messages and repeatedly picks the
next one to deliver uniformly at random from a seeded generator.  There is no
per-channel ordering: any interleaving can occur, but every pending message
is eventually picked, so fairness holds by construction.  Runs are
deterministic: the same scenario, setting, adversary and seed reproduce byte
for byte.

Adversaries:

* ``Silent`` -- faulty nodes swallow everything and send nothing.
* ``Forge``  -- every faulty node announces a forged information with an
  empty visited set at start and afterwards relays copies of the forged
  information exactly like a correct node would; the genuine information is
  never relayed by faulty nodes.
* ``Script`` -- an explicit list of timed sends from faulty nodes to their
  neighbors; the oral model still holds, so a faulty node can only ever
  speak as itself over existing links.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace

from .protocol import (
    Information,
    Message,
    NodeId,
    NodeState,
    Setting,
    make_node_state,
    on_receive,
    source_init,
)
from .topology import Topology


@dataclass(frozen=True)
class Scenario:
    """One broadcast instance: who speaks, who is faulty, what is said."""

    topology: Topology
    source: NodeId
    byzantine: frozenset[NodeId]
    genuine_info: Information

    def __post_init__(self):
        object.__setattr__(self, "byzantine", frozenset(self.byzantine))
        if not (0 <= self.source < self.topology.node_count):
            raise ValueError(f"source {self.source} out of range")
        bad = [b for b in self.byzantine if not (0 <= b < self.topology.node_count)]
        if bad:
            raise ValueError(f"byzantine ids out of range: {sorted(bad)}")
        if self.source in self.byzantine:
            raise ValueError("the source must be a correct node")

    def correct_nodes(self) -> list[NodeId]:
        return [v for v in self.topology.nodes() if v not in self.byzantine]


@dataclass(frozen=True)
class Silent:
    pass


@dataclass(frozen=True)
class Forge:
    forged_info: Information


@dataclass(frozen=True)
class Script:
    """Timed injections ``(time, sender, target, message)``.

    ``time`` is the virtual time (delivery count) at which the message joins
    the pool; ``sender`` must be byzantine and ``target`` one of its
    neighbors.
    """

    injections: tuple[tuple[int, NodeId, NodeId, Message], ...]

    def __post_init__(self):
        object.__setattr__(self, "injections", tuple(self.injections))


Adversary = Silent | Forge | Script


@dataclass(frozen=True)
class Trace:
    """Outcome of one run.

    ``deliveries`` maps each correct node to {information: delivery time};
    ``message_count`` counts channel messages sent by correct nodes only
    (faulty traffic is free for the adversary); ``steps`` is the number of
    deliveries the scheduler performed.
    """

    deliveries: dict[NodeId, dict[Information, int]]
    message_count: int
    quiescent: bool
    steps: int


def count_bound(topology: Topology, setting: Setting) -> int:
    """Upper bound on correct-node channel messages in a fault-free run.

    Every node forwards each distinct visited set at most once, and a node
    can record at most ``d**k`` sets of size ``k`` (one per incoming route),
    so per node the distinct multicasts are at most ``sum(d**k)`` for
    ``k = 0 .. h_max``, each fanning out to at most ``d`` neighbors.
    """
    d = topology.max_degree()
    per_node = sum(d**k for k in range(setting.h_max + 1))
    return topology.node_count * per_node * d


def run(
    scenario: Scenario,
    setting: Setting,
    adversary: Adversary,
    seed: int,
    max_steps: int | None = None,
) -> Trace:
    """Execute one seeded run until quiescence or ``max_steps`` deliveries.

    ``max_steps`` defaults to ``64 * count_bound(...)`` which is far beyond
    anything a Silent or Forge run can generate, so those runs always drain.
    Virtual time advances by one per delivery; scripted injections join the
    pool once the clock reaches their time stamp (idle gaps are skipped).
    """
    topo = scenario.topology
    if max_steps is None:
        max_steps = max(1, 64 * count_bound(topo, setting))
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")

    forged: Information | None = adversary.forged_info if isinstance(adversary, Forge) else None
    injections: list[tuple[int, NodeId, NodeId, Message]] = []
    if isinstance(adversary, Script):
        for time, sender, target, msg in adversary.injections:
            if time < 0:
                raise ValueError(f"injection time must be >= 0, got {time}")
            if sender not in scenario.byzantine:
                raise ValueError(f"injection sender {sender} is not byzantine")
            if not topo.has_edge(sender, target):
                raise ValueError(f"no channel {sender} -> {target} for injection")
            injections.append((time, sender, target, msg))
        injections.sort(key=lambda item: item[0])  # stable: ties keep list order

    states: dict[NodeId, NodeState] = {}
    for v in topo.nodes():
        if v in scenario.byzantine:
            if forged is not None:
                # relay machinery for the forged information only: no source
                # neighbor (rule for direct source trust never fires) and the
                # forged payload pre-delivered so no extra announcement
                states[v] = NodeState(
                    v,
                    frozenset(topo.neighbors(v)),
                    frozenset(),
                    frozenset(),
                    frozenset({forged}),
                )
        else:
            states[v] = make_node_state(v, topo.neighbors(v), source_id=scenario.source)
    # pre-delivering the genuine information keeps the source from announcing
    # it a second time when enough relayed copies find their way back
    states[scenario.source] = replace(
        states[scenario.source], delivered=frozenset({scenario.genuine_info})
    )

    rng = random.Random(seed)
    pool: list[tuple[NodeId, NodeId, Message]] = []
    message_count = 0
    deliveries: dict[NodeId, dict[Information, int]] = {
        v: {} for v in topo.nodes() if v not in scenario.byzantine
    }

    def multicast(v: NodeId, messages, correct_send: bool):
        nonlocal message_count
        nbrs = topo.neighbors(v)
        for msg in messages:
            for w in nbrs:
                pool.append((v, w, msg))
            if correct_send:
                message_count += len(nbrs)

    # the source delivers its own information up front, then announces it
    deliveries[scenario.source][scenario.genuine_info] = 0
    multicast(scenario.source, (source_init(scenario.genuine_info),), True)
    if forged is not None:
        for b in sorted(scenario.byzantine):
            multicast(b, (Message(forged, frozenset()),), False)

    clock = 0
    steps = 0
    next_inj = 0
    while True:
        while next_inj < len(injections) and injections[next_inj][0] <= clock:
            _, sender, target, msg = injections[next_inj]
            pool.append((sender, target, msg))
            next_inj += 1
        if not pool:
            if next_inj < len(injections):
                clock = injections[next_inj][0]
                continue
            break
        if steps >= max_steps:
            break
        i = rng.randrange(len(pool))
        sender, dest, msg = pool[i]
        pool[i] = pool[-1]
        pool.pop()
        steps += 1
        clock += 1
        if dest in scenario.byzantine:
            if forged is not None and msg.info == forged:
                state, out = on_receive(states[dest], setting, sender, msg)
                states[dest] = state
                multicast(dest, out.outgoing, False)
            # Silent / Script / non-forged traffic: swallowed
            continue
        state, out = on_receive(states[dest], setting, sender, msg)
        states[dest] = state
        for info in out.new_deliveries:
            deliveries[dest][info] = clock
        multicast(dest, out.outgoing, True)

    quiescent = not pool and next_inj >= len(injections)
    return Trace(deliveries, message_count, quiescent, steps)


def format_trace(trace: Trace) -> str:
    """Line-oriented trace text: one ``time node info_hex`` line per delivery
    (sorted by time, node, payload) plus a summary line."""
    lines = []
    events = []
    for node, delivered in trace.deliveries.items():
        for info, t in delivered.items():
            events.append((t, node, info.hex()))
    for t, node, info_hex in sorted(events):
        lines.append(f"{t} {node} {info_hex}")
    flag = "true" if trace.quiescent else "false"
    lines.append(f"summary messages={trace.message_count} quiescent={flag}")
    return "\n".join(lines) + "\n"


def parse_trace(text: str) -> tuple[list[tuple[int, NodeId, Information]], int, bool]:
    """Parse :func:`format_trace` output back into (events, count, quiescent)."""
    events: list[tuple[int, NodeId, Information]] = []
    message_count: int | None = None
    quiescent: bool | None = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("summary "):
            fields = dict(part.split("=", 1) for part in line.split()[1:])
            message_count = int(fields["messages"])
            quiescent = fields["quiescent"] == "true"
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"line {line_no}: expected 'time node info_hex'")
        events.append((int(parts[0]), int(parts[1]), bytes.fromhex(parts[2])))
    if message_count is None or quiescent is None:
        raise ValueError("missing summary line")
    return events, message_count, quiescent
