"""Omniscient-observer analysis of a broadcast scenario.

Static counterparts of the runtime protocol: which correct nodes could be
talked into delivering forged information (criticality), whether a whole
deployment is safe, and which nodes are guaranteed to deliver the genuine
information (the reliable set, computed as a closure).

All searches share one primitive: find, from a focal node, one simple path
per hop bound such that the paths pairwise share no vertex besides the focal
node itself and each path ends at a designated target.  The search is exact
backtracking -- it returns a witness iff one exists -- with two sound
prunes: a breadth-first reachability check that rejects focal nodes whose
targets cannot all be in range, and a short-circuit for the common case
where enough targets sit directly adjacent.
"""

from __future__ import annotations

from collections import deque
from collections.abc import Callable, Iterable
from dataclasses import dataclass

from .protocol import Setting
from .simulator import Scenario
from .topology import NodeId, Path, Topology, enumerate_paths

TRUE = lambda v: True  # noqa: E731  (default 'allowed' predicate)


class UnsafeScenarioError(RuntimeError):
    """Raised when an operation requires a safe scenario but got an unsafe one."""


@dataclass(frozen=True)
class PathWitness:
    """One family of paths certifying a property at ``focal``.

    ``paths[i]`` starts at the focal node, has at most ``bounds[i]`` hops and
    ends at a target; apart from the shared focal node the paths are pairwise
    vertex-disjoint (endpoints included).
    """

    paths: tuple[Path, ...]

    @property
    def focal(self) -> NodeId:
        return self.paths[0][0]

    def path_sets(self) -> tuple[frozenset[NodeId], ...]:
        """Vertex set of each path minus the focal node -- the visited sets
        the corresponding protocol messages would carry."""
        return tuple(frozenset(p[1:]) for p in self.paths)


@dataclass(frozen=True)
class SafetyReport:
    """``safe`` iff no correct node is critical; violations carry witnesses."""

    safe: bool
    violations: tuple[tuple[NodeId, PathWitness], ...] = ()


@dataclass(frozen=True)
class ReliableSet:
    """Closure result: members, the seed it grew from, and one witness per
    member added beyond the seed."""

    members: frozenset[NodeId]
    seed: frozenset[NodeId]
    witnesses: dict[NodeId, PathWitness]


def find_disjoint_bounded_paths(
    topo: Topology,
    focal: NodeId,
    bounds: Iterable[int],
    target: Callable[[NodeId], bool],
    allowed: Callable[[NodeId], bool] = TRUE,
) -> PathWitness | None:
    """Search for one target-ending path per bound, disjoint outside ``focal``.

    ``target`` and ``allowed`` constrain non-focal vertices only.  Bounds are
    filled in ascending order, candidate paths come from
    :func:`enumerate_paths` with all previously used vertices banned, and the
    first complete family in that fixed order is returned, so equal inputs
    always produce the identical witness.
    """
    bounds = tuple(bounds)
    n = len(bounds)
    if n == 0:
        raise ValueError("need at least one bound")

    # each path claims a distinct first hop, so the focal node needs >= n
    # usable neighbors at all
    usable = [w for w in topo.neighbors(focal) if allowed(w)]
    if len(usable) < n:
        return None

    # short-circuit: n targets directly adjacent always work (1 <= H_i)
    adjacent_targets = [w for w in usable if target(w)]
    if len(adjacent_targets) >= n:
        return PathWitness(tuple((focal, w) for w in adjacent_targets[:n]))

    # reachability prune: ignoring disjointness, the i-th nearest target must
    # be within the i-th smallest bound
    hmax = max(bounds)
    dist = {focal: 0}
    frontier = [focal]
    depth = 0
    target_dists: list[int] = []
    while frontier and depth < hmax:
        depth += 1
        nxt = []
        for v in frontier:
            for w in topo.neighbors(v):
                if w in dist or not allowed(w):
                    continue
                dist[w] = depth
                if target(w):
                    target_dists.append(depth)
                nxt.append(w)
        frontier = nxt
    if len(target_dists) < n:
        return None
    target_dists.sort()
    sorted_bounds = sorted(bounds)
    if any(d > h for d, h in zip(target_dists, sorted_bounds)):
        return None

    order = sorted(range(n), key=lambda i: (bounds[i], i))
    chosen: list[Path | None] = [None] * n

    def fill(k: int, banned: frozenset[NodeId]) -> bool:
        if k == n:
            return True
        i = order[k]
        for path in enumerate_paths(topo, focal, bounds[i], allowed=allowed, banned=banned):
            if target(path[-1]):
                chosen[i] = path
                if fill(k + 1, banned | frozenset(path[1:])):
                    return True
        chosen[i] = None
        return False

    if fill(0, frozenset()):
        return PathWitness(tuple(chosen))  # type: ignore[arg-type]
    return None


def is_critical(scenario: Scenario, setting: Setting, u: NodeId) -> PathWitness | None:
    """Witness that faulty nodes could make correct node ``u`` deliver a
    forgery: one path per bound from ``u`` to a distinct byzantine node,
    disjoint outside ``u``.  Intermediate vertices are unconstrained (routes
    may pass through other faulty nodes or the source)."""
    if u in scenario.byzantine:
        raise ValueError(f"node {u} is byzantine; criticality applies to correct nodes")
    if len(scenario.byzantine) < setting.n:
        return None
    byz = scenario.byzantine
    return find_disjoint_bounded_paths(
        scenario.topology, u, setting.bounds, target=byz.__contains__
    )


def check_safety(
    scenario: Scenario, setting: Setting, find_all: bool = False
) -> SafetyReport:
    """Decide whether any correct node is critical.

    Fewer byzantine nodes than bounds can never fill a witness, so such
    scenarios are safe without search.  Otherwise only correct nodes within
    the smallest bound of some byzantine node can possibly be critical;
    each is checked exactly.  ``find_all`` collects every violation instead
    of stopping at the first.
    """
    n = setting.n
    if len(scenario.byzantine) <= n - 1:
        return SafetyReport(True)
    topo = scenario.topology
    # multi-source BFS from the byzantine nodes, out to the smallest bound
    reach = min(setting.bounds)
    dist: dict[NodeId, int] = {b: 0 for b in scenario.byzantine}
    frontier = sorted(scenario.byzantine)
    depth = 0
    candidates: list[NodeId] = []
    while frontier and depth < reach:
        depth += 1
        nxt = []
        for v in frontier:
            for w in topo.neighbors(v):
                if w in dist:
                    continue
                dist[w] = depth
                nxt.append(w)
                if w not in scenario.byzantine:
                    candidates.append(w)
        frontier = nxt
    violations = []
    for u in sorted(candidates):
        witness = is_critical(scenario, setting, u)
        if witness is not None:
            violations.append((u, witness))
            if not find_all:
                break
    return SafetyReport(not violations, tuple(violations))


def reliable_set(scenario: Scenario, setting: Setting) -> ReliableSet:
    """Grow the set of nodes guaranteed to deliver the genuine information.

    Requires a safe scenario.  The seed is the source plus its correct
    neighbors (they trust the source directly).  A correct node joins when
    it has one path per bound to distinct current members, every vertex on
    the paths correct, disjoint outside the candidate -- then each member
    relays the information down its path.  The closure runs to a fixpoint;
    because membership only ever grows and witnesses only reference members,
    the resulting set is independent of processing order.
    """
    report = check_safety(scenario, setting)
    if not report.safe:
        u, _ = report.violations[0]
        raise UnsafeScenarioError(
            f"scenario is unsafe (node {u} is critical); no reliable set exists"
        )
    topo = scenario.topology
    byz = scenario.byzantine
    correct = frozenset(v for v in topo.nodes() if v not in byz)
    is_correct = correct.__contains__
    h_max = setting.h_max

    members: set[NodeId] = {scenario.source}
    members.update(w for w in topo.neighbors(scenario.source) if w in correct)
    seed = frozenset(members)
    witnesses: dict[NodeId, PathWitness] = {}

    def ball(v: NodeId) -> list[NodeId]:
        # correct nodes within h_max of v through correct vertices: exactly
        # the nodes whose candidacy the addition of v can unlock
        seen = {v}
        frontier = [v]
        out = []
        for _ in range(h_max):
            nxt = []
            for x in frontier:
                for w in topo.neighbors(x):
                    if w in seen or w not in correct:
                        continue
                    seen.add(w)
                    nxt.append(w)
                    out.append(w)
            frontier = nxt
        return out

    queue: deque[NodeId] = deque()
    queued: set[NodeId] = set()
    for m in sorted(members):
        for w in ball(m):
            if w not in members and w not in queued:
                queued.add(w)
                queue.append(w)

    in_members = members.__contains__
    while queue:
        u = queue.popleft()
        queued.discard(u)
        if u in members:
            continue
        witness = find_disjoint_bounded_paths(
            topo, u, setting.bounds, target=in_members, allowed=is_correct
        )
        if witness is None:
            continue
        members.add(u)
        witnesses[u] = witness
        for w in ball(u):
            if w not in members and w not in queued:
                queued.add(w)
                queue.append(w)

    return ReliableSet(frozenset(members), seed, witnesses)


def _format_path(path: Path) -> str:
    return "-".join(str(v) for v in path)


def format_safety_report(report: SafetyReport) -> str:
    """Line-oriented text: status plus one ``critical`` line per violation."""
    lines = ["status SAFE" if report.safe else "status UNSAFE"]
    for u, witness in report.violations:
        paths = " ".join(_format_path(p) for p in witness.paths)
        lines.append(f"critical {u}: {paths}")
    return "\n".join(lines) + "\n"


def format_reliable_set(rs: ReliableSet) -> str:
    """Line-oriented text: member list, seed list, one witness line per
    non-seed member."""
    lines = [
        "members " + " ".join(str(v) for v in sorted(rs.members)),
        "seed " + " ".join(str(v) for v in sorted(rs.seed)),
    ]
    for u in sorted(rs.witnesses):
        paths = " ".join(_format_path(p) for p in rs.witnesses[u].paths)
        lines.append(f"witness {u}: {paths}")
    return "\n".join(lines) + "\n"
