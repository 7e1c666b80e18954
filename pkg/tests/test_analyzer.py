import random

import pytest

from byzcast.analyzer import (
    PathWitness,
    UnsafeScenarioError,
    check_safety,
    find_disjoint_bounded_paths,
    format_reliable_set,
    format_safety_report,
    is_critical,
    reliable_set,
)
from byzcast.protocol import Setting
from byzcast.simulator import Scenario
from byzcast.topology import Topology, is_simple_path, make_grid, make_torus

from conftest import SETTINGS, make_line, random_small_scenario
from oracles import adjacency, critical_oracle, disjoint_family, reliable_members_oracle

M = b"m"


def assert_valid_witness(topo, focal, bounds, witness, targets, allowed):
    """Re-verify a witness from its definition, independent of the search."""
    assert len(witness.paths) == len(bounds)
    sets = []
    for path, bound in zip(witness.paths, bounds):
        assert is_simple_path(topo, path)
        assert path[0] == focal
        assert 1 <= len(path) - 1 <= bound
        assert path[-1] in targets
        assert all(v in allowed for v in path[1:])
        sets.append(set(path[1:]))
    for i in range(len(sets)):
        for j in range(i + 1, len(sets)):
            assert not (sets[i] & sets[j])


# ------------------------------------------------------ disjoint path search


def test_find_paths_line_center():
    line = make_line(5)
    w = find_disjoint_bounded_paths(line, 2, (1, 2), target={1, 3}.__contains__)
    assert w == PathWitness(((2, 1), (2, 3)))
    assert w.focal == 2
    assert w.path_sets() == (frozenset({1}), frozenset({3}))


def test_find_paths_out_of_reach():
    line = make_line(5)
    assert find_disjoint_bounded_paths(line, 2, (1, 2), target={0, 4}.__contains__) is None


def test_find_paths_isolated_focal():
    topo = Topology(3, [(0, 1)])
    assert find_disjoint_bounded_paths(topo, 2, (1,), target=lambda v: True) is None


def test_find_paths_deterministic_first_witness():
    g = make_grid(3)
    w = find_disjoint_bounded_paths(g, 4, (2, 2), target={0, 8}.__contains__)
    assert w == PathWitness(((4, 1, 0), (4, 5, 8)))


def test_find_paths_respects_allowed():
    g = make_grid(3)
    allowed = {0, 3, 5, 8}  # node 1 fenced off
    w = find_disjoint_bounded_paths(
        g, 4, (2, 2), target={0, 8}.__contains__, allowed=allowed.__contains__
    )
    assert w == PathWitness(((4, 3, 0), (4, 5, 8)))


def test_find_paths_needs_distinct_first_hops():
    # degree 2 focal can never carry three disjoint routes
    line = make_line(7)
    assert find_disjoint_bounded_paths(line, 3, (1, 3, 3), target=lambda v: True) is None


def test_find_paths_matches_bruteforce(rng):
    for _ in range(60):
        scenario, setting = random_small_scenario(rng, max_nodes=16, max_byz=4)
        topo = scenario.topology
        targets = set(scenario.byzantine) or {scenario.source}
        focal = rng.choice([v for v in topo.nodes() if v not in targets])
        got = find_disjoint_bounded_paths(
            topo, focal, setting.bounds, target=targets.__contains__
        )
        want = disjoint_family(adjacency(topo), focal, setting.bounds, targets)
        assert (got is not None) == (want is not None)
        if got is not None:
            assert_valid_witness(
                topo, focal, setting.bounds, got, targets, set(topo.nodes())
            )


# ----------------------------------------------------------------- critical


def test_critical_line_center_only():
    line = make_line(5)
    scen = Scenario(line, 0, frozenset({1, 3}), M)
    s = Setting((1, 2))
    assert is_critical(scen, s, 2) == PathWitness(((2, 1), (2, 3)))
    assert is_critical(scen, s, 0) is None
    assert is_critical(scen, s, 4) is None


def test_critical_none_on_longer_line():
    line = make_line(6)
    scen = Scenario(line, 1, frozenset({0, 5}), M)
    s = Setting((1, 2))
    for u in (1, 2, 3, 4):
        assert is_critical(scen, s, u) is None


def test_critical_rejects_byzantine_focus():
    scen = Scenario(make_line(5), 0, frozenset({1, 3}), M)
    with pytest.raises(ValueError):
        is_critical(scen, Setting((1, 2)), 1)


def test_too_few_byzantine_never_critical(rng):
    # fewer byzantine nodes than bounds cannot fill a witness
    for _ in range(40):
        scenario, setting = random_small_scenario(rng, max_nodes=16, max_byz=0)
        n_byz = setting.n - 1
        nodes = list(scenario.topology.nodes())
        byz = frozenset(rng.sample(nodes, min(n_byz, len(nodes) - 2)))
        correct = [v for v in nodes if v not in byz]
        scen = Scenario(scenario.topology, rng.choice(correct), byz, M)
        for u in correct:
            assert is_critical(scen, setting, u) is None


# ------------------------------------------------------------------- safety


def test_safety_no_byzantine():
    scen = Scenario(make_torus(4), 0, frozenset(), M)
    for setting in SETTINGS:
        report = check_safety(scen, setting)
        assert report.safe and report.violations == ()


def test_safety_line_violation():
    scen = Scenario(make_line(5), 0, frozenset({1, 3}), M)
    report = check_safety(scen, Setting((1, 2)), find_all=True)
    assert not report.safe
    assert [u for u, _ in report.violations] == [2]
    _, witness = report.violations[0]
    assert witness == PathWitness(((2, 1), (2, 3)))


def test_safety_distant_byzantine_pair_safe():
    t = make_torus(10)
    scen = Scenario(t, 1, frozenset({0, 55}), M)  # (0,0) and (5,5): distance 10
    report = check_safety(scen, Setting((1, 2)), find_all=True)
    assert report.safe


def test_safety_find_all_vs_first():
    # two byzantine pairs close together: several critical nodes
    line = make_line(5)
    scen = Scenario(line, 0, frozenset({1, 3}), M)
    first = check_safety(scen, Setting((1, 2)))
    assert not first.safe and len(first.violations) == 1
    full = check_safety(scen, Setting((1, 2)), find_all=True)
    assert set(u for u, _ in full.violations) >= set(u for u, _ in first.violations)


def test_safety_matches_per_node_critical(rng):
    for _ in range(40):
        scenario, setting = random_small_scenario(rng, max_nodes=16)
        report = check_safety(scenario, setting)
        any_critical = any(
            is_critical(scenario, setting, u) is not None
            for u in scenario.correct_nodes()
        )
        assert report.safe == (not any_critical)


# ------------------------------------------------------------- reliable set


def test_reliable_full_torus_all_settings():
    t = make_torus(6)
    for setting in SETTINGS:
        rs = reliable_set(Scenario(t, 0, frozenset(), M), setting)
        assert rs.members == frozenset(range(36))


def test_reliable_seed_is_source_and_correct_neighbors():
    t = make_torus(10)
    rs = reliable_set(Scenario(t, 0, frozenset({1}), M), Setting((1, 2)))
    assert rs.seed == frozenset({0, 9, 10, 90})
    assert rs.seed <= rs.members
    assert all(u not in rs.witnesses for u in rs.seed)


def test_reliable_grid_exclusions():
    g = make_grid(6)
    corners = {0, 5, 30, 35}
    border = {v for v in range(36) if g.degree(v) <= 3}
    zero = frozenset()
    assert reliable_set(Scenario(g, 14, zero, M), Setting((1, 2))).members == frozenset(range(36))
    for bounds in ((1, 2, 5), (1, 3, 3)):
        rs = reliable_set(Scenario(g, 14, zero, M), Setting(bounds))
        assert rs.members == frozenset(range(36)) - corners
    rs = reliable_set(Scenario(g, 14, zero, M), Setting((1, 2, 5, 5)))
    assert rs.members == frozenset(range(36)) - border


def test_reliable_refuses_unsafe():
    scen = Scenario(make_line(5), 0, frozenset({1, 3}), M)
    with pytest.raises(UnsafeScenarioError):
        reliable_set(scen, Setting((1, 2)))


def test_reliable_witnesses_verify():
    t = make_torus(5)
    scen = Scenario(t, 7, frozenset({3, 17}), M)
    setting = Setting((1, 2, 5))
    rs = reliable_set(scen, setting)
    correct = set(scen.correct_nodes())
    added_order_members = rs.members
    for u in rs.members - rs.seed:
        w = rs.witnesses[u]
        assert w.focal == u
        assert_valid_witness(t, u, setting.bounds, w, added_order_members - {u}, correct)
    # every vertex on a witness path is correct
    for w in rs.witnesses.values():
        for path in w.paths:
            assert not (set(path) & scen.byzantine)


def test_reliable_members_have_enough_correct_neighbors():
    # beyond the seed, membership needs one distinct correct neighbor per bound
    rng = random.Random(5)
    for _ in range(25):
        scenario, setting = random_small_scenario(rng, max_nodes=20)
        if not check_safety(scenario, setting).safe:
            continue
        rs = reliable_set(scenario, setting)
        correct = set(scenario.correct_nodes())
        for u in rs.members - rs.seed:
            correct_deg = sum(
                1 for w in scenario.topology.neighbors(u) if w in correct
            )
            assert correct_deg >= setting.n


def test_reliable_monotone_in_byzantine_set(rng):
    for _ in range(25):
        scenario, setting = random_small_scenario(rng, max_nodes=16, max_byz=3)
        if not scenario.byzantine:
            continue
        dropped = sorted(scenario.byzantine)[0]
        smaller = Scenario(
            scenario.topology,
            scenario.source,
            scenario.byzantine - {dropped},
            scenario.genuine_info,
        )
        # removing a byzantine node keeps safety and never shrinks the set
        if check_safety(scenario, setting).safe:
            assert check_safety(smaller, setting).safe
            assert (
                reliable_set(scenario, setting).members
                <= reliable_set(smaller, setting).members
            )
        # enlarging the byzantine set never cures a critical node
        extra = [v for v in scenario.correct_nodes() if v != scenario.source]
        if extra:
            grown = Scenario(
                scenario.topology,
                scenario.source,
                scenario.byzantine | {extra[-1]},
                scenario.genuine_info,
            )
            for u in grown.correct_nodes():
                if is_critical(scenario, setting, u) is not None:
                    assert is_critical(grown, setting, u) is not None


def test_reliable_matches_bruteforce(rng):
    checked = 0
    for _ in range(30):
        scenario, setting = random_small_scenario(rng, max_nodes=16, max_byz=3)
        if not check_safety(scenario, setting).safe:
            continue
        rs = reliable_set(scenario, setting)
        want = reliable_members_oracle(
            scenario.topology, scenario.source, scenario.byzantine, setting.bounds
        )
        assert rs.members == frozenset(want)
        checked += 1
    assert checked >= 10


def test_reliable_order_independent(rng):
    # a deliberately shuffled closure reaches the same fixpoint
    for _ in range(10):
        scenario, setting = random_small_scenario(rng, max_nodes=16, max_byz=2)
        if not check_safety(scenario, setting).safe:
            continue
        topo = scenario.topology
        correct = frozenset(scenario.correct_nodes())
        members = {scenario.source} | {
            w for w in topo.neighbors(scenario.source) if w in correct
        }
        changed = True
        while changed:
            changed = False
            candidates = [v for v in correct if v not in members]
            rng.shuffle(candidates)
            for v in candidates:
                w = find_disjoint_bounded_paths(
                    topo, v, setting.bounds,
                    target=members.__contains__, allowed=correct.__contains__,
                )
                if w is not None:
                    members.add(v)
                    changed = True
        assert frozenset(members) == reliable_set(scenario, setting).members


def test_results_invariant_under_bound_permutation(rng):
    for _ in range(15):
        scenario, setting = random_small_scenario(rng, max_nodes=16)
        perm = list(setting.bounds)
        rng.shuffle(perm)
        permuted = Setting(tuple(perm))
        assert check_safety(scenario, setting).safe == check_safety(scenario, permuted).safe
        for u in scenario.correct_nodes():
            assert (is_critical(scenario, setting, u) is None) == (
                is_critical(scenario, permuted, u) is None
            )
        if check_safety(scenario, setting).safe:
            assert (
                reliable_set(scenario, setting).members
                == reliable_set(scenario, permuted).members
            )


# -------------------------------------------------------------- text output


def test_format_safety_report():
    scen = Scenario(make_line(5), 0, frozenset({1, 3}), M)
    text = format_safety_report(check_safety(scen, Setting((1, 2)), find_all=True))
    assert text == "status UNSAFE\ncritical 2: 2-1 2-3\n"
    safe_text = format_safety_report(check_safety(Scenario(make_line(5), 0, frozenset(), M), Setting((1, 2))))
    assert safe_text == "status SAFE\n"


def test_format_reliable_set():
    line = make_line(3)
    rs = reliable_set(Scenario(line, 1, frozenset(), M), Setting((1, 2)))
    text = format_reliable_set(rs)
    assert text.splitlines()[0] == "members 0 1 2"
    assert text.splitlines()[1] == "seed 0 1 2"
