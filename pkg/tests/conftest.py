import random

import pytest

from byzcast.protocol import Setting
from byzcast.simulator import Scenario
from byzcast.topology import Topology, make_grid, make_torus

# the four deployed bound profiles exercised throughout
SETTINGS = [
    Setting((1, 2)),
    Setting((1, 2, 5)),
    Setting((1, 3, 3)),
    Setting((1, 2, 5, 5)),
]


def make_line(n: int) -> Topology:
    return Topology(n, [(i, i + 1) for i in range(n - 1)])


def random_small_scenario(rng: random.Random, max_nodes: int = 25, max_byz: int = 4):
    """One random (scenario, setting) over a small line, grid or torus."""
    kind = rng.choice(("line", "grid", "torus"))
    if kind == "line":
        topo = make_line(rng.randint(2, max_nodes))
    elif kind == "grid":
        topo = make_grid(rng.randint(2, int(max_nodes**0.5)))
    else:
        topo = make_torus(rng.randint(3, max(3, int(max_nodes**0.5))))
    n = topo.node_count
    byz_count = min(rng.randint(0, max_byz), n - 2)
    byzantine = frozenset(rng.sample(range(n), byz_count))
    correct = [v for v in range(n) if v not in byzantine]
    source = rng.choice(correct)
    setting = rng.choice(SETTINGS)
    return Scenario(topo, source, byzantine, b"m"), setting


@pytest.fixture
def rng():
    return random.Random(0xBC)
