"""Monte Carlo estimation of delivery and safety probabilities.

Each trial drops every node independently with probability ``lam`` into the
byzantine set, draws a source among the correct nodes, checks scenario
safety, and asks whether a uniformly drawn correct observer lies in the
reliable set.  An unsafe scenario counts as both a safety violation and a
delivery failure (the conservative reading; a flag flips to excluding unsafe
trials from the delivery estimate instead).

Reproducibility: every trial derives its own seeds from the master seed and
the (lambda index, trial index) pair through a keyed hash, so results do not
depend on execution order and a sweep can be parallelized or resumed without
changing a single byte of output.
"""

from __future__ import annotations

import enum
import hashlib
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from statistics import NormalDist

from .analyzer import check_safety, reliable_set
from .protocol import Setting
from .simulator import Scenario
from .topology import Topology, make_grid, make_torus

DEFAULT_INFO = b"m"

CSV_HEADER = (
    "topology,N,setting,lambda,trials,p_deliver,ci_low,ci_high,"
    "p_safe,safe_ci_low,safe_ci_high,resampled"
)

RESAMPLE_LIMIT = 1000


class Outcome(enum.Enum):
    SUCCESS = "success"
    FAILURE = "failure"
    UNSAFE = "unsafe"


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str  # "grid" | "torus"
    size: int
    setting: Setting
    lambdas: tuple[float, ...]
    trials: int
    master_seed: int
    confidence: float = 0.95
    exclude_unsafe: bool = False

    def __post_init__(self):
        object.__setattr__(self, "lambdas", tuple(self.lambdas))
        if self.kind not in ("grid", "torus"):
            raise ValueError(f"kind must be 'grid' or 'torus', got {self.kind!r}")
        if any(not (0.0 <= lam < 1.0) for lam in self.lambdas):
            raise ValueError("every lambda must lie in [0, 1)")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not (0.0 < self.confidence < 1.0):
            raise ValueError("confidence must lie in (0, 1)")

    def topology(self) -> Topology:
        return make_grid(self.size) if self.kind == "grid" else make_torus(self.size)


@dataclass(frozen=True)
class ResultRow:
    lam: float
    trials: int
    p_deliver: float
    ci_low: float
    ci_high: float
    p_safe: float
    safe_ci_low: float
    safe_ci_high: float
    resampled: int


def mix_seed(master_seed: int, *parts: int) -> int:
    """Stable 64-bit seed derived from the master seed and index parts."""
    h = hashlib.blake2b(digest_size=8)
    for p in (master_seed, *parts):
        h.update(str(p).encode())
        h.update(b"|")
    return int.from_bytes(h.digest(), "big")


def sample_scenario(
    topo: Topology, lam: float, trial_seed: int, info: bytes = DEFAULT_INFO
) -> tuple[Scenario, int]:
    """Draw one scenario: per-node byzantine coin flips plus a correct source.

    Draws with fewer than two correct nodes (no room for source and observer)
    are redrawn from the same stream; the second return value counts the
    redraws.  Gives up after 1000 attempts.
    """
    rng = random.Random(trial_seed)
    n = topo.node_count
    for attempt in range(RESAMPLE_LIMIT):
        byzantine = frozenset(v for v in range(n) if rng.random() < lam)
        if n - len(byzantine) >= 2:
            correct = [v for v in range(n) if v not in byzantine]
            source = rng.choice(correct)
            return Scenario(topo, source, byzantine, info), attempt
    raise RuntimeError(
        f"no usable scenario after {RESAMPLE_LIMIT} draws (lambda={lam}, n={n})"
    )


def trial(scenario: Scenario, setting: Setting, observer_seed: int) -> Outcome:
    """Run one analysis trial: safety first, then observer membership."""
    if not check_safety(scenario, setting).safe:
        return Outcome.UNSAFE
    observers = [v for v in scenario.correct_nodes() if v != scenario.source]
    observer = random.Random(observer_seed).choice(observers)
    members = reliable_set(scenario, setting).members
    return Outcome.SUCCESS if observer in members else Outcome.FAILURE


def wilson_interval(
    successes: int, trials: int, confidence: float = 0.95
) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion, clamped to [0, 1]."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not (0 <= successes <= trials):
        raise ValueError("successes must lie in [0, trials]")
    if not (0.0 < confidence < 1.0):
        raise ValueError("confidence must lie in (0, 1)")
    z = NormalDist().inv_cdf((1.0 + confidence) / 2.0)
    p = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2.0 * trials)) / denom
    half = (z / denom) * ((p * (1.0 - p) / trials + z2 / (4.0 * trials * trials)) ** 0.5)
    # at the extremes center and half coincide mathematically; keep the
    # endpoints exact instead of leaving rounding dust
    low = 0.0 if successes == 0 else max(0.0, center - half)
    high = 1.0 if successes == trials else min(1.0, center + half)
    return (low, high)


def unsecured_baseline(lam: float, node_count: int) -> float:
    """Success probability of unprotected flooding: no faulty node at all."""
    return (1.0 - lam) ** node_count


def _run_block(args) -> tuple[int, int, int, int, int]:
    """Worker: one contiguous block of trials for one lambda.

    Returns (lambda index, successes, failures, unsafe, resampled).  Module
    level so it pickles for process pools.
    """
    kind, size, bounds, lam, li, master_seed, lo, hi = args
    topo = make_grid(size) if kind == "grid" else make_torus(size)
    setting = Setting(tuple(bounds))
    succ = fail = unsafe = resampled = 0
    for ti in range(lo, hi):
        scenario, redraws = sample_scenario(topo, lam, mix_seed(master_seed, li, ti, 0))
        resampled += redraws
        outcome = trial(scenario, setting, mix_seed(master_seed, li, ti, 1))
        if outcome is Outcome.SUCCESS:
            succ += 1
        elif outcome is Outcome.FAILURE:
            fail += 1
        else:
            unsafe += 1
    return li, succ, fail, unsafe, resampled


def run_sweep(config: ExperimentConfig, jobs: int = 1) -> list[ResultRow]:
    """Run every (lambda, trial) cell and aggregate one row per lambda.

    ``jobs`` only chooses how trials are distributed over processes; per-cell
    seeding makes the aggregate identical for any job count.
    """
    if jobs < 1:
        raise ValueError("jobs must be >= 1")
    tasks = []
    for li, lam in enumerate(config.lambdas):
        block = max(1, -(-config.trials // max(jobs, 1)))
        lo = 0
        while lo < config.trials:
            hi = min(config.trials, lo + block)
            tasks.append(
                (
                    config.kind,
                    config.size,
                    tuple(config.setting.bounds),
                    lam,
                    li,
                    config.master_seed,
                    lo,
                    hi,
                )
            )
            lo = hi

    totals = {li: [0, 0, 0, 0] for li in range(len(config.lambdas))}
    if jobs == 1:
        results = map(_run_block, tasks)
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_block, tasks))
    for li, succ, fail, unsafe, resampled in results:
        t = totals[li]
        t[0] += succ
        t[1] += fail
        t[2] += unsafe
        t[3] += resampled

    rows = []
    for li, lam in enumerate(config.lambdas):
        succ, fail, unsafe, resampled = totals[li]
        trials = config.trials
        safe_trials = trials - unsafe
        if config.exclude_unsafe:
            deliver_n = safe_trials
            p_deliver = succ / deliver_n if deliver_n else 0.0
        else:
            deliver_n = trials
            p_deliver = succ / trials
        if deliver_n:
            ci_low, ci_high = wilson_interval(succ, deliver_n, config.confidence)
        else:
            ci_low = ci_high = 0.0
        p_safe = safe_trials / trials
        safe_ci = wilson_interval(safe_trials, trials, config.confidence)
        rows.append(
            ResultRow(
                lam,
                trials,
                p_deliver,
                ci_low,
                ci_high,
                p_safe,
                safe_ci[0],
                safe_ci[1],
                resampled,
            )
        )
    return rows


def _fmt(x: float) -> str:
    return format(x, ".6g")


def format_csv(
    config: ExperimentConfig, rows: list[ResultRow], baseline: bool = False
) -> str:
    """Render sweep rows as CSV; optionally append analytic unprotected-
    flooding rows (setting column ``unsecured``, zero trials)."""
    out = [CSV_HEADER]
    label = str(config.setting)
    for row in rows:
        out.append(
            ",".join(
                [
                    config.kind,
                    str(config.size),
                    label,
                    _fmt(row.lam),
                    str(row.trials),
                    _fmt(row.p_deliver),
                    _fmt(row.ci_low),
                    _fmt(row.ci_high),
                    _fmt(row.p_safe),
                    _fmt(row.safe_ci_low),
                    _fmt(row.safe_ci_high),
                    str(row.resampled),
                ]
            )
        )
    if baseline:
        node_count = config.size * config.size
        for row in rows:
            p = unsecured_baseline(row.lam, node_count)
            out.append(
                ",".join(
                    [
                        config.kind,
                        str(config.size),
                        "unsecured",
                        _fmt(row.lam),
                        "0",
                        _fmt(p),
                        _fmt(p),
                        _fmt(p),
                        _fmt(p),
                        _fmt(p),
                        _fmt(p),
                        "0",
                    ]
                )
            )
    return "\n".join(out) + "\n"
