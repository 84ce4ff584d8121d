"""Monthly-round overlay simulation: restricted flooding toward a collector.

Infected nodes harvest cargo messages every month and flood them through the
infected subgraph within a TTL hop budget.  Transmission bandwidth is the
node's monthly image-upload schedule: one upload is seen by every infected
neighbor at once, so a slot costs the sender once and delivers to all.
Messages sent in month m are processed by receivers at the end of month m
and become forwardable in month m+1 (one hop per month).  The collector
(botmaster) tallies unique and duplicate arrivals and never re-floods.
"""

from __future__ import annotations

import math
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .errors import ValidationError
from .graph import SocialDataset
from .stegochannel import ChannelProfile

_INFECT_SALT = 0x1F3C7
_PLACEMENT_SALT = 0xB07


class MessageKind(Enum):
    LOCAL = "local"
    FWD = "fwd"
    COMMAND = "command"


@dataclass(frozen=True, slots=True)
class Message:
    """One cargo or command unit; queue copies carry their own TTL budget."""

    id: int
    kind: MessageKind
    origin: int
    created_month: int
    ttl_remaining: int
    size_bits: int


@dataclass(frozen=True)
class SimConfig:
    """Simulation parameters.

    ``ttl`` of None selects floor(log10(number of infected nodes)), at least 1.
    ``forward_reserve`` is the minimum fraction of a node's monthly upload
    slots dedicated to relaying others' cargo.
    """

    K: int = 10
    ttl: int | None = None
    forward_reserve: float = 0.05
    infection_rate: float = 0.5
    botmaster_trials: int = 50
    command_rate: int = 1
    messages_per_image: int = 1
    rng_seed: int = 0
    engine: str = "auto"  # auto | python | numba
    jobs: int = 1

    def __post_init__(self):
        if self.K < 1:
            raise ValidationError("K must be >= 1")
        if self.ttl is not None and self.ttl < 1:
            raise ValidationError("ttl must be >= 1")
        if not 0.0 <= self.forward_reserve <= 1.0:
            raise ValidationError("forward_reserve must lie in [0, 1]")
        if not 0.0 < self.infection_rate <= 1.0:
            raise ValidationError("infection_rate must lie in (0, 1]")
        if self.botmaster_trials < 1:
            raise ValidationError("botmaster_trials must be >= 1")
        if self.command_rate < 0:
            raise ValidationError("command_rate must be >= 0")
        if self.messages_per_image < 1:
            raise ValidationError("messages_per_image must be >= 1")
        if self.engine not in ("auto", "python", "numba"):
            raise ValidationError(f"unknown engine {self.engine!r}")
        if self.jobs < 1:
            raise ValidationError("jobs must be >= 1")


@dataclass(frozen=True)
class MonthStats:
    generated: int
    transmitted: int
    delivered_unique: int
    delivered_duplicate: int


@dataclass(frozen=True)
class RunResult:
    """Delivery accounting for one trial, or the mean over many trials.

    Per-month arrays have one entry per simulated month; deliveries are
    attributed to the month whose uploads carried them.  Per-bot arrays are
    indexed by node id (zero for uninfected nodes and the collector).
    """

    months: int
    trials: int
    bot_count: int
    bits_per_message: int
    generated_per_month: np.ndarray
    transmitted_per_month: np.ndarray
    delivered_unique_per_month: np.ndarray
    delivered_duplicate_per_month: np.ndarray
    per_bot_generated: np.ndarray
    per_bot_delivered: np.ndarray

    @property
    def botmaster_inventory(self) -> float:
        """Unique messages held by the collector at the end of the run."""
        return float(self.delivered_unique_per_month.sum())


def infect(dataset: SocialDataset, rate: float, rng_seed: int) -> set:
    """Bernoulli infection snapshot: each node independently with prob rate."""
    if not 0.0 < rate <= 1.0:
        raise ValidationError("infection rate must lie in (0, 1]")
    rng = np.random.default_rng([_INFECT_SALT, rng_seed & 0xFFFFFFFF])
    draws = rng.random(dataset.node_count)
    return {int(v) for v in np.flatnonzero(draws < rate)}


def place_botmaster(infected, trial: int, rng_seed: int) -> int:
    """Uniform collector choice among infected nodes, per (seed, trial)."""
    if not infected:
        raise ValidationError("cannot place a botmaster in an empty infected set")
    ordered = sorted(infected)
    rng = np.random.default_rng([_PLACEMENT_SALT, rng_seed & 0xFFFFFFFF, trial])
    return ordered[int(rng.integers(len(ordered)))]


def default_ttl(n_infected: int) -> int:
    return max(1, int(math.floor(math.log10(max(n_infected, 1)))))


def forward_reserve_msgs(slots: int, reserve: float, messages_per_image: int) -> int:
    """Message transmissions the throttle reserves for forwarded cargo.

    ceil(reserve * slots) upload slots, quantized at 1e-9 so binary float
    representations of round fractions (0.05 * 20) do not over-reserve.
    """
    if slots <= 0 or reserve <= 0.0:
        return 0
    raw = reserve * slots
    if raw < 1e12:
        raw = round(raw, 9)
    return int(math.ceil(raw)) * messages_per_image


class TrialState:
    """Reference (pure Python) engine for a single botmaster trial.

    Kept straightforward and object-level; the numba engine in _fastsim
    reproduces its results exactly and is used for large runs.
    """

    def __init__(self, dataset: SocialDataset, config: SimConfig,
                 profile: ChannelProfile, infected, botmaster: int,
                 trace=None):
        if botmaster not in infected:
            raise ValidationError("botmaster must be an infected node")
        size_bits = profile.capacity_bits // config.messages_per_image
        if size_bits < 1:
            raise ValidationError(
                "messages_per_image exceeds the profile's per-image capacity"
            )
        self.dataset = dataset
        self.config = config
        self.botmaster = botmaster
        self.size_bits = size_bits
        self.ttl = config.ttl if config.ttl is not None else default_ttl(len(infected))
        self.bots = sorted(infected)
        infected_set = set(self.bots)
        self.inf_adj = {
            v: [int(u) for u in dataset.adjacency[v] if int(u) in infected_set]
            for v in self.bots
        }
        self.local_q = {v: deque() for v in self.bots}
        self.fwd_q = {v: deque() for v in self.bots}
        self.incoming = {v: [] for v in self.bots}
        self.seen = {v: set() for v in self.bots}
        # Remaining transmission capacity per node from each month on.  A
        # FIFO entry queued beyond the node's remaining slot budget can
        # never be popped before the run ends, so admission drops it
        # without changing any observable behavior (memory stays bounded
        # by the upload schedule).
        mpi = config.messages_per_image
        suffix = np.zeros((dataset.node_count, dataset.months + 1), dtype=np.int64)
        if dataset.months:
            suffix[:, :-1] = np.cumsum(
                dataset.uploads[:, ::-1] * mpi, axis=1)[:, ::-1]
        self.future_slots = suffix
        self.next_id = 0
        self.trace = trace
        self.per_bot_generated = np.zeros(dataset.node_count, dtype=np.int64)
        self.per_bot_delivered = np.zeros(dataset.node_count, dtype=np.int64)
        self.month_stats: list[MonthStats] = []

    def _generate(self, month: int) -> int:
        generated = 0
        for v in self.bots:
            if v == self.botmaster:
                continue
            for _ in range(self.config.K):
                msg = Message(self.next_id, MessageKind.LOCAL, v, month,
                              self.ttl, self.size_bits)
                self.next_id += 1
                if len(self.local_q[v]) < self.future_slots[v, month]:
                    self.local_q[v].append(msg)
                self.seen[v].add(msg.id)
                self.per_bot_generated[v] += 1
                generated += 1
        for _ in range(self.config.command_rate):
            msg = Message(self.next_id, MessageKind.COMMAND, self.botmaster,
                          month, self.ttl, self.size_bits)
            self.next_id += 1
            bm = self.botmaster
            if len(self.local_q[bm]) < self.future_slots[bm, month]:
                self.local_q[bm].append(msg)
            self.seen[bm].add(msg.id)
        return generated

    def _receive(self, sender: int, msg: Message, month: int, tallies):
        for r in self.inf_adj[sender]:
            if self.trace is not None:
                self.trace(
                    {"month": month, "from": sender, "to": r, "msg_id": msg.id,
                     "kind": msg.kind.value, "ttl_remaining": msg.ttl_remaining}
                )
            if msg.id in self.seen[r]:
                if r == self.botmaster and msg.kind is not MessageKind.COMMAND:
                    tallies[1] += 1
                continue
            self.seen[r].add(msg.id)
            if r == self.botmaster:
                if msg.kind is not MessageKind.COMMAND:
                    tallies[0] += 1
                    self.per_bot_delivered[msg.origin] += 1
                continue
            if msg.ttl_remaining - 1 > 0:
                admitted = (len(self.fwd_q[r]) + len(self.incoming[r])
                            < self.future_slots[r, month + 1])
                if admitted:
                    kind = (MessageKind.COMMAND
                            if msg.kind is MessageKind.COMMAND
                            else MessageKind.FWD)
                    self.incoming[r].append(
                        replace(msg, kind=kind,
                                ttl_remaining=msg.ttl_remaining - 1)
                    )

    def run_month(self, month: int) -> MonthStats:
        if not 0 <= month < self.dataset.months:
            raise ValidationError(f"month {month} outside dataset range")
        cfg = self.config
        generated = self._generate(month)
        transmitted = 0
        tallies = [0, 0]  # unique, duplicate
        for v in self.bots:
            slots = int(self.dataset.uploads[v, month])
            if slots <= 0:
                continue
            budget = slots * cfg.messages_per_image
            reserve = forward_reserve_msgs(slots, cfg.forward_reserve,
                                           cfg.messages_per_image)
            fwd_q, local_q = self.fwd_q[v], self.local_q[v]
            sent = 0
            while sent < min(reserve, budget) and fwd_q:
                msg = fwd_q.popleft()
                self._receive(v, msg, month, tallies)
                transmitted += msg.kind is not MessageKind.COMMAND
                sent += 1
            while sent < budget and local_q:
                msg = local_q.popleft()
                self._receive(v, msg, month, tallies)
                transmitted += msg.kind is not MessageKind.COMMAND
                sent += 1
            while sent < budget and fwd_q:
                msg = fwd_q.popleft()
                self._receive(v, msg, month, tallies)
                transmitted += msg.kind is not MessageKind.COMMAND
                sent += 1
        # Transmissions land once every sender has uploaded: copies received
        # this month become forwardable next month.
        for v in self.bots:
            if self.incoming[v]:
                self.fwd_q[v].extend(self.incoming[v])
                self.incoming[v] = []
        stats = MonthStats(generated, transmitted, tallies[0], tallies[1])
        self.month_stats.append(stats)
        return stats

    def result(self) -> RunResult:
        months = len(self.month_stats)
        return RunResult(
            months=months,
            trials=1,
            bot_count=len(self.bots) - 1,
            bits_per_message=self.size_bits,
            generated_per_month=np.array(
                [s.generated for s in self.month_stats], dtype=np.float64),
            transmitted_per_month=np.array(
                [s.transmitted for s in self.month_stats], dtype=np.float64),
            delivered_unique_per_month=np.array(
                [s.delivered_unique for s in self.month_stats], dtype=np.float64),
            delivered_duplicate_per_month=np.array(
                [s.delivered_duplicate for s in self.month_stats], dtype=np.float64),
            per_bot_generated=self.per_bot_generated.astype(np.float64),
            per_bot_delivered=self.per_bot_delivered.astype(np.float64),
        )


def run_month(state: TrialState, month: int) -> MonthStats:
    """Advance a trial by one month (mutates state; returns month stats)."""
    return state.run_month(month)


def run_trial(dataset: SocialDataset, config: SimConfig, profile: ChannelProfile,
              infected, botmaster: int, trace=None, engine=None) -> RunResult:
    """Run every month of one botmaster trial."""
    engine = engine or config.engine
    if engine == "auto":
        engine = "numba" if trace is None else "python"
    if engine == "numba":
        from . import _fastsim

        return _fastsim.run_trial_fast(dataset, config, profile, infected,
                                       botmaster)
    state = TrialState(dataset, config, profile, infected, botmaster, trace=trace)
    for month in range(dataset.months):
        state.run_month(month)
    return state.result()


def _mean_results(results: list[RunResult]) -> RunResult:
    first = results[0]
    n = len(results)
    mean = lambda attr: sum(getattr(r, attr) for r in results) / n
    return RunResult(
        months=first.months,
        trials=n,
        bot_count=first.bot_count,
        bits_per_message=first.bits_per_message,
        generated_per_month=mean("generated_per_month"),
        transmitted_per_month=mean("transmitted_per_month"),
        delivered_unique_per_month=mean("delivered_unique_per_month"),
        delivered_duplicate_per_month=mean("delivered_duplicate_per_month"),
        per_bot_generated=mean("per_bot_generated"),
        per_bot_delivered=mean("per_bot_delivered"),
    )


_POOL_ARGS = None


def _pool_trial(trial: int) -> RunResult:
    dataset, config, profile, infected = _POOL_ARGS
    botmaster = place_botmaster(infected, trial, config.rng_seed)
    return run_trial(dataset, config, profile, infected, botmaster)


def run_simulation(dataset: SocialDataset, config: SimConfig,
                   profile: ChannelProfile) -> RunResult:
    """Average delivery accounting over ``config.botmaster_trials`` trials.

    The infection snapshot is drawn once from the run seed; each trial picks
    an independent collector.  Trials are individually deterministic, so the
    result does not depend on ``config.jobs``.
    """
    infected = infect(dataset, config.infection_rate, config.rng_seed)
    if len(infected) < 2:
        raise ValidationError("need at least 2 infected nodes to route cargo")
    if dataset.months == 0:
        zeros = np.zeros(0, dtype=np.float64)
        per_bot = np.zeros(dataset.node_count, dtype=np.float64)
        return RunResult(
            months=0, trials=config.botmaster_trials,
            bot_count=len(infected) - 1, bits_per_message=1,
            generated_per_month=zeros, transmitted_per_month=zeros,
            delivered_unique_per_month=zeros,
            delivered_duplicate_per_month=zeros,
            per_bot_generated=per_bot, per_bot_delivered=per_bot.copy(),
        )
    trials = range(config.botmaster_trials)
    if config.jobs > 1:
        global _POOL_ARGS
        _POOL_ARGS = (dataset, config, profile, infected)
        try:
            with ProcessPoolExecutor(max_workers=config.jobs) as pool:
                results = list(pool.map(_pool_trial, trials))
        finally:
            _POOL_ARGS = None
    else:
        results = []
        for trial in trials:
            botmaster = place_botmaster(infected, trial, config.rng_seed)
            results.append(run_trial(dataset, config, profile, infected, botmaster))
    return _mean_results(results)
