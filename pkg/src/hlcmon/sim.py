"""Deterministic workload simulator.

Processes take turns round-robin. On its turn a process advances its
physical clock with a fixed probability, but never past ``epsilon``
ticks ahead of the slowest clock, so physical clocks stay within the
skew bound by construction. Clock advances may trigger a send to a
random peer; messages become deliverable ``delta`` receiver-ticks after
the send. Only sends, receives and variable changes emit trace events.

Randomness comes from one PCG64 stream per process, split off the root
seed with ``numpy.random.SeedSequence.spawn``, so a trace is a pure
function of its configuration.
"""

from __future__ import annotations

import heapq
from dataclasses import asdict, dataclass

import numpy as np

from .clock import ClockConfig, DEFAULT_C_MAX, HlcState, hlc_local, hlc_recv
from .trace import Event, Trace


@dataclass
class SimConfig:
    n: int = 10
    epsilon: int = 100
    alpha: float = 0.1
    beta: float = 0.02
    delta: int = 10
    ell: int = 1
    steps: int = 1_000_000
    seed: int = 0
    tick_advance_prob: float = 0.5
    c_max: int = DEFAULT_C_MAX

    def __post_init__(self) -> None:
        if self.n <= 0:
            raise ValueError("n must be positive")
        if self.epsilon < 1:
            raise ValueError("epsilon must be at least 1")
        for name in ("alpha", "beta", "tick_advance_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.delta < 0:
            raise ValueError("delta must be non-negative")
        if self.ell < 1:
            raise ValueError("ell must be at least 1")
        if self.steps < 1:
            raise ValueError("steps must be positive")
        if self.c_max < 1:
            raise ValueError("c_max must be positive")


@dataclass
class TdmConfig(SimConfig):
    """Time-slot workload: process i holds a shared resource during its slot.

    Slots rotate round-robin, ``slot_length`` ticks each; the holder
    releases ``epsilon`` ticks early so that, under the skew bound, no
    two holds can overlap. With probability ``error_prob`` a release is
    perturbed to land past the slot boundary, overshooting by a uniform
    1..2*epsilon ticks.
    """

    slot_length: int = 100_000
    error_prob: float = 0.10

    def __post_init__(self) -> None:
        super().__post_init__()
        if self.slot_length <= self.epsilon:
            raise ValueError("slot_length must exceed epsilon")
        if not 0.0 <= self.error_prob <= 1.0:
            raise ValueError("error_prob must lie in [0, 1]")


class _Stream:
    """Buffered uniform draws from one PCG64 stream."""

    __slots__ = ("gen", "buf", "idx")

    def __init__(self, ss: np.random.SeedSequence) -> None:
        self.gen = np.random.Generator(np.random.PCG64(ss))
        self.buf = self.gen.random(4096)
        self.idx = 0

    def u(self) -> float:
        if self.idx >= self.buf.shape[0]:
            self.buf = self.gen.random(4096)
            self.idx = 0
        val = self.buf[self.idx]
        self.idx += 1
        return val


class _Core:
    """Shared scheduler state for both workloads."""

    def __init__(self, cfg: SimConfig, workload: str) -> None:
        self.cfg = cfg
        self.workload = workload
        self.n = cfg.n
        self.clock_cfg = ClockConfig(c_max=cfg.c_max)
        self.streams = [_Stream(ss) for ss in np.random.SeedSequence(cfg.seed).spawn(cfg.n)]
        self.pts = [0] * cfg.n
        self.hlc = [HlcState() for _ in range(cfg.n)]
        self.seqs = [0] * cfg.n
        self.events: list[Event] = []
        # per receiver: heap of (due_pt, order, msg_id, sender_ts)
        self.pending: list[list[tuple]] = [[] for _ in range(cfg.n)]
        self.msg_counter = 0

    def emit(self, proc: int, kind: str, ts, var=None, val=None, msg_id=None) -> None:
        self.events.append(
            Event(self.seqs[proc], proc, kind, self.pts[proc], ts, var, val, msg_id)
        )
        self.seqs[proc] += 1

    def advance_clock(self, i: int) -> bool:
        if self.streams[i].u() >= self.cfg.tick_advance_prob:
            return False
        if self.pts[i] - min(self.pts) >= self.cfg.epsilon:
            return False  # leading clock holds at the skew frontier
        self.pts[i] += 1
        return True

    def maybe_send(self, i: int) -> None:
        if self.n == 1:
            return
        if self.streams[i].u() >= self.cfg.alpha:
            return
        peer = int(self.streams[i].u() * (self.n - 1))
        if peer >= i:
            peer += 1
        ts = hlc_local(self.hlc[i], self.pts[i], self.clock_cfg)
        msg_id = self.msg_counter
        self.msg_counter += 1
        self.emit(i, "send", ts, msg_id=msg_id)
        due = self.pts[peer] + self.cfg.delta
        heapq.heappush(self.pending[peer], (due, msg_id, ts))

    def deliver_due(self, i: int) -> None:
        box = self.pending[i]
        while box and box[0][0] <= self.pts[i]:
            _, msg_id, sender_ts = heapq.heappop(box)
            ts = hlc_recv(self.hlc[i], self.pts[i], sender_ts, self.clock_cfg)
            self.emit(i, "recv", ts, msg_id=msg_id)

    def set_var(self, i: int, var: str, val) -> None:
        ts = hlc_local(self.hlc[i], self.pts[i], self.clock_cfg)
        self.emit(i, "local", ts, var=var, val=val)

    def finish(self, extra_config: dict | None = None) -> Trace:
        config = {"workload": self.workload}
        config.update(asdict(self.cfg))
        if extra_config:
            config.update(extra_config)
        return Trace(config=config, events=self.events)


def simulate_conjunctive(cfg: SimConfig) -> Trace:
    """Each process flips a boolean ``v`` true with probability ``beta``
    per turn and holds it for ``ell`` local ticks."""
    core = _Core(cfg, "conjunctive")
    v = [False] * cfg.n
    v_until = [0] * cfg.n
    for _ in range(cfg.steps):
        for i in range(cfg.n):
            if core.advance_clock(i):
                core.maybe_send(i)
            core.deliver_due(i)
            if v[i]:
                if core.pts[i] >= v_until[i]:
                    v[i] = False
                    core.set_var(i, "v", False)
            elif core.streams[i].u() < cfg.beta:
                v[i] = True
                v_until[i] = core.pts[i] + cfg.ell
                core.set_var(i, "v", True)
    return core.finish()


def simulate_tdm(cfg: TdmConfig) -> Trace:
    """Rotating-slot workload; see :class:`TdmConfig`."""
    core = _Core(cfg, "tdm")
    n, T, eps = cfg.n, cfg.slot_length, cfg.epsilon
    v = [False] * n
    # the two most recently entered own slots, with their overshoots
    own_slot = [-10] * n
    overshoot = [0] * n
    prev_slot = [-10] * n
    prev_over = [0] * n

    def desired(i: int) -> bool:
        pt = core.pts[i]
        slot, pos = divmod(pt, T)
        if slot % n == i and own_slot[i] != slot:
            prev_slot[i], prev_over[i] = own_slot[i], overshoot[i]
            own_slot[i] = slot
            overshoot[i] = 0
            if core.streams[i].u() < cfg.error_prob:
                overshoot[i] = 1 + int(core.streams[i].u() * 2 * eps)
        if slot == own_slot[i] and pos < T - eps + overshoot[i]:
            return True
        if slot - 1 == own_slot[i] and pos < overshoot[i] - eps:
            return True
        if slot - 1 == prev_slot[i] and pos < prev_over[i] - eps:
            return True
        return False

    for _ in range(cfg.steps):
        for i in range(n):
            if core.advance_clock(i):
                core.maybe_send(i)
            core.deliver_due(i)
            want = desired(i)
            if want != v[i]:
                v[i] = want
                core.set_var(i, "v", want)
    return core.finish()
