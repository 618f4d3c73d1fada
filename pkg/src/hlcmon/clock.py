"""Hybrid logical clocks with a bounded logical counter.

A timestamp is a pair ``(l, c)``. The ``l`` part tracks the largest
physical clock value the process has learned of (its own or through
messages), so it stays within the system skew bound of real clocks.
The ``c`` part is a logical counter that breaks ties between events
that share an ``l`` value; it resets to zero whenever ``l`` advances.

Timestamps are ordered lexicographically. If event e causally precedes
event f then ``timestamp(e) < timestamp(f)``; equal timestamps on
distinct processes imply the events are concurrent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

DEFAULT_C_MAX = 2**31 - 1


class CounterOverflowError(RuntimeError):
    """Raised when the logical counter would exceed its configured bound."""


@dataclass(frozen=True, order=True, slots=True)
class HlcTimestamp:
    l: int
    c: int

    def __str__(self) -> str:
        return f"({self.l},{self.c})"


@dataclass
class ClockConfig:
    c_max: int = DEFAULT_C_MAX
    epsilon: int = 0

    def __post_init__(self) -> None:
        if self.c_max < 1:
            raise ValueError("c_max must be at least 1")
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")


@dataclass
class HlcState:
    """Mutable clock state of a single process."""

    l: int = 0
    c: int = 0

    def timestamp(self) -> HlcTimestamp:
        return HlcTimestamp(self.l, self.c)


def _check_counter(c: int, cfg: ClockConfig) -> int:
    if c > cfg.c_max:
        raise CounterOverflowError(f"logical counter {c} exceeds bound {cfg.c_max}")
    return c


def hlc_local(state: HlcState, pt: int, cfg: ClockConfig) -> HlcTimestamp:
    """Advance ``state`` for a local or send event at physical time ``pt``.

    ``l`` becomes ``max(l, pt)``; the counter increments when ``l`` is
    unchanged and resets to zero when ``l`` advances.
    """
    if pt < 0:
        raise ValueError("physical time must be non-negative")
    new_l = max(state.l, pt)
    new_c = state.c + 1 if new_l == state.l else 0
    _check_counter(new_c, cfg)
    state.l, state.c = new_l, new_c
    return HlcTimestamp(new_l, new_c)


def hlc_recv(state: HlcState, pt: int, msg: HlcTimestamp, cfg: ClockConfig) -> HlcTimestamp:
    """Advance ``state`` for a receive event carrying timestamp ``msg``.

    ``l`` becomes the maximum of the local ``l``, the message ``l`` and
    ``pt``. The counter depends on which of those achieved the maximum:
    both local and message (max of the two counters plus one), local
    only (local counter plus one), message only (message counter plus
    one), or physical time alone (reset to zero).
    """
    if pt < 0:
        raise ValueError("physical time must be non-negative")
    new_l = max(state.l, msg.l, pt)
    if new_l == state.l and new_l == msg.l:
        new_c = max(state.c, msg.c) + 1
    elif new_l == state.l:
        new_c = state.c + 1
    elif new_l == msg.l:
        new_c = msg.c + 1
    else:
        new_c = 0
    _check_counter(new_c, cfg)
    state.l, state.c = new_l, new_c
    return HlcTimestamp(new_l, new_c)


def hlc_compare(a: HlcTimestamp, b: HlcTimestamp) -> int:
    """Lexicographic comparison; returns -1, 0 or 1."""
    if a < b:
        return -1
    if a > b:
        return 1
    return 0


def hlc_extend(t: HlcTimestamp, gamma: int, cfg: ClockConfig) -> HlcTimestamp:
    """Largest timestamp any process may reach within ``gamma`` ticks of ``t``.

    Adds ``gamma`` to the ``l`` part and saturates the counter, so the
    result upper-bounds every timestamp whose ``l`` is within ``gamma``
    of ``t.l``. With ``gamma == 0`` only the counter is saturated.
    """
    if gamma < 0:
        raise ValueError("extension must be non-negative")
    return HlcTimestamp(t.l + gamma, cfg.c_max)


def successor(t: HlcTimestamp, cfg: ClockConfig) -> HlcTimestamp:
    """Smallest timestamp strictly greater than ``t``."""
    if t.c < cfg.c_max:
        return HlcTimestamp(t.l, t.c + 1)
    return HlcTimestamp(t.l + 1, 0)


@dataclass(frozen=True, slots=True)
class HvcTimestamp:
    """Vector of per-process ``l`` knowledge plus the owner's full timestamp.

    ``entries[j]`` is the latest ``l`` value of process j that the owner
    has learned of. The owner's own entry always equals ``own_hlc.l``.
    """

    proc: int
    entries: tuple[int, ...]
    own_hlc: HlcTimestamp


def hvc_merge(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
    """Componentwise maximum of two knowledge vectors."""
    if len(a) != len(b):
        raise ValueError("vector lengths differ")
    return tuple(max(x, y) for x, y in zip(a, b))


@dataclass
class HvcState:
    """Mutable vector-clock state of a single process."""

    proc: int
    n: int
    hlc: HlcState = field(default_factory=HlcState)
    entries: list[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not 0 <= self.proc < self.n:
            raise ValueError(f"process id {self.proc} out of range for n={self.n}")
        if not self.entries:
            self.entries = [0] * self.n

    def timestamp(self) -> HvcTimestamp:
        return HvcTimestamp(self.proc, tuple(self.entries), self.hlc.timestamp())


def hvc_update(
    state: HvcState,
    pt: int,
    cfg: ClockConfig,
    msg: HvcTimestamp | None = None,
) -> HvcTimestamp:
    """Advance ``state`` for one event and return the new vector timestamp.

    Without ``msg`` this is a local or send event. With ``msg`` it is a
    receive: the knowledge vectors merge componentwise and the owner's
    scalar clock advances by the receive rule.
    """
    if msg is None:
        hlc_local(state.hlc, pt, cfg)
    else:
        if len(msg.entries) != state.n:
            raise ValueError("message vector length does not match system size")
        state.entries = list(hvc_merge(tuple(state.entries), msg.entries))
        hlc_recv(state.hlc, pt, msg.own_hlc, cfg)
    state.entries[state.proc] = state.hlc.l
    return state.timestamp()
