"""Per-window exact checking.

A window ``k`` spans physical times ``[k*w, (k+1)*w + epsilon]`` in the
``l`` component. The checker builds one constraint system per window:
every process picks a timestamp inside the span, all picks stay within
``epsilon`` of each other, variable values follow from where each pick
lands relative to that process's assignment history, any message
received at or before a pick must have been sent strictly before the
sender's pick, and the predicate must hold on the implied values.

The solver is exact and deterministic. Each process's span is cut at
every relevant threshold (valuation changes, message bounds) into
pieces on which all atoms are constant, and a fail-first depth-first
search over piece tuples finds a satisfiable one, from which a concrete
witness is reconstructed. The same system can be emitted as SMT-LIB
for cross-checking with an external solver.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field

from .clock import ClockConfig, HlcTimestamp, successor
from .monitor import (
    Conjunctive,
    LessThan,
    Predicate,
    SumGreater,
    SumLess,
    UnsupportedPredicateError,
)
from .trace import Interval, Trace, value_tiling


@dataclass(frozen=True, slots=True)
class ValuationPiece:
    """Within ``[start, end)`` process ``proc`` has ``var == value``."""

    proc: int
    var: str
    value: bool | int
    start: HlcTimestamp
    end: HlcTimestamp


@dataclass(frozen=True, slots=True)
class MessageConstraint:
    msg_id: int
    sender: int
    send_ts: HlcTimestamp
    receiver: int
    recv_ts: HlcTimestamp


@dataclass
class ConstraintSet:
    n: int
    epsilon: int
    c_max: int
    lo_l: int
    hi_l: int
    predicate: Predicate
    valuations: list[ValuationPiece] = field(default_factory=list)
    messages: list[MessageConstraint] = field(default_factory=list)
    window_index: int | None = None


@dataclass(frozen=True)
class WitnessModel:
    """Satisfying assignment: one timestamp per process plus the
    variable values in force at those timestamps."""

    window_index: int | None
    times: tuple[HlcTimestamp, ...]
    values: tuple[tuple[int, str, int], ...]


def relevant_pairs(predicate: Predicate, n: int) -> list[tuple[int, str]]:
    if isinstance(predicate, (Conjunctive, SumGreater, SumLess)):
        return [(i, predicate.var) for i in range(n)]
    if isinstance(predicate, LessThan):
        pairs = [tuple(predicate.left), tuple(predicate.right)]
        return sorted(set((int(p), str(v)) for p, v in pairs))
    raise UnsupportedPredicateError(f"unsupported predicate {predicate!r}")


class WindowContext:
    """Shared per-trace indexes so extraction is one-time work.

    Builds valuation tilings and sorted message tables once, then
    answers per-window slices by binary search.
    """

    def __init__(
        self,
        trace: Trace,
        predicate: Predicate,
        *,
        epsilon: int | None = None,
        window: int | None = None,
    ) -> None:
        self.n = trace.n
        self.epsilon = trace.epsilon if epsilon is None else epsilon
        self.window = self.epsilon if window is None else window
        self.c_max = trace.c_max
        self.predicate = predicate
        self.total_windows = trace.max_l() // self.window + 1
        self._tilings: dict[tuple[int, str], list[Interval]] = {}
        pairs = relevant_pairs(predicate, self.n)
        default = False if isinstance(predicate, Conjunctive) else 0
        for var in sorted(set(v for _, v in pairs)):
            tiling = value_tiling(trace, var, default=default)
            for proc, pvar in pairs:
                if pvar == var:
                    self._tilings[(proc, var)] = tiling[proc]
        msgs = sorted(trace.messages(), key=lambda m: m.msg_id)
        self._msgs = msgs
        self._send_order = sorted(range(len(msgs)), key=lambda i: msgs[i].send_ts.l)
        self._send_keys = [msgs[i].send_ts.l for i in self._send_order]
        self._recv_order = sorted(range(len(msgs)), key=lambda i: msgs[i].recv_ts.l)
        self._recv_keys = [msgs[i].recv_ts.l for i in self._recv_order]

    def span(self, window_index: int) -> tuple[int, int]:
        lo = window_index * self.window
        return lo, lo + self.window + self.epsilon

    def constraints(self, window_index: int) -> ConstraintSet:
        lo_l, hi_l = self.span(window_index)
        lo_pt = HlcTimestamp(lo_l, 0)
        top = HlcTimestamp(hi_l + 1, 0)
        vals: list[ValuationPiece] = []
        for (proc, var), tiling in sorted(self._tilings.items()):
            for iv in _slice_tiling(tiling, lo_pt, top):
                vals.append(ValuationPiece(proc, var, iv.value, iv.start, iv.end))
        picked: dict[int, MessageConstraint] = {}
        for keys, order in (
            (self._send_keys, self._send_order),
            (self._recv_keys, self._recv_order),
        ):
            for pos in range(bisect_left(keys, lo_l), bisect_right(keys, hi_l)):
                m = self._msgs[order[pos]]
                picked[m.msg_id] = MessageConstraint(
                    m.msg_id, m.sender, m.send_ts, m.receiver, m.recv_ts
                )
        return ConstraintSet(
            n=self.n,
            epsilon=self.epsilon,
            c_max=self.c_max,
            lo_l=lo_l,
            hi_l=hi_l,
            predicate=self.predicate,
            valuations=vals,
            messages=[picked[k] for k in sorted(picked)],
            window_index=window_index,
        )


def _slice_tiling(
    tiling: list[Interval], lo_pt: HlcTimestamp, top: HlcTimestamp
) -> list[Interval]:
    out: list[Interval] = []
    for iv in tiling:
        if iv.start >= top:
            break
        if iv.end is not None and iv.end <= lo_pt:
            continue
        start = iv.start if iv.start > lo_pt else lo_pt
        end = top if iv.end is None or iv.end > top else iv.end
        out.append(Interval(iv.proc, iv.var, iv.value, start, end))
    return out


def build_constraints(
    trace: Trace,
    window_index: int,
    predicate: Predicate,
    *,
    epsilon: int | None = None,
    window: int | None = None,
) -> ConstraintSet:
    ctx = WindowContext(trace, predicate, epsilon=epsilon, window=window)
    return ctx.constraints(window_index)


@dataclass(slots=True)
class _Piece:
    start: HlcTimestamp
    end: HlcTimestamp
    l_lo: int
    l_hi: int
    values: dict[str, bool | int]


def _build_pieces(cs: ConstraintSet) -> list[list[_Piece]]:
    lo_pt = HlcTimestamp(cs.lo_l, 0)
    top = HlcTimestamp(cs.hi_l + 1, 0)
    cfg = ClockConfig(c_max=cs.c_max)
    cuts: list[set[HlcTimestamp]] = [{lo_pt} for _ in range(cs.n)]
    for vp in cs.valuations:
        if lo_pt < vp.start < top:
            cuts[vp.proc].add(vp.start)
    for m in cs.messages:
        if lo_pt < m.recv_ts < top:
            cuts[m.receiver].add(m.recv_ts)
        sb = successor(m.send_ts, cfg)
        if lo_pt < sb < top:
            cuts[m.sender].add(sb)
    vals_by_proc: list[list[ValuationPiece]] = [[] for _ in range(cs.n)]
    for vp in cs.valuations:
        vals_by_proc[vp.proc].append(vp)
    pieces: list[list[_Piece]] = []
    for p in range(cs.n):
        bounds = sorted(cuts[p]) + [top]
        made: list[_Piece] = []
        for a, b in zip(bounds, bounds[1:]):
            l_hi = b.l if b.c > 0 else b.l - 1
            values: dict[str, bool | int] = {}
            for vp in vals_by_proc[p]:
                if vp.start <= a and a < vp.end:
                    values[vp.var] = vp.value
            made.append(_Piece(a, b, a.l, l_hi, values))
        pieces.append(made)
    return pieces


def _piece_index(pieces: list[_Piece], bound: HlcTimestamp) -> int:
    """First piece whose every point satisfies ``t >= bound``.

    ``bound`` is either at or below the window, beyond it, or one of
    the cut points, so no piece straddles it.
    """
    lo = 0
    hi = len(pieces)
    while lo < hi:
        mid = (lo + hi) // 2
        if pieces[mid].start >= bound:
            hi = mid
        else:
            lo = mid + 1
    return lo


def solve(cs: ConstraintSet) -> WitnessModel | None:
    """Exact satisfiability of one window, witness or ``None``.

    Search explores piece tuples depth-first with pieces ascending per
    process; processes that can actually move the predicate are
    searched first so the value prune cuts the rest of the tree as
    soon as their choices are fixed. The concrete witness takes the
    least timestamps inside the found pieces consistent with the skew
    bound.
    """
    n = cs.n
    eps = cs.epsilon
    pred = cs.predicate
    pieces = _build_pieces(cs)

    if isinstance(pred, Conjunctive):
        def holds(pc: _Piece) -> bool:
            got = pc.values.get(pred.var)
            return got is not None and int(got) == 1

        pieces = [[pc for pc in row if holds(pc)] for row in pieces]
        if any(not row for row in pieces):
            return None

    cfg = ClockConfig(c_max=cs.c_max)
    # message tables: (other proc, receiver side?, fire index, clear index)
    tables: list[list[tuple[int, bool, int, int]]] = [[] for _ in range(n)]
    for m in cs.messages:
        r_idx = _piece_index(pieces[m.receiver], m.recv_ts)
        if r_idx >= len(pieces[m.receiver]):
            continue
        s_idx = _piece_index(pieces[m.sender], successor(m.send_ts, cfg))
        if s_idx == 0:
            continue
        tables[m.receiver].append((m.sender, True, r_idx, s_idx))
        tables[m.sender].append((m.receiver, False, r_idx, s_idx))

    def contribution(piece: _Piece) -> int:
        if isinstance(pred, (SumGreater, SumLess)):
            return int(piece.values.get(pred.var, 0))
        return 0

    # upper bound on what each process can add to a sum, for pruning
    if isinstance(pred, SumGreater):
        per_best = [max(contribution(pc) for pc in row) for row in pieces]
        if sum(per_best) <= pred.limit:
            return None
    elif isinstance(pred, SumLess):
        per_best = [min(contribution(pc) for pc in row) for row in pieces]
        if sum(per_best) >= pred.limit:
            return None
    else:
        per_best = [0] * n

    chosen: list[int] = [0] * n
    assigned = [False] * n

    def value_of(proc: int, var: str) -> int | None:
        got = pieces[proc][chosen[proc]].values.get(var)
        return None if got is None else int(got)

    def pair_violates(p: int, piece: _Piece) -> bool:
        if not isinstance(pred, LessThan):
            return False
        lp, lv = pred.left
        rp, rv = pred.right
        if p == lp == rp:
            a, b = piece.values.get(lv), piece.values.get(rv)
        elif p == lp and assigned[rp]:
            a, b = piece.values.get(lv), value_of(rp, rv)
        elif p == rp and assigned[lp]:
            a, b = value_of(lp, lv), piece.values.get(rv)
        else:
            return False
        return a is None or b is None or not int(a) < int(b)

    def feasible(p: int, min_hi: int, max_lo: int, partial: int, rest: int) -> list[int]:
        """Piece indices of ``p`` open under the current box, messages to
        already-placed processes, and the value bound."""
        out: list[int] = []
        for k, piece in enumerate(pieces[p]):
            if piece.l_lo > min_hi + eps:
                break
            if max_lo > piece.l_hi + eps:
                continue
            if isinstance(pred, SumGreater):
                if partial + contribution(piece) + rest <= pred.limit:
                    continue
            elif isinstance(pred, SumLess):
                if partial + contribution(piece) + rest >= pred.limit:
                    continue
            elif pair_violates(p, piece):
                continue
            blocked = False
            for other, here_receives, r_idx, s_idx in tables[p]:
                if not assigned[other]:
                    continue
                if here_receives:
                    if k >= r_idx and chosen[other] < s_idx:
                        blocked = True
                        break
                elif chosen[other] >= r_idx and k < s_idx:
                    blocked = True
                    break
            if not blocked:
                out.append(k)
        return out

    def dfs(depth: int, min_hi: int, max_lo: int, partial: int, remaining: int) -> bool:
        if depth == n:
            if isinstance(pred, SumGreater):
                return partial > pred.limit
            if isinstance(pred, SumLess):
                return partial < pred.limit
            return True
        # fail-first: place the process with the fewest open pieces next,
        # so a dead end surfaces beside the choices that caused it
        best_p = -1
        best: list[int] = []
        for p in range(n):
            if assigned[p]:
                continue
            cand = feasible(p, min_hi, max_lo, partial, remaining - per_best[p])
            if not cand:
                return False
            if best_p < 0 or len(cand) < len(best):
                best_p, best = p, cand
        p = best_p
        assigned[p] = True
        for k in best:
            chosen[p] = k
            piece = pieces[p][k]
            if dfs(
                depth + 1,
                min(min_hi, piece.l_hi),
                max(max_lo, piece.l_lo),
                partial + contribution(piece),
                remaining - per_best[p],
            ):
                return True
        assigned[p] = False
        return False

    if not dfs(0, cs.hi_l, cs.lo_l, 0, sum(per_best)):
        return None

    picked = [pieces[p][chosen[p]] for p in range(n)]
    frontier = max(pc.l_lo for pc in picked)
    times: list[HlcTimestamp] = []
    for pc in picked:
        l = max(pc.l_lo, frontier - eps)
        c = pc.start.c if l == pc.start.l else 0
        times.append(HlcTimestamp(l, c))
    values: list[tuple[int, str, int]] = []
    for proc, var in relevant_pairs(pred, n):
        got = picked[proc].values.get(var)
        if got is not None:
            values.append((proc, var, int(got)))
    return WitnessModel(cs.window_index, tuple(times), tuple(values))


def _smt_ge(p: int, t: HlcTimestamp) -> str:
    return (
        f"(or (> l_{p} {t.l}) (and (= l_{p} {t.l}) (>= c_{p} {t.c})))"
    )


def _smt_gt(p: int, t: HlcTimestamp) -> str:
    return f"(or (> l_{p} {t.l}) (and (= l_{p} {t.l}) (> c_{p} {t.c})))"


def _smt_lt(p: int, t: HlcTimestamp) -> str:
    return f"(or (< l_{p} {t.l}) (and (= l_{p} {t.l}) (< c_{p} {t.c})))"


def emit_smtlib(cs: ConstraintSet) -> str:
    """Render one window's constraint system as QF_LIA SMT-LIB text."""
    out: list[str] = []
    put = out.append
    put("(set-logic QF_LIA)")
    tag = "" if cs.window_index is None else f" index {cs.window_index}"
    put(f"; window{tag} span [{cs.lo_l}, {cs.hi_l}] skew {cs.epsilon}")
    pairs = relevant_pairs(cs.predicate, cs.n)
    for p in range(cs.n):
        put(f"(declare-fun l_{p} () Int)")
        put(f"(declare-fun c_{p} () Int)")
    for proc, var in pairs:
        put(f"(declare-fun x_{proc}_{var} () Int)")
    put("; skew")
    for i in range(cs.n):
        for j in range(i + 1, cs.n):
            put(
                f"(assert (and (<= (- l_{i} l_{j}) {cs.epsilon})"
                f" (<= (- l_{j} l_{i}) {cs.epsilon})))"
            )
    put("; span")
    for p in range(cs.n):
        put(f"(assert (and (>= l_{p} {cs.lo_l}) (<= l_{p} {cs.hi_l})))")
        put(f"(assert (and (>= c_{p} 0) (<= c_{p} {cs.c_max})))")
    put("; valuations")
    bool_vars = sorted(
        set(
            (vp.proc, vp.var)
            for vp in cs.valuations
            if isinstance(vp.value, bool)
        )
    )
    for proc, var in bool_vars:
        put(f"(assert (and (>= x_{proc}_{var} 0) (<= x_{proc}_{var} 1)))")
    for vp in cs.valuations:
        guard = f"(and {_smt_ge(vp.proc, vp.start)} {_smt_lt(vp.proc, vp.end)})"
        put(f"(assert (=> {guard} (= x_{vp.proc}_{vp.var} {int(vp.value)})))")
    put("; messages")
    for m in cs.messages:
        fire = _smt_ge(m.receiver, m.recv_ts)
        clear = _smt_gt(m.sender, m.send_ts)
        put(f"(assert (=> {fire} {clear}))")
    put("; predicate")
    pred = cs.predicate
    if isinstance(pred, Conjunctive):
        terms = " ".join(f"(= x_{i}_{pred.var} 1)" for i in range(cs.n))
        put(f"(assert (and {terms}))" if cs.n > 1 else f"(assert {terms})")
    elif isinstance(pred, (SumGreater, SumLess)):
        terms = " ".join(f"x_{i}_{pred.var}" for i in range(cs.n))
        total = f"(+ {terms})" if cs.n > 1 else terms
        op = ">" if isinstance(pred, SumGreater) else "<"
        put(f"(assert ({op} {total} {pred.limit}))")
    elif isinstance(pred, LessThan):
        lp, lv = pred.left
        rp, rv = pred.right
        put(f"(assert (< x_{lp}_{lv} x_{rp}_{rv}))")
    else:
        raise UnsupportedPredicateError(f"unsupported predicate {pred!r}")
    put("(check-sat)")
    put("(get-model)")
    return "\n".join(out) + "\n"
