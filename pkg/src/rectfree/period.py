"""Period and preperiod detection for the streaming construction.

The state about to build row k — the live rows cropped at the frontier
column, plus the frontier's offset from the diagonal — determines every
later row.  The detector fingerprints that window per row in a
translation-invariant way (one-positions encoded as offsets from the
diagonal, combined by a rolling polynomial hash) and keeps fingerprints
of the most recent ``window`` rows, so the first recurrence of a state
is found in a single pass whenever the cycle length fits in the window.

Fingerprint hits are never trusted.  A candidate period p found at rows
(k0, k0+p) is verified bit-exactly:

* the frontier column must satisfy l(k0+p) = l(k0) + p, and
* the row-shift identity ones(row i+p) = ones(row i) + p must hold for
  p + sigma consecutive rows from k0 — enough that the identity then
  sustains itself forever, because every later window consists of rows
  already known to repeat.

The preperiod is minimized afterwards with an independent second cursor
from row 1 (tracking the last row-shift mismatch), and minimality of p
is confirmed against every proper divisor over one full period window.

Special case: when the frontier column of the state about to build row
k has no ones at all, the construction restarts from scratch shifted by
k-1, so pp = 0 and p = k-1 immediately (``case1`` in the result).
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .errors import (BudgetExhaustedError, InvalidParameterError,
                     InvariantViolationError)
from .generator import GeneratorState, new_generator

#: Default number of recent states kept for recurrence detection.  A
#: cycle is only detectable while it fits in the window; raise via the
#: ``window`` argument to hunt for longer periods at more memory.
DEFAULT_WINDOW = 1 << 17

_MOD = (1 << 61) - 1
_B = 0x2545F4914F6CDD1D % _MOD
_BINV = pow(_B, _MOD - 2, _MOD)


@dataclass(frozen=True)
class DefiningMatrix:
    """The cropped window that determines all rows from ``anchor_k`` on.

    ``bits`` is the d x b 0-1 window in sparse form: one tuple per window
    row, holding 0-based column offsets from the window's left edge.
    Equality and hashing use (d, b, bits) only; the anchors record where
    the window was cut out and never influence comparison.
    """

    d: int
    b: int
    bits: tuple[tuple[int, ...], ...]
    anchor_k: int = field(compare=False)
    anchor_l: int = field(compare=False)

    @property
    def is_empty(self) -> bool:
        """True when the frontier column holds no ones (restart state)."""
        return self.d == 0


def defining_matrix(state: GeneratorState) -> DefiningMatrix:
    """Window of ``state`` about to build row ``state.next_k``.

    Requires at least one emitted row.  When the frontier column has no
    ones the window is empty (d = b = 0) — the construction restarts.
    """
    if state.rows_emitted < 1:
        raise InvalidParameterError("defining_matrix needs >= 1 emitted row")
    k = state.next_k
    l = state.frontier_l
    if l not in state._colw:
        return DefiningMatrix(0, 0, (), anchor_k=k, anchor_l=l)
    live = list(state._live)
    f = live[0][0]
    c = max(r[-1] for _, r in live)
    if not (k - f < state.max_len + 1 and c - l < state.max_len + 1):
        raise InvariantViolationError("window exceeds the length bound")
    by_index = {i: ones for i, ones in live}
    bits = tuple(
        tuple(j - l for j in by_index.get(i, ()) if j >= l)
        for i in range(f, k)
    )
    return DefiningMatrix(k - f, c - l + 1, bits, anchor_k=k, anchor_l=l)


@dataclass(frozen=True)
class PeriodResult:
    """Verified minimal period/preperiod and fold-relevant measurements.

    ``b_breadth`` is the largest |column - row| over ones in rows
    (pp, pp+p]; ``l_max`` the largest row length there.  ``case1`` marks
    the restart shortcut.  ``rows_examined`` counts rows generated by
    the detection cursor (the preperiod-minimization pass may generate
    up to the same amount again and is not counted).
    """

    n: int
    pp: int
    p: int
    b_breadth: int
    l_max: int
    case1: bool
    rows_examined: int


def minimal_fold_multiplier(result: PeriodResult) -> int:
    """Smallest m with floor(p*m/2) > b_breadth and p*m >= 2*l_max."""
    m = 1
    p = result.p
    while not (p * m // 2 > result.b_breadth and p * m >= 2 * result.l_max):
        m += 1
    return m


@dataclass(frozen=True)
class DetectorSnapshot:
    """Plain-data image of the detector, for checkpointing.

    ``candidate`` preserves an in-flight verification — the ``(k0, p)``
    recurrence being checked when the budget ran out — so that resuming
    continues the bit-exact comparison instead of discarding it.  Without
    this, a run checkpointed in slices shorter than the ``2p + sigma``
    verification span would restart verification every slice and never
    confirm a period.
    """

    window: int
    ring_first: int
    ring: tuple[tuple[int, ...], ...]
    entries: tuple[tuple[int, int, int, int, int], ...]  # poly,d,koff,k,l
    candidate: tuple[int, int] | None = None  # (k0, p) mid-verification


@dataclass
class ResumeState:
    """Everything needed to continue an interrupted detection run."""

    generator: GeneratorState
    detector: DetectorSnapshot


class _Ring:
    """Rows' diagonal encodings for the last ~maxlen rows, O(1) access."""

    __slots__ = ("maxlen", "first", "buf")

    def __init__(self, maxlen: int, first: int = 1, buf=None):
        self.maxlen = maxlen
        self.first = first  # row index of buf[0]
        self.buf: list[tuple[int, ...]] = list(buf or [])

    def append(self, enc: tuple[int, ...]) -> None:
        buf = self.buf
        buf.append(enc)
        if len(buf) > self.maxlen + (self.maxlen >> 1):
            cut = len(buf) - self.maxlen
            del buf[:cut]
            self.first += cut

    def get(self, row: int) -> tuple[int, ...]:
        return self.buf[row - self.first]

    def covers(self, row: int) -> bool:
        return self.first <= row < self.first + len(self.buf)


class _Detector:
    """Rolling window-state fingerprints plus the recurrence table."""

    __slots__ = ("window", "table", "ages", "ring", "deq", "poly", "bpow")

    def __init__(self, window: int):
        self.window = window
        # fingerprint key -> (state row k, frontier l at k)
        self.table: dict[tuple[int, int, int], tuple[int, int]] = {}
        self.ages: deque[tuple[int, tuple[int, int, int]]] = deque()
        self.ring = _Ring(window + 1)
        # live-window mirror: (last one-column, hash term) per live row
        self.deq: deque[tuple[int, int]] = deque()
        self.poly = 0
        self.bpow = 0  # B^(len(deq)-1), 0 while empty

    def push_row(self, ones_last: int, enc: tuple[int, ...]) -> None:
        h = hash(enc) % _MOD
        self.ring.append(enc)
        self.poly = (self.poly * _B + h) % _MOD
        self.bpow = (self.bpow * _B) % _MOD if self.deq else 1
        self.deq.append((ones_last, h))

    def evict_to(self, frontier: int) -> None:
        deq = self.deq
        while deq and deq[0][0] < frontier:
            _, h = deq.popleft()
            self.poly = (self.poly - h * self.bpow) % _MOD
            self.bpow = (self.bpow * _BINV) % _MOD if deq else 0

    def key(self, k: int, l: int) -> tuple[int, int, int]:
        return (self.poly, len(self.deq), k - l)

    def record(self, key: tuple[int, int, int], k: int, l: int) -> None:
        self.table[key] = (k, l)
        ages = self.ages
        ages.append((k, key))
        horizon = k - self.window
        table = self.table
        while ages and ages[0][0] <= horizon:
            old_k, old_key = ages.popleft()
            hit = table.get(old_key)
            if hit is not None and hit[0] == old_k:
                del table[old_key]

    def snapshot(self, candidate: tuple[int, int] | None = None
                 ) -> DetectorSnapshot:
        return DetectorSnapshot(
            window=self.window,
            ring_first=self.ring.first,
            ring=tuple(self.ring.buf),
            entries=tuple((key[0], key[1], key[2], k, l)
                          for key, (k, l) in self.table.items()),
            candidate=candidate,
        )

    @classmethod
    def restore(cls, snap: DetectorSnapshot,
                gen: GeneratorState) -> "_Detector":
        det = cls(snap.window)
        det.ring = _Ring(snap.window + 1, snap.ring_first, snap.ring)
        for poly, d, koff, k, l in sorted(snap.entries, key=lambda e: e[3]):
            det.table[(poly, d, koff)] = (k, l)
            det.ages.append((k, (poly, d, koff)))
        # Rebuild the live-window hash from the generator's live rows.
        for i, ones in gen._live:
            h = hash(tuple(j - i for j in ones)) % _MOD
            det.poly = (det.poly * _B + h) % _MOD
            det.bpow = (det.bpow * _B) % _MOD if det.deq else 1
            det.deq.append((ones[-1], h))
        return det


def _proper_divisors(p: int) -> list[int]:
    return [d for d in range(1, p) if p % d == 0]


def _measure(encs, lo: int, hi: int) -> tuple[int, int]:
    """(b_breadth, l_max) over encs[lo:hi] (diagonal offsets per row)."""
    b = lm = 0
    for enc in encs[lo:hi]:
        hib = max(abs(enc[0]), abs(enc[-1]))
        if hib > b:
            b = hib
        length = enc[-1] - enc[0] + 1
        if length > lm:
            lm = length
    return b, lm


def _minimize_p(encs, p: int) -> int:
    """Shrink p to its smallest divisor that already shifts the window."""
    while True:
        for cand in _proper_divisors(p):
            if all(encs[t] == encs[t + cand] for t in range(1, p + 1)):
                p = cand
                break
        else:
            return p


def detect_period(n: int, max_rows: int, *, window: int = DEFAULT_WINDOW,
                  resume: ResumeState | None = None, on_row=None,
                  log_sink=None) -> PeriodResult:
    """Minimal (preperiod, period) of the order-``n`` construction.

    ``max_rows`` bounds the rows generated by the detection cursor
    (resumed runs continue the count); exceeding it raises
    :class:`BudgetExhaustedError` carrying a :class:`ResumeState`.
    ``on_row(k, ones)`` is invoked for every detection-cursor row.
    ``log_sink(k, ones)`` is fed a from-scratch replay of rows
    1..pp + 2*p*m (m the minimal fold multiplier), enough to fold with
    default parameters afterwards.

    The result is exact: alignment and row-shift identities are checked
    bit-for-bit over p + sigma consecutive rows, pp is minimized by a
    second pass, and p is minimal among all divisors.
    """
    if max_rows < 1:
        raise InvalidParameterError(f"max_rows must be >= 1, got {max_rows}")
    if window < 4:
        raise InvalidParameterError(f"window must be >= 4, got {window}")
    if resume is None:
        gen = new_generator(n)
        det = _Detector(window)
    else:
        gen = resume.generator.clone()
        if gen.params is None or gen.params.n != n:
            raise InvalidParameterError("resume state is for a different order")
        det = _Detector.restore(resume.detector, gen)
    sigma = gen.params.sigma

    def advance_checked() -> tuple[int, tuple[int, ...], tuple[int, ...]]:
        if gen.rows_emitted >= max_rows:
            meta = None if candidate is None else (candidate[0], candidate[1])
            raise BudgetExhaustedError(
                f"no period confirmed within {max_rows} rows",
                resume=ResumeState(generator=gen,
                                   detector=det.snapshot(candidate=meta)),
                rows_examined=gen.rows_emitted)
        k, ones = gen._advance()
        if on_row is not None:
            on_row(k, ones)
        enc = tuple(j - k for j in ones)
        det.push_row(ones[-1], enc)
        det.evict_to(gen.frontier_l)
        return k, ones, enc

    def finish(pp: int, p: int, b: int, lm: int, case1: bool) -> PeriodResult:
        result = PeriodResult(n=n, pp=pp, p=p, b_breadth=b, l_max=lm,
                              case1=case1, rows_examined=gen.rows_emitted)
        if log_sink is not None:
            target = pp + 2 * p * minimal_fold_multiplier(result)
            replay = new_generator(n)
            for _ in range(target):
                rk, rones = replay._advance()
                log_sink(rk, rones)
        return result

    candidate = None  # (k0, p, encs, verify_until)
    if resume is not None and resume.detector.candidate is not None:
        # Rebuild an interrupted verification from the encoding ring; the
        # collected prefix is exactly the ring slice k0 .. last row.
        k0, p = resume.detector.candidate
        if p >= 1 and gen.next_k > k0 and det.ring.covers(k0):
            encs = [det.ring.get(i) for i in range(k0, gen.next_k)]
            candidate = (k0, p, encs, k0 + 2 * p + sigma)
    while True:
        k, ones, enc = advance_checked()
        state_k = gen.next_k
        frontier = gen.frontier_l

        # Restart shortcut: the frontier column has no ones at all.
        if frontier not in gen._colw:
            p = state_k - 1
            fresh = new_generator(n)
            encs = [()]  # 1-based
            for _ in range(2 * p):
                fk, fones = fresh._advance()
                encs.append(tuple(j - fk for j in fones))
            p = _minimize_p(encs, p)
            b, lm = _measure(encs, 1, p + 1)
            return finish(0, p, b, lm, True)

        if candidate is not None:
            k0, p, encs, until = candidate
            encs.append(enc)
            if state_k < until:
                continue
            # encs now covers rows k0 .. k0 + 2p + sigma - 1.
            span = p + sigma
            if all(encs[i] == encs[i + p] for i in range(span)):
                # encs[t] is row k0+t, so indices 1..p are the window
                # (k0, k0+p] that the divisor test inspects.
                p = _minimize_p(encs, p)
                b, lm = _measure(encs, 1, p + 1)
                if k0 == 1:
                    return finish(0, p, b, lm, False)
                pp = _minimize_pp(n, k0, p)
                return finish(pp, p, b, lm, False)
            candidate = None  # fingerprint collision; keep scanning
            continue

        key = det.key(state_k, frontier)
        hit = det.table.get(key)
        det.record(key, state_k, frontier)
        if hit is None:
            continue
        k0, l0 = hit
        p = state_k - k0
        if frontier != l0 + p:
            continue  # no diagonal alignment: cannot be a period
        if not det.ring.covers(k0):
            continue  # too old to verify; a later recurrence will do
        encs = [det.ring.get(i) for i in range(k0, state_k)]
        candidate = (k0, p, encs, k0 + 2 * p + sigma)


def _minimize_pp(n: int, k0: int, p: int) -> int:
    """Largest i < k0 where the row-shift identity fails (0 if none)."""
    gen = new_generator(n)
    recent: deque[tuple[int, ...]] = deque(maxlen=p)
    last_fail = 0
    limit = k0 - 1 + p
    for k in range(1, limit + 1):
        _, ones = gen._advance()
        enc = tuple(j - k for j in ones)
        if k > p and k - p < k0:
            if recent[0] != enc:
                last_fail = k - p
        recent.append(enc)
    return last_fail
