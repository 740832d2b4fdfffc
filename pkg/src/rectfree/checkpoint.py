"""Atomic checkpoints and the append-only row log.

A checkpoint captures a generator between rows — the only states the
public API can observe, so a mid-row snapshot cannot even be requested —
together with the cycle detector's cursor (tagged by algorithm), the
running content hash of all rows emitted so far, and the byte offset the
row log had reached.  Loading a checkpoint and generating ``t`` further
rows is bit-identical to never having stopped.

File layout (all integers little-endian):

* an 8-byte header: the 6-byte magic ``RFCKPT`` plus a 2-byte format
  version;
* a sequence of records, each an 8-byte length followed by that many
  payload bytes — core integers, the running row hash, the live rows,
  the column weights, the detector tag, the detector payload;
* a trailing 8-byte checksum: the low 8 bytes of SHA-256 over the header
  and records.

Writes go to a temporary file in the destination directory which is
fsynced and atomically renamed over the target, so a crash at any
instant leaves either the previous or the new checkpoint fully intact.

The row log is a separate append-only text file of ``k<TAB>j1,j2,...``
lines.  Its integrity is tracked by a chain hash: starting from 32 zero
bytes, each emitted line (with its newline) is absorbed as
``sha256(previous_digest + line_bytes)``.  A checkpoint stores the chain
value and the log byte offset it corresponds to, so a resume can verify
the prefix it relies on and discard any torn tail beyond it.

Fingerprint terms inside a detector snapshot use the interpreter's
(stable) integer-tuple hash; a checkpoint read under an interpreter with
a different tuple hash still resumes correctly — stored fingerprints
simply stop matching, which can only delay recurrence detection, never
corrupt it, because every candidate period is verified bit-exactly.
"""
from __future__ import annotations

import hashlib
import os
import struct
from dataclasses import dataclass

from .errors import (CorruptCheckpointError, InvalidParameterError,
                     VersionMismatchError)
from .generator import GeneratorState, format_row_line, parse_row_line
from .period import DetectorSnapshot, ResumeState

MAGIC = b"RFCKPT"
FORMAT_VERSION = 1

#: Chain-hash seed for an empty row log.
EMPTY_ROW_HASH = b"\x00" * 32

#: Detector tags understood by this format version.
DETECTOR_NONE = "none"
DETECTOR_WINDOWED = "windowed-v1"

_Q = struct.Struct("<Q")   # unsigned 64-bit
_SQ = struct.Struct("<q")  # signed 64-bit
_I = struct.Struct("<I")   # unsigned 32-bit
_HDR = struct.Struct("<6sH")


def chain_row_hash(digest: bytes, index: int, ones) -> bytes:
    """Absorb one emitted row into the running row-log chain hash."""
    line = format_row_line(index, tuple(ones)) + "\n"
    return hashlib.sha256(digest + line.encode("ascii")).digest()


@dataclass(frozen=True)
class Checkpoint:
    """Point-in-time image of a run, written and read atomically."""

    n: int
    next_k: int
    frontier_l: int
    rows_emitted: int
    live_rows: tuple[tuple[int, tuple[int, ...]], ...]
    col_weights: tuple[tuple[int, int], ...]
    row_hash: bytes          # 32-byte chain over all emitted log lines
    log_offset: int          # row-log bytes covered by row_hash
    detector_tag: str
    detector: DetectorSnapshot | None
    format_version: int = FORMAT_VERSION

    @classmethod
    def capture(cls, state: GeneratorState, *, row_hash: bytes,
                log_offset: int,
                detector: DetectorSnapshot | None = None) -> "Checkpoint":
        """Snapshot a square-construction cursor between rows."""
        if state.params is None:
            raise InvalidParameterError(
                "only the square construction is checkpointable")
        if len(row_hash) != 32:
            raise InvalidParameterError("row_hash must be a 32-byte digest")
        if log_offset < 0:
            raise InvalidParameterError("log_offset must be >= 0")
        return cls(
            n=state.params.n,
            next_k=state.next_k,
            frontier_l=state.frontier_l,
            rows_emitted=state.rows_emitted,
            live_rows=tuple((i, ones) for i, ones in state._live),
            col_weights=tuple(sorted(state.col_weight.items())),
            row_hash=bytes(row_hash),
            log_offset=log_offset,
            detector_tag=(DETECTOR_NONE if detector is None
                          else DETECTOR_WINDOWED),
            detector=detector,
        )

    def restore_generator(self) -> GeneratorState:
        """Rebuild the generator; resumes bit-identically."""
        try:
            state = GeneratorState.from_snapshot(
                n=self.n, next_k=self.next_k, frontier_l=self.frontier_l,
                rows_emitted=self.rows_emitted, live_rows=self.live_rows)
        except InvalidParameterError as exc:
            raise CorruptCheckpointError(
                f"checkpoint state is not reachable: {exc}") from exc
        if tuple(sorted(state.col_weight.items())) != self.col_weights:
            raise CorruptCheckpointError(
                "stored column weights disagree with the live rows")
        return state

    def restore_resume(self) -> ResumeState:
        """Rebuild the period-detection cursor pair."""
        if self.detector is None:
            raise InvalidParameterError(
                "checkpoint carries no detector state")
        return ResumeState(generator=self.restore_generator(),
                           detector=self.detector)


# -- record encoding --------------------------------------------------------

def _enc_ints(*values: int) -> bytes:
    return b"".join(_Q.pack(v) for v in values)

def _enc_offsets(offsets) -> bytes:
    return _I.pack(len(offsets)) + b"".join(_SQ.pack(o) for o in offsets)


def _encode(cp: Checkpoint) -> list[bytes]:
    core = _enc_ints(cp.n, cp.next_k, cp.frontier_l, cp.rows_emitted,
                     cp.log_offset)
    live = [_Q.pack(len(cp.live_rows))]
    for i, ones in cp.live_rows:
        live.append(_Q.pack(i))
        live.append(_enc_offsets(ones))
    weights = [_Q.pack(len(cp.col_weights))]
    for c, w in cp.col_weights:
        weights.append(_Q.pack(c))
        weights.append(_I.pack(w))
    tag = cp.detector_tag.encode("utf-8")
    det: list[bytes] = []
    if cp.detector is not None:
        snap = cp.detector
        det.append(_enc_ints(snap.window, snap.ring_first, len(snap.ring)))
        for enc in snap.ring:
            det.append(_enc_offsets(enc))
        det.append(_Q.pack(len(snap.entries)))
        for poly, d, koff, k, l in snap.entries:
            det.append(_Q.pack(poly) + _Q.pack(d) + _SQ.pack(koff) +
                       _Q.pack(k) + _Q.pack(l))
        if snap.candidate is None:
            det.append(_Q.pack(0))
        else:
            k0, p = snap.candidate
            det.append(_Q.pack(1) + _Q.pack(k0) + _Q.pack(p))
    return [core, cp.row_hash, b"".join(live), b"".join(weights), tag,
            b"".join(det)]


class _Reader:
    """Strict cursor over one record's payload."""

    __slots__ = ("buf", "pos")

    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, size: int) -> bytes:
        end = self.pos + size
        if size < 0 or end > len(self.buf):
            raise CorruptCheckpointError("record payload truncated")
        chunk = self.buf[self.pos:end]
        self.pos = end
        return chunk

    def u64(self) -> int:
        return _Q.unpack(self.take(8))[0]

    def s64(self) -> int:
        return _SQ.unpack(self.take(8))[0]

    def u32(self) -> int:
        return _I.unpack(self.take(4))[0]

    def offsets(self) -> tuple[int, ...]:
        count = self.u32()
        return tuple(self.s64() for _ in range(count))

    def done(self) -> None:
        if self.pos != len(self.buf):
            raise CorruptCheckpointError(
                f"{len(self.buf) - self.pos} stray bytes in a record")


def _decode(records: list[bytes]) -> Checkpoint:
    if len(records) != 6:
        raise CorruptCheckpointError(
            f"expected 6 records, found {len(records)}")
    core = _Reader(records[0])
    n, next_k, frontier_l, rows_emitted, log_offset = (
        core.u64(), core.u64(), core.u64(), core.u64(), core.u64())
    core.done()
    row_hash = records[1]
    if len(row_hash) != 32:
        raise CorruptCheckpointError("row hash record must be 32 bytes")
    live_r = _Reader(records[2])
    live = tuple((live_r.u64(), live_r.offsets())
                 for _ in range(live_r.u64()))
    live_r.done()
    w_r = _Reader(records[3])
    weights = tuple((w_r.u64(), w_r.u32()) for _ in range(w_r.u64()))
    w_r.done()
    try:
        tag = records[4].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CorruptCheckpointError("detector tag is not UTF-8") from exc
    detector: DetectorSnapshot | None = None
    if tag == DETECTOR_NONE:
        if records[5]:
            raise CorruptCheckpointError(
                "detector payload present without a detector tag")
    elif tag == DETECTOR_WINDOWED:
        d_r = _Reader(records[5])
        window, ring_first, ring_len = d_r.u64(), d_r.u64(), d_r.u64()
        ring = tuple(d_r.offsets() for _ in range(ring_len))
        entries = tuple(
            (d_r.u64(), d_r.u64(), d_r.s64(), d_r.u64(), d_r.u64())
            for _ in range(d_r.u64()))
        cand_flag = d_r.u64()
        if cand_flag == 0:
            candidate = None
        elif cand_flag == 1:
            candidate = (d_r.u64(), d_r.u64())
        else:
            raise CorruptCheckpointError(
                f"detector candidate flag must be 0 or 1, got {cand_flag}")
        d_r.done()
        detector = DetectorSnapshot(window=window, ring_first=ring_first,
                                    ring=ring, entries=entries,
                                    candidate=candidate)
    else:
        raise CorruptCheckpointError(f"unknown detector tag {tag!r}")
    return Checkpoint(n=n, next_k=next_k, frontier_l=frontier_l,
                      rows_emitted=rows_emitted, live_rows=live,
                      col_weights=weights, row_hash=row_hash,
                      log_offset=log_offset, detector_tag=tag,
                      detector=detector)


# -- file I/O ----------------------------------------------------------------

def save_checkpoint(checkpoint: Checkpoint, destination) -> int:
    """Atomically write ``checkpoint``; returns the byte count written.

    The temporary file lives in the destination directory and is fsynced
    before being renamed over the target, so an interrupted save leaves
    any previous checkpoint untouched.
    """
    destination = os.fspath(destination)
    body = bytearray(_HDR.pack(MAGIC, FORMAT_VERSION))
    for record in _encode(checkpoint):
        body += _Q.pack(len(record))
        body += record
    body += hashlib.sha256(body).digest()[:8]
    directory = os.path.dirname(destination) or "."
    tmp = os.path.join(directory,
                       f".{os.path.basename(destination)}.{os.getpid()}.tmp")
    try:
        fd = os.open(tmp, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o644)
        try:
            view = memoryview(body)
            while view:
                view = view[os.write(fd, view):]
            os.fsync(fd)
        finally:
            os.close(fd)
        os.replace(tmp, destination)
    except OSError:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
    try:
        dir_fd = os.open(directory, os.O_RDONLY)
        try:
            os.fsync(dir_fd)
        finally:
            os.close(dir_fd)
    except OSError:
        pass  # the directory entry will still reach disk eventually
    return len(body)


def load_checkpoint(source) -> Checkpoint:
    """Read and validate a checkpoint file.

    Raises :class:`CorruptCheckpointError` on any truncation, checksum
    mismatch or structural damage, and :class:`VersionMismatchError`
    when the file announces a format version this code does not speak —
    never a silent reinterpretation.
    """
    with open(os.fspath(source), "rb") as fh:
        data = fh.read()
    if len(data) < _HDR.size + 8:
        raise CorruptCheckpointError(
            f"file is {len(data)} bytes, shorter than any checkpoint")
    magic, version = _HDR.unpack_from(data, 0)
    if magic != MAGIC:
        raise CorruptCheckpointError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(
            f"checkpoint format version {version} is not supported "
            f"(this build reads version {FORMAT_VERSION})")
    body, checksum = data[:-8], data[-8:]
    if hashlib.sha256(body).digest()[:8] != checksum:
        raise CorruptCheckpointError("checksum mismatch")
    records: list[bytes] = []
    pos = _HDR.size
    end = len(body)
    while pos < end:
        if pos + 8 > end:
            raise CorruptCheckpointError("record length field truncated")
        (length,) = _Q.unpack_from(body, pos)
        pos += 8
        if pos + length > end:
            raise CorruptCheckpointError("record payload truncated")
        records.append(body[pos:pos + length])
        pos += length
    return _decode(records)


# -- the row log -------------------------------------------------------------

class RowLog:
    """Append-only row log bound to a running chain hash.

    Opened either fresh (``offset=0``) or at a checkpoint's
    ``(offset, row_hash)``; in both cases the file is truncated to the
    offset, discarding any torn tail beyond the last state the paired
    checkpoint vouches for, after the retained prefix has been verified
    against the expected chain value.
    """

    def __init__(self, path, *, offset: int = 0,
                 row_hash: bytes = EMPTY_ROW_HASH):
        if offset and len(row_hash) != 32:
            raise InvalidParameterError("row_hash must be a 32-byte digest")
        self.path = os.fspath(path)
        self._fh = open(self.path, "a+b")
        try:
            if offset:
                actual, _rows = _scan_log(self._fh, offset)
                if actual != row_hash:
                    raise CorruptCheckpointError(
                        f"row log {self.path} does not reproduce the "
                        f"checkpointed chain hash at offset {offset}")
            self._fh.truncate(offset)
            self._fh.seek(0, os.SEEK_END)
        except BaseException:
            self._fh.close()
            raise
        self.offset = offset
        self.row_hash = bytes(row_hash) if offset else EMPTY_ROW_HASH

    def append(self, index: int, ones) -> None:
        line = (format_row_line(index, tuple(ones)) + "\n").encode("ascii")
        self._fh.write(line)
        self.row_hash = hashlib.sha256(self.row_hash + line).digest()
        self.offset += len(line)

    def sync(self) -> None:
        """Flush buffers and fsync, making the log durable."""
        self._fh.flush()
        os.fsync(self._fh.fileno())

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "RowLog":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def _scan_log(fh, upto: int) -> tuple[bytes, int]:
    """Chain-hash the first ``upto`` bytes; returns (digest, line count)."""
    fh.seek(0)
    digest = EMPTY_ROW_HASH
    consumed = 0
    rows = 0
    for line in fh:
        if consumed == upto:
            break
        consumed += len(line)
        if consumed > upto or not line.endswith(b"\n"):
            raise CorruptCheckpointError(
                f"row-log offset {upto} does not fall on a line boundary")
        digest = hashlib.sha256(digest + line).digest()
        rows += 1
    if consumed < upto:
        raise CorruptCheckpointError(
            f"row log holds {consumed} bytes, checkpoint expects {upto}")
    return digest, rows


def log_prefix_hash(path, offset: int) -> bytes:
    """Recompute the chain hash of a row log's first ``offset`` bytes."""
    with open(os.fspath(path), "rb") as fh:
        digest, _rows = _scan_log(fh, offset)
    return digest


def iter_row_log(path, *, upto_offset: int | None = None):
    """Yield :class:`SparseRow` values from a row log, in file order."""
    consumed = 0
    with open(os.fspath(path), "rb") as fh:
        for raw in fh:
            if upto_offset is not None:
                consumed += len(raw)
                if consumed > upto_offset:
                    return
            if not raw.endswith(b"\n"):
                return  # torn final line: not vouched for by anyone
            try:
                text = raw.decode("ascii")
            except UnicodeDecodeError as exc:
                raise InvalidParameterError(
                    f"row log {path!s} is not ASCII") from exc
            yield parse_row_line(text)
