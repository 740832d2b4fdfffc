"""Command-line surface: reproducible runs of the whole pipeline.

Subcommands
-----------

``gen``
    Stream rows of the greedy construction in the row-log text format,
    resuming from a checkpoint when one is present.
``period``
    Detect the minimal preperiod/period and print a report;
    budget-exhausted runs leave a resumable checkpoint behind.
``fold``
    Detect the period, wrap the construction into a finite symmetric
    incidence matrix and emit it (sparse text or P1 bitmap).
``verify``
    Check the configuration axioms of a matrix file, optionally count
    automorphisms, compare against a reference plane, or export the
    incidence graph as DOT.
``galfs``
    List the cells of a finite matrix that would complete a rectangle.

Exit codes: 0 success, 2 usage or invalid parameters, 3 budget
exhausted, 4 verification violation (axiom failure, refused fold, or a
requested comparison answering "no"), 5 I/O or checkpoint damage.

Everything written to standard output is deterministic for a fixed
command line and input files; progress and timing lines go to standard
error only.  The environment variable ``RECTFREE_CHECKPOINT_DIR`` names
a directory used for checkpoint files when ``--checkpoint`` is not
given; without either, runs do not checkpoint.
"""
from __future__ import annotations

import argparse
import os
import sys
import time

from .checkpoint import (Checkpoint, EMPTY_ROW_HASH, RowLog, chain_row_hash,
                         iter_row_log, load_checkpoint, save_checkpoint)
from .errors import (BudgetExhaustedError, CheckpointError,
                     ConstraintViolationError, InvalidParameterError,
                     InvariantViolationError, SizeLimitError)
from .folding import FoldParams, compact_plane, fold, regenerate_rows
from .generator import compute_galfs, format_row_line, new_generator
from .matrix import parse_matrix_text
from .period import detect_period, minimal_fold_multiplier
from .verify import (Configuration, automorphism_count, is_projective_plane,
                     isomorphic, levi_dot, reference_plane,
                     verify_configuration)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_BUDGET = 3
EXIT_VIOLATION = 4
EXIT_IO = 5

ENV_CHECKPOINT_DIR = "RECTFREE_CHECKPOINT_DIR"

_DEFAULT_MAX_ROWS = 10_000_000
_DEFAULT_CKPT_ROWS = 1_000_000
_DEFAULT_CKPT_SECONDS = 600.0


def _checkpoint_path(explicit: str | None, kind: str, n: int) -> str | None:
    if explicit:
        return explicit
    directory = os.environ.get(ENV_CHECKPOINT_DIR)
    if directory:
        return os.path.join(directory, f"{kind}-n{n}.ckpt")
    return None


def _load_for(path: str | None, n: int) -> Checkpoint | None:
    if path is None or not os.path.exists(path):
        return None
    cp = load_checkpoint(path)
    if cp.n != n:
        raise InvalidParameterError(
            f"checkpoint {path} is for order {cp.n}, not {n}")
    return cp


class _Progress:
    """Rate-limited progress lines on standard error."""

    def __init__(self, interval: float, label: str):
        self.interval = interval
        self.label = label
        self.start = self.last = time.monotonic()

    def step(self, rows: int) -> None:
        if self.interval <= 0:
            return
        now = time.monotonic()
        if now - self.last >= self.interval:
            rate = rows / (now - self.start) if now > self.start else 0.0
            print(f"{self.label}: {rows} rows, {rate:.0f} rows/s",
                  file=sys.stderr, flush=True)
            self.last = now


# -- gen ---------------------------------------------------------------------

class _StdoutSink:
    """Row sink for terminal runs: the byte stream doubles as the log."""

    def __init__(self, offset: int, row_hash: bytes):
        self.offset = offset
        self.row_hash = row_hash

    def append(self, index: int, ones) -> None:
        line = format_row_line(index, ones) + "\n"
        sys.stdout.write(line)
        self.row_hash = chain_row_hash(self.row_hash, index, ones)
        self.offset += len(line)

    def sync(self) -> None:
        sys.stdout.flush()

    def close(self) -> None:
        sys.stdout.flush()


def cmd_gen(args) -> int:
    if args.rows < 1:
        raise InvalidParameterError(
            f"--rows must be a positive total, got {args.rows}")
    ckpt_path = _checkpoint_path(args.checkpoint, "gen", args.n)
    cp = _load_for(ckpt_path, args.n)
    if cp is None:
        gen = new_generator(args.n)
        offset, row_hash = 0, EMPTY_ROW_HASH
    else:
        gen = cp.restore_generator()
        offset, row_hash = cp.log_offset, cp.row_hash
    if args.out:
        sink = RowLog(args.out, offset=offset, row_hash=row_hash)
    else:
        sink = _StdoutSink(offset, row_hash)
    progress = _Progress(args.progress_every, f"gen n={args.n}")
    since_rows = 0
    since_time = time.monotonic()
    try:
        while gen.rows_emitted < args.rows:
            row = gen.next_row()
            sink.append(row.index, row.ones)
            since_rows += 1
            progress.step(gen.rows_emitted)
            if ckpt_path and (
                    since_rows >= args.checkpoint_every_rows or
                    time.monotonic() - since_time
                    >= args.checkpoint_every_seconds):
                sink.sync()
                save_checkpoint(Checkpoint.capture(
                    gen, row_hash=sink.row_hash, log_offset=sink.offset),
                    ckpt_path)
                since_rows = 0
                since_time = time.monotonic()
        sink.sync()
        if ckpt_path:
            save_checkpoint(Checkpoint.capture(
                gen, row_hash=sink.row_hash, log_offset=sink.offset),
                ckpt_path)
    finally:
        sink.close()
    report = [f"rows: {gen.rows_emitted}"]
    if args.out:
        report.append(f"row log: {args.out}")
    if ckpt_path:
        report.append(f"checkpoint: {ckpt_path}")
    out = sys.stderr if not args.out else sys.stdout
    for line in report:
        print(line, file=out)
    return EXIT_OK


# -- period ------------------------------------------------------------------

def _report_period(result) -> list[str]:
    m = minimal_fold_multiplier(result)
    return [
        f"n={result.n} pp={result.pp} p={result.p}",
        f"band breadth b: {result.b_breadth}",
        f"longest row span l_max: {result.l_max}",
        f"empty-frontier shortcut: {'yes' if result.case1 else 'no'}",
        f"rows examined: {result.rows_examined}",
        f"minimal fold multiplier m: {m} (folded size {result.p * m})",
    ]


def cmd_period(args) -> int:
    ckpt_path = _checkpoint_path(args.checkpoint, "period", args.n)
    cp = _load_for(ckpt_path, args.n)
    resume = None
    row_hash = EMPTY_ROW_HASH
    if cp is not None:
        if cp.detector is None:
            raise InvalidParameterError(
                f"checkpoint {ckpt_path} has no detector state; it cannot "
                f"seed period detection")
        resume = cp.restore_resume()
        row_hash = cp.row_hash
    progress = _Progress(args.progress_every, f"period n={args.n}")
    state = {"rows": cp.rows_emitted if cp else 0, "hash": row_hash}

    def on_row(k: int, ones) -> None:
        state["rows"] = k
        state["hash"] = chain_row_hash(state["hash"], k, ones)
        progress.step(k)

    chunk = args.checkpoint_every_rows if ckpt_path else args.max_rows
    result = None
    while result is None:
        budget = min(args.max_rows, state["rows"] + chunk)
        try:
            result = detect_period(args.n, budget, window=args.window,
                                   resume=resume, on_row=on_row)
        except BudgetExhaustedError as exc:
            resume = exc.resume
            if ckpt_path:
                save_checkpoint(Checkpoint.capture(
                    resume.generator, row_hash=state["hash"], log_offset=0,
                    detector=resume.detector), ckpt_path)
            if exc.rows_examined >= args.max_rows:
                print(f"n={args.n} budget exhausted after "
                      f"{exc.rows_examined} rows; no period confirmed")
                if ckpt_path:
                    print(f"resumable checkpoint: {ckpt_path}")
                return EXIT_BUDGET
    for line in _report_period(result):
        print(line)
    return EXIT_OK


# -- fold --------------------------------------------------------------------

def _emit_matrix(mat, fmt: str, out: str | None) -> None:
    text = mat.to_p1() if fmt == "p1" else mat.to_sparse_text()
    if out:
        with open(out, "w", encoding="ascii") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_fold(args) -> int:
    result = detect_period(args.n, args.max_rows, window=args.window)
    if args.compact:
        rows = (iter_row_log(args.log) if args.log
                else regenerate_rows(args.n, 1, result.p))
        mat = compact_plane(args.n, result, rows)
        summary = (f"n={args.n} compact plane: {mat.n_rows} x {mat.n_cols}, "
                   f"p={result.p}")
    else:
        params = FoldParams.for_period(result, m=args.m, v=args.v)
        rows = (iter_row_log(args.log) if args.log
                else regenerate_rows(args.n, params.v + 1,
                                     params.v + params.p_bar))
        mat = fold(args.n, result, params, rows,
                   allow_unproven=args.allow_unproven)
        summary = (f"n={args.n} fold: {mat.n_rows} x {mat.n_cols}, "
                   f"pp={result.pp} p={result.p} m={params.m} "
                   f"p_bar={params.p_bar} v={params.v}")
    _emit_matrix(mat, args.format, args.out)
    if args.out:
        print(summary)
        print(f"matrix: {args.out}")
    else:
        print(summary, file=sys.stderr)
    return EXIT_OK


# -- verify ------------------------------------------------------------------

def cmd_verify(args) -> int:
    with open(args.matrix, "r", encoding="ascii") as fh:
        mat = parse_matrix_text(fh.read())
    outcome = verify_configuration(mat, args.n)
    if not isinstance(outcome, Configuration):
        print(f"violation of axiom ({outcome.axiom}): {outcome.message}")
        print(f"witness: {outcome.witness}")
        return EXIT_VIOLATION
    c = outcome
    print(f"configuration {c.v}_{c.k}")
    if is_projective_plane(c):
        print(f"projective plane of order {c.k - 1}")
    else:
        print("projective plane: no")
    code = EXIT_OK
    if args.aut:
        count = automorphism_count(c, vertex_budget=args.vertex_budget)
        print(f"automorphisms: {count} "
              f"(point/line bijections; dualities not counted)")
    if args.iso is not None:
        ref = reference_plane(args.iso)
        verdict = isomorphic(c, ref, vertex_budget=args.vertex_budget)
        print(f"isomorphic to the order-{args.iso} reference plane: "
              f"{'yes' if verdict else 'no'}")
        if not verdict:
            code = EXIT_VIOLATION
    if args.levi:
        with open(args.levi, "w", encoding="ascii") as fh:
            fh.write(levi_dot(c))
        print(f"levi graph: {args.levi}")
    return code


# -- galfs -------------------------------------------------------------------

def cmd_galfs(args) -> int:
    with open(args.matrix, "r", encoding="ascii") as fh:
        mat = parse_matrix_text(fh.read())
    cells = sorted(compute_galfs(mat.to_dense()))
    text = "".join(f"{i},{j}\n" for i, j in cells)
    if args.out:
        with open(args.out, "w", encoding="ascii") as fh:
            fh.write(text)
        print(f"galf cells: {len(cells)}")
        print(f"listing: {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- wiring ------------------------------------------------------------------

def _add_order(p: argparse.ArgumentParser) -> None:
    p.add_argument("-n", type=int, required=True, metavar="N",
                   help="order of the construction (row/column cap N+1)")


def _add_budget(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-rows", type=int, default=_DEFAULT_MAX_ROWS,
                   metavar="M", help="detection row budget "
                   f"(default {_DEFAULT_MAX_ROWS})")
    p.add_argument("--window", type=int, default=2 ** 17, metavar="W",
                   help="recurrence window (default 2^17 rows)")


def _add_progress(p: argparse.ArgumentParser) -> None:
    p.add_argument("--progress-every", type=float, default=10.0,
                   metavar="SEC", help="progress line interval on stderr; "
                   "0 disables (default 10)")


def _add_cadence(p: argparse.ArgumentParser) -> None:
    p.add_argument("--checkpoint", metavar="PATH",
                   help="checkpoint file (default: "
                   f"${ENV_CHECKPOINT_DIR}/<cmd>-n<N>.ckpt when the "
                   "variable is set; otherwise no checkpointing)")
    p.add_argument("--checkpoint-every-rows", type=int,
                   default=_DEFAULT_CKPT_ROWS, metavar="R",
                   help=f"checkpoint row cadence (default {_DEFAULT_CKPT_ROWS})")
    p.add_argument("--checkpoint-every-seconds", type=float,
                   default=_DEFAULT_CKPT_SECONDS, metavar="S",
                   help="checkpoint wall-clock cadence "
                   f"(default {_DEFAULT_CKPT_SECONDS:.0f})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rectfree",
        description="Greedy rectangle-free matrices: generation, period "
                    "detection, folding and verification.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="stream construction rows")
    _add_order(p)
    p.add_argument("--rows", type=int, required=True, metavar="COUNT",
                   help="total number of rows (resumes count past a "
                   "checkpoint)")
    p.add_argument("--out", metavar="PATH",
                   help="row-log file (default: rows to stdout)")
    _add_cadence(p)
    _add_progress(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("period", help="detect the minimal preperiod/period")
    _add_order(p)
    _add_budget(p)
    _add_cadence(p)
    _add_progress(p)
    p.set_defaults(func=cmd_period)

    p = sub.add_parser("fold", help="wrap the construction into a finite "
                                    "symmetric incidence matrix")
    _add_order(p)
    _add_budget(p)
    p.add_argument("--compact", action="store_true",
                   help="emit the leading p x p matrix (preperiod 0 only)")
    p.add_argument("-m", type=int, metavar="M",
                   help="fold multiplier (default: smallest safe)")
    p.add_argument("-v", type=int, metavar="V",
                   help="wrap anchor (default: pp + p*m)")
    p.add_argument("--allow-unproven", action="store_true",
                   help="accept multipliers between the provable bounds, "
                   "relying on the exhaustive rectangle check")
    p.add_argument("--format", choices=("sparse", "p1"), default="sparse",
                   help="output format (default sparse text)")
    p.add_argument("--log", metavar="PATH",
                   help="replay rows from this row log instead of "
                   "regenerating them")
    p.add_argument("--out", metavar="PATH",
                   help="matrix file (default: matrix to stdout)")
    _add_progress(p)
    p.set_defaults(func=cmd_fold)

    p = sub.add_parser("verify", help="check configuration axioms")
    p.add_argument("matrix", metavar="FILE",
                   help="matrix file (sparse text or P1 bitmap)")
    _add_order(p)
    p.add_argument("--aut", action="store_true",
                   help="count automorphisms")
    p.add_argument("--iso", type=int, metavar="Q",
                   help="compare against the order-Q reference plane")
    p.add_argument("--levi", metavar="PATH",
                   help="write the incidence graph as DOT")
    p.add_argument("--vertex-budget", type=int, default=10_000,
                   metavar="B", help="search size limit (default 10000)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("galfs", help="list rectangle-completing cells")
    p.add_argument("matrix", metavar="FILE",
                   help="matrix file (sparse text or P1 bitmap)")
    p.add_argument("--out", metavar="PATH",
                   help="listing file (default: stdout)")
    p.set_defaults(func=cmd_galfs)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (InvalidParameterError, SizeLimitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BudgetExhaustedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ConstraintViolationError, InvariantViolationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except CheckpointError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
