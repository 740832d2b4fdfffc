"""Checkpoint files, row logs, corruption defense, crash recovery."""
import hashlib
import os
import random
import subprocess
import sys

import pytest

from rectfree import (
    BudgetExhaustedError,
    Checkpoint,
    CorruptCheckpointError,
    EMPTY_ROW_HASH,
    GeneratorState,
    InvalidParameterError,
    RowLog,
    VersionMismatchError,
    chain_row_hash,
    detect_period,
    generate_prefix,
    iter_row_log,
    load_checkpoint,
    log_prefix_hash,
    new_generator,
    save_checkpoint,
)


@pytest.fixture()
def saved(tmp_path):
    """A 777-row order-3 run: (checkpoint, checkpoint path, log path)."""
    gen = new_generator(3)
    digest = EMPTY_ROW_HASH
    log_path = tmp_path / "a.rows"
    with RowLog(str(log_path)) as log:
        for _ in range(777):
            row = gen.next_row()
            log.append(row.index, row.ones)
            digest = chain_row_hash(digest, row.index, row.ones)
        log.sync()
        assert log.row_hash == digest
        offset = log.offset
    checkpoint = Checkpoint.capture(gen, row_hash=digest, log_offset=offset)
    path = tmp_path / "a.ckpt"
    n_bytes = save_checkpoint(checkpoint, str(path))
    assert n_bytes == path.stat().st_size
    return checkpoint, path, log_path


class TestRoundTrip:
    def test_file_round_trip(self, saved):
        checkpoint, path, log_path = saved
        loaded = load_checkpoint(str(path))
        assert loaded == checkpoint
        assert log_prefix_hash(str(log_path), checkpoint.log_offset) \
            == checkpoint.row_hash

    def test_log_replay_matches_generator(self, saved):
        _, _, log_path = saved
        logged = [(row.index, row.ones) for row in iter_row_log(str(log_path))]
        straight = [(row.index, row.ones) for row in generate_prefix(3, 777)]
        assert logged == straight

    def test_restored_generator_continues_identically(self, saved):
        checkpoint, path, _ = saved
        resumed_gen = load_checkpoint(str(path)).restore_generator()
        resumed = [resumed_gen.next_row() for _ in range(423)]
        straight = generate_prefix(3, 1200)[777:]
        assert [(r.index, r.ones) for r in resumed] == \
               [(r.index, r.ones) for r in straight]

    def test_capture_leaves_generator_untouched(self):
        gen = new_generator(2)
        for _ in range(11):
            gen.next_row()
        before = (gen.next_k, gen.frontier_l, gen.rows_emitted, gen.live_rows)
        Checkpoint.capture(gen, row_hash=EMPTY_ROW_HASH, log_offset=0)
        assert (gen.next_k, gen.frontier_l, gen.rows_emitted,
                gen.live_rows) == before

    def test_capture_validation(self):
        gen = new_generator(1)
        gen.next_row()
        with pytest.raises(InvalidParameterError):
            Checkpoint.capture(gen, row_hash=b"short", log_offset=0)
        with pytest.raises(InvalidParameterError):
            Checkpoint.capture(gen, row_hash=EMPTY_ROW_HASH, log_offset=-1)

    def test_capture_rejects_generic_caps(self):
        # Only the square construction is checkpointable.
        generic = GeneratorState(params=None, row_cap=3, col_cap=2,
                                 max_len=100)
        generic.next_row()
        with pytest.raises(InvalidParameterError):
            Checkpoint.capture(generic, row_hash=EMPTY_ROW_HASH, log_offset=0)


class TestRowLog:
    def test_torn_tail_discarded_on_resume(self, saved):
        checkpoint, _, log_path = saved
        intact = log_path.read_bytes()
        with open(log_path, "ab") as fh:
            fh.write(b"778\t9,9,9,9")  # interrupted append, no newline
        with RowLog(str(log_path), offset=checkpoint.log_offset,
                    row_hash=checkpoint.row_hash) as log:
            assert log.offset == checkpoint.log_offset
            log.append(778, (9, 10, 11, 12))
        data = log_path.read_bytes()
        assert data.startswith(intact)
        assert data[len(intact):] == b"778\t9,10,11,12\n"

    def test_iter_skips_torn_final_line(self, saved):
        _, _, log_path = saved
        with open(log_path, "ab") as fh:
            fh.write(b"778\t9,9")
        rows = list(iter_row_log(str(log_path)))
        assert len(rows) == 777
        assert rows[-1].index == 777

    def test_wrong_resume_hash_rejected(self, saved):
        checkpoint, _, log_path = saved
        with pytest.raises(CorruptCheckpointError):
            RowLog(str(log_path), offset=checkpoint.log_offset,
                   row_hash=hashlib.sha256(b"x").digest())

    def test_resume_offset_past_end_rejected(self, saved):
        checkpoint, _, log_path = saved
        with pytest.raises(CorruptCheckpointError):
            RowLog(str(log_path), offset=checkpoint.log_offset + 10_000,
                   row_hash=checkpoint.row_hash)


class TestDetectorCheckpoint:
    def test_round_trip_resume_finds_period(self, tmp_path):
        with pytest.raises(BudgetExhaustedError) as info:
            detect_period(3, 40)
        resume = info.value.resume
        checkpoint = Checkpoint.capture(
            resume.generator, row_hash=EMPTY_ROW_HASH, log_offset=0,
            detector=resume.detector)
        path = tmp_path / "det.ckpt"
        save_checkpoint(checkpoint, str(path))
        loaded = load_checkpoint(str(path))
        assert loaded.detector == resume.detector
        result = detect_period(3, 200, resume=loaded.restore_resume())
        assert (result.pp, result.p) == (48, 16)

    def test_restore_resume_needs_detector(self, saved):
        checkpoint, _, _ = saved
        assert checkpoint.detector is None
        with pytest.raises(InvalidParameterError):
            checkpoint.restore_resume()


class TestCorruptionDefense:
    def test_flipped_byte_rejected(self, saved, tmp_path):
        _, path, _ = saved
        blob = bytearray(path.read_bytes())
        blob[len(blob) // 2] ^= 0x40
        bad = tmp_path / "bad.ckpt"
        bad.write_bytes(bytes(blob))
        with pytest.raises(CorruptCheckpointError):
            load_checkpoint(str(bad))

    def test_every_truncation_rejected(self, saved, tmp_path):
        _, path, _ = saved
        blob = path.read_bytes()
        bad = tmp_path / "bad.ckpt"
        for cut in range(0, len(blob), 97):
            bad.write_bytes(blob[:cut])
            with pytest.raises(CorruptCheckpointError):
                load_checkpoint(str(bad))

    def test_future_version_rejected(self, saved, tmp_path):
        _, path, _ = saved
        blob = bytearray(path.read_bytes())
        blob[6:8] = (99).to_bytes(2, "little")
        blob[-8:] = hashlib.sha256(bytes(blob[:-8])).digest()[:8]
        bad = tmp_path / "bad.ckpt"
        bad.write_bytes(bytes(blob))
        with pytest.raises(VersionMismatchError):
            load_checkpoint(str(bad))

    def test_bad_magic_rejected(self, saved, tmp_path):
        _, path, _ = saved
        blob = bytearray(path.read_bytes())
        blob[0] ^= 0xFF
        bad = tmp_path / "bad.ckpt"
        bad.write_bytes(bytes(blob))
        with pytest.raises(CorruptCheckpointError):
            load_checkpoint(str(bad))

    def test_trailing_garbage_rejected(self, saved, tmp_path):
        _, path, _ = saved
        bad = tmp_path / "bad.ckpt"
        bad.write_bytes(path.read_bytes() + b"zz")
        with pytest.raises(CorruptCheckpointError):
            load_checkpoint(str(bad))

    def test_missing_file_is_oserror(self, tmp_path):
        with pytest.raises(OSError):
            load_checkpoint(str(tmp_path / "absent.ckpt"))


class TestAtomicSave:
    def test_failed_replace_leaves_no_temp_behind(self, saved, tmp_path):
        checkpoint, _, _ = saved
        target = tmp_path / "occupied"
        target.mkdir()  # os.replace onto a non-empty dir fails
        (target / "keep").write_text("x")
        with pytest.raises(OSError):
            save_checkpoint(checkpoint, str(target))
        assert (target / "keep").read_text() == "x"
        leftovers = [p for p in tmp_path.iterdir() if ".tmp" in p.name]
        assert leftovers == []

    def test_missing_parent_directory_is_oserror(self, saved, tmp_path):
        checkpoint, _, _ = saved
        with pytest.raises(OSError):
            save_checkpoint(checkpoint, str(tmp_path / "no" / "dir.ckpt"))

    def test_overwrite_replaces_older_checkpoint(self, saved, tmp_path):
        checkpoint, _, _ = saved
        path = tmp_path / "b.ckpt"
        save_checkpoint(checkpoint, str(path))
        gen = new_generator(3)
        for _ in range(900):
            gen.next_row()
        newer = Checkpoint.capture(gen, row_hash=EMPTY_ROW_HASH, log_offset=0)
        save_checkpoint(newer, str(path))
        assert load_checkpoint(str(path)) == newer


class TestScale:
    def test_order6_fifty_thousand_rows(self, tmp_path):
        with pytest.raises(BudgetExhaustedError) as info:
            detect_period(6, 50_000)
        resume = info.value.resume
        checkpoint = Checkpoint.capture(
            resume.generator, row_hash=EMPTY_ROW_HASH, log_offset=0,
            detector=resume.detector)
        path = tmp_path / "n6.ckpt"
        save_checkpoint(checkpoint, str(path))
        restored = load_checkpoint(str(path))
        assert restored == checkpoint
        gen = restored.restore_generator()
        resumed = [gen.next_row() for _ in range(100)]
        straight = generate_prefix(6, 50_100)[50_000:]
        assert [(r.index, r.ones) for r in resumed] == \
               [(r.index, r.ones) for r in straight]


class TestCrashRecovery:
    def test_sigkill_storm_preserves_the_row_log(self, tmp_path):
        """Kill the generator mid-run repeatedly; the resumed log must
        equal an uninterrupted run's byte for byte."""
        def command(log, ckpt):
            return [sys.executable, "-m", "rectfree", "gen", "-n", "3",
                    "--rows", "60000", "--out", str(log),
                    "--checkpoint", str(ckpt),
                    "--checkpoint-every-rows", "2000",
                    "--checkpoint-every-seconds", "9999",
                    "--progress-every", "0"]

        env = {k: v for k, v in os.environ.items()
               if k != "RECTFREE_CHECKPOINT_DIR"}
        reference = subprocess.run(
            command(tmp_path / "ref.rows", tmp_path / "ref.ckpt"),
            capture_output=True, timeout=120, env=env)
        assert reference.returncode == 0, reference.stderr
        expected = (tmp_path / "ref.rows").read_bytes()

        log, ckpt = tmp_path / "run.rows", tmp_path / "run.ckpt"
        rng = random.Random(0x5EED)
        completed = False
        for _ in range(8):
            proc = subprocess.Popen(command(log, ckpt),
                                    stdout=subprocess.DEVNULL,
                                    stderr=subprocess.DEVNULL, env=env)
            try:
                proc.wait(timeout=rng.uniform(0.1, 0.45))
                completed = proc.returncode == 0
            except subprocess.TimeoutExpired:
                proc.kill()
                proc.wait()
            if completed:
                break
        if not completed:
            final = subprocess.run(command(log, ckpt), capture_output=True,
                                   text=True, timeout=120, env=env)
            assert final.returncode == 0, final.stderr
            assert "rows: 60000" in final.stdout
        assert log.read_bytes() == expected

    def test_completed_run_is_idempotent(self, tmp_path):
        env = {k: v for k, v in os.environ.items()
               if k != "RECTFREE_CHECKPOINT_DIR"}
        cmd = [sys.executable, "-m", "rectfree", "gen", "-n", "2",
               "--rows", "50", "--out", str(tmp_path / "x.rows"),
               "--checkpoint", str(tmp_path / "x.ckpt"),
               "--progress-every", "0"]
        first = subprocess.run(cmd, capture_output=True, timeout=60, env=env)
        assert first.returncode == 0
        data = (tmp_path / "x.rows").read_bytes()
        again = subprocess.run(cmd, capture_output=True, timeout=60, env=env)
        assert again.returncode == 0
        assert (tmp_path / "x.rows").read_bytes() == data
