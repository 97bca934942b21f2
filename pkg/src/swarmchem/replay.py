"""Replay logs: recording and validating reproducible runs.

A replay log is JSON-lines: a header record (run config, seed, format
version, planned step count, recording mode), then hash records every
hash_every steps, optional full-frame records (base64 world snapshots),
transmission event records, and an end record.

Validation replays the log: with full frames recorded it recomputes each
frame's hash without advancing any physics; with a header-only log it
re-simulates from the seed. Both modes must produce the recorded hashes;
the first divergence or a truncated file raises ReplayCorruptionError
naming the step.
"""

from __future__ import annotations

import base64
import json
from pathlib import Path

from .engine import run
from .errors import SimulationError
from .runconfig import RunConfig, config_to_doc, parse_config
from .snapshots import load_world, save_world, state_hash

FORMAT_VERSION = 1


class ReplayCorruptionError(SimulationError):
    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


class ReplayRecorder:
    """Run observer writing a replay log."""

    def __init__(self, config: RunConfig, path, record_frames: bool | None = None):
        self.config = config
        self.path = Path(path)
        self.hash_every = config.observers.hash_every
        self.record_frames = (
            config.observers.record_frames if record_frames is None else record_frames
        )
        self._fh = None

    def _write(self, record: dict):
        self._fh.write(json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n")

    def on_start(self, world):
        self._fh = self.path.open("w")
        self._write(
            {
                "type": "header",
                "format_version": FORMAT_VERSION,
                "seed": world.config.seed,
                "n_steps": self.config.n_steps,
                "hash_every": self.hash_every,
                "frames": self.record_frames,
                "config": config_to_doc(self.config),
            }
        )
        self._checkpoint(world)

    def on_step(self, world):
        for ev in world.last_transmissions:
            self._write(
                {
                    "type": "event",
                    "step": ev.step,
                    "i": ev.i,
                    "j": ev.j,
                    "rule": ev.rule,
                    "winner": ev.winner,
                    "mutated": ev.mutated,
                }
            )
        if world.step_count % self.hash_every == 0:
            self._checkpoint(world)

    def _checkpoint(self, world):
        self._write(
            {"type": "hash", "step": world.step_count, "hash": f"{state_hash(world):016x}"}
        )
        if self.record_frames:
            blob = base64.b64encode(save_world(world)).decode("ascii")
            self._write({"type": "frame", "step": world.step_count, "data": blob})

    def on_finish(self, world):
        self._write({"type": "end", "step": world.step_count})
        self._fh.close()
        self._fh = None


def read_log(path):
    """Parse a replay log into (header, records); corrupt JSON lines raise
    ReplayCorruptionError at the last good step."""
    path = Path(path)
    if not path.exists():
        raise ReplayCorruptionError(f"replay log not found: {path}")
    header = None
    records = []
    last_step = 0
    with path.open() as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ReplayCorruptionError(
                    f"corrupt record at line {line_no} (after step {last_step}): {exc}",
                    step=last_step,
                ) from exc
            if header is None:
                if rec.get("type") != "header":
                    raise ReplayCorruptionError("log does not start with a header record")
                if rec.get("format_version") != FORMAT_VERSION:
                    raise ReplayCorruptionError(
                        f"unsupported log version {rec.get('format_version')}"
                    )
                header = rec
            else:
                records.append(rec)
                if "step" in rec:
                    last_step = rec["step"]
    if header is None:
        raise ReplayCorruptionError("empty replay log")
    return header, records


def replay(path) -> list[tuple[int, int]]:
    """Validate a replay log; returns the verified (step, hash) sequence."""
    header, records = read_log(path)
    hashes = [(r["step"], int(r["hash"], 16)) for r in records if r["type"] == "hash"]
    ended = any(r["type"] == "end" for r in records)
    expected_last = header["n_steps"]
    if not ended:
        last = hashes[-1][0] if hashes else 0
        raise ReplayCorruptionError(
            f"log truncated at step {last} (expected {expected_last} steps)", step=last
        )

    if header["frames"]:
        frames = {r["step"]: r["data"] for r in records if r["type"] == "frame"}
        verified = []
        for step_no, want in hashes:
            if step_no not in frames:
                raise ReplayCorruptionError(f"missing frame at step {step_no}", step=step_no)
            world = load_world(base64.b64decode(frames[step_no]))
            got = state_hash(world)
            if got != want:
                raise ReplayCorruptionError(
                    f"hash mismatch at step {step_no}: "
                    f"recorded {want:016x}, frame gives {got:016x}",
                    step=step_no,
                )
            verified.append((step_no, got))
        return verified

    cfg = parse_config(header["config"])
    world = cfg.build_world()
    want_by_step = dict(hashes)
    verified = []

    def check(w):
        want = want_by_step.get(w.step_count)
        if want is not None:
            got = state_hash(w)
            if got != want:
                raise ReplayCorruptionError(
                    f"hash mismatch at step {w.step_count}: "
                    f"recorded {want:016x}, re-simulation gives {got:016x}",
                    step=w.step_count,
                )
            verified.append((w.step_count, got))

    check(world)

    class _Checker:
        def on_step(self, w):
            check(w)

    run(world, header["n_steps"], observers=[_Checker()], perturbations=cfg.perturbations)
    return verified
