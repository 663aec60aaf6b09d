# -*- coding: utf-8 -*-
"""
pipeline_workers.py

Κοινή υποδομή των βημάτων του pipeline:
- StageConfig / ShardSet
- Worker pool με κοινό μετρητή διεκδίκησης εγγραφών (claim counter)
  πάνω σε read-only αρχείο εργασίας (offsets γραμμών σε .npy)
- Κάθε worker γράφει ΜΟΝΟ στα δικά του αρχεία: stage<N>_worker<K>.terms.part
  (atomic rename σε .terms στο τέλος του βήματος)
- Γύροι worklist: μερικά αποτελέσματα ξαναμπαίνουν στον επόμενο γύρο
- External merge (ταξινομημένα runs + k-way merge) για συνδυασμό όμοιων όρων
- Manifest ανά βήμα (CSV, pandas)
"""
from __future__ import annotations

import contextlib
import heapq
import itertools
import json
import logging
import multiprocessing as mp
import os
import shutil
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from algebra import MaxLength, UNBOUNDED
from model import DEFAULT_MEMORY_TERM_CAP, DEFAULT_MERGE_CHUNK_LINES

logger = logging.getLogger(__name__)

STAGE_NAMES = {
    1: "expand_monomials_q",
    2: "substitute_q",
    3: "expand_monomials_j",
    4: "instantiate_ncp",
    5: "aggregate",
}
MERGE_LOG_EVERY = 10_000
MAX_ROUNDS = 10_000


class PipelineError(RuntimeError):
    """Αποτυχία βήματος (με όνομα βήματος, αρχείο και δείκτη εγγραφής)."""

    def __init__(self, message: str, stage: Optional[str] = None,
                 path: Optional[str] = None, record_index: Optional[int] = None):
        self.stage = stage
        self.path = path
        self.record_index = record_index
        where = []
        if stage:
            where.append(f"βήμα {stage}")
        if path:
            where.append(f"αρχείο {path}")
        if record_index is not None:
            where.append(f"εγγραφή #{record_index}")
        self.reason = message
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class MemoryCapExceeded(PipelineError):
    """Μία εγγραφή ξεπέρασε το memory_term_cap (το όριο είναι πολύ μικρό)."""


class PipelineIOError(PipelineError):
    """Αποτυχία ανάγνωσης/εγγραφής (workdir, αρχείο εισόδου)."""


class MissingQError(KeyError):
    def __init__(self, k: int):
        self.k = k
        super().__init__(f"Λείπει το Q{k} από τον πίνακα Q")

    def __str__(self) -> str:
        return self.args[0]


@dataclass(frozen=True)
class StageConfig:
    workers: int = 1
    workdir: Path = Path("work")
    max_word_length: MaxLength = UNBOUNDED
    memory_term_cap: int = DEFAULT_MEMORY_TERM_CAP
    keep_intermediate: bool = False
    merge_chunk_lines: int = DEFAULT_MERGE_CHUNK_LINES

    def __post_init__(self):
        object.__setattr__(self, "workdir", Path(self.workdir))
        if self.workers < 1:
            raise ValueError(f"workers πρέπει να είναι >= 1 (δόθηκε {self.workers})")
        if self.memory_term_cap < 1:
            raise ValueError("memory_term_cap πρέπει να είναι >= 1")
        if self.max_word_length is not None and self.max_word_length < 1:
            raise ValueError("max_word_length πρέπει να είναι >= 1 ή unbounded")
        if self.merge_chunk_lines < 1:
            raise ValueError("merge_chunk_lines πρέπει να είναι >= 1")

    @classmethod
    def from_run_config(cls, run_cfg, **overrides) -> "StageConfig":
        values = dict(
            workers=run_cfg.workers,
            workdir=run_cfg.workdir,
            max_word_length=run_cfg.max_word_length,
            memory_term_cap=run_cfg.memory_term_cap,
            keep_intermediate=run_cfg.keep_intermediate,
            merge_chunk_lines=run_cfg.merge_chunk_lines,
        )
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def prepare(self) -> Path:
        """Δημιουργεί το workdir και ελέγχει ότι γράφεται."""
        try:
            self.workdir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise PipelineIOError(f"Δεν δημιουργείται το workdir {self.workdir}: {exc}") from exc
        if not os.access(self.workdir, os.W_OK):
            raise PipelineIOError(f"Το workdir δεν είναι εγγράψιμο: {self.workdir}")
        return self.workdir


@dataclass(frozen=True)
class ShardSet:
    """Έξοδος βήματος: ένα αρχείο ανά worker + manifest."""
    stage: int
    directory: Path
    shards: Tuple[Path, ...]
    manifest: Path
    peak_terms: Dict[int, int] = field(default_factory=dict)

    @property
    def name(self) -> str:
        return STAGE_NAMES.get(self.stage, f"stage{self.stage}")

    def iter_lines(self) -> Iterator[str]:
        for shard in self.shards:
            with open(shard, "r", encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        yield line.rstrip("\n")

    def line_count(self) -> int:
        return sum(1 for _ in self.iter_lines())

    def concatenate(self, out_path: Path) -> Path:
        out_path = Path(out_path)
        with open(out_path, "w", encoding="utf-8", newline="\n") as out:
            for shard in self.shards:
                with open(shard, "r", encoding="utf-8") as fh:
                    shutil.copyfileobj(fh, out)
        return out_path


class TermMeter:
    """Μετρητής ζωντανών όρων LinComb ανά worker (peak + έλεγχος ορίου)."""

    def __init__(self, cap: int):
        self.cap = cap
        self.peak = 0

    def observe(self, n: int) -> None:
        if n > self.peak:
            self.peak = n
        if n > self.cap:
            raise MemoryCapExceeded(
                f"{n} ταυτόχρονοι όροι > memory_term_cap={self.cap}")


# ---------------------------------------------------------------------
# Αρχεία ανά worker
# ---------------------------------------------------------------------
def shard_path(workdir: Path, stage: int, worker: int) -> Path:
    return workdir / f"stage{stage}_worker{worker}.terms"


def _part_path(workdir: Path, stage: int, worker: int) -> Path:
    return workdir / f"stage{stage}_worker{worker}.terms.part"


def _requeue_path(workdir: Path, stage: int, round_no: int, worker: int) -> Path:
    return workdir / f"stage{stage}_round{round_no}_worker{worker}.tmp"


def _round_input(workdir: Path, stage: int, round_no: int) -> Path:
    return workdir / f"stage{stage}_round{round_no}.work"


def _stats_path(workdir: Path, stage: int, round_no: int, worker: int) -> Path:
    return workdir / f"stage{stage}_round{round_no}_worker{worker}.stats.json"


def _error_path(workdir: Path, stage: int, round_no: int, worker: int) -> Path:
    return workdir / f"stage{stage}_round{round_no}_worker{worker}.error.json"


class RecordSink:
    """
    Έξοδοι ενός worker σε έναν γύρο:
    final() -> τελικό shard του βήματος, requeue() -> είσοδος επόμενου γύρου.
    """

    def __init__(self, workdir: Path, stage: int, worker: int, round_no: int):
        self._final_path = _part_path(workdir, stage, worker)
        self._requeue_path = _requeue_path(workdir, stage, round_no, worker)
        self._final = None
        self._requeue = None
        self.final_lines = 0
        self.requeued = 0

    def final(self, line: str) -> None:
        if self._final is None:
            self._final = open(self._final_path, "a", encoding="utf-8", newline="\n")
        self._final.write(line + "\n")
        self.final_lines += 1

    def requeue(self, line: str) -> None:
        if self._requeue is None:
            self._requeue = open(self._requeue_path, "w", encoding="utf-8", newline="\n")
        self._requeue.write(line + "\n")
        self.requeued += 1

    def close(self) -> None:
        for fh in (self._final, self._requeue):
            if fh is not None:
                fh.close()
        self._final = self._requeue = None

    def __enter__(self) -> "RecordSink":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


RecordHandler = Callable[[str, object, RecordSink, TermMeter], None]


# ---------------------------------------------------------------------
# Offsets εγγραφών
# ---------------------------------------------------------------------
def index_records(path: Path) -> np.ndarray:
    """Byte offsets των μη κενών γραμμών (uint64)."""
    offsets: List[int] = []
    pos = 0
    with open(path, "rb") as fh:
        for raw in fh:
            if raw.strip():
                offsets.append(pos)
            pos += len(raw)
    return np.asarray(offsets, dtype=np.uint64)


class _LocalCounter:
    """Μετρητής για inline εκτέλεση (workers == 1), ίδιο interface με mp.Value."""

    def __init__(self):
        self.value = 0

    def get_lock(self):
        return contextlib.nullcontext()


def _claim(counter) -> int:
    with counter.get_lock():
        idx = counter.value
        counter.value = idx + 1
    return idx


def _process_claims(stage: int, round_no: int, worker: int, work_path: Path,
                    offsets_path: Path, counter, handler: RecordHandler,
                    context, cfg: StageConfig) -> Dict[str, int]:
    offsets = np.load(offsets_path, mmap_mode="r")
    total = len(offsets)
    meter = TermMeter(cfg.memory_term_cap)
    claimed = 0
    with open(work_path, "rb") as fh, RecordSink(cfg.workdir, stage, worker, round_no) as sink:
        while True:
            idx = _claim(counter)
            if idx >= total:
                break
            fh.seek(int(offsets[idx]))
            line = fh.readline().decode("utf-8").rstrip("\n")
            try:
                handler(line, context, sink, meter)
            except PipelineError as exc:
                raise type(exc)(exc.reason, STAGE_NAMES.get(stage), str(work_path), idx) from exc
            except MissingQError:
                raise
            except OSError as exc:
                raise PipelineIOError(str(exc), STAGE_NAMES.get(stage), str(work_path), idx) from exc
            except Exception as exc:
                raise PipelineError(f"{type(exc).__name__}: {exc}", STAGE_NAMES.get(stage),
                                    str(work_path), idx) from exc
            claimed += 1
        stats = {"worker": worker, "round": round_no, "records": claimed,
                 "final": sink.final_lines, "requeued": sink.requeued, "peak_terms": meter.peak}
    return stats


def _worker_main(stage, round_no, worker, work_path, offsets_path, counter,
                 handler, context, cfg) -> None:
    """Σημείο εισόδου διεργασίας: δεν πετάει εξαίρεση, γράφει stats/error JSON."""
    try:
        stats = _process_claims(stage, round_no, worker, work_path, offsets_path,
                                counter, handler, context, cfg)
        _stats_path(cfg.workdir, stage, round_no, worker).write_text(
            json.dumps(stats), encoding="utf-8")
    except BaseException as exc:  # noqa: BLE001
        payload = {
            "type": "PipelineIOError" if isinstance(exc, OSError) else type(exc).__name__,
            "message": getattr(exc, "reason", str(exc)),
            "stage": getattr(exc, "stage", STAGE_NAMES.get(stage)),
            "path": getattr(exc, "path", str(work_path)),
            "record_index": getattr(exc, "record_index", None),
            "k": getattr(exc, "k", None),
        }
        _error_path(cfg.workdir, stage, round_no, worker).write_text(
            json.dumps(payload, ensure_ascii=False), encoding="utf-8")
        sys.exit(1)


def _raise_worker_error(path: Path) -> None:
    info = json.loads(path.read_text(encoding="utf-8"))
    if info["type"] == "MissingQError":
        raise MissingQError(info["k"])
    cls = {"MemoryCapExceeded": MemoryCapExceeded,
           "PipelineIOError": PipelineIOError}.get(info["type"], PipelineError)
    raise cls(info["message"], info.get("stage"), info.get("path"), info.get("record_index"))


def _run_round(stage: int, round_no: int, work_path: Path, offsets_path: Path,
               handler: RecordHandler, context, cfg: StageConfig) -> List[Dict[str, int]]:
    if cfg.workers == 1:
        return [_process_claims(stage, round_no, 0, work_path, offsets_path,
                                _LocalCounter(), handler, context, cfg)]

    ctx = mp.get_context()
    counter = ctx.Value("q", 0)
    procs = [
        ctx.Process(target=_worker_main,
                    args=(stage, round_no, k, work_path, offsets_path, counter,
                          handler, context, cfg),
                    name=f"stage{stage}-worker{k}")
        for k in range(cfg.workers)
    ]
    for p in procs:
        p.start()
    for p in procs:
        p.join()

    for k, p in enumerate(procs):
        err = _error_path(cfg.workdir, stage, round_no, k)
        if err.exists():
            _raise_worker_error(err)
        if p.exitcode != 0:
            raise PipelineError(f"Ο worker {k} τερμάτισε με κωδικό {p.exitcode}",
                                STAGE_NAMES.get(stage), str(work_path))
    stats = []
    for k in range(cfg.workers):
        sp = _stats_path(cfg.workdir, stage, round_no, k)
        stats.append(json.loads(sp.read_text(encoding="utf-8")))
        sp.unlink()
    return stats


def _gather_requeued(cfg: StageConfig, stage: int, round_no: int) -> Optional[Path]:
    parts = [p for p in (_requeue_path(cfg.workdir, stage, round_no, k) for k in range(cfg.workers))
             if p.exists()]
    if not parts:
        return None
    nxt = _round_input(cfg.workdir, stage, round_no + 1)
    with open(nxt, "w", encoding="utf-8", newline="\n") as out:
        for part in parts:
            with open(part, "r", encoding="utf-8") as fh:
                shutil.copyfileobj(fh, out)
            part.unlink()
    return nxt


def write_manifest(stage: int, shards: Sequence[Path], records: Dict[int, int],
                   peak_terms: Dict[int, int], workdir: Path) -> Path:
    rows = []
    for k, shard in enumerate(shards):
        with open(shard, "r", encoding="utf-8") as fh:
            lines = sum(1 for ln in fh if ln.strip())
        rows.append({
            "shard": shard.name,
            "lines": lines,
            "records": records.get(k, 0),
            "peak_terms": peak_terms.get(k, 0),
        })
    manifest = workdir / f"stage{stage}_manifest.csv"
    pd.DataFrame(rows, columns=["shard", "lines", "records", "peak_terms"]).to_csv(
        manifest, index=False, lineterminator="\n")
    return manifest


_SCRATCH_PATTERNS = (
    "stage{n}_worker*.terms.part",
    "stage{n}_worker*.terms",
    "stage{n}_round*_worker*.tmp",
    "stage{n}_round*_worker*.stats.json",
    "stage{n}_round*_worker*.error.json",
    "stage{n}_round*.offsets.npy",
    "stage{n}_round*.work",
)


def clear_stage_scratch(workdir: Path, stage: int, keep: Optional[Path] = None) -> int:
    """
    Σβήνει ό,τι άφησε προηγούμενη (πιθανώς αποτυχημένη) εκτέλεση του βήματος,
    για κάθε δείκτη worker. Το αρχείο `keep` (η είσοδος) δεν αγγίζεται.
    """
    keep_resolved = keep.resolve() if keep is not None else None
    removed = 0
    for pattern in _SCRATCH_PATTERNS:
        for stale in list(workdir.glob(pattern.format(n=stage))):
            if keep_resolved is not None and stale.resolve() == keep_resolved:
                continue
            stale.unlink()
            removed += 1
    if removed:
        logger.info("%s: σβήστηκαν %d παλιά αρχεία από το workdir",
                    STAGE_NAMES.get(stage), removed)
    return removed


def run_stage(stage: int, in_path: Path, handler: RecordHandler, context,
              cfg: StageConfig) -> ShardSet:
    """
    Εκτελεί ένα βήμα σε γύρους worklist μέχρι να μην υπάρχουν μερικά αποτελέσματα.

    Returns:
        ShardSet με ένα .terms αρχείο ανά worker
    """
    cfg.prepare()
    clear_stage_scratch(cfg.workdir, stage, keep=Path(in_path))

    records: Dict[int, int] = {}
    peaks: Dict[int, int] = {}
    work: Optional[Path] = Path(in_path)
    round_no = 0
    while work is not None:
        if round_no >= MAX_ROUNDS:
            raise PipelineError(f"Πάνω από {MAX_ROUNDS} γύροι επέκτασης", STAGE_NAMES.get(stage))
        offsets = index_records(work)
        offsets_path = cfg.workdir / f"stage{stage}_round{round_no}.offsets.npy"
        np.save(offsets_path, offsets)
        logger.info("%s γύρος %d: %d εγγραφές, %d workers",
                    STAGE_NAMES.get(stage), round_no, len(offsets), cfg.workers)
        stats = _run_round(stage, round_no, work, offsets_path, handler, context, cfg) \
            if len(offsets) else []
        for s in stats:
            records[s["worker"]] = records.get(s["worker"], 0) + s["records"]
            peaks[s["worker"]] = max(peaks.get(s["worker"], 0), s["peak_terms"])

        if not cfg.keep_intermediate:
            offsets_path.unlink()
            if round_no > 0:
                work.unlink()
        work = _gather_requeued(cfg, stage, round_no)
        round_no += 1

    shards = []
    for k in range(cfg.workers):
        part, final = _part_path(cfg.workdir, stage, k), shard_path(cfg.workdir, stage, k)
        if part.exists():
            os.replace(part, final)
        else:
            final.touch()
        shards.append(final)

    manifest = write_manifest(stage, shards, records, peaks, cfg.workdir)
    return ShardSet(stage=stage, directory=cfg.workdir, shards=tuple(shards),
                    manifest=manifest, peak_terms=peaks)


# ---------------------------------------------------------------------
# External merge
# ---------------------------------------------------------------------
KeyFn = Callable[[str], tuple]
CombineFn = Callable[[List[str]], Iterable[str]]


def _spill(chunk: List[Tuple[tuple, str]], tmpdir: Path, n: int) -> Path:
    chunk.sort()
    run = tmpdir / f"run{n:05d}.txt"
    with open(run, "w", encoding="utf-8", newline="\n") as fh:
        for _, line in chunk:
            fh.write(line + "\n")
    return run


def _read_run(path: Path, key: KeyFn) -> Iterator[Tuple[tuple, str]]:
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            yield key(line), line


def external_merge(paths: Iterable[Path], out_path: Path, key: KeyFn, combine: CombineFn,
                   chunk_lines: int = DEFAULT_MERGE_CHUNK_LINES,
                   tmp_root: Optional[Path] = None) -> int:
    """
    Ταξινομεί τα αρχεία σε runs των `chunk_lines` γραμμών και τα συγχωνεύει
    (heapq.merge). Κάθε ομάδα ίδιου κλειδιού περνά από το `combine`.

    Returns:
        πλήθος γραμμών εξόδου
    """
    out_path = Path(out_path)
    tmpdir = Path(tempfile.mkdtemp(prefix="merge_", dir=tmp_root or out_path.parent))
    try:
        runs: List[Path] = []
        chunk: List[Tuple[tuple, str]] = []
        for p in paths:
            with open(p, "r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.rstrip("\n")
                    if not line.strip():
                        continue
                    chunk.append((key(line), line))
                    if len(chunk) >= chunk_lines:
                        runs.append(_spill(chunk, tmpdir, len(runs)))
                        chunk = []
        if chunk:
            runs.append(_spill(chunk, tmpdir, len(runs)))
        logger.debug("external merge: %d runs -> %s", len(runs), out_path)

        written = 0
        groups = 0
        streams = [_read_run(r, key) for r in runs]
        with open(out_path, "w", encoding="utf-8", newline="\n") as out:
            merged = heapq.merge(*streams)
            for _, group in itertools.groupby(merged, key=lambda kl: kl[0]):
                for line in combine([line for _, line in group]):
                    out.write(line + "\n")
                    written += 1
                groups += 1
                if groups % MERGE_LOG_EVERY == 0:
                    logger.info("merge: %d κλειδιά, %d γραμμές", groups, written)
        return written
    finally:
        shutil.rmtree(tmpdir, ignore_errors=True)


def combined_shard_set(stage: int, merged: Path, written: int, source: ShardSet,
                       cfg: StageConfig) -> ShardSet:
    """ShardSet ενός αρχείου (μετά τον συνδυασμό όμοιων εγγραφών)."""
    manifest = cfg.workdir / f"stage{stage}_combined_manifest.csv"
    pd.DataFrame([{"shard": merged.name, "lines": written,
                   "records": written, "peak_terms": max(source.peak_terms.values(), default=0)}]
                 ).to_csv(manifest, index=False, lineterminator="\n")
    if not cfg.keep_intermediate:
        for shard in source.shards:
            shard.unlink(missing_ok=True)
    return ShardSet(stage=stage, directory=cfg.workdir, shards=(merged,),
                    manifest=manifest, peak_terms=dict(source.peak_terms))


def stage_input(shards: ShardSet, stage: int, cfg: StageConfig) -> Path:
    """Συνένωση των shards του προηγούμενου βήματος σε αρχείο εργασίας."""
    cfg.prepare()
    return shards.concatenate(_round_input(cfg.workdir, stage, 0))
