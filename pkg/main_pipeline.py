#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Εκτέλεση ολόκληρου του pipeline:
picard_q -> Βήμα 1 (Q-μονώνυμα) -> Βήμα 2 (τιμές Q) -> Βήμα 3 (J-μονώνυμα)
-> Βήμα 4 (▷ μέσω shuffle) -> Βήμα 5 (συγχώνευση)
"""
from __future__ import annotations

import shutil
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional

from algebra import ONE
from expr_tree import format_record, q_indices
from model import Model, build_q_table, load_run_config
from picard import QExpr, picard_q
from pipeline_workers import MissingQError, StageConfig
from step1_expand_q import expand_monomials_q
from step2_substitute_q import substitute_q
from step3_expand_j import expand_monomials_j
from step4_instantiate_ncp import instantiate_ncp
from step5_aggregate import aggregate


@dataclass
class PipelineResult:
    output: Path
    terms: int
    max_word_length: int
    elapsed: float
    stage_lines: Dict[str, int] = field(default_factory=dict)
    peak_terms: Dict[int, int] = field(default_factory=dict)


def _say(msg: str, verbose: bool) -> None:
    if verbose:
        print(msg, file=sys.stderr)


def _max_word_length(path: Path) -> int:
    longest = 0
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            word = line.rstrip("\n").rpartition(";")[2].strip()
            if word:
                longest = max(longest, word.count(",") + 1)
    return longest


def _cleanup(cfg: StageConfig) -> None:
    for p in cfg.workdir.glob("stage*"):
        if p.is_dir():
            shutil.rmtree(p, ignore_errors=True)
        else:
            p.unlink(missing_ok=True)


def run_pipeline(model: Model, R: int, cfg: StageConfig, output,
                 qexpr: Optional[QExpr] = None, verbose: bool = True) -> PipelineResult:
    """
    Args:
        model: το μοντέλο (ορίζει τον πίνακα Q)
        R: επαναλήψεις Picard (>= 1)
        cfg: ρυθμίσεις βημάτων (workers, workdir, max_word_length, memory_term_cap)
        output: αρχείο ανάπτυξης
        qexpr: αποθηκευμένη συμπαγής έκφραση (αλλιώς picard_q(R, q))

    Σε σφάλμα το workdir μένει ως έχει για διερεύνηση.
    """
    if R < 1:
        raise ValueError(f"Το R πρέπει να είναι >= 1 (δόθηκε {R})")
    started = time.perf_counter()
    cfg.prepare()

    expr = qexpr if qexpr is not None else picard_q(R, model.q)
    table = build_q_table(model)
    missing = [k for k in q_indices(expr) if k not in table]
    if missing:
        raise MissingQError(missing[0])

    seed = cfg.workdir / "stage0_input.work"
    seed.write_text(format_record(ONE, expr) + "\n", encoding="utf-8", newline="\n")
    _say(f"📁 Workdir: {cfg.workdir} ({cfg.workers} workers)", verbose)

    _say("🔄 Βήμα 1: ανάπτυξη σε Q-μονώνυμα", verbose)
    s1 = expand_monomials_q(seed, cfg)
    lines = {"expand_monomials_q": s1.line_count()}
    _say(f"   ✅ {lines['expand_monomials_q']} διακριτά Q-μονώνυμα", verbose)

    _say("🔄 Βήμα 2: αντικατάσταση Q", verbose)
    s2 = substitute_q(s1, table, cfg)
    lines["substitute_q"] = s2.line_count()
    _say(f"   ✅ {lines['substitute_q']} εγγραφές", verbose)

    _say("🔄 Βήμα 3: ανάπτυξη σε J-μονώνυμα", verbose)
    s3 = expand_monomials_j(s2, cfg)
    lines["expand_monomials_j"] = s3.line_count()
    _say(f"   ✅ {lines['expand_monomials_j']} διακριτά J-μονώνυμα", verbose)

    _say("🔄 Βήμα 4: υπολογισμός ▷ μέσω shuffle", verbose)
    s4 = instantiate_ncp(s3, cfg)
    lines["instantiate_ncp"] = s4.line_count()
    _say(f"   ✅ {lines['instantiate_ncp']} όροι (πριν τη συγχώνευση), "
         f"peak ανά worker: {s4.peak_terms}", verbose)

    _say("🔄 Βήμα 5: συγχώνευση", verbose)
    out, terms = aggregate(s4, output, cfg)
    elapsed = time.perf_counter() - started
    _say(f"   ✅ {terms} διακριτές λέξεις -> {out}", verbose)

    if not cfg.keep_intermediate:
        _cleanup(cfg)

    return PipelineResult(output=out, terms=terms, max_word_length=_max_word_length(out),
                          elapsed=elapsed, stage_lines=lines, peak_terms=dict(s4.peak_terms))


if __name__ == "__main__":
    if len(sys.argv) < 2:
        print("Χρήση: python main_pipeline.py <config.json>")
        print("Παράδειγμα: python main_pipeline.py configs/ou.json")
        sys.exit(1)
    try:
        run_cfg = load_run_config(sys.argv[1])
    except ValueError as e:
        print(f"❌ {e}")
        sys.exit(2)
    stage_cfg = StageConfig.from_run_config(run_cfg)
    result = run_pipeline(run_cfg.model, run_cfg.picard_iterations, stage_cfg, run_cfg.output)
    print(f"✅ {result.terms} όροι, μέγιστο μήκος λέξης {result.max_word_length}, "
          f"{result.elapsed:.2f}s")
