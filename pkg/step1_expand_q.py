# -*- coding: utf-8 -*-
"""
step1_expand_q.py
- Βήμα 1: ανάπτυξη της συμπαγούς έκφρασης σε Q-μονώνυμα
- Το πιο ρηχό Sum/Pow ξαναγράφεται σε κάθε γύρο· τα μερικά αποτελέσματα ξαναμπαίνουν στην ουρά
- Στο τέλος: όμοια μονώνυμα συνδυάζονται (ακέραιες πολλαπλότητες)
"""
from __future__ import annotations

from pathlib import Path
from typing import List, Tuple

from algebra import Coefficient, parse_coefficient
from expr_tree import (
    JAtom,
    Node,
    expand_once,
    fold_scalars,
    format_record,
    iter_nodes,
    normalize,
    parse_record,
    split_record,
)
from pipeline_workers import (
    PipelineError,
    PipelineIOError,
    RecordSink,
    ShardSet,
    StageConfig,
    TermMeter,
    combined_shard_set,
    external_merge,
    run_stage,
)

STAGE = 1


def expand_record(coef: Coefficient, node: Node, fold: bool = False
                  ) -> Tuple[List[str], List[str]]:
    """
    Ένα βήμα επέκτασης μιας εγγραφής.

    Returns:
        (τελικές γραμμές, γραμμές για τον επόμενο γύρο)
    """
    node = normalize(node)
    if node is None or coef.is_zero():
        return [], []
    done, parts = expand_once(node)
    if done:
        if fold:
            scalar, node = fold_scalars(node)
            coef = coef * scalar
            if coef.is_zero():
                return [], []
            node = normalize(node)
        return [format_record(coef, node)], []
    requeue = []
    for part in parts:
        part = normalize(part)
        if part is not None:
            requeue.append(format_record(coef, part))
    return [], requeue


def _expand_q_handler(line: str, context, sink: RecordSink, meter: TermMeter) -> None:
    coef, node = parse_record(line)
    bad = [n for n in iter_nodes(node) if isinstance(n, JAtom)]
    if bad:
        raise PipelineError("Η Q-έκφραση περιέχει J άτομα")
    finals, requeue = expand_record(coef, node)
    for out in finals:
        sink.final(out)
    for out in requeue:
        sink.requeue(out)


def record_key(line: str) -> tuple:
    return (split_record(line)[1],)


def sum_record_group(lines: List[str]) -> List[str]:
    """Άθροισμα συντελεστών εγγραφών με ίδια έκφραση."""
    expr = split_record(lines[0])[1]
    total = Coefficient()
    for line in lines:
        total = total + parse_coefficient(split_record(line)[0])
    if total.is_zero():
        return []
    return [f"{total.to_text()} ; {expr}"]


def combine_like_records(shards: ShardSet, cfg: StageConfig) -> ShardSet:
    merged = cfg.workdir / f"stage{shards.stage}_combined.terms"
    written = external_merge(shards.shards, merged, record_key, sum_record_group,
                             cfg.merge_chunk_lines)
    return combined_shard_set(shards.stage, merged, written, shards, cfg)


def expand_monomials_q(in_file, cfg: StageConfig) -> ShardSet:
    """
    Args:
        in_file: αρχείο με εγγραφές Q-εκφράσεων ("<coef> ; <sexpr>" ή σκέτο "<sexpr>")
        cfg: ρυθμίσεις βήματος

    Returns:
        ShardSet με διακριτά Q-μονώνυμα και τις πολλαπλότητές τους
    """
    path = Path(in_file)
    if not path.exists():
        raise PipelineIOError(f"Δεν βρέθηκε το αρχείο εισόδου: {path}", "expand_monomials_q")
    raw = run_stage(STAGE, path, _expand_q_handler, None, cfg)
    return combine_like_records(raw, cfg)
