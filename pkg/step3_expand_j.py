# -*- coding: utf-8 -*-
"""
step3_expand_j.py
- Βήμα 3: ανάπτυξη των J-εκφράσεων σε J-μονώνυμα (ίδιοι γύροι worklist με το Βήμα 1)
- Οι συντελεστές των ατόμων μεταφέρονται στον συντελεστή της εγγραφής
- Όμοια μονώνυμα συνδυάζονται στο τέλος
"""
from __future__ import annotations

from expr_tree import QAtom, iter_nodes, parse_record
from pipeline_workers import (
    PipelineError,
    RecordSink,
    ShardSet,
    StageConfig,
    TermMeter,
    run_stage,
    stage_input,
)
from step1_expand_q import combine_like_records, expand_record

STAGE = 3


def _expand_j_handler(line: str, context, sink: RecordSink, meter: TermMeter) -> None:
    coef, node = parse_record(line)
    if any(isinstance(n, QAtom) for n in iter_nodes(node)):
        raise PipelineError("Έμεινε Q άτομο μετά την αντικατάσταση")
    finals, requeue = expand_record(coef, node, fold=True)
    for out in finals:
        sink.final(out)
    for out in requeue:
        sink.requeue(out)


def expand_monomials_j(shards: ShardSet, cfg: StageConfig) -> ShardSet:
    work = stage_input(shards, STAGE, cfg)
    raw = run_stage(STAGE, work, _expand_j_handler, None, cfg)
    return combine_like_records(raw, cfg)
