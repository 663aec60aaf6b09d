# -*- coding: utf-8 -*-
"""
step4_instantiate_ncp.py
- Βήμα 4: κάθε J-μονώνυμο γίνεται γραμμικός συνδυασμός (γραμμές "<coef> ; <word>")
- Prod -> shuffle γινόμενο, ▷ -> ορισμός μέσω shuffle, περικοπή σε κάθε κόμβο
- Ο αριστερός κλάδος (▷) / ο πρώτος παράγοντας (Prod) ρέει όρο-όρο, οι υπόλοιποι
  υπολογίζονται στη μνήμη· οι όροι αθροίζονται σε buffer που αδειάζει στο shard
  πριν ξεπεραστεί το memory_term_cap (οι διπλές λέξεις αθροίζονται στο Βήμα 5)
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Tuple

from algebra import (
    Coefficient,
    LinComb,
    MaxLength,
    Term,
    TermAccumulator,
    iter_lincomb_terms,
    iter_mul_terms,
    iter_ncp_terms,
    serialize_term,
)
from expr_tree import JAtom, Ncp, Node, Prod, parse_record
from picard import evaluate_expr
from pipeline_workers import (
    MemoryCapExceeded,
    PipelineError,
    RecordSink,
    ShardSet,
    StageConfig,
    TermMeter,
    run_stage,
    stage_input,
)

STAGE = 4


@dataclass(frozen=True)
class InstantiateContext:
    max_word_length: MaxLength


def _atom_value(atom: Node) -> LinComb:
    if not isinstance(atom, JAtom):
        raise PipelineError("Μη αναμενόμενο άτομο (αναμενόταν J[...])")
    return LinComb.from_word(atom.word, atom.scalar)


def stream_terms(node: Node, L: MaxLength, meter: TermMeter, held: int = 0
                 ) -> Tuple[Iterator[Term], int]:
    """
    Returns:
        (ροή όρων του κόμβου χωρίς άθροιση, όροι που μένουν στη μνήμη όσο ρέει)
    """
    if isinstance(node, Ncp):
        right = evaluate_expr(node.right, _atom_value, L, observe=meter.observe, held=held)
        left, held = stream_terms(node.left, L, meter, held + len(right))
        return iter_ncp_terms(left, right, L), held
    if isinstance(node, Prod):
        factors = []
        for child in node.children[1:]:
            value = evaluate_expr(child, _atom_value, L, observe=meter.observe, held=held)
            factors.append(value)
            held += len(value)
        stream, held = stream_terms(node.children[0], L, meter, held)
        for value in factors:
            stream = iter_mul_terms(stream, value, L)
        return stream, held
    value = evaluate_expr(node, _atom_value, L, observe=meter.observe, held=held)
    return iter_lincomb_terms(value), held + len(value)


def _flush(buffer: TermAccumulator, coef: Coefficient, sink: RecordSink) -> None:
    for word, c in buffer.to_lincomb().scale(coef).items():
        sink.final(serialize_term(word, c))


def _instantiate_handler(line: str, context: InstantiateContext, sink: RecordSink,
                         meter: TermMeter) -> None:
    coef, node = parse_record(line)
    stream, held = stream_terms(node, context.max_word_length, meter)
    room = meter.cap - held
    if room < 1:
        raise MemoryCapExceeded(
            f"{held} όροι στη μνήμη χωρίς χώρο για buffer (memory_term_cap={meter.cap})")
    buffer = TermAccumulator()
    for word, c, m in stream:
        buffer.add(word, c, m)
        meter.observe(held + len(buffer))
        if len(buffer) >= room:
            _flush(buffer, coef, sink)
            buffer = TermAccumulator()
    _flush(buffer, coef, sink)


def instantiate_ncp(shards: ShardSet, cfg: StageConfig) -> ShardSet:
    work = stage_input(shards, STAGE, cfg)
    return run_stage(STAGE, work, _instantiate_handler,
                     InstantiateContext(cfg.max_word_length), cfg)
