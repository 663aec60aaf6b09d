# -*- coding: utf-8 -*-
"""
step2_substitute_q.py
- Βήμα 2: αντικατάσταση κάθε Q_k με την τιμή του από το μοντέλο
- Κάθε όρος του Q_k γίνεται άτομο c*J[l] με μονώνυμο συντελεστή (άθροισμα αν > 1)
- Μηδενικό Q_k -> η εγγραφή απορρίπτεται· Q_k εκτός πίνακα -> MissingQError
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional

from algebra import Coefficient
from expr_tree import (
    JAtom,
    Node,
    QAtom,
    Sum,
    format_record,
    normalize,
    parse_record,
    substitute_atoms,
)
from model import QTable
from pipeline_workers import (
    MissingQError,
    PipelineError,
    RecordSink,
    ShardSet,
    StageConfig,
    TermMeter,
    run_stage,
    stage_input,
)

STAGE = 2


@dataclass(frozen=True)
class SubstituteContext:
    q_nodes: Dict[int, Optional[Node]]


def q_value_node(table: QTable, k: int) -> Optional[Node]:
    atoms = []
    for word, coef in table[k].items():
        for mono, c in coef.sorted_terms():
            atoms.append(JAtom(word, Coefficient({mono: c})))
    if not atoms:
        return None
    return atoms[0] if len(atoms) == 1 else Sum(tuple(atoms))


def _substitute_handler(line: str, context: SubstituteContext, sink: RecordSink,
                        meter: TermMeter) -> None:
    coef, node = parse_record(line)

    def replace(atom: Node) -> Optional[Node]:
        if not isinstance(atom, QAtom):
            raise PipelineError("Η εγγραφή περιέχει ήδη J άτομα")
        if atom.k not in context.q_nodes:
            raise MissingQError(atom.k)
        return context.q_nodes[atom.k]

    out = substitute_atoms(node, replace)
    out = normalize(out) if out is not None else None
    if out is not None:
        sink.final(format_record(coef, out))


def substitute_q(shards: ShardSet, qtable: QTable, cfg: StageConfig) -> ShardSet:
    context = SubstituteContext({k: q_value_node(qtable, k) for k in qtable.q_of})
    work = stage_input(shards, STAGE, cfg)
    return run_stage(STAGE, work, _substitute_handler, context, cfg)
