# -*- coding: utf-8 -*-
"""
step5_aggregate.py
- Βήμα 5: συγχώνευση όλων των shards σε ένα κανονικό αρχείο ανάπτυξης
- External merge κατά (μήκος λέξης, λέξη): μνήμη O(workers + ένας όρος)
- Άθροιση συντελεστών ίδιας λέξης, απόρριψη μηδενικών
"""
from __future__ import annotations

from pathlib import Path
from typing import List, Tuple

from algebra import Coefficient, parse_term, serialize_term, word_sort_key
from pipeline_workers import ShardSet, StageConfig, external_merge


def term_key(line: str) -> tuple:
    text = line.rstrip("\n")
    word_text = text[text.rfind(";") + 1:].strip()
    word = tuple(int(l) for l in word_text.split(",")) if word_text else ()
    return word_sort_key(word)


def sum_term_group(lines: List[str]) -> List[str]:
    word = None
    total = Coefficient()
    for line in lines:
        word, coef = parse_term(line)
        total = total + coef
    if total.is_zero():
        return []
    return [serialize_term(word, total)]


def aggregate(shards: ShardSet, out_file, cfg: StageConfig = StageConfig()) -> Tuple[Path, int]:
    """
    Returns:
        (αρχείο εξόδου, πλήθος διακριτών λέξεων)
    """
    out = Path(out_file)
    out.parent.mkdir(parents=True, exist_ok=True)
    terms = external_merge(shards.shards, out, term_key, sum_term_group,
                           cfg.merge_chunk_lines, tmp_root=cfg.workdir if cfg.workdir.exists() else None)
    return out, terms
