#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
cli.py

Γραμμή εντολών:
    python cli.py expand configs/quadratic_noise.json --workers 4
    python cli.py expect expansion.txt
    python cli.py shuffle 0,1,0 1,1 [--algo recursive|iterative]
    python cli.py ncp 1 2,3
    python cli.py picard-q 3 2 [--output y3.qexpr]
    python cli.py bench-shuffle --max-length 12 --trials 1000 --seed 1
    python cli.py mc-check --word 0,1,1,0,0 --seed 7
    python cli.py mc-check --full --config configs/ou.json --bind a=1 --bind b=0.1 --T 0.5 --seed 7

Κωδικοί εξόδου: 0 επιτυχία, 1 λάθος χρήση, 2 σφάλμα ρυθμίσεων/σύνταξης,
3 αποτυχία ελέγχου (|z| > όριο, memory cap, αποτυχία βήματος pipeline)·
σφάλματα I/O του pipeline (workdir, αρχεία) -> 2.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import random
import sys
import time
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from algebra import (
    ParseError,
    SHUFFLE_ALGORITHMS,
    LinComb,
    ncp,
    parse_word,
    serialize,
    shuffle_counts_iterative,
    shuffle_counts_recursive,
    shuffle_iterative,
    shuffle_recursive,
)
from expectation import DEFAULT_TIME_SYMBOL, expect_expansion, expect_word
from expr_tree import to_sexpr
from main_pipeline import run_pipeline
from mc_oracle import (
    DEFAULT_STEPS,
    DEFAULT_SAMPLES,
    mc_expect_word,
    mc_solve_mean,
    mc_word_samples,
    samples_frame,
    solve_samples,
    z_score,
)
from model import UNBOUNDED_TEXT, ConfigError, UnboundSymbolError, load_run_config
from picard import load_qexpr, picard_direct, picard_q, save_qexpr
from pipeline_workers import (
    MemoryCapExceeded,
    MissingQError,
    PipelineError,
    PipelineIOError,
    StageConfig,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_VALIDATION = 3

Z_THRESHOLD = 4.0
BENCH_ALPHABET = (0, 1, 2)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Λάθη χρήσης -> κωδικός εξόδου 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"❌ {self.prog}: {message}\n")


def _max_length_arg(text: str) -> Optional[int]:
    if text == UNBOUNDED_TEXT:
        return None
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"αναμενόταν ακέραιος ή '{UNBOUNDED_TEXT}'")
    if value < 1:
        raise argparse.ArgumentTypeError("πρέπει να είναι >= 1")
    return value


def _binding_arg(text: str):
    name, sep, value = text.partition("=")
    if not sep or not name:
        raise argparse.ArgumentTypeError(f"αναμενόταν όνομα=τιμή, βρέθηκε '{text}'")
    try:
        return name.strip(), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"μη αριθμητική τιμή για '{name}'")


def _resolve_seed(seed: Optional[int]) -> int:
    """Χωρίς --seed: σε CI είναι λάθος χρήσης, αλλιώς seed από entropy (καταγράφεται)."""
    if seed is not None:
        return seed
    if os.environ.get("CI"):
        raise UsageError("το --seed είναι υποχρεωτικό όταν ορίζεται CI")
    seed = int(np.random.SeedSequence().entropy % (2 ** 63))
    print(f"⚠️  Δεν δόθηκε --seed· χρησιμοποιείται seed={seed}", file=sys.stderr)
    return seed


# ---------------------------------------------------------------------
# Υποεντολές
# ---------------------------------------------------------------------
def cmd_expand(args) -> int:
    run_cfg = load_run_config(args.config)
    R = args.picard_iterations or run_cfg.picard_iterations
    max_len = run_cfg.max_word_length if args.max_word_length is False else args.max_word_length
    output = Path(args.output) if args.output else run_cfg.output
    cfg = StageConfig.from_run_config(
        run_cfg,
        workers=args.workers,
        workdir=args.workdir,
        memory_term_cap=args.memory_term_cap,
        keep_intermediate=True if args.keep_intermediate else None,
    )
    cfg = dataclasses.replace(cfg, max_word_length=max_len)

    if args.method == "direct":
        started = time.perf_counter()
        expansion = picard_direct(run_cfg.model, R, max_len)
        output.parent.mkdir(parents=True, exist_ok=True)
        output.write_text(serialize(expansion), encoding="utf-8", newline="\n")
        terms, longest = len(expansion), expansion.max_word_length()
        elapsed = time.perf_counter() - started
    else:
        qexpr = load_qexpr(args.qexpr) if args.qexpr else None
        result = run_pipeline(run_cfg.model, R, cfg, output, qexpr=qexpr,
                              verbose=not args.quiet)
        terms, longest, elapsed = result.terms, result.max_word_length, result.elapsed

    print(f"✅ Όροι: {terms}")
    print(f"📏 Μέγιστο μήκος λέξης: {longest}")
    print(f"⏱️  Χρόνος: {elapsed:.2f}s")
    print(f"💾 Αρχείο: {output}")
    return EXIT_OK


def cmd_expect(args) -> int:
    poly = expect_expansion(Path(args.expansion), time_letter=args.time_letter)
    print(poly.to_text(args.time_symbol))
    return EXIT_OK


def _two_words(args) -> tuple:
    return parse_word(args.word_a), parse_word(args.word_b)


def cmd_shuffle(args) -> int:
    a, b = _two_words(args)
    fn = shuffle_recursive if args.algo == "recursive" else shuffle_iterative
    sys.stdout.write(serialize(fn(a, b)))
    return EXIT_OK


def cmd_ncp(args) -> int:
    a, b = _two_words(args)
    sys.stdout.write(serialize(ncp(LinComb.from_word(a), LinComb.from_word(b))))
    return EXIT_OK


def cmd_picard_q(args) -> int:
    expr = picard_q(args.R, args.q)
    if args.output:
        save_qexpr(expr, args.output)
        print(f"💾 Αποθηκεύτηκε: {args.output}", file=sys.stderr)
    else:
        print(to_sexpr(expr))
    return EXIT_OK


def bench_pairs(total_length: int, trials: int, rng: random.Random) -> List[tuple]:
    """Τυχαία ζεύγη μη κενών λέξεων με συνολικό μήκος total_length."""
    pairs = []
    for _ in range(trials):
        split = rng.randint(1, total_length - 1)
        word = tuple(rng.choice(BENCH_ALPHABET) for _ in range(total_length))
        pairs.append((word[:split], word[split:]))
    return pairs


def bench_shuffle(max_length: int, trials: int, seed: int, min_length: int = 2) -> pd.DataFrame:
    """Μέσος χρόνος ανά αλγόριθμο και λόγος recursive/iterative ανά συνολικό μήκος."""
    rng = random.Random(seed)
    rows = []
    for n in range(min_length, max_length + 1):
        pairs = bench_pairs(n, trials, rng)
        timings = {}
        for name in ("recursive", "iterative"):
            started = time.perf_counter()
            for a, b in pairs:
                if name == "recursive":
                    shuffle_counts_recursive(a, b)
                else:
                    shuffle_counts_iterative(a, b, cached=False)
            timings[name] = (time.perf_counter() - started) / trials
        rows.append({
            "total_length": n,
            "trials": trials,
            "recursive_s": timings["recursive"],
            "iterative_s": timings["iterative"],
            "ratio": timings["recursive"] / timings["iterative"] if timings["iterative"] else float("nan"),
        })
    return pd.DataFrame(rows)


def cmd_bench_shuffle(args) -> int:
    if args.trials < 1:
        raise UsageError("--trials πρέπει να είναι >= 1")
    if args.min_length < 2 or args.max_length < args.min_length:
        raise UsageError("--max-length πρέπει να είναι >= --min-length >= 2")
    seed = _resolve_seed(args.seed)
    table = bench_shuffle(args.max_length, args.trials, seed, args.min_length)
    text = table.to_csv(index=False, lineterminator="\n")
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8", newline="\n")
        print(f"💾 Αποθηκεύτηκε: {args.output}", file=sys.stderr)
    sys.stdout.write(text)
    return EXIT_OK


def _collect_bindings(config_bindings: Dict[str, float], extra: Sequence) -> Dict[str, float]:
    out = dict(config_bindings)
    out.update(dict(extra or []))
    return out


def cmd_mc_check(args) -> int:
    seed = _resolve_seed(args.seed)
    rows: List[dict] = []

    if args.word is not None:
        word = parse_word(args.word)
        em = expect_word(word, args.time_letter)
        exact = float(em.value(args.T)) if em is not None else 0.0
        estimate, stderr = mc_expect_word(word, args.T, args.steps, args.samples, seed,
                                          args.time_letter)
        rows.append({"target": f"J[{args.word}]", "estimate": estimate, "stderr": stderr,
                     "exact": exact, "z": z_score(estimate, stderr, exact)})
        if args.csv:
            values = mc_word_samples(word, args.T, args.steps, args.samples, seed,
                                     args.time_letter)
            samples_frame(values, "value").to_csv(args.csv, index=False, lineterminator="\n")
    else:
        if not args.config:
            raise UsageError("το --full χρειάζεται --config")
        run_cfg = load_run_config(args.config)
        model = run_cfg.model
        if model.time_driver is None:
            raise ConfigError("Το --full χρειάζεται driver χρόνου", "time_driver")
        bindings = _collect_bindings(run_cfg.bindings, args.bind)
        R = args.picard_iterations or run_cfg.picard_iterations
        expansion = picard_direct(model, R, run_cfg.max_word_length)
        poly = expect_expansion(expansion, time_letter=model.time_driver)
        exact = poly.evaluate(args.T, bindings)
        estimate, stderr = mc_solve_mean(model, bindings, args.T, args.steps, args.samples, seed)
        rows.append({"target": f"Y_T - y0 (R={R})", "estimate": estimate, "stderr": stderr,
                     "exact": exact, "z": z_score(estimate, stderr, exact)})
        if args.csv:
            values = solve_samples(model, bindings, args.T, args.steps, args.samples, seed)
            samples_frame(values, "y_minus_y0").to_csv(args.csv, index=False, lineterminator="\n")

    report = pd.DataFrame(rows, columns=["target", "estimate", "stderr", "exact", "z"])
    print(report.to_string(index=False))
    worst = float(report["z"].max())
    if worst > args.threshold:
        print(f"❌ |z| = {worst:.2f} > {args.threshold}", file=sys.stderr)
        return EXIT_VALIDATION
    print(f"✅ |z| = {worst:.2f} <= {args.threshold}", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="cli.py",
                 description="Στοχαστικά αναπτύγματα Taylor μέσω shuffle άλγεβρας.")
    ap.add_argument("--verbose", action="store_true", help="Logging σε επίπεδο INFO.")
    ap.add_argument("--debug", action="store_true", help="Logging σε επίπεδο DEBUG.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("expand", help="Ανάπτυξη μοντέλου σε επαναλαμβανόμενα ολοκληρώματα.")
    p.add_argument("config", help="JSON αρχείο μοντέλου.")
    p.add_argument("--workers", type=int, default=None, help="Πλήθος workers (>= 1).")
    p.add_argument("--workdir", default=None, help="Κατάλογος ενδιάμεσων αρχείων.")
    p.add_argument("--max-word-length", type=_max_length_arg, default=False,
                   help=f"Μέγιστο μήκος λέξης ή '{UNBOUNDED_TEXT}'.")
    p.add_argument("--memory-term-cap", type=int, default=None,
                   help="Μέγιστοι ταυτόχρονοι όροι ανά εγγραφή.")
    p.add_argument("--keep-intermediate", action="store_true",
                   help="Διατήρηση ενδιάμεσων αρχείων στο workdir.")
    p.add_argument("--picard-iterations", type=int, default=None, help="Αντικαθιστά το R.")
    p.add_argument("--output", default=None, help="Αρχείο ανάπτυξης.")
    p.add_argument("--method", choices=("pipeline", "direct"), default="pipeline",
                   help="pipeline (εκτός μνήμης) ή direct (Picard στη μνήμη).")
    p.add_argument("--qexpr", default=None, help="Αποθηκευμένη έκφραση από το picard-q.")
    p.add_argument("--quiet", action="store_true", help="Χωρίς μηνύματα προόδου.")
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("expect", help="Αναμενόμενη τιμή αρχείου ανάπτυξης.")
    p.add_argument("expansion", help="Αρχείο ανάπτυξης.")
    p.add_argument("--time-symbol", default=DEFAULT_TIME_SYMBOL, help="Σύμβολο χρόνου.")
    p.add_argument("--time-letter", type=int, default=0, help="Γράμμα του χρόνου.")
    p.set_defaults(func=cmd_expect)

    for name, func, help_text in (("shuffle", cmd_shuffle, "Shuffle γινόμενο δύο λέξεων."),
                                  ("ncp", cmd_ncp, "Γινόμενο ▷ δύο λέξεων.")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("word_a", help="Λέξη, π.χ. 0,1,0 (κενό για την κενή λέξη).")
        p.add_argument("word_b", help="Λέξη, π.χ. 1,1.")
        if name == "shuffle":
            p.add_argument("--algo", choices=tuple(SHUFFLE_ALGORITHMS), default="iterative")
        p.set_defaults(func=func)

    p = sub.add_parser("picard-q", help="Συμπαγής έκφραση Picard (ανεξάρτητη μοντέλου).")
    p.add_argument("R", type=int, help="Επαναλήψεις (>= 1).")
    p.add_argument("q", type=int, help="Μέγιστος βαθμός vector fields.")
    p.add_argument("--output", default=None, help="Αρχείο εξόδου.")
    p.set_defaults(func=cmd_picard_q)

    p = sub.add_parser("bench-shuffle", help="Σύγκριση χρόνου recursive/iterative (CSV).")
    p.add_argument("--max-length", type=int, default=12)
    p.add_argument("--min-length", type=int, default=2)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--output", default=None, help="Αρχείο CSV.")
    p.set_defaults(func=cmd_bench_shuffle)

    p = sub.add_parser("mc-check", help="Έλεγχος Monte-Carlo έναντι κλειστής μορφής.")
    target = p.add_mutually_exclusive_group(required=True)
    target.add_argument("--word", default=None, help="Λέξη, π.χ. 0,1,1,0,0.")
    target.add_argument("--full", action="store_true", help="Ολόκληρη ανάπτυξη vs αριθμητική λύση.")
    p.add_argument("--config", default=None, help="JSON μοντέλου (για --full).")
    p.add_argument("--bind", type=_binding_arg, action="append", default=[],
                   help="Τιμή παραμέτρου όνομα=τιμή (επαναλαμβανόμενο).")
    p.add_argument("--picard-iterations", type=int, default=None)
    p.add_argument("--T", type=float, default=1.0, help="Χρονικός ορίζοντας.")
    p.add_argument("--steps", type=int, default=DEFAULT_STEPS)
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--time-letter", type=int, default=0)
    p.add_argument("--threshold", type=float, default=Z_THRESHOLD, help="Όριο |z|.")
    p.add_argument("--csv", default=None, help="CSV με τις τιμές ανά δείγμα.")
    p.set_defaults(func=cmd_mc_check)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.DEBUG if args.debug else (logging.INFO if args.verbose else logging.WARNING)
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_USAGE
    except PipelineIOError as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (MemoryCapExceeded, PipelineError) as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ConfigError, ParseError, UnboundSymbolError, MissingQError) as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError) as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
