from __future__ import annotations

from pathlib import Path

import pytest

from algebra import LinComb, truncate
from conftest import lc
from expr_tree import Ncp, Pow, QAtom, Sum
from model import QTable, build_q_table
from picard import load_qexpr, picard_direct, picard_q, qexpr_eval_in_memory, save_qexpr

Q0, Q1, Q2 = QAtom(0), QAtom(1), QAtom(2)


def test_picard_q_structure() -> None:
    assert picard_q(1, 2) == Q0
    y2 = Sum((Q0, Ncp(Q0, Q1), Ncp(Pow(Q0, 2), Q2)))
    assert picard_q(2, 2) == y2
    assert picard_q(3, 2) == Sum((Q0, Ncp(y2, Q1), Ncp(Pow(y2, 2), Q2)))
    assert picard_q(2, 0) == Q0


def test_picard_q_shares_subtrees() -> None:
    y3 = picard_q(3, 2)
    assert y3.children[1].left is y3.children[2].left.base


def test_picard_q_rejects_bad_arguments() -> None:
    with pytest.raises(ValueError):
        picard_q(0, 2)
    with pytest.raises(ValueError):
        picard_q(2, -1)


def test_ou_iterates(ou) -> None:
    assert picard_direct(ou, 0) == LinComb.zero()
    assert picard_direct(ou, 1) == lc(("a", (1,)), ("b", (2,)))
    assert picard_direct(ou, 2) == lc(("a", (1,)), ("-a^2", (1, 1)), ("-a*b", (2, 1)), ("b", (2,)))
    assert picard_direct(ou, 3) == lc(
        ("a", (1,)), ("-a^2", (1, 1)), ("a^3", (1, 1, 1)),
        ("a^2*b", (2, 1, 1)), ("-a*b", (2, 1)), ("b", (2,)),
    )


def test_truncated_iterates(ou) -> None:
    for L in (1, 2, 3):
        assert picard_direct(ou, 3, L) == truncate(picard_direct(ou, 3), L)


def test_picard_q_with_quadratic_table(quadratic) -> None:
    qt = build_q_table(quadratic)
    assert qexpr_eval_in_memory(picard_q(1, 2), qt) == qt[0]
    assert qexpr_eval_in_memory(picard_q(2, 2), qt) == lc(
        ("a", (0,)), ("-a^2", (0, 0)), ("2*a^2*b", (0, 0, 1)))


@pytest.mark.parametrize("R", [1, 2, 3, 4])
@pytest.mark.parametrize("L", [3, 6, None])
def test_q_form_matches_direct_ou(ou, R: int, L) -> None:
    qt = build_q_table(ou)
    assert qexpr_eval_in_memory(picard_q(R, ou.q), qt, L) == picard_direct(ou, R, L)


@pytest.mark.parametrize("R", [1, 2, 3])
@pytest.mark.parametrize("L", [3, 6, None])
def test_q_form_matches_direct_quadratic(quadratic, quadratic_y0, R: int, L) -> None:
    for model in (quadratic, quadratic_y0):
        qt = build_q_table(model)
        assert qexpr_eval_in_memory(picard_q(R, model.q), qt, L) == picard_direct(model, R, L)


@pytest.mark.parametrize("L", [3, 6])
def test_q_form_matches_direct_quadratic_r4_truncated(quadratic, quadratic_y0, L: int) -> None:
    for model in (quadratic, quadratic_y0):
        qt = build_q_table(model)
        assert qexpr_eval_in_memory(picard_q(4, 2), qt, L) == picard_direct(model, 4, L)


@pytest.mark.slow
def test_q_form_matches_direct_quadratic_r4_unbounded(quadratic, quadratic_y0) -> None:
    for model, words in ((quadratic, 676), (quadratic_y0, 10_710)):
        direct = picard_direct(model, 4)
        assert len(direct) == words
        assert qexpr_eval_in_memory(picard_q(4, 2), build_q_table(model)) == direct


def test_missing_q_entry() -> None:
    qt = QTable({0: lc(("a", (0,)))})
    with pytest.raises(KeyError):
        qexpr_eval_in_memory(picard_q(2, 1), qt)


def test_words_grow_monotonically(ou, quadratic) -> None:
    for model in (ou, quadratic):
        prev = set()
        for R in range(1, 5):
            words = set(picard_direct(model, R, 6).terms)
            assert prev <= words
            prev = words


def test_qexpr_file_round_trip(tmp_path: Path) -> None:
    e = picard_q(3, 2)
    path = save_qexpr(e, tmp_path / "nested" / "y3.qexpr")
    assert path.read_text(encoding="utf-8").count("\n") == 1
    assert load_qexpr(path) == e


def test_load_qexpr_rejects_multiple_lines(tmp_path: Path) -> None:
    path = tmp_path / "two.qexpr"
    path.write_text("Q0\nQ1\n", encoding="utf-8")
    with pytest.raises(ValueError):
        load_qexpr(path)
