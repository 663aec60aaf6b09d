from __future__ import annotations

from math import exp

import numpy as np
import pytest

from algebra import UnboundSymbolError, shuffle_recursive
from conftest import lc, poly
from expectation import expect_expansion, expect_word
from mc_oracle import (
    evaluate_expansion_numeric,
    iterated_integral_numeric,
    mc_expect_word,
    mc_solve_mean,
    numeric_coefficients,
    samples_frame,
    simulate_paths,
    solve_samples,
    stratonovich_solve,
    z_score,
)
from model import Model
from picard import picard_direct


def test_time_double_integral_is_exact() -> None:
    paths = simulate_paths(2.0, 64, 3, seed=1, letters=(0, 1))
    assert np.allclose(iterated_integral_numeric(paths, (0, 0)), 2.0)
    assert np.allclose(iterated_integral_numeric(paths, ()), 1.0)


def test_single_brownian_letter_is_path_value() -> None:
    paths = simulate_paths(1.0, 128, 5, seed=2, letters=(1,))
    assert np.allclose(iterated_integral_numeric(paths, (1,)), paths.values(1)[:, -1])
    assert np.allclose(iterated_integral_numeric(paths, (1, 1)),
                       0.5 * paths.values(1)[:, -1] ** 2)


def test_pure_time_words_are_exact() -> None:
    est, se = mc_expect_word((0, 0, 0), T=2.0)
    assert (est, se) == (pytest.approx(8 / 6), 0.0)
    est, se = mc_expect_word((0,), T=0.3)
    assert (est, se) == (pytest.approx(0.3), 0.0)


def test_reproducible_and_batch_independent() -> None:
    first = mc_expect_word((1, 1), steps=64, samples=300, seed=5, batch=300)
    second = mc_expect_word((1, 1), steps=64, samples=300, seed=5, batch=300)
    batched = mc_expect_word((1, 1), steps=64, samples=300, seed=5, batch=70)
    assert first == second
    assert first == pytest.approx(batched)
    assert mc_expect_word((1, 1), steps=64, samples=300, seed=6) != first


def test_unknown_letter_and_bad_arguments() -> None:
    paths = simulate_paths(1.0, 8, 2, seed=0, letters=(1,))
    with pytest.raises(KeyError):
        paths.increment(2)
    with pytest.raises(ValueError):
        simulate_paths(0.0, 8, 2, seed=0, letters=(1,))
    with pytest.raises(ValueError):
        mc_expect_word((1,), samples=1)
    with pytest.raises(ValueError):
        paths.coarsen(3)


def test_coarsen_keeps_endpoints() -> None:
    paths = simulate_paths(1.0, 64, 4, seed=9, letters=(1, 2))
    coarse = paths.coarsen(8)
    assert coarse.steps == 8
    for letter in (1, 2):
        assert np.allclose(coarse.values(letter)[:, -1], paths.values(letter)[:, -1])


def test_numeric_shuffle_identity_converges() -> None:
    fine = simulate_paths(1.0, 2 ** 12, 10, seed=3, letters=(1, 2, 3), time_letter=None)

    def error(paths) -> float:
        lhs = iterated_integral_numeric(paths, (1,)) * iterated_integral_numeric(paths, (2, 3))
        rhs = sum(float(c.constant_value()) * iterated_integral_numeric(paths, w)
                  for w, c in shuffle_recursive((1,), (2, 3)).items())
        return float(np.mean(np.abs(lhs - rhs)))

    errors = [error(fine.coarsen(f)) for f in (16, 4, 1)]
    assert errors[2] < errors[0]
    assert errors[2] < 0.05


def test_mc_word_estimates() -> None:
    est, se = mc_expect_word((1, 1), steps=128, samples=2000, seed=1)
    assert z_score(est, se, 0.5) <= 4
    est, se = mc_expect_word((1, 2), steps=128, samples=2000, seed=1)
    assert z_score(est, se, 0.0) <= 4


def test_z_score() -> None:
    assert z_score(1.0, 0.0, 1.0) == 0.0
    assert z_score(1.1, 0.0, 1.0) == float("inf")
    assert z_score(1.2, 0.1, 1.0) == pytest.approx(2.0)


def test_deterministic_ou_solution(ou) -> None:
    paths = simulate_paths(1.0, 1024, 2, seed=0, letters=ou.letters, time_letter=ou.time_driver)
    y = stratonovich_solve(ou, {"a": 1.0, "b": 0.0}, paths)
    assert np.allclose(y, 1 - exp(-1), atol=1e-3)


def test_zero_model_stays_put() -> None:
    model = Model(n_drivers=2, f=(poly("0"), poly("0")), y0=poly("3").coefficient(0))
    values = solve_samples(model, {}, T=1.0, steps=16, samples=4, seed=0)
    assert np.all(values == 0.0)


def test_unbound_symbol(ou) -> None:
    paths = simulate_paths(1.0, 8, 2, seed=0, letters=ou.letters, time_letter=ou.time_driver)
    with pytest.raises(UnboundSymbolError) as exc:
        stratonovich_solve(ou, {"a": 1.0}, paths)
    assert exc.value.symbol == "b"


def test_expansion_numeric_matches_termwise_sum() -> None:
    paths = simulate_paths(1.0, 256, 6, seed=4, letters=(0, 1, 2))
    x = lc(("a", (1,)), ("2", (1, 2)), ("-1", (2,)), ("1/2", (1, 2, 0)), ("b", ()))
    bindings = {"a": 3.0, "b": 0.25}
    expected = (3.0 * iterated_integral_numeric(paths, (1,))
                + 2.0 * iterated_integral_numeric(paths, (1, 2))
                - iterated_integral_numeric(paths, (2,))
                + 0.5 * iterated_integral_numeric(paths, (1, 2, 0))
                + 0.25)
    assert np.allclose(evaluate_expansion_numeric(x, paths, bindings), expected)


def test_expansion_tracks_solver_on_one_path(ou) -> None:
    bindings = {"a": 1.0, "b": 0.1}
    paths = simulate_paths(0.25, 512, 3, seed=8, letters=ou.letters, time_letter=ou.time_driver)
    expansion = evaluate_expansion_numeric(picard_direct(ou, 5), paths, bindings)
    solved = stratonovich_solve(ou, bindings, paths)
    assert np.allclose(expansion, solved, atol=1e-3)


def test_expansion_error_falls_with_iterations(ou) -> None:
    bindings = {"a": 1.0, "b": 0.1}
    paths = simulate_paths(0.5, 2048, 4, seed=12, letters=ou.letters, time_letter=ou.time_driver)
    y0, _ = numeric_coefficients(ou, bindings)
    target = stratonovich_solve(ou, bindings, paths) - y0
    errors = [float(np.max(np.abs(evaluate_expansion_numeric(picard_direct(ou, R), paths, bindings)
                                  - target)))
              for R in (2, 3, 4)]
    assert errors[0] > errors[1] > errors[2]
    assert errors[2] < 1e-3


def test_samples_frame() -> None:
    frame = samples_frame(np.array([0.5, 1.5]), "y")
    assert list(frame.columns) == ["sample", "y"]
    assert frame["y"].sum() == 2.0


MC_WORDS = [
    (0, 1, 1, 0, 0), (1, 1), (2, 2, 1, 1), (0, 1, 1), (1, 1, 0), (0, 0, 1, 1),
    (1, 1, 1, 1), (2, 2, 0), (1, 1, 2, 2, 0), (0, 2, 2, 0, 1, 1),
    (1,), (1, 2), (0, 1), (1, 1, 1), (1, 2, 1, 2),
]


@pytest.mark.slow
@pytest.mark.parametrize("word", MC_WORDS)
def test_mc_matches_closed_form(word) -> None:
    em = expect_word(word)
    exact = 0.0 if em is None else float(em.coefficient)
    est, se = mc_expect_word(word, T=1.0, steps=2 ** 10, samples=10_000, seed=2024)
    assert z_score(est, se, exact) <= 3


@pytest.mark.slow
def test_ou_mean_matches_expected_expansion(ou) -> None:
    bindings = {"a": 1.0, "b": 0.1}
    exact = expect_expansion(picard_direct(ou, 6), time_letter=ou.time_driver).evaluate(0.5, bindings)
    est, se = mc_solve_mean(ou, bindings, T=0.5, steps=2 ** 10, samples=10_000, seed=7)
    assert z_score(est, se, exact) <= 3
