from __future__ import annotations

import json
import random
from fractions import Fraction
from pathlib import Path

import pytest

from algebra import Coefficient, parse_coefficient
from conftest import CONFIG_DIR, lc, poly
from model import (
    ConfigError,
    Model,
    QTable,
    StatePolynomial,
    build_q_table,
    ito_to_stratonovich,
    load_run_config,
    parse_run_config,
    taylor_recenter,
)


def _c(text: str) -> Coefficient:
    return parse_coefficient(text)


def test_taylor_recenter_examples() -> None:
    assert taylor_recenter(poly("a", "-a"), 0) == (_c("a"), _c("-a"))
    assert taylor_recenter(poly("0", "0", "b"), 0) == (_c("0"), _c("0"), _c("b"))
    assert taylor_recenter(poly("0", "0", "b"), _c("y0")) == (_c("b*y0^2"), _c("2*b*y0"), _c("b"))


def test_taylor_recenter_reconstructs_polynomial() -> None:
    rng = random.Random(3)
    shift = StatePolynomial.from_values([_c("-y0"), 1])  # y - y0
    for _ in range(20):
        degree = rng.randint(0, 6)
        p = StatePolynomial.from_values(
            Fraction(rng.randint(-5, 5), rng.randint(1, 3)) * _c(rng.choice(["1", "a", "b*a"]))
            for _ in range(degree + 1))
        g = taylor_recenter(p, _c("y0"))
        rebuilt = StatePolynomial()
        power = StatePolynomial.from_values([1])
        for g_k in g:
            rebuilt = rebuilt + power.scale(g_k)
            power = power * shift
        assert rebuilt == p


def test_q_table_quadratic_noise(quadratic, quadratic_y0) -> None:
    table = build_q_table(quadratic)
    assert table.q_of == {0: lc(("a", (0,))), 1: lc(("-a", (0,))), 2: lc(("b", (1,)))}

    table = build_q_table(quadratic_y0)
    assert table[0] == lc(("a - a*y0", (0,)), ("b*y0^2", (1,)))
    assert table[1] == lc(("-a", (0,)), ("2*b*y0", (1,)))
    assert table[2] == lc(("b", (1,)))


def test_q_table_ou(ou) -> None:
    table = build_q_table(ou)
    assert table.q_of == {0: lc(("a", (1,)), ("b", (2,))), 1: lc(("-a", (1,)))}


def test_q_table_words_have_length_one(quadratic_y0) -> None:
    table = build_q_table(quadratic_y0)
    assert all(len(w) == 1 for lcomb in table.q_of.values() for w in lcomb.terms)
    for i, f in enumerate(quadratic_y0.f):
        assert table[0].coefficient((i,)) == f.evaluate(quadratic_y0.y0)


def test_q_table_rejects_long_words() -> None:
    with pytest.raises(ValueError):
        QTable({0: lc(("a", (0, 1)))})


def test_ito_to_stratonovich() -> None:
    assert ito_to_stratonovich(poly("a", "-a"), poly("b")) == poly("a", "-a")
    assert ito_to_stratonovich(poly("0"), poly("0", "1")) == poly("0", "-1/2")
    assert ito_to_stratonovich(poly("0", "m"), poly("0", "s")) == poly("0", "m - 1/2*s^2")


def test_model_validation() -> None:
    with pytest.raises(ConfigError):
        Model(n_drivers=2, f=(poly("a"),))
    with pytest.raises(ConfigError):
        Model(n_drivers=1, f=(poly("a"),), time_driver=3)


def test_model_degree_and_symbols(quadratic_y0) -> None:
    assert quadratic_y0.q == 2
    assert quadratic_y0.symbols() == ("a", "b", "y0")


def test_load_fixture_configs() -> None:
    ou = load_run_config(CONFIG_DIR / "ou.json")
    assert ou.model.letters == (1, 2)
    assert ou.model.time_driver == 1
    assert ou.picard_iterations == 3
    assert ou.max_word_length is None
    assert ou.bindings == {"a": 1.0, "b": 0.1}

    quad = load_run_config(CONFIG_DIR / "quadratic_noise_y0.json")
    assert quad.model.y0 == _c("y0")
    assert quad.memory_term_cap == 2000
    assert quad.workers == 4


def _write(tmp_path: Path, doc: dict) -> Path:
    path = tmp_path / "model.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


def test_config_errors_name_the_key(tmp_path: Path) -> None:
    base = {"drivers": 2, "f": [["a"], ["b"]], "y0": "0", "picard_iterations": 2}
    assert load_run_config(_write(tmp_path, base)).max_word_length is None

    for key, value in [("drivers", 0), ("f", "a"), ("y0", "a +"),
                       ("max_word_length", "many"), ("workers", 0), ("calculus", "levy")]:
        doc = dict(base, **{key: value})
        with pytest.raises(ConfigError) as exc:
            load_run_config(_write(tmp_path, doc))
        assert exc.value.key == key

    doc = dict(base)
    del doc["picard_iterations"]
    with pytest.raises(ConfigError) as exc:
        load_run_config(_write(tmp_path, doc))
    assert exc.value.key == "picard_iterations"


def test_config_invalid_json(tmp_path: Path) -> None:
    path = tmp_path / "broken.json"
    path.write_text("{ not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_run_config(path)
    with pytest.raises(ConfigError):
        load_run_config(tmp_path / "missing.json")


def test_ito_config_corrects_time_drift() -> None:
    doc = {"drivers": 2, "time_driver": 0, "calculus": "ito",
           "f": [["0", "m"], ["0", "s"]], "y0": "1", "picard_iterations": 2}
    cfg = parse_run_config(doc)
    assert cfg.model.f[0] == poly("0", "m - 1/2*s^2")
    assert cfg.model.f[1] == poly("0", "s")


def test_absent_time_driver_means_none() -> None:
    doc = {"drivers": 2, "first_letter": 1, "f": [["a"], ["b"]], "y0": "0",
           "picard_iterations": 1}
    cfg = parse_run_config(doc)
    assert cfg.model.time_driver is None
    assert cfg.model.letters == (1, 2)
    assert Model(n_drivers=1, f=(poly("a"),)).time_driver is None

    with pytest.raises(ConfigError) as exc:
        parse_run_config(dict(doc, calculus="ito"))
    assert exc.value.key == "time_driver"


def test_relative_paths_follow_working_directory(tmp_path: Path, monkeypatch) -> None:
    monkeypatch.chdir(tmp_path)
    cfg = load_run_config(CONFIG_DIR / "ou.json")
    assert cfg.workdir == Path("work/ou")
    assert cfg.output == Path("out/ou_expansion.txt")
    assert cfg.workdir.resolve() == (tmp_path / "work" / "ou").resolve()
