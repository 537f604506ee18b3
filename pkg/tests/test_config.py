import json

import pytest

from svprolif.config import DEFAULT_SEED, load_config, parse_override, validate
from svprolif.errors import ConfigError


def write(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
    return p


def test_minimal_sweep_echoes_defaults(tmp_path):
    cfg = load_config(write(tmp_path, {"cells": [{"n": 10, "d": 30}]}), "sweep")
    assert cfg.seed == DEFAULT_SEED and cfg.workers == 1
    p = cfg.params
    assert p["trials"] == 100 and p["mode"] == "cond2" and p["audit"] is False
    assert p["solver"] == {"max_sweeps": 100_000, "tol_sv": 1e-6}
    cell = p["cells"][0]
    assert cell["ensemble"] == "independent" and cell["law"] == "gaussian"
    assert cell["labels"] == {"kind": "fixed"}
    assert cell["spectrum"] == {"kind": "isotropic", "d": 30}


def test_subcommand_from_file(tmp_path):
    cfg = load_config(write(tmp_path, {"subcommand": "bounds", "thm3": {"n": 5, "d": 9}}))
    assert cfg.subcommand == "bounds" and cfg.params["thm3"] == [{"n": 5, "d": 9}]


def test_d_below_n_names_the_cell(tmp_path):
    path = write(tmp_path, {"cells": [{"n": 5, "d": 9}, {"n": 10, "d": 5}]})
    with pytest.raises(ConfigError, match=r"/cells/1.*d=5 < n=10"):
        load_config(path, "sweep")


def test_unknown_key_suggestion(tmp_path):
    with pytest.raises(ConfigError, match=r"/solver/tol_kt.*did you mean 'tol_kkt'"):
        load_config(write(tmp_path, {"solver": {"tol_kt": 1e-9}}), "sweep")
    with pytest.raises(ConfigError, match=r"did you mean 'trials'"):
        load_config(write(tmp_path, {"trails": 5}), "sweep")


def test_malformed_json_names_key(tmp_path):
    path = write(tmp_path, '{"trials": 10, "mode": cond2}')
    with pytest.raises(ConfigError, match=r"after key 'mode'"):
        load_config(path, "sweep")


def test_missing_file():
    with pytest.raises(ConfigError, match="does not exist"):
        load_config("/nonexistent/cfg.json", "sweep")


@pytest.mark.parametrize("obj,pointer", [
    ({"trials": 0}, "/trials"),
    ({"mode": "qp"}, "/mode"),
    ({"seed": -1}, "/seed"),
    ({"solver": {"tol_sv": 2.0}}, "/solver/tol_sv"),
    ({"cells": [{"n": 5, "spectrum": {"kind": "spiked", "d": 10, "k": 10, "a": 0.5}}]},
     "/cells/0/spectrum/k"),
    ({"cells": [{"n": 5, "d": 10, "law": "cauchy"}]}, "/cells/0/law"),
    ({"cells": [{"n": 5, "d": 10, "labels": {"kind": "fixed", "values": [1, 0, 1, 1, 1]}}]},
     "/cells/0/labels/values"),
    ({"cells": [{"n": 5, "spectrum": {"kind": "bilevel", "p": 2, "q": 0.5, "r": 1.5}}]},
     "/cells/0/spectrum/r"),
])
def test_range_errors_use_json_pointers(tmp_path, obj, pointer):
    with pytest.raises(ConfigError, match="^" + pointer):
        load_config(write(tmp_path, obj), "sweep")


def test_overrides_apply_and_flags_win(tmp_path):
    path = write(tmp_path, {"trials": 10, "solver": {"tol_sv": 1e-5}})
    cfg = load_config(path, "sweep", [("trials", 20), ("solver.tol_kkt", 1e-9), ("trials", 30)])
    assert cfg.params["trials"] == 30
    assert cfg.params["solver"]["tol_kkt"] == 1e-9 and cfg.params["solver"]["tol_sv"] == 1e-5


def test_parse_override():
    assert parse_override("trials=5") == ("trials", 5)
    assert parse_override("mode=solver") == ("mode", "solver")
    assert parse_override('labels={"kind":"probit"}') == ("labels", {"kind": "probit"})
    with pytest.raises(ConfigError):
        parse_override("trials")


def test_grid_expansion():
    p = validate("sweep", {"grid": {"n": [10, 20], "d_over_n": [1, 2.5],
                                    "ensemble": ["independent", "haar"]}})
    assert len(p["cells"]) == 8
    assert {(c["n"], c["d"]) for c in p["cells"]} == {(10, 10), (10, 25), (20, 20), (20, 50)}


def test_bilevel_cell_infers_n():
    p = validate("sweep", {"cells": [{"n": 10, "spectrum": {"kind": "bilevel", "p": 2, "q": 0.5,
                                                             "r": 0.5}}]})
    assert p["cells"][0]["d"] == 100


def test_check_inline_data_validation():
    with pytest.raises(ConfigError, match="/data/y"):
        validate("check", {"data": {"Z": [[1, 0], [0, 1]], "y": [1, 2]}})
    with pytest.raises(ConfigError, match="/data/Z/1"):
        validate("check", {"data": {"Z": [[1, 0], [0]], "y": [1, 1]}})


def test_bounds_defaults_and_validation():
    assert validate("bounds", {}) == {"thm3": [{"n": 50, "d": 50}]}
    with pytest.raises(ConfigError, match="/thm3/0/d"):
        validate("bounds", {"thm3": [{"n": 10, "d": 5}]})


def test_figure1_needs_weights_for_glm_labels():
    with pytest.raises(ConfigError, match="/labels"):
        validate("figure1", {"labels": {"kind": "logistic"}})


def test_rerun_config_round_trip(tmp_path):
    cfg = load_config(write(tmp_path, {"cells": [{"n": 4, "d": 8}], "out": "x"}), "sweep",
                      [("trials", 3)])
    again = load_config(write(tmp_path, cfg.rerun_config(), "again.json"))
    assert again.params == cfg.params and again.seed == cfg.seed
