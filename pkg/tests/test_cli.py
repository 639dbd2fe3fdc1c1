import argparse
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from canonsys import hamiltonian as ham
from canonsys.cli import parse_angle, parse_complex, run


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def call_json(*argv):
    code, out, err = call("--output", "json", *argv)
    assert code == 0, err
    doc = json.loads(out)
    assert doc["schema_version"] == 1
    return doc["result"]


@pytest.mark.parametrize(
    "text,value",
    [("0+1i", 1j), ("1.5-2i", 1.5 - 2j), ("i", 1j), ("-i", -1j), ("3", 3), ("2.5i", 2.5j), ("-1e-3+4i", -1e-3 + 4j)],
)
def test_parse_complex(text, value):
    assert parse_complex(text) == value


@pytest.mark.parametrize("text,value", [("pi", math.pi), ("pi/2", math.pi / 2), ("3pi/4", 0.75 * math.pi), ("1.2", 1.2)])
def test_parse_angle(text, value):
    assert parse_angle(text) == pytest.approx(value, rel=1e-15)


@pytest.mark.parametrize("text", ["0", "4", "2pi", "abc"])
def test_parse_angle_rejects(text):
    with pytest.raises(argparse.ArgumentTypeError):
        parse_angle(text)


def test_eigs_example():
    res = call_json("eigs", "--builtin", "identity", "--length", "1", "--alpha", "pi", "--beta", "pi", "--window", "-10", "10")
    np.testing.assert_allclose(res["eigenvalues"], np.pi * np.arange(-3, 4), atol=1e-10)


def test_mfunc_example():
    res = call_json("mfunc", "--builtin", "identity", "--length", "20", "--beta", "pi", "--z", "0+1i")
    assert abs(complex(res["m"]["re"], res["m"]["im"]) - 1j) <= 1e-10


def test_validate_bad_file(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"cells": [{"length": 1, "h": [1, 2, 1]}]}))
    code, out, err = call("validate", "--file", str(p))
    assert code == 1
    assert "not positive semi-definite" in err


def test_validate_good_file(tmp_path):
    p = tmp_path / "good.json"
    ham.save(ham.builtin("random-psd", seed=1), p)
    res = call_json("validate", "--file", str(p))
    assert res["ok"] is True


def test_malformed_file_is_domain_error(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{")
    code, _, err = call("validate", "--file", str(p))
    assert code == 1 and "error" in err


def test_unknown_flag_is_usage_error(capsys):
    code, _, _ = call("eigs", "--builtin", "identity", "--window", "0", "1", "--bogus")
    assert code == 2
    assert "usage" in capsys.readouterr().err


def test_missing_command():
    code, _, err = call()
    assert code == 2 and "usage" in err


def test_denominator_zero_exit_1():
    code, _, err = call("mfunc", "--builtin", "identity", "--z", str(math.pi / 2))
    assert code == 1 and "error" in err


def test_normalize_writes_file(tmp_path):
    out = tmp_path / "n.json"
    res = call_json("normalize", "--builtin", "half-identity", "--length", "2", "--out", str(out))
    assert res["total_length"] == pytest.approx(2.0)
    assert ham.is_trace_normalized(ham.load(out))


def test_builtin_output_loads(tmp_path):
    res = call_json("builtin", "--builtin", "random-psd", "--seed", "3", "--count", "4")
    f = ham.loads(json.dumps({"cells": res["cells"]}))
    assert f.cells == ham.builtin("random-psd", seed=3, count=4).cells


def test_classify():
    res = call_json("classify", "--builtin", "exp-decay", "--length", "40", "--count", "400", "--z", "i")
    assert res["verdict"] == "LimitCircle" and res["defect_estimate"] == 2


def test_resolvent_check_and_swap():
    assert call_json("resolvent-check", "--builtin", "identity")["residual"] < 1e-5
    assert call_json("resolvent-check", "--builtin", "identity", "--swap")["residual"] > 0.1


def test_hs_compare():
    res = call_json("hs-compare", "--builtin", "identity", "--k", "5")
    assert res["counts_match"] and res["max_gap"] <= 1e-3


def test_relation_demo():
    res = call_json("relation-demo")
    assert res["span_e1_e2"]["selfadjoint_extension_dims"] == [2]
    assert res["multivalued"]["spectrum"] == []


def test_show_defaults():
    code, out, _ = call("--show-defaults")
    assert code == 0 and "tol_psd" in out
    doc = json.loads(call("--output", "json", "--show-defaults")[1])
    assert doc["result"]["grid_points"] == 2048


def test_csv_rows():
    code, out, _ = call("eigs", "--builtin", "identity", "--window", "-4", "4", "--output", "csv")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "index,eigenvalue,residual" and len(lines) == 4


def _numbers(obj):
    if isinstance(obj, float):
        yield obj
    elif isinstance(obj, dict):
        for v in obj.values():
            yield from _numbers(v)
    elif isinstance(obj, list):
        for v in obj:
            yield from _numbers(v)


def test_json_numbers_round_trip_and_determinism():
    argv = ("--output", "json", "eigs", "--builtin", "random-psd", "--seed", "4", "--window", "-5", "5")
    a, b = call(*argv)[1], call(*argv)[1]
    assert a == b
    for x in _numbers(json.loads(a)):
        assert float(f"{x:.17g}") == x


def test_module_entry_point():
    p = subprocess.run(
        [sys.executable, "-m", "canonsys", "--output", "json", "mfunc", "--builtin", "identity", "--z", "1i"],
        capture_output=True,
        text=True,
    )
    assert p.returncode == 0
    assert json.loads(p.stdout)["command"] == "mfunc"
