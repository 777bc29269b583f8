import csv
import json
import subprocess
import sys

import pytest

from floydlab.cli import run
from floydlab.system import parse_fas, validate

FILES = {
    "classical.fas": "period:\nlevel p=3 map=012\n",
    "fa4.fas": "period:\nlevel p=4 map=0112\n",
    "fa33.fas": "# alternating pair\nperiod:\nlevel p=3 map=011\nlevel p=3 map=112\n",
    "merge.fas": "preperiod:\nlevel p=2 map=11\nlevel p=2 map=11\nperiod:\nlevel p=4 map=0112\n",
    "broken.fas": "period:\nlevel p=3 map=01\n",
}


@pytest.fixture
def fx(tmp_path):
    for name, text in FILES.items():
        (tmp_path / name).write_text(text)
    return lambda name: str(tmp_path / name)


def call(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def test_classify_classical(capsys, fx):
    code, r = call(capsys, "classify", fx("classical.fas"))
    assert code == 0 and r["minimal"] is True and r["tame"] is True
    assert r["interval_fibre_class"] == "COUNTABLE"


def test_classify_fa4_witnesses(capsys, fx):
    code, r = call(capsys, "classify", fx("fa4.fas"))
    assert code == 0 and r["tame"] is False and r["lambda_infinite"] is True
    (a,) = r["case_witnesses"]["1"]["A"]
    assert (a["a0"], a["a1"], a["delta"]) == (2, 1, 2)


def test_validate(capsys, fx):
    code, r = call(capsys, "validate", fx("classical.fas"))
    assert code == 0 and r["valid"] and r["standing_assumption"]


def test_fibre_example(capsys, fx, tmp_path):
    plot = tmp_path / "plot.csv"
    code, r = call(capsys, "fibre", fx("fa4.fas"), "--alpha", "1", "--tail", "period",
                   "--depth", "8", "--plot-data", str(plot))
    assert code == 0 and r["fibre"]["interval"] == ["0/2^0", "1/2^0"]
    rows = list(csv.reader(plot.open()))
    assert rows[0] == ["alpha_prefix", "lo", "hi"] and len(rows) == 10  # depths 0..8


def test_orbit(capsys, fx):
    code, r = call(capsys, "orbit", fx("classical.fas"), "--alpha", "0", "--steps", "3", "--z", "1/2")
    assert code == 0 and [s["t"] for s in r["orbit"]] == [0, 1, 2, 3]
    assert r["z"] == "1/2^1"


def test_realising_example(capsys):
    code, r = call(capsys, "realising", "--seq", "01", "--seq", "1100", "--phi", "10", "--phi", "01")
    assert code == 0 and r["times"] == [4, 5]


def test_choiceverify(capsys):
    assert call(capsys, "choiceverify", "--seq", "01", "--m", "2", "--horizon", "64")[0] == 0
    code, r = call(capsys, "choiceverify", "--seq", "01", "--seq", "10", "--m", "1", "--horizon", "64")
    assert code == 2 and r["witness_phi"] == ["0", "0"]


def test_idemdemo_fa4(capsys, fx):
    code, r = call(capsys, "idemdemo", fx("fa4.fas"), "--case", "A", "--m", "2", "--labels", "0,1")
    assert code == 0
    c = r["collapse"]
    assert c["pass"] and c["target"]["threshold"] == "1/2^1"
    assert [m["interval"] for m in c["members"]] == [["5/2^4", "3/2^3"], ["5/2^3", "3/2^2"]]
    assert r["membership"]["pass"]


def test_idemdemo_fa33_identity_role(capsys, fx):
    code, r = call(capsys, "idemdemo", fx("fa33.fas"), "--m", "2")
    assert code == 0
    a_b, b = r["collapse"]["members"]
    assert a_b["interval"] == ["0/2^0", "1/2^2"] and b["role"] == "B2" and b["identity"]


def test_pushword(capsys, fx):
    code, r = call(capsys, "pushword", fx("fa4.fas"), "--a", "1/4", "--direction", "DOWN")
    assert code == 0 and r["push"]["j"] == 3
    assert all(iv == ["0/2^0", "1/2^3"] for iv in r["push"]["intervals"])


def test_idemdemo_normalizes_merge_example(capsys, fx):
    code, r = call(capsys, "idemdemo", fx("merge.fas"), "--m", "2")
    assert code == 0 and r["normalized"] is True


@pytest.mark.parametrize("argv,expected", [
    (("idemdemo", "classical.fas", "--m", "2"), 1),
    (("idemdemo", "fa4.fas", "--case", "B"), 1),
    (("idemdemo", "fa4.fas", "--m", "2", "--depth", "5"), 2),
    (("validate", "broken.fas"), 64),
    (("validate", "missing.fas"), 64),
    (("fibre", "fa4.fas", "--tail", "period"), 64),
    (("idemdemo", "fa4.fas", "--labels", "0,2"), 64),
    (("nonsense",), 64),
])
def test_exit_codes(capsys, fx, argv, expected):
    assert run([fx(a) if a.endswith(".fas") else a for a in argv]) == expected


def test_failure_report_is_json(capsys, fx):
    code, r = call(capsys, "idemdemo", fx("classical.fas"))
    assert code == 1 and r["reason"] == "NoAdmissibleTemplate"


def test_normalize_round_trip(capsys, fx, tmp_path):
    out = tmp_path / "norm.fas"
    code, r = call(capsys, "normalize", fx("merge.fas"), "-o", str(out))
    assert code == 0 and r["standing_assumption"]
    spec = parse_fas(out.read_text())
    assert validate(spec).standing_assumption
    assert parse_fas(r["spec_text"]) == spec
    code, again = call(capsys, "validate", str(out))
    assert code == 0 and again["standing_assumption"]


def test_output_is_deterministic(fx):
    argv = [sys.executable, "-m", "floydlab", "idemdemo", fx("fa4.fas"), "--m", "3"]
    first = subprocess.run(argv, capture_output=True, check=True).stdout
    second = subprocess.run(argv, capture_output=True, check=True).stdout
    assert first == second and json.loads(first)["collapse"]["pass"]
