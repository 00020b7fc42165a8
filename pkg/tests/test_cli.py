import hashlib
import json
import math
from pathlib import Path

import pytest

jsonschema = pytest.importorskip("jsonschema")

from nodalfields.cli import main, parse_measure_spec
from nodalfields.measures import load_measure, preset, weak_star_distance

SCHEMA = json.loads(
    (Path(__file__).resolve().parents[1] / "src" / "nodalfields" / "schemas"
     / "report.schema.json").read_text())


def validate(payload):
    jsonschema.validate(payload, SCHEMA)


def sha(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def test_parse_measure_spec():
    assert parse_measure_spec("uniform:64").n_atoms == 64
    assert parse_measure_spec("cilleruelo").n_atoms == 4
    arc = parse_measure_spec("arc:0.3,16")
    assert arc.n_atoms == 16
    assert parse_measure_spec("two_point:0.5").n_atoms == 2
    assert parse_measure_spec("mu_n:65").n_atoms == 16


def test_portrait_outputs_and_determinism(tmp_path):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    args = ["portrait", "--preset", "cilleruelo", "--kappa", "one",
            "--R", "12", "--seed", "7"]
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    assert sha(str(out1) + ".svg") == sha(str(out2) + ".svg")
    assert sha(str(out1) + ".csv") == sha(str(out2) + ".csv")
    svg = Path(str(out1) + ".svg").read_text()
    assert svg.count(" Z") == 0  # axis-measure samples have no closed loops
    header = Path(str(out1) + ".csv").read_text().splitlines()[0]
    assert header.startswith("#") and "seed=7" in header and "kappa=one" in header


def test_portrait_section7_has_loops(tmp_path):
    out = tmp_path / "s7"
    assert main(["portrait", "--section7", "f", "--R", "15",
                 "--out", str(out)]) == 0
    svg = Path(str(out) + ".svg").read_text()
    assert svg.count(" Z") > 0


def test_portrait_torus_with_ppm(tmp_path):
    out = tmp_path / "t"
    assert main(["portrait", "--torus-n", "65", "--seed", "1", "--ppm",
                 "--out", str(out)]) == 0
    data = Path(str(out) + ".ppm").read_bytes()
    assert data.startswith(b"P6\n")


def test_cns_report_schema_and_determinism(tmp_path):
    out1 = tmp_path / "r1"
    out2 = tmp_path / "r2"
    args = ["cns", "--preset", "uniform:16", "--schedule", "4,6,8",
            "--M", "12", "--seed", "3"]
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    assert sha(str(out1) + ".json") == sha(str(out2) + ".json")
    payload = json.loads(Path(str(out1) + ".json").read_text())
    validate(payload)
    csv_lines = Path(str(out1) + ".csv").read_text().splitlines()
    assert csv_lines[0] == "R,mean,stderr,M,h"
    assert len(csv_lines) == 4


def test_dns_report(tmp_path):
    out = tmp_path / "d"
    assert main(["dns", "--preset", "two_point:0.0", "--R", "6", "--M", "10",
                 "--cns", "0.0", "--seed", "2", "--out", str(out)]) == 0
    payload = json.loads(Path(str(out) + ".json").read_text())
    validate(payload)
    assert payload["dns_estimate"] == 0.0


def test_torus_report(tmp_path):
    out = tmp_path / "t"
    assert main(["torus", "--n", "65", "--M", "10", "--planar-M", "10",
                 "--seed", "2", "--out", str(out)]) == 0
    payload = json.loads(Path(str(out) + ".json").read_text())
    validate(payload)
    assert payload["n"] == 65


def test_lattice_report(tmp_path):
    out = tmp_path / "lat"
    assert main(["lattice", "--n", "65", "--out", str(out)]) == 0
    payload = json.loads(Path(str(out) + ".json").read_text())
    validate(payload)
    assert payload["r2"] == 16
    assert len(payload["points"]) == 16
    assert "mu_n" in payload


def test_flips_report(tmp_path):
    out = tmp_path / "f"
    assert main(["flips", "--preset", "cilleruelo", "--kappa", "one",
                 "--diagonal", "--out", str(out)]) == 0
    payload = json.loads(Path(str(out) + ".json").read_text())
    validate(payload)
    assert payload["closed_form"] == pytest.approx(0.0, abs=1e-12)

    out2 = tmp_path / "f2"
    assert main(["flips", "--preset", "cilleruelo", "--kappa", "one",
                 "--axis", "1", "--empirical", "--R", "8", "--M", "10",
                 "--out", str(out2)]) == 0
    payload = json.loads(Path(str(out2) + ".json").read_text())
    validate(payload)
    want = 1 / (2 * math.pi ** 2)
    assert payload["closed_form"] == pytest.approx(want, abs=1e-12)
    emp = payload["empirical"]
    assert abs(emp["density"] - want) < 4 * emp["density_stderr"] + 0.02


def test_stability_report(tmp_path):
    out = tmp_path / "s"
    assert main(["stability", "--preset", "uniform:32", "--preset2",
                 "uniform:32", "--R", "5", "--M", "5", "--beta", "0.05",
                 "--seed", "4", "--out", str(out)]) == 0
    payload = json.loads(Path(str(out) + ".json").read_text())
    validate(payload)
    assert payload["sandwich"]["violations"] == 0


def test_measure_roundtrip(tmp_path):
    out = tmp_path / "m.json"
    assert main(["measure", "--preset", "uniform:8", "--out", str(out)]) == 0
    rho = load_measure(out)
    assert weak_star_distance(rho, preset("uniform_circle", K=8)) == 0.0


def test_exit_codes(tmp_path):
    assert main(["flips", "--preset", "nonsense"]) == 2
    assert main(["cns", "--preset", "uniform:3"]) == 2      # K too small
    assert main(["lattice", "--n", "65",
                 "--out", "/nonexistent_dir/x"]) == 3
    assert main(["lattice"]) == 2                           # missing required flag
    assert main(["--version"]) == 0
