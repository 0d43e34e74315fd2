import json

import pytest

from bghash import BalancedModel, load, save
from bghash.cli import main

from helpers import mild_mixture, point_for_code


@pytest.fixture
def identity_model_file(tmp_path):
    path = tmp_path / "ident.bgh"
    save(BalancedModel.identity(8), path)
    return str(path)


@pytest.fixture
def uniform_csv(tmp_path):
    path = tmp_path / "uniform.csv"
    spec_file = tmp_path / "spec.json"
    spec_file.write_text(json.dumps({"seed": 5, "uniform_floor": 1.0, "components": []}))
    assert main(["synth", "--spec", str(spec_file), "--n", "5000", "--output", str(path)]) == 0
    return str(path)


def test_bound_output(capsys):
    assert main(["bound", "--q", "5", "--n", "100000", "--a", "0.6666666667"]) == 0
    out = capsys.readouterr().out
    assert "threshold\t3.3333" in out
    assert "probability\t0.9902" in out


def test_bound_large_n_discrepancy_case(capsys):
    assert main(["bound", "--q", "10", "--n", "100000000", "--a", "0.6666666667"]) == 0
    assert "probability\t0.9889" in capsys.readouterr().out


def test_usage_errors_exit_2(capsys):
    assert main([]) == 2
    assert main(["bound", "--q", "5"]) == 2
    assert main(["nonsense"]) == 2
    assert main(["bound", "--q", "5", "--n", "10", "--a", "0.5", "--bogus"]) == 2


def test_help_exits_0():
    assert main(["--help"]) == 0


def test_missing_model_exits_1(capsys):
    code = main(["encode", "--model", "missing.bgh", "--lat", "1", "--lon", "2"])
    assert code == 1
    assert "missing.bgh" in capsys.readouterr().err


def test_encode_base32_and_bits(identity_model_file, capsys):
    assert main(["encode", "--model", identity_model_file, "--lat", "57.64911", "--lon", "10.40744"]) == 0
    out = capsys.readouterr().out.strip()
    assert out == "u4pruydq"  # default 40 bits -> 8 base-32 chars

    assert main(
        ["encode", "--model", identity_model_file, "--lat", "0", "--lon", "0", "--bits", "6"]
    ) == 0
    assert capsys.readouterr().out.strip() == "110000"


def test_encode_key_mode(identity_model_file, capsys):
    point = point_for_code(0xA7 << 52)
    code = main(
        [
            "encode", "--model", identity_model_file,
            "--lat", repr(point.lat), "--lon", repr(point.lon),
            "--time", "2020-01-01T00:00:00Z", "--resolution", "86400",
            "--prefix-bits", "8",
        ]
    )
    assert code == 0
    assert capsys.readouterr().out.strip() == "a7:000000018262:"


def test_encode_key_mode_needs_flags(identity_model_file, capsys):
    code = main(
        ["encode", "--model", identity_model_file, "--lat", "1", "--lon", "2", "--time", "2020-01-01T00:00:00Z"]
    )
    assert code == 2
    assert "requires" in capsys.readouterr().err


def test_decode_key(identity_model_file, capsys):
    assert main(["decode", "--model", identity_model_file, "--key", "a7:000000018262:"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["prefix"] == "a7"
    assert doc["time_bucket"] == 18262
    assert doc["hash_interval"]["start"] == pytest.approx(0xA7 / 256)
    assert doc["cells"]


def test_fit_and_entropy_pipeline(tmp_path, uniform_csv, capsys):
    model_path = tmp_path / "m.bgh"
    assert main(["fit", "--input", uniform_csv, "--q", "4", "--output", str(model_path)]) == 0
    capsys.readouterr()
    model = load(model_path)
    assert model.q == 4

    assert main(
        ["entropy", "--input", uniform_csv, "--model", str(model_path), "--bits", "1,2,4", "--scheme", "both"]
    ) == 0
    out = capsys.readouterr().out
    lines = out.strip().split("\n")
    assert lines[0] == "scheme,bits,entropy,entropy_per_bit"
    assert len(lines) == 7  # 3 precisions x 2 schemes
    assert sum(line.startswith("standard,") for line in lines) == 3
    assert sum(line.startswith("balanced,") for line in lines) == 3


def test_entropy_balanced_needs_model(uniform_csv, capsys):
    assert main(["entropy", "--input", uniform_csv, "--bits", "1", "--scheme", "balanced"]) == 2


def test_entropy_bad_bits(uniform_csv):
    assert main(["entropy", "--input", uniform_csv, "--bits", "1,x"]) == 1


def test_synth_deterministic(tmp_path):
    spec_file = tmp_path / "spec.json"
    spec_file.write_text(json.dumps({"seed": 9, "uniform_floor": 1.0, "components": []}))
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["synth", "--spec", str(spec_file), "--n", "500", "--output", str(out1)]) == 0
    assert main(["synth", "--spec", str(spec_file), "--n", "500", "--output", str(out2)]) == 0
    assert out1.read_text() == out2.read_text()
    out3 = tmp_path / "c.csv"
    assert main(
        ["synth", "--spec", str(spec_file), "--n", "500", "--seed", "10", "--output", str(out3)]
    ) == 0
    assert out3.read_text() != out1.read_text()


def test_buckets_geojson(tmp_path, identity_model_file, capsys):
    out = tmp_path / "buckets.geojson"
    assert main(
        ["buckets", "--model", identity_model_file, "--prefix-bits", "2", "--depth-cap", "4",
         "--output", str(out)]
    ) == 0
    doc = json.loads(out.read_text())
    assert doc["type"] == "FeatureCollection"
    assert len(doc["features"]) == 4


def test_plan_output(tmp_path, identity_model_file, capsys):
    code = main(
        [
            "plan", "--model", identity_model_file,
            "--bbox=-180,-90,0,90",
            "--from", "2020-01-01T00:00:00Z", "--to", "2020-01-02T00:00:00Z",
            "--resolution", "86400", "--prefix-bits", "8", "--max-ranges", "200",
        ]
    )
    assert code == 0
    out = capsys.readouterr().out
    lines = out.strip().split("\n")
    assert lines[-1].startswith("# ranges=128 fp=")
    assert len(lines) == 129
    start, end = lines[0].split("\t")
    assert start == "00:000000018262:"
    assert end == "00:000000018264:"


def test_plan_bad_bbox(identity_model_file, capsys):
    code = main(
        [
            "plan", "--model", identity_model_file, "--bbox", "1,2,3",
            "--from", "2020-01-01T00:00:00Z", "--to", "2020-01-02T00:00:00Z",
            "--resolution", "60", "--prefix-bits", "8", "--max-ranges", "5",
        ]
    )
    assert code == 2


def test_bad_iso_time(identity_model_file):
    code = main(
        ["encode", "--model", identity_model_file, "--lat", "1", "--lon", "2",
         "--time", "notatime", "--resolution", "60", "--prefix-bits", "8"]
    )
    assert code == 1


def test_module_invocation_subprocess():
    import subprocess
    import sys

    proc = subprocess.run(
        [sys.executable, "-m", "bghash", "bound", "--q", "5", "--n", "100000", "--a", "0.6666666667"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "threshold\t3.3333" in proc.stdout


def test_encode_key_with_suffix(identity_model_file, capsys):
    point = point_for_code(0xA7B2 << 44)
    code = main(
        [
            "encode", "--model", identity_model_file,
            "--lat", repr(point.lat), "--lon", repr(point.lon),
            "--time", "1970-01-01T00:02:00Z", "--resolution", "60",
            "--prefix-bits", "8", "--suffix-bits", "8",
        ]
    )
    assert code == 0
    assert capsys.readouterr().out.strip() == "a7:000000000002:b2"


def test_pipeline_balanced_beats_standard(tmp_path, capsys):
    spec = mild_mixture(77)
    spec_file = tmp_path / "skew.json"
    spec_file.write_text(json.dumps(spec.to_dict()))
    csv_path = tmp_path / "pts.csv"
    model_path = tmp_path / "m.bgh"
    assert main(["synth", "--spec", str(spec_file), "--n", "30000", "--output", str(csv_path)]) == 0
    assert main(["fit", "--input", str(csv_path), "--q", "8", "--output", str(model_path)]) == 0
    capsys.readouterr()
    assert main(
        ["entropy", "--input", str(csv_path), "--model", str(model_path), "--bits", "8", "--scheme", "both"]
    ) == 0
    lines = capsys.readouterr().out.strip().split("\n")[1:]
    values = {line.split(",")[0]: float(line.split(",")[3]) for line in lines}
    assert values["balanced"] >= values["standard"]
