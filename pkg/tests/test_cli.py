import csv
import io
import json

import numpy as np
import pytest

from tfhe_bku.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, EXIT_VERIFY, CliConfig, UsageError, main
from tfhe_bku.netlist import parse_bits, random_netlist
from tfhe_bku.params import PRESET_ENV_VAR

FULL_ADDER = "INPUT a, b, cin\nOUTPUT s, cout\nt = XOR(a, b)\ns = XOR(t, cin)\nu = AND(a, b)\nv = AND(t, cin)\ncout = OR(u, v)\n"


@pytest.fixture(scope="module")
def toy_files(tmp_path_factory):
    d = tmp_path_factory.mktemp("keys")
    assert main(["keygen", "--preset", "toy", "--seed", "5", "--secret", str(d / "s.key"), "--cloud", str(d / "c.key")]) == EXIT_OK
    return d


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_keygen_counts_and_determinism(tmp_path, capsys):
    for tag in ("a", "b"):
        main(["keygen", "--preset", "toy", "--seed", "3", "--m", "1", "--secret", str(tmp_path / f"s{tag}"), "--cloud", str(tmp_path / f"c{tag}")])
    out = capsys.readouterr().out
    assert "32 TGSW ciphertexts" in out
    assert (tmp_path / "ca").read_bytes() == (tmp_path / "cb").read_bytes()
    assert (tmp_path / "sa").read_bytes() == (tmp_path / "sb").read_bytes()


def test_keygen_default_preset_m2(tmp_path, capsys):
    assert main(["keygen", "--seed", "1", "--secret", str(tmp_path / "s"), "--cloud", str(tmp_path / "c")]) == EXIT_OK
    assert f"250 groups x 3 TGSW keys = {250 * 3} TGSW ciphertexts" in capsys.readouterr().out


def test_single_nand(tmp_path, toy_files, capsys):
    (tmp_path / "n.net").write_text("y = NAND(a, b)\n")
    code = main(["eval", "--cloud", str(toy_files / "c.key"), "--secret", str(toy_files / "s.key"), "--netlist", str(tmp_path / "n.net"), "--inputs", "a=1,b=1"])
    assert code == EXIT_OK
    captured = capsys.readouterr()
    assert parse_bits(captured.out) == {"y": 0}
    report = json.loads(captured.err.strip().splitlines()[-1])
    assert report["bootstraps"] == 1 and report["external_products_per_gate"] == 16


def test_full_adder_all_inputs(tmp_path, toy_files, capsys):
    (tmp_path / "fa.net").write_text(FULL_ADDER)
    for v in range(8):
        a, b, c = v & 1, (v >> 1) & 1, v >> 2
        main(["eval", "--cloud", str(toy_files / "c.key"), "--secret", str(toy_files / "s.key"), "--netlist", str(tmp_path / "fa.net"), "--inputs", f"a={a},b={b},cin={c}"])
        bits = parse_bits(capsys.readouterr().out)
        assert bits["s"] + 2 * bits["cout"] == a + b + c


def test_encrypt_eval_decrypt_files(tmp_path, toy_files, capsys):
    (tmp_path / "fa.net").write_text(FULL_ADDER)
    s, c = str(toy_files / "s.key"), str(toy_files / "c.key")
    assert main(["encrypt", "--secret", s, "--inputs", "a=1,b=1,cin=1", "--out", str(tmp_path / "in.ct")]) == EXIT_OK
    assert main(["eval", "--cloud", c, "--netlist", str(tmp_path / "fa.net"), "--ciphertexts", str(tmp_path / "in.ct"), "--out", str(tmp_path / "out.ct")]) == EXIT_OK
    capsys.readouterr()
    assert main(["decrypt", "--secret", s, "--ciphertexts", str(tmp_path / "out.ct")]) == EXIT_OK
    assert parse_bits(capsys.readouterr().out) == {"s": 1, "cout": 1}


def test_random_netlists_round_trip(tmp_path, toy_files, capsys):
    rng = np.random.default_rng(17)
    for i in range(100):
        net = random_netlist(rng, int(rng.integers(1, 5)), int(rng.integers(1, 17)))
        text = "INPUT " + ", ".join(net.inputs) + "\nOUTPUT " + ", ".join(net.outputs) + "\n"
        text += "".join(f"{g.out} = {g.kind.value}({', '.join(g.inputs)})\n" for g in net.gates)
        (tmp_path / "r.net").write_text(text)
        bits = {w: int(b) for w, b in zip(net.inputs, rng.integers(0, 2, len(net.inputs)))}
        inline = ",".join(f"{w}={b}" for w, b in bits.items())
        code = main(["eval", "--seed", str(i), "--cloud", str(toy_files / "c.key"), "--secret", str(toy_files / "s.key"), "--netlist", str(tmp_path / "r.net"), "--inputs", inline])
        assert code == EXIT_OK
        assert parse_bits(capsys.readouterr().out) == net.evaluate_plain(bits)


def test_cycle_rejected(tmp_path, toy_files, capsys):
    (tmp_path / "cyc.net").write_text("a = AND(b, x)\nb = OR(a, y)\n")
    code = main(["eval", "--cloud", str(toy_files / "c.key"), "--secret", str(toy_files / "s.key"), "--netlist", str(tmp_path / "cyc.net"), "--inputs", "x=1,y=0"])
    assert code == EXIT_DATA
    assert "combinational cycle" in capsys.readouterr().err


def test_usage_errors(capsys):
    assert main(["bench", "--m", "9"]) == EXIT_USAGE
    assert main(["bench", "--threads", "0"]) == EXIT_USAGE
    with pytest.raises(UsageError):
        CliConfig("bench", backend="gpu")


def test_bench_accounting(capsys):
    assert main(["bench", "--preset", "toy", "--gates", "16", "--m-values", "1,2"]) == EXIT_OK
    rows = _rows(capsys.readouterr().out)
    assert [int(r["m"]) for r in rows] == [1, 2]
    for r in rows:
        assert r["seed"] == "0" and json.loads(r["params"])["ring_degree"] == 256
        assert float(r["forward_per_gate"]) + float(r["inverse_per_gate"]) == float(r["expected_transforms_per_gate"])
        assert int(r["failures"]) == 0
    assert float(rows[1]["external_products_per_gate"]) == 16


def test_error_study_rows(tmp_path):
    out = tmp_path / "err.csv"
    assert main(["error-study", "--preset", "toy", "--trials", "1", "--out", str(out)]) == EXIT_OK
    rows = _rows(out.read_text())
    sweep = [r for r in rows if r["beta"] != "reference"]
    assert [int(r["beta"]) for r in sweep] == [16, 24, 32, 38, 48, 64]
    assert all(r["schema_version"] for r in rows)


def test_noise_study_key_count(capsys):
    assert main(["noise-study", "--preset", "toy", "--trials", "16", "--m-values", "1,2,3"]) == EXIT_OK
    rows = _rows(capsys.readouterr().out)
    assert [int(r["key_count"]) for r in rows] == [1, 3, 7]


def test_failures_command(capsys):
    assert main(["failures", "--preset", "toy", "--trials", "256", "--beta", "64", "--expect-zero"]) == EXIT_OK
    assert _rows(capsys.readouterr().out)[0]["failures"] == "0"
    assert main(["failures", "--preset", "toy", "--trials", "256", "--beta", "8", "--expect-zero"]) == EXIT_VERIFY


def test_preset_from_environment(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(PRESET_ENV_VAR, "toy")
    assert main(["keygen", "--secret", str(tmp_path / "s"), "--cloud", str(tmp_path / "c")]) == EXIT_OK
    assert "16 groups x 3" in capsys.readouterr().out


def test_missing_file_is_data_error(tmp_path, capsys):
    code = main(["decrypt", "--secret", str(tmp_path / "nope"), "--ciphertexts", str(tmp_path / "nope2")])
    assert code == EXIT_DATA
