import json
import subprocess
import sys

import pytest

from steinsq.cli import main
from steinsq.grid import grid_to_text, read_grid


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    kv = dict(line.split("=", 1) for line in out.out.splitlines() if "=" in line)
    return code, kv, out.err


def test_gen_default(tmp_path, capsys):
    base = str(tmp_path / "s36")
    code, kv, _ = run(capsys, "gen", "--n", "36", "-o", base)
    assert code == 0
    assert kv["b_size"] == "0" and kv["bound"] == "36"
    assert kv["deficiency_certified"] == "false"
    for ext in (".grid", ".layout.json", ".cert.json"):
        assert (tmp_path / f"s36{ext}").exists()


def test_gen_infeasible(tmp_path, capsys):
    code, kv, err = run(capsys, "gen", "--n", "36", "--b", "1", "-o", str(tmp_path / "x"))
    assert code == 2
    assert kv["condition"] == "F3"
    assert "36 > 7" in err
    assert not (tmp_path / "x.grid").exists()


def test_gen_symmetric_odd(tmp_path, capsys):
    code, kv, _ = run(capsys, "gen", "--n", "37", "--variant", "symmetric", "-o", str(tmp_path / "x"))
    assert code == 2 and kv["condition"] == "parity(N)"


def test_gen_is_deterministic(tmp_path, capsys):
    for name in ("a", "b"):
        run(capsys, "gen", "--n", "50", "--fill", "random", "--seed", "3", "-o", str(tmp_path / name))
    assert (tmp_path / "a.grid").read_bytes() == (tmp_path / "b.grid").read_bytes()
    g = read_grid(tmp_path / "a.grid")
    assert grid_to_text(g).encode() == (tmp_path / "a.grid").read_bytes()


def test_pipeline(tmp_path, capsys):
    base = str(tmp_path / "g")
    code, _, _ = run(capsys, "gen", "--n", "12", "--cx", "1/2", "--shuffle", "5", "-o", base)
    assert code == 0
    code, kv, _ = run(capsys, "solve", base + ".grid", "--method", "exact", "-o", base + ".sol.json")
    assert code == 0 and kv["optimal"] == "true"
    size = int(kv["size"])
    sol = json.loads((tmp_path / "g.sol.json").read_text())
    assert sol["size"] == size and len(sol["witness"]) == size
    code, kv, _ = run(
        capsys,
        "certify", base + ".grid",
        "--layout", base + ".layout.json",
        "--audit", base + ".sol.json",
        "--check", base + ".cert.json",
        "-o", base + ".cert2.json",
    )
    assert code == 0
    assert kv["structure_ok"] == "true" and kv["audit_ok"] == "true"
    assert kv["certificate_reproduced"] == "true"
    assert (tmp_path / "g.cert2.json").read_text() == (tmp_path / "g.cert.json").read_text()


@pytest.mark.parametrize("method", ["greedy", "nibble"])
def test_heuristic_methods(tmp_path, capsys, method):
    base = str(tmp_path / "g")
    run(capsys, "gen", "--n", "100", "-o", base)
    code, kv, _ = run(capsys, "solve", base + ".grid", "--method", method, "--seed", "2")
    assert code == 0 and kv["optimal"] == "false"
    assert 0 < int(kv["size"]) <= 100


def test_certify_tampered(tmp_path, capsys):
    base = str(tmp_path / "g")
    run(capsys, "gen", "--n", "36", "-o", base)
    lines = (tmp_path / "g.grid").read_text().splitlines()
    row = lines[36].split()
    row[35] = "1"  # an N_1 symbol in the bottom-right corner
    lines[36] = " ".join(row)
    (tmp_path / "g.grid").write_text("\n".join(lines) + "\n")
    code, kv, _ = run(capsys, "certify", base + ".grid", "--layout", base + ".layout.json", "--check", base + ".cert.json")
    assert code == 5
    assert kv["C2"] == "FAIL" and "36,36" in kv["C2_cells"]
    assert kv["certificate_reproduced"] == "false"


def test_certify_dimension_mismatch(tmp_path, capsys):
    run(capsys, "gen", "--n", "36", "-o", str(tmp_path / "a"))
    run(capsys, "gen", "--n", "40", "-o", str(tmp_path / "b"))
    code, kv, _ = run(capsys, "certify", str(tmp_path / "a.grid"), "--layout", str(tmp_path / "b.layout.json"))
    assert code == 5 and kv["structure_ok"] == "false"


def test_certify_invalid_witness(tmp_path, capsys):
    base = str(tmp_path / "g")
    run(capsys, "gen", "--n", "36", "-o", base)
    (tmp_path / "w.json").write_text(json.dumps([[1, 1], [1, 2]]))
    code, _, err = run(capsys, "certify", base + ".grid", "--layout", base + ".layout.json", "--audit", str(tmp_path / "w.json"))
    assert code == 5 and "not a partial transversal" in err


def test_bad_inputs(tmp_path, capsys):
    (tmp_path / "bad.grid").write_text("2 2\n1 2\n")
    code, _, _ = run(capsys, "solve", str(tmp_path / "bad.grid"))
    assert code == 3
    code, _, _ = run(capsys, "solve", str(tmp_path / "missing.grid"))
    assert code == 3


def test_exact_cap_and_timeout(tmp_path, capsys):
    import numpy as np

    from steinsq.grid import Grid, write_grid

    i, j = np.indices((40, 40))
    write_grid(Grid((i + j) % 40 + 1), tmp_path / "c40.grid")
    code, _, err = run(capsys, "solve", str(tmp_path / "c40.grid"))
    assert code == 3 and "cap" in err
    out = str(tmp_path / "c40.sol.json")
    code, kv, _ = run(capsys, "solve", str(tmp_path / "c40.grid"), "--force", "--time-limit", "0.2", "-o", out)
    assert code == 4 and kv["optimal"] == "false"
    assert json.loads((tmp_path / "c40.sol.json").read_text())["optimal"] is False


def test_check_lemma(capsys):
    code, kv, _ = run(capsys, "check-lemma", "--n", "900")
    assert code == 0
    assert kv["p1_holds"] == "true" and kv["paper_bound_holds"] == "false"
    _, kv, _ = run(capsys, "check-lemma", "--n", "36")
    assert kv["sum_sq"] == "7" and kv["max_feasible_b"] == "0"
    _, kv, _ = run(capsys, "check-lemma", "--n", "10000", "--cx", "1/2")
    assert int(kv["max_feasible_b"]) >= 1
    assert kv["max_feasible_b_tight"] == "1"


def test_min_n(capsys):
    code, kv, _ = run(capsys, "min-n", "--k", "1", "--cx", "1/2", "--slack", "tight")
    assert code == 0 and kv["min_n"] == "400"


def test_threads_env(tmp_path, capsys, monkeypatch):
    base = str(tmp_path / "g")
    run(capsys, "gen", "--n", "10", "--cx", "1/2", "-o", base)
    monkeypatch.setenv("STEIN_THREADS", "2")
    code, kv, _ = run(capsys, "solve", base + ".grid")
    assert code == 0 and kv["optimal"] == "true"


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "steinsq", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip()
