from pathlib import Path

import pytest

from octalab.cli import main

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "data"
CONFIGS = ROOT / "configs"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def test_norm_vector(capsys):
    code, out, _ = run(capsys, "norm", "--space", "lp:1:3", "--vector", "1,-2,0.5")
    assert code == 0
    assert "norm: 3.5" in out


def test_operator_norm(capsys):
    code, out, _ = run(capsys, "norm", "--op", DATA / "shift_psi.txt", "--dom", "lp:1:2", "--cod", "lp:inf:2")
    assert code == 0
    assert "value: 1" in out


def test_tensor_norm(capsys):
    code, out, _ = run(capsys, "tensor-norm", "--x", "lp:1:2", "--y", "lp:1:2", "--tensor", DATA / "rankone.txt")
    assert code == 0
    assert "[injective 0]" in out and "[projective 0]" in out


def test_cutcone_member_and_distortion(capsys):
    code, out, _ = run(capsys, "cutcone", "--points", DATA / "square.txt", "--space", "lp:inf:2")
    assert code == 0 and "feasible: true" in out
    code, out, _ = run(capsys, "cutcone", "--points", DATA / "square.txt", "--space", "lp:2:2", "--mode", "distortion")
    assert code == 0 and "value: 1" in out


def test_defect_c0_family(capsys):
    code, out, _ = run(capsys, "defect", "--space", "lp:inf:2", "--family", DATA / "c0_family.txt")
    assert code == 0
    assert "defect: 1\n" in out
    code, out, _ = run(capsys, "defect", "--space", "lp:inf:2", "--family", DATA / "c0_family.txt", "--mode", "alt")
    assert code == 0
    assert "defect: 2\n" in out


@pytest.mark.parametrize("kind,extra", [
    ("shift", ["--ops", DATA / "shift_ops.txt", "--dom", "lp:1:2", "--psi", DATA / "shift_psi.txt"]),
    ("interval", ["--ops", DATA / "interval_ops.txt", "--dom", "lp:1:2", "--t0", DATA / "interval_t0.txt"]),
    ("sup-alt", ["--family", DATA / "c0_family.txt"]),
])
def test_witness_kinds_pass(capsys, kind, extra):
    code, out, _ = run(capsys, "witness", "--kind", kind, *extra)
    assert code == 0
    assert "passed: true" in out


def test_broken_witness_exit_one(capsys):
    code, _, _ = run(capsys, "--debug-break-witness", "shift", "witness", "--kind", "shift",
                     "--ops", DATA / "shift_ops.txt", "--dom", "lp:1:2", "--psi", DATA / "shift_psi.txt")
    assert code == 1


def test_missing_input_exit_two(capsys, tmp_path):
    code, _, err = run(capsys, "defect", "--space", "lp:1:2", "--family", tmp_path / "nope.txt")
    assert code == 2
    assert err.startswith("octalab: error:")


def test_bad_space_exit_two(capsys):
    code, _, err = run(capsys, "norm", "--space", "lq:1:2", "--vector", "1,2")
    assert code == 2 and "octalab: error:" in err


def test_config_error_names_line(capsys, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("experiment = witness-suite\n# comment\nwidth = 3\n")
    code, _, err = run(capsys, "run", cfg)
    assert code == 2
    assert "line 3" in err and "width" in err


def test_certify_hilbert_is_error_row(capsys):
    code, out, _ = run(capsys, "certify", "--p", "2", "--n", "3", "--m", "8", "--budget", "100")
    assert code == 0
    assert out.splitlines()[-1].startswith("2,3,8,") and "ERROR obstruction not established" in out


def test_suite_broken_verifier_exit_one(capsys):
    code, out, _ = run(capsys, "--debug-break-witness", "shift", "run", CONFIGS / "witness-suite.cfg")
    assert code == 1
    assert "FAIL" in out


def test_run_deterministic_across_jobs(capsys, tmp_path):
    outs = []
    for jobs in (1, 2, 2):
        path = tmp_path / f"out{len(outs)}.csv"
        code, _, _ = run(capsys, "--jobs", jobs, "--out", path, "run", CONFIGS / "witness-suite.cfg")
        assert code == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1] == outs[2]
    assert outs[0].startswith(b"# octalab witness-suite csv v1 seed=7\n")


def test_seed_flag_overrides_config(capsys):
    _, out, _ = run(capsys, "--seed", "11", "run", CONFIGS / "cutcone-scan.cfg")
    assert out.startswith("# octalab cutcone-scan csv v1 seed=11\n")


def test_search_repeatable(capsys):
    argv = ["--seed", "4", "cutcone", "--mode", "search", "--space", "lp:inf:2", "--k", "5", "--budget", "80"]
    a = run(capsys, *argv)
    b = run(capsys, *argv)
    assert a == b and a[0] == 0
