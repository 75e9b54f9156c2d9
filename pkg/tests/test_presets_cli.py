import hashlib
import json
import os
import subprocess
import sys

import pytest

from resonance_bounds import cli
from resonance_bounds.potentials import BallIndicator, ExpProfile, TubeIndicator, dumps
from resonance_bounds.presets import PRESET_IDS, grid_for, preset, run, validate, violations


def call(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_potential_forms(tmp_path):
    assert cli.parse_potential("ball:R=2,h=-10") == BallIndicator(R=2.0, h=-10 + 0j)
    assert isinstance(cli.parse_potential("tube:R=4,h=1"), TubeIndicator)
    assert isinstance(cli.parse_potential("exp:c=1,eps=1"), ExpProfile)
    f = tmp_path / "v.json"
    f.write_text(dumps(BallIndicator(R=1.0, h=1j)))
    assert cli.parse_potential(f"@{f}").h == 1j
    with pytest.raises(ValueError):
        cli.parse_potential("cube:R=1")


def test_parse_lambda():
    assert cli.parse_lambda("3+1i") == 3 + 1j
    assert cli.parse_lambda(" -2 - 0.5j") == -2 - 0.5j


def test_norms_command(capsys):
    code, out, _ = call(capsys, "norms", "--potential", "ball:R=1,h=1", "--gamma", "1")
    doc = json.loads(out)
    assert code == 0 and doc["sup_norm"] == 1.0 and doc["v0"] == pytest.approx((4 * 3.141592653589793 / 3) ** 0.5)


def test_svd_command(capsys):
    code, out, _ = call(capsys, "svd", "--potential", "ball:R=1,h=1", "--lam", "2", "--grid", "n_radial=4,degree=3,n_azimuth=4")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "k,s_k" and len(lines) == 1 + 4 * 2 * 4


def test_bad_inputs_exit_2(capsys):
    assert call(capsys, "svd", "--potential", "cube:R=1", "--lam", "1")[0] == 2
    code, _, err = call(capsys, "svd", "--potential", "ball:R=1,h=1", "--lam", "1", "--grid", "foo=3")
    assert code == 2 and "foo" in err


def test_bounds_command(capsys):
    code, out, _ = call(capsys, "bounds", "lp", "--potential", "ball:R=1,h=1", "--gamma", "4")
    assert code == 0 and json.loads(out)["admissible"]
    code, out, err = call(capsys, "bounds", "lp", "--potential", "ball:R=1,h=1", "--gamma", "1")
    assert code == 2 and "gamma" in err
    code, _, err = call(capsys, "bounds", "halfplane", "--potential", "ball:R=1,h=1", "--gamma", "1", "--eps", "1")
    assert code == 2 and "eps" in err


def test_validate_messages(capsys):
    code, out, _ = call(capsys, "validate", "ex1_compact", "--delta", "2")
    assert code == 2
    assert any(line.startswith("FAIL") and "delta in (0,1]" in line for line in out.splitlines())
    code, out, _ = call(capsys, "validate", "custom")
    assert code == 0 and "FAIL" not in out


def test_run_preset_refuses_violations(capsys, tmp_path):
    code, _, err = call(capsys, "run-preset", "ex2_superexp", "--quick", "--rho", "1", "--out", str(tmp_path / "x"))
    assert code == 2 and "rho" in err
    assert not (tmp_path / "x").exists()


def _hashes(d):
    man = json.loads((d / "manifest.json").read_text())
    for name, h in man["files"].items():
        assert hashlib.sha256((d / name).read_bytes()).hexdigest() == h
    return man


@pytest.mark.parametrize("name", ["custom", "ex1_compact", "ex2_superexp"])
def test_run_preset_deterministic(capsys, tmp_path, name):
    runs = []
    for k in range(2):
        code, out, _ = call(capsys, "run-preset", name, "--quick", "--out", str(tmp_path / f"r{k}"))
        assert code == 0
        runs.append(_hashes(tmp_path / f"r{k}"))
    assert runs[0]["files"] == runs[1]["files"]
    assert runs[0]["schema"] == "preset-run/1"


def test_presets_are_valid_by_default():
    for name in PRESET_IDS:
        p = preset(name, quick=True)
        assert not violations(p), name
        assert all(c.ok for c in validate(p))
        assert json.loads(p.to_json())["id"] == name
    with pytest.raises(KeyError):
        preset("nope")


def test_grid_for_rejects_unknown_potential():
    from resonance_bounds.potentials import RadialTable

    with pytest.raises(ValueError):
        grid_for(RadialTable(radii=(0.0, 1.0), values=(1.0,)))


def test_count_with_oracle(capsys):
    code, out, _ = call(
        capsys, "count", "--potential", "ball:R=1,h=-10", "--r", "1.5", "--alpha", "1", "--branch", "polar",
        "--grid", "n_radial=10,degree=9,n_azimuth=10", "--oracle",
    )
    doc = json.loads(out)
    assert code == 0 and doc["n"] == doc["oracle"] == 6


def test_oracle_commands(capsys):
    code, out, _ = call(capsys, "oracle1d", "--V0", "-5", "--r", "3")
    assert code == 0 and out.startswith("lambda_re,lambda_im,abs_D")
    code, out, _ = call(capsys, "oracle3d", "--V0", "1i", "--R", "2", "--r", "4", "--upper")
    rows = out.strip().splitlines()
    assert code == 0 and len(rows) == 2 and rows[1].startswith("0,")


def test_module_entry_point_with_thread_env():
    env = dict(os.environ, RESONANCE_THREADS="1")
    proc = subprocess.run([sys.executable, "-m", "resonance_bounds", "validate", "custom"], env=env, capture_output=True, text=True)
    assert proc.returncode == 0
    proc = subprocess.run(
        [sys.executable, "-c", "import resonance_bounds.cli, os; print(os.environ['OMP_NUM_THREADS'])"],
        env=env, capture_output=True, text=True,
    )
    assert proc.stdout.strip() == "1"
