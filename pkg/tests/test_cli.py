import json
import subprocess
import sys

import numpy as np
import pytest

from fockbell import cli
from fockbell.fock import FieldState, ModePartition
from fockbell.serialization import load_state, save_state


@pytest.fixture
def run(tmp_path, capsys):
    def _run(*argv):
        code = cli.main([str(a) for a in argv])
        out, err = capsys.readouterr()
        return code, out, err

    return _run


def generate(run, tmp_path, name, *flags):
    path = tmp_path / f"{name}.json"
    code, _, _ = run("generate", *flags, "--output", path)
    assert code == 0
    return path


def test_pipeline_bsv(run, tmp_path):
    path = generate(run, tmp_path, "bsv", "bsv", "--gamma", 0.5, "--cutoff", 6)
    code, out, _ = run("pipeline", "--input", path)
    verdict = json.loads(out)["verdict"]
    assert code == 0
    assert verdict["entangled"] and verdict["violated"] and verdict["corollary1"]
    assert not verdict["theorem1"]
    assert {"sector": [1, 1], "ns_condition_holds": True} in verdict["sector_ns_conditions"]


def test_pipeline_tmsv(run, tmp_path):
    path = generate(run, tmp_path, "tmsv", "tmsv", "--gamma", 0.5, "--cutoff", 8)
    code, out, _ = run("pipeline", "--input", path)
    verdict = json.loads(out)["verdict"]
    assert code == 0
    assert verdict["entangled"] and verdict["violated"] and verdict["theorem1"]
    assert verdict["ch_value"] > 0


def test_bell_on_product_state(run, tmp_path):
    path = tmp_path / "prod.json"
    save_state(FieldState.basis(ModePartition.simple(1, 1), (1,), (0,)), path)
    code, _, err = run("bell", "--input", path)
    assert code == cli.EXIT_SEPARABLE
    assert "separable" in err


def test_reports_both_settings(run, tmp_path):
    path = generate(run, tmp_path, "bs", "beamsplit")
    for source in ("paper", "closed-form", "numeric", "explicit:0,1.5708,0.785,-0.785"):
        code, out, _ = run("bell", "--input", path, "--settings", source)
        report = json.loads(out)
        assert code == 0
        cmp = report["settings_comparison"]
        assert set(cmp) >= {"closed_form", "numeric_search", "closed_form_suboptimal"}
        assert cmp["closed_form_suboptimal"] is True


def test_explicit_angles_used(run, tmp_path):
    path = generate(run, tmp_path, "bs", "beamsplit")
    _, out, _ = run("bell", "--input", path, "--settings", "explicit:0.1,0.2,0.3,0.4")
    assert json.loads(out)["ch_report"]["settings"] == {
        "alpha": 0.1, "alpha_prime": 0.2, "beta": 0.3, "beta_prime": 0.4,
    }


@pytest.mark.parametrize(
    "argv",
    [
        ["bell", "--settings", "explicit:1,2,3"],
        ["bell", "--settings", "explicit:1,2,3,nan"],
        ["bell", "--settings", "sideways"],
        ["feasibility", "--sector", "1"],
        ["feasibility", "--sector", "4,4"],
        ["schmidt", "--rank-tol", "-1"],
    ],
    ids=["three-angles", "nan", "source", "sector-format", "empty-sector", "negative-tol"],
)
def test_invalid_flags(run, tmp_path, argv):
    path = generate(run, tmp_path, "bs", "beamsplit")
    code, _, err = run(*argv, "--input", path)
    assert code == cli.EXIT_INVALID
    assert err


def test_missing_and_malformed_input(run, tmp_path):
    assert run("schmidt", "--input", tmp_path / "absent.json")[0] == cli.EXIT_INVALID
    bad = tmp_path / "bad.json"
    bad.write_text('{"amplitudes": []}')
    assert run("schmidt", "--input", bad)[0] == cli.EXIT_INVALID


def test_unnormalized_input(run, tmp_path):
    path = tmp_path / "s.json"
    save_state(FieldState(ModePartition.simple(1, 1), {((0,), (1,)): 1.0, ((1,), (0,)): 1.0}), path)
    assert run("schmidt", "--input", path)[0] == cli.EXIT_INVALID


def test_argparse_errors_exit_two(run):
    with pytest.raises(SystemExit) as exc:
        cli.main(["bell"])
    assert exc.value.code == 2


def test_numeric_failure(run, tmp_path, monkeypatch):
    path = generate(run, tmp_path, "bs", "beamsplit")

    def broken(*args, **kwargs):
        raise np.linalg.LinAlgError("SVD did not converge")

    monkeypatch.setattr(cli, "schmidt_decompose", broken)
    assert run("schmidt", "--input", path)[0] == cli.EXIT_NUMERIC


def test_reports_are_byte_identical(run, tmp_path):
    path = generate(run, tmp_path, "anc", "beamsplit", "--z", 0.8, "--cutoff", 8)
    outs = []
    for i in range(2):
        report = tmp_path / f"r{i}.json"
        assert run("pipeline", "--input", path, "--output", report)[0] == 0
        outs.append(report.read_bytes())
    assert outs[0] == outs[1]


def test_feasibility_single_sector(run, tmp_path):
    path = generate(run, tmp_path, "anc", "beamsplit", "--z", 1.0, "--cutoff", 10)
    code, out, _ = run("feasibility", "--input", path, "--sector", "1,1")
    report = json.loads(out)
    assert code == 0
    (cond,) = report["conditions"]
    assert cond["projected_ch"] == pytest.approx((2**0.5 - 1) / 2, abs=1e-9)
    assert cond["full_ch"] <= 0 and not cond["ns_condition_holds"]


def test_feasibility_rank_one_sector_reported(run, tmp_path):
    path = generate(run, tmp_path, "tmsv", "tmsv", "--gamma", 0.3, "--cutoff", 4)
    _, out, _ = run("feasibility", "--input", path, "--sector", "1,1")
    assert json.loads(out)["conditions"] == [{"sector": [1, 1], "applicable": False, "reason": "rank 1"}]


def test_generate_variants(run, tmp_path):
    coeffs = tmp_path / "c.json"
    coeffs.write_text("[0.8, [0.5, 0.1], 0.2]")
    s = load_state(generate(run, tmp_path, "bghz", "bghz", "--coeffs-file", coeffs, "--subtract", "a2,a4"))
    assert len(s.partition.a_modes) == 4
    s = load_state(generate(run, tmp_path, "tl", "tmsv", "--lambdas", "0.8,0.6"))
    assert s.amplitude((1,), (1,)) == pytest.approx(0.6)


@pytest.mark.parametrize(
    "flags",
    [["tmsv"], ["tmsv", "--gamma", "1", "--lambdas", "1,1"], ["bsv"], ["bghz"], ["beamsplit", "--subtract", "q9"],
     ["tmsv", "--lambdas", "x"]],
    ids=["tmsv-none", "tmsv-both", "bsv", "bghz", "bad-mode", "bad-lambdas"],
)
def test_generate_errors(run, flags):
    assert run("generate", *flags)[0] == cli.EXIT_INVALID


def test_ancilla_cutoff_warning(run):
    code, _, err = run("generate", "beamsplit", "--z", "2.0", "--cutoff", "4")
    assert code == 0 and "drops weight" in err


def test_module_entry_point(tmp_path):
    out = tmp_path / "s.json"
    proc = subprocess.run(
        [sys.executable, "-m", "fockbell", "generate", "beamsplit", "--output", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0 and out.exists()
