import json

import numpy as np
import pytest

from lftident import cli, model as model_mod, testing
from lftident.model import Dims


def run(args, capsys):
    code = cli.main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def parse(out):
    return json.loads(out)


def test_version(capsys):
    code = cli.main(["--version"])
    assert code == 0


def test_usage_error_no_args(capsys):
    assert cli.main([]) == cli.EXIT_USAGE


def test_validate(siso1_path, capsys):
    code, out, err = run(["validate", "--model", str(siso1_path)], capsys)
    assert code == 0
    doc = parse(out)
    assert doc["schema"] == "lftident-report/1"
    assert doc["subcommand"] == "validate"
    assert doc["result"]["psi_fcr"] is True
    assert doc["result"]["g_zu_fnrr"] is True
    assert doc["result"]["assumptions"]["worst_loop_condition"] == 1.0
    assert doc["timing"]["wall_seconds"] is None


def test_ident_identifiable(siso1_path, capsys):
    code, out, _ = run(
        ["ident", "--model", str(siso1_path), "--theta0", "0", "--freqs", "1"], capsys
    )
    assert code == 0
    doc = parse(out)
    assert doc["result"]["verdict"]["status"] == "identifiable"
    assert doc["result"]["sufficient_count"] == 3


def test_ident_dup2(dup2_path, capsys):
    code, out, _ = run(
        ["ident", "--model", str(dup2_path), "--theta0", "0,0", "--freqs", "1,2"], capsys
    )
    assert code == 0
    doc = parse(out)
    assert doc["result"]["verdict"]["status"] == "not-identifiable"
    assert doc["result"]["verdict"]["psi_fcr"] is False


def test_ident_duplicate_freqs_usage_error(siso1_path, capsys):
    code, _, err = run(
        ["ident", "--model", str(siso1_path), "--theta0", "0", "--freqs", "1,1"], capsys
    )
    assert code == cli.EXIT_USAGE
    assert "distinct" in err


def test_theta0_outside_domain(siso1_path, capsys):
    code, _, err = run(
        ["ident", "--model", str(siso1_path), "--theta0", "5", "--freqs", "1"], capsys
    )
    assert code == cli.EXIT_USAGE


def test_invalid_model_exit_2(tmp_path, capsys):
    p = tmp_path / "broken.json"
    p.write_text("{}")
    code, _, err = run(["validate", "--model", str(p)], capsys)
    assert code == cli.EXIT_MODEL


def test_assumption_violation_exit_3(tmp_path, capsys):
    # m_z > m_u: G_zu cannot have full normal row rank.
    m = testing.random_regular_model(2, dims=Dims(m_x=2, m_u=1, m_y=1, m_z=2, m_v=2, q=2))
    p = tmp_path / "fnrr.json"
    model_mod.save_model(m, p)
    code, _, err = run(
        ["ident", "--model", str(p), "--theta0", "0,0", "--freqs", "1"], capsys
    )
    assert code == cli.EXIT_ASSUMPTION
    assert "row rank" in err


def test_sloppiness_siso1(siso1_path, tmp_path, capsys):
    csv = tmp_path / "mu.csv"
    code, out, _ = run(
        ["sloppiness", "--model", str(siso1_path), "--theta0", "0",
         "--freqs", "0,1", "--eps", "1e-3", "--csv", str(csv)],
        capsys,
    )
    assert code == 0
    doc = parse(out)
    assert doc["result"]["sm_abs"] == pytest.approx(np.sqrt(0.8), abs=1e-9)
    assert doc["result"]["mu"] == [pytest.approx(0.8, abs=1e-9)]
    assert doc["result"]["eps_convention"] == "energy<=eps^2"
    lines = csv.read_text().strip().splitlines()
    assert lines[0].startswith("index,mu,sm_rel")
    assert len(lines) == 2


def test_sloppiness_non_certifying_exit_3(tmp_path, capsys):
    p = tmp_path / "free.json"
    model_mod.save_model(testing.theta_free(), p)
    code, _, err = run(
        ["sloppiness", "--model", str(p), "--theta0", "0", "--freqs", "0.5,1.5",
         "--eps", "1e-3"],
        capsys,
    )
    assert code == cli.EXIT_ASSUMPTION


def test_find_freqs(siso1_path, capsys):
    code, out, _ = run(
        ["find-freqs", "--model", str(siso1_path), "--theta0", "0"], capsys
    )
    assert code == 0
    doc = parse(out)
    assert doc["result"]["plan"]["status"] == "certified"
    assert doc["result"]["plan"]["selected"] == [pytest.approx(1e-2)]
    assert doc["result"]["verdict"]["status"] == "identifiable"


def test_oracle_subcommand(siso1_path, capsys):
    code, out, _ = run(
        ["oracle", "--model", str(siso1_path), "--theta0", "0", "--freqs", "0,1",
         "--trials", "25"],
        capsys,
    )
    assert code == 0
    doc = parse(out)
    res = doc["result"]
    assert res["local_identifiability"] is True
    assert res["verdict"]["status"] == "identifiable"
    assert res["mu_agreement"]["max_rel_difference"] <= 1e-3
    assert res["equivalence_probe"]["counterexample"] is None


def test_byte_identical_reports(siso1_path, dup2_path, tmp_path, capsys):
    argsets = [
        ["validate", "--model", str(siso1_path)],
        ["ident", "--model", str(siso1_path), "--theta0", "0", "--freqs", "1,2"],
        ["find-freqs", "--model", str(siso1_path), "--theta0", "0"],
        ["sloppiness", "--model", str(siso1_path), "--theta0", "0",
         "--freqs", "0,1", "--eps", "1e-3"],
        ["oracle", "--model", str(dup2_path), "--theta0", "0,0", "--freqs", "1",
         "--trials", "10", "--seed", "7"],
    ]
    for i, args in enumerate(argsets):
        a = tmp_path / f"a{i}.json"
        b = tmp_path / f"b{i}.json"
        assert cli.main(args + ["--output", str(a)]) == 0
        assert cli.main(args + ["--output", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()
    capsys.readouterr()


def test_output_file_and_digest(siso1_path, tmp_path, capsys):
    out_path = tmp_path / "report.json"
    code = cli.main(["validate", "--model", str(siso1_path), "--output", str(out_path)])
    capsys.readouterr()
    assert code == 0
    doc = json.loads(out_path.read_text())
    import hashlib

    assert doc["input_digest"] == hashlib.sha256(siso1_path.read_bytes()).hexdigest()
    assert doc["parameters"]["tolerances"]["rank_rtol"] == 1e-10


def test_exit_4_on_internal_inconsistency(siso1_path, capsys, monkeypatch):
    # An infinite sloppiness eigenvalue on a certified set contradicts the
    # identifiability certificate: the CLI must flag itself, not report it.
    from lftident import sloppiness as slop
    import lftident.cli as cli_mod

    orig = slop.metrics

    def fake_metrics(S, k=1):
        real = orig(S, k=k)
        mu = real.mu.copy()
        mu[0] = np.inf
        return slop.SloppinessReport(
            mu=mu, sm_abs=real.sm_abs, sm_rel=real.sm_rel,
            directions=real.directions, k=real.k,
        )

    monkeypatch.setattr(cli_mod.sloppiness, "metrics", fake_metrics)
    code, _, err = run(
        ["sloppiness", "--model", str(siso1_path), "--theta0", "0",
         "--freqs", "0,1", "--eps", "1e-3"],
        capsys,
    )
    assert code == cli.EXIT_INCONSISTENT
    assert "inconsisten" in err


def test_timing_flag_populates(siso1_path, capsys):
    code, out, _ = run(["validate", "--model", str(siso1_path), "--timing"], capsys)
    assert code == 0
    doc = parse(out)
    assert doc["timing"]["wall_seconds"] is not None
