import json

import pytest

from robustgen.cli import main


def run(argv, tmp_path, capsys):
    code = main(argv + ["--out-dir", str(tmp_path), "--quiet"])
    return code, capsys.readouterr()


def test_cover_sweep_writes_csv_and_svg(tmp_path, capsys):
    code, _ = run(["cover-sweep", "--preset", "beta_0.1_0.1", "--d-values", "1-3",
                   "--n", "200", "--trials", "2", "--name", "sweep"], tmp_path, capsys)
    assert code == 0
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[0] == "d,ln_K,mean_t_size,std_t_size" and len(lines) == 4
    assert (tmp_path / "sweep.svg").read_text().startswith("<svg")


def test_mc_verify_pass(tmp_path, capsys):
    code, _ = run(["mc-verify", "--stat", "bhc", "--k", "10", "--n", "100",
                   "--trials", "2000", "--name", "mc"], tmp_path, capsys)
    assert code == 0
    row = (tmp_path / "mc.csv").read_text().splitlines()[1].split(",")
    assert row[0] == "bhc" and row[-1] == "true"


def test_mc_verify_failure_exit_code(tmp_path, capsys):
    # the faithful lemma-5 envelope is undercovering at this configuration
    code, out = run(["mc-verify", "--stat", "lemma5", "--k", "100", "--n", "1000",
                     "--trials", "4000"], tmp_path, capsys)
    assert code == 1
    summary = json.loads(out.err.strip().splitlines()[-1])
    assert summary["status"] == "fail"


def test_trials_zero_is_usage_error(tmp_path, capsys):
    code, out = run(["mc-verify", "--stat", "bhc", "--trials", "0"], tmp_path, capsys)
    assert code == 2 and "trials" in out.err


def test_unknown_bound_is_usage_error(tmp_path, capsys):
    code, _ = run(["bound-eval", "--bounds", "thm9"], tmp_path, capsys)
    assert code == 2


def test_argparse_error_exits_2(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["prop3"])
    assert exc.value.code == 2


def test_bound_eval_rls(tmp_path, capsys):
    code, _ = run(["bound-eval", "--learner", "rls", "--n", "500", "--expect", "thm1<stability",
                   "--format", "json", "--name", "be"], tmp_path, capsys)
    assert code == 0
    rows = json.loads((tmp_path / "be.json").read_text())
    assert {r["bound_name"] for r in rows} == {"prop1", "thm1", "thm2", "thm5", "thm6", "stability"}


def test_bound_eval_expect_failure(tmp_path, capsys):
    code, _ = run(["bound-eval", "--learner", "rls", "--n", "500", "--bounds", "thm1,stability",
                   "--expect", "stability<thm1"], tmp_path, capsys)
    assert code == 1


def test_bound_eval_lasso_csv(tmp_path, capsys):
    data = tmp_path / "d.csv"
    data.write_text("x1,x2,y\n" + "".join(f"{i / 100},{(i * 7 % 100) / 100},{i / 100}\n"
                                          for i in range(100)))
    code, _ = run(["bound-eval", "--learner", "lasso", "--data", str(data),
                   "--bounds", "thm1,prop1", "--name", "lc"], tmp_path, capsys)
    assert code == 0
    assert (tmp_path / "lc.csv").exists()


def test_prop3_warning_when_hypothesis_fails(tmp_path, capsys):
    code, out = run(["prop3", "--alpha", "0.5", "--beta", "3", "--n", "10"], tmp_path, capsys)
    assert code == 0 and "warning" in out.err


def test_prop3_simulation(tmp_path, capsys):
    code, _ = run(["prop3", "--alpha", "2", "--beta", "3", "--n", "10000", "--simulate", "200",
                   "--name", "p3"], tmp_path, capsys)
    assert code == 0
    row = (tmp_path / "p3.csv").read_text().splitlines()[1].split(",")
    assert float(row[8]) <= float(row[5])


@pytest.mark.parametrize("kind", ["lipschitz", "lasso", "pca"])
def test_robustness_cert(kind, tmp_path, capsys):
    code, _ = run(["robustness-cert", "--kind", kind, "--name", "c"], tmp_path, capsys)
    assert code == 0
    assert (tmp_path / "c.csv").read_text().startswith("kind,ln_K,eps_S")


def test_datagen(tmp_path, capsys):
    code, _ = run(["datagen", "--family", "gauss_mix", "--params", "sigma=0.05", "--n", "30",
                   "--dim", "4"], tmp_path, capsys)
    assert code == 0
    lines = (tmp_path / "samples.csv").read_text().splitlines()
    assert lines[0] == "x1,x2,x3,x4" and len(lines) == 31


def test_env_seed_and_flag_precedence(tmp_path, capsys, monkeypatch):
    base = ["datagen", "--n", "5", "--quiet"]
    monkeypatch.setenv("ROBUSTGEN_SEED", "11")
    main(base + ["--out-dir", str(tmp_path / "env"), "--seed", "3"])
    main(base + ["--out-dir", str(tmp_path / "env2")])
    monkeypatch.delenv("ROBUSTGEN_SEED")
    main(base + ["--out-dir", str(tmp_path / "flag"), "--seed", "3"])
    main(base + ["--out-dir", str(tmp_path / "flag11"), "--seed", "11"])
    read = lambda d: (tmp_path / d / "samples.csv").read_text()
    assert read("env") == read("flag")
    assert read("env2") == read("flag11")
    assert read("env2") != read("flag")


def test_bad_env_seed(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("ROBUSTGEN_SEED", "abc")
    code, _ = run(["datagen", "--n", "5"], tmp_path, capsys)
    assert code == 2


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"alpha": 2.0, "beta": 3.0, "n": 500, "name": "fromcfg"}))
    code, _ = run(["prop3", "--alpha", "1", "--beta", "1", "--config", str(cfg), "--n", "800"],
                  tmp_path, capsys)
    assert code == 0
    row = (tmp_path / "fromcfg.csv").read_text().splitlines()[1].split(",")
    # flags beat the file; unflagged file values apply
    assert (row[0], row[1], row[3]) == ("1.0", "1.0", "800")


@pytest.mark.parametrize("argv", [
    ["mc-verify", "--stat", "theorem4", "--k", "10", "--n", "100", "--trials", "9000"],
    ["cover-sweep", "--preset", "gauss_mix_1.0", "--d-values", "1-4", "--n", "100", "--trials", "3"],
])
def test_workers_byte_identical(argv, tmp_path, capsys):
    a = tmp_path / "a"
    b = tmp_path / "b"
    main(argv + ["--seed", "5", "--out-dir", str(a), "--name", "o", "--quiet"])
    main(argv + ["--seed", "5", "--out-dir", str(b), "--name", "o", "--quiet", "--workers", "4"])
    assert (a / "o.csv").read_bytes() == (b / "o.csv").read_bytes()
