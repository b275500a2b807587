import struct

import numpy as np
import pytest

from laekit.cli import main, parse_lambdas, parse_spectrum, resolve_out
from laekit.reports import read_config, read_csv


def run_cli(*args):
    return main([str(a) for a in args])


def small_train_args(out, **overrides):
    base = {
        "m": 6, "n": 8, "k": 3, "lambda": 2.0, "kind": "sum",
        "optimizer": "adam", "lr": 0.05, "epochs": 300, "seed": 0,
    }
    base.update(overrides)
    args = ["train", "--out", out]
    for key, val in base.items():
        args += [f"--{key}", val]
    return args


def test_parse_spectrum_forms():
    assert np.allclose(parse_spectrum("5..1", 5), [5, 4, 3, 2, 1])
    assert np.allclose(parse_spectrum("3.5,2,1", 3), [3.5, 2, 1])
    assert np.allclose(parse_spectrum(None, 3), [3, 2, 1])
    with pytest.raises(ValueError):
        parse_spectrum("1..5", 5)
    assert parse_lambdas("1,10,100") == [1.0, 10.0, 100.0]
    with pytest.raises(ValueError):
        parse_lambdas(",")


def test_resolve_out_env_override(monkeypatch, tmp_path):
    monkeypatch.delenv("LAEKIT_OUT", raising=False)
    assert resolve_out(None, "train").parts[-2:] == ("runs", "train")
    monkeypatch.setenv("LAEKIT_OUT", str(tmp_path / "root"))
    assert resolve_out(None, "train") == tmp_path / "root" / "train"
    assert resolve_out("exp1", "train") == tmp_path / "root" / "exp1"
    absolute = tmp_path / "abs"
    assert resolve_out(str(absolute), "train") == absolute


def test_train_artifacts(tmp_path):
    out = tmp_path / "t"
    assert run_cli(*small_train_args(out)) == 0
    for name in ("config.txt", "trace.csv", "summary.txt", "alignment.csv",
                 "shrinkage.csv", "trace.png", "alignment.png", "shrinkage.png"):
        assert (out / name).exists(), name
    schema, header, rows = read_csv(out / "trace.csv")
    assert schema == "# schema: trace v1"
    assert header == ["epoch", "loss", "transpose_gap", "grad_norm"]
    assert float(rows[-1][2]) < 1e-4  # sum loss ties at convergence
    cfg = read_config(out / "config.txt")
    assert cfg["kind"] == "sum" and cfg["command"] == "train"


def test_train_no_figures(tmp_path):
    out = tmp_path / "nf"
    assert run_cli(*small_train_args(out), "--no-figures") == 0
    assert (out / "trace.csv").exists()
    assert not (out / "trace.png").exists()


def test_train_unregularized_not_aligned(tmp_path):
    out = tmp_path / "u"
    assert run_cli(*small_train_args(out, kind="unregularized", epochs=600)) == 0
    summary = (out / "summary.txt").read_text()
    assert "decoder_aligned = False" in summary


def test_train_epochs_zero_is_config_error(tmp_path):
    assert run_cli(*small_train_args(tmp_path / "z", epochs=0)) == 2


def test_train_missing_input_fails(tmp_path):
    code = run_cli("train", "--input", tmp_path / "nope.idx", "--out", tmp_path / "x")
    assert code == 1


def test_train_reproducible_csv_bytes(tmp_path):
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    run_cli(*small_train_args(out1, epochs=100), "--no-figures")
    run_cli(*small_train_args(out2, epochs=100), "--no-figures")
    assert (out1 / "trace.csv").read_bytes() == (out2 / "trace.csv").read_bytes()
    assert (out1 / "shrinkage.csv").read_bytes() == (out2 / "shrinkage.csv").read_bytes()


def test_config_file_and_flag_priority(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text('kind = "product"\nepochs = 120\nlambda = 3.0\nm = 6\nn = 8\nk = 3\n')
    out = tmp_path / "c"
    assert run_cli("train", "--config", cfg, "--out", out,
                   "--kind", "sum", "--no-figures") == 0
    resolved = read_config(out / "config.txt")
    assert resolved["kind"] == "sum"      # flag wins
    assert resolved["epochs"] == 120      # config applies
    assert resolved["lam"] == 3.0


def test_landscape_artifacts(tmp_path):
    out = tmp_path / "l"
    assert run_cli("landscape", "--m", 4, "--n", 6, "--k", 2, "--lambda", 0.5,
                   "--kind", "sum", "--out", out) == 0
    schema, header, rows = read_csv(out / "criticals.csv")
    assert schema == "# schema: criticals v1"
    assert len(rows) == 1 + 4 + 6  # sizes 0, 1, 2 with all sigma^2 > lam
    gn = [float(r[header.index("grad_norm")]) for r in rows]
    assert max(gn) <= 1e-6
    for r in rows:
        assert r[header.index("hessian_neg")] != ""
        assert r[header.index("descending")] == r[header.index("hessian_neg")]


def test_landscape_collapse_regime(tmp_path):
    out = tmp_path / "lc"
    assert run_cli("landscape", "--m", 3, "--n", 5, "--k", 2, "--lambda", 100.0,
                   "--kind", "sum", "--out", out) == 0
    _, _, rows = read_csv(out / "criticals.csv")
    assert len(rows) == 1  # only the empty index set survives


def test_landscape_full_rank_identity(tmp_path):
    out = tmp_path / "lf"
    assert run_cli("landscape", "--m", 3, "--n", 5, "--k", 3, "--lambda", 0,
                   "--kind", "unregularized", "--out", out, "--no-figures") == 0
    _, header, rows = read_csv(out / "criticals.csv")
    full = [r for r in rows if r[header.index("index_set")] == "1 2 3"]
    assert len(full) == 1
    assert float(full[0][header.index("loss")]) <= 1e-9


def test_sweep_artifacts_and_theory(tmp_path):
    out = tmp_path / "s"
    assert run_cli("sweep", "--m", 8, "--n", 10, "--k", 4, "--lambda", "1,4",
                   "--kind", "sum", "--epochs", 800, "--out", out) == 0
    schema, header, rows = read_csv(out / "shrinkage.csv")
    assert schema == "# schema: shrinkage-sweep v1"
    lams = {float(r[0]) for r in rows}
    assert lams == {1.0, 4.0}
    for r in rows:
        theory = float(r[header.index("tau_sq_theory")])
        tau = float(r[header.index("tau_sq")])
        if theory > 0:
            assert abs(tau - theory) / theory < 0.02
    assert (out / "shrinkage.png").exists()


def test_sweep_empty_lambda_errors(tmp_path):
    assert run_cli("sweep", "--lambda", ",", "--out", tmp_path / "e") == 2


def test_sweep_worker_pool(tmp_path):
    out = tmp_path / "sw"
    code = run_cli("sweep", "--m", 5, "--n", 6, "--k", 2, "--lambda", "1,2",
                   "--kind", "sum", "--epochs", 150, "--workers", 2,
                   "--out", out, "--no-figures")
    assert code == 0
    _, _, rows = read_csv(out / "shrinkage.csv")
    assert {float(r[0]) for r in rows} == {1.0, 2.0}


def test_morse_artifacts(tmp_path):
    out = tmp_path / "m"
    assert run_cli("morse", "--m", 4, "--k", 2, "--out", out) == 0
    _, header, rows = read_csv(out / "cells.csv")
    assert sorted(int(r[header.index("morse_index")]) for r in rows) == [0, 1, 2, 2, 3, 4]
    parity = (out / "parity.txt").read_text()
    assert "all_trajectory_counts_even = True" in parity
    assert "counts_match = True" in parity
    assert (out / "cells.png").exists()


def test_morse_guard_rail(tmp_path):
    assert run_cli("morse", "--m", 21, "--k", 2, "--out", tmp_path / "g") == 2


def test_pca_synthetic_end_to_end(tmp_path):
    out = tmp_path / "p"
    assert run_cli("pca", "--m", 10, "--n", 12, "--k", 5, "--lambda", 4.0,
                   "--epochs", 6000, "--seed", 1, "--out", out) == 0
    _, header, rows = read_csv(out / "eigenvalues.csv")
    for r in rows:
        assert float(r[header.index("rel_err")]) < 0.02
        assert float(r[header.index("abs_cos")]) > 0.98
    summary = (out / "summary.txt").read_text()
    assert "largest_principal_angle_deg" in summary
    assert (out / "directions.csv").exists()
    assert (out / "components.png").exists()


def test_pca_collapse_message(tmp_path, capsys):
    out = tmp_path / "pc"
    assert run_cli("pca", "--m", 4, "--n", 6, "--k", 2, "--lambda", 1000.0,
                   "--epochs", 400, "--out", out, "--no-figures") == 0
    captured = capsys.readouterr().out
    assert "collapsed" in captured


def test_pca_csv_input(tmp_path):
    rng = np.random.default_rng(3)
    base = rng.standard_normal((5, 2)) @ rng.standard_normal((2, 60)) * 3.0
    noise = rng.standard_normal((5, 60)) * 0.05
    path = tmp_path / "data.csv"
    np.savetxt(path, base + noise, delimiter=",")
    out = tmp_path / "pcsv"
    assert run_cli("pca", "--input", path, "--k", 2, "--lambda", 200.0,
                   "--epochs", 500, "--anneal", "--out", out, "--no-figures") == 0
    _, _, rows = read_csv(out / "directions.csv")
    assert len(rows) == 5
    _, header, erows = read_csv(out / "eigenvalues.csv")
    cos = [float(r[header.index("abs_cos")]) for r in erows]
    assert min(cos) > 0.95


def test_pca_idx_input(tmp_path):
    rng = np.random.default_rng(4)
    basis = np.linalg.qr(rng.standard_normal((16, 4)))[0]
    weights = np.array([6.0, 3.5, 0.3, 0.2])
    imgs = basis @ (weights[:, None] * rng.standard_normal((4, 40)))
    imgs = (imgs - imgs.min()) / (imgs.max() - imgs.min())
    vals = np.clip(imgs * 255, 0, 255).astype(np.uint8)
    path = tmp_path / "imgs.idx"
    path.write_bytes(struct.pack(">IIII", 0x00000803, 40, 4, 4) + vals.T.tobytes())
    out = tmp_path / "pidx"
    assert run_cli("pca", "--input", path, "--k", 2, "--lambda", 0.92,
                   "--lr", 0.02, "--epochs", 600, "--anneal",
                   "--out", out, "--no-figures") == 0
    _, _, rows = read_csv(out / "directions.csv")
    assert len(rows) == 16


def test_verify_subcommand(tmp_path):
    out = tmp_path / "v"
    assert run_cli("verify", "--out", out) == 0
    text = (out / "verify.txt").read_text()
    assert "FAIL" not in text
    assert text.count("PASS") >= 12
