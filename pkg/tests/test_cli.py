import json
import math

import numpy as np
import pytest
from scipy.special import jv

import qkr.cli as cli
from qkr import ConfigError, ExperimentConfig, ResultTable, run, validate
from qkr.cli import build_config, load_config_file, main


def read_csv(path):
    meta, columns, rows = {}, None, []
    for line in path.read_text().splitlines():
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                meta[key.strip()] = value.strip()
            continue
        if columns is None:
            columns = line.split(",")
            continue
        rows.append(line.split(","))
    return meta, columns, rows


# -------------------------------------------------------------------- config

def test_unknown_experiment_and_key_rejected():
    with pytest.raises(ConfigError):
        ExperimentConfig("teleport")
    with pytest.raises(ConfigError):
        ExperimentConfig("walk", {"bogus": 1})


def test_defaults_are_applied():
    config = build_config("amplify", None)
    assert config.params["scheme"] == "modified"
    assert config.params["marked"] == (-1, 0, 1)
    assert config.params["r"] == "auto"
    assert config.params["n_max"] == "auto"


def test_config_file_parsing(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text(
        "# experiment configuration\n"
        "experiment = walk\n"
        "phi = 1.5   # inline comment\n"
        "count = 10\n"
        "\n"
        "guard = false\n"
    )
    config = build_config("walk", path)
    assert config.params["phi"] == 1.5
    assert config.params["count"] == 10
    assert config.params["guard"] is False
    assert config.params["n_max"] == 128  # untouched default


def test_config_file_tuple_values(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text("marked = -11, 0, 11\n")
    config = build_config("noise-sweep", path)
    assert config.params["marked"] == (-11, 0, 11)


def test_config_file_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config_file(tmp_path / "absent.cfg")
    bad = tmp_path / "bad.cfg"
    bad.write_text("this line has no equals sign\n")
    with pytest.raises(ConfigError):
        load_config_file(bad)
    empty_value = tmp_path / "empty.cfg"
    empty_value.write_text("phi =\n")
    with pytest.raises(ConfigError):
        load_config_file(empty_value)


def test_config_file_experiment_mismatch(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text("experiment = walk\n")
    with pytest.raises(ConfigError):
        build_config("amplify", path)


def test_set_overrides():
    config = build_config("amplify", None, ["phi=3.0", "marked=0,2"])
    assert config.params["phi"] == 3.0
    assert config.params["marked"] == (0, 2)
    with pytest.raises(ConfigError):
        build_config("amplify", None, ["not-a-pair"])


def test_seed_plumbs_only_into_seeded_experiments():
    assert build_config("estimate", None, [], 7).params["seed"] == 7
    with pytest.raises(ConfigError):
        build_config("walk", None, [], 7)
    with pytest.raises(ConfigError):
        build_config("estimate", None, [], -1)
    with pytest.raises(ConfigError):
        build_config("estimate", None, [], 2**64)


# ---------------------------------------------------------------- experiments

def test_walk_rows_follow_bessel_law(tmp_path):
    out = tmp_path / "walk.csv"
    assert main(["walk", "--out", str(out)]) == 0
    meta, columns, rows = read_csv(out)
    assert columns == ["n", "probability"]
    assert len(rows) == 257
    n = np.array([int(r[0]) for r in rows])
    p = np.array([float(r[1]) for r in rows])
    np.testing.assert_allclose(p, jv(n, 40.0) ** 2, atol=1e-9)
    assert float(meta["result.mean_energy"]) == pytest.approx(400.0, rel=1e-10)


def test_init_profile_reports_flatness_ordering():
    table = run(build_config("init-profile", None))
    flat = {
        name: float(table.metadata[f"result.flatness.{name}"])
        for name in ("cosine", "modified", "detuned")
    }
    assert flat["modified"] < flat["detuned"] < flat["cosine"]
    schemes = {row[0] for row in table.rows}
    assert schemes == {"cosine", "modified", "detuned"}
    resolved = table.metadata["config.n_max"]
    assert isinstance(resolved, int) and resolved >= 32
    assert len(table.rows) == 3 * (2 * resolved + 1)


def test_amplify_defaults():
    table = run(build_config("amplify", None))
    assert table.metadata["config.n_max"] == 179
    assert table.metadata["result.r_used"] == 1
    # frozen from tests/oracles/modified_profile.py
    assert table.metadata["result.a0"] == pytest.approx(0.24894506418765922, abs=1e-9)
    assert table.metadata["result.peak"] > 0.9999
    assert [k for k, _ in table.rows] == [0, 1]


def test_amplify_marked_auto_resolves_from_sigma():
    table = run(build_config("amplify", None, ["marked=auto"]))
    assert table.metadata["config.marked"] == (-1, 0, 1)


def test_amplify_explicit_iterations():
    table = run(build_config("amplify", None, ["r=4"]))
    assert len(table.rows) == 5
    law = [
        math.sin((2 * k + 1) * math.asin(math.sqrt(table.metadata["result.a0"]))) ** 2
        for k in range(5)
    ]
    np.testing.assert_allclose([s for _, s in table.rows], law, atol=1e-9)


def test_estimate_exact_mode():
    table = run(build_config("estimate", None))
    shots, expectation, theta_hat, a_hat, r_hat = table.rows[0]
    assert shots == 0
    a0 = float(table.metadata["result.a0_prepared"])
    assert a_hat == pytest.approx(a0, abs=1e-12)
    assert expectation == pytest.approx(-math.cos(2.0 * math.asin(math.sqrt(a0))), abs=1e-12)
    assert r_hat == 1


def test_estimate_sampled_mode_deterministic():
    first = run(build_config("estimate", None, ["shots=200"], seed=9))
    second = run(build_config("estimate", None, ["shots=200"], seed=9))
    other = run(build_config("estimate", None, ["shots=200"], seed=10))
    assert first.rows == second.rows
    assert first.rows != other.rows


def test_noise_sweep_small():
    config = build_config("noise-sweep", None, ["realizations=20", "k_max=4"])
    table = run(config)
    assert table.metadata["config.n_max"] == 413
    gammas = sorted({row[0] for row in table.rows})
    assert gammas == [0.0, 2e-4, 5e-4, 1e-3]
    assert len(table.rows) == 4 * 5
    noiseless = [row for row in table.rows if row[0] == 0.0]
    assert all(se == 0.0 for *_, se in noiseless)


def test_error_scaling_small():
    config = build_config("error-scaling", None, ["realizations=50", "k_max=4"])
    table = run(config)
    assert len(table.rows) == 3 * 5
    # R=50 is far too noisy for the collapse itself; just check the plumbing
    assert math.isfinite(float(table.metadata["result.collapse_spread"]))
    assert int(table.metadata["result.peak_index"]) == 4


def test_detune_sweep_small():
    config = build_config("detune-sweep", None, ["k_max=3"])
    table = run(config)
    assert len(table.rows) == 4 * 4
    peaks = table.metadata["result.peaks"]
    assert len(peaks) == 4
    assert all(b <= a for a, b in zip(peaks, peaks[1:]))


def test_runtime_scaling_uniform_family():
    table = run(build_config("runtime-scaling", None, ["family=uniform"]))
    # frozen from tests/oracles/grover_counts.py
    assert float(table.metadata["result.slope"]) == pytest.approx(
        0.5176478853608643, abs=1e-12
    )
    assert len(table.rows) == 7


# ------------------------------------------------------- output and determinism

def test_render_format():
    table = run(build_config("amplify", None))
    text = table.render()
    lines = text.splitlines()
    assert lines[0] == "# qkr csv v1"
    assert any(line.startswith("# experiment = amplify") for line in lines)
    assert any(line.startswith("# units = momentum in hbar") for line in lines)
    assert "oracle_calls,success_probability" in lines
    # floats carry 17 significant digits
    peak = table.metadata["result.peak"]
    assert f"# result.peak = {format(float(peak), '.17g')}" in lines


def test_reruns_are_byte_identical(tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for path in paths:
        code = main(
            ["estimate", "--set", "shots=100", "--seed", "3", "--out", str(path)]
        )
        assert code == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_run_emits_diagnostics_on_stderr(capsys):
    # n_max=64 is below twice the total kick strength (80), so the static
    # heuristic warns, but the adaptive estimate (63) shows the guard holds
    run(build_config("walk", None, ["n_max=64"]))
    err = capsys.readouterr().err
    assert "warning:" in err and "n_max=64" in err


# ----------------------------------------------------------------- exit codes

def test_main_success_prints_summary(tmp_path, capsys):
    out = tmp_path / "amp.csv"
    assert main(["amplify", "--out", str(out)]) == 0
    stdout = capsys.readouterr().out
    assert "amplify: wrote 2 rows" in stdout
    assert "result.peak" in stdout


def test_main_config_error_exits_2(tmp_path, capsys):
    out = tmp_path / "x.csv"
    assert main(["amplify", "--set", "bogus=1", "--out", str(out)]) == 2
    record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert record["exit_code"] == 2
    assert record["error"] == "ConfigError"
    assert not out.exists()


def test_main_requires_out(capsys):
    assert main(["walk"]) == 2
    record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert "--out" in record["message"]


def test_main_rejects_unknown_experiment(capsys):
    assert main(["teleport", "--out", "x.csv"]) == 2


def test_main_truncation_exits_3(tmp_path, capsys):
    out = tmp_path / "x.csv"
    code = main(["walk", "--set", "n_max=32", "--out", str(out)])
    assert code == 3
    record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert record["error"] == "TruncationError"
    assert record["exit_code"] == 3


def test_main_numerical_fault_exits_4(tmp_path, capsys, monkeypatch):
    def poisoned(params):
        return ResultTable("walk", ("n", "probability"), [(0, math.nan)], {})

    monkeypatch.setitem(cli._RUNNERS, "walk", poisoned)
    out = tmp_path / "x.csv"
    assert main(["walk", "--out", str(out)]) == 4
    record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert record["error"] == "NumericalFault"
    assert record["exit_code"] == 4
    assert not out.exists()


def test_main_seed_on_unseeded_experiment(tmp_path, capsys):
    out = tmp_path / "x.csv"
    assert main(["walk", "--seed", "5", "--out", str(out)]) == 2


# -------------------------------------------------------------------- validate

def test_validate_clean_config(tmp_path, capsys):
    path = tmp_path / "walk.cfg"
    path.write_text("experiment = walk\n")
    assert main(["validate", "--config", str(path)]) == 0
    assert capsys.readouterr().out.strip() == "ok"


def test_validate_reports_rounding_notice(tmp_path, capsys):
    path = tmp_path / "amp.cfg"
    path.write_text("experiment = amplify\n")
    assert main(["validate", "--config", str(path)]) == 0
    stdout = capsys.readouterr().out
    assert "notice:" in stdout and "rounding" in stdout


def test_validate_warning_keeps_exit_zero(tmp_path, capsys):
    path = tmp_path / "walk.cfg"
    path.write_text("experiment = walk\nn_max = 64\n")
    assert main(["validate", "--config", str(path)]) == 0
    assert "warning:" in capsys.readouterr().out


def test_validate_errors_exit_2(tmp_path, capsys):
    path = tmp_path / "amp.cfg"
    path.write_text("experiment = amplify\nmarked = 0.5, 1\n")
    assert main(["validate", "--config", str(path)]) == 2
    assert "marked sites must be integers" in capsys.readouterr().out


def test_validate_epsilon_warning(tmp_path, capsys):
    path = tmp_path / "det.cfg"
    path.write_text("experiment = detune-sweep\nepsilons = 0.0, 0.02\n")
    assert main(["validate", "--config", str(path)]) == 0
    assert "perturbative regime" in capsys.readouterr().out


def test_validate_needs_config_with_experiment(tmp_path, capsys):
    assert main(["validate"]) == 2
    path = tmp_path / "none.cfg"
    path.write_text("phi = 2.0\n")
    assert main(["validate", "--config", str(path)]) == 2


def test_run_refuses_configs_with_errors():
    with pytest.raises(ConfigError):
        run(build_config("detune-sweep", None, ["epsilons=-0.1,0.1"]))


def test_validate_function_flags_empty_marked():
    messages = validate(ExperimentConfig("amplify", {"marked": ()}))
    assert any("error" in m and "empty" in m for m in messages)
