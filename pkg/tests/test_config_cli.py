import csv
import json
import subprocess
import sys

import pytest

from gelfand_radial import ConfigError, PartialFailure
from gelfand_radial.cli import EXIT_CONFIG, EXIT_OK, EXIT_PARTIAL, main
from gelfand_radial.config import ExperimentConfig, parse_config, parse_range
from gelfand_radial.runner import run_experiment, sweep


def _rows(path):
    with open(path, newline="") as fh:
        return [r for r in csv.reader(l for l in fh if not l.startswith("#"))]


def test_parse_range_forms():
    assert parse_range("1, 2.5,3") == (1.0, 2.5, 3.0)
    assert parse_range("-3:3:0.5")[0] == -3.0 and parse_range("-3:3:0.5")[-1] == 3.0
    assert len(parse_range("0:1:0.1")) == 11
    assert parse_range("0:1:0.1")[3] == 0.3


@pytest.mark.parametrize("text", ["1:0:1", "0:1:0", "a,b", "0:1"])
def test_parse_range_errors(text):
    with pytest.raises(ConfigError):
        parse_range(text)


def test_parse_config_sections():
    cfg = parse_config(
        """
        [experiment]
        profile = polyexp:0.75
        N = 4
        alphas = -1:1:1
        tasks = solve, stability
        [sweep]
        n = 2, 3
        """
    )
    assert cfg.profile == "polyexp:0.75" and cfg.N == 4
    assert cfg.alphas == (-1.0, 0.0, 1.0) and cfg.tasks == ("solve", "stability")
    assert cfg.sweep_N == (2, 3) and cfg.is_sweep and cfg.n_cells == 6


@pytest.mark.parametrize(
    "text",
    [
        "[experiment]\nprofile = torus\n",
        "[experiment]\ntasks = fly\n",
        "[experiment]\ncolour = red\n",
        "[other]\nx = 1\n",
        "[experiment]\nN = 1\n",
        "[experiment]\ntasks = eta\nN = 10\n",
        "[experiment]\ntasks = intersect\nalphas = 1\n",
        "[experiment]\ntol = 1e-3\n",
        "[experiment]\nN = three\n",
        "not an ini file",
    ],
)
def test_bad_configs(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_solve_output_monotone(tmp_path):
    cfg = ExperimentConfig(profile="hyperbolic", N=3, alphas=(0.0,), tasks=("solve",), r_max=20.0, output_dir=str(tmp_path))
    man = run_experiment(cfg)
    rows = _rows(tmp_path / "solve.csv")
    assert rows[0][:4] == ["r", "u", "u1", "F"]
    u = [float(r[1]) for r in rows[1:]]
    assert all(b <= a for a, b in zip(u, u[1:]))
    saved = json.loads((tmp_path / "manifest.json").read_text())
    assert saved["tasks"]["solve"]["status"] == "ok" and "numpy" in saved["versions"]
    assert man["inputs"]["N"] == 3


def test_intersect_task_flat_n10(tmp_path):
    cfg = ExperimentConfig(profile="euclidean", N=10, alphas=(0.0, 1.0), tasks=("intersect",), output_dir=str(tmp_path))
    run_experiment(cfg)
    text = (tmp_path / "intersect.csv").read_text()
    assert "crossings=0" in text
    assert len(_rows(tmp_path / "intersect.csv")) == 1


def test_eta_task(tmp_path):
    cfg = ExperimentConfig(profile="hyperbolic", N=3, tasks=("eta",), output_dir=str(tmp_path))
    man = run_experiment(cfg)
    assert man["tasks"]["eta"]["results"]["eta_hat"] > 0


def test_one_cell_sweep_equals_single_run(tmp_path):
    base = dict(profile="hyperbolic", N=3, alphas=(0.5,), r_max=30.0)
    run_experiment(ExperimentConfig(tasks=("stability",), output_dir=str(tmp_path / "a"), **base))
    sweep(ExperimentConfig(output_dir=str(tmp_path / "b"), sweep_alphas=(0.5,), **base))
    assert (tmp_path / "a" / "stability.csv").read_bytes() == (tmp_path / "b" / "sweep.csv").read_bytes()


def test_alpha_sweep_monotone(tmp_path):
    cfg = ExperimentConfig(output_dir=str(tmp_path), sweep_alphas=parse_range("-3:3:0.5"))
    sweep(cfg)
    decisions = [r[1] for r in _rows(tmp_path / "sweep.csv")[1:]]
    first_unstable = decisions.index("UnstableAt")
    assert set(decisions[:first_unstable]) == {"StableUpTo"} and set(decisions[first_unstable:]) == {"UnstableAt"}


def test_sweep_worker_count_irrelevant(tmp_path):
    out = []
    for w in (1, 3):
        cfg = ExperimentConfig(
            output_dir=str(tmp_path / str(w)), workers=w, sweep_profiles=("hyperbolic", "spliced:2:1"), sweep_N=(3, 4), sweep_alphas=(0.0, 2.0)
        )
        sweep(cfg)
        out.append((tmp_path / str(w) / "sweep.csv").read_bytes())
    assert out[0] == out[1]


def test_partial_failure_is_reported(tmp_path):
    # r_max = 3 leaves |u'| too large to classify the finite limit
    cfg = ExperimentConfig(profile="polyexp:2", N=3, alphas=(0.0,), tasks=("solve", "asymptotics"), r_max=3.0, output_dir=str(tmp_path))
    with pytest.raises(PartialFailure) as info:
        run_experiment(cfg)
    assert info.value.failed[0]["task"] == "asymptotics"
    assert (tmp_path / "solve.csv").exists()
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["failed"]


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["solve", "--profile", "hyperbolic", "-N", "3", "--alphas", "0", "--r-max", "5", "--output-dir", str(tmp_path)]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["solve"]["status"] == "ok"
    assert main(["solve", "--profile", "sphere", "--output-dir", str(tmp_path)]) == EXIT_CONFIG
    args = ["run", "--profile", "polyexp:2", "--alphas", "0", "--r-max", "3", "--output-dir", str(tmp_path / "p")]
    cfg = tmp_path / "c.ini"
    cfg.write_text("[experiment]\ntasks = solve, asymptotics\n")
    assert main(args + ["--config", str(cfg)]) == EXIT_PARTIAL


def test_config_file_overrides_flags(tmp_path):
    ini = tmp_path / "e.ini"
    ini.write_text(f"[experiment]\nN = 4\nr_max = 4\noutput_dir = {tmp_path / 'out'}\n")
    assert main(["solve", "-N", "3", "--config", str(ini)]) == EXIT_OK
    man = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert man["inputs"]["N"] == 4


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("GELFAND_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["check-profile", "--profile", "spliced:2:1"]) == EXIT_OK
    assert (tmp_path / "env" / "check-profile.csv").exists()


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "gelfand_radial.cli", "emden", "--profile", "euclidean", "-N", "3", "--output-dir", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert _rows(tmp_path / "emden.csv")[0] == ["t", "y", "z", "angle_cum"]
