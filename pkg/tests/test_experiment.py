import csv

import numpy as np
import pytest

from anisovisc.experiment import (ConfigError, ExperimentConfig, load_config,
                                  main, parse_config, read_field, write_field)
from anisovisc.grid import Field, make_grid

RIEMANN = """
# Burgers shock on a periodic strip
grid.x_min = -1
grid.x_max = 1
grid.y_min = -4
grid.y_max = 4
grid.nx = 4
grid.ny = 128
flux.model = burgers
initial.kind = riemann
initial.u_l = 1
initial.u_r = 0
time.t_end = 1
solver.epsilon = {eps}
cone.L = 3
"""

# window ramps of width 0.05 need steps well below it
FINE = RIEMANN.replace("grid.ny = 128", "grid.ny = 512")

ENTROPY = """
entropy.psi = const:0.25; const:0.5; const:0.75; affine:p=0.5,q=0.2; gaussian:A=0.6,sigma=0.3
entropy.test_functions = beta=0.4,nu=0.1,tau=0.9,alpha0=0.05,L=2,alpha=4; beta=0.3,nu=0.2,tau=0.6,alpha0=0.1,L=1.5,alpha=8
"""


def write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_parse_config_comments_and_errors():
    assert parse_config("grid.nx = 8  # cells\n\n# only a comment\n") == {"grid.nx": "8"}
    with pytest.raises(ConfigError, match="grid.nxx"):
        parse_config("grid.nxx = 8")
    with pytest.raises(ConfigError, match="line 1"):
        parse_config("grid.nx 8")


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_mapping({"grid.nx": "two"})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_mapping({"solver.cfl": "2"})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_mapping({"initial.kind": "tophat"})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_mapping({"flux.model": "cubic"})


def test_auto_cone_resolution(tmp_path):
    cfg = load_config(write(tmp_path, RIEMANN.format(eps=0)))
    cone = cfg.resolve_cone()
    assert 1.0 < cone.M < 1.02 and cone.L > cone.M * cfg.time.t_end
    cfg.cone_L = 0.5
    with pytest.raises(ConfigError, match="must exceed"):
        cfg.resolve_cone()


def test_field_snapshot_roundtrip(tmp_path):
    g = make_grid(-1, 2, 0, 1, 5, 4)
    rng = np.random.default_rng(0)
    f = Field(g, rng.normal(size=g.shape) / 3, time=0.123456789)
    write_field(tmp_path / "f.txt", f)
    lines = (tmp_path / "f.txt").read_text().splitlines()
    assert lines[0] == "anisovisc-field v1"
    assert len(lines) == 2 + g.ny and len(lines[2].split()) == g.nx
    back = read_field(tmp_path / "f.txt")
    assert back.grid == g and back.time == f.time
    assert np.array_equal(back.values, f.values)


def test_solve_constant(tmp_path):
    cfg = write(tmp_path, RIEMANN.format(eps=0.01) + "initial.kind = constant\ninitial.value = 0.5\n")
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    log = np.genfromtxt(tmp_path / "o" / "step_log.csv", delimiter=",", names=True)
    np.testing.assert_allclose(log["mass"], 0.5 * 16, rtol=1e-14)
    assert np.all(log["tv"] < 1e-12)


def test_solve_riemann_shock_position(tmp_path):
    cfg = write(tmp_path, RIEMANN.format(eps=0))
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "o"), "--plot"]) == 0
    f = read_field(tmp_path / "o" / "final_field.txt")
    prof, y = f.values[0], f.grid.y_centers
    inner = np.abs(y) < 2
    k = np.nonzero(inner[:-1] & (prof[:-1] >= 0.5) & (prof[1:] < 0.5))[0][0]
    assert abs(0.5 * (y[k] + y[k + 1]) - 0.5) <= 2 * f.grid.dy
    assert (tmp_path / "o" / "final_field.svg").exists()


def test_malformed_key_exit_2(tmp_path, capsys):
    cfg = write(tmp_path, RIEMANN.format(eps=0) + "solver.epsilom = 0.1\n")
    assert main(["solve", "--config", cfg, "--out", str(tmp_path)]) == 2
    assert "solver.epsilom" in capsys.readouterr().err
    assert main(["solve", "--config", str(tmp_path / "missing.cfg")]) == 2


def test_sweep_passes_and_is_reproducible(tmp_path):
    text = RIEMANN.format(eps=0) + "reference.refine = 1\nsweep.epsilons = 0.08,0.04,0.02,0.01\n"
    cfg = write(tmp_path, text)
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "a"), "--plot"]) == 0
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "b"), "--threads", "2"]) == 0
    a = (tmp_path / "a" / "sweep.csv").read_bytes()
    assert a == (tmp_path / "b" / "sweep.csv").read_bytes()
    assert a.splitlines()[0] == b"epsilon,error,pairwise_rate"
    summary = (tmp_path / "a" / "sweep_summary.txt").read_text()
    assert "PASS" in summary
    assert (tmp_path / "a" / "sweep.svg").exists()


def test_sweep_threshold_failure_and_degenerate(tmp_path):
    text = RIEMANN.format(eps=0) + "reference.refine = 1\nsweep.epsilons = 0.08,0.04,0.02\nsweep.threshold = 5\n"
    assert main(["sweep", "--config", write(tmp_path, text), "--out", str(tmp_path)]) == 1
    text = RIEMANN.format(eps=0) + "sweep.epsilons = 0.01,0.01,0.01\n"
    assert main(["sweep", "--config", write(tmp_path, text), "--out", str(tmp_path)]) == 2


def test_sweep_linear_exact_reference_notes_floor(tmp_path):
    text = """
grid.x_min = -6
grid.x_max = 6
grid.y_min = -4
grid.y_max = 4
grid.nx = 32
grid.ny = 64
flux.model = linear:a=1
initial.kind = gaussian_x_times_step_y
initial.sigma = 0.5
initial.width = 0.5
time.t_end = 0.5
reference.kind = linear_gaussian
cone.L = 3
sweep.epsilons = 0.04,0.02,0.01
sweep.threshold = 0
"""
    assert main(["sweep", "--config", write(tmp_path, text), "--out", str(tmp_path)]) == 0
    assert "scheme error" in (tmp_path / "sweep_summary.txt").read_text()


def test_entropy_check_admissible(tmp_path):
    cfg = write(tmp_path, FINE.format(eps=0.01) + ENTROPY)
    assert main(["entropy-check", "--config", cfg, "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "entropy_residuals.csv").read_text().splitlines()
    assert len(rows) == 1 + 10 and all(r.endswith("pass") for r in rows[1:])


def test_entropy_check_planted_violation(tmp_path):
    cfg = write(tmp_path, FINE.format(eps=0.01) + ENTROPY + "entropy.source = travelling_jump\n")
    assert main(["entropy-check", "--config", cfg, "--out", str(tmp_path)]) == 1
    assert "fail" in (tmp_path / "entropy_residuals.csv").read_text()


def test_entropy_check_psi_outside_range(tmp_path):
    # psi above every value: sign terms are constant and the residual is tiny
    cfg = write(tmp_path, FINE.format(eps=0.01) + ENTROPY.replace(
        "const:0.25; const:0.5; const:0.75; affine:p=0.5,q=0.2; gaussian:A=0.6,sigma=0.3", "const:2"))
    assert main(["entropy-check", "--config", cfg, "--out", str(tmp_path)]) == 0
    with open(tmp_path / "entropy_residuals.csv") as fh:
        for row in csv.DictReader(fh):
            assert abs(float(row["residual"])) < 1e-3 * float(row["support_volume"])


def test_entropy_check_support_violation(tmp_path):
    text = RIEMANN.format(eps=0.01) + "entropy.test_functions = beta=0.6,nu=0.1,tau=0.9,alpha0=0.05,L=2,alpha=4\n"
    assert main(["entropy-check", "--config", write(tmp_path, text), "--out", str(tmp_path)]) == 2
    assert "support_violation" in (tmp_path / "entropy_residuals.csv").read_text()


def test_properties_pass(tmp_path, capsys):
    cfg = write(tmp_path, RIEMANN.format(eps=0.01))
    assert main(["properties", "--config", cfg, "--out", str(tmp_path)]) == 0
    assert "max_dudt_l1" in capsys.readouterr().out


def test_properties_zero_field(tmp_path):
    cfg = write(tmp_path, RIEMANN.format(eps=0.01) + "initial.kind = constant\ninitial.value = 0\n")
    assert main(["properties", "--config", cfg, "--out", str(tmp_path)]) == 0


def test_properties_overlong_step(tmp_path):
    # three cells per step at shock speed 1/2: the Godunov update overshoots
    cfg = write(tmp_path, RIEMANN.format(eps=0.01) + "solver.dt = 0.1875\n")
    assert main(["properties", "--config", cfg, "--out", str(tmp_path)]) == 1
    assert "FAIL" in (tmp_path / "properties_summary.txt").read_text()


def test_properties_reports_boundary_inflow(tmp_path):
    # transparent zero_flux edges let f(u_l) flow in: mass is not conserved
    cfg = write(tmp_path, RIEMANN.format(eps=0.01) + "solver.boundary = zero_flux\n")
    assert main(["properties", "--config", cfg, "--out", str(tmp_path)]) == 1
    assert "mass drift" in (tmp_path / "properties_summary.txt").read_text()


def test_entropy_check_warns_on_coarse_frames(tmp_path, capsys):
    cfg = write(tmp_path, RIEMANN.format(eps=0.01) + ENTROPY)
    main(["entropy-check", "--config", cfg, "--out", str(tmp_path)])
    assert "frame spacing" in capsys.readouterr().err
