import json

import numpy as np
import pytest

from paraqg.config import RunConfig
from paraqg.experiments import (run_consistency, run_eps_convergence,
                                run_regularity, run_solve)
from paraqg.pqgf import read_snapshot


def test_run_solve_tiny(tmp_path):
    cfg = RunConfig(grid_n=16, dt=0.02, t_final=0.1, t_burn=10.0,
                    eps_list=[0.4, 0.2], seeds=1, tol=1e-8, max_iter=30)
    status = run_solve(cfg, tmp_path, 5)
    assert status == 0
    report = json.loads((tmp_path / "solver_report.json").read_text())
    assert report["converged"] is True
    assert report["T_star"] == pytest.approx(0.1)
    assert len(report["residuals"]) == report["iterations"]
    assert report["norms"]["v"] >= 0.0
    lines = (tmp_path / "residuals.csv").read_text().splitlines()
    assert lines[0] == "iteration,residual"
    assert len(lines) == report["iterations"] + 1
    t, values = read_snapshot(tmp_path / "u_T.pqgf")
    assert t == pytest.approx(0.1)
    assert values.shape == (16, 16)


def test_run_consistency_tiny(tmp_path):
    cfg = RunConfig(grid_n=16, dt=0.01, t_final=0.1, max_iter=30)
    status = run_consistency(cfg, tmp_path, 0)
    assert status == 0
    summary = json.loads((tmp_path / "consistency.json").read_text())
    assert summary["rel_diff"] <= 1e-2
    assert summary["ratio"] >= 1.8


def test_run_eps_convergence_tiny(tmp_path):
    cfg = RunConfig(grid_n=16, dt=0.02, t_final=0.1, t_burn=10.0,
                    eps_list=[0.8, 0.4], seeds=2)
    run_eps_convergence(cfg, tmp_path, 1)
    lines = (tmp_path / "eps_convergence.csv").read_text().splitlines()
    assert lines[0] == "component,eps,seed,alpha,norm,diff_norm"
    assert len(lines) == 1 + 7 * 2 * 2
    summary = (tmp_path / "eps_convergence_summary.csv").read_text().splitlines()
    assert summary[0] == "component,monotone_seeds,seeds,fitted_rate"
    assert len(summary) == 8


def test_run_eps_convergence_worker_determinism(tmp_path):
    base = dict(grid_n=16, dt=0.02, t_final=0.1, t_burn=10.0,
                eps_list=[0.8, 0.4], seeds=2)
    out1 = tmp_path / "w1"
    out2 = tmp_path / "w2"
    out1.mkdir()
    out2.mkdir()
    run_eps_convergence(RunConfig(**base, workers=1), out1, 9)
    run_eps_convergence(RunConfig(**base, workers=2), out2, 9)
    assert ((out1 / "eps_convergence.csv").read_bytes()
            == (out2 / "eps_convergence.csv").read_bytes())


def test_run_regularity_small(tmp_path):
    # the acceptance fit range [2, j_max - 1] needs j_max >= 4, so n >= 64
    cfg = RunConfig(grid_n=64, dt=0.01, t_final=0.05, t_burn=10.0, seeds=2)
    status = run_regularity(cfg, tmp_path, 3)
    assert status == 0
    lines = (tmp_path / "regularity.csv").read_text().splitlines()
    assert lines[0] == "component,theta,eps,seed,slope,reference"
    assert len(lines) == 1 + 7 * 2
    x_rows = [l for l in lines[1:] if l.startswith("X,")]
    slopes = [float(l.split(",")[4]) for l in x_rows]
    # X tracks theta/2 - 1 = 0 even at this budget
    assert abs(np.mean(slopes)) < 0.5
