"""Shared run fixtures; sized for quick module tests (n = 64..96)."""
import pytest

from discflow.flow import FlowRunConfig, run
from discflow.hairclip import initial_curve, solve_orthogonal_pair


@pytest.fixture(scope="session")
def short_run():
    c = initial_curve(0.3, 0.5, 96)
    cfg = FlowRunConfig(d=0.5, initial=c, n=96, t_end=0.5, record_every=50)
    traj = run(cfg)
    traj.rho = 0.3
    return traj


@pytest.fixture(scope="session")
def converged_run():
    c = initial_curve(0.3, 0.5, 64)
    cfg = FlowRunConfig(d=0.5, initial=c, n=64, record_every=100)
    traj = run(cfg)
    traj.rho = 0.3
    return traj


@pytest.fixture(scope="session")
def extinct_run():
    c = initial_curve(0.3, 1.0, 64)
    cfg = FlowRunConfig(d=1.0, initial=c, n=64, record_every=50)
    traj = run(cfg)
    traj.rho = 0.3
    traj.lambda_ref = solve_orthogonal_pair(0.3, 1.0)[0]
    return traj
