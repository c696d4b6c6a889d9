import dataclasses
import math

import numpy as np
import pytest

from egdg.diagnostics import pairwise_rate
from egdg.flux import FluxParams
from egdg.mesh import build_cartesian_mesh, build_interval_mesh
from egdg.problems import cubic_2d, linear_wave, manufactured_1d, shifted, sine_gordon
from egdg.semidisc import Discretization, State, apply_mean_constraint, compute_rhs
from egdg.verification import (
    conservation_zero_suite,
    energy_identity_suite,
    monolithic_rhs,
    oracle_equivalence_suite,
)


def test_zero_state_zero_rhs():
    problem = cubic_2d("defocusing")
    mesh = build_cartesian_mesh((0, 1, 0, 1), 3, 3)
    disc = Discretization(problem, mesh, 2, 2, flux=FluxParams.central())
    du, dv = disc.rhs(np.zeros((9, 9)), np.zeros((9, 9)), 0.0)
    assert np.max(np.abs(du)) == 0.0
    assert np.max(np.abs(dv)) == 0.0


def test_continuous_v_gives_dudt_equals_v():
    # single element: every preset's face term vanishes for continuous data
    problem = sine_gordon(0.0)
    mesh = build_interval_mesh(-20, 20, 1)
    rng = np.random.default_rng(0)
    for p in (FluxParams.central(), FluxParams.sommerfeld()):
        disc = Discretization(problem, mesh, 4, 4, flux=p)
        v = rng.standard_normal((1, 5))
        du, _ = disc.rhs(np.zeros((1, 5)), v, 0.0)
        assert du == pytest.approx(v, abs=1e-12)


def test_continuous_v_multielement():
    # v^h equal on both sides of each face: a globally constant field
    problem = sine_gordon(0.0)
    mesh = build_interval_mesh(-2, 2, 4)
    disc = Discretization(problem, mesh, 3, 3, flux=FluxParams.alt_sommerfeld())
    v = np.zeros((4, 4))
    v[:, 0] = 1.7  # constant on every element, continuous across faces
    du, _ = disc.rhs(np.zeros((4, 4)), v, 0.0)
    assert du == pytest.approx(v, abs=1e-12)


def test_oracle_equivalence():
    result = oracle_equivalence_suite()
    assert result.ok, result.line()


def test_random_state_matches_monolithic_oracle_directly():
    rng = np.random.default_rng(42)
    problem = sine_gordon(0.0)
    mesh = build_interval_mesh(-1.5, 1.5, 3)
    disc = Discretization(problem, mesh, 2, 2, flux=FluxParams.sommerfeld())
    u = rng.standard_normal((3, 3))
    v = rng.standard_normal((3, 3))
    du, dv = disc.rhs(u, v, 0.0)
    du_o, dv_o = monolithic_rhs(
        problem, mesh, 2, 2, disc.flux, disc.boundary, u, v, 0.0
    )
    scale = max(np.max(np.abs(du_o)), np.max(np.abs(dv_o)))
    assert np.max(np.abs(du - du_o)) <= 1e-11 * scale
    assert np.max(np.abs(dv - dv_o)) <= 1e-11 * scale


def test_mean_constraint_linear_wave_all_elements():
    # f = 0: the weight vanishes identically, the constraint is active on
    # every element and pins the element mean of du/dt to the mean of v
    problem = linear_wave()
    mesh = build_interval_mesh(-20, 20, 6)
    disc = Discretization(problem, mesh, 3, 2, flux=FluxParams.central())
    rng = np.random.default_rng(1)
    u = rng.standard_normal((6, 4))
    v = rng.standard_normal((6, 3))
    du, _ = disc.rhs(u, v, 0.0)
    mean_du = du @ disc.mean_row_q
    mean_v = v @ disc.mean_row_q[disc.sel_s]
    assert mean_du == pytest.approx(mean_v, abs=1e-13)


def test_mean_constraint_inactive_for_sine_gordon_zero_state():
    problem = sine_gordon(0.0)
    mesh = build_interval_mesh(-1, 1, 2)
    disc = Discretization(problem, mesh, 2, 2)
    u_nodes = np.zeros((2, 16))
    _, g = disc.fg_at(u_nodes)
    assert np.min(np.abs(g)) == pytest.approx(1.0)  # g(0) = -1, far from the trigger


def test_mean_constraint_active_at_u_pi():
    # u = pi everywhere: g(pi) = 0 triggers the constraint and still matches
    # the oracle with the same row replacement
    problem = sine_gordon(0.0)
    mesh = build_interval_mesh(-1.5, 1.5, 3)
    disc = Discretization(problem, mesh, 2, 1, flux=FluxParams.sommerfeld())
    u = np.zeros((3, 3))
    u[:, 0] = math.pi * math.sqrt(2.0)
    rng = np.random.default_rng(2)
    v = rng.standard_normal((3, 2))
    du, dv = disc.rhs(u, v, 0.0)
    assert np.all(np.isfinite(du))
    du_o, dv_o = monolithic_rhs(problem, mesh, 2, 1, disc.flux, disc.boundary, u, v, 0.0)
    scale = max(np.max(np.abs(du_o)), np.max(np.abs(dv_o)))
    assert np.max(np.abs(du - du_o)) <= 1e-11 * scale
    # the constraint pins the mean exactly
    assert du @ disc.mean_row_q == pytest.approx(v @ disc.mean_row_q[disc.sel_s], abs=1e-12)


def test_apply_mean_constraint_rows():
    problem = sine_gordon(0.0)
    mesh = build_interval_mesh(0, 1, 1)
    disc = Discretization(problem, mesh, 2, 2)
    A = np.eye(3)
    rhs = np.zeros(3)
    v_block = np.array([2.0, 0.3, -0.1])
    A2, rhs2 = apply_mean_constraint(A, rhs, disc, v_block)
    assert A2[0] == pytest.approx(disc.mean_row_q)
    assert rhs2[0] == pytest.approx(disc.mean_row_q[disc.sel_s] @ v_block)
    assert A2[1:] == pytest.approx(A[1:])


def test_project_initial_constant_exact():
    problem = dataclasses.replace(
        linear_wave(),
        initial_u=lambda x: np.full_like(np.asarray(x, dtype=float), 2.5),
        initial_v=lambda x: np.full_like(np.asarray(x, dtype=float), -1.0),
    )
    mesh = build_interval_mesh(0, 1, 4)
    for q in (0, 1, 3):
        disc = Discretization(problem, mesh, q, q)
        state = disc.project_initial()
        assert disc.u_at_nodes(state) == pytest.approx(np.full((4, 16), 2.5), abs=1e-13)
        assert disc.v_at_nodes(state) == pytest.approx(np.full((4, 16), -1.0), abs=1e-13)


def test_projection_order():
    problem = dataclasses.replace(
        linear_wave(),
        initial_u=lambda x: np.exp(np.sin(np.asarray(x))),
        initial_v=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
    )
    q = 2
    errs = []
    for N in (100, 200, 400):
        mesh = build_interval_mesh(-20, 20, N)
        disc = Discretization(problem, mesh, q, q)
        state = disc.project_initial()
        err = disc.u_at_nodes(state) - np.exp(np.sin(disc.x_nodes))
        errs.append(math.sqrt(float(np.sum(disc.wq * err**2))))
    r1 = pairwise_rate(errs[0], errs[1], 100, 200)
    r2 = pairwise_rate(errs[1], errs[2], 200, 400)
    assert r1 == pytest.approx(q + 1, abs=0.1)
    assert r2 == pytest.approx(q + 1, abs=0.1)


def test_project_initial_shifted_zero_block():
    problem = shifted(manufactured_1d(1.0))
    mesh = build_interval_mesh(-20, 20, 8)
    disc = Discretization(problem, mesh, 3, 3)
    state = disc.project_initial()
    assert np.max(np.abs(state.u)) == 0.0
    assert np.max(np.abs(state.v)) > 0.0


def test_dudt_affine_in_v():
    problem = sine_gordon(0.0)
    mesh = build_interval_mesh(-2, 2, 4)
    disc = Discretization(problem, mesh, 3, 3, flux=FluxParams.sommerfeld())
    rng = np.random.default_rng(3)
    u = rng.standard_normal((4, 4))
    v1 = rng.standard_normal((4, 4))
    v2 = rng.standard_normal((4, 4))
    du_0, _ = disc.rhs(u, np.zeros_like(v1), 0.0)
    du_1, _ = disc.rhs(u, v1, 0.0)
    du_2, _ = disc.rhs(u, v2, 0.0)
    du_12, _ = disc.rhs(u, v1 + v2, 0.0)
    assert du_12 == pytest.approx(du_1 + du_2 - du_0, abs=1e-11)


def test_compute_rhs_wrapper_and_state():
    problem = sine_gordon(0.0)
    mesh = build_interval_mesh(-2, 2, 3)
    disc = Discretization(problem, mesh, 2, 2)
    state = disc.project_initial()
    du, dv = compute_rhs(state, disc)
    du2, dv2 = disc.rhs(state.u, state.v, state.t)
    assert du == pytest.approx(du2)
    assert dv == pytest.approx(dv2)
    assert state.copy().u is not state.u


def test_energy_identity_suites():
    r = energy_identity_suite(n_states=20)
    assert r.ok, r.line()
    r2 = conservation_zero_suite(n_states=20)
    assert r2.ok, r2.line()


def test_s_range_validation():
    problem = sine_gordon(0.0)
    mesh = build_interval_mesh(-2, 2, 3)
    with pytest.raises(ValueError):
        Discretization(problem, mesh, 2, 3)
    with pytest.raises(ValueError):
        Discretization(problem, mesh, 2, -1)


def test_shifted_and_direct_formulations_cross_validate():
    # the reconstructed field of a shifted run tracks the direct run within
    # a few times the direct run's own discretization error
    from egdg.problems import breather_forced
    from egdg.timeint import StepRule, integrate
    from egdg.diagnostics import l2_error

    base = breather_forced(1.0)
    mesh = build_interval_mesh(-20, 20, 200)
    rule = StepRule.proportional(0.075)

    d_dir = Discretization(base, mesh, 4, 4, flux=FluxParams.sommerfeld())
    f_dir, _ = integrate(d_dir.project_initial(), 0.1, rule, d_dir.rhs, h=mesh.h[0])
    err_dir = l2_error(d_dir, f_dir)

    sh = shifted(base)
    d_sh = Discretization(sh, mesh, 4, 4, flux=FluxParams.sommerfeld())
    f_sh, _ = integrate(d_sh.project_initial(), 0.1, rule, d_sh.rhs, h=mesh.h[0])

    # compare the physical fields at the quadrature nodes
    u_dir = d_dir.u_at_nodes(f_dir)
    u_rec = d_sh.u_at_nodes(f_sh) + d_sh.u0_nodes
    diff = math.sqrt(float(np.sum(d_dir.wq * (u_dir - u_rec) ** 2)))
    assert diff <= 10.0 * err_dir


def test_constrained_mode_keeps_oracle_parity():
    problem = cubic_2d("defocusing", theta=0.2)  # constrained by default
    mesh = build_cartesian_mesh((0, 1, 0, 1), 2, 2)
    disc = Discretization(problem, mesh, 2, 2, flux=FluxParams.alt_sommerfeld())
    assert disc.mean_update == "constrained"
    rng = np.random.default_rng(4)
    u = rng.standard_normal((4, 9))
    v = rng.standard_normal((4, 9))
    du, dv = disc.rhs(u, v, 0.1)
    du_o, dv_o = monolithic_rhs(
        problem, mesh, 2, 2, disc.flux, disc.boundary, u, v, 0.1,
        mean_update="constrained",
    )
    scale = max(np.max(np.abs(du_o)), np.max(np.abs(dv_o)))
    assert np.max(np.abs(du - du_o)) <= 1e-11 * scale
    assert np.max(np.abs(dv - dv_o)) <= 1e-11 * scale
    # constrained mean: element means of du/dt match the means of v
    assert du @ disc.mean_row_q == pytest.approx(v @ disc.mean_row_q[disc.sel_s], abs=1e-12)
