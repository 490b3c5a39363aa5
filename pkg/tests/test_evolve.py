import math

import numpy as np
import pytest

from nlskit import (CouplingSpec, GridSpec, NanAbortError, ScalarField,
                    StepParams, SystemState, energy, evolve,
                    field_from_function, h1_norm, linear_substep, mass,
                    nonlinear_substep, rk4_reference_step, strang_step)

from conftest import free_gaussian_exact, gaussian, single_state


def test_step_params_validation():
    with pytest.raises(ValueError):
        StepParams(dt=-0.1, t_final=1.0)
    with pytest.raises(ValueError):
        StepParams(dt=0.1, t_final=-1.0)
    with pytest.raises(ValueError):
        StepParams(dt=0.1, t_final=1.0, snapshot_stride=0)
    assert StepParams(dt=1e-3, t_final=10.0).n_steps == 10000


def test_linear_substep_identity_and_plane_wave(grid1d):
    st = single_state(gaussian(grid1d))
    same = linear_substep(st, 0.0)
    assert np.abs(same.fields[0].values - st.fields[0].values).max() < 1e-15
    k = 6 * math.pi / grid1d.l
    pw = single_state(field_from_function(grid1d, lambda x: np.exp(1j * k * x)))
    tau = 0.37
    out = linear_substep(pw, tau)
    expected = np.exp(1j * (k * grid1d.x_mesh[0] - k ** 2 * tau))
    assert np.abs(out.fields[0].values - expected).max() < 1e-12


def test_linear_substep_free_gaussian(grid1d):
    st = single_state(gaussian(grid1d))
    out = linear_substep(st, 1.0)
    assert np.abs(out.fields[0].values - free_gaussian_exact(grid1d, 1.0)).max() < 1e-8
    assert math.isclose(mass(out, 0), mass(st, 0), rel_tol=1e-12)


def test_nonlinear_substep_constant_field(grid1d):
    c = 0.8 - 0.3j
    st = single_state(ScalarField(np.full(grid1d.shape, c), grid1d, "physical"), p=1.0)
    tau = 0.6
    out = nonlinear_substep(st, tau)
    expected = c * np.exp(-1j * tau * abs(c) ** 2)
    assert np.abs(out.fields[0].values - expected).max() < 1e-14
    # moduli are exactly preserved
    assert np.abs(np.abs(out.fields[0].values) - abs(c)).max() < 1e-14


def test_nonlinear_substep_zero_component_invariant(grid1d):
    u1 = gaussian(grid1d, amp=0.9)
    zero = ScalarField(np.zeros(grid1d.shape, complex), grid1d, "physical")
    cpl = CouplingSpec(2, np.array([[1.0, 0.4], [0.4, 1.0]]), 1.0, 1)
    st = SystemState(0.0, (u1, zero), cpl)
    out = nonlinear_substep(st, 0.5)
    assert np.abs(out.fields[1].values).max() == 0.0
    solo = nonlinear_substep(single_state(u1, p=1.0), 0.5)
    assert np.abs(out.fields[0].values - solo.fields[0].values).max() < 1e-14


def test_nonlinear_substep_beta_zero_identity(grid1d):
    st = single_state(gaussian(grid1d), beta=0.0)
    out = nonlinear_substep(st, 0.9)
    assert np.abs(out.fields[0].values - st.fields[0].values).max() == 0.0


def test_nonlinear_substep_subunit_power_handles_zeros(grid1d):
    # decoupled p < 1: |u|^{p-1} is singular at zeros; the flow stays finite
    vals = gaussian(grid1d).values.copy()
    vals[::7] = 0.0
    st = single_state(ScalarField(vals, grid1d, "physical"), p=0.5)
    out = nonlinear_substep(st, 0.3)
    assert np.isfinite(out.fields[0].values).all()
    assert np.abs(out.fields[0].values[::7]).max() == 0.0


def test_strang_beta_zero_equals_linear(grid1d):
    st = single_state(gaussian(grid1d), beta=0.0)
    dt = 0.05
    a = strang_step(st, dt).fields[0].values
    b = linear_substep(st, dt).fields[0].values
    assert np.abs(a - b).max() < 1e-13


def test_strang_mass_conservation_and_reversibility(grid1d):
    st = single_state(gaussian(grid1d, amp=0.9), p=2.0)
    dt = 1e-2
    cur = st
    for _ in range(50):
        cur = strang_step(cur, dt)
    assert abs(mass(cur, 0) - mass(st, 0)) < 1e-12 * mass(st, 0)
    back = cur
    for _ in range(50):
        back = strang_step(back, -dt)
    scale = np.abs(st.fields[0].values).max()
    assert np.abs(back.fields[0].values - st.fields[0].values).max() < 1e-10 * scale


def test_strang_energy_second_order(grid1d):
    st = single_state(gaussian(grid1d, amp=0.8), p=1.0)
    e0 = energy(st).total

    def drift(dt):
        params = StepParams(dt=dt, t_final=1.0, snapshot_stride=10)
        drifts = []
        evolve(st, params, lambda s: drifts.append(abs(energy(s).total - e0)))
        return max(drifts)

    ratio = drift(4e-3) / drift(2e-3)
    assert 3.5 <= ratio <= 4.5


def test_evolve_t0_emits_one_record(grid1d):
    st = single_state(gaussian(grid1d))
    seen = []
    out = evolve(st, StepParams(dt=1e-3, t_final=0.0), seen.append)
    assert len(seen) == 1 and out is st


def test_evolve_free_gaussian_closed_form():
    # box large enough that the spreading tail never reaches the boundary
    grid = GridSpec(1, 512, 32.0)
    st = single_state(gaussian(grid), beta=0.0)
    out = evolve(st, StepParams(dt=1e-2, t_final=2.0, snapshot_stride=50))
    assert abs(out.t - 2.0) < 1e-12
    diff = out.fields[0].values - free_gaussian_exact(grid, 2.0)
    l2 = math.sqrt(grid.cell_volume * float(np.sum(np.abs(diff) ** 2)))
    assert l2 < 1e-8


def test_evolve_symmetric_components_stay_equal(grid1d):
    u = gaussian(grid1d, amp=0.7)
    beta = np.array([[1.0, 0.5], [0.5, 1.0]])
    cpl = CouplingSpec(2, beta, 1.0, 1)
    st = SystemState(0.0, (u, u.copy()), cpl)
    out = evolve(st, StepParams(dt=2e-3, t_final=1.0, snapshot_stride=100))
    diff = np.abs(out.fields[0].values - out.fields[1].values).max()
    assert diff < 1e-10


def test_evolve_component_permutation_equivariance(grid1d):
    u1 = gaussian(grid1d, amp=0.9)
    u2 = gaussian(grid1d, amp=0.5, center=[2.0])
    beta = np.array([[1.0, 0.3], [0.3, 2.0]])
    params = StepParams(dt=2e-3, t_final=0.5, snapshot_stride=50)
    st = SystemState(0.0, (u1, u2), CouplingSpec(2, beta, 1.0, 1))
    out = evolve(st, params)
    perm = np.array([[2.0, 0.3], [0.3, 1.0]])
    st_p = SystemState(0.0, (u2.copy(), u1.copy()), CouplingSpec(2, perm, 1.0, 1))
    out_p = evolve(st_p, params)
    assert np.abs(out.fields[0].values - out_p.fields[1].values).max() < 1e-12
    assert np.abs(out.fields[1].values - out_p.fields[0].values).max() < 1e-12


def test_evolve_snapshot_count_matches_contract(grid1d):
    st = single_state(gaussian(grid1d))
    seen = []
    evolve(st, StepParams(dt=1e-3, t_final=0.1, snapshot_stride=10), seen.append)
    assert len(seen) == math.floor(0.1 / (1e-3 * 10) + 1e-9) + 1


def test_evolve_free_flow_preserves_h1(grid1d):
    st = single_state(gaussian(grid1d), beta=0.0)
    h0 = h1_norm(st)
    out = evolve(st, StepParams(dt=5e-3, t_final=1.0, snapshot_stride=100))
    assert h1_norm(out) <= (1 + 1e-6) * h0


def test_evolve_dealias_keeps_conservation(grid1d):
    st = single_state(gaussian(grid1d, amp=0.8), p=1.0)
    params = StepParams(dt=2e-3, t_final=0.5, snapshot_stride=50, dealias=True)
    out = evolve(st, params)
    assert abs(mass(out, 0) - mass(st, 0)) < 1e-10 * mass(st, 0)
    assert abs(energy(out).total - energy(st).total) < 1e-5 * energy(st).total


def test_evolve_nan_abort(grid1d):
    bad = np.full(grid1d.shape, np.inf + 0j)
    st = single_state(ScalarField(bad, grid1d, "physical"))
    with pytest.raises(NanAbortError):
        evolve(st, StepParams(dt=1e-3, t_final=0.1))


def test_rk4_zero_state(grid1d):
    st = single_state(ScalarField(np.zeros(grid1d.shape, complex), grid1d, "physical"))
    out = rk4_reference_step(st, 1e-3)
    assert np.abs(out.fields[0].values).max() == 0.0


def test_rk4_matches_linear_flow_for_beta_zero():
    grid = GridSpec(1, 64, 16.0)
    st = single_state(gaussian(grid), beta=0.0)
    dt = 2e-3
    out = rk4_reference_step(st, dt)
    exact = linear_substep(st, dt)
    # single-step defect of a 4th-order method
    assert np.abs(out.fields[0].values - exact.fields[0].values).max() < 1e-9


def test_rk4_cross_validates_strang():
    grid = GridSpec(1, 64, 16.0)
    st = single_state(gaussian(grid, amp=0.7), p=1.0)
    T = 0.5
    strang = evolve(st, StepParams(dt=1e-3, t_final=T, snapshot_stride=500))
    cur, n = st, 250
    for _ in range(n):
        cur = rk4_reference_step(cur, T / n)
    diff = cur.fields[0].values - strang.fields[0].values
    l2 = math.sqrt(grid.cell_volume * float(np.sum(np.abs(diff) ** 2)))
    assert l2 < 1e-5


def test_rk4_instability_detected():
    grid = GridSpec(1, 64, 4.0)  # h = 0.125, stability needs dt << h^2/pi
    st = single_state(gaussian(grid, width=0.5), beta=0.0)
    with pytest.raises(RuntimeError, match="unstable"):
        cur = st
        for _ in range(200):
            cur = rk4_reference_step(cur, 0.05)
