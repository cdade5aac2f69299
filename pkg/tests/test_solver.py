"""Time stepping: equilibrium, convergence, stability guards, heat kernel."""

import numpy as np
import pytest

from svvlab.errors import ConfigError, NumericalError, PositivityLoss
from svvlab.noise import NoiseModel
from svvlab.pressure import PressureLaw
from svvlab.solver import (
    Grid,
    GridState,
    SolverConfig,
    Stepper,
    epsilon_sweep,
    heat_kernel,
    heat_semigroup_apply,
    simulate,
)


@pytest.fixture(scope="module")
def law2():
    return PressureLaw.polytropic(2.0)


@pytest.fixture(scope="module")
def grid():
    return Grid(L=5.0, n=256)


def bump_state(grid, amp=0.3, width=0.5):
    x = grid.x
    rho = 1.0 + amp * np.exp(-(x**2) / (2 * width**2))
    return GridState(0.0, rho, np.zeros_like(x))


class TestTypes:
    def test_grid_invariants(self):
        with pytest.raises(ConfigError):
            Grid(L=5.0, n=8)
        with pytest.raises(ConfigError):
            Grid(L=-1.0, n=64)
        g = Grid(L=2.0, n=64)
        assert g.dx == pytest.approx(2 * 2.0 / 64)
        assert g.x[0] == -2.0 and g.x[-1] == 2.0

    def test_config_invariants(self):
        with pytest.raises(ConfigError):
            SolverConfig(epsilon=0.0, T=1.0, dt=1e-3)
        with pytest.raises(ConfigError):
            SolverConfig(epsilon=0.1, T=1.0, dt=1e-3, scheme="upwind")
        cfg = SolverConfig(epsilon=0.1, T=1.0, dt=1e-3)
        assert cfg.n_steps == 1000
        with pytest.raises(ConfigError):
            SolverConfig(epsilon=0.1, T=1.0, dt=3e-4).n_steps


class TestEquilibrium:
    def test_constant_state_preserved(self, law2, grid):
        cfg = SolverConfig(epsilon=0.05, T=1.0, dt=1e-3, n_saves=10)
        init = GridState(0.0, np.ones(grid.n + 1), np.zeros(grid.n + 1))
        traj = simulate(init, law2, grid, cfg)
        assert np.max(np.abs(traj.final.rho - 1.0)) < 1e-12
        assert np.max(np.abs(traj.final.mom)) < 1e-12

    def test_energy_nonincreasing_zero_noise(self, law2, grid):
        cfg = SolverConfig(epsilon=0.05, T=0.5, dt=1e-3, n_saves=10)
        traj = simulate(bump_state(grid), law2, grid, cfg)
        assert np.all(np.diff(traj.energy) <= 1e-14)

    def test_determinism_same_seed(self, law2, grid):
        noise = NoiseModel.single_mode(0.2, law2, seed=5, dt_base=1e-3)
        noise = noise.truncate_mollify(0.05, 3.0, 0.25, 1.0)
        cfg = SolverConfig(epsilon=0.05, T=0.1, dt=1e-3, n_saves=5)
        a = simulate(bump_state(grid), law2, grid, cfg, noise, sample_id=2)
        b = simulate(bump_state(grid), law2, grid, cfg, noise, sample_id=2)
        assert np.array_equal(a.final.rho, b.final.rho)
        assert np.array_equal(a.final.mom, b.final.mom)


class TestConvergence:
    def test_temporal_self_convergence_first_order(self, law2, grid):
        finals = []
        for dt in (4e-3, 2e-3, 1e-3):
            cfg = SolverConfig(epsilon=0.05, T=0.5, dt=dt, n_saves=5)
            finals.append(simulate(bump_state(grid), law2, grid, cfg).final.rho)
        e1 = np.max(np.abs(finals[0] - finals[1]))
        e2 = np.max(np.abs(finals[1] - finals[2]))
        assert np.log2(e1 / e2) >= 0.9

    def test_spatial_self_convergence_second_order(self, law2):
        fine = Grid(L=5.0, n=1024)
        cfg = SolverConfig(epsilon=0.05, T=0.25, dt=2.5e-4, n_saves=5)
        ref = simulate(bump_state(fine), law2, fine, cfg).final
        errs = []
        for n in (128, 256):
            g = Grid(L=5.0, n=n)
            out = simulate(bump_state(g), law2, g, cfg).final
            ref_on_g = np.interp(g.x, fine.x, ref.rho)
            errs.append(np.max(np.abs(out.rho - ref_on_g)))
        assert np.log2(errs[0] / errs[1]) >= 1.8

    def test_diffusion_substep_matches_heat_kernel(self, law2, grid):
        # repeated pure-diffusion substeps against the exact semigroup
        cfg = SolverConfig(epsilon=0.05, T=1.0, dt=1e-3, check_cfl=False)
        stepper = Stepper(law2, grid, cfg)
        f = bump_state(grid).rho
        out = f.copy()
        n_steps = 200
        for _ in range(n_steps):
            out = stepper._diffuse(out, 1.0)
        exact = heat_semigroup_apply(f, cfg.epsilon * n_steps * cfg.dt, grid, 1.0)
        assert np.max(np.abs(out - exact)) < 5e-3  # O(dt) splitting error


class TestGuards:
    def test_cfl_violation_raises(self, law2, grid):
        cfg = SolverConfig(epsilon=0.05, T=1.0, dt=0.5, n_saves=1)
        with pytest.raises(NumericalError):
            simulate(bump_state(grid), law2, grid, cfg)

    def test_positivity_loss_reported(self, law2, grid):
        # strong outflow drains the center density below the floor
        x = grid.x
        rho = np.full(x.size, 0.2)
        m = 2.0 * np.tanh(2.0 * x) * rho
        cfg = SolverConfig(
            epsilon=0.01, T=2.0, dt=2e-3, n_saves=1, density_floor=1e-2,
            check_cfl=False,
        )
        with pytest.raises(PositivityLoss) as exc:
            simulate(GridState(0.0, rho, m), law2, grid, cfg)
        assert exc.value.rho_min < 1e-2
        assert exc.value.t > 0.0


class TestSweep:
    def test_decreasing_enforced(self, law2, grid):
        cfg = SolverConfig(epsilon=0.05, T=0.1, dt=1e-3, n_saves=5)
        with pytest.raises(ConfigError):
            epsilon_sweep(bump_state(grid), law2, grid, cfg, None, [0.01, 0.05])

    def test_single_element_equals_simulate(self, law2, grid):
        cfg = SolverConfig(epsilon=0.05, T=0.1, dt=1e-3, n_saves=5)
        [(eps, traj)] = epsilon_sweep(
            bump_state(grid), law2, grid, cfg, None, [0.05]
        )
        direct = simulate(bump_state(grid), law2, grid, cfg)
        assert eps == 0.05
        assert np.array_equal(traj.final.rho, direct.final.rho)

    def test_member_failure_recorded(self, law2, grid):
        x = grid.x
        rho = np.full(x.size, 0.2)
        m = 2.0 * np.tanh(2.0 * x) * rho
        cfg = SolverConfig(
            epsilon=0.05, T=2.0, dt=2e-3, n_saves=1, density_floor=1e-2,
            check_cfl=False,
        )
        out = epsilon_sweep(GridState(0.0, rho, m), law2, grid, cfg, None, [0.05, 0.01])
        assert any(traj.error is not None for _, traj in out)
        assert len(out) == 2


class TestHeatKernel:
    def test_peak_value(self):
        assert heat_kernel(1.0 / (4.0 * np.pi), 0.0) == pytest.approx(1.0)

    def test_mass_conservation(self, grid):
        f = bump_state(grid).rho
        out = heat_semigroup_apply(f, 0.05, grid, far_field=1.0)
        m_in = np.trapezoid(f - 1.0, dx=grid.dx)
        m_out = np.trapezoid(out - 1.0, dx=grid.dx)
        assert m_out == pytest.approx(m_in, abs=1e-8)

    def test_gaussian_in_gaussian_out(self, grid):
        s0 = 0.3
        x = grid.x
        f = np.exp(-(x**2) / (2 * s0**2))
        t = 0.05
        out = heat_semigroup_apply(f, t, grid)
        s1 = np.sqrt(s0**2 + 2 * t)
        exact = s0 / s1 * np.exp(-(x**2) / (2 * s1**2))
        assert np.max(np.abs(out - exact)) < 1e-6

    def test_identity_at_zero(self, grid):
        f = bump_state(grid).rho
        assert np.array_equal(heat_semigroup_apply(f, 0.0, grid, 1.0), f)
