"""Empirical Young measures, commutation residuals, concentration traces."""

import numpy as np
import pytest

from svvlab.entropy import EntropySpec, entropy_pair
from svvlab.errors import ConfigError
from svvlab.pressure import PressureLaw
from svvlab.solver import Grid, GridState, SolverConfig, simulate
from svvlab.young import (
    CellPartition,
    build_measure,
    concentration_metric,
    measure_from_atoms,
    pair_average,
    tartar_residual,
)


@pytest.fixture(scope="module")
def law2():
    return PressureLaw.polytropic(2.0)


ENERGY = EntropySpec.energy()
CUTOFF = EntropySpec.compact_bump(0.0, 4.0)


class TestBuildMeasure:
    def test_constant_trajectory_gives_point_masses(self, law2):
        grid = Grid(L=5.0, n=64)
        cfg = SolverConfig(epsilon=0.05, T=0.2, dt=1e-3, n_saves=4)
        init = GridState(0.0, np.ones(grid.n + 1), np.zeros(grid.n + 1))
        traj = simulate(init, law2, grid, cfg)
        cells = CellPartition(0.0, 0.2, -2.0, 2.0, 2, 2)
        mu = build_measure(traj, cells)
        assert mu.n_cells == 4
        assert mu.epsilon == 0.05
        for idx in range(mu.n_cells):
            atoms = mu.samples[idx]
            assert np.all(atoms[:, 0] == 1.0)
            assert np.all(atoms[:, 1] == 0.0)

    def test_window_outside_domain_rejected(self, law2):
        grid = Grid(L=5.0, n=64)
        cfg = SolverConfig(epsilon=0.05, T=0.2, dt=1e-3, n_saves=4)
        init = GridState(0.0, np.ones(grid.n + 1), np.zeros(grid.n + 1))
        traj = simulate(init, law2, grid, cfg)
        with pytest.raises(ConfigError):
            build_measure(traj, CellPartition(0.0, 0.2, -6.0, 2.0, 2, 2))
        with pytest.raises(ConfigError):
            build_measure(traj, CellPartition(0.0, 0.5, -2.0, 2.0, 2, 2))

    def test_refine_doubles_counts(self):
        c = CellPartition(0.0, 1.0, -1.0, 1.0, 2, 3).refine()
        assert (c.n_t, c.n_x) == (4, 6)


class TestPairAverage:
    def test_dirac_matches_pointwise(self, law2):
        mu = measure_from_atoms([(1.5, 0.6)])
        eta, q = pair_average(mu, law2, ENERGY)
        pv = entropy_pair(law2, ENERGY, 1.5, 0.6)
        assert eta[0, 0] == pytest.approx(float(pv.eta), rel=1e-12)
        assert q[0, 0] == pytest.approx(float(pv.q), rel=1e-12)

    def test_two_atoms_arithmetic_mean(self, law2):
        a, b = (1.0, 0.2), (2.0, -0.4)
        mu = measure_from_atoms([a, b])
        eta, q = pair_average(mu, law2, ENERGY)
        pa = entropy_pair(law2, ENERGY, *a)
        pb = entropy_pair(law2, ENERGY, *b)
        assert eta[0, 0] == pytest.approx(0.5 * (float(pa.eta) + float(pb.eta)), rel=1e-12)
        assert q[0, 0] == pytest.approx(0.5 * (float(pa.q) + float(pb.q)), rel=1e-12)

    def test_vacuum_atom_contributes_zero(self, law2):
        mu = measure_from_atoms([(0.0, 0.0), (1.0, 0.0)])
        eta, _ = pair_average(mu, law2, ENERGY)
        pv = entropy_pair(law2, ENERGY, 1.0, 0.0)
        assert eta[0, 0] == pytest.approx(0.5 * float(pv.eta), rel=1e-12)


class TestTartarResidual:
    def test_dirac_exactly_zero(self, law2):
        mu = measure_from_atoms([(1.5, 0.6)])
        assert tartar_residual(mu, law2, ENERGY, CUTOFF)[0, 0] == 0.0

    def test_zero_spread_exactly_zero(self, law2):
        mu = measure_from_atoms([(1.5, 0.6), (1.5, 0.6), (1.5, 0.6)])
        assert tartar_residual(mu, law2, ENERGY, CUTOFF)[0, 0] == 0.0

    def test_two_atom_closed_form(self, law2):
        a, b = (1.0, 0.2), (1.8, -0.3)
        mu = measure_from_atoms([a, b])
        r = tartar_residual(mu, law2, ENERGY, CUTOFF)[0, 0]
        p1a = entropy_pair(law2, ENERGY, *a)
        p1b = entropy_pair(law2, ENERGY, *b)
        p2a = entropy_pair(law2, CUTOFF, *a)
        p2b = entropy_pair(law2, CUTOFF, *b)
        # for two equal-weight atoms the residual reduces to
        # 1/4 (eta1_a - eta1_b)(q2_a - q2_b) - 1/4 (eta2_a - eta2_b)(q1_a - q1_b)
        expect = 0.25 * (
            (float(p1a.eta) - float(p1b.eta)) * (float(p2a.q) - float(p2b.q))
            - (float(p2a.eta) - float(p2b.eta)) * (float(p1a.q) - float(p1b.q))
        )
        assert r == pytest.approx(expect, abs=1e-12)

    def test_antisymmetric_in_specs(self, law2):
        mu = measure_from_atoms([(1.0, 0.2), (1.8, -0.3), (1.4, 0.5)])
        r12 = tartar_residual(mu, law2, ENERGY, CUTOFF)
        r21 = tartar_residual(mu, law2, CUTOFF, ENERGY)
        assert r12[0, 0] == pytest.approx(-r21[0, 0], abs=1e-14)

    def test_same_spec_vanishes(self, law2):
        mu = measure_from_atoms([(1.0, 0.2), (1.8, -0.3)])
        assert abs(tartar_residual(mu, law2, ENERGY, ENERGY)[0, 0]) < 1e-14

    def test_refinement_reduces_mixing(self, law2):
        # fine cells mostly see one side of the smoothed step, while the
        # single coarse cell mixes both states
        grid = Grid(L=5.0, n=64)
        cfg = SolverConfig(epsilon=0.05, T=0.2, dt=1e-3, n_saves=4)
        x = grid.x
        rho = 1.0 + 0.4 / (1.0 + np.exp(8.0 * (x + 0.7)))
        rho[0] = rho[-1] = 1.0
        init = GridState(0.0, rho, np.zeros_like(x))
        traj = simulate(init, law2, grid, cfg)
        bump = EntropySpec.compact_bump(0.0, 4.0)
        coarse = CellPartition(0.0, 0.05, -2.5, 2.5, 1, 1)
        fine = CellPartition(0.0, 0.05, -2.5, 2.5, 1, 8)
        r_coarse = np.abs(tartar_residual(build_measure(traj, coarse), law2, ENERGY, bump)).max()
        r_fine = np.abs(tartar_residual(build_measure(traj, fine), law2, ENERGY, bump)).max()
        assert r_fine < r_coarse


class TestConcentration:
    def test_point_masses_have_zero_trace(self):
        mus = [
            measure_from_atoms([(1.0, 0.0), (1.0, 0.0)], epsilon=e)
            for e in (0.05, 0.01)
        ]
        out = concentration_metric(mus)
        assert np.all(out["traces"] == 0.0)
        assert np.isnan(out["slope"])

    def test_two_atom_trace_value(self):
        delta = 0.2
        mu = measure_from_atoms([(1.0, 0.0), (1.0 + delta, 0.0)], epsilon=0.05)
        out = concentration_metric([mu, measure_from_atoms([(1.0, 0.0), (1.0, 0.0)], epsilon=0.01)])
        assert out["traces"][0, 0, 0] == pytest.approx(delta**2 / 4, rel=1e-12)

    def test_mismatched_cells_rejected(self, law2):
        grid = Grid(L=5.0, n=64)
        cfg = SolverConfig(epsilon=0.05, T=0.2, dt=1e-3, n_saves=4)
        init = GridState(0.0, np.ones(grid.n + 1), np.zeros(grid.n + 1))
        traj = simulate(init, law2, grid, cfg)
        mu1 = build_measure(traj, CellPartition(0.0, 0.2, -2.0, 2.0, 2, 2))
        mu2 = build_measure(traj, CellPartition(0.0, 0.2, -2.0, 2.0, 2, 4))
        with pytest.raises(ConfigError):
            concentration_metric([mu1, mu2])
        with pytest.raises(ConfigError):
            concentration_metric([mu1])

    def test_slope_reported_for_decaying_traces(self):
        mus = [
            measure_from_atoms([(1.0 - np.sqrt(e), 0.0), (1.0 + np.sqrt(e), 0.0)], epsilon=e)
            for e in (0.08, 0.04, 0.02)
        ]
        out = concentration_metric(mus)
        assert out["slope"] == pytest.approx(1.0, abs=1e-10)
