"""Empirical Young measures on space-time cells.

A trajectory's (rho, m) samples are binned into an n_t x n_x partition of
a compact analysis window; each cell becomes an equal-weight empirical
measure.  On these we evaluate entropy-pair averages, the bilinear
commutation residual

    R = <eta1 q2 - eta2 q1> - (<eta1><q2> - <q1><eta2>),

which vanishes identically on point masses, and a concentration metric
(trace of the per-cell sample covariance) tracked across a viscosity
sweep.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .entropy import EntropySpec, entropy_pair
from .errors import ConfigError, DomainError
from .pressure import PressureLaw
from .solver import Trajectory

VACUUM_TOL = 1e-10


@dataclass(frozen=True)
class CellPartition:
    """n_t x n_x uniform cells over [t0, t1] x [a, b]."""

    t0: float
    t1: float
    a: float
    b: float
    n_t: int
    n_x: int

    def __post_init__(self):
        if self.t1 <= self.t0 or self.b <= self.a:
            raise ConfigError("cell window must have positive extent")
        if self.n_t < 1 or self.n_x < 1:
            raise ConfigError("cell counts must be positive")

    def refine(self) -> "CellPartition":
        return CellPartition(self.t0, self.t1, self.a, self.b, 2 * self.n_t, 2 * self.n_x)


@dataclass
class EmpiricalYoungMeasure:
    """Per-cell equal-weight (rho, m) samples, tagged with epsilon."""

    cells: CellPartition
    samples: list  # flat list of (n_k, 2) arrays, row-major over (it, ix)
    epsilon: float

    def cell(self, it: int, ix: int) -> np.ndarray:
        return self.samples[it * self.cells.n_x + ix]

    @property
    def n_cells(self) -> int:
        return self.cells.n_t * self.cells.n_x


def build_measure(traj: Trajectory, cells: CellPartition) -> EmpiricalYoungMeasure:
    """Bin the trajectory's save-time grid values into the cell partition."""
    x = traj.grid.x
    t = traj.times
    if cells.a < x[0] - 1e-12 or cells.b > x[-1] + 1e-12:
        raise ConfigError("cell window exceeds the spatial domain")
    if cells.t0 < t[0] - 1e-12 or cells.t1 > t[-1] + 1e-12:
        raise ConfigError("cell window exceeds the simulated time range")

    it_of = np.clip(
        ((t - cells.t0) / (cells.t1 - cells.t0) * cells.n_t).astype(int),
        0,
        cells.n_t - 1,
    )
    ix_of = np.clip(
        ((x - cells.a) / (cells.b - cells.a) * cells.n_x).astype(int),
        0,
        cells.n_x - 1,
    )
    t_in = (t >= cells.t0 - 1e-12) & (t <= cells.t1 + 1e-12)
    x_in = (x >= cells.a - 1e-12) & (x <= cells.b + 1e-12)

    buckets = [[] for _ in range(cells.n_t * cells.n_x)]
    for k, state in enumerate(traj.states):
        if not t_in[k]:
            continue
        it = it_of[k]
        for j in np.nonzero(x_in)[0]:
            buckets[it * cells.n_x + ix_of[j]].append((state.rho[j], state.mom[j]))
    samples = []
    for idx, b in enumerate(buckets):
        if not b:
            it, ix = divmod(idx, cells.n_x)
            raise ConfigError(
                f"cell ({it}, {ix}) received no samples; refine saves or coarsen cells"
            )
        samples.append(np.array(b, dtype=float))
    return EmpiricalYoungMeasure(cells=cells, samples=samples, epsilon=traj.config.epsilon)


def measure_from_atoms(atoms, epsilon: float = 0.0) -> EmpiricalYoungMeasure:
    """One-cell measure from explicit (rho, m) atoms, for synthetic tests."""
    arr = np.asarray(atoms, dtype=float).reshape(-1, 2)
    if np.any(arr[:, 0] < 0.0):
        raise DomainError("atom densities must be nonnegative")
    cells = CellPartition(0.0, 1.0, 0.0, 1.0, 1, 1)
    return EmpiricalYoungMeasure(cells=cells, samples=[arr], epsilon=epsilon)


def _cell_pairs(law, spec, atoms, n_nodes):
    rho = atoms[:, 0].copy()
    m = atoms[:, 1].copy()
    vac = rho < VACUUM_TOL
    rho[vac] = 0.0
    m[vac] = 0.0
    return entropy_pair(law, spec, rho, m, n_nodes=n_nodes)


def pair_average(
    measure: EmpiricalYoungMeasure,
    law: PressureLaw,
    spec: EntropySpec,
    n_nodes: int = 48,
):
    """Cell-averaged (eta, q) arrays of shape (n_t, n_x)."""
    c = measure.cells
    eta = np.empty((c.n_t, c.n_x))
    q = np.empty((c.n_t, c.n_x))
    for idx, atoms in enumerate(measure.samples):
        pv = _cell_pairs(law, spec, atoms, n_nodes)
        it, ix = divmod(idx, c.n_x)
        eta[it, ix] = pv.eta.mean()
        q[it, ix] = pv.q.mean()
    return eta, q


def tartar_residual(
    measure: EmpiricalYoungMeasure,
    law: PressureLaw,
    spec1: EntropySpec,
    spec2: EntropySpec,
    n_nodes: int = 48,
) -> np.ndarray:
    """Per-cell commutation residual, shape (n_t, n_x).

    Exactly zero on single-atom cells and antisymmetric in (spec1, spec2).
    """
    c = measure.cells
    out = np.empty((c.n_t, c.n_x))
    for idx, atoms in enumerate(measure.samples):
        it, ix = divmod(idx, c.n_x)
        if atoms.shape[0] == 1 or np.ptp(atoms, axis=0).max() == 0.0:
            out[it, ix] = 0.0
            continue
        p1 = _cell_pairs(law, spec1, atoms, n_nodes)
        p2 = _cell_pairs(law, spec2, atoms, n_nodes)
        cross = np.mean(p1.eta * p2.q - p2.eta * p1.q)
        split = np.mean(p1.eta) * np.mean(p2.q) - np.mean(p1.q) * np.mean(p2.eta)
        out[it, ix] = cross - split
    return out


def concentration_metric(measures) -> dict:
    """Per-cell covariance traces across a viscosity sweep, plus a trend.

    measures: list of EmpiricalYoungMeasure with common cells, ordered by
    decreasing epsilon.  Returns a dict with the traces (n_eps, n_t, n_x),
    the epsilon list, and the fitted log-log slope of the max-cell trace
    (reported, not asserted).
    """
    if len(measures) < 2:
        raise ConfigError("need at least two viscosity values")
    cells = measures[0].cells
    for mu in measures[1:]:
        if mu.cells != cells:
            raise ConfigError("measures must share a cell partition")
    eps = np.array([mu.epsilon for mu in measures])
    traces = np.empty((len(measures), cells.n_t, cells.n_x))
    for k, mu in enumerate(measures):
        for idx, atoms in enumerate(mu.samples):
            it, ix = divmod(idx, cells.n_x)
            if atoms.shape[0] == 1:
                traces[k, it, ix] = 0.0
            else:
                cov = np.cov(atoms.T, bias=True)
                traces[k, it, ix] = float(np.trace(np.atleast_2d(cov)))
    maxima = traces.reshape(len(measures), -1).max(axis=1)
    slope = np.nan
    if np.all(maxima > 0.0) and np.all(eps > 0.0):
        slope = float(np.polyfit(np.log(eps), np.log(maxima), 1)[0])
    return {"epsilon": eps, "traces": traces, "max_trace": maxima, "slope": slope}
