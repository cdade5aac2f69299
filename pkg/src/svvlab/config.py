"""Run configuration: YAML schema, initial data, and cross-validation.

A run file is a key-value tree with blocks: law, grid, solver, initial,
noise, diagnostics, sweep, plus a seed and an output directory.  All
violations are collected and reported together before anything runs.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
import yaml

from .diagnostics import BumpTestFunction
from .entropy import EntropySpec
from .errors import ConfigError
from .noise import NoiseModel
from .pressure import PressureLaw
from .solver import Grid, GridState, SolverConfig


@dataclass(frozen=True)
class InitialData:
    """Initial (rho, m) profile selected by kind.

    kinds: constant | bump | riemann_smoothed | from_file.  Density must
    stay >= c0 > 0 pointwise.
    """

    kind: str
    amplitude: float = 0.0
    center: float = 0.0
    width: float = 1.0
    m_amplitude: float = 0.0
    left: tuple = (1.0, 0.0)
    right: tuple = (1.0, 0.0)
    path: str = ""
    c0: float = 0.1

    def build(self, grid: Grid, rho_inf: float) -> GridState:
        x = grid.x
        if self.kind == "constant":
            rho = np.full(x.size, rho_inf)
            m = np.zeros(x.size)
        elif self.kind == "bump":
            prof = np.exp(-((x - self.center) ** 2) / (2.0 * self.width**2))
            rho = rho_inf + self.amplitude * prof
            m = self.m_amplitude * prof
        elif self.kind == "riemann_smoothed":
            s = 0.5 * (1.0 + np.tanh((x - self.center) / self.width))
            rho = self.left[0] + (self.right[0] - self.left[0]) * s
            m = self.left[1] + (self.right[1] - self.left[1]) * s
        elif self.kind == "from_file":
            data = np.loadtxt(self.path, delimiter=",", skiprows=1)
            rho = np.interp(x, data[:, 0], data[:, 1])
            m = np.interp(x, data[:, 0], data[:, 2])
        else:
            raise ConfigError(f"unknown initial-data kind {self.kind!r}")
        if rho.min() < self.c0:
            raise ConfigError(
                f"initial density dips to {rho.min():g}, below the required "
                f"lower bound c0 = {self.c0:g}"
            )
        return GridState(0.0, rho, m)


@dataclass
class RunConfig:
    """Everything needed to reproduce a run from (file, seed)."""

    law: PressureLaw
    grid: Grid
    solver: SolverConfig
    initial: InitialData
    noise: NoiseModel | None
    seed: int
    output_dir: str
    noise_case: int = 2
    noise_c1: float = 1.0
    noise_alpha1: float = 0.25
    alpha0: float = 0.0
    window: tuple = (-1.0, 1.0)
    moment_p: tuple = (1.0, 2.0)
    cells: tuple = (8, 8)
    sweep_epsilons: tuple = ()
    sweep_R: tuple = ()
    samples: int = 1
    phi: BumpTestFunction | None = None
    psis: tuple = ("energy",)
    raw: dict = field(default_factory=dict)


def _law_from(block, errs):
    kind = block.get("kind", "polytropic")
    try:
        if kind == "polytropic":
            return PressureLaw.polytropic(
                float(block.get("gamma", 2.0)),
                None if block.get("kappa") is None else float(block["kappa"]),
            )
        if kind == "composite":
            return PressureLaw.composite(
                gamma1=float(block["gamma1"]),
                gamma2=float(block["gamma2"]),
                kappa1=float(block.get("kappa1", 1.0)),
                kappa2=float(block.get("kappa2", 1.0)),
                rho_lo=float(block.get("rho_lo", 1.0)),
                rho_hi=float(block.get("rho_hi", 2.0)),
            )
        errs.append(f"law.kind must be polytropic or composite, got {kind!r}")
    except (ConfigError, ValueError, KeyError) as exc:
        errs.append(f"law block invalid: {exc}")
    return None


def _noise_from(block, law, seed, dt_base, errs):
    kind = block.get("kind", "none")
    if kind == "none":
        return None
    try:
        if kind == "single_mode":
            return NoiseModel.single_mode(
                float(block.get("amplitude", 0.1)),
                law,
                seed=seed,
                dt_base=dt_base,
                center=float(block.get("center", 0.0)),
                width=float(block.get("width", 1.0)),
            )
        if kind == "mode_family":
            return NoiseModel.mode_family(
                float(block.get("amplitude", 0.1)),
                float(block.get("decay_p", 2.0)),
                int(block.get("n_modes", 8)),
                law,
                seed=seed,
                dt_base=dt_base,
                center=float(block.get("center", 0.0)),
                width=float(block.get("width", 1.0)),
                support_kind=block.get("support", "compact_x"),
            )
        errs.append(f"noise.kind must be none, single_mode or mode_family, got {kind!r}")
    except (ConfigError, ValueError) as exc:
        errs.append(f"noise block invalid: {exc}")
    return None


def _psi_spec(name) -> EntropySpec:
    if name == "energy":
        return EntropySpec.energy()
    if isinstance(name, str) and name.startswith("cutoff:"):
        return EntropySpec.cutoff_energy(float(name.split(":", 1)[1]))
    if name == "signed_square":
        return EntropySpec.signed_square()
    if isinstance(name, str) and name.startswith("bump:"):
        c, w = (float(v) for v in name.split(":", 1)[1].split(","))
        return EntropySpec.compact_bump(c, w)
    raise ConfigError(f"unknown entropy generator spec {name!r}")


def load_config(path: str) -> RunConfig:
    """Parse and fully validate a YAML run file.

    All schema and cross-module violations are gathered and raised as one
    ConfigError listing every problem.
    """
    with open(path) as fh:
        raw = yaml.safe_load(fh) or {}
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> RunConfig:
    errs = []
    if not isinstance(raw, dict) or not raw:
        raise ConfigError("empty configuration", ["configuration file is empty"])

    law = _law_from(raw.get("law", {}), errs)

    grid = None
    gb = raw.get("grid", {})
    try:
        grid = Grid(L=float(gb.get("L", 5.0)), n=int(gb.get("n", 256)))
    except (ConfigError, ValueError) as exc:
        errs.append(f"grid block invalid: {exc}")

    solver = None
    sb = raw.get("solver", {})
    try:
        solver = SolverConfig(
            epsilon=float(sb.get("epsilon", 0.05)),
            T=float(sb.get("T", 1.0)),
            dt=float(sb.get("dt", 1e-3)),
            rho_inf=float(sb.get("rho_inf", 1.0)),
            n_saves=int(sb.get("n_saves", 10)),
            scheme=sb.get("scheme", "imex"),
            density_floor=float(sb.get("density_floor", 1e-12)),
            record_steps=bool(sb.get("record_steps", False)),
            record_forcing=bool(sb.get("record_forcing", False)),
        )
        solver.n_steps  # validates T/dt divisibility
    except (ConfigError, ValueError) as exc:
        errs.append(f"solver block invalid: {exc}")

    ib = raw.get("initial", {"kind": "constant"})
    initial = InitialData(
        kind=ib.get("kind", "constant"),
        amplitude=float(ib.get("amplitude", 0.0)),
        center=float(ib.get("center", 0.0)),
        width=float(ib.get("width", 1.0)),
        m_amplitude=float(ib.get("m_amplitude", 0.0)),
        left=tuple(ib.get("left", (1.0, 0.0))),
        right=tuple(ib.get("right", (1.0, 0.0))),
        path=ib.get("path", ""),
        c0=float(ib.get("c0", 0.1)),
    )
    if initial.kind not in ("constant", "bump", "riemann_smoothed", "from_file"):
        errs.append(f"initial.kind {initial.kind!r} not recognized")

    seed = int(raw.get("seed", 0))
    nb = raw.get("noise", {"kind": "none"})
    dt_base = float(sb.get("dt_base", sb.get("dt", 1e-3)))
    if law is not None:
        noise = _noise_from(nb, law, seed, dt_base, errs)
    else:
        noise = None
        if nb.get("kind", "none") not in ("none", "single_mode", "mode_family"):
            errs.append(
                f"noise.kind must be none, single_mode or mode_family, "
                f"got {nb.get('kind')!r}"
            )
    noise_case = int(nb.get("case", 2))
    noise_c1 = float(nb.get("c1", 1.0))
    noise_alpha1 = float(nb.get("alpha1", 0.25))
    alpha0 = float(nb.get("alpha0", 0.0))

    # cross-constraints
    if law is not None and solver is not None and noise is not None:
        try:
            noise.truncate_mollify(
                solver.epsilon, noise_c1, noise_alpha1, solver.rho_inf
            )
        except ConfigError as exc:
            errs.append(f"noise mollification constraint violated: {exc}")
    if noise_case == 1 and law is not None:
        if alpha0 <= 0.0 or alpha0 * law.gamma2 <= 1.0:
            errs.append(
                "case 1 requires alpha0 > 0 with alpha0 * gamma2 > 1 so the "
                "far-field density eps^alpha0 decays fast enough"
            )
    if noise_case not in (1, 2, 3):
        errs.append(f"noise.case must be 1, 2 or 3, got {noise_case}")

    if solver is not None and grid is not None and law is not None:
        try:
            state = initial.build(grid, solver.rho_inf)
        except (ConfigError, OSError, ValueError) as exc:
            errs.append(f"initial data invalid: {exc}")
        else:
            del state

    db = raw.get("diagnostics", {})
    window = tuple(db.get("window", (-1.0, 1.0)))
    moment_p = tuple(float(p) for p in db.get("moment_p", (1.0, 2.0)))
    if any(p > 6.0 for p in moment_p):
        errs.append("moment exponents above 6 are rejected (variance blow-up)")
    if any(p < 1.0 for p in moment_p):
        errs.append("moment exponents must be >= 1")
    phi = None
    if "phi" in db:
        pb = db["phi"]
        try:
            phi = BumpTestFunction(
                float(pb["t0"]), float(pb["rt"]), float(pb["x0"]), float(pb["rx"])
            )
            if solver is not None and grid is not None and not phi.supported_in(
                solver.T, grid.L
            ):
                errs.append("phi support must stay inside (0, T) x (-L, L)")
        except (ConfigError, KeyError, ValueError) as exc:
            errs.append(f"phi block invalid: {exc}")
    psis = tuple(db.get("psis", ("energy",)))
    for name in psis:
        try:
            _psi_spec(name)
        except ConfigError as exc:
            errs.append(str(exc))

    wb = raw.get("sweep", {})
    sweep_eps = tuple(float(e) for e in wb.get("epsilons", ()))
    if sweep_eps and any(b >= a for a, b in zip(sweep_eps, sweep_eps[1:])):
        errs.append("sweep.epsilons must be strictly decreasing")
    sweep_R = tuple(float(r) for r in wb.get("R", ()))
    samples = int(wb.get("samples", raw.get("samples", 1)))
    if samples < 1:
        errs.append("sample count must be >= 1")
    cells = tuple(int(c) for c in wb.get("cells", (8, 8)))

    output_dir = raw.get("output_dir") or os.environ.get("SVV_OUTPUT_DIR", "out")

    if errs:
        raise ConfigError(
            "configuration rejected:\n  - " + "\n  - ".join(errs), errs
        )

    return RunConfig(
        law=law,
        grid=grid,
        solver=solver,
        initial=initial,
        noise=noise,
        seed=seed,
        output_dir=output_dir,
        noise_case=noise_case,
        noise_c1=noise_c1,
        noise_alpha1=noise_alpha1,
        alpha0=alpha0,
        window=window,
        moment_p=moment_p,
        cells=cells,
        sweep_epsilons=sweep_eps,
        sweep_R=sweep_R,
        samples=samples,
        phi=phi,
        psis=psis,
        raw=raw,
    )
