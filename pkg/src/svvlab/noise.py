"""Finite-mode multiplicative forcing for the momentum equation.

The forcing is sum_k a_k zeta_k(x, rho, m) dW_k with independent Brownian
motions W_k.  Before use in the viscous system the model is truncated and
mollified: only the first floor(1/eps) modes are kept, each coefficient is
multiplied by a smooth indicator of the Riemann-invariant region
Gamma_H = {-H <= w1 <= w2 <= H} with H = c1 * eps^(-alpha1) (and, in the
whole-line case, by a smooth spatial cutoff on |x| < 1/eps).

Brownian increments come from counter-based Philox streams keyed by
(seed, sample, fine step), so that runs with different eps, different
mode counts, or halved time steps share one underlying path: increments
are always generated on a base grid dt_base and summed.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DomainError
from .pressure import PressureLaw
from .pressure import _smoothstep as smoothstep

_U64 = (1 << 64) - 1


def bump(x, center=0.0, width=1.0, amplitude=1.0):
    """C-infinity bump, equal to amplitude at the center, 0 outside."""
    t = (np.asarray(x, dtype=float) - center) / width
    inside = np.abs(t) < 1.0
    safe = np.where(inside, t, 0.0)
    out = np.where(inside, amplitude * np.exp(1.0 - 1.0 / (1.0 - safe**2)), 0.0)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class NoiseMode:
    """One forcing mode: coefficient a and state-dependent profile zeta."""

    a: float
    zeta: object  # callable (x, rho, m) -> field

    def __call__(self, x, rho, m):
        return self.zeta(x, rho, m)


@dataclass(frozen=True)
class NoiseModel:
    """Immutable noise description; sampling streams are per (sample, step)."""

    modes: tuple
    law: PressureLaw
    seed: int
    dt_base: float
    support_kind: str = "compact_x"  # or "whole_line"
    epsilon: float | None = None
    mode_cap: int | None = None
    H: float | None = None  # invariant-region half-width after mollification
    trans_width: float | None = None

    # -- construction ------------------------------------------------------

    @staticmethod
    def single_mode(
        a1: float,
        law: PressureLaw,
        seed: int,
        dt_base: float,
        center: float = 0.0,
        width: float = 1.0,
        amplitude: float = 1.0,
    ) -> "NoiseModel":
        """zeta_1(x, rho, m) = alpha(x) rho with a compactly supported bump alpha."""
        if width <= 0.0:
            raise ConfigError("bump width must be positive (compact support)")

        def zeta(x, rho, m):
            return bump(x, center, width, amplitude) * rho

        return NoiseModel(
            modes=(NoiseMode(a1, zeta),), law=law, seed=seed, dt_base=dt_base
        )

    @staticmethod
    def mode_family(
        a1: float,
        decay: float,
        n_modes: int,
        law: PressureLaw,
        seed: int,
        dt_base: float,
        center: float = 0.0,
        width: float = 1.0,
        support_kind: str = "compact_x",
    ) -> "NoiseModel":
        """Modes a_k = a1 k^(-decay), zeta_k = shifted bumps times rho."""
        if decay < 0.0:
            raise ConfigError("a_k decay exponent must be nonnegative")
        modes = []
        for k in range(1, n_modes + 1):
            shift = center + 0.25 * width * ((k - 1) % 3 - 1)
            wk = width / (1.0 + 0.1 * (k - 1))

            def zeta(x, rho, m, _s=shift, _w=wk):
                return bump(x, _s, _w) * rho

            modes.append(NoiseMode(a1 * k ** (-decay), zeta))
        return NoiseModel(
            modes=tuple(modes),
            law=law,
            seed=seed,
            dt_base=dt_base,
            support_kind=support_kind,
        )

    def __post_init__(self):
        amps = [abs(m.a) for m in self.modes]
        if any(a2 > a1 + 1e-15 for a1, a2 in zip(amps, amps[1:])):
            raise ConfigError("|a_k| must be nonincreasing in k")

    # -- truncation / mollification ----------------------------------------

    def truncate_mollify(
        self,
        epsilon: float,
        c1: float,
        alpha1: float,
        rho_inf: float,
        trans_width: float | None = None,
    ) -> "NoiseModel":
        """Keep floor(1/eps) modes and confine them to Gamma_H smoothly."""
        if not (0.0 < epsilon <= 1.0):
            raise ConfigError(f"epsilon must lie in (0, 1], got {epsilon}")
        if c1 <= 0.0:
            raise ConfigError("c1 must be positive")
        law = self.law
        th2 = law.theta2
        alpha_max = th2 if law.gamma1 <= 2.0 else min(0.5, th2)
        if not (0.0 < alpha1 < alpha_max):
            raise ConfigError(
                f"alpha1 must lie in (0, {alpha_max:g}) for this law, got {alpha1}"
            )
        H = c1 * epsilon ** (-alpha1)
        H_min = 1.0 + (rho_inf + 1.0) ** th2
        if H < H_min:
            raise ConfigError(
                f"H = c1 eps^-alpha1 = {H:.6g} violates the far-field bound "
                f"{H_min:.6g}; choose a smaller epsilon or larger c1"
            )
        if not law.is_polytropic and H < law.rho_lo:
            raise ConfigError(
                f"H = {H:.6g} is below the vacuum-regime edge {law.rho_lo:.6g}"
            )
        cap = int(np.floor(1.0 / epsilon))
        return replace(
            self,
            modes=self.modes[:cap],
            epsilon=epsilon,
            mode_cap=cap,
            H=H,
            trans_width=float(trans_width) if trans_width is not None else epsilon,
        )

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    # -- evaluation --------------------------------------------------------

    def _region_indicator(self, rho, m):
        """Smooth indicator of Gamma_H in the Riemann invariants."""
        rho = np.asarray(rho, dtype=float)
        m = np.asarray(m, dtype=float)
        pos = rho > 0.0
        out = np.zeros(np.broadcast_shapes(rho.shape, m.shape))
        if not pos.any():
            return out
        rp = np.where(pos, rho, 1.0)
        u = np.where(pos, m / rp, 0.0)
        K = np.where(pos, self.law.k_integral(rp), 0.0)
        w1 = u - K
        w2 = u + K
        width = self.trans_width if self.trans_width else 1e-3
        j = smoothstep((self.H - w2) / width) * smoothstep((w1 + self.H) / width)
        return np.where(pos, j, 0.0)

    def _spatial_cutoff(self, x):
        if self.support_kind != "whole_line" or self.epsilon is None:
            return np.ones_like(np.asarray(x, dtype=float))
        return smoothstep(2.0 * (1.0 - np.abs(self.epsilon * np.asarray(x))))

    def zeta_eff(self, k, x, rho, m):
        """Mollified coefficient of mode k (0-based) at the given states."""
        raw = self.modes[k](x, rho, m)
        if self.H is None:
            return raw
        return raw * self._region_indicator(rho, m) * self._spatial_cutoff(x)

    def forcing_l2(self, x, rho, m):
        """Pointwise sqrt(sum_k (a_k zeta_k)^2), the growth functional."""
        total = 0.0
        for k, mode in enumerate(self.modes):
            z = mode.a * self.zeta_eff(k, x, rho, m)
            total = total + z**2
        return np.sqrt(total)

    def forcing_quadratic(self, x, rho, m):
        """sum_k (a_k zeta_k)^2, the Ito-correction integrand numerator."""
        total = 0.0
        for k, mode in enumerate(self.modes):
            z = mode.a * self.zeta_eff(k, x, rho, m)
            total = total + z**2
        return total

    def apply_forcing(self, x, rho, m, dW):
        """Momentum increment sum_k a_k zeta_k^eps(x, rho, m) dW_k."""
        dW = np.asarray(dW, dtype=float)
        if dW.shape[0] != self.n_modes:
            raise DomainError(
                f"expected {self.n_modes} increments, got {dW.shape[0]}"
            )
        out = np.zeros_like(np.asarray(rho, dtype=float))
        for k, mode in enumerate(self.modes):
            if dW[k] != 0.0:
                out = out + mode.a * self.zeta_eff(k, x, rho, m) * dW[k]
        return out

    # -- Brownian increments ----------------------------------------------

    def _blocks(self, sample_id: int, fine_step: int, count: int):
        """Standard normal draws for one fine step; mode i is draw i."""
        key = ((int(self.seed) & _U64) << 64) | (int(sample_id) & _U64)
        bitgen = np.random.Philox(key=key, counter=int(fine_step) << 128)
        return np.random.Generator(bitgen).standard_normal(count)

    def sample_increments(self, sample_id: int, step: int, dt: float):
        """Brownian increments over [step dt, (step+1) dt) for all modes.

        dt must be an integer multiple of dt_base; the increments are sums
        of base-grid draws, so coarse and fine runs share one path.
        """
        k = dt / self.dt_base
        ki = int(round(k))
        if abs(k - ki) > 1e-9 or ki < 1:
            raise ConfigError(
                f"dt = {dt:g} must be an integer multiple of dt_base = {self.dt_base:g}"
            )
        nm = self.n_modes
        root = np.sqrt(self.dt_base)
        out = np.zeros(nm)
        base = step * ki
        for j in range(ki):
            out += self._blocks(sample_id, base + j, nm)
        return out * root

    # -- reporting ---------------------------------------------------------

    def growth_check(self, states, B0: float | None = None):
        """Empirical bound constant of the forcing growth condition.

        states is an iterable of (x, rho, m) arrays.  Returns a GrowthReport
        with the max of G / (rho (1 + eps^2 + u^2 + e)^{1/2}); vacuum cells
        contribute zero.
        """
        eps2 = (self.epsilon or 0.0) ** 2
        worst = 0.0
        count = 0
        for x, rho, m in states:
            rho = np.asarray(rho, dtype=float)
            m = np.asarray(m, dtype=float)
            G = self.forcing_l2(x, rho, m)
            pos = rho > 0.0
            if pos.any():
                rp = rho[pos]
                u = m[pos] / rp
                env = rp * np.sqrt(
                    1.0 + eps2 + u**2 + self.law.internal_energy(rp)
                )
                worst = max(worst, float(np.max(G[pos] / env)))
            count += 1
        passed = None if B0 is None else bool(worst <= B0)
        return GrowthReport(empirical_B0=worst, n_states=count, passed=passed)


@dataclass(frozen=True)
class GrowthReport:
    empirical_B0: float
    n_states: int
    passed: bool | None = None
