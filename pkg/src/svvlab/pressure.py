"""Pressure laws for 1D isentropic gas dynamics.

Two families are supported:

* polytropic: P(rho) = kappa * rho**gamma with gamma > 1.  The default
  kappa = (gamma-1)**2 / (4*gamma) makes the wave integral K(rho) equal
  rho**theta exactly, theta = (gamma-1)/2.
* composite: two power-law regimes, exponent gamma1 near vacuum and
  gamma2 at infinity, joined by a smooth blend of log P on
  [rho_lo, rho_hi].  The blend uses a C-infinity smoothstep, so the law
  is exactly the pure power laws outside the blend window.

All derived thermodynamic quantities are provided: P, P', P'', sound
speed c = sqrt(P'), the wave integral K(rho) = int_0^rho sqrt(P'(y))/y dy,
internal energy e with rho**2 e' = P and e(0) = 0, the relative internal
energy about a far-field density, and the potential g of the high-order
energy (g'' = 2 P' e / rho, g(0) = g'(0) = 0).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.integrate import quad

from .errors import ConfigError, DomainError, NumericalError

_QUAD_TOL = 1e-10


def default_kappa(gamma: float) -> float:
    """Scaled kappa making K(rho) = rho**theta for the polytropic law."""
    return (gamma - 1.0) ** 2 / (4.0 * gamma)


def _smoothstep(t):
    """C-infinity monotone step: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    lo = t <= 0.0
    hi = t >= 1.0
    mid = ~(lo | hi)
    out = np.zeros_like(t)
    out[hi] = 1.0
    tm = t[mid]
    f = np.exp(-1.0 / tm)
    g = np.exp(-1.0 / (1.0 - tm))
    out[mid] = f / (f + g)
    return out


def _smoothstep_d1(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    mid = (t > 0.0) & (t < 1.0)
    tm = t[mid]
    f = np.exp(-1.0 / tm)
    g = np.exp(-1.0 / (1.0 - tm))
    fp = f / tm**2
    gp = -g / (1.0 - tm) ** 2
    out[mid] = (fp * g - f * gp) / (f + g) ** 2
    return out


def _smoothstep_d2(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    mid = (t > 0.0) & (t < 1.0)
    tm = t[mid]
    f = np.exp(-1.0 / tm)
    g = np.exp(-1.0 / (1.0 - tm))
    fp = f / tm**2
    gp = -g / (1.0 - tm) ** 2
    fpp = f * (1.0 - 2.0 * tm) / tm**4
    gpp = g * (1.0 - 2.0 * (1.0 - tm)) / (1.0 - tm) ** 4
    s = f + g
    num1 = (fpp * g - f * gpp) * s
    num2 = 2.0 * (fp * g - f * gp) * (fp + gp)
    out[mid] = (num1 - num2) / s**3
    return out


@dataclass(frozen=True)
class BoundCheck:
    """One empirical inequality check over a sample set."""

    name: str
    ratio_min: float
    ratio_max: float
    satisfied: bool


@dataclass(frozen=True)
class BoundReport:
    checks: tuple = ()

    def __bool__(self):
        return all(c.satisfied for c in self.checks)

    def __iter__(self):
        return iter(self.checks)

    def __len__(self):
        return len(self.checks)


@dataclass(frozen=True)
class PressureLaw:
    """Immutable pressure model; safe for concurrent use."""

    kind: str  # "polytropic" | "composite"
    gamma1: float
    gamma2: float
    kappa1: float
    kappa2: float
    rho_lo: float = 0.0  # blend window, composite only
    rho_hi: float = 0.0

    # -- constructors ------------------------------------------------------

    @staticmethod
    def polytropic(gamma: float, kappa: float | None = None) -> "PressureLaw":
        if gamma <= 1.0:
            raise ConfigError(f"polytropic law needs gamma > 1, got {gamma}")
        if kappa is None:
            kappa = default_kappa(gamma)
        if kappa <= 0.0:
            raise ConfigError(f"kappa must be positive, got {kappa}")
        return PressureLaw("polytropic", gamma, gamma, kappa, kappa)

    @staticmethod
    def composite(
        gamma1: float,
        gamma2: float,
        kappa1: float,
        kappa2: float,
        rho_lo: float,
        rho_hi: float,
    ) -> "PressureLaw":
        violations = []
        if not (1.0 < gamma2 <= gamma1 < 3.0):
            violations.append(
                f"composite law needs 1 < gamma2 <= gamma1 < 3, got ({gamma1}, {gamma2})"
            )
        if kappa1 <= 0.0 or kappa2 <= 0.0:
            violations.append("kappa1 and kappa2 must be positive")
        if not (0.0 < rho_lo < rho_hi):
            violations.append(
                f"blend window needs 0 < rho_lo < rho_hi, got ({rho_lo}, {rho_hi})"
            )
        if violations:
            raise ConfigError("; ".join(violations), violations)
        return PressureLaw("composite", gamma1, gamma2, kappa1, kappa2, rho_lo, rho_hi)

    # -- basic properties --------------------------------------------------

    @property
    def is_polytropic(self) -> bool:
        return self.kind == "polytropic"

    @property
    def gamma(self) -> float:
        """Adiabatic exponent (polytropic only)."""
        if not self.is_polytropic:
            raise DomainError("gamma is single-valued only for the polytropic law")
        return self.gamma1

    @property
    def kappa(self) -> float:
        if not self.is_polytropic:
            raise DomainError("kappa is single-valued only for the polytropic law")
        return self.kappa1

    @property
    def theta(self) -> float:
        if not self.is_polytropic:
            raise DomainError("theta is single-valued only for the polytropic law")
        return 0.5 * (self.gamma1 - 1.0)

    @property
    def theta1(self) -> float:
        return 0.5 * (self.gamma1 - 1.0)

    @property
    def theta2(self) -> float:
        return 0.5 * (self.gamma2 - 1.0)

    @property
    def lam(self) -> float:
        """Kernel exponent (3 - gamma) / (2 (gamma - 1)), polytropic only."""
        g = self.gamma
        return (3.0 - g) / (2.0 * (g - 1.0))

    @property
    def is_scaled(self) -> bool:
        """True when kappa is the scaled value giving K(rho) = rho**theta."""
        return self.is_polytropic and abs(
            self.kappa - default_kappa(self.gamma)
        ) <= 1e-14 * default_kappa(self.gamma)

    # -- blend helpers (composite) -----------------------------------------

    def _blend_t(self, rho):
        return (rho - self.rho_lo) / (self.rho_hi - self.rho_lo)

    def _logP_parts(self, rho):
        """Return L, L', L'' of log P for the composite law (rho > 0)."""
        rho = np.asarray(rho, dtype=float)
        L1 = np.log(self.kappa1) + self.gamma1 * np.log(rho)
        L2 = np.log(self.kappa2) + self.gamma2 * np.log(rho)
        d = self.rho_hi - self.rho_lo
        t = self._blend_t(rho)
        w = _smoothstep(t)
        wp = _smoothstep_d1(t) / d
        wpp = _smoothstep_d2(t) / d**2
        L = (1.0 - w) * L1 + w * L2
        dL1, dL2 = self.gamma1 / rho, self.gamma2 / rho
        d2L1, d2L2 = -self.gamma1 / rho**2, -self.gamma2 / rho**2
        Lp = (1.0 - w) * dL1 + w * dL2 + wp * (L2 - L1)
        Lpp = (
            (1.0 - w) * d2L1
            + w * d2L2
            + 2.0 * wp * (dL2 - dL1)
            + wpp * (L2 - L1)
        )
        return L, Lp, Lpp

    # -- thermodynamic closure ---------------------------------------------

    def pressure(self, rho):
        """P(rho); P(0) = 0, strictly increasing."""
        rho = self._check_nonneg(rho)
        if self.is_polytropic:
            return self.kappa * rho**self.gamma
        out = np.where(
            rho > 0.0,
            np.exp(self._logP_parts(np.where(rho > 0.0, rho, 1.0))[0]),
            0.0,
        )
        return out if out.ndim else float(out)

    def dpressure(self, rho):
        """P'(rho)."""
        rho = self._check_nonneg(rho)
        if self.is_polytropic:
            return self.kappa * self.gamma * rho ** (self.gamma - 1.0)
        safe = np.where(rho > 0.0, rho, 1.0)
        L, Lp, _ = self._logP_parts(safe)
        out = np.where(rho > 0.0, np.exp(L) * Lp, 0.0)
        return out if out.ndim else float(out)

    def d2pressure(self, rho):
        """P''(rho) (rho > 0)."""
        rho = self._check_pos(rho)
        if self.is_polytropic:
            g = self.gamma
            return self.kappa * g * (g - 1.0) * rho ** (g - 2.0)
        L, Lp, Lpp = self._logP_parts(rho)
        out = np.exp(L) * (Lpp + Lp**2)
        return out if np.ndim(out) else float(out)

    def sound_speed(self, rho):
        """c(rho) = sqrt(P'(rho)), rho > 0."""
        rho = self._check_pos(rho)
        return np.sqrt(self.dpressure(rho))

    def k_integral(self, rho):
        """K(rho) = int_0^rho sqrt(P'(y))/y dy.

        Equals rho**theta exactly for the scaled polytropic law; computed
        by closed form below the blend window and adaptive quadrature
        above it for the composite law.
        """
        rho = self._check_nonneg(rho)
        if self.is_polytropic:
            th = self.theta
            return np.sqrt(self.kappa * self.gamma) / th * rho**th
        return self._vector(self._k_one, rho)

    def _k_one(self, rho):
        th1 = self.theta1
        pref = np.sqrt(self.kappa1 * self.gamma1) / th1
        if rho <= self.rho_lo:
            return pref * rho**th1
        base = pref * self.rho_lo**th1
        val, err = quad(
            lambda y: np.sqrt(self.dpressure(y)) / y,
            self.rho_lo,
            rho,
            epsabs=_QUAD_TOL,
            epsrel=_QUAD_TOL,
            limit=200,
        )
        if not np.isfinite(val):
            raise NumericalError("k_integral quadrature failed", residual=err)
        return base + val

    def internal_energy(self, rho):
        """e(rho) with rho**2 e' = P, e(0) = 0."""
        rho = self._check_nonneg(rho)
        if self.is_polytropic:
            g = self.gamma
            return self.kappa / (g - 1.0) * rho ** (g - 1.0)
        return self._vector(self._e_one, rho)

    @cached_property
    def _e_blend(self):
        # Chebyshev model of int_{rho_lo}^{rho} P/y^2 dy over the blend
        # window; the integrand is smooth there so degree 48 reaches
        # machine precision and removes nested quadratures downstream.
        def raw(r):
            val, _ = quad(
                lambda y: self.pressure(y) / y**2,
                self.rho_lo,
                r,
                epsabs=_QUAD_TOL,
                epsrel=_QUAD_TOL,
                limit=200,
            )
            return val

        nodes = np.polynomial.chebyshev.chebpts1(48)
        lo, hi = self.rho_lo, self.rho_hi
        rs = 0.5 * (hi - lo) * (nodes + 1.0) + lo
        vals = np.array([raw(r) for r in rs])
        return np.polynomial.Chebyshev.fit(rs, vals, 47, domain=[lo, hi])

    def _e_one(self, rho):
        g1, g2 = self.gamma1, self.gamma2
        if rho <= self.rho_lo:
            return self.kappa1 / (g1 - 1.0) * rho ** (g1 - 1.0)
        base = self.kappa1 / (g1 - 1.0) * self.rho_lo ** (g1 - 1.0)
        if rho <= self.rho_hi:
            return base + float(self._e_blend(rho))
        tail = (
            self.kappa2
            / (g2 - 1.0)
            * (rho ** (g2 - 1.0) - self.rho_hi ** (g2 - 1.0))
        )
        return base + float(self._e_blend(self.rho_hi)) + tail

    def rho_e_prime(self, rho):
        """(rho e(rho))' = e(rho) + P(rho)/rho, rho > 0."""
        rho = self._check_pos(rho)
        return self.internal_energy(rho) + self.pressure(rho) / rho

    def relative_internal_energy(self, rho, rho_inf):
        """e*(rho, rho_inf): Bregman gap of the convex function rho*e(rho)."""
        rho = self._check_nonneg(rho)
        if rho_inf <= 0.0:
            raise DomainError(f"rho_inf must be positive, got {rho_inf}")
        base = rho_inf * self.internal_energy(rho_inf)
        slope = self.rho_e_prime(rho_inf)
        return rho * self.internal_energy(rho) - base - slope * (rho - rho_inf)

    def high_order_potential(self, rho):
        """g(rho) with g'' = 2 P' e / rho and g(0) = g'(0) = 0."""
        rho = self._check_nonneg(rho)
        if self.is_polytropic:
            g, k = self.gamma, self.kappa
            c = 2.0 * k**2 * g / (g - 1.0)
            return c / ((2.0 * g - 2.0) * (2.0 * g - 1.0)) * rho ** (2.0 * g - 1.0)
        return self._vector(self._g_one, rho)

    def _g_one(self, rho):
        # g(rho) = int_0^rho (rho - y) g''(y) dy; closed power-law part
        # below the blend window, quadrature above.
        g1, k1 = self.gamma1, self.kappa1
        c = 2.0 * k1**2 * g1 / (g1 - 1.0)  # g'' = c y^(2 g1 - 3) for y <= rho_lo
        a = min(rho, self.rho_lo)
        p = 2.0 * g1 - 2.0
        part = c * (rho * a**p / p - a ** (p + 1.0) / (p + 1.0))
        if rho <= self.rho_lo:
            return part
        val, err = quad(
            lambda y: (rho - y)
            * 2.0
            * self.dpressure(y)
            * self.internal_energy(y)
            / y,
            self.rho_lo,
            rho,
            epsabs=_QUAD_TOL,
            epsrel=_QUAD_TOL,
            limit=200,
        )
        if not np.isfinite(val):
            raise NumericalError("high_order_potential quadrature failed", residual=err)
        return part + val

    # -- empirical bound checks --------------------------------------------

    def verify_bounds(self, rho_samples, rho_inf: float = 1.0) -> BoundReport:
        """Empirically check the structural inequalities of the law.

        Returns, per inequality, the tightest constants observed over the
        sample set.  Violations are report entries, never exceptions.
        """
        rho = np.asarray(rho_samples, dtype=float)
        if rho.size == 0:
            return BoundReport(())
        rho = rho[rho > 0.0]
        checks = []

        def ratio_check(name, num, den, positive=True):
            mask = den > 0.0
            if not mask.any():
                return
            r = num[mask] / den[mask]
            ok = bool(np.all(np.isfinite(r)) and (not positive or np.all(r > 0.0)))
            checks.append(BoundCheck(name, float(r.min()), float(r.max()), ok))

        P = self.pressure(rho)
        Pp = self.dpressure(rho)
        Ppp = self.d2pressure(rho)
        e = self.internal_energy(rho)
        K = self.k_integral(rho)
        estar = self.relative_internal_energy(rho, rho_inf)

        gnl = 2.0 * Pp + rho * Ppp
        checks.append(
            BoundCheck(
                "strict-hyperbolicity P'>0",
                float(Pp.min()),
                float(Pp.max()),
                bool(np.all(Pp > 0.0)),
            )
        )
        checks.append(
            BoundCheck(
                "genuine-nonlinearity 2P'+rho P''>0",
                float(gnl.min()),
                float(gnl.max()),
                bool(np.all(gnl > 0.0)),
            )
        )

        # Power-regime comparisons: exponent gamma1 below, gamma2 above.
        if self.is_polytropic:
            regimes = [("", np.ones_like(rho, dtype=bool), self.gamma1)]
        else:
            regimes = [
                ("-vacuum", rho <= self.rho_lo, self.gamma1),
                ("-infinity", rho >= self.rho_hi, self.gamma2),
            ]
        for tag, mask, g in regimes:
            if not mask.any():
                continue
            th = 0.5 * (g - 1.0)
            ratio_check(f"pressure-vs-power{tag}", P[mask], rho[mask] ** g)
            ratio_check(
                f"internal-energy-vs-power{tag}", e[mask], rho[mask] ** (g - 1.0)
            )
            ratio_check(f"wave-integral-vs-power{tag}", K[mask], rho[mask] ** th)
            ratio_check(
                f"relative-energy-lower{tag}",
                estar[mask],
                rho[mask] * (rho[mask] ** th - rho_inf**th) ** 2,
            )
            ratio_check(
                f"density-control-by-relative-energy{tag}",
                rho[mask] ** g,
                estar[mask] + rho_inf**g,
            )
        return BoundReport(tuple(checks))

    # -- small utilities ---------------------------------------------------

    @staticmethod
    def _check_nonneg(rho):
        arr = np.asarray(rho, dtype=float)
        if np.any(arr < 0.0):
            raise DomainError("density must be nonnegative")
        return arr if arr.ndim else float(arr)

    @staticmethod
    def _check_pos(rho):
        arr = np.asarray(rho, dtype=float)
        if np.any(arr <= 0.0):
            raise DomainError("density must be strictly positive")
        return arr if arr.ndim else float(arr)

    @staticmethod
    def _vector(fn, rho):
        arr = np.asarray(rho, dtype=float)
        if arr.ndim == 0:
            return fn(float(arr))
        return np.array([fn(float(r)) for r in arr.ravel()]).reshape(arr.shape)
