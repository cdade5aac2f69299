"""Entropy pairs for 1D isentropic gas dynamics.

For the polytropic law every weak entropy pair is generated from a scalar
function psi through the explicit kernel with exponent
lambda = (3 - gamma) / (2 (gamma - 1)):

    eta(rho, u) = rho / M0 * int_{-1}^{1} psi(u + K(rho) z) (1 - z^2)^lambda dz
    q(rho, u)   = rho / M0 * int_{-1}^{1} (u + theta K(rho) z) psi(...) (1 - z^2)^lambda dz

with K(rho) the wave integral and M0 = int (1 - z^2)^lambda dz.  The
normalization M0 is fixed so that psi(s) = s^2/2 reproduces the mechanical
energy pair exactly (and psi = 1 gives eta = rho).  Quadrature is
Gauss-Jacobi in z with the weight (1 - z^2)^lambda, which also covers
gamma > 3 where lambda is negative and the raw kernel is endpoint-singular.

Momentum derivatives of eta are obtained by differentiating under the
integral (quadrature of psi' and psi''), not by numerical differencing.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.special import roots_jacobi

from .errors import DomainError
from .pressure import PressureLaw


# ---------------------------------------------------------------------------
# raw kernels (paper normalization, scaled-kappa polytropic form)
# ---------------------------------------------------------------------------

def _lam_theta(gamma):
    if gamma <= 1.0:
        raise DomainError(f"kernel requires gamma > 1, got {gamma}")
    theta = 0.5 * (gamma - 1.0)
    lam = (3.0 - gamma) / (2.0 * (gamma - 1.0))
    return lam, theta


def kernel_chi(gamma, rho, u, s):
    """Entropy kernel [rho^(2 theta) - (s-u)^2]_+^lambda.

    For gamma > 3 (lambda < 0) the value on the support boundary is
    +inf; it is flagged, not raised, and only ever consumed by the
    weighted quadrature which absorbs the singularity into the weight.
    """
    lam, theta = _lam_theta(gamma)
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0.0):
        raise DomainError("density must be nonnegative")
    bracket = rho ** (2.0 * theta) - (np.asarray(s, dtype=float) - u) ** 2
    with np.errstate(divide="ignore"):
        out = np.where(
            bracket > 0.0,
            np.where(bracket > 0.0, bracket, 1.0) ** lam,
            np.where((bracket == 0.0) & (lam < 0.0), np.inf, 0.0),
        )
    return out if out.ndim else float(out)


def kernel_sigma(gamma, rho, u, s):
    """Entropy flux kernel (theta s + (1 - theta) u) [rho^(2 theta) - (u-s)^2]_+^lambda."""
    _, theta = _lam_theta(gamma)
    pref = theta * np.asarray(s, dtype=float) + (1.0 - theta) * np.asarray(u)
    out = pref * kernel_chi(gamma, rho, u, s)
    return out if np.ndim(out) else float(out)


# ---------------------------------------------------------------------------
# generating functions
# ---------------------------------------------------------------------------

def psi_cutoff(R, s):
    """Three-piece C^2 cut-off approximation of s^2/2 and its derivatives.

    Returns (psi_R, psi_R', psi_R'').  psi_R'' is the piecewise-linear hat:
    1 on |s| <= R, (2R - |s|)/R on R <= |s| <= 2R, 0 beyond.
    """
    if R <= 0.0:
        raise DomainError(f"cutoff scale R must be positive, got {R}")
    s_in = np.asarray(s, dtype=float)
    s = np.atleast_1d(s_in)
    a = np.abs(s)
    sgn = np.sign(s)
    inner = a <= R
    mid = (a > R) & (a < 2.0 * R)
    outer = a >= 2.0 * R

    val = np.empty_like(s)
    d1 = np.empty_like(s)
    d2 = np.empty_like(s)

    val[inner] = 0.5 * s[inner] ** 2
    d1[inner] = s[inner]
    d2[inner] = 1.0

    am = a[mid]
    val[mid] = R**2 / 6.0 - 0.5 * R * am + am**2 - am**3 / (6.0 * R)
    d1[mid] = sgn[mid] * (-0.5 * R + 2.0 * am - am**2 / (2.0 * R))
    d2[mid] = (2.0 * R - am) / R

    ao = a[outer]
    val[outer] = -7.0 * R**2 / 6.0 + 1.5 * R * ao
    d1[outer] = sgn[outer] * 1.5 * R
    d2[outer] = 0.0

    if s_in.ndim == 0:
        return float(val[0]), float(d1[0]), float(d2[0])
    return val, d1, d2


@dataclass(frozen=True)
class EntropySpec:
    """A generating function psi with derivatives and a growth class.

    growth_class is one of "compact", "subquadratic", "subcubic",
    "energy" (psi = s^2/2) and "cutoff_energy" (the three-piece psi_R).
    kinks lists s-locations where psi is not smooth; the adaptive
    quadrature path splits there.
    """

    name: str
    psi: callable
    dpsi: callable
    d2psi: callable
    growth_class: str = "subquadratic"
    kinks: tuple = ()

    @staticmethod
    def energy() -> "EntropySpec":
        return EntropySpec(
            "energy",
            lambda s: 0.5 * np.asarray(s, dtype=float) ** 2,
            lambda s: np.asarray(s, dtype=float),
            lambda s: np.ones_like(np.asarray(s, dtype=float)),
            growth_class="energy",
        )

    @staticmethod
    def cutoff_energy(R: float) -> "EntropySpec":
        return EntropySpec(
            f"cutoff_energy(R={R:g})",
            lambda s: psi_cutoff(R, s)[0],
            lambda s: psi_cutoff(R, s)[1],
            lambda s: psi_cutoff(R, s)[2],
            growth_class="cutoff_energy",
            kinks=(-2.0 * R, -R, R, 2.0 * R),
        )

    @staticmethod
    def signed_square() -> "EntropySpec":
        """psi(s) = s|s|/2, the generator of the special Goursat entropy."""
        return EntropySpec(
            "signed_square",
            lambda s: 0.5 * np.asarray(s, dtype=float) * np.abs(s),
            lambda s: np.abs(np.asarray(s, dtype=float)),
            lambda s: np.sign(np.asarray(s, dtype=float)),
            growth_class="subcubic",
            kinks=(0.0,),
        )

    @staticmethod
    def constant(c: float = 1.0) -> "EntropySpec":
        return EntropySpec(
            f"constant({c:g})",
            lambda s: np.full_like(np.asarray(s, dtype=float), c),
            lambda s: np.zeros_like(np.asarray(s, dtype=float)),
            lambda s: np.zeros_like(np.asarray(s, dtype=float)),
            growth_class="subquadratic",
        )

    @staticmethod
    def compact_bump(center: float = 0.0, width: float = 1.0) -> "EntropySpec":
        """Compactly supported C^2 generator (1 - t^2)^3 on |t| < 1."""

        def _t(s):
            return (np.asarray(s, dtype=float) - center) / width

        def p(s):
            t = _t(s)
            b = 1.0 - t**2
            return np.where(np.abs(t) < 1.0, b**3, 0.0)

        def dp(s):
            t = _t(s)
            b = 1.0 - t**2
            return np.where(np.abs(t) < 1.0, -6.0 * t * b**2 / width, 0.0)

        def d2p(s):
            t = _t(s)
            b = 1.0 - t**2
            return np.where(
                np.abs(t) < 1.0, (24.0 * t**2 * b - 6.0 * b**2) / width**2, 0.0
            )

        return EntropySpec(
            f"compact_bump({center:g},{width:g})",
            p,
            dp,
            d2p,
            growth_class="compact",
            kinks=(center - width, center + width),
        )


@dataclass(frozen=True)
class EntropyPairValue:
    """(eta, q) and the two momentum derivatives of eta at one or many states."""

    eta: object
    q: object
    deta_dm: object
    d2eta_dm2: object


# ---------------------------------------------------------------------------
# quadrature-based entropy pairs (polytropic only)
# ---------------------------------------------------------------------------

@lru_cache(maxsize=32)
def _jacobi_rule(n_nodes: int, lam: float):
    z, w = roots_jacobi(n_nodes, lam, lam)
    return z, w, float(w.sum())


def _require_polytropic(law: PressureLaw):
    if not law.is_polytropic:
        raise DomainError(
            "psi-generated entropy pairs exist in closed form only for the "
            "polytropic law; use the Goursat solver or the built-in energies "
            "for composite laws"
        )


def wave_amplitude(law: PressureLaw, rho):
    """K(rho), the half-width of the kernel support in s around u."""
    return law.k_integral(rho)


def entropy_pair(
    law: PressureLaw,
    spec: EntropySpec,
    rho,
    m,
    n_nodes: int = 64,
    method: str = "gauss",
) -> EntropyPairValue:
    """Evaluate (eta, q, d eta/dm, d^2 eta/dm^2) for a gamma-law gas.

    Vectorized over (rho, m).  method="gauss" uses a fixed Gauss-Jacobi
    rule (exact for polynomial psi); "adaptive" uses adaptive quadrature
    split at the spec's kinks, for high-accuracy scalar oracles.
    """
    _require_polytropic(law)
    lam = law.lam
    theta = law.theta

    rho = np.asarray(rho, dtype=float)
    m = np.asarray(m, dtype=float)
    if np.any(rho < 0.0):
        raise DomainError("density must be nonnegative")
    scalar = rho.ndim == 0 and m.ndim == 0
    rho, m = np.broadcast_arrays(np.atleast_1d(rho), np.atleast_1d(m))
    shape = rho.shape
    rho = rho.ravel()
    m = m.ravel()

    pos = rho > 0.0
    u = np.zeros_like(rho)
    u[pos] = m[pos] / rho[pos]
    K = np.zeros_like(rho)
    K[pos] = wave_amplitude(law, rho[pos])

    eta = np.zeros_like(rho)
    qf = np.zeros_like(rho)
    dm = np.zeros_like(rho)
    d2m = np.zeros_like(rho)

    if method == "gauss":
        z, w, M0 = _jacobi_rule(n_nodes, lam)
        s_nodes = u[pos, None] + K[pos, None] * z[None, :]
        pv = spec.psi(s_nodes)
        eta[pos] = rho[pos] * (pv @ w) / M0
        qf[pos] = (
            rho[pos]
            * (((u[pos, None] + theta * K[pos, None] * z[None, :]) * pv) @ w)
            / M0
        )
        dm[pos] = (spec.dpsi(s_nodes) @ w) / M0
        d2m[pos] = (spec.d2psi(s_nodes) @ w) / (rho[pos] * M0)
    elif method == "adaptive":
        for i in np.nonzero(pos)[0]:
            eta[i], qf[i], dm[i], d2m[i] = _adaptive_pair(
                spec, lam, theta, rho[i], u[i], K[i]
            )
    else:
        raise ValueError(f"unknown quadrature method {method!r}")

    if scalar:
        return EntropyPairValue(float(eta[0]), float(qf[0]), float(dm[0]), float(d2m[0]))
    return EntropyPairValue(
        eta.reshape(shape), qf.reshape(shape), dm.reshape(shape), d2m.reshape(shape)
    )


def _adaptive_pair(spec, lam, theta, rho, u, K):
    # Map psi kinks into z; weight (1 - z^2)^lam stays in the integrand
    # (lam > -1/2 keeps it integrable); adaptive rule handles endpoints.
    pts = sorted(
        float((k - u) / K) for k in spec.kinks if abs((k - u) / K) < 1.0
    )

    def integ(f):
        val, _ = quad(
            f, -1.0, 1.0, points=pts or None, epsabs=1e-13, epsrel=1e-13, limit=400
        )
        return val

    def weight(z):
        return (1.0 - z * z) ** lam

    M0 = integ(weight)
    eta = rho * integ(lambda z: spec.psi(u + K * z) * weight(z)) / M0
    qf = (
        rho
        * integ(lambda z: (u + theta * K * z) * spec.psi(u + K * z) * weight(z))
        / M0
    )
    dm = integ(lambda z: spec.dpsi(u + K * z) * weight(z)) / M0
    d2m = integ(lambda z: spec.d2psi(u + K * z) * weight(z)) / (rho * M0)
    return eta, qf, dm, d2m


# ---------------------------------------------------------------------------
# closed-form energies (any pressure law)
# ---------------------------------------------------------------------------

def mechanical_energy_pair(law: PressureLaw, rho, m) -> EntropyPairValue:
    """eta_E = m^2/(2 rho) + rho e(rho) and its flux and m-derivatives."""
    rho = np.asarray(rho, dtype=float)
    m = np.asarray(m, dtype=float)
    scalar = rho.ndim == 0 and m.ndim == 0
    rho, m = np.broadcast_arrays(np.atleast_1d(rho), np.atleast_1d(m))
    if np.any((rho == 0.0) & (m != 0.0)):
        raise DomainError("vacuum with nonzero momentum has infinite energy")
    if np.any(rho < 0.0):
        raise DomainError("density must be nonnegative")

    pos = rho > 0.0
    eta = np.zeros(rho.shape)
    qf = np.zeros(rho.shape)
    dm = np.zeros(rho.shape)
    d2m = np.zeros(rho.shape)
    rp, mp = rho[pos], m[pos]
    e = law.internal_energy(rp)
    eta[pos] = 0.5 * mp**2 / rp + rp * e
    qf[pos] = 0.5 * mp**3 / rp**2 + mp * law.rho_e_prime(rp)
    dm[pos] = mp / rp
    d2m[pos] = 1.0 / rp

    if scalar:
        return EntropyPairValue(float(eta[0]), float(qf[0]), float(dm[0]), float(d2m[0]))
    return EntropyPairValue(eta, qf, dm, d2m)


def relative_energy(law: PressureLaw, rho, m, rho_inf):
    """m^2/(2 rho) + e*(rho, rho_inf); the natural finiteness functional."""
    rho = np.asarray(rho, dtype=float)
    m = np.asarray(m, dtype=float)
    scalar = rho.ndim == 0 and m.ndim == 0
    rho, m = np.broadcast_arrays(np.atleast_1d(rho), np.atleast_1d(m))
    if np.any((rho == 0.0) & (m != 0.0)):
        raise DomainError("vacuum with nonzero momentum has infinite energy")
    kin = np.zeros(rho.shape)
    pos = rho > 0.0
    kin[pos] = 0.5 * m[pos] ** 2 / rho[pos]
    out = kin + law.relative_internal_energy(rho, rho_inf)
    return float(out[0]) if scalar else out


def high_order_energy(law: PressureLaw, rho, m, rho_inf):
    """Quartic energy m^4/(12 rho^3) + e(rho) m^2 / rho + g(rho).

    Returns (absolute, relative) where the relative version replaces g by
    its Bregman gap about rho_inf.
    """
    rho = np.asarray(rho, dtype=float)
    m = np.asarray(m, dtype=float)
    scalar = rho.ndim == 0 and m.ndim == 0
    rho, m = np.broadcast_arrays(np.atleast_1d(rho), np.atleast_1d(m))
    if np.any((rho == 0.0) & (m != 0.0)):
        raise DomainError("vacuum with nonzero momentum has infinite energy")
    pos = rho > 0.0
    kin = np.zeros(rho.shape)
    kin[pos] = m[pos] ** 4 / (12.0 * rho[pos] ** 3) + law.internal_energy(
        rho[pos]
    ) * m[pos] ** 2 / rho[pos]
    g = law.high_order_potential(rho)
    g_inf = law.high_order_potential(rho_inf)
    # g'(r) = int_0^r g'' dy; recover from the identity g' = (g(r) stays
    # cheap via quadrature only for composite laws) -- use closed form
    # where available, finite difference otherwise.
    gp_inf = _g_prime(law, rho_inf)
    absolute = kin + g
    relative = kin + (g - g_inf - gp_inf * (rho - rho_inf))
    if scalar:
        return float(absolute[0]), float(relative[0])
    return absolute, relative


def _g_prime(law: PressureLaw, rho):
    if law.is_polytropic:
        g, k = law.gamma, law.kappa
        c = 2.0 * k**2 * g / (g - 1.0)
        return c / (2.0 * g - 2.0) * rho ** (2.0 * g - 2.0)
    val, _ = quad(
        lambda y: 2.0 * law.dpressure(y) * law.internal_energy(y) / y,
        0.0,
        rho,
        epsabs=1e-10,
        epsrel=1e-10,
        limit=200,
    )
    return val


def riemann_invariants(law: PressureLaw, rho, m):
    """(w1, w2) = (u - K(rho), u + K(rho)); always w1 <= w2."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0.0):
        raise DomainError("Riemann invariants require rho > 0")
    u = np.asarray(m, dtype=float) / rho
    K = law.k_integral(rho)
    w1 = u - K
    w2 = u + K
    if np.ndim(w1) == 0:
        return float(w1), float(w2)
    return w1, w2
