"""Analytic solutions of the four models and the exponential-decay fit curves.

The open-cavity model is solved through its damping basis: the generator's
nine eigenoperators are known in closed form, the initial state |e,0><e,0|
decomposes over five of them, and the evolution is a plain sum of decaying
exponentials.  Degenerate parameter combinations (vanishing eigenvalue gap or
vanishing decomposition denominators) have removable singularities that the
formulas do not resolve; those inputs are routed to a numeric 9x9
eigen-propagation fallback and the result is tagged ``"fallback"``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import Basis, DensityMatrix, ValidationError
from .evolve import CavityGeometry, SQRT_PI
from .models import (
    DecayRates, OpenCavity, PhysicalParams, build_liouvillian,
    dressed_hamiltonian, unvec, vec,
)

_DRESSED_INITIAL = np.array([
    [0.5, -0.5, 0.0],
    [-0.5, 0.5, 0.0],
    [0.0, 0.0, 0.0],
], dtype=complex)


def initial_excited_state(basis: Basis) -> DensityMatrix:
    """|e,0><e,0| in the requested 3-level basis."""
    if basis is Basis.BARE:
        return DensityMatrix(np.diag([1.0, 0.0, 0.0]).astype(complex), basis)
    if basis is Basis.DRESSED:
        return DensityMatrix(_DRESSED_INITIAL.copy(), basis)
    raise ValidationError("initial state defined for 3-level bases only")


# ---------------------------------------------------------------------------
# Photon-loss model at T = 0
# ---------------------------------------------------------------------------

def _sinhc(z: complex) -> complex:
    """sinh(z)/z, stable near z = 0."""
    if abs(z) < 1e-6:
        z2 = z * z
        return 1.0 + z2 / 6.0 + z2 * z2 / 120.0
    return cmath.sinh(z) / z


def phenom_T0_rho(g: float, gamma: float, t: float) -> DensityMatrix:
    """State of the T = 0 photon-loss model started from |e,0><e,0|.

    A single complex expression covers both branches: under strong coupling
    (16 g^2 > gamma^2) the square root is imaginary and the populations
    oscillate; otherwise the evolution is overdamped and the returned state is
    tagged ``"hyperbolic"``.
    """
    if g <= 0 or gamma < 0 or t < 0:
        raise ValidationError("need g > 0, gamma >= 0, t >= 0")
    d2 = gamma * gamma - 16.0 * g * g
    if d2 == 0.0:
        raise ValidationError("critically damped point gamma = 4g is not supported")
    delta = cmath.sqrt(complex(d2))
    x = delta * t / 2.0
    decay = math.exp(-gamma * t / 2.0)
    # decay * cosh(x) and decay * sinh(x)/delta; the exponent combinations
    # never overflow (delta < gamma on the hyperbolic branch).
    ep = cmath.exp(x - gamma * t / 2.0)
    em = cmath.exp(-x - gamma * t / 2.0)
    dch = 0.5 * (ep + em)
    if abs(x) < 1e-4:
        dsh = decay * (t / 2.0) * _sinhc(x)
    else:
        dsh = 0.5 * (ep - em) / delta

    gg = g * g
    r11 = -8.0 * gg / d2 * decay + gamma * dsh + (gamma * gamma - 8.0 * gg) / d2 * dch
    r22 = 8.0 * gg / d2 * (dch - decay)
    r33 = 1.0 + (16.0 * gg / d2 * decay
                 - gamma ** 3 / d2 * dsh
                 - gamma * gamma / d2 * dch
                 + 16.0 * gg * gamma / d2 * dsh)
    r12 = 1j * (-2.0 * g * gamma / d2 * decay + 2.0 * g * dsh
                + 2.0 * gamma * g / d2 * dch)

    m = np.zeros((3, 3), dtype=complex)
    m[0, 0] = r11.real
    m[1, 1] = r22.real
    m[2, 2] = r33.real
    m[0, 1] = 1j * r12.imag
    m[1, 0] = -m[0, 1]
    note = "hyperbolic" if d2 > 0 else None
    return DensityMatrix(m, Basis.BARE, note).validate()


def phenom_T0_probs(g: float, gamma: float, t: float) -> tuple[float, float, float]:
    """Populations (p_e0, p_g1, p_g0) of the T = 0 photon-loss model."""
    rho = phenom_T0_rho(g, gamma, t).matrix
    return (float(rho[0, 0].real), float(rho[1, 1].real), float(rho[2, 2].real))


# ---------------------------------------------------------------------------
# Dressed-state decay model (closed cavity)
# ---------------------------------------------------------------------------

def microscopic_rho(g: float, gamma1: float, gamma2: float, t: float) -> DensityMatrix:
    """Dressed-basis state of the closed-cavity dressed-decay model."""
    if gamma1 < 0 or gamma2 < 0 or t < 0:
        raise ValidationError("rates and t must be >= 0")
    e1 = math.exp(-gamma1 * t / 2.0)
    e2 = math.exp(-gamma2 * t / 2.0)
    coh = -0.5 * math.exp(-(gamma1 + gamma2) * t / 4.0)
    m = np.zeros((3, 3), dtype=complex)
    m[0, 0] = 0.5 * e1
    m[1, 1] = 0.5 * e2
    m[2, 2] = 1.0 - 0.5 * e1 - 0.5 * e2
    m[0, 1] = coh * cmath.exp(-2j * g * t)
    m[1, 0] = coh * cmath.exp(2j * g * t)
    return DensityMatrix(m, Basis.DRESSED).validate()


def microscopic_pg(g: float, gamma1: float, gamma2: float, t) -> float | np.ndarray:
    """Ground-state probability of the dressed-decay model.

    Symmetric under gamma1 <-> gamma2; with one rate zero it is trapped at
    the asymptote 3/4 instead of reaching 1.
    """
    if gamma1 < 0 or gamma2 < 0:
        raise ValidationError("rates must be >= 0")
    t = np.asarray(t, dtype=float) if np.ndim(t) else float(t)
    return (1.0
            - 0.25 * np.exp(-gamma1 * np.multiply(t, 0.5))
            - 0.25 * np.exp(-gamma2 * np.multiply(t, 0.5))
            - 0.5 * np.exp(-(gamma1 + gamma2) * np.multiply(t, 0.25)) * np.cos(2.0 * g * t))


# ---------------------------------------------------------------------------
# Open-cavity damping basis
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DampingBasis:
    """The nine eigenoperators and eigenvalues of the open-cavity generator.

    ``components`` holds the rows (x_i, y_i, z_i), i = 1..3, of the
    population-sector eigenoperators rho_i = x_i|O+><O+| + y_i|O-><O-| +
    z_i|O0><O0| in the normalization fixed by the closed-form coefficient
    expressions.  ``s_value`` is the eigenvalue gap parameter; when it is
    smaller than 1e-12 times the total rate the basis is flagged degenerate
    and callers must use the numeric fallback.
    """

    eigenvalues: np.ndarray       # shape (9,), complex
    operators: list[np.ndarray]   # nine 3x3 dressed-basis matrices
    components: np.ndarray        # shape (3, 3): rows (x_i, y_i, z_i)
    s_value: complex
    degenerate: bool


def damping_basis(rates: DecayRates, params: PhysicalParams | None = None) -> DampingBasis:
    """Closed-form spectral decomposition of the open-cavity generator.

    Off-diagonal eigenvalues carry the coupling-dependent imaginary parts
    only when ``params`` is supplied.
    """
    g1, g2, g3 = rates.gamma1, rates.gamma2, rates.gamma3
    ga, gb, gc = rates.gamma_a, rates.gamma_b, rates.gamma_c
    total = rates.total
    s2 = (g1 - g2 + g3 - ga - gb + gc) ** 2 + 4.0 * (g1 - g2) * (ga - gc)
    s = cmath.sqrt(s2)
    if s.imag == 0.0:
        s = s.real
    degenerate = abs(s) <= 1e-12 * total

    lam = np.zeros(9, dtype=complex)
    lam[1] = -(total + s) / 4.0
    lam[2] = -(total - s) / 4.0
    components = np.array([
        [gb * gc + ga * (g2 + gc),
         g3 * ga + gb * (g1 + g3),
         g2 * g3 + g1 * (g2 + gc)],
        [(g1 - g3) * (gc - ga) - (g1 + g3) * (g1 - g2 + g3 - gb + s),
         (g1 + g3) * (g3 - gb) + g3 * (g2 - ga + gc + s) - g1 * gb,
         -2.0 * g2 * g3 + g1 * (g1 - g2 + g3 + ga + gb - gc + s)],
        [(g1 - g3) * (gc - ga) - (g1 + g3) * (g1 - g2 + g3 - gb - s),
         (g1 + g3) * (g3 - gb) + g3 * (g2 - ga + gc - s) - g1 * gb,
         -2.0 * g2 * g3 + g1 * (g1 - g2 + g3 + ga + gb - gc - s)],
    ])

    decay4 = (g1 + g2 + g3 + gc) / 4.0
    decay5 = (g1 + g3 + ga + gb) / 4.0
    decay6 = (g2 + ga + gb + gc) / 4.0
    if params is not None:
        e = np.diag(dressed_hamiltonian(params)).real
        w4, w5, w6 = e[0] - e[1], e[0] - e[2], e[1] - e[2]
    else:
        w4 = w5 = w6 = 0.0
    lam[3] = -1j * w4 - decay4
    lam[4] = -1j * w5 - decay5
    lam[5] = -1j * w6 - decay6
    lam[6] = np.conj(lam[3])
    lam[7] = np.conj(lam[4])
    lam[8] = np.conj(lam[5])

    def unit(i, j):
        m = np.zeros((3, 3), dtype=complex)
        m[i, j] = 1.0
        return m

    operators = [np.diag(components[i]).astype(complex) for i in range(3)]
    operators += [unit(0, 1), unit(0, 2), unit(1, 2), unit(1, 0), unit(2, 0), unit(2, 1)]
    return DampingBasis(lam, operators, components, s, degenerate)


@dataclass(frozen=True)
class InitialDecomposition:
    """Coefficients of |e,0><e,0| over the damping-basis eigenoperators."""

    a1: float
    a2: float
    a3: float
    a4: float = -0.5
    a7: float = -0.5


class DegenerateModelError(ValidationError):
    """Closed-form denominators vanish; use the numeric fallback."""


def _check_simplified(rates: DecayRates, eps: float):
    if eps < 0:
        raise ValidationError("eps must be >= 0")
    scale = max(rates.total, 1e-300)
    for name, got, want in (("gamma_a", rates.gamma_a, eps * rates.gamma1),
                            ("gamma_b", rates.gamma_b, eps * rates.gamma2),
                            ("gamma_c", rates.gamma_c, rates.gamma3)):
        if abs(got - want) > 1e-9 * scale:
            raise ValidationError(
                f"{name} = {got} violates the thermal simplification (expected {want})")


def initial_decomposition(rates: DecayRates, eps: float) -> InitialDecomposition:
    """Decomposition coefficients A_i, valid under the thermal simplification.

    Raises :class:`DegenerateModelError` when the gap parameter or one of the
    denominators vanishes; the singularities are removable but unresolved, so
    callers must fall back to numeric propagation.
    """
    _check_simplified(rates, eps)
    g1, g2, g3 = rates.gamma1, rates.gamma2, rates.gamma3
    basis = damping_basis(rates)
    s = basis.s_value
    d = g2 * g3 + g1 * (g2 + g3)
    scale = max(rates.total, 1e-300)
    if basis.degenerate:
        raise DegenerateModelError("eigenvalue gap S vanishes")
    if abs(eps * g1 - g3) <= 1e-12 * scale:
        raise DegenerateModelError("eps*gamma1 - gamma3 vanishes")
    if abs(d) <= 1e-12 * scale * scale:
        raise DegenerateModelError("stationary-sector normalization vanishes")
    if s.imag != 0:
        raise DegenerateModelError("complex eigenvalue gap outside the simplified family")
    s = s.real
    n = (g1 * g1 * (1.0 + eps) - g1 * g2 * (1.0 + 3.0 * eps)
         + 2.0 * g1 * g3 * (1.0 - eps) + 2.0 * g3 * (2.0 * g3 - g2 * eps))
    denom = (2.0 * eps + 1.0) * 4.0 * s * d * (eps * g1 - g3)
    a1 = 1.0 / ((2.0 * eps + 1.0) * d)
    a2 = 0.5 * (n - s * (g1 + 2.0 * g3)) / denom
    a3 = -0.5 * (n + s * (g1 + 2.0 * g3)) / denom
    return InitialDecomposition(a1, a2, a3)


def _phase_coupling(params: PhysicalParams, geometry: CavityGeometry | None) -> float:
    if geometry is None:
        return params.g
    return params.g * SQRT_PI * geometry.waist / geometry.diameter


def _fallback_rho(rates: DecayRates, params: PhysicalParams, t: float,
                  geometry: CavityGeometry | None) -> DensityMatrix:
    """Numeric eigen-propagation of the 9x9 generator (degenerate inputs).

    For the Gaussian profile the coupling enters the generator only through
    the off-diagonal phases, so propagating with the effective coupling
    reproduces the profile-averaged state.
    """
    from dataclasses import replace
    p = params if geometry is None else replace(params, g=_phase_coupling(params, geometry))
    liou = build_liouvillian(OpenCavity(rates), p)
    lam, vmat = np.linalg.eig(liou.matrix)
    v0 = vec(initial_excited_state(Basis.DRESSED).matrix)
    w = np.linalg.solve(vmat, v0)
    m = unvec(vmat @ (np.exp(lam * t) * w))
    m = 0.5 * (m + m.conj().T)
    return DensityMatrix(m, Basis.DRESSED, "fallback")


def opencavity_rho(rates: DecayRates, eps: float, params: PhysicalParams,
                   t: float, geometry: CavityGeometry | None = None) -> DensityMatrix:
    """Open-cavity state at time t, started from |e,0><e,0| (dressed basis).

    ``geometry`` switches the coupling phase to the Gaussian-profile
    effective value; the decay exponents are unaffected.  Degenerate inputs
    return the numeric fallback, tagged ``"fallback"``.
    """
    if t < 0:
        raise ValidationError("t must be >= 0")
    _check_simplified(rates, eps)
    try:
        coeffs = initial_decomposition(rates, eps)
    except DegenerateModelError:
        return _fallback_rho(rates, params, t, geometry)
    basis = damping_basis(rates)
    g_phase = _phase_coupling(params, geometry)
    lam2, lam3 = basis.eigenvalues[1].real, basis.eigenvalues[2].real
    decay4 = (rates.gamma1 + rates.gamma2 + rates.gamma3 + rates.gamma_c) / 4.0
    m = (coeffs.a1 * basis.operators[0]
         + coeffs.a2 * math.exp(lam2 * t) * basis.operators[1]
         + coeffs.a3 * math.exp(lam3 * t) * basis.operators[2])
    coh = -0.5 * math.exp(-decay4 * t)
    m = m.astype(complex)
    m[0, 1] = coh * cmath.exp(-2j * g_phase * t)
    m[1, 0] = coh * cmath.exp(2j * g_phase * t)
    return DensityMatrix(m, Basis.DRESSED).validate()


def opencavity_pg(rates: DecayRates, eps: float, params: PhysicalParams,
                  t, geometry: CavityGeometry | None = None):
    """Ground-state probability of the open-cavity model.

    Three-exponential closed form with asymptote (1+eps)/(1+2*eps); inputs
    with a vanishing eigenvalue gap go through the numeric fallback.
    """
    _check_simplified(rates, eps)
    basis = damping_basis(rates)
    scalar = np.ndim(t) == 0
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(ts < 0):
        raise ValidationError("t must be >= 0")
    if basis.degenerate:
        from .models import ground_state_probability
        out = np.array([ground_state_probability(_fallback_rho(rates, params, tv, geometry))
                        for tv in ts])
        return float(out[0]) if scalar else out
    g1, g2, g3 = rates.gamma1, rates.gamma2, rates.gamma3
    s = basis.s_value.real
    g_phase = _phase_coupling(params, geometry)
    kp = (g1 + g2 + 2.0 * g3 + eps * (g1 + g2) + s) / 4.0
    km = (g1 + g2 + 2.0 * g3 + eps * (g1 + g2) - s) / 4.0
    cp = (2.0 * g3 - eps * (g1 + g2) - s) / (4.0 * s * (2.0 * eps + 1.0))
    cm = (2.0 * g3 - eps * (g1 + g2) + s) / (4.0 * s * (2.0 * eps + 1.0))
    gamma4 = (g1 + g2 + 2.0 * g3) / 4.0
    out = ((1.0 + eps) / (1.0 + 2.0 * eps)
           + cp * np.exp(-kp * ts) - cm * np.exp(-km * ts)
           - 0.5 * np.exp(-gamma4 * ts) * np.cos(2.0 * g_phase * ts))
    return float(out[0]) if scalar else out


def opencavity_pg_asymptote(eps: float) -> float:
    return (1.0 + eps) / (1.0 + 2.0 * eps)


def energy_mean(rates: DecayRates, eps: float, params: PhysicalParams, t):
    """Mean confined energy Tr(Omega rho(t)) in angular-frequency units.

    With gamma1 = gamma2 the curve is independent of gamma3; degenerate
    inputs are evaluated as a direct trace against the fallback state.
    """
    _check_simplified(rates, eps)
    basis = damping_basis(rates)
    scalar = np.ndim(t) == 0
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    if basis.degenerate:
        h = np.diag(dressed_hamiltonian(params)).real
        out = np.array([float(np.real(np.trace(np.diag(h) @ _fallback_rho(rates, params, tv, None).matrix)))
                        for tv in ts])
        return float(out[0]) if scalar else out
    g1, g2, g3 = rates.gamma1, rates.gamma2, rates.gamma3
    s = basis.s_value.real
    w0, g = params.omega0, params.g
    kp = (g1 + g2 + 2.0 * g3 + eps * (g1 + g2) + s) / 4.0
    km = (g1 + g2 + 2.0 * g3 + eps * (g1 + g2) - s) / 4.0
    base = g1 * eps * (w0 + 2.0 * g) + g2 * eps * (w0 - 2.0 * g) + g * (g1 - g2) - 2.0 * w0 * g3
    cp = (base + s * w0) / (2.0 * s * (2.0 * eps + 1.0))
    cm = (base - s * w0) / (2.0 * s * (2.0 * eps + 1.0))
    out = (0.5 * w0 * (2.0 * eps - 1.0) / (2.0 * eps + 1.0)
           + cp * np.exp(-kp * ts) - cm * np.exp(-km * ts))
    return float(out[0]) if scalar else out


def energy_mean_asymptote(eps: float, params: PhysicalParams) -> float:
    return 0.5 * params.omega0 * (2.0 * eps - 1.0) / (2.0 * eps + 1.0)


# ---------------------------------------------------------------------------
# Exponentially damped Rabi fit curves with a thermal photon distribution
# ---------------------------------------------------------------------------

class RabiFitVariant(Enum):
    """Time axis and damping convention of the damped-Rabi fit curve.

    EFFECTIVE_TIME -- damping gamma*t_eff against the effective time axis
    TRUE_TIME      -- damping gamma*t, oscillation at the effective coupling
    RESCALED       -- effective axis with the damping rescaled by d/(sqrt(pi) w)
    """

    EFFECTIVE_TIME = "effective"
    TRUE_TIME = "true"
    RESCALED = "rescaled"


def thermal_weights(nbar: float, tail: float = 1e-9) -> np.ndarray:
    """Bose-Einstein photon-number weights, truncated and renormalized.

    Truncation keeps cumulative weight >= 1 - ``tail``; renormalizing keeps
    the fit-curve asymptote at exactly 1/2.
    """
    if nbar < 0:
        raise ValidationError("nbar must be >= 0")
    if nbar == 0.0:
        return np.array([1.0])
    ratio = nbar / (1.0 + nbar)
    n_max = max(0, math.ceil(math.log(tail) / math.log(ratio)) - 1)
    n = np.arange(n_max + 1)
    w = ratio ** n / (1.0 + nbar)
    return w / w.sum()


def damped_rabi_fit(variant: RabiFitVariant, gamma: float, params: PhysicalParams,
                    nbar: float, geom: CavityGeometry, t):
    """Damped-Rabi fitting curve 1 - (1/2) sum_n P(n) (1 + e^{-k t} cos(2 g_n t)).

    For EFFECTIVE_TIME and RESCALED the argument ``t`` is the effective time;
    for TRUE_TIME it is the true time.  The asymptote is exactly 1/2.
    """
    if gamma < 0:
        raise ValidationError("gamma must be >= 0")
    w = thermal_weights(nbar)
    n = np.arange(len(w))
    factor = SQRT_PI * geom.waist / geom.diameter
    ts = np.asarray(t, dtype=float)
    scalar = ts.ndim == 0
    ts = np.atleast_1d(ts)
    if variant is RabiFitVariant.EFFECTIVE_TIME:
        damp, g_osc = gamma, params.g
    elif variant is RabiFitVariant.TRUE_TIME:
        damp, g_osc = gamma, params.g * factor
    elif variant is RabiFitVariant.RESCALED:
        damp, g_osc = gamma / factor, params.g
    else:
        raise ValidationError(f"unknown variant {variant!r}")
    phases = 2.0 * g_osc * np.sqrt(n + 1.0)[:, None] * ts[None, :]
    series = (w[:, None] * (1.0 + np.exp(-damp * ts)[None, :] * np.cos(phases))).sum(axis=0)
    out = 1.0 - 0.5 * series
    return float(out[0]) if scalar else out
