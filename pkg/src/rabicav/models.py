"""Generators for the four master-equation models of a lossy-cavity Rabi system.

All four models share the resonant atom-cavity Hamiltonian; they differ in
where the jump operators live:

* ``PhenomT0`` / ``PhenomT`` -- photon-number jumps in the bare basis, the
  ``T > 0`` variant with the jump operators projected onto the three-level
  subspace so higher excitation manifolds never couple in.
* ``Microscopic`` -- jumps between dressed states and the joint ground state.
* ``OpenCavity`` -- the dressed-state model extended by up/down transitions
  inside the single-excitation manifold, as appropriate for an open resonator
  bathed in long-wavelength thermal photons.

Rates follow the angular convention (1/s, matching rad/s frequencies).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .core import Basis, DensityMatrix, ValidationError, as_square_matrix

# Exact SI (2019 redefinition) values.
HBAR = 1.054571817e-34  # J s
K_B = 1.380649e-23      # J/K

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class PhysicalParams:
    """Resonant atom-cavity parameters.

    Defaults are the microwave cavity regime used throughout: a 51.099 GHz
    circular-Rydberg transition, peak coupling g = 47*pi*1e3 rad/s, mirrors
    cooled to 0.8 K.
    """

    omega0: float = 2.0 * math.pi * 51.099e9
    g: float = 47.0 * math.pi * 1e3
    temperature: float = 0.8
    hbar: float = HBAR
    kb: float = K_B

    def __post_init__(self):
        if self.omega0 <= 0 or self.g <= 0:
            raise ValidationError("omega0 and g must be positive")
        if self.temperature < 0:
            raise ValidationError("temperature must be non-negative")


def kms_ratio(omega: float, params: PhysicalParams) -> float:
    """Thermal detailed-balance ratio exp(-hbar*omega/(k*T)).

    At ``temperature == 0`` the ratio is 0 by convention (no upward jumps).
    """
    if params.temperature == 0.0:
        return 0.0
    return math.exp(-params.hbar * omega / (params.kb * params.temperature))


def thermal_occupation(omega: float, params: PhysicalParams) -> float:
    """Mean photon number 1/(exp(hbar*omega/kT) - 1) of a thermal mode."""
    if omega <= 0:
        raise ValidationError("omega must be positive")
    if params.temperature == 0.0:
        return 0.0
    return 1.0 / math.expm1(params.hbar * omega / (params.kb * params.temperature))


@dataclass(frozen=True)
class DecayRates:
    """The six decay coefficients of the open-cavity level scheme.

    gamma1, gamma2: dressed-state decay |O+> -> |O0>, |O-> -> |O0>
    gamma_a, gamma_b: the corresponding thermal upward transitions
    gamma3, gamma_c: downward/upward transitions inside the manifold,
    |O+> <-> |O->.
    """

    gamma1: float = 0.0
    gamma2: float = 0.0
    gamma3: float = 0.0
    gamma_a: float = 0.0
    gamma_b: float = 0.0
    gamma_c: float = 0.0

    def __post_init__(self):
        for name, value in self.as_dict().items():
            if value < 0:
                raise ValidationError(f"{name} must be >= 0, got {value}")

    def as_dict(self) -> dict[str, float]:
        return {
            "gamma1": self.gamma1, "gamma2": self.gamma2, "gamma3": self.gamma3,
            "gamma_a": self.gamma_a, "gamma_b": self.gamma_b, "gamma_c": self.gamma_c,
        }

    @property
    def total(self) -> float:
        return (self.gamma1 + self.gamma2 + self.gamma3
                + self.gamma_a + self.gamma_b + self.gamma_c)

    @classmethod
    def simplified(cls, gamma1: float, gamma2: float, gamma3: float,
                   eps: float) -> "DecayRates":
        """Rates with the thermal shortcut gamma_a = eps*gamma1,
        gamma_b = eps*gamma2, gamma_c = gamma3.

        This is a constructor convenience only; all six rates may also be set
        independently.
        """
        return cls(gamma1, gamma2, gamma3, eps * gamma1, eps * gamma2, gamma3)

    @classmethod
    def kms(cls, gamma1: float, gamma2: float, gamma3: float,
            params: PhysicalParams) -> "DecayRates":
        """Rates with the upward coefficients fixed exactly by detailed balance."""
        return cls(
            gamma1, gamma2, gamma3,
            gamma1 * kms_ratio(params.omega0 + params.g, params),
            gamma2 * kms_ratio(params.omega0 - params.g, params),
            gamma3 * kms_ratio(2.0 * params.g, params),
        )


@dataclass(frozen=True)
class PhenomT0:
    """Zero-temperature photon-loss model: single jump a with rate gamma."""

    gamma: float

    def __post_init__(self):
        if self.gamma < 0:
            raise ValidationError("gamma must be >= 0")


@dataclass(frozen=True)
class PhenomT:
    """Finite-temperature photon model with projector-truncated jumps.

    The jump operators are Pi a Pi = |g,0><g,1| (down, rate gamma_down) and
    its adjoint (up, rate gamma_up); no higher Fock level ever enters.
    """

    gamma_down: float
    gamma_up: float

    def __post_init__(self):
        if self.gamma_down < 0 or self.gamma_up < 0:
            raise ValidationError("rates must be >= 0")

    @classmethod
    def from_temperature(cls, gamma_down: float, params: PhysicalParams) -> "PhenomT":
        """Fix gamma_up/gamma_down to the detailed-balance ratio at omega0."""
        return cls(gamma_down, gamma_down * kms_ratio(params.omega0, params))


@dataclass(frozen=True)
class Microscopic:
    """Dressed-state decay model: |O+/-> -> |O0> only (closed cavity)."""

    gamma1: float
    gamma2: float

    def __post_init__(self):
        if self.gamma1 < 0 or self.gamma2 < 0:
            raise ValidationError("rates must be >= 0")


@dataclass(frozen=True)
class OpenCavity:
    """Dressed-state model with intra-manifold noise (open cavity)."""

    rates: DecayRates


ModelKind = Union[PhenomT0, PhenomT, Microscopic, OpenCavity]


def bare_hamiltonian(params: PhysicalParams) -> np.ndarray:
    """Resonant Hamiltonian/hbar in the bare basis |e,0>, |g,1>, |g,0>."""
    w, g = params.omega0, params.g
    return np.array([
        [w / 2, g, 0.0],
        [g, w / 2, 0.0],
        [0.0, 0.0, -w / 2],
    ], dtype=complex)


def dressed_hamiltonian(params: PhysicalParams) -> np.ndarray:
    """Resonant Hamiltonian/hbar in the dressed basis |O+>, |O->, |O0>."""
    w, g = params.omega0, params.g
    return np.diag([w / 2 + g, w / 2 - g, -w / 2]).astype(complex)


def dressed_state_matrix() -> np.ndarray:
    """Unitary whose columns are |O+>, |O->, |O0> in bare coordinates,
    with |O+/-> = (|g,1> +/- |e,0>)/sqrt(2) and |O0> = |g,0>."""
    s = 1.0 / _SQRT2
    return np.array([
        [s, -s, 0.0],
        [s, s, 0.0],
        [0.0, 0.0, 1.0],
    ], dtype=complex)


def dressed_transform(rho: DensityMatrix, target: Basis) -> DensityMatrix:
    """Unitary change of basis between BARE and DRESSED for 3x3 states."""
    if target not in (Basis.BARE, Basis.DRESSED):
        raise ValidationError("target basis must be BARE or DRESSED")
    if rho.basis is target:
        raise ValidationError("state already in the target basis")
    if rho.dim != 3:
        raise ValidationError("dressed_transform expects a 3x3 state")
    u = dressed_state_matrix()
    if target is Basis.DRESSED:
        m = u.conj().T @ rho.matrix @ u
    else:
        m = u @ rho.matrix @ u.conj().T
    return DensityMatrix(m, target, rho.note)


def vec(rho: np.ndarray) -> np.ndarray:
    """Column-stack a 3x3 matrix into a 9-vector."""
    return np.asarray(rho, dtype=complex).reshape(9, order="F")


def unvec(v: np.ndarray) -> np.ndarray:
    return np.asarray(v, dtype=complex).reshape(3, 3, order="F")


def hamiltonian_superop(h: np.ndarray) -> np.ndarray:
    """Superoperator of -i[h, .] acting on column-stacked matrices."""
    h = as_square_matrix(h)
    eye = np.eye(h.shape[0])
    return -1j * (np.kron(eye, h) - np.kron(h.T, eye))


def dissipator_superop(rate: float, jump: np.ndarray) -> np.ndarray:
    """Superoperator of rate*(J rho J+ - {J+J, rho}/2), column-stacked."""
    j = as_square_matrix(jump)
    eye = np.eye(j.shape[0])
    jdj = j.conj().T @ j
    return rate * (np.kron(j.conj(), j)
                   - 0.5 * np.kron(eye, jdj)
                   - 0.5 * np.kron(jdj.T, eye))


@dataclass(frozen=True, eq=False)
class Liouvillian:
    """A 9x9 generator acting on column-stacked 3x3 density matrices."""

    matrix: np.ndarray
    basis: Basis
    kind: ModelKind | None

    def __post_init__(self):
        object.__setattr__(self, "matrix", as_square_matrix(self.matrix, dims=(9,)))

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """Act on a 3x3 matrix, returning d(rho)/dt as a 3x3 matrix."""
        return unvec(self.matrix @ vec(rho))


def _unit(i: int, j: int) -> np.ndarray:
    m = np.zeros((3, 3), dtype=complex)
    m[i, j] = 1.0
    return m


def build_liouvillian(kind: ModelKind, params: PhysicalParams) -> Liouvillian:
    """Assemble the generator for one of the four models.

    Photon-number models live in the BARE basis, dressed-state models in the
    DRESSED basis.  The dressed-state dissipators carry the rate/2 prefactor
    of their defining equations (jump term rate/2, anticommutator rate/4).
    """
    if isinstance(kind, PhenomT0):
        mat = hamiltonian_superop(bare_hamiltonian(params))
        mat += dissipator_superop(kind.gamma, _unit(2, 1))
        return Liouvillian(mat, Basis.BARE, kind)
    if isinstance(kind, PhenomT):
        mat = hamiltonian_superop(bare_hamiltonian(params))
        mat += dissipator_superop(kind.gamma_down, _unit(2, 1))
        mat += dissipator_superop(kind.gamma_up, _unit(1, 2))
        return Liouvillian(mat, Basis.BARE, kind)
    if isinstance(kind, Microscopic):
        mat = hamiltonian_superop(dressed_hamiltonian(params))
        mat += dissipator_superop(kind.gamma1 / 2, _unit(2, 0))
        mat += dissipator_superop(kind.gamma2 / 2, _unit(2, 1))
        return Liouvillian(mat, Basis.DRESSED, kind)
    if isinstance(kind, OpenCavity):
        r = kind.rates
        mat = hamiltonian_superop(dressed_hamiltonian(params))
        mat += dissipator_superop(r.gamma1 / 2, _unit(2, 0))
        mat += dissipator_superop(r.gamma_a / 2, _unit(0, 2))
        mat += dissipator_superop(r.gamma2 / 2, _unit(2, 1))
        mat += dissipator_superop(r.gamma_b / 2, _unit(1, 2))
        mat += dissipator_superop(r.gamma3 / 2, _unit(1, 0))
        mat += dissipator_superop(r.gamma_c / 2, _unit(0, 1))
        return Liouvillian(mat, Basis.DRESSED, kind)
    raise ValidationError(f"unknown model kind {kind!r}")


def ground_state_probability(rho: DensityMatrix) -> float:
    """Probability of finding the atom in |g>, in either 3-level basis."""
    m = rho.matrix
    if rho.basis is Basis.BARE:
        return float(1.0 - m[0, 0].real)
    if rho.basis is Basis.DRESSED:
        # <e,0|rho|e,0> = (r++ + r-- - r+- - r-+)/2
        return float(1.0 - 0.5 * (m[0, 0].real + m[1, 1].real) + m[0, 1].real)
    raise ValidationError("ground_state_probability expects a 3-level state")
