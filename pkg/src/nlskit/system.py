"""Coupled defocusing Schrodinger system: parameters, state, observables.

The system evolves N complex fields u_mu on R^d (approximated by the periodic
box) under

    i dt u_mu + Lap u_mu - sum_nu beta[mu,nu] |u_nu|^{p+1} |u_mu|^{p-1} u_mu = 0,

with beta[mu,nu] >= 0 symmetric.  Pointwise observables are the density
m = |u|^2 and the current j = Im(conj(u) grad u); the conserved functionals
are the per-component mass ||u_mu||_{L2}^2 and the energy

    E = int sum_mu |grad u_mu|^2 + sum_{mu,nu} beta[mu,nu] |u_mu u_nu|^{p+1}/(p+1).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .grid import GridSpec, ScalarField, PHYSICAL, cube_sup_l2, spectral_gradient


def critical_exponent(d: int) -> float:
    """Energy-critical power: 2 for d = 3, infinite below."""
    return 2.0 if d == 3 else math.inf


@dataclass(frozen=True, eq=False)
class CouplingSpec:
    """Coupling matrix beta, nonlinearity power p, dimension d, component count n.

    Hard requirements: beta nonnegative and symmetric, p > 0, and p >= 1
    whenever any off-diagonal coupling is active (the coupled nonlinearity is
    not locally Lipschitz below p = 1).  Soft admissibility conditions
    (1 <= p < p*(d), p > 2/d, positive diagonal) are recorded and surfaced as
    warnings so out-of-range experiments stay runnable.
    """

    n: int
    beta: np.ndarray
    p: float
    d: int

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.d}")
        if self.n < 1:
            raise ValueError(f"component count must be >= 1, got {self.n}")
        if not (self.p > 0 and math.isfinite(self.p)):
            raise ValueError(f"nonlinearity power must be positive, got {self.p}")
        beta = np.array(self.beta, dtype=float)
        if beta.shape != (self.n, self.n):
            raise ValueError(f"beta must be {self.n}x{self.n}, got shape {beta.shape}")
        if (beta < 0).any():
            raise ValueError("coupling entries must be nonnegative")
        if not np.array_equal(beta, beta.T):
            raise ValueError("coupling matrix must be symmetric")
        if self.coupled_off_diagonal(beta) and self.p < 1:
            raise ValueError(
                "off-diagonal coupling requires p >= 1; "
                "only the fully decoupled system is defined for p < 1")
        beta.setflags(write=False)
        object.__setattr__(self, "beta", beta)
        for msg in self.admissibility_warnings():
            warnings.warn(msg, UserWarning, stacklevel=2)

    @staticmethod
    def coupled_off_diagonal(beta: np.ndarray) -> bool:
        return bool((beta - np.diag(np.diag(beta)) != 0).any())

    @property
    def is_coupled(self) -> bool:
        return self.coupled_off_diagonal(self.beta)

    @property
    def subcritical(self) -> bool:
        return 1.0 <= self.p < critical_exponent(self.d)

    @property
    def scattering_admissible(self) -> bool:
        return self.subcritical and self.p > 2.0 / self.d

    @property
    def diagonal_positive(self) -> bool:
        return bool((np.diag(self.beta) > 0).all())

    def admissibility_warnings(self) -> list[str]:
        out = []
        if not self.diagonal_positive:
            out.append("some self-coupling beta[mu,mu] is zero; "
                       "self-interaction bounds are vacuous for those components")
        if not self.subcritical:
            out.append(f"p = {self.p} is outside the subcritical range "
                       f"[1, {critical_exponent(self.d)}) for d = {self.d}")
        if self.subcritical and not self.scattering_admissible:
            out.append(f"p = {self.p} does not exceed 2/d = {2.0 / self.d}; "
                       "dispersive decay is not guaranteed")
        return out

    def classification(self) -> dict:
        return {
            "subcritical": self.subcritical,
            "scattering_admissible": self.scattering_admissible,
            "diagonal_positive": self.diagonal_positive,
            "coupled": self.is_coupled,
            "warnings": self.admissibility_warnings(),
        }


@dataclass(frozen=True, eq=False)
class SystemState:
    """Time t plus the N component fields (physical representation)."""

    t: float
    fields: tuple[ScalarField, ...]
    coupling: CouplingSpec

    def __post_init__(self):
        fields = tuple(self.fields)
        if len(fields) != self.coupling.n:
            raise ValueError(f"expected {self.coupling.n} fields, got {len(fields)}")
        grid = fields[0].grid
        for f in fields:
            if f.grid != grid:
                raise ValueError("all component fields must share one grid")
            if f.space != PHYSICAL:
                raise ValueError("state fields must be stored in physical space")
        object.__setattr__(self, "fields", fields)

    @property
    def grid(self) -> GridSpec:
        return self.fields[0].grid

    def is_finite(self) -> bool:
        return all(np.isfinite(f.values).all() for f in self.fields)


def state_from_arrays(t: float, arrays, coupling: CouplingSpec, grid: GridSpec) -> SystemState:
    fields = tuple(ScalarField(np.asarray(a, dtype=complex), grid, PHYSICAL) for a in arrays)
    return SystemState(t, fields, coupling)


def _check_index(state: SystemState, mu: int):
    if not 0 <= mu < state.coupling.n:
        raise IndexError(f"component index {mu} out of range [0, {state.coupling.n})")


def density(state: SystemState, mu: int) -> ScalarField:
    """Pointwise density m = |u_mu|^2 (real, nonnegative)."""
    _check_index(state, mu)
    return ScalarField(np.abs(state.fields[mu].values) ** 2, state.grid, PHYSICAL)


def total_density(state: SystemState) -> np.ndarray:
    """sum_mu |u_mu|^2 as a plain array."""
    return sum(np.abs(f.values) ** 2 for f in state.fields)


def current(state: SystemState, mu: int) -> list[ScalarField]:
    """Current j = Im(conj(u) grad u), one real field per axis."""
    _check_index(state, mu)
    u = state.fields[mu]
    grads = spectral_gradient(u)
    conj = np.conj(u.values)
    return [ScalarField(np.imag(conj * g.values), state.grid, PHYSICAL) for g in grads]


def total_current(state: SystemState) -> list[np.ndarray]:
    """sum_mu j_mu per axis, as plain arrays."""
    g = state.grid
    out = [np.zeros(g.shape) for _ in range(g.d)]
    for mu in range(state.coupling.n):
        for a, j in enumerate(current(state, mu)):
            out[a] += j.values
    return out


def mass(state: SystemState, mu: int) -> float:
    """Per-component mass, int |u_mu|^2 dx."""
    _check_index(state, mu)
    g = state.grid
    return g.cell_volume * float(np.sum(np.abs(state.fields[mu].values) ** 2))


def total_mass(state: SystemState) -> float:
    return sum(mass(state, mu) for mu in range(state.coupling.n))


def coupling_density(state: SystemState) -> np.ndarray:
    """P(x) = sum_{mu,nu} beta[mu,nu] |u_mu|^{p+1} |u_nu|^{p+1} (pointwise)."""
    c = state.coupling
    powers = [np.abs(f.values) ** (c.p + 1.0) for f in state.fields]
    out = np.zeros(state.grid.shape)
    for mu in range(c.n):
        for nu in range(c.n):
            b = c.beta[mu, nu]
            if b != 0.0:
                out += b * powers[mu] * powers[nu]
    return out


@dataclass(frozen=True)
class EnergyReport:
    kinetic: float
    potential: float
    total: float


def energy(state: SystemState) -> EnergyReport:
    """Kinetic sum_mu int |grad u_mu|^2 (spectral, by Parseval) plus the
    coupled potential sum_{mu,nu} beta int |u_mu u_nu|^{p+1} / (p+1)."""
    g = state.grid
    kinetic = 0.0
    for f in state.fields:
        c = f.to_spectral().values
        kinetic += g.box_volume * float(np.sum(g.k_squared * np.abs(c) ** 2))
    potential = g.cell_volume * float(np.sum(coupling_density(state))) / (state.coupling.p + 1.0)
    return EnergyReport(kinetic=kinetic, potential=potential, total=kinetic + potential)


@dataclass(frozen=True)
class LqReport:
    q: float
    per_component: tuple[float, ...]
    aggregate: float


def lq_norm(state: SystemState, q: float) -> LqReport:
    """Per-component L^q norms and their sum; q in [2, inf]."""
    if q < 2:
        raise ValueError(f"q must be >= 2, got {q}")
    vals = tuple(f.lq_norm(q) for f in state.fields)
    return LqReport(q=q, per_component=vals, aggregate=float(sum(vals)))


def h1_norm(state: SystemState) -> float:
    """sum_mu ||u_mu||_{H^1}."""
    return float(sum(f.h1_norm() for f in state.fields))


def h1_norms_squared(state: SystemState) -> tuple[float, ...]:
    return tuple(f.h1_norm() ** 2 for f in state.fields)


def sup_cube_mass(state: SystemState) -> float:
    """Largest (sum_mu int_Q |u_mu|^2)^(1/2) over grid-aligned unit cubes."""
    return cube_sup_l2(state.grid, total_density(state))


def boundary_mass_fraction(state: SystemState) -> float:
    """Fraction of the total mass in the outer 10% shell of the box.

    Runs are declared invalid when this exceeds 1e-6: the periodic box then
    no longer emulates free space.
    """
    g = state.grid
    shell = np.zeros(g.shape, dtype=bool)
    for a in range(g.d):
        shell |= np.abs(g.x_mesh[a]) >= 0.9 * g.l
    rho = total_density(state)
    total = float(rho.sum())
    if total == 0.0:
        return 0.0
    return float(rho[shell].sum()) / total


BOUNDARY_MASS_LIMIT = 1e-6
