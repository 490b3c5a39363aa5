"""Virial and interaction functionals with their derivative identities.

For a radial weight phi and the bilinear weight psi(x, y) = phi(|x - y|):

    V(t) = sum_mu int phi m_mu dx
    I(t) = sum_{mu,kappa} intint psi m_mu(x) m_kappa(y) dx dy

Along the flow the identities

    dV/dt  = 2 sum_mu int j_mu . grad phi
    d2V/dt2 = sum_mu [ -int m_mu Lap^2 phi + 4 int grad u D2phi grad conj(u) ]
              + (2p/(p+1)) sum_{mu,nu} beta int |u_mu u_nu|^{p+1} Lap phi
    dI/dt  = 4 sum_{mu,kappa} intint j_mu(x) . grad_x psi  m_kappa(y)
    d2I/dt2 >= 2 sum intint Lap_x psi grad_x m_mu . grad_y m_kappa + N
             = -2 sum intint m m Lap^2_x psi + N            (equal forms)

hold, with the nonnegative nonlinear part

    N = (4p/(p+1)) sum_{mu,nu,kappa} beta[mu,nu]
        intint |u_mu(x)|^{p+1} |u_nu(x)|^{p+1} m_kappa(y) Lap_x psi.

Distributional weights are handled by collapsing the delta parts analytically
before discretization (never as grid spikes):

    phi(r) = r:   d = 1: Lap_x psi = 2 delta(x - y)
              d = 2: Lap_x psi = 1/|x-y|
              d = 3: Lap_x psi = 2/|x-y|,  Lap^2_x psi = -8 pi delta(x - y)
                     (the Laplacian of |z| carries a 2, so the bilaplacian is
                     twice the Newtonian -4 pi delta).

The erf-smoothed weight regularizes |x - y| in d = 1:

    phi_eps(r) = r erf(r/eps) + (eps/sqrt(pi)) exp(-(r/eps)^2),

whose second derivative is exactly twice the Gaussian mollifier
delta_eps(z) = exp(-(z/eps)^2) / (eps sqrt(pi)), recovering the delta
collapse as eps -> 0.

Everything is evaluated as convolutions plus inner products: no M^d x M^d
object is ever formed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import erf as _erf

from .grid import (GridSpec, ScalarField, PHYSICAL, RadialKernel,
                   convolve_radial_kernel, convolve_kernel_gradient,
                   spectral_gradient, _convolve_hat, _kernel_hat,
                   _pad_forward, _padded_k_axes)
from .system import (SystemState, coupling_density, total_current,
                     total_density)

ABS_DISTANCE = "absdistance"
SMOOTH_RADIAL = "smoothradial"
ERF_SMOOTHED = "erf"
CONSTANT = "constant"


@dataclass(frozen=True, eq=False)
class MorawetzWeight:
    """Radial weight phi with its derivative data.

    kinds:
      constant       phi = value (kills every derivative term)
      absdistance    phi(r) = r; delta-bearing derivatives handled analytically
      smoothradial   user profile with radial derivatives d1, d2 (and d3, d4
                     when the bilaplacian term is needed)
      erf            erf-smoothed |r| with closed-form derivatives; d = 1 only
    """

    kind: str
    value: float = 1.0
    eps: float = 0.0
    profile: Callable | None = None
    d1: Callable | None = None
    d2: Callable | None = None
    d3: Callable | None = None
    d4: Callable | None = None
    label: str = ""

    @staticmethod
    def constant(value: float = 1.0) -> "MorawetzWeight":
        return MorawetzWeight(CONSTANT, value=value, label=f"constant({value})")

    @staticmethod
    def abs_distance() -> "MorawetzWeight":
        return MorawetzWeight(ABS_DISTANCE, label="|x|")

    @staticmethod
    def quadratic() -> "MorawetzWeight":
        return MorawetzWeight(
            SMOOTH_RADIAL,
            profile=lambda r: r * r,
            d1=lambda r: 2.0 * r,
            d2=lambda r: np.full_like(np.asarray(r, dtype=float), 2.0),
            d3=lambda r: np.zeros_like(np.asarray(r, dtype=float)),
            d4=lambda r: np.zeros_like(np.asarray(r, dtype=float)),
            label="|x|^2",
        )

    @staticmethod
    def smooth_radial(profile, d1, d2, d3=None, d4=None, label="smooth") -> "MorawetzWeight":
        return MorawetzWeight(SMOOTH_RADIAL, profile=profile, d1=d1, d2=d2,
                              d3=d3, d4=d4, label=label)

    @staticmethod
    def erf_smoothed(eps: float) -> "MorawetzWeight":
        """Erf regularization of |r|; its second derivative is exactly the
        Gaussian mollifier 2 exp(-(r/eps)^2)/(eps sqrt(pi)), so eps -> 0
        recovers the |x - y| delta collapse.  Keep eps at or above the grid
        spacing, otherwise the mollifier is unresolved."""
        if eps <= 0:
            raise ValueError("smoothing width must be positive")
        s = math.sqrt(math.pi)

        def profile(r):
            return r * _erf(r / eps) + (eps / s) * np.exp(-((r / eps) ** 2))

        def d1(r):
            return _erf(r / eps)

        def d2(r):
            return (2.0 / (eps * s)) * np.exp(-((r / eps) ** 2))

        def d3(r):
            return (-4.0 * r / (eps ** 3 * s)) * np.exp(-((r / eps) ** 2))

        def d4(r):
            return ((8.0 * r ** 2 / eps ** 5 - 4.0 / eps ** 3) / s) * np.exp(-((r / eps) ** 2))

        return MorawetzWeight(ERF_SMOOTHED, eps=eps, profile=profile,
                              d1=d1, d2=d2, d3=d3, d4=d4, label=f"erf({eps})")

    @property
    def is_smooth(self) -> bool:
        return self.kind in (SMOOTH_RADIAL, ERF_SMOOTHED, CONSTANT)

    def convexity_ok(self, r_max: float = 100.0, samples: int = 2048) -> bool:
        """Sampled check that d2 >= 0 and d1/r >= 0 (radial convexity)."""
        if self.kind in (CONSTANT, ABS_DISTANCE):
            return True
        r = np.linspace(r_max / samples, r_max, samples)
        return bool((np.asarray(self.d2(r)) >= -1e-12).all()
                    and (np.asarray(self.d1(r)) / r >= -1e-12).all())


def _radius(grid: GridSpec, center) -> np.ndarray:
    if center is None:
        center = (0.0,) * grid.d
    center = np.atleast_1d(np.asarray(center, dtype=float))
    if center.shape != (grid.d,):
        raise ValueError(f"center must have {grid.d} components")
    return np.sqrt(sum((x - c) ** 2 for x, c in zip(grid.x_mesh, center)))


def _unit_directions(grid: GridSpec, center) -> list[np.ndarray]:
    if center is None:
        center = (0.0,) * grid.d
    center = np.atleast_1d(np.asarray(center, dtype=float))
    r = _radius(grid, center)
    safe = np.where(r > 0, r, 1.0)
    return [np.where(r > 0, (x - c) / safe, 0.0) for x, c in zip(grid.x_mesh, center)]


def virial_V(state: SystemState, weight: MorawetzWeight, center=None) -> float:
    """V = sum_mu int phi m_mu."""
    g = state.grid
    rho = total_density(state)
    if weight.kind == CONSTANT:
        return weight.value * g.cell_volume * float(rho.sum())
    r = _radius(g, center)
    phi = r if weight.kind == ABS_DISTANCE else np.asarray(weight.profile(r))
    return g.cell_volume * float(np.sum(phi * rho))


def virial_Vdot(state: SystemState, weight: MorawetzWeight, center=None) -> float:
    """dV/dt = 2 sum_mu int j_mu . grad phi."""
    g = state.grid
    if weight.kind == CONSTANT:
        return 0.0
    r = _radius(g, center)
    dphi = np.ones_like(r) if weight.kind == ABS_DISTANCE else np.asarray(weight.d1(r))
    dirs = _unit_directions(g, center)
    j = total_current(state)
    total = sum(np.sum(j[a] * dphi * dirs[a]) for a in range(g.d))
    return 2.0 * g.cell_volume * float(total)


@dataclass(frozen=True)
class VirialSecond:
    bilap_term: float
    hessian_term: float
    nonlinear_term: float
    total: float


def _laplacian_profile(weight: MorawetzWeight, r: np.ndarray, d: int) -> np.ndarray:
    """Lap phi = phi'' + (d-1) phi'/r, with the even-profile limit at r = 0."""
    safe = np.where(r > 0, r, 1.0)
    vals = np.asarray(weight.d2(r)) + (d - 1) * np.asarray(weight.d1(r)) / safe
    at0 = d * float(np.asarray(weight.d2(np.asarray(0.0))))
    return np.where(r > 0, vals, at0)


def _bilaplacian_profile(weight: MorawetzWeight, r: np.ndarray, d: int) -> np.ndarray:
    """Lap^2 phi for an even radial profile:

    phi'''' + 2(d-1) phi'''/r + (d-1)(d-3) (phi''/r^2 - phi'/r^3),
    with limit phi''''(0) [1 + 2(d-1) + (d-1)(d-3)/3] at the origin.
    """
    safe = np.where(r > 0, r, 1.0)
    vals = (np.asarray(weight.d4(r))
            + 2.0 * (d - 1) * np.asarray(weight.d3(r)) / safe
            + (d - 1) * (d - 3) * (np.asarray(weight.d2(r)) / safe ** 2
                                   - np.asarray(weight.d1(r)) / safe ** 3))
    lim = float(np.asarray(weight.d4(np.asarray(0.0)))) * (
        1.0 + 2.0 * (d - 1) + (d - 1) * (d - 3) / 3.0)
    return np.where(r > 0, vals, lim)


def virial_Vddot(state: SystemState, weight: MorawetzWeight, center=None) -> VirialSecond:
    """d2V/dt2 split into bilaplacian, hessian and nonlinear terms.

    Requires a smooth weight; the abs-distance weight carries delta terms in
    dimensions 1 and 3 and is rejected here -- use interaction_report, whose
    delta parts are collapsed analytically.
    """
    if weight.kind == ABS_DISTANCE:
        raise ValueError(
            "the |x| weight has distributional derivatives; second-derivative "
            "identities for it are evaluated through interaction_report's "
            "analytic delta collapse")
    g = state.grid
    c = state.coupling
    if weight.kind == CONSTANT:
        return VirialSecond(0.0, 0.0, 0.0, 0.0)
    if weight.d3 is None or weight.d4 is None:
        raise ValueError("third and fourth radial derivatives are required "
                         "for the bilaplacian term")
    r = _radius(g, center)
    dirs = _unit_directions(g, center)
    d1 = np.asarray(weight.d1(r))
    d2 = np.asarray(weight.d2(r))
    safe = np.where(r > 0, r, 1.0)
    ratio = np.where(r > 0, d1 / safe, float(np.asarray(weight.d2(np.asarray(0.0)))))

    rho = total_density(state)
    bilap = -g.cell_volume * float(np.sum(rho * _bilaplacian_profile(weight, r, g.d)))

    hess = 0.0
    for f in state.fields:
        grads = [gc.values for gc in spectral_gradient(f)]
        radial = sum(dirs[a] * grads[a] for a in range(g.d))
        sq_all = sum(np.abs(gr) ** 2 for gr in grads)
        sq_rad = np.abs(radial) ** 2
        hess += float(np.sum(d2 * sq_rad + ratio * (sq_all - sq_rad)))
    hess *= 4.0 * g.cell_volume

    lap_phi = _laplacian_profile(weight, r, g.d)
    nonlin = (2.0 * c.p / (c.p + 1.0)) * g.cell_volume * float(
        np.sum(coupling_density(state) * lap_phi))
    return VirialSecond(bilap, hess, nonlin, bilap + hess + nonlin)


# ---------------------------------------------------------------------------
# Interaction functional
# ---------------------------------------------------------------------------

@dataclass
class InteractionReport:
    """Single-snapshot interaction quantities; Iddot_fd is filled by the
    trajectory-level inequality check."""

    t: float
    weight: str
    I: float
    Idot: float
    N_term: float
    gradient_term: float
    rhs_lower: float
    rhs_lower_alt: float | None = None
    gradient_gap: float | None = None
    Iddot_fd: float | None = None


_SUPPORTED = ("supported weights for interaction_report: constant (any d), "
              "|x| (d = 1, 2, 3), erf-smoothed (d = 1)")


def gradient_pairing(state: SystemState, route: str = "kernel") -> float:
    """sum_{mu,kappa} intint Lap_x psi grad_x m_mu . grad_y m_kappa for the
    |x-y| weight.

    route = 'kernel':     per-dimension kernel convolution
                          (d = 1 delta collapse, d = 2 and 3 reciprocal kernel)
    route = 'fractional': the equivalent single-time spectral form,
                          d = 1: 2 ||dx rho||^2,  d = 2: 2 pi ||(-Lap)^{1/4} rho||^2.
                          Unverified in d = 3 (not provided).
    """
    g = state.grid
    rho = ScalarField(total_density(state), g, PHYSICAL)
    if route == "fractional":
        if g.d == 1:
            c = rho.to_spectral().values
            return 2.0 * g.box_volume * float(np.sum(g.k_squared * np.abs(c) ** 2))
        if g.d == 2:
            # |k| has a conical point at k = 0; refine the k-lattice 8x by
            # zero padding and average |k| over the origin cell so the
            # quadrature reaches the identity-check tolerance.
            pad = 8
            mp = pad * g.m
            padded = np.zeros((mp,) * g.d)
            padded[(slice(0, g.m),) * g.d] = rho.values.real
            chat = np.fft.fftn(padded) / mp ** g.d
            kax = (math.pi / (pad * g.l)) * np.rint(np.fft.fftfreq(mp) * mp)
            mesh = np.meshgrid(*([kax] * g.d), indexing="ij")
            km = np.sqrt(sum(a * a for a in mesh))
            dk = math.pi / (pad * g.l)
            km[(0,) * g.d] = 0.3825979 * dk  # cell average of |k| over the origin cell
            vol_k = (pad * 2.0 * g.l) ** g.d
            return 2.0 * math.pi * vol_k * float(np.sum(km * np.abs(chat) ** 2))
        raise NotImplementedError("fractional pairing form is only asserted in d = 1, 2")
    if route != "kernel":
        raise ValueError(f"unknown route {route!r}")
    grads = spectral_gradient(rho)
    if g.d == 1:
        return 2.0 * g.cell_volume * float(np.sum(grads[0].values.real ** 2))
    kernel = RadialKernel.reciprocal(transform="analytic" if g.d == 2 else "grid")
    coeff = 1.0 if g.d == 2 else 2.0
    total = 0.0
    for a in range(g.d):
        ga = ScalarField(grads[a].values.real, g, PHYSICAL)
        conv = convolve_radial_kernel(ga, kernel)
        total += g.cell_volume * float(np.sum(ga.values * conv.values))
    return coeff * total


def interaction_report(state: SystemState, weight: MorawetzWeight) -> InteractionReport:
    """I, dI/dt, the nonlinear term and the convexity lower bound for d2I/dt2.

    All double integrals are convolutions plus inner products.  Delta parts
    of the |x-y| weight (Lap psi in d = 1, Lap^2 psi in d = 3) are collapsed
    to single integrals analytically.
    """
    g = state.grid
    c = state.coupling
    vol = g.cell_volume
    rho = total_density(state)
    rho_f = ScalarField(rho, g, PHYSICAL)
    P = coupling_density(state)
    j = total_current(state)
    t = state.t

    if weight.kind == CONSTANT:
        m = vol * float(rho.sum())
        return InteractionReport(t=t, weight=weight.label, I=weight.value * m * m,
                                 Idot=0.0, N_term=0.0, gradient_term=0.0,
                                 rhs_lower=0.0, rhs_lower_alt=0.0)

    if weight.kind == ABS_DISTANCE:
        abs_kernel = RadialKernel.abs_distance()
        rho_hat = _pad_forward(g, rho)  # shared by every rho convolution below
        abs_hat = _kernel_hat(g, abs_kernel)
        conv_abs = _convolve_hat(g, rho_hat, abs_hat)
        I = vol * float(np.sum(rho * conv_abs))
        kax = _padded_k_axes(g)
        Idot = 4.0 * vol * float(sum(
            np.sum(j[a] * _convolve_hat(g, rho_hat, (1j * kax[a]) * abs_hat))
            for a in range(g.d)))
        p = c.p
        if g.d == 1:
            N = (8.0 * p / (p + 1.0)) * vol * float(np.sum(P * rho))
            grad_term = 2.0 * gradient_pairing(state, "kernel")
            return InteractionReport(t=t, weight=weight.label, I=I, Idot=Idot,
                                     N_term=N, gradient_term=grad_term,
                                     rhs_lower=grad_term + N)
        recip = _convolve_hat(g, rho_hat, _kernel_hat(g, RadialKernel.reciprocal()))
        lap_coeff = float(g.d - 1)  # Lap |z| = (d-1)/|z|
        N = (4.0 * p / (p + 1.0)) * lap_coeff * vol * float(np.sum(P * recip))
        pair_kernel = gradient_pairing(state, "kernel")
        grad_term = 2.0 * pair_kernel
        gap = None
        if g.d == 2:
            pair_frac = gradient_pairing(state, "fractional")
            scale = max(abs(pair_kernel), abs(pair_frac), 1e-300)
            gap = abs(pair_kernel - pair_frac) / scale
        alt = None
        if g.d == 3:
            # Lap^2 |z| = Lap (2/|z|) = -8 pi delta, so the delta collapse of
            # -2 intint m m Lap^2 psi is 16 pi int rho^2 (twice the Newtonian
            # constant: the inner Laplacian of |z| already carries the 2).
            alt = 16.0 * math.pi * vol * float(np.sum(rho * rho)) + N
        return InteractionReport(t=t, weight=weight.label, I=I, Idot=Idot,
                                 N_term=N, gradient_term=grad_term,
                                 rhs_lower=grad_term + N, rhs_lower_alt=alt,
                                 gradient_gap=gap)

    if weight.kind == ERF_SMOOTHED:
        if g.d != 1:
            raise ValueError("the erf-smoothed weight is provided for d = 1 only; "
                             + _SUPPORTED)
        eps = weight.eps
        prof_kernel = RadialKernel.from_profile(weight.profile,
                                                origin_value=float(weight.profile(np.asarray(0.0))))
        conv_psi = convolve_radial_kernel(rho_f, prof_kernel)
        I = vol * float(np.sum(rho * conv_psi.values))
        conv_grad = convolve_kernel_gradient(rho_f, prof_kernel)[0]
        Idot = 4.0 * vol * float(np.sum(j[0] * conv_grad.values))
        delta_eps = RadialKernel.gaussian_delta(eps)
        moll_rho = convolve_radial_kernel(rho_f, delta_eps)
        p = c.p
        N = (8.0 * p / (p + 1.0)) * vol * float(np.sum(P * moll_rho.values))
        drho = spectral_gradient(rho_f)[0]
        drho_real = ScalarField(drho.values.real, g, PHYSICAL)
        moll_drho = convolve_radial_kernel(drho_real, delta_eps)
        grad_term = 4.0 * vol * float(np.sum(drho_real.values * moll_drho.values))
        return InteractionReport(t=t, weight=weight.label, I=I, Idot=Idot,
                                 N_term=N, gradient_term=grad_term,
                                 rhs_lower=grad_term + N)

    raise ValueError(f"weight kind {weight.kind!r} with d = {g.d} is not supported "
                     f"by interaction_report; " + _SUPPORTED)


# ---------------------------------------------------------------------------
# Trajectory-level inequality check
# ---------------------------------------------------------------------------

@dataclass
class InequalityCheck:
    times: np.ndarray
    dt: float
    iddot_fd: np.ndarray           # interior snapshots
    rhs_lower: np.ndarray          # interior snapshots
    margins: np.ndarray            # iddot_fd - rhs_lower
    tolerances: np.ndarray
    second_difference_ok: bool
    idot_fd_gap: float             # max |central difference of I - Idot|
    integrated_lhs: float          # Idot(T) - Idot(S)
    integrated_rhs: float          # int rhs_lower dt (trapezoid)
    integrated_tol: float
    integrated_ok: bool
    monotone_ok: bool | None       # only meaningful when rhs_lower >= 0 throughout


def interaction_inequality_check(reports: Sequence[InteractionReport],
                                 fd_constant: float | None = None,
                                 rel_tol: float = 1e-6) -> InequalityCheck:
    """Second-difference form and time-integrated form of the convexity bound.

    Requires >= 3 reports at uniform snapshot spacing.  Tolerances combine a
    relative floor with a finite-difference error budget C dt^2; C comes from
    the supplied calibration constant or, for windows of >= 5 snapshots, from
    a fourth-difference estimate of d4I/dt4.
    """
    if len(reports) < 3:
        raise ValueError("need at least 3 consecutive snapshots")
    ts = np.array([r.t for r in reports])
    dts = np.diff(ts)
    dt = float(dts[0])
    if dt <= 0 or np.abs(dts - dt).max() > 1e-9 * max(dt, 1.0):
        raise ValueError("snapshots must be uniformly spaced in time")
    I = np.array([r.I for r in reports])
    idots = np.array([r.Idot for r in reports])
    rhs = np.array([r.rhs_lower for r in reports])

    iddot_fd = (I[2:] - 2.0 * I[1:-1] + I[:-2]) / dt ** 2
    for r, v in zip(reports[1:-1], iddot_fd):
        r.Iddot_fd = float(v)

    fd_budget = np.zeros_like(iddot_fd)
    if fd_constant is not None:
        fd_budget += fd_constant * dt ** 2
    if len(I) >= 5:
        d4 = np.abs(I[4:] - 4 * I[3:-1] + 6 * I[2:-2] - 4 * I[1:-3] + I[:-4]) / dt ** 4
        est = 2.0 * float(d4.max()) / 12.0 * dt ** 2
        fd_budget = np.maximum(fd_budget, est)
    tol = np.maximum(rel_tol * np.abs(I[1:-1]), fd_budget)

    margins = iddot_fd - rhs[1:-1]
    ok2 = bool((margins >= -tol).all())

    idot_cd = (I[2:] - I[:-2]) / (2.0 * dt)
    idot_gap = float(np.abs(idot_cd - idots[1:-1]).max())

    lhs_int = float(idots[-1] - idots[0])
    rhs_int = float(np.trapezoid(rhs, ts))
    tol_int = float(tol.max() * (ts[-1] - ts[0]) + rel_tol * np.abs(I).max())
    ok_int = lhs_int >= rhs_int - tol_int

    mono = None
    if (rhs >= 0).all():
        mono = bool(idots[-1] >= idots[0] - tol_int)

    return InequalityCheck(times=ts, dt=dt, iddot_fd=iddot_fd, rhs_lower=rhs[1:-1],
                           margins=margins, tolerances=tol,
                           second_difference_ok=ok2, idot_fd_gap=idot_gap,
                           integrated_lhs=lhs_int, integrated_rhs=rhs_int,
                           integrated_tol=tol_int, integrated_ok=ok_int,
                           monotone_ok=mono)


# ---------------------------------------------------------------------------
# Space-time accumulators
# ---------------------------------------------------------------------------

class SpacetimeAccumulators:
    """Trapezoid-in-time accumulation of the dimension-specific space-time
    integrands whose finiteness characterizes dispersive runs.

    d = 1: 'power_2p4'        sum_mu beta[mu,mu] int |u_mu|^{2p+4}
           'grad_density_sq'  || dx sum_mu m_mu ||^2
    d = 2: 'recip_self'       sum_mu beta[mu,mu] intint |u_mu(x)|^{2p+2} m_mu(y)/|x-y|
           'half_deriv_sq'    || (-Lap)^{1/4} sum_mu m_mu ||^2
    d = 3: 'l4'               sum_mu int |u_mu|^4
           'recip_self'       as in d = 2

    Attach update() to the evolution sink; running totals converge (window
    increments decay) on scattering-admissible runs.
    """

    def __init__(self, coupling):
        self.coupling = coupling
        self.names = {1: ("power_2p4", "grad_density_sq"),
                      2: ("recip_self", "half_deriv_sq"),
                      3: ("l4", "recip_self")}[coupling.d]
        self.totals = {name: 0.0 for name in self.names}
        self.history: list[tuple[float, dict[str, float]]] = []

    def _integrands(self, state: SystemState) -> dict[str, float]:
        g = state.grid
        c = state.coupling
        vol = g.cell_volume
        out: dict[str, float] = {}
        if g.d == 1:
            p24 = 0.0
            for mu, f in enumerate(state.fields):
                b = c.beta[mu, mu]
                if b != 0.0:
                    p24 += b * vol * float(np.sum(np.abs(f.values) ** (2 * c.p + 4)))
            out["power_2p4"] = p24
            rho_f = ScalarField(total_density(state), g, PHYSICAL)
            drho = spectral_gradient(rho_f)[0].values.real
            out["grad_density_sq"] = vol * float(np.sum(drho ** 2))
            return out
        if g.d == 2:
            out["recip_self"] = self._recip_self(state)
            chat = ScalarField(total_density(state), g, PHYSICAL).to_spectral().values
            out["half_deriv_sq"] = g.box_volume * float(
                np.sum(g.k_modulus * np.abs(chat) ** 2))
            return out
        out["l4"] = sum(vol * float(np.sum(np.abs(f.values) ** 4)) for f in state.fields)
        out["recip_self"] = self._recip_self(state)
        return out

    def _recip_self(self, state: SystemState) -> float:
        g = state.grid
        c = state.coupling
        vol = g.cell_volume
        total = 0.0
        for mu, f in enumerate(state.fields):
            b = c.beta[mu, mu]
            if b == 0.0:
                continue
            m = np.abs(f.values) ** 2
            conv = convolve_radial_kernel(ScalarField(m, g, PHYSICAL),
                                          RadialKernel.reciprocal())
            total += b * vol * float(np.sum(np.abs(f.values) ** (2 * c.p + 2) * conv.values))
        return total

    def update(self, state: SystemState):
        vals = self._integrands(state)
        if self.history:
            t_prev, prev = self.history[-1]
            w = 0.5 * (state.t - t_prev)
            for name in self.names:
                self.totals[name] += w * (prev[name] + vals[name])
        self.history.append((state.t, vals))

    def increment_over(self, t0: float, t1: float) -> dict[str, float]:
        """Trapezoid contribution of the window [t0, t1] from the history."""
        out = {name: 0.0 for name in self.names}
        for (ta, va), (tb, vb) in zip(self.history, self.history[1:]):
            lo, hi = max(ta, t0), min(tb, t1)
            if hi <= lo:
                continue
            for name in self.names:
                # linear interpolant of the integrand on [ta, tb]
                fa = va[name] + (vb[name] - va[name]) * (lo - ta) / (tb - ta)
                fb = va[name] + (vb[name] - va[name]) * (hi - ta) / (tb - ta)
                out[name] += 0.5 * (hi - lo) * (fa + fb)
        return out

    def tail_fraction(self, name: str, window: float) -> float:
        """Fraction of the total accumulated over the final time window."""
        if not self.history or self.totals[name] == 0.0:
            return 0.0
        t_end = self.history[-1][0]
        inc = self.increment_over(t_end - window, t_end)[name]
        return inc / self.totals[name]
