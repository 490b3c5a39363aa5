"""Periodic spectral grid, Fourier transforms, and free-space convolutions.

Conventions
-----------
The computational box is ``[-L, L)^d`` with ``M`` points per axis and
spacing ``h = 2L/M``.  Grid points are ``x_m = -L + m h`` and the discrete
wavenumbers are ``k_j = (pi/L) j`` for integers ``j in [-M/2, M/2)``
(FFT ordering).

The forward transform carries the ``1/M^d`` factor and the half-box phase
correction, so the coefficient ``c_k`` of a field ``f`` satisfies

    f(x) = sum_k c_k exp(i k.x),        c_0 = mean(f),

and Parseval reads ``h^d sum_m |f_m|^2 = (2L)^d sum_k |c_k|^2``.

Free-space convolutions (used for the bilinear interaction weights) zero-pad
the box by a factor of two per axis and multiply by the transform of the
kernel restricted to the doubled box, so periodic images cannot contaminate
results for data supported well inside the original box.  Singular kernels
are truncated: the value assigned to the ``r = 0`` cell is the exact average
of the kernel over one grid cell (closed form per dimension).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Callable

import numpy as np

PHYSICAL = "physical"
SPECTRAL = "spectral"

# Cell averages over the unit cell [-1/2, 1/2)^d (scaled by h at use site):
#   int 1/r over the centered unit square  = 4 ln(1 + sqrt 2)
#   int 1/r over the centered unit cube    = 3 ln(2 + sqrt 3) - pi/2
#   mean of r over the centered unit square/cube (numerically to 8 digits)
_RECIP_CELL_AVG = {2: 4.0 * math.log(1.0 + math.sqrt(2.0)),
                   3: 3.0 * math.log(2.0 + math.sqrt(3.0)) - math.pi / 2.0}
_ABS_CELL_AVG = {1: 0.25,
                 2: (math.sqrt(2.0) + math.log(1.0 + math.sqrt(2.0))) / 6.0,
                 3: 0.48029598}


class GridUsageError(ValueError):
    """Raised when an operation is applied to a field in the wrong representation."""


@dataclass(frozen=True)
class GridSpec:
    """Periodic box [-L, L)^d sampled with M points per axis.

    Parameters
    ----------
    d : spatial dimension, 1, 2 or 3.
    m : points per axis; must be even and >= 8.
    l : box half-width L > 0.
    """

    d: int
    m: int
    l: float

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.d}")
        if self.m < 8 or self.m % 2 != 0:
            raise ValueError(f"points per axis must be even and >= 8, got {self.m}")
        if not (self.l > 0 and math.isfinite(self.l)):
            raise ValueError(f"box half-width must be positive, got {self.l}")

    @property
    def h(self) -> float:
        """Grid spacing 2L/M."""
        return 2.0 * self.l / self.m

    @property
    def npoints(self) -> int:
        return self.m ** self.d

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.m,) * self.d

    @property
    def cell_volume(self) -> float:
        return self.h ** self.d

    @property
    def box_volume(self) -> float:
        return (2.0 * self.l) ** self.d

    @cached_property
    def axis_coordinates(self) -> np.ndarray:
        """Physical coordinates along one axis, x_m = -L + m h."""
        x = -self.l + self.h * np.arange(self.m)
        x.setflags(write=False)
        return x

    @cached_property
    def axis_wavenumbers(self) -> np.ndarray:
        """Wavenumbers along one axis in FFT ordering, k_j = (pi/L) j."""
        j = np.fft.fftfreq(self.m) * self.m  # 0, 1, ..., M/2-1, -M/2, ..., -1
        k = (math.pi / self.l) * j
        k.setflags(write=False)
        return k

    @cached_property
    def x_mesh(self) -> tuple[np.ndarray, ...]:
        mesh = np.meshgrid(*([self.axis_coordinates] * self.d), indexing="ij")
        for a in mesh:
            a.setflags(write=False)
        return tuple(mesh)

    @cached_property
    def k_mesh(self) -> tuple[np.ndarray, ...]:
        mesh = np.meshgrid(*([self.axis_wavenumbers] * self.d), indexing="ij")
        for a in mesh:
            a.setflags(write=False)
        return tuple(mesh)

    @cached_property
    def k_squared(self) -> np.ndarray:
        k2 = sum(k * k for k in self.k_mesh)
        k2.setflags(write=False)
        return k2

    @cached_property
    def k_modulus(self) -> np.ndarray:
        km = np.sqrt(self.k_squared)
        km.setflags(write=False)
        return km

    @cached_property
    def _phase(self) -> np.ndarray:
        # (-1)^{j_1 + ... + j_d}: converts plain FFT output (modes anchored at
        # x = -L) into coefficients of exp(i k.x) with the true coordinates.
        j = np.rint(np.fft.fftfreq(self.m) * self.m).astype(np.int64)
        s = np.where(j % 2 == 0, 1.0, -1.0)
        out = s
        for _ in range(self.d - 1):
            out = np.multiply.outer(out, s)
        out.setflags(write=False)
        return out

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """2/3-rule mask: keeps per-axis mode numbers |j| <= M/3."""
        j = np.abs(np.rint(np.fft.fftfreq(self.m) * self.m).astype(np.int64))
        keep = j <= self.m // 3
        out = keep
        for _ in range(self.d - 1):
            out = np.multiply.outer(out, keep)
        out.setflags(write=False)
        return out


@dataclass
class ScalarField:
    """One complex scalar field on a grid, in physical or spectral representation."""

    values: np.ndarray
    grid: GridSpec
    space: str = PHYSICAL

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"field shape {self.values.shape} does not match grid {self.grid.shape}")
        if self.space not in (PHYSICAL, SPECTRAL):
            raise ValueError(f"unknown representation {self.space!r}")

    def copy(self) -> "ScalarField":
        return ScalarField(self.values.copy(), self.grid, self.space)

    def to_spectral(self) -> "ScalarField":
        return self if self.space == SPECTRAL else forward_transform(self)

    def to_physical(self) -> "ScalarField":
        return self if self.space == PHYSICAL else inverse_transform(self)

    def l2_norm(self) -> float:
        """L2 norm under the grid quadrature (equal in both representations)."""
        if self.space == PHYSICAL:
            return math.sqrt(self.grid.cell_volume * float(np.sum(np.abs(self.values) ** 2)))
        return math.sqrt(self.grid.box_volume * float(np.sum(np.abs(self.values) ** 2)))

    def h1_norm(self) -> float:
        """Inhomogeneous Sobolev norm, ||f||^2 = sum_k (1+|k|^2) |c_k|^2 (2L)^d."""
        c = self.to_spectral().values
        g = self.grid
        return math.sqrt(g.box_volume * float(np.sum((1.0 + g.k_squared) * np.abs(c) ** 2)))

    def lq_norm(self, q: float) -> float:
        """L^q norm by grid quadrature; q = inf returns the max modulus."""
        a = np.abs(self.to_physical().values)
        if math.isinf(q):
            return float(a.max(initial=0.0))
        return float((self.grid.cell_volume * np.sum(a ** q)) ** (1.0 / q))


def field_from_function(grid: GridSpec, fn: Callable[..., np.ndarray]) -> ScalarField:
    """Sample fn(x_1, ..., x_d) on the grid into a physical-space field."""
    return ScalarField(np.asarray(fn(*grid.x_mesh), dtype=complex), grid, PHYSICAL)


def forward_transform(f: ScalarField) -> ScalarField:
    """Physical -> spectral; coefficient of exp(i k.x), DC entry equals the mean."""
    if f.space != PHYSICAL:
        raise GridUsageError("forward_transform expects a physical-space field")
    g = f.grid
    coeff = np.fft.fftn(f.values) * (g._phase / g.npoints)
    return ScalarField(coeff, g, SPECTRAL)


def inverse_transform(f: ScalarField) -> ScalarField:
    """Spectral -> physical; exact inverse of forward_transform."""
    if f.space != SPECTRAL:
        raise GridUsageError("inverse_transform expects a spectral-space field")
    g = f.grid
    vals = np.fft.ifftn(f.values * g._phase) * g.npoints
    return ScalarField(vals, g, PHYSICAL)


def spectral_gradient(f: ScalarField) -> list[ScalarField]:
    """Gradient components as physical-space fields (multiplier i k_a)."""
    g = f.grid
    c = f.to_spectral().values
    out = []
    for a in range(g.d):
        comp = np.fft.ifftn((1j * g.k_mesh[a]) * c * g._phase) * g.npoints
        out.append(ScalarField(comp, g, PHYSICAL))
    return out


def spectral_laplacian(f: ScalarField) -> ScalarField:
    """Laplacian as a physical-space field (multiplier -|k|^2)."""
    g = f.grid
    c = f.to_spectral().values
    vals = np.fft.ifftn((-g.k_squared) * c * g._phase) * g.npoints
    return ScalarField(vals, g, PHYSICAL)


def apply_multiplier(f: ScalarField, multiplier: Callable[[np.ndarray], np.ndarray],
                     name: str = "multiplier") -> ScalarField:
    """Apply a radial spectral multiplier m(|k|) and return a field in the
    same representation as the input.

    The callable receives the |k| mesh; for multipliers singular at k = 0 the
    caller must patch the origin (e.g. with np.where) before returning.
    """
    g = f.grid
    m = np.asarray(multiplier(g.k_modulus))
    bad = ~np.isfinite(m)
    if bad.any():
        idx = tuple(int(i[0]) for i in np.nonzero(bad))
        kvec = tuple(float(g.k_mesh[a][idx]) for a in range(g.d))
        raise ValueError(
            f"{name} is not finite at k = {kvec} (grid index {idx}); "
            "singular multipliers must be patched at the offending wavenumbers")
    spec = f.to_spectral()
    out = ScalarField(spec.values * m, g, SPECTRAL)
    return out if f.space == SPECTRAL else inverse_transform(out)


# ---------------------------------------------------------------------------
# Free-space convolution with radial kernels on the doubled box
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RadialKernel:
    """Radial convolution kernel K(|z|) with a fixed regularization at z = 0.

    kind:
      'reciprocal'     K(r) = 1/r          (d = 2, 3)
      'absdistance'    K(r) = r
      'gaussian_delta' K(r) = exp(-(r/eps)^2) / (eps sqrt(pi))   (d = 1 mollifier)
      'profile'        user radial callable

    transform:
      'grid'      FFT of the kernel sampled on the doubled box, origin cell
                  replaced by its exact cell average (default).
      'analytic'  closed-form transform of the disc-truncated kernel sampled
                  on the padded wavenumber grid (reciprocal kernel only);
                  spectrally accurate for data supported inside the box.
    """

    kind: str
    param: float = 0.0
    profile: Callable[[np.ndarray], np.ndarray] | None = None
    origin_value: float | None = None
    transform: str = "grid"

    @staticmethod
    def reciprocal(transform: str = "grid") -> "RadialKernel":
        return RadialKernel("reciprocal", transform=transform)

    @staticmethod
    def abs_distance() -> "RadialKernel":
        return RadialKernel("absdistance")

    @staticmethod
    def gaussian_delta(eps: float) -> "RadialKernel":
        if eps <= 0:
            raise ValueError("mollifier width must be positive")
        return RadialKernel("gaussian_delta", param=eps)

    @staticmethod
    def from_profile(fn: Callable[[np.ndarray], np.ndarray],
                     origin_value: float | None = None) -> "RadialKernel":
        return RadialKernel("profile", profile=fn, origin_value=origin_value)

    def evaluate(self, r: np.ndarray, h: float, d: int) -> np.ndarray:
        """Kernel values on a displacement-radius mesh with the origin cell fixed."""
        if self.kind == "reciprocal":
            if d == 1:
                raise ValueError("reciprocal kernel is not defined for d = 1")
            with np.errstate(divide="ignore"):
                vals = np.where(r > 0, 1.0 / np.where(r > 0, r, 1.0), 0.0)
            vals[r == 0] = _RECIP_CELL_AVG[d] / h
            return vals
        if self.kind == "absdistance":
            vals = r.copy()
            vals[r == 0] = _ABS_CELL_AVG[d] * h
            return vals
        if self.kind == "gaussian_delta":
            eps = self.param
            return np.exp(-((r / eps) ** 2)) / (eps * math.sqrt(math.pi))
        if self.kind == "profile":
            vals = np.asarray(self.profile(np.where(r > 0, r, 1.0)), dtype=float).copy()
            origin = self.origin_value
            if origin is None:
                origin = float(self.profile(np.asarray(0.0)))
            vals[r == 0] = origin
            if not np.isfinite(vals).all():
                raise ValueError("radial profile produced non-finite kernel values")
            return vals
        raise ValueError(f"unknown kernel kind {self.kind!r}")


@lru_cache(maxsize=16)
def _padded_radius(grid: GridSpec) -> np.ndarray:
    """Displacement radii on the doubled box, FFT ordering per axis."""
    m2 = 2 * grid.m
    j = np.rint(np.fft.fftfreq(m2) * m2)  # 0..M-1, -M..-1
    delta = grid.h * j
    mesh = np.meshgrid(*([delta] * grid.d), indexing="ij")
    r = np.sqrt(sum(a * a for a in mesh))
    r.setflags(write=False)
    return r


@lru_cache(maxsize=16)
def _padded_k_modulus(grid: GridSpec) -> np.ndarray:
    m2 = 2 * grid.m
    k = (math.pi / (2.0 * grid.l)) * np.rint(np.fft.fftfreq(m2) * m2)
    mesh = np.meshgrid(*([k] * grid.d), indexing="ij")
    km = np.sqrt(sum(a * a for a in mesh))
    km.setflags(write=False)
    return km


def _analytic_reciprocal_hat(grid: GridSpec) -> np.ndarray:
    """Transform of 1/r truncated to the disc r < R, with R = 2L.

    d = 2:  K_hat(k) = 2 pi Lambda(R k) / k,   Lambda(x) = int_0^x J0
    d = 3:  K_hat(k) = 4 pi (1 - cos(R k)) / k^2

    R = 2L is the largest radius whose periodic images (period 4L after
    padding) stay clear of the admissible displacement range; data must be
    supported inside the ball of radius ~L for spectral accuracy, which the
    boundary-mass monitor enforces anyway.
    """
    from scipy.special import j0, j1, struve

    km = _padded_k_modulus(grid)
    R = 2.0 * grid.l
    if grid.d == 2:
        # Lambda(x) = x J0 + (pi x/2)(J1 H0 - J0 H1), stable at every x
        x = R * km
        lam = x * j0(x) + (math.pi / 2.0) * x * (j1(x) * struve(0, x) - j0(x) * struve(1, x))
        with np.errstate(divide="ignore", invalid="ignore"):
            hat = np.where(km > 0, 2.0 * math.pi * lam / np.where(km > 0, km, 1.0), 0.0)
        hat[km == 0] = 2.0 * math.pi * R
        return hat
    if grid.d == 3:
        with np.errstate(divide="ignore", invalid="ignore"):
            hat = np.where(km > 0,
                           4.0 * math.pi * (1.0 - np.cos(R * km)) / np.where(km > 0, km ** 2, 1.0),
                           0.0)
        hat[km == 0] = 2.0 * math.pi * R ** 2
        return hat
    raise ValueError("analytic reciprocal transform available for d = 2, 3 only")


_KERNEL_HAT_CACHE: dict[tuple, np.ndarray] = {}


def _kernel_hat(grid: GridSpec, kernel: RadialKernel) -> np.ndarray:
    key = (grid, kernel.kind, kernel.param, kernel.transform,
           id(kernel.profile) if kernel.profile is not None else None,
           kernel.origin_value)
    hat = _KERNEL_HAT_CACHE.get(key)
    if hat is None:
        if kernel.transform == "analytic":
            if kernel.kind != "reciprocal":
                raise ValueError("analytic transform implemented for the reciprocal kernel only")
            # continuum transform vs index-space DFT: hat_DFT = hat_cont / h^d
            hat = _analytic_reciprocal_hat(grid) / grid.cell_volume
        else:
            vals = kernel.evaluate(_padded_radius(grid).copy(), grid.h, grid.d)
            hat = np.fft.fftn(vals)
        hat.setflags(write=False)
        if len(_KERNEL_HAT_CACHE) > 32:
            _KERNEL_HAT_CACHE.clear()
        _KERNEL_HAT_CACHE[key] = hat
    return hat


def _padded_displacements(grid: GridSpec) -> tuple[np.ndarray, ...]:
    m2 = 2 * grid.m
    j = np.rint(np.fft.fftfreq(m2) * m2)
    delta = grid.h * j
    return tuple(np.meshgrid(*([delta] * grid.d), indexing="ij"))


@lru_cache(maxsize=16)
def _padded_k_axes(grid: GridSpec) -> tuple[np.ndarray, ...]:
    m2 = 2 * grid.m
    k = (math.pi / (2.0 * grid.l)) * np.rint(np.fft.fftfreq(m2) * m2)
    mesh = np.meshgrid(*([k] * grid.d), indexing="ij")
    for a in mesh:
        a.setflags(write=False)
    return tuple(mesh)


def _pad_forward(grid: GridSpec, values: np.ndarray) -> np.ndarray:
    padded = np.zeros((2 * grid.m,) * grid.d, dtype=complex)
    padded[(slice(0, grid.m),) * grid.d] = values
    return np.fft.fftn(padded)


def _convolve_hat(grid: GridSpec, fhat_padded: np.ndarray, kernel_hat: np.ndarray) -> np.ndarray:
    """Finish a padded convolution and restrict to the original box."""
    conv = np.fft.ifftn(fhat_padded * kernel_hat)
    block = conv[(slice(0, grid.m),) * grid.d]
    return block.real * grid.cell_volume


def _require_real(f: ScalarField) -> np.ndarray:
    vals = f.to_physical().values
    if np.iscomplexobj(vals):
        if np.abs(vals.imag).max(initial=0.0) > 1e-12 * max(1.0, np.abs(vals.real).max(initial=0.0)):
            raise ValueError("convolution input must be real-valued")
        vals = vals.real
    return vals


def convolve_radial_kernel(f: ScalarField, kernel: RadialKernel) -> ScalarField:
    """Free-space convolution (K * f)(x) = int K(|x-y|) f(y) dy for real f.

    Computed by zero-padding to [-2L, 2L)^d with the truncated kernel, so the
    result is the genuine free-space convolution for data supported in the
    original box (no periodic images).
    """
    g = f.grid
    vals = _require_real(f)
    hat = _kernel_hat(g, kernel)
    out = _convolve_hat(g, _pad_forward(g, vals), hat)
    return ScalarField(out, g, PHYSICAL)


def convolve_kernel_gradient(f: ScalarField, kernel: RadialKernel) -> list[ScalarField]:
    """Components of grad (K * f) = (grad K) * f, evaluated by spectral
    differentiation of the padded kernel transform.

    Using the exact spectral derivative of the same discrete kernel makes the
    continuity-equation identities hold on the grid to rounding (instead of
    inheriting an O(h^2) mismatch between independently sampled K and grad K).
    """
    g = f.grid
    vals = _require_real(f)
    hat = _kernel_hat(g, kernel)
    fhat = _pad_forward(g, vals)
    kax = _padded_k_axes(g)
    return [ScalarField(_convolve_hat(g, fhat, (1j * kax[a]) * hat), g, PHYSICAL)
            for a in range(g.d)]


def cube_sup_l2(grid: GridSpec, density: np.ndarray) -> float:
    """sup over grid-aligned unit cubes (stride one cell, wrap-around) of
    (int_Q density)^(1/2), for a nonnegative density array.

    The unit cube must span a whole number of cells: h must divide 1.
    """
    if 2.0 * grid.l < 1.0:
        raise ValueError("box is smaller than the unit cube")
    ncells = int(round(1.0 / grid.h))
    if ncells < 1 or abs(ncells * grid.h - 1.0) > 1e-9:
        raise ValueError(
            f"grid spacing h = {grid.h} does not divide the unit cube edge")
    window = density
    for axis in range(grid.d):
        window = sum(np.roll(window, -s, axis=axis) for s in range(ncells))
    best = float(window.max()) * grid.cell_volume
    return math.sqrt(max(best, 0.0))
