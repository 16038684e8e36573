"""
Spectral Core
Function spaces, transforms and operators on the flat torus and the periodic slab.

Surface fields are stored as grid samples and/or Fourier coefficients normalized so
that the zero mode equals the mean value. Bulk fields use a Fourier x cosine basis
whose vertical modes cos(m*pi*z/H) satisfy homogeneous Neumann conditions on both
faces; the surface is the face z = 0.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional, Union

import numpy as np
import scipy.fft as sfft

from constants import SINGULAR_MEAN_TOL
from utils.config import get_settings
from utils.exceptions import (
    ConfigurationException,
    GeometryMismatchException,
    SingularSystemException,
)

Scalar = Union[int, float]


def _fft_workers() -> int:
    try:
        return get_settings().threads
    except ConfigurationException:
        return 1


FFT_WORKERS = _fft_workers()


@dataclass(frozen=True)
class TorusGeometry:
    """Flat 2-torus of side L sampled on an N x N grid."""
    L: float
    N: int

    def __post_init__(self):
        if self.L <= 0:
            raise ConfigurationException(f"Torus side length must be positive, got {self.L}")
        if self.N < 4 or self.N % 2 != 0:
            raise ConfigurationException(f"Grid size must be even and >= 4, got {self.N}")

    @property
    def area(self) -> float:
        return self.L * self.L

    @cached_property
    def mode_numbers(self) -> np.ndarray:
        """Integer mode numbers in FFT order, shape (N,)."""
        return np.rint(sfft.fftfreq(self.N, d=1.0 / self.N)).astype(int)

    @cached_property
    def k_squared(self) -> np.ndarray:
        """|k|^2 per mode; the Laplace-Beltrami eigenvalue is -k_squared."""
        k = 2.0 * np.pi / self.L * self.mode_numbers
        kx, ky = np.meshgrid(k, k, indexing="ij")
        return kx * kx + ky * ky

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """Two-thirds rule: keep modes with |n_i| <= N/3."""
        keep = np.abs(self.mode_numbers) <= self.N / 3.0
        return np.logical_and.outer(keep, keep)

    @cached_property
    def coordinates(self):
        x = self.L * np.arange(self.N) / self.N
        return np.meshgrid(x, x, indexing="ij")


@dataclass(frozen=True)
class SlabGeometry:
    """Periodic slab B = torus x (0, H) with Mz vertical cosine modes."""
    base: TorusGeometry
    H: float
    Mz: int

    def __post_init__(self):
        if self.H <= 0:
            raise ConfigurationException(f"Slab depth must be positive, got {self.H}")
        if self.Mz < 2:
            raise ConfigurationException(f"Need at least 2 vertical modes, got {self.Mz}")

    @property
    def volume(self) -> float:
        return self.base.area * self.H

    @property
    def shape(self):
        return (self.base.N, self.base.N, self.Mz)

    @cached_property
    def vertical_wavenumbers(self) -> np.ndarray:
        return np.arange(self.Mz) * np.pi / self.H

    @cached_property
    def vertical_weights(self) -> np.ndarray:
        """(1/H) * integral of cos^2(m*pi*z/H) over (0, H): 1 for m = 0, 1/2 otherwise."""
        w = np.full(self.Mz, 0.5)
        w[0] = 1.0
        return w

    @cached_property
    def boundary_weights(self) -> np.ndarray:
        """Weights of a surface flux in the vertical Galerkin modes: 1 for m = 0, 2 otherwise."""
        return 1.0 / self.vertical_weights

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """|k|^2 + (m*pi/H)^2, shape (N, N, Mz)."""
        return self.base.k_squared[..., None] + self.vertical_wavenumbers[None, None, :] ** 2

    @cached_property
    def z(self) -> np.ndarray:
        """Vertical collocation points (cell centres)."""
        return (np.arange(self.Mz) + 0.5) * self.H / self.Mz


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


class SurfaceField:
    """
    Scalar field on the torus with lazily synchronized grid and spectral data.

    Instances are immutable; every operation returns a new field.
    """

    __slots__ = ("geometry", "_values", "_coefficients")

    def __init__(self, geometry: TorusGeometry,
                 values: Optional[np.ndarray] = None,
                 coefficients: Optional[np.ndarray] = None):
        if values is None and coefficients is None:
            raise ValueError("SurfaceField needs values or coefficients")
        shape = (geometry.N, geometry.N)
        for name, array in (("values", values), ("coefficients", coefficients)):
            if array is not None and np.shape(array) != shape:
                raise GeometryMismatchException(
                    f"{name} of shape {np.shape(array)} do not match grid {shape}"
                )
        self.geometry = geometry
        self._values = None if values is None else _readonly(np.array(values, dtype=float))
        self._coefficients = (None if coefficients is None
                              else _readonly(np.array(coefficients, dtype=complex)))

    @classmethod
    def from_values(cls, geometry: TorusGeometry, values: np.ndarray) -> "SurfaceField":
        return cls(geometry, values=values)

    @classmethod
    def from_coefficients(cls, geometry: TorusGeometry, coefficients: np.ndarray) -> "SurfaceField":
        return cls(geometry, coefficients=coefficients)

    @classmethod
    def constant(cls, geometry: TorusGeometry, value: Scalar) -> "SurfaceField":
        coefficients = np.zeros((geometry.N, geometry.N), dtype=complex)
        coefficients[0, 0] = value
        return cls(geometry, values=np.full((geometry.N, geometry.N), float(value)),
                   coefficients=coefficients)

    @classmethod
    def zeros(cls, geometry: TorusGeometry) -> "SurfaceField":
        return cls.constant(geometry, 0.0)

    @classmethod
    def from_function(cls, geometry: TorusGeometry,
                      fn: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> "SurfaceField":
        x1, x2 = geometry.coordinates
        return cls(geometry, values=np.broadcast_to(fn(x1, x2), x1.shape))

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            n2 = self.geometry.N ** 2
            self._values = _readonly(sfft.ifft2(self._coefficients * n2, workers=FFT_WORKERS).real)
        return self._values

    @property
    def coefficients(self) -> np.ndarray:
        if self._coefficients is None:
            n2 = self.geometry.N ** 2
            self._coefficients = _readonly(sfft.fft2(self._values, workers=FFT_WORKERS) / n2)
        return self._coefficients

    def sync(self) -> "SurfaceField":
        """Populate both representations."""
        self.values
        self.coefficients
        return self

    def mean(self) -> float:
        return float(self.coefficients[0, 0].real)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def _check(self, other: "SurfaceField"):
        if other.geometry != self.geometry:
            raise GeometryMismatchException(
                f"Surface fields live on different grids: {self.geometry} vs {other.geometry}"
            )

    def _spectral(self) -> bool:
        return self._coefficients is not None

    def __add__(self, other):
        if isinstance(other, SurfaceField):
            self._check(other)
            if self._spectral() and other._spectral():
                return SurfaceField(self.geometry, coefficients=self.coefficients + other.coefficients)
            return SurfaceField(self.geometry, values=self.values + other.values)
        if self._spectral():
            coefficients = np.array(self.coefficients)
            coefficients[0, 0] += other
            return SurfaceField(self.geometry, coefficients=coefficients)
        return SurfaceField(self.geometry, values=self.values + other)

    __radd__ = __add__

    def __neg__(self):
        if self._spectral():
            return SurfaceField(self.geometry, coefficients=-self.coefficients)
        return SurfaceField(self.geometry, values=-self.values)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, SurfaceField):
            self._check(other)
            return SurfaceField(self.geometry, values=self.values * other.values)
        if self._spectral():
            return SurfaceField(self.geometry, coefficients=self.coefficients * other)
        return SurfaceField(self.geometry, values=self.values * other)

    __rmul__ = __mul__

    def __truediv__(self, other: Scalar):
        return self * (1.0 / other)

    def __repr__(self):
        return f"SurfaceField(N={self.geometry.N}, L={self.geometry.L}, mean={self.mean():.6g})"


class BulkField:
    """
    Scalar field on the slab in the Fourier x cosine basis.

    Coefficients have shape (N, N, Mz); grid samples live on the N x N x Mz
    collocation points (horizontal grid, vertical cell centres).
    """

    __slots__ = ("geometry", "_values", "_coefficients")

    def __init__(self, geometry: SlabGeometry,
                 values: Optional[np.ndarray] = None,
                 coefficients: Optional[np.ndarray] = None):
        if values is None and coefficients is None:
            raise ValueError("BulkField needs values or coefficients")
        for name, array in (("values", values), ("coefficients", coefficients)):
            if array is not None and np.shape(array) != geometry.shape:
                raise GeometryMismatchException(
                    f"{name} of shape {np.shape(array)} do not match slab {geometry.shape}"
                )
        self.geometry = geometry
        self._values = None if values is None else _readonly(np.array(values, dtype=float))
        self._coefficients = (None if coefficients is None
                              else _readonly(np.array(coefficients, dtype=complex)))

    @classmethod
    def from_values(cls, geometry: SlabGeometry, values: np.ndarray) -> "BulkField":
        return cls(geometry, values=values)

    @classmethod
    def from_coefficients(cls, geometry: SlabGeometry, coefficients: np.ndarray) -> "BulkField":
        return cls(geometry, coefficients=coefficients)

    @classmethod
    def constant(cls, geometry: SlabGeometry, value: Scalar) -> "BulkField":
        coefficients = np.zeros(geometry.shape, dtype=complex)
        coefficients[0, 0, 0] = value
        return cls(geometry, values=np.full(geometry.shape, float(value)),
                   coefficients=coefficients)

    @classmethod
    def from_function(cls, geometry: SlabGeometry,
                      fn: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]) -> "BulkField":
        x = geometry.base.L * np.arange(geometry.base.N) / geometry.base.N
        x1, x2, z = np.meshgrid(x, x, geometry.z, indexing="ij")
        return cls(geometry, values=np.broadcast_to(fn(x1, x2, z), geometry.shape))

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            n2 = self.geometry.base.N ** 2
            cosine = sfft.ifft2(self._coefficients * n2, axes=(0, 1), workers=FFT_WORKERS).real
            # dct-III without normalization doubles every mode but the first
            values = 0.5 * (sfft.dct(cosine, type=3, axis=2, workers=FFT_WORKERS) + cosine[..., :1])
            self._values = _readonly(values)
        return self._values

    @property
    def coefficients(self) -> np.ndarray:
        if self._coefficients is None:
            Mz = self.geometry.Mz
            cosine = sfft.dct(self._values, type=2, axis=2, workers=FFT_WORKERS) / Mz
            cosine[..., 0] *= 0.5
            n2 = self.geometry.base.N ** 2
            self._coefficients = _readonly(sfft.fft2(cosine, axes=(0, 1), workers=FFT_WORKERS) / n2)
        return self._coefficients

    def sync(self) -> "BulkField":
        self.values
        self.coefficients
        return self

    def mean(self) -> float:
        return float(self.coefficients[0, 0, 0].real)

    def _check(self, other: "BulkField"):
        if other.geometry != self.geometry:
            raise GeometryMismatchException("Bulk fields live on different slabs")

    def __add__(self, other):
        if isinstance(other, BulkField):
            self._check(other)
            return BulkField(self.geometry, coefficients=self.coefficients + other.coefficients)
        coefficients = np.array(self.coefficients)
        coefficients[0, 0, 0] += other
        return BulkField(self.geometry, coefficients=coefficients)

    __radd__ = __add__

    def __neg__(self):
        return BulkField(self.geometry, coefficients=-self.coefficients)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other: Scalar):
        return BulkField(self.geometry, coefficients=self.coefficients * other)

    __rmul__ = __mul__

    def __repr__(self):
        g = self.geometry
        return f"BulkField(N={g.base.N}, Mz={g.Mz}, mean={self.mean():.6g})"


# ---------------------------------------------------------------------------
# Surface operators
# ---------------------------------------------------------------------------

def surface_transform(f: SurfaceField) -> SurfaceField:
    """Return f with its spectral coefficients populated."""
    return f.sync()


def laplace_beltrami(f: SurfaceField) -> SurfaceField:
    return SurfaceField.from_coefficients(f.geometry, -f.geometry.k_squared * f.coefficients)


def surface_integral(f: SurfaceField) -> float:
    return f.geometry.area * f.mean()


def mean_free_project(f: SurfaceField) -> SurfaceField:
    coefficients = np.array(f.coefficients)
    coefficients[0, 0] = 0.0
    return SurfaceField.from_coefficients(f.geometry, coefficients)


def solve_surface_helmholtz(a: float, b: float, rhs: SurfaceField) -> SurfaceField:
    """
    Solve (a - b*Laplace) x = rhs mode by mode.

    With a = 0 the right-hand side must be mean-free and the returned solution is
    the mean-free one.
    """
    geometry = rhs.geometry
    denominator = a + b * geometry.k_squared
    coefficients = np.array(rhs.coefficients)
    if a == 0:
        mean = coefficients[0, 0].real
        if abs(mean) > SINGULAR_MEAN_TOL:
            raise SingularSystemException(mean)
        denominator = np.array(denominator)
        denominator[0, 0] = 1.0
        coefficients[0, 0] = 0.0
    return SurfaceField.from_coefficients(geometry, coefficients / denominator)


def dealias_cubic(f: SurfaceField) -> SurfaceField:
    return SurfaceField.from_coefficients(f.geometry, f.coefficients * f.geometry.dealias_mask)


def surface_gradient_norm_sq(f: SurfaceField) -> float:
    """Integral of |grad f|^2 over the torus."""
    g = f.geometry
    return float(g.area * np.sum(g.k_squared * np.abs(f.coefficients) ** 2))


def surface_l2_norm(f: SurfaceField) -> float:
    return float(np.sqrt(f.geometry.area * np.sum(np.abs(f.coefficients) ** 2)))


def surface_inner(f: SurfaceField, g: SurfaceField) -> float:
    """L2 inner product, exact for band-limited fields."""
    f._check(g)
    return float(f.geometry.area * np.sum((f.coefficients * np.conj(g.coefficients)).real))


def resample(f: SurfaceField, geometry: TorusGeometry) -> SurfaceField:
    """Spectral interpolation onto another grid of the same torus (Nyquist modes dropped)."""
    if geometry.L != f.geometry.L:
        raise GeometryMismatchException("Cannot resample between tori of different size")
    keep = min(f.geometry.N, geometry.N) // 2
    source = f.coefficients
    target = np.zeros((geometry.N, geometry.N), dtype=complex)
    idx = np.r_[0:keep, -keep + 1:0]
    target[np.ix_(idx, idx)] = source[np.ix_(idx, idx)]
    return SurfaceField.from_coefficients(geometry, target)


def dominant_wavenumber(f: SurfaceField) -> float:
    """Peak of the radially binned power spectrum of the mean-free part."""
    g = f.geometry
    power = np.abs(f.coefficients) ** 2
    power[0, 0] = 0.0
    if not np.any(power > 0):
        return 0.0
    shell = np.rint(np.sqrt(g.k_squared) * g.L / (2.0 * np.pi)).astype(int)
    spectrum = np.bincount(shell.ravel(), weights=power.ravel())
    return float(2.0 * np.pi / g.L * np.argmax(spectrum))


# ---------------------------------------------------------------------------
# Bulk operators
# ---------------------------------------------------------------------------

def bulk_trace(u: BulkField) -> SurfaceField:
    """Trace on z = 0, where every cosine mode equals one."""
    return SurfaceField.from_coefficients(u.geometry.base, u.coefficients.sum(axis=2))


def bulk_integral(u: BulkField) -> float:
    return u.geometry.volume * u.mean()


def bulk_l2_norm_sq(u: BulkField) -> float:
    g = u.geometry
    weights = g.vertical_weights[None, None, :]
    return float(g.volume * np.sum(weights * np.abs(u.coefficients) ** 2))


def bulk_gradient_norm_sq(u: BulkField) -> float:
    """Spectral Dirichlet form: integral of |grad u|^2 over the slab."""
    g = u.geometry
    weights = g.vertical_weights[None, None, :]
    return float(g.volume * np.sum(weights * g.eigenvalues * np.abs(u.coefficients) ** 2))


def bulk_horizontal_laplacian(u: BulkField) -> BulkField:
    g = u.geometry
    return BulkField.from_coefficients(g, -g.base.k_squared[..., None] * u.coefficients)
