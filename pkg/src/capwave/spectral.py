"""Periodic-box Fourier infrastructure.

Everything downstream (surface-wave evolution, Dirichlet-Neumann series,
bilinear multipliers, decay diagnostics) runs on a square periodic box
[-L/2, L/2)^2 discretized with n points per axis.  This module owns the
conventions:

* Wavenumbers are k = 2*pi*m/L for integer mode pairs m in [-n/2, n/2)^2.
* Coefficients are those of the Fourier series f(x) = sum_m c_m exp(i k_m.x)
  with x the *centered* coordinate, so c_m = (1/n^2) sum_x f(x) exp(-i k_m.x).
  With that normalization Parseval reads ||f||_{L^2(box)} = L * sqrt(sum |c_m|^2),
  which is what every L^2 norm below computes.
* Fourier multipliers with a symbol that is singular at k = 0 (negative powers
  of |k|, the low-frequency weight Y) send the zero mode to zero; fields fed to
  them are treated modulo constants.
* Nonlinear products are dealiased by a per-axis 2/3-rule mask.

Coordinate-weighted operators (the rotation field Omega = x1 d2 - x2 d1 and the
scaling field Sigma = x.grad) use the centered coordinates and are only
meaningful for fields localized away from the box boundary; a warning fires
when more than 1% of the L^2 mass sits in the outer 10% margin.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from itertools import combinations_with_replacement
from pathlib import Path

import numpy as np

__all__ = [
    "GridSpec",
    "SpectralField",
    "VectorFieldTag",
    "BoundaryMarginWarning",
    "MultiplierDomainError",
    "forward_transform",
    "inverse_transform",
    "apply_multiplier",
    "lam_symbol",
    "y_symbol",
    "sobolev_symbol",
    "lp_project",
    "lp_block_range",
    "apply_vector_field",
    "apply_gamma",
    "gamma_multiindices",
    "weighted_sobolev_norm",
    "norm_l2",
    "norm_lp",
    "dealiased_product",
    "margin_mass_fraction",
    "random_localized_field",
    "save_field",
    "load_field",
]


class BoundaryMarginWarning(UserWarning):
    """Field mass too close to the box boundary for coordinate weights."""


class MultiplierDomainError(ValueError):
    """A multiplier symbol returned a non-finite value at a nonzero mode."""


def _smooth_step(x: np.ndarray) -> np.ndarray:
    """C-infinity step built from exp(-1/x) glue: 0 for x<=0, 1 for x>=1."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        gx = np.where(x > 0.0, np.exp(-1.0 / np.maximum(x, 1e-300)), 0.0)
        g1x = np.where(1.0 - x > 0.0, np.exp(-1.0 / np.maximum(1.0 - x, 1e-300)), 0.0)
    return gx / (gx + g1x)


def transition_bump(r: np.ndarray) -> np.ndarray:
    """Smooth radial plateau: 1 on [0, 1], 0 on [2, inf)."""
    return _smooth_step(2.0 - np.asarray(r, dtype=float))


def theta_bump(r: np.ndarray) -> np.ndarray:
    """Dyadic partition bump theta(r) = plateau(r) - plateau(2r).

    Supported in the annulus 1/2 <= r <= 2 and telescoping:
    sum_{j in Z} theta(r / 2^j) = 1 for every r > 0.
    """
    r = np.asarray(r, dtype=float)
    return transition_bump(r) - transition_bump(2.0 * r)


@dataclass(frozen=True)
class GridSpec:
    """Discretization of the periodic box [-L/2, L/2)^2.

    Parameters
    ----------
    n_per_axis:
        Points per axis; even and >= 8.
    box_length:
        Side length L of the fundamental domain.
    dealias_fraction:
        Fraction of the Nyquist range kept by the dealiasing mask (2/3 rule
        by default).
    """

    n_per_axis: int
    box_length: float
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self):
        if self.n_per_axis < 8 or self.n_per_axis % 2 != 0:
            raise ValueError(f"n_per_axis must be even and >= 8, got {self.n_per_axis}")
        if self.box_length <= 0:
            raise ValueError("box_length must be positive")
        if not 0.0 < self.dealias_fraction <= 1.0:
            raise ValueError("dealias_fraction must lie in (0, 1]")

    @property
    def n(self) -> int:
        return self.n_per_axis

    @property
    def dx(self) -> float:
        return self.box_length / self.n_per_axis

    @cached_property
    def x1(self) -> np.ndarray:
        """Centered physical coordinates along one axis."""
        n, L = self.n_per_axis, self.box_length
        return -L / 2.0 + np.arange(n) * (L / n)

    @cached_property
    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Meshgrid (X1, X2) of centered coordinates, indexing='ij'."""
        X1, X2 = np.meshgrid(self.x1, self.x1, indexing="ij")
        return X1, X2

    @cached_property
    def modes(self) -> tuple[np.ndarray, np.ndarray]:
        """Integer mode meshgrid (M1, M2) in FFT ordering."""
        m = np.fft.fftfreq(self.n_per_axis, d=1.0 / self.n_per_axis).astype(int)
        M1, M2 = np.meshgrid(m, m, indexing="ij")
        return M1, M2

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, np.ndarray]:
        """Wavenumber meshgrid (K1, K2), k = 2*pi*m/L."""
        M1, M2 = self.modes
        scale = 2.0 * np.pi / self.box_length
        return scale * M1, scale * M2

    @cached_property
    def k_abs(self) -> np.ndarray:
        K1, K2 = self.wavenumbers
        return np.hypot(K1, K2)

    @cached_property
    def k_min(self) -> float:
        """Smallest nonzero wavenumber magnitude."""
        return 2.0 * np.pi / self.box_length

    @cached_property
    def k_max_dealiased(self) -> float:
        cutoff = int(self.dealias_fraction * (self.n_per_axis // 2))
        return cutoff * self.k_min * np.sqrt(2.0)

    @cached_property
    def center_phase(self) -> np.ndarray:
        """(-1)^(m1+m2) factor relating FFT output to centered-box coefficients."""
        M1, M2 = self.modes
        return np.where((M1 + M2) % 2 == 0, 1.0, -1.0)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        cutoff = int(self.dealias_fraction * (self.n_per_axis // 2))
        M1, M2 = self.modes
        return (np.abs(M1) <= cutoff) & (np.abs(M2) <= cutoff)

    @cached_property
    def margin_mask(self) -> np.ndarray:
        """True on the outer 10% frame of the box (per axis)."""
        edge = 0.4 * self.box_length
        X1, X2 = self.coords
        return (np.abs(X1) >= edge) | (np.abs(X2) >= edge)


@dataclass
class SpectralField:
    """A scalar field on a GridSpec, carried by its Fourier coefficients.

    ``coeffs[m1, m2]`` (FFT index ordering) is the amplitude of
    exp(i k_m . x).  ``is_real`` asserts Hermitian symmetry
    coeffs[-m] = conj(coeffs[m]).
    """

    grid: GridSpec
    coeffs: np.ndarray
    is_real: bool = False

    def __post_init__(self):
        n = self.grid.n_per_axis
        if self.coeffs.shape != (n, n):
            raise ValueError(
                f"coefficient array shape {self.coeffs.shape} does not match grid n={n}"
            )
        if self.coeffs.dtype != np.complex128:
            self.coeffs = self.coeffs.astype(np.complex128)

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_physical(cls, grid: GridSpec, values: np.ndarray) -> "SpectralField":
        return forward_transform(values, grid)

    @classmethod
    def from_coeffs(cls, grid: GridSpec, coeffs: np.ndarray, is_real: bool | None = None) -> "SpectralField":
        if is_real is None:
            is_real = bool(hermitian_defect(grid, coeffs) < 1e-12)
        return cls(grid, np.array(coeffs, dtype=np.complex128), is_real)

    @classmethod
    def zero(cls, grid: GridSpec, is_real: bool = True) -> "SpectralField":
        n = grid.n_per_axis
        return cls(grid, np.zeros((n, n), dtype=np.complex128), is_real)

    # -- views --------------------------------------------------------------

    @property
    def values(self) -> np.ndarray:
        """Physical-space samples on the centered grid."""
        v = inverse_transform(self)
        return v.real if self.is_real else v

    def coeff_at(self, m1: int, m2: int) -> complex:
        n = self.grid.n_per_axis
        if not (-n // 2 <= m1 < n // 2 and -n // 2 <= m2 < n // 2):
            raise IndexError(f"mode ({m1}, {m2}) outside grid range")
        return complex(self.coeffs[m1 % n, m2 % n])

    # -- algebra ------------------------------------------------------------

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check_same_grid(other)
        return SpectralField(self.grid, self.coeffs + other.coeffs, self.is_real and other.is_real)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check_same_grid(other)
        return SpectralField(self.grid, self.coeffs - other.coeffs, self.is_real and other.is_real)

    def __mul__(self, scalar: complex) -> "SpectralField":
        c = complex(scalar)
        return SpectralField(self.grid, self.coeffs * c, self.is_real and c.imag == 0.0)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.grid, -self.coeffs, self.is_real)

    def conj(self) -> "SpectralField":
        """Complex conjugate field (coefficients reflected and conjugated)."""
        return SpectralField(self.grid, reflect_coeffs(np.conj(self.coeffs)), self.is_real)

    def dealias(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs * self.grid.dealias_mask, self.is_real)

    def real_part(self) -> "SpectralField":
        half = 0.5 * (self.coeffs + reflect_coeffs(np.conj(self.coeffs)))
        return SpectralField(self.grid, half, True)

    def imag_part(self) -> "SpectralField":
        half = (self.coeffs - reflect_coeffs(np.conj(self.coeffs))) / 2j
        return SpectralField(self.grid, half, True)

    def _check_same_grid(self, other: "SpectralField"):
        if self.grid != other.grid:
            raise ValueError("fields live on different grids")


def reflect_coeffs(coeffs: np.ndarray) -> np.ndarray:
    """Index map c[m] -> c[-m] in FFT ordering."""
    return np.roll(np.flip(coeffs, axis=(0, 1)), shift=(1, 1), axis=(0, 1))


def hermitian_defect(grid: GridSpec, coeffs: np.ndarray) -> float:
    """Relative deviation from the Hermitian symmetry of a real field."""
    scale = np.max(np.abs(coeffs))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(reflect_coeffs(np.conj(coeffs)) - coeffs)) / scale)


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------


def forward_transform(values: np.ndarray, grid: GridSpec) -> SpectralField:
    """Physical samples on the centered grid -> Fourier-series coefficients."""
    values = np.asarray(values)
    n = grid.n_per_axis
    if values.shape != (n, n):
        raise ValueError(f"field shape {values.shape} does not match grid n={n}")
    is_real = not np.iscomplexobj(values)
    coeffs = np.fft.fft2(values) * (grid.center_phase / n**2)
    return SpectralField(grid, coeffs, is_real)


def inverse_transform(field: SpectralField) -> np.ndarray:
    """Fourier coefficients -> physical samples (complex array)."""
    grid = field.grid
    n = grid.n_per_axis
    return np.fft.ifft2(field.coeffs * grid.center_phase) * n**2


# ---------------------------------------------------------------------------
# multipliers
# ---------------------------------------------------------------------------


def apply_multiplier(field: SpectralField, symbol) -> SpectralField:
    """Apply the Fourier multiplier with the given symbol ``symbol(k1, k2)``.

    The symbol is evaluated on the wavenumber mesh.  A non-finite value at the
    zero mode means the multiplier is defined modulo constants and the zero
    coefficient is mapped to 0; a non-finite value at any other mode is an
    error.
    """
    grid = field.grid
    K1, K2 = grid.wavenumbers
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        sym = np.asarray(symbol(K1, K2))
    sym = np.broadcast_to(sym, field.coeffs.shape).astype(np.complex128).copy()
    bad = ~np.isfinite(sym)
    if bad[0, 0]:
        sym[0, 0] = 0.0
        bad[0, 0] = False
    if np.any(bad):
        m1, m2 = np.argwhere(bad)[0]
        raise MultiplierDomainError(
            f"symbol non-finite at nonzero mode index ({m1}, {m2})"
        )
    out_real = field.is_real and bool(
        np.max(np.abs(sym.imag)) == 0.0
        and hermitian_defect(grid, sym + 1.0) < 1e-14
    )
    return SpectralField(grid, field.coeffs * sym, out_real)


def lam_symbol(alpha: float):
    """Symbol of Lambda^alpha = |k|^alpha (zero mode handled by the 0 rule)."""

    def sym(k1, k2):
        return np.hypot(k1, k2) ** alpha

    return sym


def y_symbol(iota: float = 0.05):
    """Low-frequency weight Y(k) = |k|^iota + |k|^-iota, zero mode -> 0."""

    def sym(k1, k2):
        kk = np.hypot(k1, k2)
        return kk**iota + kk**(-iota)

    return sym


def sobolev_symbol(k: float):
    """Symbol 1 + |k|^k of the inhomogeneous Sobolev weight."""

    def sym(k1, k2):
        return 1.0 + np.hypot(k1, k2) ** k

    return sym


# ---------------------------------------------------------------------------
# dyadic (Littlewood-Paley style) projections
# ---------------------------------------------------------------------------


def lp_project(field: SpectralField, j: int, kind: str = "annulus") -> SpectralField:
    """Smooth dyadic frequency projection.

    kind='annulus' keeps |k| ~ 2^j via the bump theta(|k|/2^j); 'below' is the
    telescoped sum over j' < j (zero mode included); 'at_or_above' its
    complement.  For every nonzero mode the annulus projections over the
    resolvable j-range sum to 1.
    """
    grid = field.grid
    r = grid.k_abs / float(2.0**j)
    if kind == "annulus":
        mult = theta_bump(r)
    elif kind == "below":
        mult = transition_bump(2.0 * r)
        mult[0, 0] = 1.0
    elif kind == "at_or_above":
        mult = 1.0 - transition_bump(2.0 * r)
        mult[0, 0] = 0.0
    else:
        raise ValueError(f"unknown projection kind {kind!r}")
    return SpectralField(grid, field.coeffs * mult, field.is_real)


def lp_block_range(grid: GridSpec) -> range:
    """Dyadic indices j for which the annulus 2^j*[1/2, 2] meets the grid."""
    lo = int(np.floor(np.log2(grid.k_min))) - 1
    hi = int(np.ceil(np.log2(grid.k_abs.max()))) + 2
    return range(lo, hi + 1)


# ---------------------------------------------------------------------------
# vector fields
# ---------------------------------------------------------------------------


class VectorFieldTag(Enum):
    PARTIAL1 = "partial1"
    PARTIAL2 = "partial2"
    OMEGA = "omega"       # rotation generator x1 d2 - x2 d1
    SIGMA = "sigma"       # scaling generator  x1 d1 + x2 d2


def margin_mass_fraction(field: SpectralField) -> float:
    """Fraction of the squared L^2 mass in the outer 10% frame of the box."""
    v = np.abs(field.values) ** 2
    total = v.sum()
    if total == 0.0:
        return 0.0
    return float(v[field.grid.margin_mask].sum() / total)


def _check_margin(field: SpectralField, op_name: str):
    frac = margin_mass_fraction(field)
    if frac >= 0.01:
        warnings.warn(
            f"{op_name}: {100 * frac:.1f}% of the field mass lies in the outer "
            "10% margin; coordinate weights are unreliable there",
            BoundaryMarginWarning,
            stacklevel=3,
        )


def apply_vector_field(field: SpectralField, tag: VectorFieldTag) -> SpectralField:
    """Apply one generator: spectral derivative, rotation, or scaling field.

    Omega and Sigma multiply spectral derivatives by the centered coordinates
    in physical space, so they require the field to be localized (margin
    warning otherwise).
    """
    grid = field.grid
    K1, K2 = grid.wavenumbers
    if tag is VectorFieldTag.PARTIAL1:
        return SpectralField(grid, field.coeffs * (1j * K1), field.is_real)
    if tag is VectorFieldTag.PARTIAL2:
        return SpectralField(grid, field.coeffs * (1j * K2), field.is_real)

    _check_margin(field, tag.value)
    d1 = inverse_transform(SpectralField(grid, field.coeffs * (1j * K1), False))
    d2 = inverse_transform(SpectralField(grid, field.coeffs * (1j * K2), False))
    X1, X2 = grid.coords
    if tag is VectorFieldTag.OMEGA:
        out = X1 * d2 - X2 * d1
    elif tag is VectorFieldTag.SIGMA:
        out = X1 * d1 + X2 * d2
    else:
        raise ValueError(f"unknown vector field {tag}")
    if field.is_real:
        out = out.real
    return forward_transform(out, grid)


def gamma_multiindices(ell: int) -> list[tuple[VectorFieldTag, ...]]:
    """All weighted-derivative words of total weight <= ell.

    A word is Sigma^g1 Omega^g2 (third-derivative block)^g3 with
    g1 + g2 + g3 <= ell; each third-derivative block contributes one choice of
    a degree-3 monomial in (d1, d2).  Words are returned outermost-first.
    """
    thirds = [
        (VectorFieldTag.PARTIAL1,) * (3 - i) + (VectorFieldTag.PARTIAL2,) * i
        for i in range(4)
    ]
    words: list[tuple[VectorFieldTag, ...]] = []
    for g1 in range(ell + 1):
        for g2 in range(ell + 1 - g1):
            for g3 in range(ell + 1 - g1 - g2):
                for blocks in combinations_with_replacement(thirds, g3):
                    word = (VectorFieldTag.SIGMA,) * g1 + (VectorFieldTag.OMEGA,) * g2
                    for b in blocks:
                        word = word + b
                    words.append(word)
    return words


def apply_gamma(field: SpectralField, word: tuple[VectorFieldTag, ...]) -> SpectralField:
    """Apply a word of vector fields, innermost (rightmost) factor first."""
    out = field
    for tag in reversed(word):
        out = apply_vector_field(out, tag)
    return out


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------


def norm_l2(field: SpectralField) -> float:
    """Continuum L^2(box) norm, computed on the coefficient side (Parseval)."""
    return float(field.grid.box_length * np.linalg.norm(field.coeffs))


def norm_lp(field: SpectralField, p) -> float:
    """Grid L^p norm with the quadrature weight (L/n)^2; p = inf is the grid sup."""
    if p == 2:
        return norm_l2(field)
    v = np.abs(field.values)
    if p == np.inf or p == "inf":
        return float(v.max())
    w = field.grid.dx ** 2
    return float((np.sum(v**p) * w) ** (1.0 / p))


def weighted_sobolev_norm(field: SpectralField, k: float, p, ell: int = 0,
                          iota: float | None = None) -> float:
    """Weighted Sobolev norm sum_{|gamma|<=ell} ||(1 + Lambda^k) Gamma^gamma u||_p.

    Gamma words use the spatial scaling field Sigma in place of the space-time
    one (whose time part is assembled by the evolution diagnostics).  If
    ``iota`` is given, the low-frequency weight Y is applied as well.
    """
    total = 0.0
    sob = sobolev_symbol(k)
    for word in gamma_multiindices(ell):
        g = apply_gamma(field, word)
        g = apply_multiplier(g, sob)
        if iota is not None:
            g = apply_multiplier(g, y_symbol(iota))
        total += norm_lp(g, p)
    return total


def dealiased_product(f: SpectralField, g: SpectralField) -> SpectralField:
    """Pointwise product with the 2/3-rule mask applied afterwards."""
    f._check_same_grid(g)
    vals = f.values * g.values
    return forward_transform(vals, f.grid).dealias()


# ---------------------------------------------------------------------------
# trial data
# ---------------------------------------------------------------------------


def random_localized_field(grid: GridSpec, rng: np.random.Generator,
                           n_bumps: int = 4, k_scale: float = 4.0,
                           amplitude: float = 1.0) -> SpectralField:
    """Superposition of modulated Gaussian bumps, localized inside the margin.

    Centers are confined to the central 60% of the box and widths chosen so
    the tails are negligible at the boundary; each bump carries a random
    plane-wave modulation so the spectrum is broad.
    """
    L = grid.box_length
    X1, X2 = grid.coords
    out = np.zeros_like(X1)
    for _ in range(n_bumps):
        c = rng.uniform(-0.3 * L, 0.3 * L, size=2)
        w = rng.uniform(L / 24.0, L / 10.0)
        a = amplitude * rng.uniform(0.3, 1.0) * rng.choice([-1.0, 1.0])
        kvec = rng.uniform(-k_scale, k_scale, size=2) * (2.0 * np.pi / L)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        r2 = (X1 - c[0]) ** 2 + (X2 - c[1]) ** 2
        out += a * np.exp(-r2 / (2.0 * w**2)) * np.cos(kvec[0] * X1 + kvec[1] * X2 + phase)
    return forward_transform(out, grid)


# ---------------------------------------------------------------------------
# snapshot serialization
# ---------------------------------------------------------------------------


def save_field(field: SpectralField, path, name: str = "field", time: float = 0.0):
    """Write coefficients as row-major little-endian complex128 plus a JSON header."""
    path = Path(path)
    data = np.ascontiguousarray(field.coeffs.astype("<c16"))
    data.tofile(path.with_suffix(".bin"))
    header = {
        "n": field.grid.n_per_axis,
        "L": field.grid.box_length,
        "time": time,
        "name": name,
        "is_real": field.is_real,
    }
    path.with_suffix(".json").write_text(json.dumps(header, indent=1))


def load_field(path) -> tuple[SpectralField, dict]:
    """Read a snapshot written by save_field; returns (field, header)."""
    path = Path(path)
    header = json.loads(path.with_suffix(".json").read_text())
    n = int(header["n"])
    coeffs = np.fromfile(path.with_suffix(".bin"), dtype="<c16").reshape(n, n)
    grid = GridSpec(n, float(header["L"]))
    return SpectralField(grid, coeffs.astype(np.complex128), bool(header.get("is_real", False))), header
