"""Periodic lattice, real fields, and spectral calculus.

Everything downstream (evolution, Darboux charts, brackets) runs on a uniform
periodic grid with n sites per axis on a box of side ``length``.  Conventions,
fixed once here and relied on everywhere:

* forward transform carries the 1/n^dim factor, so a real field satisfies
  ``f(x) = sum_k fhat(k) exp(i k.x)`` with the plain inverse FFT;
* the wavenumber set per axis is {2*pi*m/L : m = -n/2+1 .. n/2}, stored in FFT
  layout with the Nyquist slot assigned the positive value;
* reality of fields appears in mode space as ``fhat(-k) = conj(fhat(k))``;
* ``inner(f, g) == L^dim * sum_k fhat(k) * conj(ghat(k))`` (Parseval).

Odd-order spectral derivatives zero the Nyquist mode (its lattice derivative
is not representable as a real band-limited field); the Laplacian keeps the
full k^2 multiplier.  Band-limited data never meets the difference.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "Lattice",
    "ScalarField",
    "VectorField",
    "ModeVector",
    "inner",
    "dft",
    "idft",
    "spectral_gradient",
    "stack_gradient",
    "spectral_divergence",
    "spectral_laplacian",
    "conjugate_reflection",
    "hermitian_defect",
    "hermitize",
    "mode_coefficient",
    "mode_index_table",
    "sup_norm",
]


def _locked(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Lattice:
    """Uniform periodic grid standing in for the spatial slice.

    Parameters
    ----------
    dim : spatial dimension, 1 to 3
    n : sites per axis, a power of two
    length : physical box size per axis
    """

    dim: int
    n: int
    length: float

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2, or 3, got {self.dim}")
        if self.n < 4 or (self.n & (self.n - 1)) != 0:
            raise ValueError(f"n must be a power of two >= 4, got {self.n}")
        if not (self.length > 0):
            raise ValueError(f"length must be positive, got {self.length}")

    @property
    def spacing(self) -> float:
        return self.length / self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def site_count(self) -> int:
        return self.n**self.dim

    @property
    def volume(self) -> float:
        return self.length**self.dim

    def axis_wavenumbers(self) -> np.ndarray:
        """1-D wavenumbers in FFT layout, Nyquist stored with positive sign."""
        m = np.fft.fftfreq(self.n, d=1.0 / self.n)
        m[self.n // 2] = self.n // 2
        return (2.0 * np.pi / self.length) * m

    def wavenumber_grids(self) -> tuple[np.ndarray, ...]:
        k1 = self.axis_wavenumbers()
        return tuple(
            np.moveaxis(
                np.broadcast_to(k1, self.shape).copy(), self.dim - 1, axis
            )
            for axis in range(self.dim)
        )

    def ksq(self) -> np.ndarray:
        out = np.zeros(self.shape)
        for kg in self.wavenumber_grids():
            out = out + kg**2
        return out

    def coordinates(self) -> tuple[np.ndarray, ...]:
        x1 = self.spacing * np.arange(self.n)
        return tuple(
            np.moveaxis(
                np.broadcast_to(x1, self.shape).copy(), self.dim - 1, axis
            )
            for axis in range(self.dim)
        )


@dataclass(frozen=True)
class ScalarField:
    """Real scalar sample array on a lattice."""

    lattice: Lattice
    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.shape != self.lattice.shape:
            raise ValueError(
                f"field shape {arr.shape} does not match lattice shape "
                f"{self.lattice.shape}"
            )
        object.__setattr__(self, "values", _locked(arr))


@dataclass(frozen=True)
class VectorField:
    """Tuple of scalar components, one per spatial axis."""

    lattice: Lattice
    components: tuple[ScalarField, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        if len(comps) != self.lattice.dim:
            raise ValueError(
                f"expected {self.lattice.dim} components, got {len(comps)}"
            )
        for c in comps:
            if c.lattice != self.lattice:
                raise ValueError("component lattice mismatch")
        object.__setattr__(self, "components", comps)


@dataclass(frozen=True)
class ModeVector:
    """Complex Fourier coefficients of a real field, FFT layout."""

    lattice: Lattice
    coefficients: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.coefficients, dtype=complex)
        if arr.shape != self.lattice.shape:
            raise ValueError(
                f"mode array shape {arr.shape} does not match lattice shape "
                f"{self.lattice.shape}"
            )
        object.__setattr__(self, "coefficients", _locked(arr))


def _require_same_lattice(a, b):
    if a.lattice != b.lattice:
        raise ValueError("lattice mismatch between operands")


def inner(f: ScalarField, g: ScalarField) -> float:
    """L2 pairing  integral of f*g over the box  via the trapezoid-free
    periodic Riemann sum, which is exact for band-limited integrands."""
    _require_same_lattice(f, g)
    return float(f.lattice.spacing**f.lattice.dim * np.sum(f.values * g.values))


def dft(f: ScalarField) -> ModeVector:
    """Forward transform with the 1/n^dim normalization."""
    coeff = np.fft.fftn(f.values) / f.lattice.site_count
    return ModeVector(f.lattice, coeff)


def idft(m: ModeVector, tol: float = 1e-12) -> ScalarField:
    """Inverse transform back to a real field.

    Rejects mode data whose reality symmetry defect exceeds ``tol`` relative
    to the coefficient scale, rather than silently discarding an imaginary
    part.
    """
    defect = hermitian_defect(m.coefficients)
    scale = max(1.0, float(np.max(np.abs(m.coefficients))))
    if defect > tol * scale:
        raise ValueError(
            f"mode vector violates reality symmetry: defect {defect:.3e} "
            f"exceeds {tol:.1e} * scale"
        )
    values = np.fft.ifftn(m.coefficients) * m.lattice.site_count
    return ScalarField(m.lattice, values.real)


@lru_cache(maxsize=32)
def _gradient_multipliers(lattice: Lattice) -> tuple[np.ndarray, ...]:
    grids = []
    ny = lattice.n // 2
    for axis, kg in enumerate(lattice.wavenumber_grids()):
        kg = kg.copy()
        sl = [slice(None)] * lattice.dim
        sl[axis] = ny
        kg[tuple(sl)] = 0.0
        kg.setflags(write=False)
        grids.append(kg)
    return tuple(grids)


def spectral_gradient(f: ScalarField) -> VectorField:
    """Exact lattice gradient of a band-limited field, axis by axis."""
    fhat = np.fft.fftn(f.values)
    comps = []
    for kg in _gradient_multipliers(f.lattice):
        comp = np.fft.ifftn(1j * kg * fhat).real
        comps.append(ScalarField(f.lattice, comp))
    return VectorField(f.lattice, tuple(comps))


def stack_gradient(lattice: Lattice, stack: np.ndarray) -> np.ndarray:
    """Spectral gradient of a stack of fields in one batched transform.

    `stack` has shape (count, *lattice.shape); the result has shape
    (count, dim, *lattice.shape) and matches spectral_gradient applied
    slice by slice (same Nyquist rule).
    """
    axes = tuple(range(1, lattice.dim + 1))
    fhat = np.fft.fftn(stack, axes=axes)
    comps = [
        np.fft.ifftn(1j * kg[np.newaxis] * fhat, axes=axes).real
        for kg in _gradient_multipliers(lattice)
    ]
    return np.stack(comps, axis=1)


def spectral_divergence(v: VectorField) -> ScalarField:
    out = np.zeros(v.lattice.shape)
    for axis, kg in enumerate(_gradient_multipliers(v.lattice)):
        chat = np.fft.fftn(v.components[axis].values)
        out = out + np.fft.ifftn(1j * kg * chat).real
    return ScalarField(v.lattice, out)


def spectral_laplacian(f: ScalarField) -> ScalarField:
    """Analyst's Laplacian: eigenvalue -k^2 on the plane wave exp(i k.x)."""
    fhat = np.fft.fftn(f.values)
    return ScalarField(f.lattice, np.fft.ifftn(-f.lattice.ksq() * fhat).real)


def conjugate_reflection(arr: np.ndarray) -> np.ndarray:
    """conj(arr) sampled at -k, in the same FFT layout."""
    out = np.conj(arr)
    for axis in range(arr.ndim):
        out = np.flip(out, axis=axis)
        out = np.roll(out, 1, axis=axis)
    return out


def hermitian_defect(arr: np.ndarray) -> float:
    """Sup deviation from the reality symmetry fhat(-k) == conj(fhat(k))."""
    return float(np.max(np.abs(arr - conjugate_reflection(arr))))


def hermitize(arr: np.ndarray) -> np.ndarray:
    """Project onto the reality-symmetric subspace."""
    return 0.5 * (arr + conjugate_reflection(arr))


def mode_coefficient(m: ModeVector, multi_index) -> complex:
    """Coefficient at integer mode multi-index (negative entries allowed)."""
    if np.isscalar(multi_index):
        multi_index = (int(multi_index),)
    idx = tuple(int(mi) % m.lattice.n for mi in multi_index)
    if len(idx) != m.lattice.dim:
        raise ValueError("multi-index rank does not match lattice dimension")
    return complex(m.coefficients[idx])


@lru_cache(maxsize=32)
def mode_index_table(lattice: Lattice):
    """Bookkeeping for conjugate mode pairs, cached per lattice.

    Returns (conj_map, self_conjugate, representative): ``conj_map`` sends the
    flat index of k to the flat index of -k; ``self_conjugate`` marks modes
    with k == -k (zero and Nyquist combinations); ``representative`` selects
    one member of each conjugate pair plus every self-conjugate mode.
    """
    idx = np.indices(lattice.shape)
    conj_multi = tuple((-idx[a]) % lattice.n for a in range(lattice.dim))
    conj_map = np.ravel_multi_index(conj_multi, lattice.shape).ravel()
    flat = np.arange(lattice.site_count)
    self_conjugate = conj_map == flat
    representative = flat <= conj_map
    conj_map.setflags(write=False)
    self_conjugate.setflags(write=False)
    representative.setflags(write=False)
    return conj_map, self_conjugate, representative


def sup_norm(f) -> float:
    values = f.values if hasattr(f, "values") else np.asarray(f)
    return float(np.max(np.abs(values)))
