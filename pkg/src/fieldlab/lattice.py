"""Periodic lattice discretization of the box, and the regulated Gaussian field.

The box [-L/2, L/2]^d is represented as a torus of N^d sites with spacing
a = L/N (site coordinates live in [0, L); only separations matter on the
torus).  The allowed momenta are p_k = 2 pi k / L for integer vectors k in
the centered cube, and the regulated field is sampled by spectral synthesis:
white noise is filtered with the square root of the per-momentum weights

    w(p) = z * exp(-(p^2 + m^2)/cutoff^2) / (p^2 + m^2),

so a sample has exactly the lattice covariance

    K(r) = (1/L^d) sum_p w(p) e^{i p.r}.

Lattice conventions make every sum a literal Riemann sum of the continuum
expression: pairings and interaction integrals carry the cell volume a^d,
and a point source (Kronecker delta) carries 1/a^d.

The cutoff is tied to the resolution by cutoff <= pi/(2a), so the Gaussian
regulator is well resolved inside the momentum grid; violating combinations
are rejected.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import FieldLabError, LatticeResolutionError

__all__ = [
    "TorusLattice",
    "SpectralDensity",
    "FieldSample",
    "SourceField",
    "Mode",
    "smallest_admissible_lattice",
    "sample_field",
    "sample_values",
    "pairing",
    "interaction_integral",
    "covariance_convolve",
    "source_from_modes",
    "zero_source",
    "scale_source",
    "uv_proxy_density",
    "uv_convolved_source",
    "save_field",
    "load_field_sample",
    "load_source_field",
]

_RESOLUTION_SLACK = 1.0 + 1e-12


@dataclass(frozen=True)
class TorusLattice:
    """Periodic cubic lattice: d axes, n sites per side, physical side length."""

    d: int
    n: int
    length: float

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be >= 1")
        if self.n < 4 or self.n % 2 != 0:
            raise ValueError("sites per side must be even and >= 4")
        if not self.length > 0:
            raise ValueError("box side must be positive")

    @property
    def spacing(self) -> float:
        return self.length / self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def n_sites(self) -> int:
        return self.n**self.d

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.d

    @property
    def max_cutoff(self) -> float:
        """Largest admissible momentum cutoff, pi / (2 a)."""
        return math.pi / (2.0 * self.spacing)

    def axis_coordinates(self) -> np.ndarray:
        return self.spacing * np.arange(self.n)

    def axis_momenta(self) -> np.ndarray:
        """Momenta 2 pi k / L in FFT layout (closed under negation mod n)."""
        return 2.0 * math.pi * np.fft.fftfreq(self.n, d=self.spacing)

    def momentum_squared(self) -> np.ndarray:
        p = self.axis_momenta()
        grids = np.meshgrid(*([p] * self.d), indexing="ij", sparse=True)
        return sum(g * g for g in grids)

    def lag_distances(self) -> np.ndarray:
        """Minimum-image Euclidean distance of every lag vector, shape n^d."""
        k = np.arange(self.n)
        axis = self.spacing * np.minimum(k, self.n - k)
        grids = np.meshgrid(*([axis] * self.d), indexing="ij", sparse=True)
        return np.sqrt(sum(g * g for g in grids))


def smallest_admissible_lattice(d: int, length: float, cutoff: float) -> TorusLattice:
    """Smallest even n >= 4 whose resolution rule admits the cutoff."""
    n = max(4, math.ceil(2.0 * length * cutoff / math.pi))
    if n % 2:
        n += 1
    return TorusLattice(d=d, n=n, length=length)


@dataclass(frozen=True, eq=False)
class SpectralDensity:
    """Per-momentum weights of the regulated (optionally rescaled) covariance."""

    lat: TorusLattice
    mass: float
    cutoff: float
    z: float
    weights: np.ndarray

    @classmethod
    def build(cls, lat: TorusLattice, mass: float, cutoff: float,
              z: float = 1.0) -> "SpectralDensity":
        if not mass > 0:
            raise ValueError("mass must be positive")
        if not z > 0:
            raise ValueError("renormalization factor must be positive")
        if cutoff > lat.max_cutoff * _RESOLUTION_SLACK:
            raise LatticeResolutionError(
                f"cutoff {cutoff:g} exceeds pi/(2a) = {lat.max_cutoff:g} for "
                f"n = {lat.n}, L = {lat.length:g}; refine the lattice"
            )
        p2m2 = lat.momentum_squared() + mass * mass
        weights = z * np.exp(-p2m2 / cutoff**2) / p2m2
        return cls(lat=lat, mass=mass, cutoff=cutoff, z=z, weights=weights)

    def lag_covariance(self) -> np.ndarray:
        """Covariance kernel K(r) on the full lag grid (real, shape n^d)."""
        return np.fft.ifftn(self.weights).real / self.lat.cell_volume

    @property
    def zero_lag(self) -> float:
        """K(0) = (1/L^d) sum_p w(p)."""
        return float(self.weights.sum()) / self.lat.length**self.lat.d


@dataclass(eq=False)
class FieldSample:
    """One real field configuration, with the seed that generated it."""

    values: np.ndarray
    lat: TorusLattice
    seed: int | None = None


@dataclass(eq=False)
class SourceField:
    """A real source on the lattice.

    ``band_limited`` and ``is_zero`` are declared properties of how the
    source was constructed (momentum modes / the zero source), not inferred
    from floating-point values; both survive covariance convolution.
    """

    values: np.ndarray
    lat: TorusLattice
    band_limited: bool = False
    is_zero: bool = False


@dataclass(frozen=True)
class Mode:
    """One momentum mode of a source: J += amplitude * cos(p_k . x + phase)."""

    k: tuple[int, ...]
    amplitude: float
    phase: float = 0.0


def sample_values(lat: TorusLattice, density: SpectralDensity,
                  rng: np.random.Generator, count: int) -> np.ndarray:
    """Draw ``count`` independent field configurations, shape (count, n, ..., n).

    White real noise is filtered in momentum space with sqrt(weights); the
    FFT of real iid Gaussians carries exactly the Hermitian correlation
    structure required, so the result is real up to roundoff and has the
    lattice covariance kernel of ``density``.
    """
    if density.lat != lat:
        raise FieldLabError("spectral density was built on a different lattice")
    axes = tuple(range(1, lat.d + 1))
    noise = rng.standard_normal((count,) + lat.shape)
    filtered = np.fft.ifftn(np.sqrt(density.weights) * np.fft.fftn(noise, axes=axes),
                            axes=axes)
    return filtered.real * lat.spacing ** (-0.5 * lat.d)


def sample_field(lat: TorusLattice, density: SpectralDensity, seed: int) -> FieldSample:
    """One Gaussian field sample; the same seed reproduces it bit for bit."""
    rng = np.random.default_rng(seed)
    return FieldSample(values=sample_values(lat, density, rng, 1)[0], lat=lat, seed=seed)


def _require_same_lattice(a, b):
    if a.lat != b.lat:
        raise FieldLabError("fields live on different lattices")


def pairing(phi, j) -> float:
    """Riemann-sum pairing a^d * sum_x phi(x) j(x); bilinear in both arguments."""
    _require_same_lattice(phi, j)
    return float(phi.lat.cell_volume * np.vdot(phi.values, j.values).real)


def interaction_integral(phi: FieldSample, v) -> float:
    """a^d * sum_x V(phi(x)); bounded by sup|V| * L^d."""
    return float(phi.lat.cell_volume * np.sum(v(phi.values)))


def covariance_convolve(j: SourceField, density: SpectralDensity) -> SourceField:
    """The field x -> (K j)(x), computed spectrally.

    Multiplication by the (strictly positive, parity-even) weights commutes
    with lattice translations and preserves both the declared momentum
    support and zero-ness of the source.
    """
    if density.lat != j.lat:
        raise FieldLabError("source and spectral density lattices differ")
    out = np.fft.ifftn(density.weights * np.fft.fftn(j.values)).real
    return SourceField(values=out, lat=j.lat, band_limited=j.band_limited,
                       is_zero=j.is_zero)


def source_from_modes(lat: TorusLattice, modes) -> SourceField:
    """Band-limited source from explicit (mode, amplitude, phase) triples."""
    values = np.zeros(lat.shape)
    x = lat.axis_coordinates()
    nonzero = False
    for mode in modes:
        k = np.asarray(mode.k, dtype=int)
        if k.shape != (lat.d,):
            raise ValueError(f"mode {mode.k} does not match dimension {lat.d}")
        if mode.amplitude == 0.0:
            continue
        nonzero = True
        arg = mode.phase
        for axis in range(lat.d):
            p = 2.0 * math.pi * k[axis] / lat.length
            shape = [1] * lat.d
            shape[axis] = lat.n
            arg = arg + (p * x).reshape(shape)
        values += mode.amplitude * np.cos(arg)
    return SourceField(values=values, lat=lat, band_limited=True,
                       is_zero=not nonzero)


def zero_source(lat: TorusLattice) -> SourceField:
    return SourceField(values=np.zeros(lat.shape), lat=lat, band_limited=True,
                       is_zero=True)


def scale_source(j: SourceField, factor: float) -> SourceField:
    return SourceField(values=factor * j.values, lat=j.lat,
                       band_limited=j.band_limited,
                       is_zero=j.is_zero or factor == 0.0)


def uv_proxy_density(lat: TorusLattice, mass: float, z: float = 1.0) -> SpectralDensity:
    """Density at the largest cutoff the lattice admits (proxy for cutoff -> inf).

    On band-limited sources the residue of the finite cutoff is exponentially
    small in (cutoff/p)^2, so this is the working stand-in for the removed
    cutoff in limit formulas.
    """
    return SpectralDensity.build(lat, mass, lat.max_cutoff, z=z)


def uv_convolved_source(j: SourceField, mass: float) -> SourceField:
    """(C j)(x) with the cutoff pushed to the lattice maximum and z = 1."""
    return covariance_convolve(j, uv_proxy_density(j.lat, mass))


# --- flat binary serialization ----------------------------------------------
# header: d, n as little-endian int64, L as little-endian float64; then the
# site values in row-major order as little-endian float64.

_HEADER = struct.Struct("<qqd")


def save_field(path, field) -> None:
    with open(Path(path), "wb") as fh:
        fh.write(_HEADER.pack(field.lat.d, field.lat.n, field.lat.length))
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())


def _load_raw(path) -> tuple[TorusLattice, np.ndarray]:
    raw = Path(path).read_bytes()
    d, n, length = _HEADER.unpack_from(raw)
    lat = TorusLattice(d=int(d), n=int(n), length=float(length))
    values = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if values.size != lat.n_sites:
        raise FieldLabError(f"field file {path} has {values.size} values, "
                            f"expected {lat.n_sites}")
    return lat, values.reshape(lat.shape).astype(float)


def load_field_sample(path) -> FieldSample:
    lat, values = _load_raw(path)
    return FieldSample(values=values, lat=lat, seed=None)


def load_source_field(path, band_limited: bool = False) -> SourceField:
    """Load a source; the file format carries no support metadata, so the
    band-limited flag must be re-declared by the caller."""
    lat, values = _load_raw(path)
    return SourceField(values=values, lat=lat, band_limited=band_limited,
                       is_zero=not values.any())
