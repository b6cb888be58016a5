"""Flat torus backgrounds and the pseudo-spectral differentiation toolkit.

Complex coordinates z_j = x_j + i*y_j on the unit torus (all real periods
equal to 1); a field lives on a uniform grid with N points per real
coordinate, stored with axis order (x_1, y_1, ..., x_n, y_n).  Derivatives
are exact on the discrete Fourier basis: on the mode
exp(2*pi*i*(k.x + l.y)) the operator d/dz_j d/dzbar_k acts as
-pi^2 * w_j * conj(w_k) with w = l + i*k.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class AdmissibilityError(ValueError):
    """The candidate metric lost positivity (min eigenvalue below floor)."""

    def __init__(self, min_eig: float, location: tuple[int, ...], floor: float):
        super().__init__(
            f"metric positivity lost: min eigenvalue {min_eig:.3e} < floor "
            f"{floor:.1e} at grid index {location}"
        )
        self.min_eig = min_eig
        self.location = location
        self.floor = floor


def _as_g0(n: int, g0) -> np.ndarray:
    arr = np.asarray(g0, dtype=complex)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.shape != (n, n):
        raise ValueError(f"g0 must be {n}x{n}, got {arr.shape}")
    if not np.allclose(arr, arr.conj().T, atol=1e-14):
        raise ValueError("g0 must be Hermitian")
    eig = np.linalg.eigvalsh(arr)
    if eig.min() <= 0:
        raise ValueError(f"g0 must be positive definite (eigenvalues {eig})")
    return arr


@dataclass
class TorusBackground:
    """Constant Hermitian background metric on the unit flat torus.

    The reference volume density is det(g0) * exp(f) with f a real field on
    the grid ("twist"); f = 0 gives the metric's own density.  The twist is
    expected mean-zero so the reference total volume matches the metric
    one; a nonzero mean is allowed but makes the untwisted stationary
    problem unsolvable (callers may warn).
    """

    n: int
    N: int
    g0: np.ndarray
    f: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError("complex dimension must be 1 or 2")
        if self.N < 4 or (self.N & (self.N - 1)) != 0:
            raise ValueError("grid resolution must be a power of two, >= 4")
        self.g0 = _as_g0(self.n, self.g0)
        if self.f is not None:
            self.f = np.asarray(self.f, dtype=float)
            if self.f.shape != self.shape:
                raise ValueError(f"twist field must have shape {self.shape}")
        self._build_symbols()

    # -- geometry ----------------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * (2 * self.n)

    @property
    def npoints(self) -> int:
        return self.N ** (2 * self.n)

    @property
    def spacing(self) -> float:
        return 1.0 / self.N

    @property
    def det_g0(self) -> float:
        return float(np.linalg.det(self.g0).real)

    @property
    def log_density(self) -> np.ndarray:
        """log of the reference density relative to the coordinate measure."""
        return self._log_density

    def coordinates(self) -> list[np.ndarray]:
        """Meshgrid arrays (x_1, y_1, ..., x_n, y_n) over the grid."""
        axes = [np.arange(self.N) / self.N] * (2 * self.n)
        return list(np.meshgrid(*axes, indexing="ij"))

    def field_from_modes(self, modes: Sequence[tuple]) -> np.ndarray:
        """Real field from (frequency, cos_amp, sin_amp) triples.

        Frequencies are integer tuples of length 2n ordered like the grid
        axes; the all-zero frequency contributes a constant offset.
        """
        coords = self.coordinates()
        out = np.zeros(self.shape)
        for freq, cos_amp, sin_amp in modes:
            freq = tuple(int(v) for v in freq)
            if len(freq) != 2 * self.n:
                raise ValueError(f"frequency {freq} must have length {2 * self.n}")
            phase = np.zeros(self.shape)
            for ax, fv in enumerate(freq):
                if fv:
                    phase = phase + 2.0 * np.pi * fv * coords[ax]
            out += float(cos_amp) * np.cos(phase) + float(sin_amp) * np.sin(phase)
        return out

    # -- spectral machinery --------------------------------------------------

    def _build_symbols(self) -> None:
        freqs = np.fft.fftfreq(self.N) * self.N  # integer wavenumbers
        grids = np.meshgrid(*([freqs] * (2 * self.n)), indexing="ij")
        # w_j = l_j + i k_j where k is the x_j frequency, l the y_j frequency
        self._w = np.stack(
            [grids[2 * j + 1] + 1j * grids[2 * j] for j in range(self.n)]
        )
        self._hess_symbol = np.empty((self.n, self.n) + self.shape, dtype=complex)
        for j in range(self.n):
            for k in range(self.n):
                self._hess_symbol[j, k] = -(np.pi**2) * self._w[j] * self._w[k].conj()
        absk = np.stack([np.abs(g) for g in grids])
        self._tail_mask = absk.max(axis=0) >= self.N / 3.0
        # half-spectrum symbols for the real-FFT hot path: real fields only
        # need Re/Im parts of each Hessian component, each a real field
        half = tuple(slice(None) for _ in range(2 * self.n - 1)) + (
            slice(0, self.N // 2 + 1),
        )
        self._rsym_diag = [self._hess_symbol[j, j][half].real for j in range(self.n)]
        if self.n == 2:
            off = self._hess_symbol[0, 1][half]
            self._rsym_off_re = off.real.copy()
            self._rsym_off_im = off.imag.copy()
        base = np.log(float(np.linalg.det(self.g0).real))
        self._log_density = (
            np.full(self.shape, base) if self.f is None else base + self.f
        )

    def fast_metric_fields(
        self, phi: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(det, min_eig, max_eig) of g0 + H(phi) via real transforms only."""
        axes = tuple(range(2 * self.n))
        phik = np.fft.rfftn(phi, axes=axes)
        if self.n == 1:
            g = self.g0[0, 0].real + np.fft.irfftn(
                self._rsym_diag[0] * phik, s=self.shape, axes=axes
            )
            return g, g, g
        a = self.g0[0, 0].real + np.fft.irfftn(self._rsym_diag[0] * phik, s=self.shape, axes=axes)
        d = self.g0[1, 1].real + np.fft.irfftn(self._rsym_diag[1] * phik, s=self.shape, axes=axes)
        p = self.g0[0, 1].real + np.fft.irfftn(self._rsym_off_re * phik, s=self.shape, axes=axes)
        q = self.g0[0, 1].imag + np.fft.irfftn(self._rsym_off_im * phik, s=self.shape, axes=axes)
        det = a * d - (p * p + q * q)
        half_tr = 0.5 * (a + d)
        gap = np.sqrt(np.maximum(0.25 * (a - d) ** 2 + p * p + q * q, 0.0))
        return det, half_tr - gap, half_tr + gap

    def complex_hessian(self, phi: np.ndarray) -> np.ndarray:
        """Mixed complex Hessian of a real field, shape grid + (n, n).

        Hermitian at every grid point to round-off, diagonal entries real.
        """
        phi = np.asarray(phi, dtype=float)
        if phi.shape != self.shape:
            raise ValueError(f"field must have shape {self.shape}")
        phik = np.fft.fftn(phi)
        H = np.empty(self.shape + (self.n, self.n), dtype=complex)
        for j in range(self.n):
            H[..., j, j] = np.fft.ifftn(self._hess_symbol[j, j] * phik).real
            for k in range(j + 1, self.n):
                off = np.fft.ifftn(self._hess_symbol[j, k] * phik)
                H[..., j, k] = off
                H[..., k, j] = off.conj()
        return H

    def hessian_of(self, scalar_field: np.ndarray) -> np.ndarray:
        """Same operator applied to an arbitrary real scalar field."""
        return self.complex_hessian(scalar_field)

    def tail_energy_fraction(self, phi: np.ndarray) -> float:
        """Spectral energy fraction in the outer third of wavenumbers."""
        phik = np.fft.fftn(phi)
        power = np.abs(phik) ** 2
        power.flat[0] = 0.0  # ignore the mean
        total = power.sum()
        if total < 1e-30:
            return 0.0
        return float(power[self._tail_mask].sum() / total)

    # -- linearization oracle -------------------------------------------------

    def heat_rates(self, window: int = 3) -> np.ndarray:
        """Sorted positive decay rates of the flat-background heat operator.

        The Laplacian of g0 acts on the mode with frequencies (k, l) as
        multiplication by -pi^2 <w, g0^{-1} w> with w = l + i*k; the rates
        are the positive values of that quadratic form over the integer
        window.
        """
        inv = np.linalg.inv(self.g0)
        rng = range(-window, window + 1)
        rates = set()
        import itertools

        for combo in itertools.product(rng, repeat=2 * self.n):
            if not any(combo):
                continue
            w = np.array(
                [combo[2 * j + 1] + 1j * combo[2 * j] for j in range(self.n)]
            )
            rates.add(float(np.pi**2 * (w.conj() @ inv @ w).real))
        return np.array(sorted(rates))

    def lowest_heat_rate(self) -> float:
        return float(self.heat_rates()[0])


def metric_determinant_and_eigs(
    g0: np.ndarray, H: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """det, min and max eigenvalue fields of g0 + H (closed forms, n <= 2)."""
    n = g0.shape[0]
    if n == 1:
        g = g0[0, 0].real + H[..., 0, 0].real
        return g.copy(), g.copy(), g.copy()
    a = g0[0, 0].real + H[..., 0, 0].real
    d = g0[1, 1].real + H[..., 1, 1].real
    b = g0[0, 1] + H[..., 0, 1]
    det = a * d - (b.real**2 + b.imag**2)
    half_tr = 0.5 * (a + d)
    gap = np.sqrt(np.maximum(0.25 * (a - d) ** 2 + b.real**2 + b.imag**2, 0.0))
    return det, half_tr - gap, half_tr + gap


def metric_inverse(g0: np.ndarray, H: np.ndarray) -> np.ndarray:
    """Pointwise inverse of g0 + H, shape grid + (n, n)."""
    n = g0.shape[0]
    if n == 1:
        g = g0[0, 0].real + H[..., 0, 0].real
        return (1.0 / g)[..., None, None].astype(complex)
    a = g0[0, 0].real + H[..., 0, 0].real
    d = g0[1, 1].real + H[..., 1, 1].real
    b = g0[0, 1] + H[..., 0, 1]
    det = a * d - (b.real**2 + b.imag**2)
    inv = np.empty(H.shape, dtype=complex)
    inv[..., 0, 0] = d / det
    inv[..., 1, 1] = a / det
    inv[..., 0, 1] = -b / det
    inv[..., 1, 0] = -b.conj() / det
    return inv
