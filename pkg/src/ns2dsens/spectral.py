"""Spectral representation of mean-zero velocity fields on the periodic unit torus.

Velocity fields live on [0, 1)^2 with u(x) = sum_k c_k exp(2*pi*i k.x) over
integer wavenumber pairs k, stored as FFT-ordered coefficient arrays of shape
(2, n, n) with the component axis first.  Coefficients follow the numpy layout:
c = fft2(values) / n**2 and values = n**2 * ifft2(c).  With that normalization
Parseval gives the L2 norm directly as the root sum of squared coefficient
magnitudes, the H1 norm weights each mode by 4*pi**2*|k|**2, and the H2 norm by
the square of that factor.  The mean mode k = 0 is pinned to zero everywhere;
the Poincare constant of the mean-zero space is lambda_1 = 4*pi**2.

Nonlinear products are evaluated pointwise on the grid and truncated to the
band |k_i| <= n // 3, which makes the pseudo-spectral advective product
identical to the spectral Galerkin truncation of u . grad v.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

LAMBDA_1 = 4.0 * np.pi**2

NORM_KINDS = ("l2", "h1", "h2")


def _read_only(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class GridSpec:
    """Uniform n x n collocation grid on the unit torus.

    The dealiased band keeps modes with max(|kx|, |ky|) <= cutoff = n // 3.
    n must be even and at least 8 so the band holds at least the first two
    shells and the Nyquist row stays empty.
    """

    n: int

    def __post_init__(self) -> None:
        if self.n < 8:
            raise ValueError(f"grid size must be at least 8, got {self.n}")
        if self.n % 2 != 0:
            raise ValueError(f"grid size must be even, got {self.n}")

    @property
    def cutoff(self) -> int:
        return self.n // 3

    @cached_property
    def k(self) -> np.ndarray:
        """Integer wavenumbers, shape (2, n, n): k[0] = kx, k[1] = ky."""
        freqs = np.rint(np.fft.fftfreq(self.n, d=1.0 / self.n)).astype(np.int64)
        kx, ky = np.meshgrid(freqs, freqs, indexing="ij")
        return _read_only(np.stack([kx, ky]))

    @cached_property
    def k_sq(self) -> np.ndarray:
        """|k|^2 as integers, shape (n, n)."""
        return _read_only(self.k[0] ** 2 + self.k[1] ** 2)

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """Stokes eigenvalues 4*pi**2*|k|**2, shape (n, n)."""
        return _read_only(LAMBDA_1 * self.k_sq.astype(np.float64))

    @cached_property
    def inv_k_sq(self) -> np.ndarray:
        """1 / |k|^2 with the k = 0 entry set to zero."""
        with np.errstate(divide="ignore"):
            inv = np.where(self.k_sq > 0, 1.0 / self.k_sq, 0.0)
        return _read_only(inv)

    @cached_property
    def band_mask(self) -> np.ndarray:
        """Boolean mask of the dealiased band, shape (n, n)."""
        K = self.cutoff
        mask = (np.abs(self.k[0]) <= K) & (np.abs(self.k[1]) <= K)
        return _read_only(mask)

    @cached_property
    def points(self) -> np.ndarray:
        """Grid coordinates, shape (2, n, n): points[0] = x, points[1] = y."""
        x = np.arange(self.n) / self.n
        gx, gy = np.meshgrid(x, x, indexing="ij")
        return _read_only(np.stack([gx, gy]))


@dataclass(frozen=True)
class NormTriple:
    """L2, H1 and H2 norms of one field at one instant."""

    l2: float
    h1: float
    h2: float


@dataclass(frozen=True)
class SpectralField:
    """Immutable two-component coefficient array tied to a grid.

    Invariants: shape (2, n, n) complex, zero mean mode, and conjugate
    symmetry c(-k) = conj(c(k)) so that physical values are real.  Fields fed
    to the nonlinear term must additionally be band-limited to the dealiased
    band; `validate` checks all of these.
    """

    grid: GridSpec
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.coeffs, dtype=np.complex128)
        n = self.grid.n
        if arr.shape != (2, n, n):
            raise ValueError(f"expected coefficients of shape (2, {n}, {n}), got {arr.shape}")
        if arr.flags.writeable:
            arr = arr.copy()
            arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    @classmethod
    def zero(cls, grid: GridSpec) -> "SpectralField":
        return cls(grid, _read_only(np.zeros((2, grid.n, grid.n), dtype=np.complex128)))

    @classmethod
    def from_physical(cls, grid: GridSpec, values: np.ndarray) -> "SpectralField":
        """Transform real grid values of shape (2, n, n) to coefficients.

        The mean mode is pinned to zero: fields are represented in the
        mean-free quotient space.
        """
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (2, grid.n, grid.n):
            raise ValueError(
                f"expected values of shape (2, {grid.n}, {grid.n}), got {values.shape}"
            )
        c = np.fft.fft2(values, axes=(-2, -1)) / grid.n**2
        c[:, 0, 0] = 0.0
        return cls(grid, _read_only(c))

    def physical(self) -> np.ndarray:
        """Real grid values, shape (2, n, n)."""
        return self.grid.n**2 * np.fft.ifft2(self.coeffs, axes=(-2, -1)).real

    def band_limited(self) -> "SpectralField":
        """Truncate to the dealiased band max(|kx|, |ky|) <= n // 3."""
        return SpectralField(self.grid, _read_only(self.coeffs * self.grid.band_mask))

    def max_speed(self) -> float:
        """Largest pointwise velocity magnitude on the grid."""
        vals = self.physical()
        return float(np.sqrt(vals[0] ** 2 + vals[1] ** 2).max())

    def validate(self, tol: float = 1e-12, require_band: bool = False) -> None:
        """Raise ValueError on any invariant violation beyond tol (relative)."""
        c = self.coeffs
        scale = max(float(np.abs(c).max()), 1.0)
        if np.abs(c[:, 0, 0]).max() != 0.0:
            raise ValueError("mean mode is not zero")
        sym_err = float(np.abs(c - _conj_flip(c)).max())
        if sym_err > tol * scale:
            raise ValueError(f"conjugate symmetry violated by {sym_err:.3e}")
        if require_band:
            out = float(np.abs(c * ~self.grid.band_mask).max())
            if out > tol * scale:
                raise ValueError(f"energy outside the dealiased band: {out:.3e}")

    def divergence_max(self) -> float:
        """Largest per-mode |k . c_k|, zero for solenoidal fields."""
        k = self.grid.k
        return float(np.abs(k[0] * self.coeffs[0] + k[1] * self.coeffs[1]).max())

    def _like(self, arr: np.ndarray) -> "SpectralField":
        return SpectralField(self.grid, _read_only(arr))

    def _check_grid(self, other: "SpectralField") -> None:
        if other.grid.n != self.grid.n:
            raise ValueError(f"grid mismatch: {self.grid.n} vs {other.grid.n}")

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check_grid(other)
        return self._like(self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check_grid(other)
        return self._like(self.coeffs - other.coeffs)

    def __neg__(self) -> "SpectralField":
        return self._like(-self.coeffs)

    def __mul__(self, scalar: float) -> "SpectralField":
        return self._like(self.coeffs * complex(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar: float) -> "SpectralField":
        return self._like(self.coeffs / complex(scalar))


def _conj_flip(c: np.ndarray) -> np.ndarray:
    """Map c[..., i, j] to conj(c[..., -i mod n, -j mod n])."""
    return np.conj(np.roll(c[..., ::-1, ::-1], shift=(1, 1), axis=(-2, -1)))


def leray_project(field: SpectralField) -> SpectralField:
    """Project onto divergence-free fields: c_k -> c_k - k (k . c_k) / |k|^2.

    Diagonal per mode, idempotent and self-adjoint in L2.  The 2*pi factors of
    the true gradient cancel between numerator and denominator.
    """
    g = field.grid
    c = field.coeffs
    k = g.k
    parallel = (k[0] * c[0] + k[1] * c[1]) * g.inv_k_sq
    out = c - k * parallel
    out[:, 0, 0] = 0.0
    return SpectralField(g, _read_only(out))


def stokes_apply(field: SpectralField) -> SpectralField:
    """Apply the Stokes operator: multiply mode k by 4*pi**2*|k|**2."""
    return SpectralField(field.grid, _read_only(field.coeffs * field.grid.eigenvalues))


def _band_corners(n: int, K: int) -> list[tuple[slice, slice]]:
    """Index blocks covering max(|kx|, |ky|) <= K in FFT order on an n-grid."""
    pos = slice(0, K + 1)
    neg = slice(n - K, n)
    return [(pos, pos), (pos, neg), (neg, pos), (neg, neg)]


def _band_transfer(src: np.ndarray, n_src: int, n_dst: int, K: int) -> np.ndarray:
    """Copy the K-band of an FFT-ordered array onto a (possibly larger) grid."""
    dst = np.zeros(src.shape[:-2] + (n_dst, n_dst), dtype=src.dtype)
    for (rs, cs), (rd, cd) in zip(_band_corners(n_src, K), _band_corners(n_dst, K)):
        dst[..., rd, cd] = src[..., rs, cs]
    return dst


def bilinear(u: SpectralField, v: SpectralField) -> SpectralField:
    """Galerkin-truncated advective term B(u, v) = P_sigma(u . grad v).

    Both arguments are truncated to the dealiased band, the product is formed
    pointwise on a grid large enough that no aliased mode lands back inside
    the band, and the result is truncated, Leray-projected and mean-pinned.
    On grids where 3 * cutoff < n the product grid is the native one; when n
    is divisible by 3 the operands are zero-padded so the truncation stays an
    exact Galerkin projection.

    Args:
        u: advecting field (divergence-free for the usual identities).
        v: advected field.

    Returns:
        Band-limited divergence-free field on the common grid.
    """
    u._check_grid(v)
    g = u.grid
    n = g.n
    K = g.cutoff
    if 3 * K < n:
        m = n
        cu = u.coeffs * g.band_mask
        cv = v.coeffs * g.band_mask
        km = g.k
    else:
        m = 2 * (3 * K // 2 + 1)
        cu = _band_transfer(u.coeffs, n, m, K)
        cv = _band_transfer(v.coeffs, n, m, K)
        freqs = np.rint(np.fft.fftfreq(m, d=1.0 / m)).astype(np.int64)
        kxm, kym = np.meshgrid(freqs, freqs, indexing="ij")
        km = np.stack([kxm, kym])

    u_vals = m**2 * np.fft.ifft2(cu, axes=(-2, -1)).real
    # grad[i, j] holds d v_i / d x_j; derivative factor 2*pi*i*k_j.
    deriv = 2j * np.pi * km[np.newaxis, :, :, :] * cv[:, np.newaxis, :, :]
    grad = m**2 * np.fft.ifft2(deriv, axes=(-2, -1)).real
    w_vals = np.einsum("jab,ijab->iab", u_vals, grad)
    w = np.fft.fft2(w_vals, axes=(-2, -1)) / m**2

    if m != n:
        w = _band_transfer(w, m, n, K)
    else:
        w = w * g.band_mask
    out = leray_project(SpectralField(g, _read_only(w)))
    return out


def inner(u: SpectralField, v: SpectralField, kind: str = "l2") -> float:
    """Inner product in L2 ('l2'), V ('h1') or D(A) ('h2')."""
    u._check_grid(v)
    w = _norm_weights(u.grid, kind)
    return float(np.sum(w * (u.coeffs * np.conj(v.coeffs)).sum(axis=0)).real)


def norm(field: SpectralField, kind: str = "l2") -> float:
    """Norm induced by `inner` of the same kind."""
    w = _norm_weights(field.grid, kind)
    power = np.abs(field.coeffs) ** 2
    return float(np.sqrt(np.sum(w * power.sum(axis=0))))


def _norm_weights(grid: GridSpec, kind: str) -> np.ndarray:
    if kind == "l2":
        return np.ones_like(grid.eigenvalues)
    if kind == "h1":
        return grid.eigenvalues
    if kind == "h2":
        return grid.eigenvalues**2
    raise ValueError(f"unknown norm kind {kind!r}, expected one of {NORM_KINDS}")


def norms(field: SpectralField) -> NormTriple:
    """All three norms in one pass over the coefficients."""
    power = (np.abs(field.coeffs) ** 2).sum(axis=0)
    lam = field.grid.eigenvalues
    return NormTriple(
        l2=float(np.sqrt(power.sum())),
        h1=float(np.sqrt((lam * power).sum())),
        h2=float(np.sqrt((lam**2 * power).sum())),
    )


def taylor_green(grid: GridSpec) -> SpectralField:
    """Steady-shape vortex array (sin 2pi x cos 2pi y, -cos 2pi x sin 2pi y).

    Eigenfunction of the Stokes operator with eigenvalue 8*pi**2 and a fixed
    point of the advective term, so the viscous evolution from it is a pure
    exponential decay.
    """
    x, y = grid.points
    vals = np.stack([
        np.sin(2 * np.pi * x) * np.cos(2 * np.pi * y),
        -np.cos(2 * np.pi * x) * np.sin(2 * np.pi * y),
    ])
    return leray_project(SpectralField.from_physical(grid, vals).band_limited())


def random_field(
    grid: GridSpec,
    seed: int | np.random.Generator,
    kmin: int = 1,
    kmax: int | None = None,
    l2_norm: float = 1.0,
    solenoidal: bool = True,
) -> SpectralField:
    """Seeded random real field with a flat isotropic spectrum on an annulus.

    Modes with kmin <= |k| <= kmax (Euclidean, intersected with the dealiased
    band; kmax None means the whole band) receive independent complex Gaussian
    coefficients, symmetrized so values are real, optionally Leray-projected,
    and rescaled to the requested L2 norm.  Identical seeds give bit-identical
    fields.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    mask = grid.band_mask & (grid.k_sq >= kmin**2)
    if kmax is not None:
        mask = mask & (grid.k_sq <= kmax**2)
    if not mask.any():
        raise ValueError(f"no modes in the requested annulus [{kmin}, {kmax}]")
    shape = (2, grid.n, grid.n)
    c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    c *= mask
    c = 0.5 * (c + _conj_flip(c))
    c[:, 0, 0] = 0.0
    field = SpectralField(grid, _read_only(c))
    if solenoidal:
        field = leray_project(field)
    size = norm(field, "l2")
    if size == 0.0:
        raise ValueError("random field vanished after projection, widen the annulus")
    return field * (l2_norm / size)
