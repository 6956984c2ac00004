"""Coarse observation operators and the nudging admissibility test.

Two interpolant families approximate a field from coarse data at resolution h:
spectral projection onto modes max(|kx|, |ky|) <= K with h = 1/(K + 1), and
averaging over an M x M grid of square boxes with h = 1/M.  Both are linear,
idempotent and L2-contractive, and satisfy the approximation bound

    ||phi - I_h(phi)||_L2^2 <= c0 * h**2 * ||phi||_H1^2

with c0 = 1/(4*pi**2) for the projection (Parseval tail, sharp) and
c0 = 1/pi**2 for box means (per-box Poincare inequality).  `verify_bound`
certifies the constant empirically over a random ensemble; `admissibility`
evaluates the nudging condition mu * c0 * h**2 <= nu that the synchronization
and convergence guarantees assume (a factor-4 strict form gates the bounds on
assimilated difference quotients).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .spectral import GridSpec, SpectralField, norm, random_field

PROJECTION_C0 = 1.0 / (4.0 * np.pi**2)
BOX_AVERAGE_C0 = 1.0 / np.pi**2


@dataclass(frozen=True)
class SpectralProjection:
    """Keep modes with max(|kx|, |ky|) <= modes; coarse resolution 1/(modes+1)."""

    modes: int

    def __post_init__(self) -> None:
        if self.modes < 1:
            raise ValueError(f"projection needs at least one mode, got {self.modes}")

    @property
    def h(self) -> float:
        return 1.0 / (self.modes + 1)

    @property
    def default_c0(self) -> float:
        return PROJECTION_C0


@dataclass(frozen=True)
class BoxAverage:
    """Average over an boxes x boxes partition of the torus; resolution 1/boxes."""

    boxes: int

    def __post_init__(self) -> None:
        if self.boxes < 1:
            raise ValueError(f"box average needs at least one box, got {self.boxes}")

    @property
    def h(self) -> float:
        return 1.0 / self.boxes

    @property
    def default_c0(self) -> float:
        return BOX_AVERAGE_C0


InterpolantSpec = Union[SpectralProjection, BoxAverage]


def interpolate(field: SpectralField, spec: InterpolantSpec) -> SpectralField:
    """Apply the observation operator I_h to a field.

    Spectral projection truncates coefficients directly.  Box averaging is
    computed on the physical grid (grid size must be a multiple of the box
    count) and transformed back; its output is generally neither
    divergence-free nor band-limited, only mean-free.
    """
    if isinstance(spec, SpectralProjection):
        g = field.grid
        mask = (np.abs(g.k[0]) <= spec.modes) & (np.abs(g.k[1]) <= spec.modes)
        return SpectralField(g, field.coeffs * mask)
    if isinstance(spec, BoxAverage):
        g = field.grid
        if g.n % spec.boxes != 0:
            raise ValueError(
                f"box count {spec.boxes} does not divide the grid size {g.n}"
            )
        b = g.n // spec.boxes
        vals = field.physical()
        means = vals.reshape(2, spec.boxes, b, spec.boxes, b).mean(axis=(2, 4))
        flat = np.repeat(np.repeat(means, b, axis=1), b, axis=2)
        return SpectralField.from_physical(g, flat)
    raise TypeError(f"unknown interpolant spec {spec!r}")


def admissibility(
    nu: float,
    mu: float,
    spec: InterpolantSpec,
    strict: bool = False,
    c0: float | None = None,
) -> bool:
    """Evaluate mu * c0 * h**2 <= nu (times 4 when strict), boundary inclusive.

    mu = 0 is always admissible.  The non-strict form is the synchronization
    condition; the strict form is what the assimilated difference-quotient
    bounds assume.
    """
    if nu <= 0:
        raise ValueError(f"viscosity must be positive, got {nu}")
    if mu < 0:
        raise ValueError(f"nudging gain must be nonnegative, got {mu}")
    if mu == 0:
        return True
    c0 = spec.default_c0 if c0 is None else c0
    factor = 4.0 if strict else 1.0
    return factor * mu * c0 * spec.h**2 <= nu


@dataclass(frozen=True)
class InterpolantBoundReport:
    """Empirical certificate for the approximation bound of one interpolant."""

    spec: InterpolantSpec
    grid_n: int
    c0: float
    h: float
    ensemble: int
    max_ratio: float
    sharpness: float
    passed: bool


def verify_bound(
    spec: InterpolantSpec,
    grid: GridSpec,
    ensemble: int = 100,
    seed: int = 0,
    c0: float | None = None,
) -> InterpolantBoundReport:
    """Check ||phi - I_h(phi)||^2 <= c0 h^2 ||phi||_H1^2 over a random ensemble.

    Draws divergence-free fields alternating between the full dealiased band
    and a low-mode annulus, tracks the worst ratio, and passes when it stays
    at or below c0 (tiny rounding slack).  `sharpness` is max_ratio / c0, a
    measure of how much of the constant the ensemble exercised.
    """
    if ensemble < 1:
        raise ValueError(f"ensemble size must be positive, got {ensemble}")
    c0 = spec.default_c0 if c0 is None else c0
    rng = np.random.default_rng(seed)
    h_sq = spec.h**2
    max_ratio = 0.0
    for trial in range(ensemble):
        kmax = None if trial % 2 == 0 else 6
        phi = random_field(grid, rng, kmin=1, kmax=kmax)
        residual = norm(phi - interpolate(phi, spec)) ** 2
        ratio = residual / (h_sq * norm(phi, "h1") ** 2)
        max_ratio = max(max_ratio, ratio)
    return InterpolantBoundReport(
        spec=spec,
        grid_n=grid.n,
        c0=c0,
        h=spec.h,
        ensemble=ensemble,
        max_ratio=max_ratio,
        sharpness=max_ratio / c0,
        passed=bool(max_ratio <= c0 * (1.0 + 1e-12)),
    )
