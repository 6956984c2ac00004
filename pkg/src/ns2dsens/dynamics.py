"""Right-hand sides of the coupled flow, assimilation and sensitivity systems.

All systems share one skeleton on the dealiased band: advective transport
B(a, b), viscous damping through the Stokes operator A, optional body forcing,
and optional nudging mu * P_sigma(I_h(target - current)) toward coarse
observations of a reference field.  The evolved combinations are

    u    d/dt u  = -nu1 A u  - B(u, u) + f                        (flow)
    v    d/dt v  = -nu  A v  - B(v, v) + f + nudge(u, v)          (assimilated)
    ut   d/dt ut = -nu1 A ut - B(ut, u) - B(u, ut) - A u          (sensitivity)
    vt   d/dt vt = -nu1 A vt - B(vt, v) - B(v, vt) - A v + nudge(ut, vt)
    d    d/dt d  = -nu2 A d  - B(d, u1) - B(u2, d) - A u1         (quotient)
    dp   d/dt dp = -nu2 A dp - B(dp, v1) - B(v2, dp) - A v1 + nudge(d, dp)

where sensitivities differentiate with respect to the viscosity and the
quotient fields are the exact evolution of (u1 - u2) / (nu1 - nu2) and its
assimilated counterpart.  Nudging differences are interpolated once
(I_h is linear), truncated to the dealiased band and Leray-projected, so every
right-hand side stays divergence-free, mean-free and band-limited.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Mapping, Union

from .interpolants import InterpolantSpec, interpolate
from .spectral import GridSpec, SpectralField, bilinear, leray_project, stokes_apply

ForcingLike = Union[None, SpectralField, Callable[[float], SpectralField]]


@dataclass(frozen=True)
class PhysicsParams:
    """Viscosities, nudging gain, forcing provider and observation operator.

    nu1 is the viscosity of the reference flow, nu2 the second viscosity used
    by perturbed and assimilating systems.  Forcing may be None (unforced), a
    constant field, or a callable of time; constant fields are projected
    (band-limited, divergence-free, mean-free) on ingestion, callables on
    every evaluation.
    """

    nu1: float
    nu2: float
    mu: float = 0.0
    forcing: ForcingLike = None
    interp: InterpolantSpec | None = None

    def __post_init__(self) -> None:
        if self.nu1 <= 0 or self.nu2 <= 0:
            raise ValueError(f"viscosities must be positive, got {self.nu1}, {self.nu2}")
        if self.mu < 0:
            raise ValueError(f"nudging gain must be nonnegative, got {self.mu}")
        if self.mu > 0 and self.interp is None:
            raise ValueError("nudging with mu > 0 requires an interpolant")
        if isinstance(self.forcing, SpectralField):
            projected = leray_project(self.forcing.band_limited())
            object.__setattr__(self, "forcing", projected)
        elif self.forcing is not None and not callable(self.forcing):
            raise ValueError(f"forcing must be None, a field or a callable, got {self.forcing!r}")


def with_viscosity2(p: PhysicsParams, nu2: float) -> PhysicsParams:
    """Copy of p with nu2 replaced.

    Bypasses construction so the already-projected forcing object is reused
    bit-for-bit; re-projecting would perturb low-order bits and break exact
    reproducibility between switched and unswitched runs.
    """
    if nu2 <= 0:
        raise ValueError(f"viscosities must be positive, got {nu2}")
    q = object.__new__(PhysicsParams)
    for name in ("nu1", "nu2", "mu", "forcing", "interp"):
        object.__setattr__(q, name, getattr(p, name))
    object.__setattr__(q, "nu2", nu2)
    return q


def forcing_at(p: PhysicsParams, grid: GridSpec, t: float) -> SpectralField:
    """Projected forcing field at time t on the given grid."""
    f = p.forcing
    if f is None:
        return SpectralField.zero(grid)
    if isinstance(f, SpectralField):
        field = f
    else:
        field = leray_project(f(t).band_limited())
    if field.grid.n != grid.n:
        raise ValueError(f"forcing grid {field.grid.n} does not match state grid {grid.n}")
    return field


def _nudge(p: PhysicsParams, target: SpectralField, current: SpectralField) -> SpectralField:
    """mu * P_sigma(I_h(target - current)), truncated to the dealiased band.

    The difference is interpolated once; with a linear interpolant this equals
    I_h(target) - I_h(current) and vanishes exactly when the fields coincide.
    """
    assert p.interp is not None
    diff = interpolate(target - current, p.interp)
    return p.mu * leray_project(diff.band_limited())


def dq_field(a: SpectralField, b: SpectralField, nu_a: float, nu_b: float) -> SpectralField:
    """Difference quotient (a - b) / (nu_a - nu_b) of two fields in viscosity."""
    if nu_a == nu_b:
        raise ValueError(f"difference quotient needs distinct viscosities, got {nu_a} twice")
    return (a - b) / (nu_a - nu_b)


class SystemKind(str, Enum):
    NSE = "nse"
    DA = "da"
    NSE_SENS = "nse_sens"
    DA_SENS = "da_sens"
    DQ_DIRECT = "dq_direct"
    DA_DQ_DIRECT = "da_dq_direct"


_FIELDS: dict[SystemKind, tuple[str, ...]] = {
    SystemKind.NSE: ("u",),
    SystemKind.DA: ("u", "v"),
    SystemKind.NSE_SENS: ("u", "ut"),
    SystemKind.DA_SENS: ("u", "ut", "v", "vt"),
    SystemKind.DQ_DIRECT: ("u1", "u2", "d"),
    SystemKind.DA_DQ_DIRECT: ("u1", "u2", "d", "v1", "v2", "dp"),
}

# Fields that start from zero unless the caller supplies initial data.
_ZERO_DEFAULT = frozenset({"ut", "vt", "d", "dp"})

# Fields evolved with nu2; everything else uses nu1.  Assimilated sensitivity
# runs keep v and vt at nu1, the viscosity the derivative is taken at.
_NU2_FIELDS: dict[SystemKind, frozenset[str]] = {
    SystemKind.NSE: frozenset(),
    SystemKind.DA: frozenset({"v"}),
    SystemKind.NSE_SENS: frozenset(),
    SystemKind.DA_SENS: frozenset(),
    SystemKind.DQ_DIRECT: frozenset({"u2", "d"}),
    SystemKind.DA_DQ_DIRECT: frozenset({"u2", "v2", "d", "dp"}),
}

_NUDGED: dict[SystemKind, dict[str, str]] = {
    SystemKind.NSE: {},
    SystemKind.DA: {"v": "u"},
    SystemKind.NSE_SENS: {},
    SystemKind.DA_SENS: {"v": "u", "vt": "ut"},
    SystemKind.DQ_DIRECT: {},
    SystemKind.DA_DQ_DIRECT: {"v1": "u1", "v2": "u2", "dp": "d"},
}


@dataclass(frozen=True)
class SystemSpec:
    """Which coupled stack to integrate, and its per-field wiring.

    Fields are listed in intra-step evaluation order: reference flows first,
    then quotient and sensitivity fields, then assimilating copies.
    linear_only disables the advective products, a diagnostic mode that turns
    every equation into a forced Stokes flow.
    """

    kind: SystemKind
    linear_only: bool = False

    def __post_init__(self) -> None:
        if not isinstance(self.kind, SystemKind):
            object.__setattr__(self, "kind", SystemKind(self.kind))

    @property
    def fields(self) -> tuple[str, ...]:
        return _FIELDS[self.kind]

    @property
    def zero_default_fields(self) -> frozenset:
        return _ZERO_DEFAULT & frozenset(self.fields)

    @property
    def nudged_fields(self) -> dict[str, str]:
        return _NUDGED[self.kind]

    def uses_nudging(self, p: PhysicsParams) -> bool:
        return bool(self.nudged_fields) and p.mu > 0

    def viscosity(self, name: str, p: PhysicsParams) -> float:
        if name not in self.fields:
            raise ValueError(f"system {self.kind.value} has no field {name!r}")
        return p.nu2 if name in _NU2_FIELDS[self.kind] else p.nu1

    def explicit_rhs(
        self, name: str, state: Mapping[str, SpectralField], p: PhysicsParams, t: float
    ) -> SpectralField:
        """Everything in the field's right-hand side except its own -nu A term."""
        if name not in self.fields:
            raise ValueError(f"system {self.kind.value} has no field {name!r}")
        lin = self.linear_only
        if name in ("u", "u1", "u2"):
            return _exp_flow(state[name], p, t, lin)
        if name == "v":
            return _exp_assimilated(state["v"], state["u"], p, t, lin)
        if name == "v1":
            return _exp_assimilated(state["v1"], state["u1"], p, t, lin)
        if name == "v2":
            return _exp_assimilated(state["v2"], state["u2"], p, t, lin)
        if name == "ut":
            return _exp_sensitivity(state["ut"], state["u"], lin)
        if name == "vt":
            out = _exp_sensitivity(state["vt"], state["v"], lin)
            if p.mu > 0:
                out = out + _nudge(p, state["ut"], state["vt"])
            return out
        if name == "d":
            return _exp_quotient(state["d"], state["u1"], state["u2"], lin)
        if name == "dp":
            out = _exp_quotient(state["dp"], state["v1"], state["v2"], lin)
            if p.mu > 0:
                out = out + _nudge(p, state["d"], state["dp"])
            return out
        raise ValueError(f"no right-hand side wired for field {name!r}")


def _advect(a: SpectralField, b: SpectralField, linear_only: bool) -> SpectralField:
    return SpectralField.zero(a.grid) if linear_only else bilinear(a, b)


def _exp_flow(x: SpectralField, p: PhysicsParams, t: float, lin: bool) -> SpectralField:
    return forcing_at(p, x.grid, t) - _advect(x, x, lin)


def _exp_assimilated(
    v: SpectralField, u_ref: SpectralField, p: PhysicsParams, t: float, lin: bool
) -> SpectralField:
    out = _exp_flow(v, p, t, lin)
    if p.mu > 0:
        out = out + _nudge(p, u_ref, v)
    return out


def _exp_sensitivity(xt: SpectralField, x: SpectralField, lin: bool) -> SpectralField:
    return -_advect(xt, x, lin) - _advect(x, xt, lin) - stokes_apply(x)


def _exp_quotient(
    d: SpectralField, a1: SpectralField, a2: SpectralField, lin: bool
) -> SpectralField:
    return -_advect(a2, d, lin) - _advect(d, a1, lin) - stokes_apply(a1)


def rhs_nse(
    u: SpectralField,
    p: PhysicsParams,
    t: float = 0.0,
    nu: float | None = None,
    linear_only: bool = False,
) -> SpectralField:
    """Flow tendency f - nu A u - B(u, u); nu defaults to p.nu1."""
    nu = p.nu1 if nu is None else nu
    return _exp_flow(u, p, t, linear_only) - nu * stokes_apply(u)


def rhs_da(
    v: SpectralField,
    u_ref: SpectralField,
    p: PhysicsParams,
    t: float = 0.0,
    nu: float | None = None,
    linear_only: bool = False,
) -> SpectralField:
    """Assimilated tendency rhs_nse(v) + mu P_sigma(I_h(u_ref - v)); nu defaults to p.nu2."""
    nu = p.nu2 if nu is None else nu
    return _exp_assimilated(v, u_ref, p, t, linear_only) - nu * stokes_apply(v)


def rhs_sens(
    ut: SpectralField,
    u: SpectralField,
    p: PhysicsParams,
    nu: float | None = None,
    linear_only: bool = False,
) -> SpectralField:
    """Viscosity-sensitivity tendency -B(ut, u) - B(u, ut) - nu A ut - A u."""
    nu = p.nu1 if nu is None else nu
    return _exp_sensitivity(ut, u, linear_only) - nu * stokes_apply(ut)


def rhs_da_sens(
    vt: SpectralField,
    v: SpectralField,
    ut: SpectralField,
    p: PhysicsParams,
    nu: float | None = None,
    linear_only: bool = False,
) -> SpectralField:
    """Assimilated sensitivity tendency: rhs_sens in v plus nudging toward ut."""
    nu = p.nu1 if nu is None else nu
    out = _exp_sensitivity(vt, v, linear_only)
    if p.mu > 0:
        out = out + _nudge(p, ut, vt)
    return out - nu * stokes_apply(vt)


def rhs_dq(
    d: SpectralField,
    u1: SpectralField,
    u2: SpectralField,
    p: PhysicsParams,
    nu: float | None = None,
    linear_only: bool = False,
) -> SpectralField:
    """Quotient tendency -B(d, u1) - B(u2, d) - nu A d - A u1; nu defaults to p.nu2."""
    nu = p.nu2 if nu is None else nu
    return _exp_quotient(d, u1, u2, linear_only) - nu * stokes_apply(d)


def rhs_da_dq(
    dp: SpectralField,
    v1: SpectralField,
    v2: SpectralField,
    d: SpectralField,
    p: PhysicsParams,
    nu: float | None = None,
    linear_only: bool = False,
) -> SpectralField:
    """Assimilated quotient tendency: rhs_dq in (v1, v2) plus nudging toward d."""
    nu = p.nu2 if nu is None else nu
    out = _exp_quotient(dp, v1, v2, linear_only)
    if p.mu > 0:
        out = out + _nudge(p, d, dp)
    return out - nu * stokes_apply(dp)
