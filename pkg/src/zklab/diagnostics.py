"""Conserved quantities, the modified energy and growth monitors on trajectories.

Time derivatives along a trajectory are three-point differences of recorded
states (second order, also on non-uniform record spacing).  All integrals are
grid quadratures, which are exact for the band-limited states the dealiased
solver produces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .backgrounds import Background, residual
from .errors import InsufficientStencilError, InvalidInputError
from .evolution import Trajectory
from .spectral import (
    Grid2,
    RealField2,
    SpectralField2,
    dealias,
    forward_transform,
    inverse_transform,
    sobolev_norm,
    wkinf_norm,
)
from .symbols import dyadic_ceil, dyadics_up_to, psi_block


def _integral(a: np.ndarray, grid: Grid2) -> float:
    return float(np.sum(a) * grid.cell_area)


def _gradient_sq(f: SpectralField2) -> float:
    return float(f.grid.area * np.sum(f.grid.k2 * np.abs(f.modes) ** 2))


def _psi_column(bg: Background, t: float, grid: Grid2) -> np.ndarray:
    return bg.sample_x(t, grid)[:, None]


def invariants(v: RealField2) -> tuple[float, float, float]:
    """``(int v, int v^2, 1/2 int (|grad v|^2 - v^3/3))``; the cubic uses a dealiased square."""
    grid = v.grid
    modes = forward_transform(v)
    square = inverse_transform(dealias(forward_transform(RealField2(grid, v.values**2)))).values
    i1 = _integral(v.values, grid)
    i2 = _integral(v.values**2, grid)
    i3 = 0.5 * (_gradient_sq(modes) - _integral(square * v.values, grid) / 3.0)
    return i1, i2, i3


def modified_energy(u: RealField2, bg: Background, t: float) -> float:
    """``int |grad u|^2 - 1/3 int u^2 (u + 3 Psi(t))``."""
    grid = u.grid
    psi = _psi_column(bg, t, grid)
    cubic = _integral(u.values**2 * (u.values + 3.0 * psi), grid)
    return _gradient_sq(forward_transform(u)) - cubic / 3.0


def energy_rate_rhs(u: RealField2, bg: Background, t: float, dealiased: bool = True) -> float:
    """``2 int u Lap R + int (u^2 + 2 u Psi) R - int u^2 Psi_t`` at time ``t``.

    With ``dealiased`` the residual is first projected onto the 2/3 box, which is
    the forcing the dealiased solver actually applies; the identity is then exact
    for the semi-discrete flow.
    """
    grid = u.grid
    if bg.is_zero:
        return 0.0
    res = forward_transform(residual(bg, t, grid))
    if dealiased:
        res = dealias(res)
    r = inverse_transform(res).values
    lap_r = inverse_transform(res.multiply(-grid.k2)).values
    psi = _psi_column(bg, t, grid)
    psi_t = -bg.speed * bg.sample_dx_x(t, grid)[:, None]
    uu = u.values
    return _integral(2.0 * uu * lap_r + (uu**2 + 2.0 * uu * psi) * r - uu**2 * psi_t, grid)


def _centered(values: np.ndarray, times: np.ndarray, i: int) -> float:
    """Three-point second-order derivative at interior index ``i``."""
    h0 = times[i] - times[i - 1]
    h1 = times[i + 1] - times[i]
    return float(
        -h1 / (h0 * (h0 + h1)) * values[i - 1]
        + (h1 - h0) / (h0 * h1) * values[i]
        + h0 / (h1 * (h0 + h1)) * values[i + 1]
    )


def _record_index(traj: Trajectory, t: float) -> int:
    times = traj.times
    hits = np.flatnonzero(np.isclose(times, t, rtol=0.0, atol=1e-12 * max(1.0, abs(t))))
    if hits.size == 0:
        raise InvalidInputError(f"t={t} is not a recorded time of the trajectory")
    return int(hits[0])


def _interior(traj: Trajectory, i: int) -> None:
    if len(traj) < 3:
        raise InsufficientStencilError(f"need at least 3 records for a centered difference, got {len(traj)}")
    if i <= 0 or i >= len(traj) - 1:
        raise InsufficientStencilError(f"record {i} at t={traj.times[i]} has no centered stencil")


def _physical(traj: Trajectory, i: int) -> RealField2:
    return inverse_transform(traj.states[i].u)


def energy_rate_identity(traj: Trajectory, bg: Background, t: float) -> tuple[float, float]:
    """``(dE/dt by centered difference, right side of the exact rate identity)`` at record ``t``."""
    i = _record_index(traj, t)
    _interior(traj, i)
    times = traj.times
    energies = np.array([modified_energy(_physical(traj, j), bg, times[j]) for j in (i - 1, i, i + 1)])
    lhs = _centered(energies, times[i - 1 : i + 2], 1)
    rhs = energy_rate_rhs(_physical(traj, i), bg, times[i], dealiased=traj.config.dealias)
    return lhs, rhs


@dataclass(frozen=True)
class EnergyRateReport:
    times: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray

    @property
    def scale(self) -> float:
        """Largest ``|rhs|`` over the records (``rhs`` itself may cross zero)."""
        return float(np.abs(self.rhs).max())

    @property
    def max_error(self) -> float:
        return float(np.abs(self.lhs - self.rhs).max())

    @property
    def relative_error(self) -> float:
        return self.max_error / max(self.scale, np.finfo(float).tiny)


def energy_rate_report(traj: Trajectory, bg: Background) -> EnergyRateReport:
    """Both sides of the energy-rate identity at every interior record."""
    if len(traj) < 3:
        raise InsufficientStencilError(f"need at least 3 records, got {len(traj)}")
    times = traj.times
    fields = [_physical(traj, j) for j in range(len(traj))]
    energies = np.array([modified_energy(f, bg, s) for f, s in zip(fields, times)])
    idx = range(1, len(traj) - 1)
    lhs = np.array([_centered(energies, times, i) for i in idx])
    rhs = np.array([energy_rate_rhs(fields[i], bg, times[i], traj.config.dealias) for i in idx])
    return EnergyRateReport(times[1:-1], lhs, rhs)


# --- mass growth ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GrowthEnvelope:
    """``||u(t)||^2 <= C_data exp(C_psi t)``."""

    C_data: float
    C_psi: float

    def __post_init__(self):
        if self.C_psi < 0:
            raise InvalidInputError(f"C_psi must be nonnegative, got {self.C_psi}")

    def __call__(self, t):
        return self.C_data * np.exp(self.C_psi * np.asarray(t, dtype=float))


@dataclass(frozen=True)
class GronwallReport:
    """Rates and bounds at interior records; ``mass`` covers every record."""

    times: np.ndarray
    record_times: np.ndarray
    mass: np.ndarray
    rates: np.ndarray
    bounds: np.ndarray
    tol: float
    envelope: GrowthEnvelope

    @property
    def rate_ok(self) -> np.ndarray:
        return self.rates <= self.bounds + self.tol

    @property
    def envelope_ok(self) -> np.ndarray:
        return self.mass <= self.envelope(self.record_times) * (1.0 + 1e-12)

    @property
    def passed(self) -> bool:
        return bool(self.rate_ok.all() and self.envelope_ok.all())


def background_slope_sup(bg: Background, grid: Grid2) -> float:
    """``sup |d_x Psi|``; translation invariance makes it time independent."""
    if bg.is_zero:
        return 0.0
    line = bg.sample_dx_x(0.0, grid)
    probe = Grid2(grid.nx, 8, grid.Lx, grid.Ly)
    return wkinf_norm(RealField2(probe, np.repeat(line[:, None], 8, axis=1)), 0, refine=True)


def residual_l2(bg: Background, t: float, grid: Grid2) -> float:
    if bg.is_zero:
        return 0.0
    line = bg.residual_x(t, grid)
    return math.sqrt(float(np.sum(line**2)) * grid.dx * grid.Ly)


def gronwall_check(traj: Trajectory, bg: Background, rel_tol: float = 1e-6) -> GronwallReport:
    """Check ``d/dt 1/2 ||u||^2 <= (1 + 2 sup|Psi_x|) ||u||^2 + ||R||^2`` at interior records.

    The envelope uses ``C_psi = 2 + 2 sup|Psi_x|`` and
    ``C_data = ||u0||^2 + sup_t ||R||^2 / C_psi``, which dominates any solution
    of ``y' <= (1 + 2 sup|Psi_x|) y + ||R||^2``.
    """
    if len(traj) < 3:
        raise InsufficientStencilError(f"need at least 3 records, got {len(traj)}")
    grid = traj.grid
    times = traj.times
    mass = np.array([grid.area * float(np.sum(np.abs(s.u.modes) ** 2)) for s in traj.states])
    slope = background_slope_sup(bg, grid)
    res_sq = np.array([residual_l2(bg, s, grid) ** 2 for s in times])
    idx = range(1, len(traj) - 1)
    rates = np.array([_centered(0.5 * mass, times, i) for i in idx])
    bounds = (1.0 + 2.0 * slope) * mass[1:-1] + res_sq[1:-1]
    tol = rel_tol * float(bounds.max())
    c_psi = 2.0 + 2.0 * slope
    envelope = GrowthEnvelope(C_data=float(mass[0] + res_sq.max() / c_psi), C_psi=c_psi)
    return GronwallReport(times[1:-1], times, mass, rates, bounds, tol, envelope)


# --- B^s(T) ---------------------------------------------------------------------------------

def _block_weights(grid: Grid2) -> tuple[list[int], np.ndarray]:
    xi, mu = grid.wavenumbers
    shells = dyadics_up_to(dyadic_ceil(float(grid.k2.max())))
    weights = np.stack([psi_block(xi, mu, H) ** 2 for H in shells])
    return shells, weights


def block_energies(u: SpectralField2) -> tuple[list[int], np.ndarray]:
    """``||P_H u||_{L^2}^2`` for every dyadic shell reaching the grid."""
    shells, weights = _block_weights(u.grid)
    power = np.abs(u.modes) ** 2
    return shells, u.grid.area * np.tensordot(weights, power, axes=([1, 2], [0, 1]))


def bsT_norm(traj: Trajectory, s: float) -> float:
    """``(||P_1 u(0)||^2 + sum_{H>1} H^s sup_t ||P_H u(t)||^2)^{1/2}`` over recorded times."""
    grid = traj.grid
    shells, weights = _block_weights(grid)
    sup = np.zeros(len(shells))
    for k, state in enumerate(traj.states):
        energy = grid.area * np.tensordot(weights, np.abs(state.u.modes) ** 2, axes=([1, 2], [0, 1]))
        if k == 0:
            first = energy[0]
        sup = np.maximum(sup, energy)
    total = first + sum(H**s * e for H, e in zip(shells[1:], sup[1:]))
    return float(math.sqrt(max(total, 0.0)))


# --- per-record summary --------------------------------------------------------------------

@dataclass
class DiagnosticsRecord:
    t: float
    I1: float
    I2: float
    I3: float
    invariants_of_total: bool
    modified_energy: float
    l2_rate: float
    gronwall_bound: float
    gronwall_ok: bool
    sobolev: dict = field(default_factory=dict)


def diagnostics_records(
    traj: Trajectory, bg: Background, sobolev_s=(0.0, 1.0), rel_tol: float = 1e-6
) -> list[DiagnosticsRecord]:
    """One record per state; end-point rates use one-sided second-order stencils.

    Invariants are those of ``u + Psi`` when the background decays, else of ``u``
    alone (``invariants_of_total`` says which).
    """
    if len(traj) < 3:
        raise InsufficientStencilError(f"need at least 3 records, got {len(traj)}")
    grid = traj.grid
    times = traj.times
    total = bool(bg.decays)
    mass = np.array([grid.area * float(np.sum(np.abs(s.u.modes) ** 2)) for s in traj.states])
    rates = np.gradient(0.5 * mass, times, edge_order=2)
    slope = background_slope_sup(bg, grid)
    bounds = np.array([(1.0 + 2.0 * slope) * m + residual_l2(bg, s, grid) ** 2 for m, s in zip(mass, times)])
    tol = rel_tol * float(bounds.max())
    out = []
    for k, state in enumerate(traj.states):
        u = inverse_transform(state.u)
        v = RealField2(grid, u.values + _psi_column(bg, state.t, grid)) if total else u
        i1, i2, i3 = invariants(v)
        out.append(
            DiagnosticsRecord(
                t=float(state.t),
                I1=i1,
                I2=i2,
                I3=i3,
                invariants_of_total=total,
                modified_energy=modified_energy(u, bg, state.t),
                l2_rate=float(rates[k]),
                gronwall_bound=float(bounds[k]),
                gronwall_ok=bool(rates[k] <= bounds[k] + tol),
                sobolev={float(s): sobolev_norm(state.u, s) for s in sobolev_s},
            )
        )
    return out
