"""Time integration of the perturbation equation

    u_t + d_x Lap u + 1/2 d_x (u^2 + 2 u Psi) + R[Psi] = 0

on the periodic grid, plus the scaling map of the equation.

In Fourier space ``u_t = i omega u + N(u, t)`` with
``N = -1/2 d_x(u^2 + 2 u Psi) - R[Psi]``.  The stiff linear part is handled
exactly by every scheme; ``etdrk4`` is the Cox-Matthews/Kassam-Trefethen
exponential integrator with phi-functions averaged over a contour.

Internally states live in the half spectrum of ``rfft2``; recorded states are
full-spectrum ``SpectralField2`` values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.fft as sfft

from .backgrounds import Background
from .errors import ConfigurationError, DivergenceError, InvalidInputError
from .spectral import Grid2, RealField2, SpectralField2, forward_transform
from .symbols import omega

SCHEMES = ("etdrk4", "lawson_rk4", "strang")
BLOWUP_THRESHOLD = 1e8
CONTOUR_POINTS = 32


@dataclass(frozen=True)
class SolverConfig:
    dt: float = 1e-3
    T: float = 1.0
    scheme: str = "etdrk4"
    dealias: bool = True
    record_every: int = 1

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise InvalidInputError(f"dt must be positive, got {self.dt!r}")
        if not (self.T > 0 and math.isfinite(self.T)):
            raise InvalidInputError(f"T must be positive, got {self.T!r}")
        if self.scheme not in SCHEMES:
            raise InvalidInputError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise InvalidInputError(f"record_every must be a positive integer, got {self.record_every!r}")

    @property
    def n_steps(self) -> int:
        """Steps actually taken; ``dt`` is shrunk so they land exactly on ``T``."""
        return max(1, math.ceil(self.T / self.dt - 1e-9))

    @property
    def step(self) -> float:
        return self.T / self.n_steps


@dataclass(frozen=True)
class SolverState:
    t: float
    u: SpectralField2


@dataclass
class Trajectory:
    states: list
    config: SolverConfig
    background: Background

    @property
    def grid(self) -> Grid2:
        return self.states[0].u.grid

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    def __len__(self):
        return len(self.states)


def default_dt(grid: Grid2) -> float:
    """Stability heuristic ``0.5 (dx/pi)^3`` for split-step runs."""
    return 0.5 * (min(grid.dx, grid.dy) / math.pi) ** 3


# --- linear group ----------------------------------------------------------------------

def _dispersion(grid: Grid2) -> np.ndarray:
    xi, mu = grid.wavenumbers
    xi = np.where((grid.jx == grid.nx // 2)[:, None], 0.0, xi)
    return omega(xi, mu)


def linear_propagator(f: SpectralField2, dt: float) -> SpectralField2:
    """Free evolution ``exp(i dt omega(xi, mu))`` applied mode by mode."""
    return f.multiply(np.exp(1j * dt * _dispersion(f.grid)))


# --- nonlinear term --------------------------------------------------------------------

class _HalfSpectrum:
    """Wavenumber tables for the ``rfft2`` layout of one grid."""

    def __init__(self, grid: Grid2, dealias: bool):
        self.grid = grid
        jy = np.arange(grid.ny // 2 + 1)
        ky = 2.0 * np.pi * jy / grid.Ly
        kx = np.where(grid.jx == grid.nx // 2, 0.0, grid.kx)
        self.ikx = (1j * kx)[:, None] * np.ones((1, jy.size))
        self.omega = kx[:, None] * (kx[:, None] ** 2 + ky[None, :] ** 2)
        if dealias:
            mask = (np.abs(grid.jx) <= grid.nx // 3)[:, None] & (jy <= grid.ny // 3)[None, :]
        else:
            mask = np.ones((grid.nx, jy.size), dtype=bool)
        self.mask = mask

    def to_physical(self, v):
        return sfft.irfft2(v, s=self.grid.shape, norm="forward")

    def to_spectral(self, a):
        return sfft.rfft2(a, norm="forward")


class _Forcing:
    """Background samples and the dealiased residual at arbitrary times."""

    def __init__(self, bg: Background, ops: _HalfSpectrum):
        self.bg = bg
        self.ops = ops
        self.static = bg.is_zero or bg.speed == 0.0
        self._cache = {}

    def __call__(self, t):
        key = 0.0 if self.static else float(t)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        grid = self.ops.grid
        psi = self.bg.sample_x(key, grid)
        res_line = sfft.fft(self.bg.residual_x(key, grid), norm="forward")
        res = np.zeros(self.ops.mask.shape, dtype=complex)
        res[:, 0] = res_line
        res = np.where(self.ops.mask, res, 0.0)
        if len(self._cache) > 8:
            self._cache.clear()
        self._cache[key] = (psi[:, None], res)
        return self._cache[key]


def _make_rhs(bg: Background, grid: Grid2, dealias: bool):
    ops = _HalfSpectrum(grid, dealias)
    forcing = _Forcing(bg, ops)
    zero_bg = bg.is_zero
    half_ikx = -0.5 * ops.ikx
    mask = ops.mask

    def rhs(v, t):
        u = ops.to_physical(np.where(mask, v, 0.0))
        if zero_bg:
            w = u * u
            res = 0.0
        else:
            psi, res = forcing(t)
            w = u * (u + 2.0 * psi)
        out = half_ikx * ops.to_spectral(w)
        out = np.where(mask, out, 0.0)
        return out - res

    return ops, rhs


def nonlinear_rhs(u: SpectralField2, bg: Background, t: float, dealias: bool = True) -> SpectralField2:
    """``-1/2 d_x(u^2 + 2 u Psi(t)) - R[Psi](t)`` with products formed on the grid."""
    grid = u.grid
    _, rhs = _make_rhs(bg, grid, dealias)
    return _full_from_half(grid, rhs(_half_from_full(u), t))


def _full_from_half(grid: Grid2, v: np.ndarray) -> SpectralField2:
    return forward_transform(RealField2(grid, sfft.irfft2(v, s=grid.shape, norm="forward")))


def _half_from_full(f: SpectralField2) -> np.ndarray:
    return sfft.rfft2(sfft.ifft2(f.modes, norm="forward").real, norm="forward")


# --- schemes ---------------------------------------------------------------------------

def _etdrk4_coefficients(Lh: np.ndarray, h: float):
    E = np.exp(Lh)
    E2 = np.exp(0.5 * Lh)
    Q = np.zeros_like(Lh)
    f1 = np.zeros_like(Lh)
    f2 = np.zeros_like(Lh)
    f3 = np.zeros_like(Lh)
    roots = np.exp(2j * np.pi * (np.arange(1, CONTOUR_POINTS + 1) - 0.5) / CONTOUR_POINTS)
    for r in roots:
        z = Lh + r
        ez = np.exp(z)
        z3 = z**3
        Q += (np.exp(0.5 * z) - 1.0) / z
        f1 += (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3
        f2 += (2.0 + z + ez * (z - 2.0)) / z3
        f3 += (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3
    scale = h / CONTOUR_POINTS
    return E, E2, Q * scale, f1 * scale, f2 * scale, f3 * scale


def _stepper(scheme: str, L: np.ndarray, h: float, rhs: Callable):
    if scheme == "etdrk4":
        E, E2, Q, f1, f2, f3 = _etdrk4_coefficients(L * h, h)

        def step(v, t):
            Nv = rhs(v, t)
            a = E2 * v + Q * Nv
            Na = rhs(a, t + 0.5 * h)
            b = E2 * v + Q * Na
            Nb = rhs(b, t + 0.5 * h)
            c = E2 * a + Q * (2.0 * Nb - Nv)
            Nc = rhs(c, t + h)
            return E * v + f1 * Nv + 2.0 * f2 * (Na + Nb) + f3 * Nc

    elif scheme == "lawson_rk4":
        E = np.exp(L * h)
        E2 = np.exp(0.5 * L * h)

        def step(v, t):
            k1 = rhs(v, t)
            k2 = rhs(E2 * (v + 0.5 * h * k1), t + 0.5 * h)
            k3 = rhs(E2 * v + 0.5 * h * k2, t + 0.5 * h)
            k4 = rhs(E * v + h * E2 * k3, t + h)
            return E * v + (h / 6.0) * (E * k1 + 2.0 * E2 * (k2 + k3) + k4)

    else:
        E2 = np.exp(0.5 * L * h)

        def step(v, t):
            v = E2 * v
            k1 = rhs(v, t)
            k2 = rhs(v + 0.5 * h * k1, t + 0.5 * h)
            k3 = rhs(v + 0.5 * h * k2, t + 0.5 * h)
            k4 = rhs(v + h * k3, t + h)
            v = v + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
            return E2 * v

    return step


def evolve(u0: RealField2, bg: Background, cfg: SolverConfig) -> Trajectory:
    """Integrate from ``u0`` to ``cfg.T``; records every ``cfg.record_every`` steps and at ``T``.

    With dealiasing on, the initial data are first projected onto the 2/3-rule
    box so the discrete flow conserves the classical invariants exactly in the
    semi-discrete limit.
    """
    grid = u0.grid
    bg.check_grid(grid)
    ops, rhs = _make_rhs(bg, grid, cfg.dealias)
    if not np.all(np.isfinite(u0.values)):
        raise InvalidInputError("initial data contain non-finite samples")
    v = np.where(ops.mask, sfft.rfft2(u0.values, norm="forward"), 0.0)
    h = cfg.step
    step = _stepper(cfg.scheme, 1j * ops.omega, h, rhs)

    def record(vv, t):
        return SolverState(t, _full_from_half(grid, vv))

    states = [record(v, 0.0)]
    for n in range(1, cfg.n_steps + 1):
        t_prev = (n - 1) * h
        v_next = step(v, t_prev)
        size = math.sqrt(grid.area * (2.0 * np.sum(np.abs(v_next) ** 2)))
        if not math.isfinite(size) or size > BLOWUP_THRESHOLD:
            last = record(v, t_prev)
            raise DivergenceError(
                f"solution norm {size:.3e} exceeded {BLOWUP_THRESHOLD:.0e} at t={n * h:.6g}",
                last_state=last,
                trajectory=Trajectory(states, cfg, bg),
            )
        v = v_next
        if n % cfg.record_every == 0 or n == cfg.n_steps:
            states.append(record(v, n * h))
    return Trajectory(states, cfg, bg)


# --- scaling ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TimeMap:
    """``t -> lam^{-3/2} t``: original time to rescaled time."""

    lam: float

    def __call__(self, t):
        return self.lam ** (-1.5) * t

    def inverse(self, s):
        return self.lam**1.5 * s


def rescale(u0: RealField2, bg: Background, lam: float, same_grid: bool = False):
    """Scaling ``u -> lam u(lam^{3/2} t, lam^{1/2} x, lam^{1/2} y)`` of data and background.

    By default the box shrinks by ``lam^{1/2}`` and the node values are simply
    multiplied by ``lam`` (the rescaled samples sit on the rescaled nodes).  With
    ``same_grid=True`` the data stay on the original box, which needs an integer
    ``lam^{1/2}`` and data band-limited to ``1/lam^{1/2}`` of the grid band.
    """
    if not (lam > 0 and math.isfinite(lam)):
        raise InvalidInputError(f"lambda must be positive, got {lam!r}")
    root = math.sqrt(lam)
    bg_l = bg.rescaled(lam)
    if not same_grid:
        grid_l = u0.grid.scaled(1.0 / root)
        return RealField2(grid_l, lam * u0.values), bg_l, TimeMap(lam)
    m = round(root)
    if abs(root - m) > 1e-12 or m < 1:
        raise ConfigurationError(f"same-grid rescale needs integer sqrt(lambda); got lambda={lam}")
    return RealField2(u0.grid, lam * _dilate(forward_transform(u0), m).values), bg_l, TimeMap(lam)


def _dilate(f: SpectralField2, m: int) -> RealField2:
    """``f(m x, m y)`` on the same torus; raises if ``f`` is not band-limited enough."""
    from .spectral import inverse_transform

    grid = f.grid
    if m == 1:
        return inverse_transform(f)
    keep_x = np.abs(grid.jx) * m <= grid.nx // 2 - 1
    keep_y = np.abs(grid.jy) * m <= grid.ny // 2 - 1
    keep = keep_x[:, None] & keep_y[None, :]
    total = np.sum(np.abs(f.modes) ** 2)
    lost = np.sum(np.abs(f.modes[~keep]) ** 2)
    if total > 0 and lost > 1e-20 * total:
        raise ConfigurationError(
            f"data not band-limited to 1/{m} of the grid band (relative energy {lost / total:.2e} outside)"
        )
    out = np.zeros_like(f.modes)
    ix = (grid.jx[keep_x] * m) % grid.nx
    iy = (grid.jy[keep_y] * m) % grid.ny
    out[np.ix_(ix, iy)] = f.modes[np.ix_(keep_x, keep_y)]
    return inverse_transform(SpectralField2(grid, out))


def unscale(u: RealField2, lam: float, target_grid: Grid2 | None = None) -> RealField2:
    """Undo ``rescale`` on a rescaled-grid snapshot: ``u(x) = lam^{-1} u_lam(lam^{-1/2} x)``."""
    grid = target_grid or u.grid.scaled(math.sqrt(lam))
    return RealField2(grid, u.values / lam)
