"""Bounded background profiles and the residual operator.

Every shipped family is a y-independent traveling profile
``Psi(t, x, y) = P(x - c t)``, so samples are computed on the x axis and
broadcast.  The residual

    R[Psi] = d_t Psi + d_x Lap Psi + 1/2 d_x (Psi^2)

is evaluated from analytic samples of ``P'`` with spectral derivatives on top:
``d_t Psi = -c P'``, ``d_x Lap Psi = (P')''`` and ``1/2 d_x Psi^2 = P P'``.
Working from ``P'`` keeps the kink usable on a torus: ``tanh`` itself jumps at
the box edge but its derivative decays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .errors import ConfigurationError, InvalidInputError
from .spectral import Grid2, RealField2, forward_transform, sobolev_norm, wkinf_norm

PERIODIZATION_TOL = 1e-10


# --- Jacobi elliptic functions by arithmetic-geometric mean descent -------------------

def _agm_ladder(kappa: float, tol: float = 1e-16):
    a, b, c = [1.0], [math.sqrt(1.0 - kappa * kappa)], [kappa]
    while abs(c[-1]) > tol and len(a) < 64:
        a_next = 0.5 * (a[-1] + b[-1])
        c.append(0.5 * (a[-1] - b[-1]))
        b.append(math.sqrt(a[-1] * b[-1]))
        a.append(a_next)
    return a, b, c


def _check_modulus(kappa: float) -> float:
    kappa = float(kappa)
    if not 0.0 < kappa < 1.0:
        raise InvalidInputError(f"elliptic modulus must lie in (0, 1), got {kappa!r}")
    return kappa


def elliptic_K(kappa: float) -> float:
    """Complete elliptic integral of the first kind, modulus ``kappa``."""
    kappa = _check_modulus(kappa)
    a, _, _ = _agm_ladder(kappa)
    return math.pi / (2.0 * a[-1])


def jacobi_sn_cn_dn(u, kappa: float):
    """``(sn, cn, dn)`` of ``u`` for modulus ``kappa`` (not parameter ``m = kappa^2``)."""
    kappa = _check_modulus(kappa)
    u = np.asarray(u, dtype=float)
    a, _, c = _agm_ladder(kappa)
    quarter = math.pi / (2.0 * a[-1])
    # reduce to one period so the descent starts from a moderate angle
    period = 4.0 * quarter
    u = u - period * np.round(u / period)
    n = len(a) - 1
    ph = (2.0**n) * a[-1] * u
    for level in range(n, 0, -1):
        ph = 0.5 * (ph + np.arcsin(np.clip(c[level] / a[level] * np.sin(ph), -1.0, 1.0)))
    sn = np.sin(ph)
    cn = np.cos(ph)
    dn = np.sqrt(np.maximum(1.0 - kappa * kappa * sn * sn, 0.0))
    return sn, cn, dn


def jacobi_cn(u, kappa: float):
    return jacobi_sn_cn_dn(u, kappa)[1]


def cnoidal_params(alpha: float, gamma: float, kappa: float) -> tuple[float, float]:
    """Amplitude ``beta`` and speed ``c`` making ``alpha + beta cn^2(gamma(x - ct))`` exact."""
    if gamma <= 0:
        raise InvalidInputError(f"gamma must be positive, got {gamma!r}")
    _check_modulus(kappa)
    beta = 12.0 * kappa**2 * gamma**2
    c = alpha + 4.0 * gamma**2 * (2.0 * kappa**2 - 1.0)
    return beta, c


# --- families ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Background:
    """Zero background; base class of the traveling families."""

    family = "zero"
    # whether Psi vanishes at infinity, so that u + Psi has finite classical invariants
    decays = True

    @property
    def speed(self) -> float:
        return 0.0

    @property
    def params(self) -> dict:
        return {}

    def profile(self, s: np.ndarray) -> np.ndarray:
        return np.zeros_like(np.asarray(s, dtype=float))

    def profile_dx(self, s: np.ndarray) -> np.ndarray:
        return np.zeros_like(np.asarray(s, dtype=float))

    @property
    def is_zero(self) -> bool:
        return True

    def rescaled(self, lam: float) -> "Background":
        """Parameters of ``lam * Psi(lam^{3/2} t, lam^{1/2} x, lam^{1/2} y)``."""
        return self

    def check_grid(self, grid: Grid2) -> None:
        """Raise ``ConfigurationError`` when the box cannot host this profile."""

    def _coordinate(self, t: float, grid: Grid2) -> np.ndarray:
        return grid.x - self.speed * t

    # 1D samples along x; y-independence is implied
    def sample_x(self, t: float, grid: Grid2) -> np.ndarray:
        return self.profile(self._coordinate(t, grid))

    def sample_dx_x(self, t: float, grid: Grid2) -> np.ndarray:
        return self.profile_dx(self._coordinate(t, grid))

    def residual_x(self, t: float, grid: Grid2) -> np.ndarray:
        if self.is_zero:
            return np.zeros(grid.nx)
        p = self.sample_x(t, grid)
        dp = self.sample_dx_x(t, grid)
        d2 = sfft.ifft((1j * grid.kx) ** 2 * sfft.fft(dp)).real
        return -self.speed * dp + d2 + p * dp

    def describe(self) -> dict:
        return {"family": self.family, **self.params}


@dataclass(frozen=True)
class LineSoliton(Background):
    """``3c sech^2(sqrt(c) (x - ct) / 2)``, the KdV soliton extended in y."""

    c: float = 1.0
    family = "line_soliton"

    def __post_init__(self):
        if not self.c > 0:
            raise InvalidInputError(f"soliton speed must be positive, got {self.c!r}")

    @property
    def speed(self) -> float:
        return self.c

    @property
    def params(self) -> dict:
        return {"c": self.c}

    @property
    def is_zero(self) -> bool:
        return False

    def _coordinate(self, t, grid):
        s = grid.x - self.c * t
        return (s + 0.5 * grid.Lx) % grid.Lx - 0.5 * grid.Lx

    def profile(self, s):
        return 3.0 * self.c / np.cosh(0.5 * math.sqrt(self.c) * np.asarray(s)) ** 2

    def profile_dx(self, s):
        z = 0.5 * math.sqrt(self.c) * np.asarray(s)
        return -3.0 * self.c**1.5 * np.tanh(z) / np.cosh(z) ** 2

    def rescaled(self, lam):
        return LineSoliton(c=lam * self.c)

    def check_grid(self, grid):
        edge = float(self.profile(np.array(0.5 * grid.Lx)))
        if edge > PERIODIZATION_TOL:
            raise ConfigurationError(
                f"Lx={grid.Lx} too short for line_soliton c={self.c}: edge value {edge:.2e}"
            )


@dataclass(frozen=True)
class TanhKink(Background):
    """Front ``a tanh(b (x - ct))``; not a ZK solution, so ``R`` is a genuine forcing."""

    a: float = 1.0
    b: float = 1.0
    c: float = 0.0
    family = "tanh_kink"
    decays = False

    def __post_init__(self):
        if not self.b > 0:
            raise InvalidInputError(f"kink steepness must be positive, got {self.b!r}")

    @property
    def speed(self) -> float:
        return self.c

    @property
    def params(self) -> dict:
        return {"a": self.a, "b": self.b, "c": self.c}

    @property
    def is_zero(self) -> bool:
        return self.a == 0

    def profile(self, s):
        return self.a * np.tanh(self.b * np.asarray(s))

    def profile_dx(self, s):
        return self.a * self.b / np.cosh(self.b * np.asarray(s)) ** 2

    def rescaled(self, lam):
        return TanhKink(a=lam * self.a, b=math.sqrt(lam) * self.b, c=lam * self.c)

    def check_grid(self, grid):
        edge = abs(float(self.profile_dx(np.array(0.5 * grid.Lx))))
        if edge > PERIODIZATION_TOL:
            raise ConfigurationError(
                f"Lx={grid.Lx} too short for tanh_kink b={self.b}: edge slope {edge:.2e}"
            )


@dataclass(frozen=True)
class Cnoidal(Background):
    """``alpha + beta cn^2(gamma (x - ct); kappa)`` with ``beta, c`` from ``cnoidal_params``."""

    alpha: float = 0.0
    gamma: float = 1.0
    kappa: float = 0.9
    beta: float = field(init=False)
    c: float = field(init=False)
    family = "cnoidal"
    decays = False

    def __post_init__(self):
        beta, c = cnoidal_params(self.alpha, self.gamma, self.kappa)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "c", c)

    @property
    def speed(self) -> float:
        return self.c

    @property
    def params(self) -> dict:
        return {"alpha": self.alpha, "gamma": self.gamma, "kappa": self.kappa}

    @property
    def is_zero(self) -> bool:
        return False

    @property
    def period(self) -> float:
        """Spatial period ``2K(kappa)/gamma`` of ``cn^2``."""
        return 2.0 * elliptic_K(self.kappa) / self.gamma

    def profile(self, s):
        return self.alpha + self.beta * jacobi_cn(self.gamma * np.asarray(s), self.kappa) ** 2

    def profile_dx(self, s):
        sn, cn, dn = jacobi_sn_cn_dn(self.gamma * np.asarray(s), self.kappa)
        return -2.0 * self.beta * self.gamma * cn * sn * dn

    def rescaled(self, lam):
        return Cnoidal(alpha=lam * self.alpha, gamma=math.sqrt(lam) * self.gamma, kappa=self.kappa)

    def check_grid(self, grid):
        ratio = grid.Lx / self.period
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio) or round(ratio) < 1:
            raise ConfigurationError(
                f"Lx={grid.Lx} is not an integer multiple of the cnoidal period {self.period!r}"
            )


FAMILIES = {
    "zero": Background,
    "line_soliton": LineSoliton,
    "tanh_kink": TanhKink,
    "cnoidal": Cnoidal,
}


def make_background(family: str, **params) -> Background:
    try:
        cls = FAMILIES[family]
    except KeyError:
        raise InvalidInputError(f"unknown background family {family!r}") from None
    return cls(**params)


# --- field-level operations -------------------------------------------------------------

def _broadcast(grid: Grid2, line: np.ndarray) -> RealField2:
    return RealField2(grid, np.broadcast_to(line[:, None], grid.shape))


def sample(bg: Background, t: float, grid: Grid2) -> RealField2:
    bg.check_grid(grid)
    return _broadcast(grid, bg.sample_x(t, grid))


def sample_dx(bg: Background, t: float, grid: Grid2) -> RealField2:
    bg.check_grid(grid)
    return _broadcast(grid, bg.sample_dx_x(t, grid))


def sample_dt(bg: Background, t: float, grid: Grid2) -> RealField2:
    bg.check_grid(grid)
    return _broadcast(grid, -bg.speed * bg.sample_dx_x(t, grid))


def residual(bg: Background, t: float, grid: Grid2) -> RealField2:
    bg.check_grid(grid)
    return _broadcast(grid, bg.residual_x(t, grid))


@dataclass(frozen=True)
class HypothesisReport:
    w4inf: float
    resH3: float
    times: tuple


def hypothesis_report(bg: Background, times, grid: Grid2) -> HypothesisReport:
    """Suprema over ``times`` of ``||Psi||_{W^{4,inf}}`` and ``||R[Psi]||_{H^3}``."""
    times = tuple(float(t) for t in times)
    if not times:
        raise InvalidInputError("hypothesis_report needs at least one sample time")
    w4 = 0.0
    res = 0.0
    for t in times:
        # y-independent: every derivative is an x-derivative of P' except the zeroth
        sup0 = float(np.abs(sample(bg, t, grid).values).max())
        w4 = max(w4, sup0, wkinf_norm(sample_dx(bg, t, grid), 3, refine=True))
        res = max(res, sobolev_norm(forward_transform(residual(bg, t, grid)), 3))
    return HypothesisReport(w4inf=w4, resH3=res, times=times)
