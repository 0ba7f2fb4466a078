"""Dispersion symbols, dyadic arithmetic and Littlewood-Paley cutoffs.

Frequency shells are measured in ``xi^2 + mu^2`` (projectors) or in the group
velocity ``h = 3 xi^2 + mu^2`` (sharp probe supports), so a shell index ``H``
corresponds to spatial wavenumbers of size about ``sqrt(H)``.

The base bump is

    eta0(t) = 1                                  |t| <= 1
            = g(2 - |t|) / (g(2 - |t|) + g(|t| - 1))   1 < |t| < 2
            = 0                                  |t| >= 2

with ``g(s) = exp(-1/s)``.  Block ``1`` of every decomposition is ``eta0``
itself; blocks ``N >= 2`` use ``eta0(t/N) - eta0(2t/N)``.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidInputError
from .spectral import SpectralField2


def omega(xi, mu):
    """Linear dispersion symbol ``xi (xi^2 + mu^2)``."""
    xi = np.asarray(xi, dtype=float)
    return xi * (xi**2 + np.asarray(mu, dtype=float) ** 2)


def group_velocity(xi, mu):
    """``d omega / d xi = 3 xi^2 + mu^2``."""
    return 3.0 * np.asarray(xi, dtype=float) ** 2 + np.asarray(mu, dtype=float) ** 2


def resonance(xi1, mu1, xi2, mu2):
    """Three-wave resonance ``omega(k1 + k2) - omega(k1) - omega(k2)``.

    The two single-wave terms are summed first so swapping the waves is exact.
    """
    return omega(np.add(xi1, xi2), np.add(mu1, mu2)) - (omega(xi1, mu1) + omega(xi2, mu2))


def resonance_expanded(xi1, mu1, xi2, mu2):
    """Polynomial form of the resonance, evaluated without ``omega``."""
    xi1, mu1, xi2, mu2 = (np.asarray(a, dtype=float) for a in (xi1, mu1, xi2, mu2))
    xi3 = xi1 + xi2
    mu3 = mu1 + mu2
    return (
        xi3**3 - xi1**3 - xi2**3
        + xi1 * mu2 * mu3 + xi2 * mu1 * mu3 + xi3 * mu1 * mu2
    )


def kernel_K(xi, mu):
    """``3 xi^2 - mu^2``; vanishes on the lines ``mu = +-sqrt(3) xi``."""
    return 3.0 * np.asarray(xi, dtype=float) ** 2 - np.asarray(mu, dtype=float) ** 2


def is_dyadic(n) -> bool:
    try:
        value = float(n)
    except (TypeError, ValueError):
        return False
    if not math.isfinite(value) or value < 1:
        return False
    mantissa, _ = math.frexp(value)
    return mantissa == 0.5


def check_dyadic(n, name: str = "dyadic index") -> int:
    if not is_dyadic(n):
        raise InvalidInputError(f"{name} must be a power of two >= 1, got {n!r}")
    return int(n)


def dyadic_floor(x: float) -> int:
    """Largest power of two ``L`` with ``L <= x < 2L``; inputs below 1 map to 1."""
    x = float(x)
    if not math.isfinite(x):
        raise InvalidInputError(f"dyadic_floor needs a finite input, got {x!r}")
    if x < 1.0:
        return 1
    _, exponent = math.frexp(x)
    return 1 << (exponent - 1)


def dyadic_ceil(x: float) -> int:
    """Smallest power of two ``>= x`` (at least 1)."""
    low = dyadic_floor(x)
    return low if low >= x else 2 * low


def dyadics_up_to(top: float) -> list[int]:
    """``[1, 2, 4, ..., dyadic_ceil(top)]``."""
    out = [1]
    while out[-1] < top:
        out.append(2 * out[-1])
    return out


def _glue(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = np.exp(-1.0 / s[pos])
    return out


def eta0(t):
    """Smooth even bump: 1 on ``[-1, 1]``, 0 outside ``(-2, 2)``."""
    a = np.abs(np.asarray(t, dtype=float))
    up = _glue(2.0 - a)
    down = _glue(a - 1.0)
    denom = up + down
    out = np.where(a <= 1.0, 1.0, 0.0)
    mid = (a > 1.0) & (a < 2.0)
    return np.where(mid, up / np.where(denom > 0, denom, 1.0), out)


def phi(t):
    """Dyadic annulus profile ``eta0(t) - eta0(2t)``, supported in ``1/2 < |t| < 2``."""
    return eta0(t) - eta0(2.0 * np.asarray(t, dtype=float))


def eta_block(t, N: int):
    """One-dimensional block cutoff: ``eta0`` for ``N == 1``, ``phi(t/N)`` otherwise."""
    N = check_dyadic(N, "N")
    t = np.asarray(t, dtype=float)
    if N == 1:
        return eta0(t)
    return phi(t / N)


def psi_block(xi, mu, H: int):
    """Radial block cutoff ``eta_H(xi^2 + mu^2)``."""
    return eta_block(np.asarray(xi, dtype=float) ** 2 + np.asarray(mu, dtype=float) ** 2, H)


def project_dyadic(f: SpectralField2, H: int) -> SpectralField2:
    """Smooth Littlewood-Paley projection onto ``xi^2 + mu^2 ~ H``."""
    xi, mu = f.grid.wavenumbers
    return f.multiply(psi_block(xi, mu, H))


def project_x(f: SpectralField2, N: int) -> SpectralField2:
    """Smooth projection onto ``|xi| ~ N`` (no localization in ``mu``)."""
    xi, _ = f.grid.wavenumbers
    return f.multiply(eta_block(xi, N))


def max_shell(f: SpectralField2) -> int:
    """Smallest ``H`` whose low-pass ``sum_{H' <= H} psi_H'`` is 1 on the whole grid."""
    return dyadic_ceil(float(f.grid.k2.max()))


def max_x_block(f: SpectralField2) -> int:
    return dyadic_ceil(float(np.abs(f.grid.kx).max()))


def indicator_I(xi, N: int):
    """Sharp set ``1/2 N <= |xi| <= 2N``; for ``N == 1`` all ``|xi| <= 2``."""
    N = check_dyadic(N, "N")
    a = np.abs(np.asarray(xi, dtype=float))
    if N == 1:
        return a <= 2.0
    return (a >= 0.5 * N) & (a <= 2.0 * N)


def indicator_Delta(xi, mu, H: int):
    """Sharp set of frequencies with ``group_velocity(xi, mu)`` in ``I_H``."""
    return indicator_I(group_velocity(xi, mu), H)
