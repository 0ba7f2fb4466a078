"""Space-time frequency lattices, X_H-type norms and Monte-Carlo estimate probes.

A ``SpaceTimeField`` holds values of a function of ``(tau, xi, mu)`` on the
lattice dual to a periodic ``(t, x, y)`` grid: ``nt`` samples over
``[0, T_probe)`` and a ``Grid2`` in space.  The Fourier transform is unitary,

    phi(tau, xi, mu) = (2 pi)^{-3/2} int e^{-i (t tau + x xi + y mu)} u dt dx dy,

so free waves ``e^{i t omega}`` concentrate at ``tau = omega`` and
``sum |phi|^2 dV`` equals the quadrature of ``int |u|^2``.

Time is periodic, so modulations ``tau - omega`` are read modulo the period
``P = nt * dtau`` and mapped into ``[-P/2, P/2)``.  Lattice-based convolutions
are cyclic; ``probe_lattice`` sizes the lattice so that no wrapped sum can land
in a support (spatial period above the summed extents, temporal period above
``max |resonance| + L1 + L2 + L3``), which makes the cyclic sum equal the
non-periodic one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.fft as sfft

from .errors import (
    ConfigurationError,
    EmptySupportError,
    InvalidInputError,
    InvalidSupportError,
    ProbeMisconfigurationError,
)
from .spectral import Grid2, RealField2, derivative_symbol, forward_transform
from .symbols import (
    check_dyadic,
    dyadics_up_to,
    eta0,
    eta_block,
    group_velocity,
    indicator_I,
    kernel_K,
    omega,
    psi_block,
    resonance,
)

BETA = 0.5
SUPPORT_MASS_TOL = 1e-10
MIN_NT = 8


# --- lattices and fields -------------------------------------------------------------------

@dataclass(frozen=True)
class SpaceTimeLattice:
    nt: int
    T: float
    grid: Grid2

    def __post_init__(self):
        if int(self.nt) != self.nt or self.nt < MIN_NT or self.nt % 2:
            raise InvalidInputError(f"nt must be an even integer >= {MIN_NT}, got {self.nt!r}")
        if not (self.T > 0 and math.isfinite(self.T)):
            raise InvalidInputError(f"T_probe must be positive, got {self.T!r}")
        object.__setattr__(self, "nt", int(self.nt))
        object.__setattr__(self, "T", float(self.T))

    @classmethod
    def from_spacings(cls, nt, nx, ny, dtau, dxi, dmu) -> "SpaceTimeLattice":
        return cls(nt, 2.0 * math.pi / dtau, Grid2(nx, ny, 2.0 * math.pi / dxi, 2.0 * math.pi / dmu))

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.nt, self.grid.nx, self.grid.ny)

    @property
    def dt(self) -> float:
        return self.T / self.nt

    @property
    def dtau(self) -> float:
        return 2.0 * math.pi / self.T

    @property
    def period(self) -> float:
        """Length ``nt * dtau`` of the periodic modulation axis."""
        return self.nt * self.dtau

    @property
    def dV(self) -> float:
        g = self.grid
        return self.dtau * (2.0 * math.pi / g.Lx) * (2.0 * math.pi / g.Ly)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.nt) * self.dt

    @property
    def tau(self) -> np.ndarray:
        return np.fft.fftfreq(self.nt, d=1.0 / self.nt) * self.dtau

    def axes(self):
        """Broadcastable ``(tau, xi, mu)`` coordinate arrays."""
        return (
            self.tau[:, None, None],
            self.grid.kx[None, :, None],
            self.grid.ky[None, None, :],
        )

    def modulation(self) -> np.ndarray:
        """``tau - omega(xi, mu)`` wrapped into ``[-P/2, P/2)``."""
        tau, xi, mu = self.axes()
        raw = tau - omega(xi, mu)
        p = self.period
        return (raw + 0.5 * p) % p - 0.5 * p

    def h(self) -> np.ndarray:
        _, xi, mu = self.axes()
        return group_velocity(xi, mu)


@dataclass(frozen=True)
class SpaceTimeField:
    lattice: SpaceTimeLattice
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.shape != self.lattice.shape:
            raise InvalidInputError(f"values shape {values.shape} does not match lattice {self.lattice.shape}")
        if not np.iscomplexobj(values):
            values = values.astype(float)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, lattice: SpaceTimeLattice) -> "SpaceTimeField":
        return cls(lattice, np.zeros(lattice.shape))

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.values)

    def l2_norm(self) -> float:
        return float(math.sqrt(np.sum(np.abs(self.values) ** 2) * self.lattice.dV))

    def inner(self, other: "SpaceTimeField") -> complex:
        _same_lattice(self, other)
        return complex(np.sum(self.values * np.conj(other.values)) * self.lattice.dV)

    def __mul__(self, a) -> "SpaceTimeField":
        return SpaceTimeField(self.lattice, a * self.values)

    __rmul__ = __mul__


def _same_lattice(*fields: SpaceTimeField) -> SpaceTimeLattice:
    lat = fields[0].lattice
    for f in fields[1:]:
        if f.lattice != lat:
            raise InvalidInputError("space-time fields live on different lattices")
    return lat


def _transform_scale(lat: SpaceTimeLattice) -> float:
    g = lat.grid
    return (2.0 * math.pi) ** -1.5 * lat.dt * g.dx * g.dy


def from_physical(lat: SpaceTimeLattice, samples: np.ndarray) -> SpaceTimeField:
    """Unitary space-time transform of ``u(t_j, x_k, y_l)`` samples."""
    samples = np.asarray(samples)
    if samples.shape != lat.shape:
        raise InvalidInputError(f"samples shape {samples.shape} does not match lattice {lat.shape}")
    return SpaceTimeField(lat, _transform_scale(lat) * sfft.fftn(samples))


def to_physical(f: SpaceTimeField) -> np.ndarray:
    return sfft.ifftn(f.values) / _transform_scale(f.lattice)


def free_wave(lat: SpaceTimeLattice, profile: np.ndarray) -> SpaceTimeField:
    """``e^{i t omega(D)} g`` with ``g``'s spatial transform given on the lattice's ``(xi, mu)`` mesh.

    Each spatial mode is placed on the tau node nearest ``omega`` (modulo the
    period) so the modulation is at most ``dtau/2``; the result has
    ``L^2`` norm ``(sum |profile|^2 dxi dmu)^{1/2}``.
    """
    profile = np.asarray(profile)
    g = lat.grid
    if profile.shape != g.shape:
        raise InvalidInputError(f"profile shape {profile.shape} does not match grid {g.shape}")
    xi, mu = g.wavenumbers
    idx = np.rint(omega(xi, mu) / lat.dtau).astype(np.int64) % lat.nt
    values = np.zeros(lat.shape, dtype=profile.dtype if np.iscomplexobj(profile) else float)
    ix, iy = np.indices(g.shape)
    values[idx, ix, iy] = profile / math.sqrt(lat.dtau)
    return SpaceTimeField(lat, values)


# --- norms -----------------------------------------------------------------------------------

def _check_annulus(f: SpaceTimeField, H: int) -> None:
    inside = indicator_I(f.lattice.h(), H)
    power = np.abs(f.values) ** 2
    total = float(power.sum())
    if total == 0.0:
        return
    outside = float(np.where(inside, 0.0, power).sum())
    if outside > SUPPORT_MASS_TOL * total:
        raise InvalidSupportError(
            f"field has relative mass {outside / total:.2e} outside the annulus h ~ {H}"
        )


def modulation_shells(lat: SpaceTimeLattice) -> list[int]:
    return dyadics_up_to(0.5 * lat.period)


def xh_norm(f: SpaceTimeField, H: int) -> float:
    """``sum_L L^{1/2} ||eta_L(tau - omega) f||_{L^2}`` for data in the annulus ``h ~ H``."""
    H = check_dyadic(H, "H")
    _check_annulus(f, H)
    return _xh(f.values, f.lattice)


def _xh(values: np.ndarray, lat: SpaceTimeLattice) -> float:
    sigma = np.abs(lat.modulation())
    power = np.abs(values) ** 2
    total = 0.0
    for L in modulation_shells(lat):
        weight = eta_block(sigma, L) ** 2
        total += math.sqrt(L) * math.sqrt(float(np.sum(weight * power)) * lat.dV)
    return total


def time_window(lat: SpaceTimeLattice, H: int, center: float) -> np.ndarray:
    """Periodized ``eta0(H^beta (t - center))`` on the lattice times."""
    s = lat.times - center
    s = (s + 0.5 * lat.T) % lat.T - 0.5 * lat.T
    return eta0(H**BETA * s)


def window_centers(lat: SpaceTimeLattice, H: int, refine: int = 1) -> np.ndarray:
    spacing = H ** (-BETA) / (4.0 * refine)
    count = max(1, math.ceil(lat.T / spacing))
    return np.arange(count) * (lat.T / count)


def f_short_norm(f: SpaceTimeField, H: int, refine: int = 1) -> float:
    """``sup_{t_H} ||F(eta0(H^{1/2}(t - t_H)) F^{-1} f)||_{X_H}`` over a lattice of centers.

    Centers are spaced at most ``H^{-1/2}/(4 refine)`` apart.
    """
    H = check_dyadic(H, "H")
    lat = f.lattice
    if 4.0 * H ** (-BETA) > lat.T:
        raise ConfigurationError(
            f"window length {4.0 * H ** (-BETA):.4g} exceeds T_probe={lat.T:.4g}"
        )
    _check_annulus(f, H)
    u = to_physical(f)
    best = 0.0
    for c in window_centers(lat, H, refine):
        w = time_window(lat, H, c)[:, None, None]
        windowed = from_physical(lat, w * u)
        best = max(best, _xh(windowed.values, lat))
    return best


# --- supports and random data -----------------------------------------------------------------

@dataclass(frozen=True)
class DyadicSupportSpec:
    """Sharp region ``xi in I_N`` (unless ``N`` is None), ``h in I_H``, ``|tau - omega| <= L``."""

    H: int
    L: int
    N: Optional[int] = None

    def __post_init__(self):
        check_dyadic(self.H, "H")
        check_dyadic(self.L, "L")
        if self.N is not None:
            check_dyadic(self.N, "N")

    def xi_extent(self) -> float:
        top = math.sqrt(2.0 * self.H / 3.0)
        return top if self.N is None else min(top, 2.0 * self.N)

    def mu_extent(self) -> float:
        return math.sqrt(2.0 * self.H)

    def widths(self) -> tuple[float, float]:
        """Smallest sharp-set widths along ``xi`` and ``mu``."""
        if self.H == 1:
            wx, wm = math.sqrt(2.0 / 3.0), math.sqrt(2.0)
        else:
            wx = math.sqrt(2.0 * self.H / 3.0) - math.sqrt(self.H / 6.0)
            wm = math.sqrt(2.0 * self.H) - math.sqrt(0.5 * self.H)
        if self.N is not None:
            wx = min(wx, 2.0 if self.N == 1 else 1.5 * self.N)
        return wx, wm

    def label(self) -> str:
        n = "inf" if self.N is None else str(self.N)
        return f"N={n};H={self.H};L={self.L}"


def support_mask(spec: DyadicSupportSpec, lat: SpaceTimeLattice) -> np.ndarray:
    _, xi, mu = lat.axes()
    spatial = indicator_I(group_velocity(xi, mu), spec.H)
    if spec.N is not None:
        spatial = spatial & indicator_I(xi, spec.N)
    return spatial & (np.abs(lat.modulation()) <= spec.L)


def _check_resolvable(spec: DyadicSupportSpec, lat: SpaceTimeLattice) -> None:
    g = lat.grid
    if spec.xi_extent() > np.abs(g.kx).max() or spec.mu_extent() > np.abs(g.ky).max():
        raise ProbeMisconfigurationError(f"{spec.label()} exceeds the lattice frequency range")
    if spec.L > 0.5 * lat.period:
        raise ProbeMisconfigurationError(
            f"{spec.label()}: L exceeds half the modulation period {0.5 * lat.period:.4g}"
        )


def trial_rng(seed: int, trial: int = 0) -> np.random.Generator:
    """Independent stream per ``(seed, trial)``, whatever order trials run in."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(trial)]))


def random_dnhl(
    spec: DyadicSupportSpec,
    lat: SpaceTimeLattice,
    seed: int,
    trial: int = 0,
    modulus: bool = False,
    mask: Optional[np.ndarray] = None,
) -> SpaceTimeField:
    """Unit-norm field with i.i.d. complex Gaussian values on the support region, zero elsewhere.

    ``modulus=True`` keeps only the absolute values, giving the nonnegative data
    that the bilinear estimates are stated for.
    """
    _check_resolvable(spec, lat)
    region = support_mask(spec, lat) if mask is None else mask
    count = int(np.count_nonzero(region))
    if count == 0:
        raise EmptySupportError(f"no lattice points in region {spec.label()}")
    rng = trial_rng(seed, trial)
    draws = rng.standard_normal(count) + 1j * rng.standard_normal(count)
    if modulus:
        draws = np.abs(draws)
        values = np.zeros(lat.shape)
    else:
        values = np.zeros(lat.shape, dtype=complex)
    values[np.broadcast_to(region, lat.shape)] = draws
    values /= math.sqrt(float(np.sum(np.abs(draws) ** 2)) * lat.dV)
    return SpaceTimeField(lat, values)


# --- trilinear functional ---------------------------------------------------------------------

def trilinear_functional(f1: SpaceTimeField, f2: SpaceTimeField, f3: SpaceTimeField):
    """``int (f1 * f2) f3`` as the cyclic lattice sum ``dV^2 sum_{q,r} f1(q) f2(r) f3(q+r)``.

    Evaluated with the convolution theorem; real inputs give a float.
    """
    lat = _same_lattice(f1, f2, f3)
    scale = lat.dV**2
    if f1.is_real and f2.is_real and f3.is_real:
        a1 = sfft.rfftn(f1.values)
        a2 = sfft.rfftn(f2.values)
        a3 = sfft.rfftn(f3.values)
        prod = (a1 * a2 * np.conj(a3)).real
        n_last = lat.shape[-1]
        weights = np.full(prod.shape[-1], 2.0)
        weights[0] = 1.0
        if n_last % 2 == 0:
            weights[-1] = 1.0
        return float(scale * np.sum(prod * weights) / np.prod(lat.shape))
    total = np.sum(sfft.fftn(f1.values) * sfft.fftn(f2.values) * sfft.ifftn(f3.values))
    return complex(scale * total)


def trilinear_bruteforce(f1: SpaceTimeField, f2: SpaceTimeField, f3: SpaceTimeField):
    """Direct ``O(M^2)`` evaluation of the cyclic triple sum; for small lattices only."""
    lat = _same_lattice(f1, f2, f3)
    a, b, c = f1.values, f2.values, f3.values
    total = 0.0
    for q in np.ndindex(*lat.shape):
        if a[q] != 0:
            total = total + a[q] * np.sum(b * np.roll(c, tuple(-k for k in q), axis=(0, 1, 2)))
    total = total * lat.dV**2
    if f1.is_real and f2.is_real and f3.is_real:
        return float(np.real(total))
    return complex(total)


def reflect(f: SpaceTimeField) -> SpaceTimeField:
    """``f(-q)`` on the lattice."""
    v = f.values
    return SpaceTimeField(f.lattice, np.roll(v[::-1, ::-1, ::-1], 1, axis=(0, 1, 2)))


# --- lattice sizing ----------------------------------------------------------------------------

def _spatial_points(spec: DyadicSupportSpec, xi: np.ndarray, mu: np.ndarray) -> np.ndarray:
    X, M = np.meshgrid(xi, mu, indexing="ij")
    keep = indicator_I(group_velocity(X, M), spec.H)
    if spec.N is not None:
        keep &= indicator_I(X, spec.N)
    return np.stack([X[keep], M[keep]], axis=1)


def max_resonance(specs: Sequence[DyadicSupportSpec], grid: Grid2) -> float:
    """Largest ``|resonance(k1, k2)|`` over lattice pairs with ``k1, k2, k1 + k2`` in the three supports."""
    s1, s2, s3 = specs
    p1 = _spatial_points(s1, grid.kx, grid.ky)
    p2 = _spatial_points(s2, grid.kx, grid.ky)
    if len(p1) == 0 or len(p2) == 0:
        raise EmptySupportError("a spatial support has no lattice points")
    if len(p1) > len(p2):
        p1, p2 = p2, p1
    best = 0.0
    for chunk in np.array_split(p1, max(1, len(p1) // 64)):
        x1 = chunk[:, 0:1]
        m1 = chunk[:, 1:2]
        x3 = x1 + p2[None, :, 0]
        m3 = m1 + p2[None, :, 1]
        ok = indicator_I(group_velocity(x3, m3), s3.H)
        if s3.N is not None:
            ok &= indicator_I(x3, s3.N)
        if ok.any():
            om = resonance(x1, m1, p2[None, :, 0], p2[None, :, 1])
            best = max(best, float(np.abs(om[ok]).max()))
    return best


def probe_lattice(
    specs: Sequence[DyadicSupportSpec], resolution: float = 4.0, tau_resolution: float = 4.0
) -> SpaceTimeLattice:
    """Smallest alias-free lattice resolving every sharp support ``resolution`` points across."""
    if len(specs) != 3:
        raise InvalidInputError("probe_lattice takes three support specs")
    dxi = min(s.widths()[0] for s in specs) / resolution
    dmu = min(s.widths()[1] for s in specs) / resolution
    dtau = min(s.L for s in specs) / tau_resolution

    def count(extent_sum: float, d: float) -> int:
        n = sfft.next_fast_len(int(math.floor(extent_sum / d)) + 2, real=True)
        return n + (n % 2)

    # spatial periods exceed the summed extents, so wrapped sums miss every support
    nx = max(count(sum(s.xi_extent() for s in specs), dxi), 8)
    ny = max(count(sum(s.mu_extent() for s in specs), dmu), 8)
    grid = Grid2(nx, ny, 2.0 * math.pi / dxi, 2.0 * math.pi / dmu)
    span = max_resonance(specs, grid) + sum(s.L for s in specs)
    nt = max(count(span, dtau), 16)
    return SpaceTimeLattice(nt, 2.0 * math.pi / dtau, grid)


# --- bilinear probe ----------------------------------------------------------------------------

@dataclass
class ProbeStats:
    ratios: np.ndarray
    raw: np.ndarray
    bound: float
    label: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def min(self) -> float:
        return float(self.ratios.min())

    @property
    def median(self) -> float:
        return float(np.median(self.ratios))

    @property
    def max(self) -> float:
        return float(self.ratios.max())

    @property
    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.ratios)))


def bilinear_bound(case: str, specs: Sequence[DyadicSupportSpec]) -> tuple[float, str]:
    """Right side (without constant) of the bilinear estimate for ``case``; raises on bad hypotheses."""
    Hs = [s.H for s in specs]
    Ls = [s.L for s in specs]
    h_min, h_max = min(Hs), max(Hs)
    l_sorted = sorted(Ls)
    l_min, l_med, l_max = l_sorted
    if case == "a":
        return math.sqrt(h_min * l_min), "a"
    if case == "b":
        if h_max < 8 * h_min:
            raise ProbeMisconfigurationError(
                f"case b needs H_min << H_max (ratio >= 8); got H={tuple(Hs)}"
            )
        base = h_max**-0.5 * h_min**0.25 * math.sqrt(l_min)
        if any(H == h_min and L == l_max for H, L in zip(Hs, Ls)):
            return base * math.sqrt(l_max), "b-extremal"
        return base * math.sqrt(l_med), "b-general"
    if case == "c":
        if h_max > 2 * h_min:
            raise ProbeMisconfigurationError(
                f"case c needs H_min ~ H_max (ratio <= 2); got H={tuple(Hs)}"
            )
        if any(s.N is None for s in specs):
            raise ProbeMisconfigurationError("case c needs every support localized in xi (finite N)")
        n_max = max(s.N for s in specs)
        return h_min**0.25 * math.sqrt(l_med * l_max) / n_max, "c"
    raise ProbeMisconfigurationError(f"unknown bilinear case {case!r}")


def bilinear_probe(
    case: str,
    specs: Sequence[DyadicSupportSpec],
    trials: int,
    seed: int,
    lattice: Optional[SpaceTimeLattice] = None,
) -> ProbeStats:
    """Trilinear values of random nonnegative unit-norm triples divided by the case's bound."""
    specs = tuple(specs)
    if len(specs) != 3:
        raise InvalidInputError("bilinear_probe takes three support specs")
    if int(trials) != trials or trials < 1:
        raise InvalidInputError(f"trials must be a positive integer, got {trials!r}")
    bound, branch = bilinear_bound(case, specs)
    lat = lattice or probe_lattice(specs)
    masks = [support_mask(s, lat) for s in specs]
    raw = np.empty(int(trials))
    for t in range(int(trials)):
        fs = [random_dnhl(s, lat, seed, 3 * t + i, modulus=True, mask=m) for i, (s, m) in enumerate(zip(specs, masks))]
        raw[t] = trilinear_functional(*fs)
    label = "|".join(s.label() for s in specs)
    return ProbeStats(raw / bound, raw, bound, label, {"branch": branch, "case": case, "lattice": lat.shape})


def fit_exponent(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])


# --- Strichartz probe --------------------------------------------------------------------------

def random_band_data(grid: Grid2, band: int, seed: int, trial: int = 0) -> np.ndarray:
    """Complex unit-L^2 samples with Gaussian modes ``|j_x|, |j_y| <= band``.

    The coefficients depend only on ``(band, seed, trial)``, so refining the grid
    samples the same function.
    """
    if 2 * band >= min(grid.nx, grid.ny):
        raise ConfigurationError(f"band {band} not representable on grid {grid.shape}")
    rng = trial_rng(seed, trial)
    side = 2 * band + 1
    block = rng.standard_normal((side, side)) + 1j * rng.standard_normal((side, side))
    modes = np.zeros(grid.shape, dtype=complex)
    j = np.arange(-band, band + 1)
    modes[np.ix_(j % grid.nx, j % grid.ny)] = block
    modes /= math.sqrt(grid.area * float(np.sum(np.abs(block) ** 2)))
    return sfft.ifft2(modes, norm="forward")


def strichartz_ratio(u0: np.ndarray, grid: Grid2, nt: int, T: float = 1.0) -> float:
    """``|| |K(D)|^{1/8} U(t) u0 ||_{L^4([0,T] x box)} / ||u0||_{L^2}`` with midpoint times."""
    modes = sfft.fft2(np.asarray(u0, dtype=complex), norm="forward")
    norm0 = math.sqrt(grid.area * float(np.sum(np.abs(modes) ** 2)))
    if norm0 == 0.0:
        return 0.0
    xi, mu = grid.wavenumbers
    weighted = modes * np.abs(kernel_K(xi, mu)) ** 0.125
    freq = omega(xi, mu)
    dt = T / nt
    acc = 0.0
    for j in range(nt):
        w = sfft.ifft2(weighted * np.exp(1j * (j + 0.5) * dt * freq), norm="forward")
        acc += float(np.sum(np.abs(w) ** 4))
    l4 = (acc * dt * grid.cell_area) ** 0.25
    return l4 / norm0


def strichartz_probe(grid: Grid2, nt: int, trials: int, seed: int, band: int = 8, T: float = 1.0) -> ProbeStats:
    ratios = np.array(
        [strichartz_ratio(random_band_data(grid, band, seed, t), grid, nt, T) for t in range(int(trials))]
    )
    return ProbeStats(ratios, ratios.copy(), 1.0, f"nt={nt};n={grid.nx}x{grid.ny};band={band}")


# --- commutator probe ----------------------------------------------------------------------------

def commutator_symbol(grid: Grid2, H: int) -> np.ndarray:
    """Multiplier ``psi_H^2 * i xi`` of ``P_H^2 d_x``."""
    xi, mu = grid.wavenumbers
    return psi_block(xi, mu, H) ** 2 * derivative_symbol(grid, 1, 0)


def commutator_probe(H: int, u: RealField2, V: RealField2) -> tuple[float, float]:
    """``(||P_H^2 d_x(V u) - V P_H^2 d_x u||_{L^2}, ||u||_{L^2} ||grad V||_{L^inf})``."""
    H = check_dyadic(H, "H")
    grid = u.grid
    if V.grid != grid:
        raise InvalidInputError("u and V live on different grids")
    m = commutator_symbol(grid, H)
    apply = lambda a: sfft.ifft2(m * sfft.fft2(a, norm="forward"), norm="forward").real
    comm = apply(V.values * u.values) - V.values * apply(u.values)
    lhs = math.sqrt(float(np.sum(comm**2)) * grid.cell_area)
    vm = forward_transform(V).modes
    vx = sfft.ifft2(vm * derivative_symbol(grid, 1, 0), norm="forward").real
    vy = sfft.ifft2(vm * derivative_symbol(grid, 0, 1), norm="forward").real
    grad_sup = float(np.sqrt(vx**2 + vy**2).max())
    rhs = math.sqrt(float(np.sum(u.values**2)) * grid.cell_area) * grad_sup
    return lhs, rhs
