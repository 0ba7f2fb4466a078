import math

import numpy as np
import pytest

from zklab.errors import (
    ConfigurationError,
    EmptySupportError,
    InvalidInputError,
    InvalidSupportError,
    ProbeMisconfigurationError,
)
from zklab.probes import (
    DyadicSupportSpec,
    SpaceTimeField,
    SpaceTimeLattice,
    bilinear_bound,
    bilinear_probe,
    commutator_probe,
    f_short_norm,
    fit_exponent,
    free_wave,
    from_physical,
    max_resonance,
    probe_lattice,
    random_band_data,
    random_dnhl,
    reflect,
    strichartz_probe,
    strichartz_ratio,
    support_mask,
    to_physical,
    trilinear_bruteforce,
    trilinear_functional,
    xh_norm,
)
from zklab.spectral import Grid2, RealField2
from zklab.symbols import group_velocity, indicator_I, kernel_K, omega, psi_block


def integer_lattice(nt=64, n=16):
    # dtau = dxi = dmu = 1, so omega and the modulation are integers
    return SpaceTimeLattice(nt, 2 * math.pi, Grid2(n, n, 2 * math.pi, 2 * math.pi))


def shell_profile(lat, H, rng):
    xi, mu = lat.grid.wavenumbers
    keep = indicator_I(group_velocity(xi, mu), H)
    return np.where(keep, rng.standard_normal(xi.shape) + 1j * rng.standard_normal(xi.shape), 0.0)


def random_8cubed(rng, complex_values=False):
    lat = SpaceTimeLattice(8, 2 * math.pi, Grid2(8, 8, 2 * math.pi, 2 * math.pi))
    def one():
        v = rng.standard_normal(lat.shape)
        if complex_values:
            v = v + 1j * rng.standard_normal(lat.shape)
        return SpaceTimeField(lat, v)
    return lat, one(), one(), one()


class TestLattice:
    def test_spacings(self):
        lat = SpaceTimeLattice.from_spacings(16, 8, 8, 0.5, 0.25, 2.0)
        assert lat.dtau == pytest.approx(0.5) and lat.period == pytest.approx(8.0)
        assert lat.dV == pytest.approx(0.25)
        assert lat.grid.Lx == pytest.approx(8 * math.pi)

    @pytest.mark.parametrize("nt", [7, 6, 9.5])
    def test_bad_nt(self, nt):
        with pytest.raises(InvalidInputError):
            SpaceTimeLattice(nt, 1.0, Grid2(8, 8, 1.0, 1.0))

    def test_modulation_wrapped(self):
        lat = integer_lattice()
        m = lat.modulation()
        assert m.min() >= -0.5 * lat.period and m.max() < 0.5 * lat.period

    def test_parseval(self, rng):
        lat = SpaceTimeLattice(16, 3.0, Grid2(8, 12, 5.0, 7.0))
        u = rng.standard_normal(lat.shape)
        f = from_physical(lat, u)
        g = lat.grid
        assert f.l2_norm() ** 2 == pytest.approx(np.sum(u**2) * lat.dt * g.dx * g.dy, rel=1e-12)
        np.testing.assert_allclose(to_physical(f).real, u, atol=1e-12)

    def test_free_wave_concentrates_on_dispersion(self, rng):
        lat = integer_lattice()
        profile = shell_profile(lat, 16, rng)
        f = free_wave(lat, profile)
        assert np.abs(lat.modulation()[np.abs(f.values) > 0]).max() <= 0.5 * lat.dtau
        assert f.l2_norm() ** 2 == pytest.approx(np.sum(np.abs(profile) ** 2), rel=1e-12)


class TestXH:
    def test_zero(self):
        assert xh_norm(SpaceTimeField.zeros(integer_lattice()), 8) == 0.0

    def test_free_wave_equals_l2(self, rng):
        lat = integer_lattice()
        f = free_wave(lat, shell_profile(lat, 16, rng))
        assert xh_norm(f, 16) == pytest.approx(f.l2_norm(), rel=1e-12)

    @pytest.mark.parametrize("L", [2, 4, 8])
    def test_single_modulation_shell(self, rng, L):
        lat = integer_lattice()
        wave = free_wave(lat, shell_profile(lat, 16, rng))
        moved = SpaceTimeField(lat, np.roll(wave.values, L, axis=0))
        assert xh_norm(moved, 16) == pytest.approx(math.sqrt(L) * wave.l2_norm(), rel=0.1)

    def test_outside_annulus(self, rng):
        lat = integer_lattice()
        f = free_wave(lat, shell_profile(lat, 16, rng) + shell_profile(lat, 128, rng))
        with pytest.raises(InvalidSupportError):
            xh_norm(f, 16)


class TestShortTime:
    def lattice(self):
        return SpaceTimeLattice(64, 8.0, Grid2(16, 16, 2 * math.pi, 2 * math.pi))

    def test_zero(self):
        assert f_short_norm(SpaceTimeField.zeros(self.lattice()), 4) == 0.0

    def test_free_wave_order_one(self, rng):
        lat = self.lattice()
        f = free_wave(lat, shell_profile(lat, 4, rng))
        g_norm = f.l2_norm() / math.sqrt(lat.T)  # spatial norm of the datum
        ratio = f_short_norm(f, 4) / g_norm
        assert 0.5 <= ratio <= 2.0 * math.sqrt(lat.T)

    def test_refinement_stable(self, rng):
        lat = self.lattice()
        f = free_wave(lat, shell_profile(lat, 4, rng))
        coarse, fine = f_short_norm(f, 4), f_short_norm(f, 4, refine=2)
        assert fine >= coarse * (1 - 1e-12)
        assert fine <= 1.05 * coarse

    def test_window_too_long(self, rng):
        lat = SpaceTimeLattice(16, 1.0, Grid2(16, 16, 2 * math.pi, 2 * math.pi))
        with pytest.raises(ConfigurationError):
            f_short_norm(SpaceTimeField.zeros(lat), 4)


class TestRandomData:
    SPEC = DyadicSupportSpec(H=16, L=4)

    def test_unit_norm_and_support(self):
        lat = probe_lattice([self.SPEC] * 3)
        f = random_dnhl(self.SPEC, lat, seed=3)
        assert f.l2_norm() == pytest.approx(1.0, abs=1e-12)
        mask = np.broadcast_to(support_mask(self.SPEC, lat), lat.shape)
        assert np.all(f.values[~mask] == 0) and np.all(f.values[mask] != 0)

    def test_seeds_decorrelate(self):
        lat = probe_lattice([self.SPEC] * 3)
        f, g = random_dnhl(self.SPEC, lat, 1), random_dnhl(self.SPEC, lat, 2)
        assert abs(f.inner(g)) < 0.5
        h = random_dnhl(self.SPEC, lat, 1)
        assert np.array_equal(f.values, h.values)

    def test_modulus_nonnegative(self):
        lat = probe_lattice([self.SPEC] * 3)
        f = random_dnhl(self.SPEC, lat, 1, modulus=True)
        assert f.is_real and f.values.min() >= 0

    def test_empty(self):
        lat = probe_lattice([self.SPEC] * 3)
        with pytest.raises(EmptySupportError):
            random_dnhl(self.SPEC, lat, 1, mask=np.zeros(lat.shape, dtype=bool))

    def test_unresolvable(self):
        lat = probe_lattice([self.SPEC] * 3)
        with pytest.raises(ProbeMisconfigurationError):
            random_dnhl(DyadicSupportSpec(H=1024, L=4), lat, 1)


class TestTrilinear:
    @pytest.mark.parametrize("complex_values", [False, True])
    def test_bruteforce(self, rng, complex_values):
        _, f1, f2, f3 = random_8cubed(rng, complex_values)
        fast, slow = trilinear_functional(f1, f2, f3), trilinear_bruteforce(f1, f2, f3)
        assert abs(fast - slow) <= 1e-10 * max(1.0, abs(slow))
        assert isinstance(fast, complex if complex_values else float)

    def test_zero(self, rng):
        lat, f1, f2, _ = random_8cubed(rng)
        assert trilinear_functional(f1, f2, SpaceTimeField.zeros(lat)) == 0.0

    def test_symmetries(self, rng):
        _, f1, f2, f3 = random_8cubed(rng, True)
        base = trilinear_functional(f1, f2, f3)
        assert trilinear_functional(f2, f1, f3) == pytest.approx(base, rel=1e-12)
        assert trilinear_functional(f1, reflect(f3), reflect(f2)) == pytest.approx(base, rel=1e-12)

    def test_lattice_mismatch(self, rng):
        _, f1, f2, _ = random_8cubed(rng)
        other = SpaceTimeField.zeros(SpaceTimeLattice(8, 1.0, Grid2(8, 8, 1.0, 1.0)))
        with pytest.raises(InvalidInputError):
            trilinear_functional(f1, f2, other)


class TestBilinear:
    def test_lattice_is_alias_free(self):
        specs = [DyadicSupportSpec(4, 8), DyadicSupportSpec(16, 2), DyadicSupportSpec(16, 4)]
        lat = probe_lattice(specs)
        g = lat.grid
        assert g.nx * (2 * math.pi / g.Lx) > sum(s.xi_extent() for s in specs)
        assert lat.period > max_resonance(specs, g) + sum(s.L for s in specs)

    def test_one_field_zero(self):
        spec = DyadicSupportSpec(4, 4)
        lat = probe_lattice([spec] * 3)
        f = random_dnhl(spec, lat, 1, modulus=True)
        assert trilinear_functional(f, f, SpaceTimeField.zeros(lat)) == 0.0

    def test_case_a_bound(self):
        specs = [DyadicSupportSpec(4, 8), DyadicSupportSpec(16, 2), DyadicSupportSpec(64, 4)]
        assert bilinear_bound("a", specs) == (pytest.approx(math.sqrt(8)), "a")

    def test_case_b_branches(self):
        extremal = [DyadicSupportSpec(2, 8), DyadicSupportSpec(16, 1), DyadicSupportSpec(16, 2)]
        general = [DyadicSupportSpec(2, 1), DyadicSupportSpec(16, 8), DyadicSupportSpec(16, 2)]
        b1, br1 = bilinear_bound("b", extremal)
        b2, br2 = bilinear_bound("b", general)
        assert (br1, br2) == ("b-extremal", "b-general")
        base = 16**-0.5 * 2**0.25
        assert b1 == pytest.approx(base * math.sqrt(1 * 8))
        assert b2 == pytest.approx(base * math.sqrt(1 * 2))

    def test_case_b_needs_separated_shells(self):
        with pytest.raises(ProbeMisconfigurationError):
            bilinear_bound("b", [DyadicSupportSpec(4, 1), DyadicSupportSpec(16, 1), DyadicSupportSpec(16, 1)])

    def test_case_c(self):
        specs = [DyadicSupportSpec(16, 2, 1), DyadicSupportSpec(16, 4, 2), DyadicSupportSpec(32, 8, 2)]
        bound, branch = bilinear_bound("c", specs)
        assert branch == "c" and bound == pytest.approx(16**0.25 * math.sqrt(32) / 2)
        with pytest.raises(ProbeMisconfigurationError):
            bilinear_bound("c", specs[:2] + [DyadicSupportSpec(32, 8)])
        with pytest.raises(ProbeMisconfigurationError):
            bilinear_bound("c", specs[:2] + [DyadicSupportSpec(64, 8, 2)])
        with pytest.raises(ProbeMisconfigurationError):
            bilinear_bound("d", specs)

    def test_small_probe(self):
        specs = [DyadicSupportSpec(4, 4), DyadicSupportSpec(4, 4), DyadicSupportSpec(8, 4)]
        stats = bilinear_probe("a", specs, trials=5, seed=0)
        assert stats.finite and stats.min > 0
        again = bilinear_probe("a", specs, trials=5, seed=0)
        assert np.array_equal(stats.raw, again.raw)

    def test_bad_trials(self):
        with pytest.raises(InvalidInputError):
            bilinear_probe("a", [DyadicSupportSpec(4, 4)] * 3, trials=0, seed=0)

    def test_fit_exponent(self):
        x = np.array([1.0, 2.0, 4.0, 8.0])
        assert fit_exponent(x, 3 * x**0.5) == pytest.approx(0.5, abs=1e-12)


class TestStrichartz:
    GRID = Grid2(32, 32, 8 * math.pi, 8 * math.pi)

    def test_zero(self):
        assert strichartz_ratio(np.zeros(self.GRID.shape), self.GRID, 8) == 0.0

    def test_single_mode(self):
        g = self.GRID
        x, y = g.mesh
        xi, mu = 3 * 2 * math.pi / g.Lx, 1 * 2 * math.pi / g.Ly
        u0 = np.exp(1j * (xi * x + mu * y))
        expect = abs(kernel_K(xi, mu)) ** 0.125 * g.area**-0.25
        assert strichartz_ratio(u0, g, 16) == pytest.approx(expect, rel=1e-12)

    def test_band_data_grid_independent(self):
        a = random_band_data(self.GRID, 4, seed=1)
        fine = Grid2(64, 64, self.GRID.Lx, self.GRID.Ly)
        b = random_band_data(fine, 4, seed=1)
        np.testing.assert_allclose(b[::2, ::2], a, atol=1e-14)
        with pytest.raises(ConfigurationError):
            random_band_data(self.GRID, 16, seed=1)

    def test_probe_finite(self):
        stats = strichartz_probe(self.GRID, nt=16, trials=4, seed=0, band=4)
        assert stats.finite and stats.max > 0


class TestCommutator:
    def test_constant_multiplier(self, rng):
        g = Grid2(32, 16, 2 * math.pi, 2 * math.pi)
        u = RealField2(g, rng.standard_normal(g.shape))
        V = RealField2(g, np.full(g.shape, 2.5))
        lhs, rhs = commutator_probe(8, u, V)
        assert lhs <= 1e-13 and rhs == 0.0

    def test_two_mode_closed_form(self):
        g = Grid2(32, 16, 2 * math.pi, 2 * math.pi)
        x, _ = g.mesh
        a, b = 3.0, 1.0
        u, V = RealField2(g, np.cos(a * x)), RealField2(g, np.cos(b * x))
        m = lambda k: psi_block(k, 0.0, 8) ** 2 * k
        d_plus, d_minus = m(a + b) - m(a), m(a - b) - m(a)
        area = g.Lx * g.Ly
        expect_lhs = 0.5 * math.sqrt((d_plus**2 + d_minus**2) * area / 2)
        lhs, rhs = commutator_probe(8, u, V)
        assert lhs == pytest.approx(expect_lhs, rel=1e-10)
        assert rhs == pytest.approx(math.sqrt(area / 2) * b, rel=1e-10)

    def test_grid_mismatch(self, rng):
        g = Grid2(16, 16, 1.0, 1.0)
        with pytest.raises(InvalidInputError):
            commutator_probe(4, RealField2(g, np.zeros(g.shape)), RealField2(Grid2(16, 8, 1.0, 1.0), np.zeros((16, 8))))
