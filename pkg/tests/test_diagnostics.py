import math

import numpy as np
import pytest
from scipy.integrate import quad

from zklab.backgrounds import Background, LineSoliton, TanhKink
from zklab.diagnostics import (
    EnergyRateReport,
    GrowthEnvelope,
    block_energies,
    bsT_norm,
    diagnostics_records,
    energy_rate_identity,
    energy_rate_report,
    energy_rate_rhs,
    gronwall_check,
    invariants,
    modified_energy,
)
from zklab.errors import InsufficientStencilError, InvalidInputError
from zklab.evolution import SolverConfig, SolverState, Trajectory, evolve
from zklab.spectral import Grid2, RealField2, SpectralField2, inverse_transform, l2_norm

from conftest import gaussian

KINK = TanhKink(a=1.0, b=0.5)
KINK_GRID = Grid2(128, 128, 20 * math.pi, 20 * math.pi)


@pytest.fixture(scope="module")
def kink_run():
    return evolve(gaussian(KINK_GRID), KINK, SolverConfig(dt=1e-3, T=1.0, record_every=10))


@pytest.fixture(scope="module")
def zero_run():
    g = Grid2(64, 64, 20 * math.pi, 20 * math.pi)
    return evolve(gaussian(g, 1.0, 1.5), Background(), SolverConfig(dt=5e-3, T=0.5, record_every=5))


def constant_trajectory(u, n=4):
    states = [SolverState(0.1 * k, u) for k in range(n)]
    return Trajectory(states, SolverConfig(), Background())


class TestInvariants:
    def test_zero(self, grid):
        assert invariants(RealField2.zeros(grid)) == (0.0, 0.0, 0.0)

    def test_gaussian_trapezoid_prediction(self):
        # Poisson summation: the node sum of exp(-2 x^2) exceeds sqrt(pi/2) by 2 exp(-(2 pi/h)^2 / 8)
        g = Grid2(256, 256, 40 * math.pi, 40 * math.pi)
        _, i2, _ = invariants(gaussian(g))
        predicted = 0.5 * math.pi * (1 + 2 * math.exp(-((2 * math.pi / g.dx) ** 2) / 8)) ** 2
        assert i2 == pytest.approx(predicted, rel=1e-13)

    def test_gaussian_analytic_fine_grid(self):
        g = Grid2(512, 512, 40 * math.pi, 40 * math.pi)
        i1, i2, i3 = invariants(gaussian(g))
        assert i1 == pytest.approx(math.pi, abs=1e-10)
        assert i2 == pytest.approx(math.pi / 2, abs=1e-10)
        # int |grad v|^2 = pi, int v^3 = pi/3
        assert i3 == pytest.approx(4 * math.pi / 9, abs=1e-9)

    def test_zero_background_run_conserves(self, zero_run):
        base = invariants(inverse_transform(zero_run.states[0].u))
        for s in zero_run.states[1:]:
            i1, i2, i3 = invariants(inverse_transform(s.u))
            assert abs(i1 - base[0]) <= 1e-12
            assert abs(i2 / base[1] - 1) <= 1e-8
            assert abs(i3 / base[2] - 1) <= 1e-6


class TestModifiedEnergy:
    def test_zero(self, grid):
        assert modified_energy(RealField2.zeros(grid), KINK, 0.0) == 0.0

    def test_zero_background_is_twice_I3(self, zero_run):
        u = inverse_transform(zero_run.states[-1].u)
        assert modified_energy(u, Background(), 0.0) == pytest.approx(2 * invariants(u)[2], rel=1e-12)

    def test_kink_against_quadrature(self):
        g = Grid2(512, 512, 40 * math.pi, 40 * math.pi)
        A, x0 = 0.3, 1.0
        u = gaussian(g, A, 1.0, x0=x0)
        line, _ = quad(lambda x: math.exp(-2 * (x - x0) ** 2) * math.tanh(0.5 * x), -20, 20, epsabs=1e-14, epsrel=1e-14)
        coupling = A**2 * math.sqrt(math.pi / 2) * line
        expect = A**2 * math.pi - A**3 * math.pi / 9 - coupling
        assert modified_energy(u, KINK, 0.0) == pytest.approx(expect, abs=1e-8)


class TestEnergyRate:
    def test_zero_background_rhs(self, zero_run):
        assert energy_rate_rhs(inverse_transform(zero_run.states[2].u), Background(), 0.0) == 0.0

    def test_zero_background_identity(self, zero_run):
        u = inverse_transform(zero_run.states[0].u)
        E = modified_energy(u, Background(), 0.0)
        lhs, rhs = energy_rate_identity(zero_run, Background(), zero_run.times[3])
        assert rhs == 0.0 and abs(lhs) <= 1e-8 * abs(E)

    def test_stencil_errors(self, zero_run):
        with pytest.raises(InsufficientStencilError):
            energy_rate_identity(zero_run, Background(), 0.0)
        with pytest.raises(InsufficientStencilError):
            energy_rate_identity(zero_run, Background(), zero_run.times[-1])
        with pytest.raises(InvalidInputError):
            energy_rate_identity(zero_run, Background(), 0.123456)

    def test_kink_identity(self, kink_run):
        rep = energy_rate_report(kink_run, KINK)
        assert isinstance(rep, EnergyRateReport) and len(rep.times) == len(kink_run) - 2
        assert rep.relative_error <= 1e-3

    def test_soliton_identity(self):
        g = Grid2(512, 64, 80 * math.pi, 10 * math.pi)
        bg = LineSoliton(c=1.0)
        traj = evolve(gaussian(g, 0.3, 2.0, x0=8.0), bg, SolverConfig(dt=1e-3, T=0.2, record_every=10))
        rep = energy_rate_report(traj, bg)
        assert rep.relative_error <= 1e-4
        # R vanishes for the soliton, leaving -int u^2 Psi_t
        transport = []
        for t in rep.times:
            u = inverse_transform(traj.states[int(round(t / 0.01))].u).values
            psi_t = -bg.speed * bg.sample_dx_x(t, g)[:, None]
            transport.append(-np.sum(u**2 * psi_t) * g.cell_area)
        assert np.abs(rep.rhs - np.array(transport)).max() <= 1e-6 * rep.scale

    def test_too_short(self, grid):
        traj = constant_trajectory(SpectralField2(grid, np.zeros(grid.shape)), n=2)
        with pytest.raises(InsufficientStencilError):
            energy_rate_report(traj, Background())


class TestGronwall:
    def test_zero_background(self, zero_run):
        rep = gronwall_check(zero_run, Background())
        assert np.abs(rep.rates).max() <= rep.tol
        assert rep.passed

    def test_kink(self, kink_run):
        rep = gronwall_check(kink_run, KINK)
        assert rep.rate_ok.all() and rep.envelope_ok.all()
        assert rep.envelope.C_psi == pytest.approx(2 + 2 * 0.5, rel=1e-10)
        assert rep.envelope.C_data >= rep.mass[0]
        assert rep.mass[-1] > rep.mass[0]  # the forcing does pump mass

    def test_too_sparse(self, grid):
        traj = constant_trajectory(SpectralField2(grid, np.zeros(grid.shape)), n=2)
        with pytest.raises(InsufficientStencilError):
            gronwall_check(traj, Background())

    def test_envelope(self):
        env = GrowthEnvelope(2.0, 0.5)
        assert env(0.0) == 2.0 and env(2.0) == pytest.approx(2 * math.e)
        with pytest.raises(InvalidInputError):
            GrowthEnvelope(1.0, -0.1)


class TestBsT:
    def test_zero(self, grid):
        assert bsT_norm(constant_trajectory(SpectralField2(grid, np.zeros(grid.shape))), 1.0) == 0.0

    @pytest.mark.parametrize("s", [0.0, 1.0, 2.5])
    def test_single_block(self, s):
        g = Grid2(64, 64, 2 * math.pi, 2 * math.pi)
        modes = np.zeros(g.shape, dtype=complex)
        modes[4, 0] = modes[-4, 0] = 0.5  # xi^2 + mu^2 = 16
        u = SpectralField2(g, modes)
        norm = l2_norm(inverse_transform(u))
        assert bsT_norm(constant_trajectory(u), s) == pytest.approx(16 ** (s / 2) * norm, rel=0.05)

    def test_block_energies_sum_bounds(self, zero_run):
        u = zero_run.states[-1].u
        _, e = block_energies(u)
        mass = l2_norm(inverse_transform(u)) ** 2
        # psi_H^2 summed over H lies in [1/2, 1] pointwise
        assert 0.5 * mass <= e.sum() <= mass * (1 + 1e-12)

    def test_monotone_in_horizon(self, kink_run):
        values = [bsT_norm(Trajectory(kink_run.states[:k], kink_run.config, KINK), 1.0) for k in (2, 10, 50, len(kink_run))]
        assert values == sorted(values)

    def test_zero_background_dominates_mass(self, zero_run):
        sup = max(l2_norm(inverse_transform(s.u)) for s in zero_run.states)
        assert bsT_norm(zero_run, 0.0) >= sup / math.sqrt(2)

    def test_forced_counterexample(self, kink_run):
        # block 1 only enters at t = 0, and the y-independent forcing feeds it afterwards
        sup = max(l2_norm(inverse_transform(s.u)) for s in kink_run.states)
        assert bsT_norm(kink_run, 0.0) < sup / math.sqrt(2)


class TestRecords:
    def test_kink_records(self, kink_run):
        recs = diagnostics_records(kink_run, KINK, sobolev_s=(0.0, 2.0))
        assert len(recs) == len(kink_run)
        assert not any(r.invariants_of_total for r in recs)
        assert all(r.gronwall_ok for r in recs)
        assert all(math.isfinite(v) for r in recs for v in (r.I1, r.I2, r.I3, r.modified_energy, r.l2_rate))
        assert set(recs[0].sobolev) == {0.0, 2.0}
        assert recs[0].sobolev[0.0] == pytest.approx(math.sqrt(recs[0].I2), rel=1e-12)

    def test_decaying_background_uses_total(self):
        g = Grid2(512, 16, 80 * math.pi, 8 * math.pi)
        bg = LineSoliton(c=1.0)
        traj = evolve(RealField2.zeros(g), bg, SolverConfig(dt=1e-2, T=0.05, record_every=1))
        recs = diagnostics_records(traj, bg)
        assert all(r.invariants_of_total for r in recs)
        # I1 of the soliton: 3c * 4/sqrt(c) per unit length in y
        assert recs[0].I1 == pytest.approx(12.0 * g.Ly, rel=1e-10)
