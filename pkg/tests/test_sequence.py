import numpy as np
import pytest

from seqresponse import grid, sequence, transfer
from seqresponse.errors import NotConverged, WindowExceeded
from seqresponse.grid import DensityGrid
from seqresponse.maps import CircleMap, KickField
from seqresponse.noise import DriftMap, NoiseDensity
from seqresponse.sequence import (
    DeterministicEntry,
    NoisyEntry,
    SequenceSystem,
    compose,
    constant_schedule,
    memory_decay,
    periodic_schedule,
    pullback_equivariant,
    seeded_random_schedule,
)

N = 256
X = np.arange(N) / N


def doubling_system(window=(0, 10), eps=0.0):
    entry = DeterministicEntry(map=CircleMap(2), kick=KickField(sin_coeffs=(0.0, 1 / (2 * np.pi))), key="T0")
    return SequenceSystem(constant_schedule(entry), window, eps=eps, n_points=N)


def noisy_uniform_system(window=(0, 6)):
    entry = NoisyEntry(drift=DriftMap(base=CircleMap(2)), noise=NoiseDensity.uniform(N), key="unif")
    return SequenceSystem(constant_schedule(entry), window, eps=0.0, n_points=N)


def bump_system(window=(0, 10), floor=0.3):
    q = NoiseDensity.bump(0.5, 0.08, floor, N)
    entry = NoisyEntry(drift=DriftMap(base=CircleMap(2), dot=np.sin(2 * np.pi * X)), noise=q, key="bump")
    return SequenceSystem(constant_schedule(entry), window, eps=0.0, n_points=N)


class TestCompose:
    def test_empty(self):
        sys_ = doubling_system()
        f = DensityGrid(1 + 0.5 * np.sin(2 * np.pi * X))
        assert np.array_equal(compose(sys_, 3, 0, f).values, f.values)

    def test_harmonic_annihilation(self):
        sys_ = doubling_system()
        f = DensityGrid(1 + np.cos(2 * np.pi * X))
        out = compose(sys_, 0, 1, f)
        assert grid.norm_l1(out - DensityGrid.constant(1.0, N)) <= 1e-8

    def test_mass_through_long_composition(self):
        sys_ = doubling_system(window=(0, 50))
        rng = np.random.default_rng(0)
        f = DensityGrid(rng.uniform(0.5, 1.5, N))
        out = compose(sys_, 0, 50, f)
        assert abs(grid.mass(out) - grid.mass(f)) <= 1e-8

    def test_window_exceeded(self):
        with pytest.raises(WindowExceeded):
            compose(doubling_system((0, 5)), 2, 10, DensityGrid.constant(1.0, N))


class TestPullback:
    def test_constant_doubling_uniform(self):
        sys_ = doubling_system()
        seed = DensityGrid(1 + 0.5 * np.cos(2 * np.pi * X))
        fam = pullback_equivariant(sys_, 60, seed)
        assert fam.convergence_residual <= 1e-9
        for n in range(fam.n_lo, fam.n_hi + 1):
            assert np.max(np.abs(fam.density(n).values - 1.0)) <= 1e-8

    def test_uniform_noise_one_step(self):
        fam = pullback_equivariant(noisy_uniform_system(), 5, DensityGrid(1 + 0.9 * np.cos(2 * np.pi * X)))
        for n in range(fam.n_lo, fam.n_hi + 1):
            assert np.max(np.abs(fam.density(n).values - 1.0)) <= 1e-12

    def test_two_seed_uniqueness(self):
        sys_ = bump_system()
        fam_a = pullback_equivariant(sys_, 60, DensityGrid.constant(1.0, N))
        fam_b = pullback_equivariant(sys_, 60, DensityGrid(1 + 0.9 * np.cos(2 * np.pi * X)))
        gap = max(
            grid.norm_l1(a - b) for a, b in zip(fam_a.densities, fam_b.densities)
        )
        assert gap <= 1e-8
        assert gap <= 10 * max(fam_a.convergence_residual, fam_b.convergence_residual) + 1e-12

    def test_equivariance_residual(self):
        sys_ = bump_system()
        fam = pullback_equivariant(sys_, 60, DensityGrid.constant(1.0, N))
        for n in range(fam.n_lo, fam.n_hi):
            pushed = transfer.apply(sys_.operator(n), fam.density(n))
            assert grid.norm_l1(fam.density(n + 1) - pushed) <= 1e-9

    def test_probability_densities(self):
        fam = pullback_equivariant(bump_system(), 60, DensityGrid.constant(1.0, N))
        for mu in fam.densities:
            assert abs(grid.mass(mu) - 1.0) <= 1e-10
            assert np.min(mu.values) >= -1e-12

    def test_not_converged(self):
        # two burn-in steps of a 0.7-contraction cannot reach 1e-12
        sys_ = bump_system(floor=0.3)
        with pytest.raises(NotConverged):
            pullback_equivariant(sys_, 2, DensityGrid(1 + 0.9 * np.cos(8 * np.pi * X)), tol=1e-12)

    def test_bad_seed_rejected(self):
        with pytest.raises(ValueError):
            pullback_equivariant(doubling_system(), 10, DensityGrid.constant(2.0, N))


class TestMemoryDecay:
    def test_first_harmonic_dies_immediately(self):
        md = memory_decay(doubling_system(), DensityGrid(np.cos(2 * np.pi * X)), 0, 5)
        assert md.records[0, 1] <= 1e-8  # W11 norm at k=1

    def test_degree_four_dies_in_three(self):
        md = memory_decay(doubling_system(window=(0, 20)), DensityGrid(np.cos(8 * np.pi * X)), 0, 6)
        # cos 8pix -> cos 4pix -> cos 2pix -> 0
        assert md.records[2, 1] <= 1e-7

    def test_doeblin_rate(self):
        sys_ = bump_system()
        v = grid.project_zero_mass(DensityGrid(np.random.default_rng(1).normal(size=N)))
        md = memory_decay(sys_, v, 0, 8)
        alpha = 0.3
        l1_0 = grid.norm_l1(v)
        for k, _, l1 in md.records:
            assert l1 <= (1 - alpha) ** k * l1_0 * (1 + 1e-6)

    def test_nonzero_mass_rejected(self):
        with pytest.raises(ValueError):
            memory_decay(doubling_system(), DensityGrid.constant(1.0, N), 0, 3)

    def test_fitted_rate_periodic_schedule(self):
        t0 = CircleMap(2)
        t1 = CircleMap(2, sin_coeffs=(0.0, 0.02 / (1 + 2 * np.pi + 4 * np.pi**2)))
        kick = KickField(sin_coeffs=(0.0, 1 / (2 * np.pi)))
        sched = periodic_schedule(
            [DeterministicEntry(t0, kick, "a"), DeterministicEntry(t1, kick, "b")]
        )
        sys_ = SequenceSystem(sched, (0, 30), eps=0.0, n_points=N)
        v = DensityGrid(np.cos(2 * np.pi * X) + 0.5 * np.sin(4 * np.pi * X))
        md = memory_decay(sys_, v, 0, 20)
        assert 0.0 <= md.fitted_rate < 1.0


class TestSchedules:
    def test_seeded_random_deterministic(self):
        entries = [
            DeterministicEntry(CircleMap(2), KickField(), "a"),
            DeterministicEntry(CircleMap(3), KickField(), "b"),
        ]
        s1 = seeded_random_schedule(entries, seed=9)
        s2 = seeded_random_schedule(entries, seed=9)
        picks1 = [s1(n).key for n in range(20)]
        picks2 = [s2(n).key for n in range(20)]
        assert picks1 == picks2
        assert len(set(picks1)) == 2

    def test_certified_mode_rejects_far_map(self):
        far = CircleMap(2, sin_coeffs=(0.0, 0.05))
        entry = DeterministicEntry(far, KickField(), "far")
        sys_ = SequenceSystem(
            constant_schedule(entry), (0, 3), eps=0.0, n_points=N,
            reference=CircleMap(2), delta_star=0.1, certified=True,
        )
        with pytest.raises(ValueError):
            sys_.operator(0)

    def test_uncertified_mode_warns(self):
        far = CircleMap(2, sin_coeffs=(0.0, 0.05))
        entry = DeterministicEntry(far, KickField(), "far")
        sys_ = SequenceSystem(
            constant_schedule(entry), (0, 3), eps=0.0, n_points=N,
            reference=CircleMap(2), delta_star=0.1, certified=False,
        )
        with pytest.warns(UserWarning):
            sys_.operator(0)

    def test_matrix_cache_reused(self):
        sys_ = doubling_system()
        assert sys_.operator(0) is sys_.operator(7)


class TestStrongBound:
    def test_uniform_w11_bound(self):
        # sup_n ||mu_n||_s <= B/(1-lambda1) + 1 + 0.5 with doubling constants
        from seqresponse.constants import lasota_yorke_constants

        sys_ = doubling_system()
        fam = pullback_equivariant(sys_, 60, DensityGrid(1 + 0.9 * np.cos(2 * np.pi * X)))
        lam1, b = lasota_yorke_constants(2.0 - 1e-9, 0.0, 0.1)
        bound = b / (1 - lam1) + 1 + 0.5
        assert max(grid.norm_w11(mu) for mu in fam.densities) <= bound
