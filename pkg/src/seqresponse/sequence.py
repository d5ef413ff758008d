"""Finite-window realization of the bi-infinite sequential system.

A schedule assigns to each time index a system element: a deterministic
expanding map with its kick field, or a drift map with its noise
density.  Equivariant families are produced by the pullback sweep: push
an arbitrary probability seed forward from burn_in steps before the
window and record the densities inside it.

Composition convention: compose(sys, j, k, f) applies the operators at
indices j, j+1, ..., j+k-1 in increasing time order (index j acts
first).  The uniqueness recursion Delta_n = L_{n-1} Delta_{n-1} forces
this time-ordered semantics and it is used consistently everywhere.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import grid as gridmod
from . import noise as noisemod
from . import transfer
from .errors import NotConverged, WindowExceeded
from .grid import DensityGrid
from .maps import CircleMap, KickField, c2_distance
from .noise import DriftMap, NoiseDensity
from .transfer import TransferMatrix

DEFAULT_PULLBACK_TOL = 1e-8
MIN_BURN_IN = 50


@dataclass(frozen=True)
class DeterministicEntry:
    """One scheduled deterministic step: expanding map + kick direction."""

    map: CircleMap
    kick: KickField
    key: object


@dataclass(frozen=True)
class NoisyEntry:
    """One scheduled noisy step: drift map + common noise density."""

    drift: DriftMap
    noise: NoiseDensity
    key: object


def constant_schedule(entry):
    return lambda n: entry


def periodic_schedule(entries):
    entries = list(entries)
    return lambda n: entries[n % len(entries)]


def seeded_random_schedule(entries, seed: int):
    """Deterministic per-index choice among a finite entry list."""
    entries = list(entries)

    def schedule(n):
        rng = np.random.Generator(np.random.Philox(key=(seed, n & 0xFFFFFFFFFFFFFFFF)))
        return entries[rng.integers(len(entries))]

    return schedule


class SequenceSystem:
    """Schedule of operators on a finite window with matrix caching.

    If `reference` and `delta_star` are given, every scheduled
    deterministic map is checked against the admissible C^2 ball; a
    violation raises in certified mode and warns otherwise.
    """

    def __init__(
        self,
        schedule,
        window: tuple[int, int],
        eps: float,
        n_points: int,
        reference: CircleMap | None = None,
        delta_star: float | None = None,
        certified: bool = False,
    ):
        if window[1] < window[0]:
            raise ValueError("empty window")
        self.schedule = schedule
        self.window = (int(window[0]), int(window[1]))
        self.eps = float(eps)
        self.n_points = int(n_points)
        self.reference = reference
        self.delta_star = delta_star
        self.certified = certified
        self._cache: dict = {}
        self._checked: set = set()

    def entry(self, n: int):
        return self.schedule(n)

    def _admissibility(self, entry: DeterministicEntry) -> None:
        if self.reference is None or self.delta_star is None:
            return
        if entry.key in self._checked:
            return
        self._checked.add(entry.key)
        dist = c2_distance(entry.map, self.reference)
        if dist > self.delta_star:
            msg = f"scheduled map is outside the certified ball: C2 distance {dist:.4g} > delta_star {self.delta_star:.4g}"
            if self.certified:
                raise ValueError(msg)
            warnings.warn(msg, stacklevel=3)

    def operator(self, n: int, eps: float | None = None) -> TransferMatrix:
        """Transfer matrix at index n and perturbation strength eps.

        Deterministic entries realize L_n^eps = L_{h_eps} L_{T_n}
        (pushforward of the post-composition kick h_eps o T_n).
        """
        eps = self.eps if eps is None else float(eps)
        entry = self.entry(n)
        cache_key = (entry.key, eps)
        if cache_key in self._cache:
            return self._cache[cache_key]
        if isinstance(entry, DeterministicEntry):
            self._admissibility(entry)
            base_key = (entry.key, "base")
            if base_key not in self._cache:
                self._cache[base_key] = transfer.build_deterministic(entry.map, self.n_points)
            mat = self._cache[base_key]
            if eps != 0.0:
                mat = transfer.compose_matrices(
                    transfer.build_kick(entry.kick, eps, self.n_points), mat, kind="deterministic"
                )
        else:
            mat = noisemod.build_kernel(entry.drift, eps, entry.noise, self.n_points)
        self._cache[cache_key] = mat
        return mat


@dataclass(frozen=True)
class EquivariantFamily:
    """Probability densities mu_n, n in [n_lo, n_hi], from the pullback sweep."""

    n_lo: int
    densities: tuple
    burn_in: int
    convergence_residual: float

    @property
    def n_hi(self) -> int:
        return self.n_lo + len(self.densities) - 1

    def density(self, n: int) -> DensityGrid:
        if not self.n_lo <= n <= self.n_hi:
            raise WindowExceeded(f"index {n} outside family window [{self.n_lo}, {self.n_hi}]")
        return self.densities[n - self.n_lo]


def compose(sys: SequenceSystem, j: int, k: int, f: DensityGrid, eps: float | None = None) -> DensityGrid:
    """Apply the k operators at indices j .. j+k-1 in time order."""
    if k < 0:
        raise ValueError("negative composition length")
    if k > 0 and not (sys.window[0] <= j and j + k - 1 <= sys.window[1]):
        raise WindowExceeded(f"[{j}, {j + k - 1}] outside window {sys.window}")
    for m in range(j, j + k):
        f = transfer.apply(sys.operator(m, eps), f)
    return f


def _sweep(sys: SequenceSystem, burn_in: int, seed_density: DensityGrid, eps: float | None) -> list[DensityGrid]:
    n_lo, n_hi = sys.window
    mu = seed_density
    out = []
    for m in range(n_lo - burn_in, n_hi + 1):
        if m >= n_lo:
            out.append(mu)
        if m <= n_hi - 1 or m < n_lo:
            mu = transfer.apply(sys.operator(m, eps), mu)
    return out


def pullback_equivariant(
    sys: SequenceSystem,
    burn_in: int,
    seed_density: DensityGrid,
    tol: float = DEFAULT_PULLBACK_TOL,
    eps: float | None = None,
) -> EquivariantFamily:
    """Equivariant family by the pullback construction.

    mu_n is the burn_in-fold pushforward of the seed started at
    n - burn_in; one sweep of length window + burn_in covers all n.
    The residual compares against a half-burn-in sweep in W^{1,1}.
    """
    if burn_in < 1:
        raise ValueError("burn_in must be >= 1")
    if abs(gridmod.mass(seed_density) - 1.0) > 1e-10:
        raise ValueError("seed must be a probability density")
    full = _sweep(sys, burn_in, seed_density, eps)
    half = _sweep(sys, max(1, burn_in // 2), seed_density, eps)
    residual = max(gridmod.norm_w11(a - b) for a, b in zip(full, half))
    if residual > tol:
        raise NotConverged(f"pullback residual {residual:.3g} > tol {tol:.3g}; increase burn_in")
    return EquivariantFamily(
        n_lo=sys.window[0], densities=tuple(full), burn_in=burn_in, convergence_residual=residual
    )


@dataclass(frozen=True)
class MemoryDecay:
    """Norm track of a zero-mass seed under the sequential composition."""

    records: np.ndarray  # columns: k, w11_norm, l1_norm
    fitted_rate: float


def memory_decay(sys: SequenceSystem, v: DensityGrid, j: int, k_max: int, eps: float | None = None) -> MemoryDecay:
    """Push a zero-mass density and record norms for k = 1..k_max.

    The exponential rate is least-squares fitted from log W^{1,1} norm
    vs k over the last half of the range; steps where the norm has
    collapsed to round-off are excluded from the fit.
    """
    if abs(gridmod.mass(v)) > 1e-12:
        raise ValueError("seed must have zero mass")
    records = np.zeros((k_max, 3))
    f = v
    for k in range(1, k_max + 1):
        f = transfer.apply(sys.operator(j + k - 1, eps), f)
        records[k - 1] = (k, gridmod.norm_w11(f), gridmod.norm_l1(f))
    tail = records[k_max // 2 :]
    ok = tail[:, 1] > 1e-14
    if np.count_nonzero(ok) >= 2:
        slope = np.polyfit(tail[ok, 0], np.log(tail[ok, 1]), 1)[0]
        rate = float(np.exp(slope))
    else:
        rate = 0.0
    return MemoryDecay(records=records, fitted_rate=rate)


def default_burn_in(c_elom: float, rate: float, tol: float = DEFAULT_PULLBACK_TOL) -> int:
    """Smallest burn-in with C * rate^k < tol, floored at 50."""
    if not 0.0 < rate < 1.0:
        raise ValueError("rate must be in (0, 1)")
    k = int(np.ceil(np.log(tol / max(c_elom, 1.0)) / np.log(rate)))
    return max(k, MIN_BURN_IN)
