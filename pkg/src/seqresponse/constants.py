"""Explicit constants and admissibility conditions for the reference map.

Produces a machine-readable certificate: Lasota-Yorke constants, block
length M, the mixed-norm constant C(T0), the admissible radius
delta_star, and the resulting loss-of-memory rate.  The weak
contraction condition on L0^M is verified on the discretized operator
against a probe family, so certificates are numerically certified, not
proven.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict

import numpy as np

from . import grid as gridmod
from . import transfer
from .errors import MNotFound
from .grid import DensityGrid
from .maps import CircleMap, c2_distance
from .noise import NoiseDensity

M_SEARCH_LIMIT = 10**4
DELTA_BISECT_TOL = 1e-6

FORMULAS = {
    "lambda1": "1 / (lambda0 - delta_star)",
    "B": "(M2 + delta_star) / (lambda0 - delta_star)^2",
    "M": "min M with lambda1^M <= 1/(10(B/(1-lambda1)+1)) and ||L0^M v||_L1 <= (1-lambda1)/(10B) ||v||_W11 on probes",
    "C_T0": "d [ 2(M0+lambda0-1)/lambda0^2 + (M0+lambda0-1)(M2/lambda0^3 + 1/lambda0) ]",
    "C_T0_alt": "2 d (M0+lambda0-1) (1/lambda0^2 + M2/lambda0^3 + 1/lambda0)",
    "delta_star": "largest delta with C_T0 delta <= 7(1-lambda1)^2 / (10 M B (1/(1-lambda1) + B))",
    "elom_rate": "(9/10)^(1/(2M)) per step",
    "elom_C": "(10/9) (B/(1-lambda1) + 1)",
}


def lasota_yorke_constants(lambda0: float, M2: float, delta_star: float) -> tuple[float, float]:
    """Uniform one-step constants (lambda1, B) on the delta_star ball."""
    lam1 = 1.0 / (lambda0 - delta_star)
    b = (M2 + delta_star) / (lambda0 - delta_star) ** 2
    return lam1, b


def c_t0(lambda0: float, M0: float, M2: float, degree: int, delta_star: float = 0.0) -> float:
    """Mixed-norm W^{1,1} -> L^1 continuity constant, proof-backed form.

    delta_star only gates admissibility (it must stay below lambda0 - 1);
    the constant itself absorbs the worst case delta = lambda0 - 1.
    """
    if lambda0 <= 1.0:
        raise ValueError("lambda0 must exceed 1")
    if not 0.0 <= delta_star < lambda0 - 1.0:
        raise ValueError("delta_star must lie in [0, lambda0 - 1)")
    a = M0 + lambda0 - 1.0
    return degree * (2.0 * a / lambda0**2 + a * (M2 / lambda0**3 + 1.0 / lambda0))


def c_t0_alt(lambda0: float, M0: float, M2: float, degree: int) -> float:
    """Alternative closed form of the same constant, reported side by side.

    Disagrees with c_t0 in factor arrangement (9 vs 6 for the doubling
    map); c_t0 is the one backed by a proof and used in certificates.
    """
    return 2.0 * degree * (M0 + lambda0 - 1.0) * (1.0 / lambda0**2 + M2 / lambda0**3 + 1.0 / lambda0)


def _probe_family(n_points: int) -> np.ndarray:
    """Zero-mass probe densities: 20 low harmonics + 30 random smooth combos."""
    x = np.arange(n_points) / n_points
    cols = []
    for k in range(1, 11):
        cols.append(np.cos(2 * np.pi * k * x))
        cols.append(np.sin(2 * np.pi * k * x))
    rng = np.random.default_rng(20250824)
    for _ in range(30):
        v = np.zeros(n_points)
        for k in range(1, 9):
            v += rng.normal() * np.cos(2 * np.pi * k * x) + rng.normal() * np.sin(2 * np.pi * k * x)
        cols.append(v)
    return np.array(cols).T  # (N, 50)


def choose_M(
    t0: CircleMap,
    lambda1: float,
    b: float,
    n_points: int,
    l0_matrix: transfer.TransferMatrix | None = None,
) -> int:
    """Smallest block length M passing both contraction conditions.

    Closed form gives the lambda1^M threshold; the weak condition
    ||L0^M v||_L1 <= (1-lambda1)/(10 B) ||v||_W11 is then verified on
    the probe family, continuing the search upward on failure.
    """
    if not 0.0 < lambda1 < 1.0:
        raise MNotFound(f"lambda1 = {lambda1} admits no finite M")
    target = 1.0 / (10.0 * (b / (1.0 - lambda1) + 1.0))
    m_closed = max(1, int(np.ceil(np.log(target) / np.log(lambda1))))
    if m_closed > M_SEARCH_LIMIT:
        raise MNotFound(f"closed-form threshold already exceeds {M_SEARCH_LIMIT}")
    if l0_matrix is None:
        l0_matrix = transfer.build_deterministic(t0, n_points)
    probes = _probe_family(n_points)
    w11 = np.array([gridmod.norm_w11(DensityGrid(probes[:, i])) for i in range(probes.shape[1])])
    threshold = (1.0 - lambda1) / (10.0 * b) if b > 0 else np.inf
    pushed = probes.copy()
    for m in range(1, M_SEARCH_LIMIT + 1):
        pushed = l0_matrix.entries @ pushed
        if m < m_closed:
            continue
        l1 = np.abs(pushed).sum(axis=0) / n_points
        if np.all(l1 <= threshold * w11):
            return m
    raise MNotFound(f"no M <= {M_SEARCH_LIMIT} passes the weak contraction check")


@dataclass(frozen=True)
class DisplacementBounds:
    """Appendix-style displacement bounds for two nearby maps plus the probe."""

    branch_disp: float
    weight_disp: float
    comp_disp_factor: float
    measured_branch_disp: float


def displacement_bounds(t0: CircleMap, t1) -> DisplacementBounds:
    """Theoretical displacement bounds delta/lambda0, (M2/lambda0^3 + 1/lambda0) delta,
    2 (M0+delta) delta / lambda0, with the branch bound checked against a
    512-point measurement.
    """
    delta = c2_distance(t0, t1)
    lam0, m0, m2 = t0.constants()
    branch = delta / lam0
    weight = (m2 / lam0**3 + 1.0 / lam0) * delta
    comp = 2.0 * (m0 + delta) * delta / lam0
    x = np.arange(512) / 512
    h0 = t0.inverse_branches(x)
    h1 = t1.inverse_branches(x)
    d = np.abs(h0 - h1)
    measured = float(np.max(np.minimum(d, 1.0 - d)))
    if measured > branch + 1e-12:
        raise AssertionError(f"measured branch displacement {measured:.3g} exceeds bound {branch:.3g}")
    return DisplacementBounds(branch, weight, comp, measured)


@dataclass(frozen=True)
class Certificate:
    """Numerically certified constants for the reference map at grid size N."""

    degree: int
    n_points: int
    lambda0: float
    M0: float
    M2: float
    delta_star: float
    lambda1: float
    B: float
    M: int
    C_T0: float
    C_T0_alt: float
    elom_C: float
    elom_rate: float

    def inequality_checks(self) -> dict[str, bool]:
        """Re-validate the four defining inequalities exactly as stated."""
        lam1, b = self.lambda1, self.B
        return {
            "delta_star_range": 0.0 < self.delta_star < self.lambda0 - 1.0,
            "lasota_yorke_constants": (
                abs(lam1 - 1.0 / (self.lambda0 - self.delta_star)) < 1e-12
                and 0.0 < lam1 < 1.0
                and abs(b - (self.M2 + self.delta_star) / (self.lambda0 - self.delta_star) ** 2) < 1e-12
            ),
            "block_length": lam1**self.M <= 1.0 / (10.0 * (b / (1.0 - lam1) + 1.0)),
            "delta_star_smallness": self.C_T0 * self.delta_star
            <= 7.0 * (1.0 - lam1) ** 2 / (10.0 * self.M * b * (1.0 / (1.0 - lam1) + b)),
        }

    @property
    def all_verified(self) -> bool:
        return all(self.inequality_checks().values())

    def to_json(self) -> str:
        payload = asdict(self)
        payload["formulas"] = FORMULAS
        payload["inequalities_verified"] = self.inequality_checks()
        payload["status"] = "numerically certified" if self.all_verified else "FAILED"
        return json.dumps(payload, indent=2)


def certify(t0: CircleMap, n_points: int) -> Certificate:
    """Largest admissible delta_star by bisection, plus the decay certificate.

    lambda1, B, M all depend on delta_star, so each probe recomputes the
    chain.  The strong norm contracts by 9/10 per 2M steps, giving the
    per-step rate (9/10)^(1/(2M)) and C_ELoM = (10/9)(B/(1-lambda1)+1).
    """
    lam0, m0, m2 = t0.constants()
    ct0 = c_t0(lam0, m0, m2, t0.degree)
    l0_matrix = transfer.build_deterministic(t0, n_points)

    def chain(delta):
        lam1, b = lasota_yorke_constants(lam0, m2, delta)
        m = choose_M(t0, lam1, b, n_points, l0_matrix)
        return lam1, b, m

    def feasible(delta):
        try:
            lam1, b, m = chain(delta)
        except MNotFound:
            return False
        rhs = 7.0 * (1.0 - lam1) ** 2 / (10.0 * m * b * (1.0 / (1.0 - lam1) + b))
        return ct0 * delta <= rhs

    lo = 0.0
    hi = lam0 - 1.0 - 1e-9
    if feasible(hi):
        lo = hi
    else:
        while hi - lo > DELTA_BISECT_TOL:
            mid = 0.5 * (lo + hi)
            if feasible(mid):
                lo = mid
            else:
                hi = mid
    if lo <= 0.0:
        # Fall back to a tiny but feasible radius; B -> 0 makes the
        # smallness condition vacuous in that limit.
        lo = DELTA_BISECT_TOL
        if not feasible(lo):
            raise MNotFound("no positive delta_star satisfies the smallness condition")
    delta_star = lo
    lam1, b, m = chain(delta_star)
    return Certificate(
        degree=t0.degree,
        n_points=n_points,
        lambda0=lam0,
        M0=m0,
        M2=m2,
        delta_star=delta_star,
        lambda1=lam1,
        B=b,
        M=m,
        C_T0=ct0,
        C_T0_alt=c_t0_alt(lam0, m0, m2, t0.degree),
        elom_C=(10.0 / 9.0) * (b / (1.0 - lam1) + 1.0),
        elom_rate=(9.0 / 10.0) ** (1.0 / (2.0 * m)),
    )


def doeblin_certificate(q: NoiseDensity) -> tuple[float, float]:
    """(C, rate) for a Doeblin schedule: C = 1, rate = 1 - alpha."""
    if q.alpha <= 0.0:
        raise ValueError("Doeblin certificate needs a uniformly positive noise density")
    return 1.0, 1.0 - q.alpha
