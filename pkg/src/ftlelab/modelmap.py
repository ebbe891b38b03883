"""The concrete model diffeomorphism: linear saddle chart plus fold returns.

One return cycle at index ``k`` is ``n_k^H`` steps of the exact linear
saddle map ``(s, u) -> (lambda_s s, lambda_u u)`` followed by a single
explicit fold map standing in for the whole tangential excursion of
``n_k^T`` iterates.  Only the fold's derivative structure and bounds
matter downstream, so modelling it as one map loses nothing the later
estimates use.

Absolute coordinates become numerically meaningless at production scale:
a rectangle of half-height ``exp(-25000)`` around a centre of size 0.1
cannot be represented as two nearby absolute logs.  The orbit machinery
therefore works in *offsets relative to the anchor orbit*, which the
maps transport exactly (the fold difference map is exactly
linear-plus-quadratic).  Absolute-coordinate entry points are provided
for moderate scales and match the offset machinery where both apply.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from random import Random
from typing import TYPE_CHECKING, Callable, Iterable

from . import sequences as seqs
from .errors import (
    ConfigurationError,
    DomainError,
    ModelInconsistencyError,
    PreconditionError,
)
from .logscalar import SignedLogReal, log_norm2, slog
from .matrices import Jacobian2

if TYPE_CHECKING:  # pragma: no cover
    from .parameters import Params


@dataclass(frozen=True, slots=True)
class LogPoint:
    """A point (or offset vector) of the chart in log-domain coordinates."""

    s: SignedLogReal
    u: SignedLogReal

    @classmethod
    def from_floats(cls, s: float, u: float) -> "LogPoint":
        return cls(slog(s), slog(u))

    def decode(self) -> tuple[float, float]:
        return (self.s.to_float(), self.u.to_float())

    def __add__(self, other: "LogPoint") -> "LogPoint":
        return LogPoint(self.s + other.s, self.u + other.u)

    def __sub__(self, other: "LogPoint") -> "LogPoint":
        return LogPoint(self.s - other.s, self.u - other.u)

    def norm(self) -> SignedLogReal:
        return log_norm2(self.s, self.u)


# ------------------------------------------------------------------ chart


@dataclass(frozen=True, slots=True)
class SaddleChart:
    """Linear saddle coordinates on K = (-1,1)^2 with core K' = [-c,c]^2."""

    lambda_s: float
    lambda_u: float
    K_half: float = 1.0
    Kp_half: float = 0.9

    def __post_init__(self) -> None:
        if not 0 < self.lambda_s < 1 < self.lambda_u:
            raise ConfigurationError("chart requires 0 < lambda_s < 1 < lambda_u")
        if self.lambda_s * self.lambda_u**3 >= 1:
            raise ConfigurationError("chart violates strong dissipation")
        if not 0 < self.Kp_half < self.K_half:
            raise ConfigurationError("core rectangle must sit strictly inside the chart")

    @property
    def rho(self) -> float:
        """Distance from the core to the chart boundary."""
        return self.K_half - self.Kp_half

    @property
    def log_lambda_s(self) -> float:
        return math.log(self.lambda_s)

    @property
    def log_lambda_u(self) -> float:
        return math.log(self.lambda_u)


def chart_for(p: "Params") -> SaddleChart:
    return SaddleChart(p.lambda_s, p.lambda_u)


def apply_hyperbolic(chart: SaddleChart, pt: LogPoint, j: int) -> LogPoint:
    """j saddle steps: coordinates scale by lambda_s^j and lambda_u^j.

    The caller certifies that all intermediate iterates stay in the chart.
    """
    if j == 0:
        return pt
    ds = j * chart.log_lambda_s
    du = j * chart.log_lambda_u
    s = pt.s if pt.s.is_zero else SignedLogReal(pt.s.sign, pt.s.log_mag + ds)
    u = pt.u if pt.u.is_zero else SignedLogReal(pt.u.sign, pt.u.log_mag + du)
    return LogPoint(s, u)


# ------------------------------------------------------------------ anchors


@dataclass(frozen=True)
class AnchorOrbit:
    """The reference orbit: cycle start points and fold entry points.

    ``zeta[k]`` starts cycle k inside the core; ``zeta_prime[k+1]`` is its
    image under the hyperbolic phase, where the fold takes over.
    """

    zeta: dict[int, LogPoint]
    zeta_prime: dict[int, LogPoint]
    z_s: float
    z_u: float


def place_anchors(
    p: "Params",
    chart: SaddleChart,
    k_lo: int,
    k_hi: int,
    z_s: float = 0.1,
    z_u: float = 0.5,
) -> AnchorOrbit:
    """Anchors zeta_k = (z_s, z_u * lambda_u^{-n_k}) and their fold-entry images.

    With this placement the whole hyperbolic segment of each cycle stays
    in the core: the s-coordinate only shrinks and the u-coordinate grows
    monotonically up to z_u.
    """
    if not (abs(z_s) <= chart.Kp_half and 0 < z_u <= chart.Kp_half):
        raise ConfigurationError(
            f"anchor base ({z_s}, {z_u}) leaves the core [-{chart.Kp_half}, {chart.Kp_half}]^2"
        )
    zeta: dict[int, LogPoint] = {}
    zeta_prime: dict[int, LogPoint] = {}
    for k in range(k_lo, k_hi + 1):
        n = seqs.n_hyper(p, k)
        zeta[k] = LogPoint(slog(z_s), SignedLogReal(1, math.log(z_u) - n * chart.log_lambda_u))
        zeta_prime[k + 1] = LogPoint(
            SignedLogReal(1, math.log(z_s) + n * chart.log_lambda_s), slog(z_u)
        )
    return AnchorOrbit(zeta, zeta_prime, z_s, z_u)


# -------------------------------------------------------------------- fold


@dataclass(frozen=True, slots=True)
class FoldMap:
    """One quadratic fold return at index ``k``.

    Around the source anchor the map is exactly

        (s, u) |-> target + (a11 s + a12 u,  a21 s + q u^2),

    so its derivative at the anchor has a vanishing (2,2) entry and
    vertical segments map to parabolas with curvature constant |q|/a12^2.
    """

    k: int
    a11: float
    a12: float
    a21: float
    q: float
    source_anchor: LogPoint
    target_anchor: LogPoint
    box_radius: float = 0.1

    def __post_init__(self) -> None:
        if self.a12 * self.a21 == 0:
            raise ConfigurationError("fold requires a12 * a21 != 0")
        if self.q == 0:
            raise ConfigurationError("fold requires q != 0")
        # local invertibility on the domain box
        if abs(self.a12 * self.a21) <= abs(self.a11) * 2 * abs(self.q) * self.box_radius:
            raise ConfigurationError("fold is not invertible on its domain box")

    # The fold transports anchor-relative offsets exactly.
    def apply_offset(self, d: LogPoint) -> LogPoint:
        a11, a12, a21, q = (slog(self.a11), slog(self.a12), slog(self.a21), slog(self.q))
        return LogPoint(a11 * d.s + a12 * d.u, a21 * d.s + q * d.u * d.u)

    def jacobian_at_offset(self, d: LogPoint) -> Jacobian2:
        return Jacobian2(
            slog(self.a11),
            slog(self.a12),
            slog(self.a21),
            slog(2 * self.q) * d.u,
        )

    def quad_constant(self) -> float:
        """|q| / a12^2: the curvature constant of vertical-segment images."""
        return abs(self.q) / self.a12**2

    def norm_bound(self) -> float:
        """Upper bound for the derivative operator norm over the domain box."""
        # Frobenius bound, monotone in |u|; evaluated at the box edge
        return math.sqrt(
            self.a11**2
            + self.a12**2
            + self.a21**2
            + (2 * self.q * self.box_radius) ** 2
        )


def _require_in_box(fold: FoldMap, d: LogPoint) -> None:
    lim = math.log(fold.box_radius)
    for comp in (d.s, d.u):
        if comp.sign != 0 and comp.log_mag > lim:
            raise DomainError("point lies outside the fold's domain box")


def apply_fold(fold: FoldMap, pt: LogPoint) -> LogPoint:
    """Absolute-coordinate fold application (moderate scales only)."""
    d = pt - fold.source_anchor
    _require_in_box(fold, d)
    return fold.target_anchor + fold.apply_offset(d)


def fold_jacobian(fold: FoldMap, pt: LogPoint) -> Jacobian2:
    """Derivative of the fold at an absolute point of its domain box."""
    d = pt - fold.source_anchor
    _require_in_box(fold, d)
    return fold.jacobian_at_offset(d)


DEFAULT_FOLD_COEFFS = {"a11": 0.3, "a12": 1.0, "a21": -1.0, "q": 2.0}


def build_fold_family(
    p: "Params",
    chart: SaddleChart,
    anchors: AnchorOrbit,
    k_lo: int,
    k_hi: int,
    jitter: float = 0.0,
    seed: int = 0,
) -> dict[int, FoldMap]:
    """One fold per cycle index, with optional +-jitter coefficient noise.

    Construction enforces the certified entry bounds for every index:
    |coef| <= Lambda1^nT / 2, min(|a12|, |a21|) >= 2 Lambda1^{-nT},
    2|q| <= Lambda1^nT, |q|/a12^2 <= C_T, and Lambda1 at least the fold's
    operator-norm bound.
    """
    rng = Random(seed)
    folds: dict[int, FoldMap] = {}
    for k in range(k_lo, k_hi + 1):
        c = dict(DEFAULT_FOLD_COEFFS)
        if jitter:
            for name in ("a11", "a12", "a21", "q"):
                c[name] *= 1 + jitter * (2 * rng.random() - 1)
            cap = p.C_T * c["a12"] ** 2
            if abs(c["q"]) > cap:
                c["q"] = math.copysign(cap, c["q"])
        if k + 1 not in anchors.zeta_prime or k + 1 not in anchors.zeta:
            raise ConfigurationError(f"anchor orbit does not cover fold index {k}")
        fold = FoldMap(
            k=k,
            a11=c["a11"],
            a12=c["a12"],
            a21=c["a21"],
            q=c["q"],
            source_anchor=anchors.zeta_prime[k + 1],
            target_anchor=anchors.zeta[k + 1],
        )
        nT = seqs.n_tan(p, k)
        lam_pow = p.Lambda1**nT
        coefs = (fold.a11, fold.a12, fold.a21)
        if max(abs(v) for v in coefs) > 0.5 * lam_pow:
            raise ConfigurationError(f"fold coefficient bound fails at k={k}")
        if min(abs(fold.a12), abs(fold.a21)) < 2.0 / lam_pow:
            raise ConfigurationError(f"fold off-diagonal floor fails at k={k}")
        if 2 * abs(fold.q) > lam_pow:
            raise ConfigurationError(f"fold curvature bound fails at k={k}")
        if fold.quad_constant() > p.C_T:
            raise ConfigurationError(f"fold quadratic constant exceeds C_T at k={k}")
        if p.Lambda1 < fold.norm_bound():
            raise ConfigurationError(f"Lambda1 below the fold norm bound at k={k}")
        folds[k] = fold
    return folds


def model_lambda(chart: SaddleChart, folds: Iterable[FoldMap]) -> float:
    """The model's expansion constant: max of lambda_u and fold norm bounds."""
    return max(chart.lambda_u, max(f.norm_bound() for f in folds))


# -------------------------------------------------------------- the orbit


@dataclass(frozen=True)
class CycleRecord:
    """What one return cycle produced, all anchor-relative."""

    l: int
    k: int
    start_offset: LogPoint
    fold_entry_offset: LogPoint
    end_offset: LogPoint
    fold_jacobian: Jacobian2
    nH: int
    nT: int


class ModelOrbit:
    """Evolves anchor-relative offsets through successive return cycles."""

    def __init__(
        self,
        p: "Params",
        chart: SaddleChart,
        anchors: AnchorOrbit,
        folds: dict[int, FoldMap],
    ):
        p.require_calibrated()
        self.p = p
        self.chart = chart
        self.anchors = anchors
        self.folds = folds
        self.k0 = p.k0

    def membership_bounds(self, l: int) -> tuple[float, float]:
        """(log half-width, log half-height) of the cycle-l rectangle."""
        p = self.p
        lw = seqs.log_eps_m(p, self.k0, l) + 0.5 * seqs.log_b(p, self.k0 + l)
        lh = seqs.log_eps_m(p, self.k0, l) + seqs.log_b(p, self.k0 + l) + math.log(0.25)
        return lw, lh

    def check_membership(self, l: int, offset: LogPoint) -> None:
        lw, lh = self.membership_bounds(l)
        if (offset.s.sign != 0 and offset.s.log_mag > lw) or (
            offset.u.sign != 0 and offset.u.log_mag > lh
        ):
            raise ModelInconsistencyError(f"orbit left its certified rectangle at cycle {l}")

    def run(
        self, offset0: LogPoint, M: int, check_membership: bool = True
    ) -> list[CycleRecord]:
        """M cycles from an offset in the base rectangle."""
        records: list[CycleRecord] = []
        offset = offset0
        for l in range(M):
            k = self.k0 + l
            if k not in self.folds:
                raise ModelInconsistencyError(f"fold family does not cover cycle index {k}")
            if check_membership:
                self.check_membership(l, offset)
            nH = seqs.n_hyper(self.p, k)
            nT = seqs.n_tan(self.p, k)
            entry = apply_hyperbolic(self.chart, offset, nH)
            fold = self.folds[k]
            jac = fold.jacobian_at_offset(entry)
            nxt = fold.apply_offset(entry)
            records.append(CycleRecord(l, k, offset, entry, nxt, jac, nH, nT))
            offset = nxt
        if check_membership:
            self.check_membership(M, offset)
        return records


# --------------------------------------------------------------- averages


@dataclass(frozen=True)
class Observable:
    """A bounded continuous observable with its sup bound on the chart."""

    fn: Callable[[float, float], float]
    sup: float
    lip: float | None = None


def distance_to_saddle() -> Observable:
    return Observable(fn=lambda s, u: math.hypot(s, u), sup=math.sqrt(2.0), lip=1.0)


def birkhoff_average(
    p: "Params",
    chart: SaddleChart,
    anchors: AnchorOrbit,
    folds: dict[int, FoldMap],
    observable: Observable,
    offset0: LogPoint,
    n_steps: int,
) -> float:
    """Time average of the observable over ``n_steps`` model iterates.

    Hyperbolic steps are evaluated pointwise along the orbit.  Each fold
    contributes its tangential step count with the observable evaluated
    at the fold's target anchor; any bounded placement leaves the limit
    unchanged because the tangential fraction of time vanishes.
    """
    if n_steps <= 0:
        raise PreconditionError("n_steps must be positive")
    orbit = ModelOrbit(p, chart, anchors, folds)
    total = 0.0
    consumed = 0
    l = 0
    offset = offset0
    while consumed < n_steps:
        k = orbit.k0 + l
        if k not in orbit.folds:
            raise ModelInconsistencyError(f"orbit ran past the assembled fold family at k={k}")
        orbit.check_membership(l, offset)
        nH = seqs.n_hyper(p, k)
        nT = seqs.n_tan(p, k)
        start_pt = anchors.zeta[k] + offset
        for j in range(nH):
            if consumed == n_steps:
                return total / n_steps
            s, u = apply_hyperbolic(chart, start_pt, j).decode()
            total += observable.fn(s, u)
            consumed += 1
        entry = apply_hyperbolic(chart, offset, nH)
        fold = orbit.folds[k]
        t_s, t_u = fold.target_anchor.decode()
        val = observable.fn(t_s, t_u)
        take = min(nT, n_steps - consumed)
        total += take * val
        consumed += take
        offset = fold.apply_offset(entry)
        l += 1
    return total / n_steps


# ------------------------------------------------------------------- dump


def dump_orbit_ndjson(path: str, records: Iterable[CycleRecord], anchors: AnchorOrbit) -> None:
    """One record per return phase: cycle start and fold entry points."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fh:
        for r in records:
            start = anchors.zeta[r.k] + r.start_offset
            entry = anchors.zeta_prime[r.k + 1] + r.fold_entry_offset
            for pt, phase in ((start, "hyperbolic"), (entry, "fold")):
                fh.write(
                    json.dumps(
                        {
                            "k": r.k,
                            "point_s_log": pt.s.log_mag if pt.s.sign else -math.inf,
                            "point_u_log": pt.u.log_mag if pt.u.sign else -math.inf,
                            "phase": phase,
                        }
                    )
                    + "\n"
                )
