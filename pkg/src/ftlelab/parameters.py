"""Model parameters, the feasibility system, and base-index calibration.

A parameter tuple fixes the saddle eigenvalues ``lambda_s < 1 < lambda_u``,
the oscillation exponents ``alpha < beta``, the seed return time ``n0H``,
the affine tangential-return model, and the model constants
``C_T, Lambda1, C0``.  Calibration then derives ``beta_prime``, the even
base index ``k0`` and the margin constant ``xi`` that together certify all
downstream inequalities up to a finite horizon.

Every inequality is evaluated in log domain and expressed as a margin
that must be strictly negative, so reports are diff-able and the same
code path serves both decision and explanation.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

from . import sequences as seqs
from .errors import (
    ConfigurationError,
    DomainError,
    PreconditionError,
    SearchExhaustedError,
)

_PARAM_FIELDS = (
    "lambda_s",
    "lambda_u",
    "alpha",
    "beta",
    "n0H",
    "nT_offset",
    "nT_slope",
    "C_T",
    "Lambda1",
    "C0",
    "beta_prime",
    "k0",
    "xi",
)


@dataclass(frozen=True, slots=True)
class Params:
    """The full parameter tuple.

    ``beta_prime``, ``k0`` and ``xi`` are derived quantities; they are
    ``None`` until :func:`calibrate` (or an explicit config) fills them.
    Construction validates only domain sanity; feasibility of the
    inequality system is a separate, reportable question
    (:func:`check_feasibility`), since infeasible tuples must remain
    representable for scans and negative controls.
    """

    lambda_s: float
    lambda_u: float
    alpha: float
    beta: float
    n0H: int = 10
    nT_offset: int = 5
    nT_slope: float = 0.2
    C_T: float = 2.0
    Lambda1: float = 2.0
    C0: float = 1.5
    beta_prime: float | None = None
    k0: int | None = None
    xi: float | None = None

    def __post_init__(self) -> None:
        for name in ("lambda_s", "lambda_u", "alpha", "beta", "nT_slope", "C_T", "Lambda1", "C0"):
            v = getattr(self, name)
            if not math.isfinite(float(v)):
                raise DomainError(f"{name} must be finite, got {v!r}")
        if not 0 < self.lambda_s < 1:
            raise DomainError(f"lambda_s must lie in (0,1), got {self.lambda_s}")
        if not self.lambda_u > 1:
            raise DomainError(f"lambda_u must exceed 1, got {self.lambda_u}")
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not 1 < v < 2:
                raise DomainError(f"{name} must lie in (1,2), got {v}")
        if self.n0H < 1:
            raise DomainError("n0H must be a positive integer")
        if self.nT_offset < 1:
            raise DomainError("nT_offset must be a positive integer")
        if self.nT_slope < 0:
            raise DomainError("nT_slope must be non-negative")
        if self.C_T <= 0:
            raise DomainError("C_T must be positive")
        if self.Lambda1 < 2:
            raise DomainError("Lambda1 must be >= 2")
        if not 1 < self.C0 < 2:
            raise DomainError("C0 must lie in (1,2)")
        if self.beta_prime is not None and not self.beta < self.beta_prime < 1.25:
            raise DomainError(
                f"beta_prime must lie in (beta, 5/4), got {self.beta_prime} with beta={self.beta}"
            )
        if self.k0 is not None and (self.k0 <= 0 or self.k0 % 2 != 0):
            raise DomainError(f"k0 must be a positive even integer, got {self.k0}")
        if self.xi is not None and not 0 < self.xi < 1:
            raise DomainError(f"xi must lie in (0,1), got {self.xi}")

    # ------------------------------------------------------------- helpers
    @property
    def log_lambda_s(self) -> float:
        return math.log(self.lambda_s)

    @property
    def log_lambda_u(self) -> float:
        return math.log(self.lambda_u)

    @property
    def log_Lambda1(self) -> float:
        return math.log(self.Lambda1)

    def is_calibrated(self) -> bool:
        return self.beta_prime is not None and self.k0 is not None and self.xi is not None

    def require_calibrated(self) -> None:
        if not self.is_calibrated():
            raise PreconditionError("parameters are not calibrated (beta_prime/k0/xi unset)")

    # --------------------------------------------------------------- (de)ser
    def to_json_dict(self) -> dict:
        return {name: getattr(self, name) for name in _PARAM_FIELDS}

    @classmethod
    def from_mapping(cls, d: dict) -> "Params":
        unknown = set(d) - set(_PARAM_FIELDS)
        if unknown:
            raise ConfigurationError(f"unknown parameter fields: {sorted(unknown)}")
        missing = {"lambda_s", "lambda_u", "alpha", "beta"} - set(d)
        if missing:
            raise ConfigurationError(f"missing parameter fields: {sorted(missing)}")
        kwargs = dict(d)
        for int_name in ("n0H", "nT_offset", "k0"):
            if kwargs.get(int_name) is not None:
                kwargs[int_name] = int(kwargs[int_name])
        return cls(**kwargs)


def reference_params() -> Params:
    """The tuple used throughout the regression suite."""
    return Params(lambda_s=0.05, lambda_u=2.0, alpha=1.02, beta=1.04, n0H=10)


# ------------------------------------------------------------- feasibility


@dataclass(frozen=True, slots=True)
class Constraint:
    """One inequality, normalised so that ok == (lhs_log < 0)."""

    id: str
    lhs_log: float
    ok: bool


@dataclass(frozen=True, slots=True)
class FeasibilityReport:
    feasible: bool
    per_constraint: tuple[Constraint, ...]

    def constraint(self, cid: str) -> Constraint:
        for c in self.per_constraint:
            if c.id == cid:
                return c
        raise KeyError(cid)

    def first_violation(self) -> Constraint | None:
        for c in self.per_constraint:
            if not c.ok:
                return c
        return None

    def to_json(self) -> str:
        return json.dumps(
            [{"id": c.id, "lhs_log": c.lhs_log, "ok": c.ok} for c in self.per_constraint]
        )


# Constraint ids, in report order.  The first seven are the exponent
# feasibility system; the last is the strong-dissipation requirement.
CONSTRAINT_IDS = (
    "exponent_order",
    "alpha_window",
    "contraction_budget",
    "expansion_reserve",
    "width_decay",
    "alpha_beta_gap",
    "alpha_beta_gap_scaled",
    "strong_dissipation",
)


def _constraint_margins(p: Params) -> dict[str, float]:
    ls, lu = p.log_lambda_s, p.log_lambda_u
    a, b = p.alpha, p.beta
    q3 = (9 * b - 6) / (2 - b)
    return {
        "exponent_order": max(-math.log(a), math.log(a) - math.log(b), math.log(b) - math.log(2)),
        "alpha_window": 2.5 * a - 2 - 1 / (a * b),
        "contraction_budget": ls + q3 * lu,
        "expansion_reserve": -(lu + (a * b - 1) * (ls + 3 * lu)),
        "width_decay": 0.5 * ls + (6 * b / (2 - b) - 3 / (2 - a) - q3 / 2) * lu,
        "alpha_beta_gap": (q3 - 3.5 * a) * lu,
        "alpha_beta_gap_scaled": (ls + q3 * lu) - a * b * (ls + 3.5 * a * lu),
        "strong_dissipation": ls + 3 * lu,
    }


def check_feasibility(p: Params) -> FeasibilityReport:
    """Evaluate the seven exponent inequalities plus strong dissipation.

    Each inequality is reported as a log-domain margin that must be
    strictly negative.
    """
    margins = _constraint_margins(p)
    rows = tuple(Constraint(cid, margins[cid], margins[cid] < 0) for cid in CONSTRAINT_IDS)
    return FeasibilityReport(all(c.ok for c in rows), rows)


def require_feasible(p: Params) -> None:
    rep = check_feasibility(p)
    if not rep.feasible:
        bad = rep.first_violation()
        raise PreconditionError(f"parameters are infeasible ({bad.id}: margin {bad.lhs_log:+.6g})")


# -------------------------------------------------------------------- scan


@dataclass(frozen=True)
class ParamGrid:
    """Cartesian grid over the four leading fields; other fields fixed."""

    lambda_s: Sequence[float]
    lambda_u: Sequence[float]
    alpha: Sequence[float]
    beta: Sequence[float]
    fixed: dict = field(default_factory=dict)


def grid_values(lo: float, hi: float, step: float) -> list[float]:
    """Decimal grid lo+step, lo+2*step, ... capped at hi (lo exclusive)."""
    out = []
    i = 1
    while True:
        v = round(lo + i * step, 12)
        if v > hi + 1e-15:
            break
        out.append(v)
        i += 1
    return out


def scan_feasible(grid: ParamGrid) -> list[Params]:
    """All grid points passing :func:`check_feasibility`.

    Results are ordered lexicographically by (alpha, beta, lambda_s,
    lambda_u); the order is deterministic under any evaluation strategy.
    """
    for name in ("lambda_s", "lambda_u", "alpha", "beta"):
        if len(getattr(grid, name)) == 0:
            raise DomainError(f"grid axis {name} is empty")
    out: list[Params] = []
    for a, b, ls, lu in itertools.product(
        sorted(grid.alpha), sorted(grid.beta), sorted(grid.lambda_s), sorted(grid.lambda_u)
    ):
        try:
            cand = Params(lambda_s=ls, lambda_u=lu, alpha=a, beta=b, **grid.fixed)
        except DomainError:
            continue
        if check_feasibility(cand).feasible:
            out.append(cand)
    return out


# ------------------------------------------------------------- beta_prime


def _theta_exponent(p: Params, bp: float) -> float:
    """ln of the decay constant controlling the fiber-shrink ratio."""
    return 0.5 * p.log_lambda_s + (
        6 * bp / (2 - bp) - 3 / (2 - p.alpha) - (9 * p.beta - 6) / (2 * (2 - p.beta))
    ) * p.log_lambda_u


def beta_prime_interval(p: Params) -> tuple[float, float]:
    """The open sub-interval of (beta, 5/4) where the decay constant stays
    below 1; its upper endpoint is located by bisection when the constant
    crosses 1 before 5/4."""
    lo, hi = p.beta, 1.25
    if _theta_exponent(p, lo) >= 0:
        raise SearchExhaustedError("no admissible beta_prime", first_violation="width_decay")
    if _theta_exponent(p, hi - 1e-12) < 0:
        return lo, hi
    x, y = lo, hi
    for _ in range(80):
        mid = 0.5 * (x + y)
        if _theta_exponent(p, mid) < 0:
            x = mid
        else:
            y = mid
    return lo, x


def select_beta_prime(p: Params, check_feasible: bool = True) -> float:
    """Midpoint of the admissible (beta, 5/4) sub-interval found by bisection.

    Admissible means the decay constant stays below 1; the exponent gap
    3/(2 - beta') - 4 < 0 is automatic below 5/4.  For feasible tuples
    the interval is never empty: at beta' = beta the decay exponent is
    exactly the width_decay margin.
    """
    if check_feasible:
        require_feasible(p)
    lo, hi = beta_prime_interval(p)
    return lo + (hi - lo) / 2


# ------------------------------------------------- calibration conditions
#
# Each checker returns (ok, detail).  They are the re-validation surface:
# the calibration search uses exactly these functions, and tests feed the
# found (k0, xi) back through them.


def _eps_base_log(p: Params, n: int) -> float:
    return seqs.eps_base_log(p, n)


def _balance_left_log(p: Params, n: int) -> float:
    """ln(lambda_s^(1+1/n) * lambda_u^(7 alpha / 2))."""
    return (1 + 1.0 / n) * p.log_lambda_s + 3.5 * p.alpha * p.log_lambda_u


def cond_exponent_balance(p: Params, k0: int, xi: float, M: int) -> tuple[bool, str]:
    """Parity-weighted balance between the two contraction rates.

    Checked at the base index for m = 0..M; the left side grows and the
    correction term shrinks as k increases, so the base index is the
    binding case for every larger k.
    """
    n = seqs.n_hyper(p, k0)
    L1 = _balance_left_log(p, n)
    L2 = _eps_base_log(p, n)
    corr0 = (math.log(2 * p.lambda_u) - math.log(xi)) / n
    ab = p.alpha * p.beta
    for m in range(M + 1):
        delta = (m + 1) // 2 - m // 2  # 1 for odd m, 0 for even
        lhs = (ab**delta) * L1
        rhs = L2 + corr0 * ab ** (-(m // 2))
        if lhs < rhs:
            return False, f"exponent balance fails at m={m}"
    return True, ""


def cond_xi_contraction(p: Params, k0: int, xi: float) -> tuple[bool, str]:
    """Both seed products must be at most 1e-4."""
    nT = seqs.n_tan(p, k0)
    nH = seqs.n_hyper(p, k0)
    cap = math.log(1e-4)
    first = math.log(xi) + 2 * nT * p.log_Lambda1
    second = nH * (p.log_lambda_s - p.log_lambda_u) + 2 * nT * p.log_Lambda1
    if first > cap:
        return False, "xi * Lambda1^(2 nT) exceeds 1e-4"
    if second > cap:
        return False, "(lambda_s/lambda_u)^nH * Lambda1^(2 nT) exceeds 1e-4"
    return True, ""


def cond_nh_monotone(p: Params, k0: int, M: int) -> tuple[bool, str]:
    prev = seqs.n_hyper(p, k0)
    for k in range(k0 + 1, k0 + M + 1):
        cur = seqs.n_hyper(p, k)
        if cur < prev:
            return False, f"n_hyper decreases at k={k}"
        prev = cur
    return True, ""


def cond_contraction_gap(p: Params, k0: int, M: int) -> tuple[bool, str]:
    """(lambda_s/lambda_u)^nH <= Lambda1^(-2 nT) / 2 on the certified range."""
    for k in range(k0, k0 + M + 1):
        lhs = seqs.n_hyper(p, k) * (p.log_lambda_s - p.log_lambda_u)
        rhs = -2 * seqs.n_tan(p, k) * p.log_Lambda1 - math.log(2)
        if lhs > rhs:
            return False, f"contraction gap fails at k={k}"
    return True, ""


def cond_width_dominates(p: Params, k0: int, M: int) -> tuple[bool, str]:
    """4 * lambda_u^((3/(2-beta') - 4) nH) <= 1 on the certified range."""
    if p.beta_prime is None:
        return False, "beta_prime unset"
    expo = 3 / (2 - p.beta_prime) - 4
    for k in range(k0, k0 + M + 1):
        if math.log(4) + expo * seqs.n_hyper(p, k) * p.log_lambda_u > 0:
            return False, f"width domination fails at k={k}"
    return True, ""


def cond_alpha_step_window(p: Params, k0: int, M: int) -> tuple[bool, str]:
    """Per-parity alpha window used by the fold-entry offset bound."""
    n = seqs.n_hyper(p, k0)
    ab = p.alpha * p.beta
    for m in range(M + 1):
        lhs = (
            3.5 * p.alpha
            - 2
            - ab ** (m // 2 - (m + 1) // 2)
            + (3.0 / n) * ab ** (-((m + 1) // 2))
        )
        if lhs >= p.alpha:
            return False, f"alpha step window fails at m={m}"
    return True, ""


def cond_dominance_reserve(p: Params, k0: int, M: int) -> tuple[bool, str]:
    """Alternating product dominance vs the accumulated fold budget.

    For m = 1..M the parity-alternating ratio of the two running products
    must undercut 1 / (12 * 3^m * C_f,m^2 * Lambda1^(2 nT_{k0+m})).
    """
    if M < 1:
        return False, "horizon must allow m >= 1"
    log_ratio_gap = p.log_lambda_u - p.log_lambda_s
    D = 0  # alternating sum of nH ending at the newest index
    cum_nT = 0
    for m in range(1, M + 1):
        D = seqs.n_hyper(p, k0 + m - 1) - D
        cum_nT += seqs.n_tan(p, k0 + m - 1)
        lhs = -D * log_ratio_gap  # log(Ls/Lu product ratio)
        rhs = -(
            math.log(12)
            + m * math.log(3)
            + 2 * cum_nT * p.log_Lambda1
            + 2 * seqs.n_tan(p, k0 + m) * p.log_Lambda1
        )
        if lhs > rhs:
            return False, f"dominance reserve fails at m={m}"
    return True, ""


def cond_eps_contracts(p: Params, k0: int) -> tuple[bool, str]:
    """The eps base must already be below 1 at the base index."""
    if _eps_base_log(p, seqs.n_hyper(p, k0)) >= 0:
        return False, "contraction base >= 1 at the base index"
    return True, ""


_CONDITIONS = (
    "eps_contracts",
    "exponent_balance",
    "xi_contraction",
    "nh_monotone",
    "contraction_gap",
    "width_dominates",
    "alpha_step_window",
    "dominance_reserve",
)


def validate_calibration(p: Params, M: int) -> list[tuple[str, bool, str]]:
    """Run every calibration condition for an already-calibrated tuple."""
    p.require_calibrated()
    k0, xi = p.k0, p.xi
    results = [
        ("eps_contracts", *cond_eps_contracts(p, k0)),
        ("exponent_balance", *cond_exponent_balance(p, k0, xi, M)),
        ("xi_contraction", *cond_xi_contraction(p, k0, xi)),
        ("nh_monotone", *cond_nh_monotone(p, k0, M)),
        ("contraction_gap", *cond_contraction_gap(p, k0, M)),
        ("width_dominates", *cond_width_dominates(p, k0, M)),
        ("alpha_step_window", *cond_alpha_step_window(p, k0, M)),
        ("dominance_reserve", *cond_dominance_reserve(p, k0, M)),
    ]
    return results


# xi must stay a positive normal float; exp(-x) underflows past ~745
_XI_LOG_CAP = 700.0


def compute_k0_xi(
    p: Params, M_max: int = 400, k_search_max: int = 2000, check_feasible: bool = True
) -> tuple[int, float]:
    """Smallest even base index and margin constant passing every condition.

    xi is placed so that -ln(xi) sits at the midpoint of the admissible
    band: above the fold-budget floor 2 nT ln(Lambda1) + ln(1e4) and
    below the balance ceiling nH * c1 - ln(2 lambda_u), which maximises
    slack on both sides.  When the midpoint is not representable as a
    positive float the placement is capped at the largest representable
    slack; every condition is still validated explicitly.
    """
    if M_max < 1:
        raise PreconditionError("M_max must be >= 1 (no horizon to certify)")
    if check_feasible:
        require_feasible(p)
    bp = (
        p.beta_prime
        if p.beta_prime is not None
        else select_beta_prime(p, check_feasible=check_feasible)
    )
    work = replace(p, beta_prime=bp)
    first_violation = "band empty at every candidate"
    for k0 in range(2, k_search_max + 1, 2):
        n = seqs.n_hyper(work, k0)
        t = seqs.n_tan(work, k0)
        L1 = _balance_left_log(work, n)
        L2 = _eps_base_log(work, n)
        c1 = min(L1 - L2, work.alpha * work.beta * L1 - L2)
        band_lo = 2 * t * work.log_Lambda1 + math.log(1e4)
        band_hi = n * c1 - math.log(2 * work.lambda_u)
        if band_hi <= band_lo:
            continue
        neg_log_xi = min(0.5 * (band_lo + band_hi), _XI_LOG_CAP)
        if neg_log_xi <= band_lo:
            first_violation = f"xi placement not representable (k0 candidate {k0})"
            continue
        xi = math.exp(-neg_log_xi)
        cand = replace(work, k0=k0, xi=xi)
        for name, ok, detail in validate_calibration(cand, M_max):
            if not ok:
                first_violation = f"{name}: {detail} (k0 candidate {k0})"
                break
        else:
            return k0, xi
    raise SearchExhaustedError(
        f"no (k0, xi) up to k_search_max={k_search_max}", first_violation=first_violation
    )


def calibrate(p: Params, M_max: int = 400, check_feasible: bool = True) -> Params:
    """Fill beta_prime, k0 and xi; returns a new tuple."""
    bp = (
        p.beta_prime
        if p.beta_prime is not None
        else select_beta_prime(p, check_feasible=check_feasible)
    )
    work = replace(p, beta_prime=bp)
    k0, xi = compute_k0_xi(work, M_max=M_max, check_feasible=check_feasible)
    return replace(work, k0=k0, xi=xi)
