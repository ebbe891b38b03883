"""Return-time sequences and the derived scale quantities.

The hyperbolic return times follow the two-branch floor formula

    n_{2p} = floor(n0H * alpha^p * beta^p),
    n_{2p+1} = floor(n0H * alpha^(p+1) * beta^p),

evaluated exactly over the rationals so the floor never flips on float
rounding noise.  The tangential return times use the affine model
``nT_offset + floor(nT_slope * k)``; only their linear growth matters
downstream.  From these we derive, for each base index ``k``,

    log b_k   = -3 * ln(lambda_u) * sum_i n_{k+i} / 2^i,
    log eps_k = n_k * ln(lambda_s * lambda_u^((9 beta - 6 + 18/n_k)/(2 - beta))),
    log eps_{k,m} = (alpha*beta)^floor(m/2) * log eps_k.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING, Callable

from .errors import DomainError, PreconditionError, RangeOverflowError
from .logscalar import SignedLogReal

if TYPE_CHECKING:  # pragma: no cover
    from .parameters import Params

# Integers above 2^53 are no longer exact as floats; downstream float
# arithmetic on the return times relies on exactness.
_N_MAX = 1 << 53

DEFAULT_TOL_LOG = 1e-9


def _decimal_fraction(x: float | int | str) -> Fraction:
    """Exact rational for a value given as a decimal literal.

    ``repr`` of a float is its shortest round-tripping decimal, so this
    reconstructs e.g. 1.02 as 51/50 rather than the binary float.
    """
    return Fraction(repr(float(x)))


class _SeqState:
    """Incremental exact powers n0H * (alpha*beta)^p for one parameter set."""

    __slots__ = ("alpha", "beta", "base", "powers", "floors")

    def __init__(self, n0H: int, alpha: float, beta: float):
        self.alpha = _decimal_fraction(alpha)
        self.beta = _decimal_fraction(beta)
        self.base = Fraction(n0H)
        self.powers: list[Fraction] = [self.base]
        self.floors: dict[int, int] = {}

    def power(self, p: int) -> Fraction:
        ab = self.alpha * self.beta
        while len(self.powers) <= p:
            self.powers.append(self.powers[-1] * ab)
        return self.powers[p]

    def n_hyper(self, k: int) -> int:
        n = self.floors.get(k)
        if n is None:
            half, odd = divmod(k, 2)
            f = self.power(half)
            if odd:
                f = f * self.alpha
            n = f.numerator // f.denominator
            self.floors[k] = n
        return n


_SEQ_CACHE: dict[tuple, _SeqState] = {}


def _seq_state(p: "Params") -> _SeqState:
    key = (p.n0H, repr(float(p.alpha)), repr(float(p.beta)))
    st = _SEQ_CACHE.get(key)
    if st is None:
        st = _SeqState(p.n0H, p.alpha, p.beta)
        _SEQ_CACHE[key] = st
    return st


def n_hyper(p: "Params", k: int) -> int:
    """Hyperbolic return time at index ``k`` (exact rational floor)."""
    if k < 0:
        raise PreconditionError(f"k must be >= 0, got {k}")
    n = _seq_state(p).n_hyper(k)
    if n > _N_MAX:
        raise RangeOverflowError(f"n_hyper({k}) = {n} exceeds the exact-integer range")
    return n


_SLOPE_CACHE: dict[str, Fraction] = {}


def n_tan(p: "Params", k: int) -> int:
    """Tangential return time at index ``k``: offset + floor(slope * k)."""
    if k < 0:
        raise PreconditionError(f"k must be >= 0, got {k}")
    key = repr(float(p.nT_slope))
    slope = _SLOPE_CACHE.get(key)
    if slope is None:
        slope = _decimal_fraction(p.nT_slope)
        _SLOPE_CACHE[key] = slope
    s = slope * k
    return p.nT_offset + s.numerator // s.denominator


def n_total(p: "Params", k: int) -> int:
    return n_hyper(p, k) + n_tan(p, k)


# --------------------------------------------------------------------- b_k


def _log_b_generic(
    nh: Callable[[int], int],
    unfloored: Callable[[int], float],
    log_lambda_u: float,
    beta_prime: float,
    beta: float,
    k: int,
    tol_log: float,
) -> float:
    """Truncated evaluation of log b_k = -3 ln(lambda_u) * sum n_{k+i}/2^i.

    Truncates at the first index where the geometric tail bound driven by
    ``n_{k+i} <= beta_prime^i n_k`` contributes less than ``tol_log`` to
    the final log, with a closed-form bound on the un-floored sequence as
    a guard for small return times where the floor weakens the first rule.
    """
    if tol_log <= 0:
        raise PreconditionError("tol_log must be positive")
    if beta_prime >= 2:
        raise DomainError("tail bound diverges for beta_prime >= 2")
    q = beta_prime / 2.0
    scale = 3.0 * log_lambda_u
    n_k = nh(k)
    terms: list[float] = []
    i = 0
    while True:
        terms.append(nh(k + i) / (2.0**i))
        spec_tail = scale * n_k * q ** (i + 1) / (1.0 - q)
        # un-floored values dominate the floored ones and grow by at most
        # a factor beta per step, giving an exact geometric majorant
        guard_tail = scale * (unfloored(k + i + 1) / 2.0 ** (i + 1)) / (1.0 - beta / 2.0)
        if spec_tail < tol_log and guard_tail < tol_log:
            break
        i += 1
    return -scale * math.fsum(terms)


def log_b(p: "Params", k: int, tol_log: float = DEFAULT_TOL_LOG) -> float:
    """log b_k for the parameter set's own sequences (needs beta_prime)."""
    if k < 0:
        raise PreconditionError(f"k must be >= 0, got {k}")
    if p.beta_prime is None:
        raise PreconditionError("beta_prime is unset; calibrate the parameters first")
    st = _seq_state(p)
    la, lb_ = float(st.alpha), float(st.beta)

    def unfloored(j: int) -> float:
        half, odd = divmod(j, 2)
        return p.n0H * la ** (half + odd) * lb_**half

    return _log_b_generic(
        lambda j: n_hyper(p, j),
        unfloored,
        math.log(p.lambda_u),
        p.beta_prime,
        p.beta,
        k,
        tol_log,
    )


def b_scale(p: "Params", k: int, tol_log: float = DEFAULT_TOL_LOG) -> SignedLogReal:
    """b_k as a positive log-domain scalar."""
    return SignedLogReal.from_log(1, log_b(p, k, tol_log))


# ------------------------------------------------------------------- eps_k


def eps_base_log(p: "Params", n_h: int) -> float:
    """ln of the contraction base lambda_s * lambda_u^((9b-6+18/n)/(2-b))."""
    return math.log(p.lambda_s) + ((9 * p.beta - 6 + 18.0 / n_h) / (2 - p.beta)) * math.log(
        p.lambda_u
    )


def log_eps(p: "Params", k: int) -> float:
    n = n_hyper(p, k)
    base = eps_base_log(p, n)
    if base >= 0:
        raise PreconditionError(
            f"contraction base is >= 1 at k={k} (n_hyper={n}); index below the certified range"
        )
    return n * base


def eps_scale(p: "Params", k: int) -> SignedLogReal:
    """eps_k in (0, 1) as a positive log-domain scalar."""
    return SignedLogReal.from_log(1, log_eps(p, k))


def log_eps_m(p: "Params", k: int, m: int) -> float:
    """log eps_{k,m} = (alpha*beta)^floor(m/2) * log eps_k."""
    if m < 0:
        raise PreconditionError(f"m must be >= 0, got {m}")
    return (p.alpha * p.beta) ** (m // 2) * log_eps(p, k)


def eps_scale_m(p: "Params", k: int, m: int) -> SignedLogReal:
    return SignedLogReal.from_log(1, log_eps_m(p, k, m))


def verify_eps_step_bound(p: "Params", k: int, M: int) -> bool:
    """Check eps_{k,m} <= lambda_u^{n_{k+m}} * eps_{k,m+1} for 0 <= m <= M."""
    llu = math.log(p.lambda_u)
    for m in range(M + 1):
        lhs = log_eps_m(p, k, m)
        rhs = n_hyper(p, k + m) * llu + log_eps_m(p, k, m + 1)
        if lhs > rhs:
            return False
    return True


# -------------------------------------------------------------- the table


@dataclass(frozen=True)
class SequenceTable:
    """Immutable per-index table of return times and scale logs."""

    k_lo: int
    k_hi: int
    nH: tuple[int, ...]
    nT: tuple[int, ...]
    n: tuple[int, ...]
    bLog: tuple[float, ...]
    epsLog: tuple[float, ...]

    def row(self, k: int) -> tuple[int, int, int, int, float, float]:
        i = k - self.k_lo
        return (k, self.nH[i], self.nT[i], self.n[i], self.bLog[i], self.epsLog[i])


def build_table(
    p: "Params", k_lo: int, k_hi: int, tol_log: float = DEFAULT_TOL_LOG
) -> SequenceTable:
    """Build the table on [k_lo, k_hi] and check its structural invariants."""
    if k_hi < k_lo:
        raise PreconditionError("empty index range")
    ks = range(k_lo, k_hi + 1)
    nH = tuple(n_hyper(p, k) for k in ks)
    nT = tuple(n_tan(p, k) for k in ks)
    n = tuple(h + t for h, t in zip(nH, nT))
    bLog = tuple(log_b(p, k, tol_log) for k in ks)
    epsLog = tuple(log_eps(p, k) for k in ks)
    for i in range(len(nH) - 1):
        if nH[i + 1] < nH[i]:
            raise DomainError(f"hyperbolic return times not monotone at k={k_lo + i}")
    # integer jitter makes the per-step ratio non-monotone; the two-step
    # ratio is the honest monotone statement of nT/nH -> 0
    for i in range(len(nH) - 2):
        if nT[i + 2] * nH[i] > nT[i] * nH[i + 2]:
            raise DomainError(f"tangential/hyperbolic ratio fails to decay at k={k_lo + i}")
    return SequenceTable(k_lo, k_hi, nH, nT, n, bLog, epsLog)


def write_table_csv(table: SequenceTable, path: str) -> None:
    from .reporting import fmt

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "nH", "nT", "n", "log_b", "log_eps"])
        for k in range(table.k_lo, table.k_hi + 1):
            _, h, t, tot, lb_, le_ = table.row(k)
            w.writerow([k, h, t, tot, fmt(lb_), fmt(le_)])
