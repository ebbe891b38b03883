"""Products of the per-return Jacobians and finite-time exponent reports.

Each return Jacobian factors as a fold derivative times the diagonal
hyperbolic part, giving the normal form

    A_l = [[ b11 ls^n,  b12 lu^n ],
           [ b21 ls^n,  b22 ls^n ]],      n = n^H at the cycle index,

with coefficient bounds  max|b| <= L1^nT,  |b22| <= xi L1^nT,
min(|b12|, |b21|) >= L1^-nT.  Writing the running product in terms of the
parity-alternating powers Lu^(m), Ls^(m) leaves four coefficients C_ij^m
that obey a two-term recursion in which every huge factor appears only as
the explicit ratio Ls^(m)/Lu^(m); that recursion is the primary
computation here and is numerically stable at any horizon.  A direct
log-domain matrix product is retained solely as an oracle for small m.

Two coefficient sources are supported: GEOMETRIC (read off the model
map's actual Jacobians along an orbit) and SYNTHETIC (random coefficients
drawn inside the allowed bounds, seeded), which exercises the product
bounds at their full generality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from random import Random
from typing import TYPE_CHECKING, Iterable

from . import sequences as seqs
from .errors import BoundViolationError, PreconditionError
from .logscalar import SignedLogReal, slog
from .matrices import Jacobian2
from .modelmap import AnchorOrbit, FoldMap, LogPoint, ModelOrbit, SaddleChart, apply_hyperbolic

if TYPE_CHECKING:  # pragma: no cover
    from .parameters import Params


# ------------------------------------------------------------ coefficients


@dataclass(frozen=True, slots=True)
class CocycleCoeffs:
    """The four normal-form coefficients of one return Jacobian."""

    b11: SignedLogReal
    b12: SignedLogReal
    b21: SignedLogReal
    b22: SignedLogReal
    nH: int
    nT: int

    def validate(self, log_Lambda1: float, xi: float) -> None:
        """Enforce the certified entry bounds; raises naming the entry."""
        cap = self.nT * log_Lambda1
        for name in ("b11", "b12", "b21", "b22"):
            v: SignedLogReal = getattr(self, name)
            if v.sign != 0 and v.log_mag > cap:
                raise BoundViolationError(f"|{name}| exceeds Lambda1^nT", entry=name)
        if self.b22.sign != 0 and self.b22.log_mag > math.log(xi) + cap:
            raise BoundViolationError("|b22| exceeds xi * Lambda1^nT", entry="b22")
        for name in ("b12", "b21"):
            v = getattr(self, name)
            if v.sign == 0 or v.log_mag < -cap:
                raise BoundViolationError(f"|{name}| falls below Lambda1^-nT", entry=name)


def jacobian_from_coeffs(c: CocycleCoeffs, log_lambda_s: float, log_lambda_u: float) -> Jacobian2:
    """Reassemble the full return Jacobian from its normal form."""
    ls_n = SignedLogReal(1, c.nH * log_lambda_s)
    lu_n = SignedLogReal(1, c.nH * log_lambda_u)
    return Jacobian2(c.b11 * ls_n, c.b12 * lu_n, c.b21 * ls_n, c.b22 * ls_n)


def jacobian_A(
    p: "Params",
    chart: SaddleChart,
    fold: FoldMap,
    l: int,
    x_offset: LogPoint,
) -> tuple[Jacobian2, CocycleCoeffs]:
    """Return Jacobian and coefficients at cycle l for an orbit offset.

    ``x_offset`` is the point's offset from the cycle anchor.  The
    Jacobian factors into the fold derivative at the fold-entry point
    times the diagonal hyperbolic part; the coefficients are the fold
    derivative entries, with the (2,2) entry rescaled by (lu/ls)^n.
    Entry bounds are enforced and violations raise naming the entry.
    """
    p.require_calibrated()
    k = p.k0 + l
    nH = seqs.n_hyper(p, k)
    nT = seqs.n_tan(p, k)
    entry_offset = apply_hyperbolic(chart, x_offset, nH)
    T = fold.jacobian_at_offset(entry_offset)
    H = Jacobian2.diagonal(
        SignedLogReal(1, nH * chart.log_lambda_s), SignedLogReal(1, nH * chart.log_lambda_u)
    )
    A = T.matmul(H)
    swing = SignedLogReal(1, nH * (chart.log_lambda_u - chart.log_lambda_s))
    coeffs = CocycleCoeffs(
        b11=T.a11, b12=T.a12, b21=T.a21, b22=T.a22 * swing, nH=nH, nT=nT
    )
    coeffs.validate(p.log_Lambda1, p.xi)
    return A, coeffs


def geometric_coeffs(
    p: "Params",
    chart: SaddleChart,
    anchors: AnchorOrbit,
    folds: dict[int, FoldMap],
    offset0: LogPoint,
    M: int,
) -> list[CocycleCoeffs]:
    """Coefficients along the model orbit of ``offset0`` for M cycles."""
    orbit = ModelOrbit(p, chart, anchors, folds)
    records = orbit.run(offset0, M)
    out: list[CocycleCoeffs] = []
    for r in records:
        swing = SignedLogReal(1, r.nH * (chart.log_lambda_u - chart.log_lambda_s))
        c = CocycleCoeffs(
            b11=r.fold_jacobian.a11,
            b12=r.fold_jacobian.a12,
            b21=r.fold_jacobian.a21,
            b22=r.fold_jacobian.a22 * swing,
            nH=r.nH,
            nT=r.nT,
        )
        c.validate(p.log_Lambda1, p.xi)
        out.append(c)
    return out


_SYNTH_SPAN = math.log(1e8)  # log-uniform depth below the cap for zero-allowed entries


def synthetic_coeffs(p: "Params", seed: int, M: int) -> list[CocycleCoeffs]:
    """Random coefficients inside the allowed bounds, log-uniform, seeded."""
    p.require_calibrated()
    rng = Random(seed)
    out: list[CocycleCoeffs] = []
    for l in range(M):
        k = p.k0 + l
        nT = seqs.n_tan(p, k)
        cap = nT * p.log_Lambda1
        def draw(lo: float, hi: float) -> SignedLogReal:
            return SignedLogReal(1 if rng.random() < 0.5 else -1, rng.uniform(lo, hi))
        c = CocycleCoeffs(
            b11=draw(-cap, cap),
            b12=draw(-cap, cap),
            b21=draw(-cap, cap),
            b22=draw(math.log(p.xi) + cap - _SYNTH_SPAN, math.log(p.xi) + cap),
            nH=seqs.n_hyper(p, k),
            nT=nT,
        )
        c.validate(p.log_Lambda1, p.xi)
        out.append(c)
    return out


# ------------------------------------------------------------ the product


@dataclass(frozen=True, slots=True)
class ProductState:
    """Running cocycle product after m return cycles.

    Entries of the product are recovered as C1j * Lu^(m) (top row) and
    C2j * Ls^(m) (bottom row); logLu/logLs track the alternating powers,
    Nm the total iterate count and logCf the accumulated fold budget.
    """

    C11: SignedLogReal
    C12: SignedLogReal
    C21: SignedLogReal
    C22: SignedLogReal
    logLu: float
    logLs: float
    Nm: int
    logCf: float
    m: int
    log_lambda_s: float
    log_lambda_u: float
    log_Lambda1: float


def initial_state(p: "Params") -> ProductState:
    one, z = SignedLogReal.one(), SignedLogReal.zero()
    return ProductState(
        C11=one,
        C12=z,
        C21=z,
        C22=one,
        logLu=0.0,
        logLs=0.0,
        Nm=0,
        logCf=0.0,
        m=0,
        log_lambda_s=math.log(p.lambda_s),
        log_lambda_u=math.log(p.lambda_u),
        log_Lambda1=p.log_Lambda1,
    )


def product_step(s: ProductState, c: CocycleCoeffs) -> ProductState:
    """Advance the product by one return cycle.

    The alternating powers swap roles each step; the coefficient update
    keeps every large factor inside the explicit ratio Ls/Lu, so entries
    of any magnitude are handled without loss.
    """
    ratio_old = SignedLogReal(1, s.logLs - s.logLu)
    logLu_new = c.nH * s.log_lambda_u + s.logLs
    logLs_new = c.nH * s.log_lambda_s + s.logLu
    ratio_new = SignedLogReal(1, logLs_new - logLu_new)
    C11 = c.b11 * s.C11 * ratio_new + c.b12 * s.C21
    C12 = c.b11 * s.C12 * ratio_new + c.b12 * s.C22
    C21 = c.b21 * s.C11 + c.b22 * s.C21 * ratio_old
    C22 = c.b21 * s.C12 + c.b22 * s.C22 * ratio_old
    return replace(
        s,
        C11=C11,
        C12=C12,
        C21=C21,
        C22=C22,
        logLu=logLu_new,
        logLs=logLs_new,
        Nm=s.Nm + c.nH + c.nT,
        logCf=s.logCf + c.nT * s.log_Lambda1,
        m=s.m + 1,
    )


def state_to_jacobian(s: ProductState) -> Jacobian2:
    """Decode the full product matrix from the running state."""
    lu = SignedLogReal(1, s.logLu)
    ls = SignedLogReal(1, s.logLs)
    return Jacobian2(s.C11 * lu, s.C12 * lu, s.C21 * ls, s.C22 * ls)


def product_direct(
    coeffs: Iterable[CocycleCoeffs], log_lambda_s: float, log_lambda_u: float
) -> Jacobian2:
    """Oracle: plain log-domain matrix product of the return Jacobians."""
    acc = Jacobian2.identity()
    for c in coeffs:
        acc = jacobian_from_coeffs(c, log_lambda_s, log_lambda_u).matmul(acc)
    return acc


# --------------------------------------------------------- bounds at step m


def _geometric_sum_third(m: int) -> float:
    """1/3 + ... + 1/3^m."""
    return 0.5 * (1.0 - 3.0 ** (-m))


def check_coefficient_bounds(s: ProductState) -> bool:
    """Two-sided coefficient bounds and the parity ratio bounds at step m.

    Odd m: the off-diagonal pair carries the mass; even m: the diagonal
    pair does.  In both cases every entry stays below twice the fold
    budget.
    """
    if s.m < 1:
        raise PreconditionError("bounds apply from m = 1 on")
    g = _geometric_sum_third(s.m)
    lo = math.log1p(-g) - s.logCf
    hi = math.log1p(g) + s.logCf
    cap2 = math.log(2.0) + s.logCf
    if s.m % 2 == 1:
        banded = (s.C12, s.C21)
        ratios = ((s.C11, s.C12), (s.C22, s.C21))
    else:
        banded = (s.C11, s.C22)
        ratios = ((s.C12, s.C11), (s.C21, s.C22))
    for v in banded:
        if v.sign == 0 or not (lo <= v.log_mag <= hi):
            return False
    for num, den in ratios:
        if den.sign == 0:
            return False
        if num.sign != 0 and num.log_mag - den.log_mag > math.log(g):
            return False
    for v in (s.C11, s.C12, s.C21, s.C22):
        if v.sign != 0 and v.log_mag >= cap2:
            return False
    return True


# ------------------------------------------------------- finite-time slope


def cone_contains(C0: float, c0: tuple[float, float]) -> bool:
    cs, cu = c0
    if cs == 0 or cu == 0:
        return False
    r = abs(cs) / abs(cu)
    return 1.0 / C0 < r < C0


@dataclass(frozen=True, slots=True)
class FteResult:
    fte: float
    log_norm: float
    sandwich_lower_log: float
    sandwich_upper_log: float
    sandwich_ok: bool


def finite_time_le(s: ProductState, c0: tuple[float, float], C0: float) -> FteResult:
    """Normalized log growth of a cone vector under the m-cycle product.

    Also evaluates the two-sided envelope
    (13(2-C0)/(108 C0)) Cf^-1 Lu |c0_s|  <=  |A^(m) c0|  <=  4(1+C0) Cf Lu |c0_s|
    and flags a violation instead of asserting, so report rows can carry
    the outcome.
    """
    if s.m < 1:
        raise PreconditionError("finite-time exponents need m >= 1")
    if not cone_contains(C0, c0):
        raise PreconditionError(f"vector {c0} lies outside the open cone (1/C0, C0)")
    cs, cu = slog(c0[0]), slog(c0[1])
    vs = SignedLogReal(1, s.logLu) * (s.C11 * cs + s.C12 * cu)
    vu = SignedLogReal(1, s.logLs) * (s.C21 * cs + s.C22 * cu)
    log_norm = (vs * vs + vu * vu).sqrt().log_mag
    lcs = math.log(abs(c0[0]))
    lower = math.log(13 * (2 - C0) / (108 * C0)) - s.logCf + s.logLu + lcs
    upper = math.log(4 * (1 + C0)) + s.logCf + s.logLu + lcs
    ok = lower <= log_norm <= upper
    return FteResult(log_norm / s.Nm, log_norm, lower, upper, ok)


def analytic_limits(p: "Params") -> tuple[float, float]:
    """The two closed-form subsequence limits (even, odd); even < odd."""
    ls, lu = math.log(p.lambda_s), math.log(p.lambda_u)
    even = (p.alpha * lu + ls) / (1 + p.alpha)
    odd = (p.beta * lu + ls) / (1 + p.beta)
    return even, odd


# ------------------------------------------------------------------ report


@dataclass(frozen=True, slots=True)
class OscRow:
    m: int
    parity: str
    Nm: int
    fte: float
    limit: float
    abs_err: float
    sandwich_ok: bool


@dataclass(frozen=True)
class OscillationReport:
    rows: tuple[OscRow, ...]
    even_limit: float
    odd_limit: float
    gap: float
    m_star: int | None
    verdict: bool
    terminal_even_err: float
    terminal_odd_err: float

    def summary_dict(self) -> dict:
        return {
            "even_limit": self.even_limit,
            "odd_limit": self.odd_limit,
            "gap": self.gap,
            "m_star": self.m_star,
            "verdict": "oscillation-confirmed" if self.verdict else "no-oscillation",
        }


def oscillation_report(
    p: "Params",
    coeffs: Iterable[CocycleCoeffs],
    c0: tuple[float, float] = (1.0, 1.0),
    limit_tol: float = 0.005,
) -> OscillationReport:
    """Finite-time exponents along the product, against the two limits.

    The verdict is confirmed when the even and odd subsequences end
    within ``limit_tol`` of their respective limits, the envelope never
    fails, and beyond some reported index every even value sits strictly
    below every odd value.
    """
    even_limit, odd_limit = analytic_limits(p)
    state = initial_state(p)
    rows: list[OscRow] = []
    for c in coeffs:
        state = product_step(state, c)
        res = finite_time_le(state, c0, p.C0)
        limit = even_limit if state.m % 2 == 0 else odd_limit
        rows.append(
            OscRow(
                m=state.m,
                parity="even" if state.m % 2 == 0 else "odd",
                Nm=state.Nm,
                fte=res.fte,
                limit=limit,
                abs_err=abs(res.fte - limit),
                sandwich_ok=res.sandwich_ok,
            )
        )
    if len(rows) < 2:
        raise PreconditionError("need at least two cycles for an oscillation verdict")

    # smallest index beyond which every even value < every odd value
    m_star: int | None = None
    max_even, min_odd = -math.inf, math.inf
    for row in reversed(rows):
        if row.parity == "even":
            max_even = max(max_even, row.fte)
        else:
            min_odd = min(min_odd, row.fte)
        if max_even < min_odd:
            m_star = row.m
        elif m_star is not None:
            break
    evens = [r for r in rows if r.parity == "even"]
    odds = [r for r in rows if r.parity == "odd"]
    terminal_even_err = evens[-1].abs_err if evens else math.inf
    terminal_odd_err = odds[-1].abs_err if odds else math.inf
    verdict = (
        terminal_even_err <= limit_tol
        and terminal_odd_err <= limit_tol
        and all(r.sandwich_ok for r in rows)
        and m_star is not None
        and m_star <= rows[-1].m - 2
    )
    return OscillationReport(
        rows=tuple(rows),
        even_limit=even_limit,
        odd_limit=odd_limit,
        gap=odd_limit - even_limit,
        m_star=m_star,
        verdict=verdict,
        terminal_even_err=terminal_even_err,
        terminal_odd_err=terminal_odd_err,
    )


def write_oscillation_csv(path: str, report: OscillationReport) -> None:
    from .reporting import write_csv

    write_csv(
        path,
        ["m", "parity", "N_m", "fte", "limit", "abs_err", "sandwich_ok"],
        [(r.m, r.parity, r.Nm, r.fte, r.limit, r.abs_err, r.sandwich_ok) for r in report.rows],
    )
