"""Nested rectangles around the anchor orbit and their forward-invariance.

The cycle-(k, m) rectangle is centred at the anchor with half-width
``eps_{k,m} sqrt(b_{k+m})`` and half-height ``eps_{k,m} b_{k+m} / 4``.
The verifications below certify, by corner/boundary sampling with
explicit inter-sample error bounds, that

* every rectangle stays inside the chart for the whole hyperbolic phase,
* the image of the vertical centre segment lands in the half-size next
  rectangle, with the quadratic projection bounds,
* horizontal fibers shrink below 1/8 of the next rectangle's diameter,
* one full return maps each rectangle strictly inside the next one.

The hyperbolic phase is exactly linear (corners suffice); the fold phase
is exactly linear-plus-quadratic, so a chord bound on the sampled edges
turns sampling into a certified check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import sequences as seqs
from .errors import ConfigurationError, PreconditionError
from .logscalar import SignedLogReal, slog
from .modelmap import AnchorOrbit, FoldMap, LogPoint, SaddleChart, model_lambda
from .reporting import write_csv

_RATIO_TOL_LOG = 1e-9


@dataclass(frozen=True, slots=True)
class Rectangle:
    """Axis-aligned box: centre plus log-domain half extents."""

    center: LogPoint
    half_width: SignedLogReal
    half_height: SignedLogReal
    k: int
    m: int

    def __post_init__(self) -> None:
        if not (self.half_width > self.half_height > SignedLogReal.zero()):
            raise ConfigurationError("rectangle requires half_width > half_height > 0")

    def log_diam(self) -> float:
        """log of the full diagonal length."""
        two = slog(2.0)
        w, h = two * self.half_width, two * self.half_height
        return (w * w + h * h).sqrt().log_mag

    def scaled(self, log_factor: float) -> "Rectangle":
        """Same centre, half extents multiplied by exp(log_factor)."""
        f = SignedLogReal(1, log_factor)
        return Rectangle(
            self.center, self.half_width * f, self.half_height * f, self.k, self.m
        )


def build_rectangle(p, k: int, m: int, center: LogPoint) -> Rectangle:
    """The certified rectangle at indices (k, m) around ``center``."""
    if m < 0:
        raise PreconditionError("m must be >= 0")
    le = seqs.log_eps_m(p, k, m)
    lb = seqs.log_b(p, k + m)
    w = SignedLogReal(1, le + 0.5 * lb)
    h = SignedLogReal(1, le + lb + math.log(0.25))
    rect = Rectangle(center, w, h, k, m)
    # width/height ratio must equal 4 / sqrt(b)
    ratio = w.log_mag - h.log_mag
    expect = math.log(4.0) - 0.5 * lb
    if abs(ratio - expect) > _RATIO_TOL_LOG:
        raise ConfigurationError("rectangle aspect ratio drifted from 4/sqrt(b)")
    return rect


def rectangle_at(p, anchors: AnchorOrbit, k: int, m: int) -> Rectangle:
    return build_rectangle(p, k, m, anchors.zeta[k + m])


# ------------------------------------------------------------ chart bound


def _certified(p, k: int) -> bool:
    """Verification rows below the calibrated base index are reported as
    not-certified rather than as failures."""
    return p.k0 is None or k >= p.k0


@dataclass(frozen=True)
class ChartReport:
    ok: bool
    min_margin_log: float
    fail_step: int | None = None
    certified: bool = True


def chart_containment_report(p, rect: Rectangle, chart: SaddleChart) -> ChartReport:
    """Iterate the four corners through the hyperbolic phase of cycle k+m.

    Linear maps carry rectangles to rectangles, so corners decide
    containment.  The margin is the worst log-distance from a corner
    coordinate to the chart boundary over all steps.
    """
    n = seqs.n_hyper(p, rect.k + rect.m)
    corner_s = max(
        (rect.center.s + rect.half_width).log_mag if (rect.center.s + rect.half_width).sign else -math.inf,
        (rect.center.s - rect.half_width).log_mag if (rect.center.s - rect.half_width).sign else -math.inf,
    )
    corner_u = max(
        (rect.center.u + rect.half_height).log_mag if (rect.center.u + rect.half_height).sign else -math.inf,
        (rect.center.u - rect.half_height).log_mag if (rect.center.u - rect.half_height).sign else -math.inf,
    )
    bound = math.log(chart.K_half)
    ls, lu = chart.log_lambda_s, chart.log_lambda_u
    min_margin = math.inf
    for j in range(n + 1):
        ms = bound - (corner_s + j * ls)
        mu = bound - (corner_u + j * lu)
        step_margin = min(ms, mu)
        if step_margin <= 0:
            return ChartReport(False, step_margin, j, _certified(p, rect.k))
        min_margin = min(min_margin, step_margin)
    return ChartReport(True, min_margin, None, _certified(p, rect.k))


def verify_stays_in_chart(p, rect: Rectangle, chart: SaddleChart) -> bool:
    return chart_containment_report(p, rect, chart).ok


# ----------------------------------------------------- centre-segment map


@dataclass(frozen=True)
class CenterLineReport:
    ok: bool
    containment_margin_log: float
    s_projection_margin_log: float
    quad_ratio_ok: bool
    height_ratio_log: float
    expansion_gap_log: float
    certified: bool = True


def verify_center_line_containment(
    p,
    chart: SaddleChart,
    anchors: AnchorOrbit,
    folds: dict[int, FoldMap],
    k: int,
    m: int,
    samples: int = 1025,
) -> CenterLineReport:
    """Image of the vertical centre segment lies in half the next rectangle.

    Also certifies the two projection bounds: the s-projection is at most
    half the next half-width budget, and the u-projection is quadratically
    controlled with ratio to the next height below 1/2.
    """
    if samples < 3:
        raise PreconditionError("need at least 3 samples including endpoints")
    rect = rectangle_at(p, anchors, k, m)
    nxt = rectangle_at(p, anchors, k, m + 1)
    half = nxt.scaled(math.log(0.5))
    n = seqs.n_hyper(p, k + m)
    fold = folds[k + m]

    du_max = n * chart.log_lambda_u + rect.half_height.log_mag
    a12l, ql = math.log(abs(fold.a12)), math.log(abs(fold.q))
    # worst containment over the sampled segment, plus a chord bound for
    # the quadratic component between samples
    spacing_log = du_max + math.log(2.0 / (samples - 1))
    chord_err = ql + 2 * spacing_log + math.log(0.25)
    margin = math.inf
    for i in range(samples):
        t = -1.0 + 2.0 * i / (samples - 1)
        if t == 0.0:
            s_log = -math.inf
            u_log = -math.inf
        else:
            d = du_max + math.log(abs(t))
            s_log = a12l + d
            u_log = ql + 2 * d
        ms = half.half_width.log_mag - s_log
        u_tot = SignedLogReal(1, u_log) + SignedLogReal(1, chord_err) if u_log > -math.inf else SignedLogReal(1, chord_err)
        mu = half.half_height.log_mag - u_tot.log_mag
        margin = min(margin, ms, mu)

    # s-projection length vs half the next width budget
    s_len = math.log(2.0) + a12l + du_max
    s_budget = math.log(0.5) + seqs.log_eps_m(p, k, m + 1) + 0.5 * seqs.log_b(p, k + m + 1)
    s_margin = s_budget - s_len

    # quadratic projection bound |pi_u| <= C_T |pi_s|^2 and height ratio
    u_len = ql + 2 * du_max
    quad_ok = u_len <= math.log(p.C_T) + 2 * s_len
    height_log = seqs.log_eps_m(p, k, m + 1) + seqs.log_b(p, k + m + 1) + math.log(0.5)
    height_ratio = u_len - height_log  # must be < log(1/2)

    lam = model_lambda(chart, folds.values())
    gap = seqs.n_tan(p, k + m) * math.log(lam) - n * chart.log_lambda_u

    ok = (
        margin > 0
        and s_margin >= 0
        and quad_ok
        and height_ratio < math.log(0.5)
        and gap < 0
    )
    return CenterLineReport(ok, margin, s_margin, quad_ok, height_ratio, gap, _certified(p, k))


# -------------------------------------------------------- fiber shrinking


@dataclass(frozen=True)
class FiberReport:
    ok: bool
    max_ratio_log: float  # log(|image| / diam), must be < log(1/8)
    proof_ratio_log: float  # the analytic ratio bound used in the decay check
    certified: bool = True


def verify_fiber_shrink_ratio(
    p,
    chart: SaddleChart,
    anchors: AnchorOrbit,
    folds: dict[int, FoldMap],
    k: int,
    m: int,
    samples: int = 33,
) -> FiberReport:
    """Horizontal fibers map to segments below 1/8 of the next diameter.

    The fold sends each post-hyperbolic horizontal fiber to a straight
    segment of direction (a11, a21); its length does not depend on the
    fiber's height, but the ratio is evaluated per sampled height anyway.
    """
    if samples < 3:
        raise PreconditionError("need at least 3 fiber samples")
    rect = rectangle_at(p, anchors, k, m)
    nxt = rectangle_at(p, anchors, k, m + 1)
    n = seqs.n_hyper(p, k + m)
    fold = folds[k + m]
    w_img = SignedLogReal(1, n * chart.log_lambda_s + rect.half_width.log_mag)
    diam = nxt.log_diam()
    worst = -math.inf
    for i in range(samples):
        t = -1.0 + 2.0 * i / (samples - 1)
        du = (
            SignedLogReal.zero()
            if t == 0.0
            else SignedLogReal(
                int(math.copysign(1, t)),
                n * chart.log_lambda_u + rect.half_height.log_mag + math.log(abs(t)),
            )
        )
        left = fold.apply_offset(LogPoint(-w_img, du))
        right = fold.apply_offset(LogPoint(w_img, du))
        length = (right - left).norm().log_mag
        worst = max(worst, length - diam)
    lam = model_lambda(chart, folds.values())
    proof_ratio = (
        seqs.n_tan(p, k + m) * math.log(lam)
        + n * chart.log_lambda_s
        + seqs.log_eps_m(p, k, m)
        + 0.5 * seqs.log_b(p, k + m)
        - seqs.log_eps_m(p, k, m + 1)
        - seqs.log_b(p, k + m + 1)
    )
    return FiberReport(worst < math.log(1.0 / 8.0), worst, proof_ratio, _certified(p, k))


def fiber_decay_bound_log(p, chart: SaddleChart, k: int) -> float:
    """log of the analytic decay envelope theta^(n_k / (4 beta'))/ norm const."""
    th = 0.5 * p.log_lambda_s + (
        6 * p.beta_prime / (2 - p.beta_prime)
        - 3 / (2 - p.alpha)
        - (9 * p.beta - 6) / (2 * (2 - p.beta))
    ) * p.log_lambda_u
    c = -(p.log_lambda_s + (6 * p.beta_prime / (2 - p.beta_prime) - 3 / (2 - p.alpha)) * p.log_lambda_u)
    return c + th * seqs.n_hyper(p, k) / (4 * p.beta_prime)


# ------------------------------------------------------------ full nesting


@dataclass(frozen=True)
class NestingRow:
    k: int
    m: int
    min_margin_log: float
    ok: bool
    certified: bool = True


def nesting_report(
    p,
    chart: SaddleChart,
    anchors: AnchorOrbit,
    folds: dict[int, FoldMap],
    k: int,
    M: int,
    boundary_n: int = 65,
) -> list[NestingRow]:
    """Per-cycle certified containment of each rectangle's return image.

    Boundary points of each rectangle are pushed through the hyperbolic
    phase (exact) and the fold (exact linear-plus-quadratic); both image
    coordinates attain their extremes on the boundary because the s-image
    is linear and the u-image has no interior critical point.  A chord
    bound covers the quadratic part between samples on vertical edges.
    """
    if boundary_n < 2:
        raise PreconditionError("boundary_n must be >= 2")
    rows: list[NestingRow] = []
    for m in range(M + 1):
        rect = rectangle_at(p, anchors, k, m)
        nxt = rectangle_at(p, anchors, k, m + 1)
        n = seqs.n_hyper(p, k + m)
        fold = folds[k + m]
        w_log = n * chart.log_lambda_s + rect.half_width.log_mag
        h_log = n * chart.log_lambda_u + rect.half_height.log_mag
        a11l = math.log(abs(fold.a11))
        a12l = math.log(abs(fold.a12))
        a21l = math.log(abs(fold.a21))
        ql = math.log(abs(fold.q))
        # chord error along vertical edges where the u-image is quadratic
        spacing = h_log + math.log(2.0 / (boundary_n - 1))
        chord_err = ql + 2 * spacing + math.log(0.25)

        margin = math.inf
        ts = [-1.0 + 2.0 * i / (boundary_n - 1) for i in range(boundary_n)]
        edges: list[tuple[list[float], list[float], bool]] = [
            ([t for t in ts], [-1.0] * boundary_n, False),  # bottom
            ([t for t in ts], [1.0] * boundary_n, False),  # top
            ([-1.0] * boundary_n, [t for t in ts], True),  # left (quadratic in u)
            ([1.0] * boundary_n, [t for t in ts], True),  # right
        ]
        for xs, us, quad_edge in edges:
            for x_t, u_t in zip(xs, us):
                s_img = SignedLogReal.zero()
                if x_t != 0.0:
                    s_img = s_img + SignedLogReal(
                        int(math.copysign(1, x_t * fold.a11)), a11l + w_log + math.log(abs(x_t))
                    )
                if u_t != 0.0:
                    s_img = s_img + SignedLogReal(
                        int(math.copysign(1, u_t * fold.a12)), a12l + h_log + math.log(abs(u_t))
                    )
                u_img = SignedLogReal.zero()
                if x_t != 0.0:
                    u_img = u_img + SignedLogReal(
                        int(math.copysign(1, x_t * fold.a21)), a21l + w_log + math.log(abs(x_t))
                    )
                if u_t != 0.0:
                    u_img = u_img + SignedLogReal(
                        int(math.copysign(1, fold.q)), ql + 2 * (h_log + math.log(abs(u_t)))
                    )
                if quad_edge:
                    u_img = abs(u_img) + SignedLogReal(1, chord_err)
                ms = nxt.half_width.log_mag - (s_img.log_mag if s_img.sign else -math.inf)
                mu = nxt.half_height.log_mag - (u_img.log_mag if u_img.sign else -math.inf)
                margin = min(margin, ms, mu)
        rows.append(NestingRow(k, m, margin, margin > 0, _certified(p, k)))
    return rows


def verify_forward_nesting(
    p,
    chart: SaddleChart,
    anchors: AnchorOrbit,
    folds: dict[int, FoldMap],
    k: int,
    M: int,
    boundary_n: int = 65,
) -> bool:
    return all(r.ok for r in nesting_report(p, chart, anchors, folds, k, M, boundary_n))


def write_margin_csv(path: str, rows: list[NestingRow]) -> None:
    write_csv(
        path,
        ["k", "m", "min_margin_log", "pass"],
        [(r.k, r.m, r.min_margin_log, r.ok) for r in rows],
    )
