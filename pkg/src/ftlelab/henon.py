"""Renormalized quadratic family and the dissipative-saddle region scan.

The one-return limit family is phi(x, y) = (y, y^2 + nu*x + mu); near
(mu, nu) = (-2, 0) it has a saddle fixed point on the diagonal whose
eigenvalues come in closed form, and the strongly dissipative condition
|lambda_s| * |lambda_u|^3 < 1 holds on a whole parameter neighborhood.
Everything here is O(10) in magnitude, so native floats suffice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PreconditionError
from .reporting import write_csv, write_json

ESCAPE_RADIUS = 1e6


@dataclass(frozen=True, slots=True)
class RenormParams:
    mu: float
    nu: float


@dataclass(frozen=True, slots=True)
class SaddleData:
    """Fixed-point data of the renormalized family at one parameter."""

    y: float
    lam_s: float
    lam_u: float
    strongly_dissipative: bool  # modulus form |lam_s| |lam_u|^3 < 1
    dissipative_signed: bool  # signed form lam_s lam_u^3 < 1

    @property
    def fixed_point(self) -> tuple[float, float]:
        return (self.y, self.y)


def renorm_apply(rp: RenormParams, pt: tuple[float, float]) -> tuple[float, float]:
    x, y = pt
    return (y, y * y + rp.nu * x + rp.mu)


def renorm_derivative(rp: RenormParams, pt: tuple[float, float]) -> np.ndarray:
    return np.array([[0.0, 1.0], [rp.nu, 2.0 * pt[1]]])


def saddle_data(rp: RenormParams) -> SaddleData:
    """Closed-form fixed point and eigenvalues on the diagonal.

    The stable/unstable labels follow the + root of the fixed-point
    quadratic; near (-2, 0) one eigenvalue is near 0, the other near 4.
    The dissipativity booleans are reported in both the modulus and the
    signed reading, since the stable eigenvalue may be negative here.
    """
    disc = (1 - rp.nu) ** 2 - 4 * rp.mu
    if disc < 0:
        raise DomainError(f"no real fixed point at (mu, nu) = ({rp.mu}, {rp.nu})")
    y = (1 - rp.nu + math.sqrt(disc)) / 2
    eig_disc = y * y + rp.nu
    if eig_disc < 0:
        raise DomainError(f"complex eigenvalues at (mu, nu) = ({rp.mu}, {rp.nu})")
    root = math.sqrt(eig_disc)
    lam_s, lam_u = y - root, y + root
    return SaddleData(
        y=y,
        lam_s=lam_s,
        lam_u=lam_u,
        strongly_dissipative=abs(lam_s) * abs(lam_u) ** 3 < 1,
        dissipative_signed=lam_s * lam_u**3 < 1,
    )


def derivative_eigenvalues(rp: RenormParams) -> tuple[float, float]:
    """Numeric eigenvalues of the derivative at the fixed point (sorted)."""
    sd = saddle_data(rp)
    ev = np.linalg.eigvals(renorm_derivative(rp, sd.fixed_point))
    ev = sorted(float(v.real) for v in ev)
    return (ev[0], ev[1])


# --------------------------------------------------------------- the scan


@dataclass(frozen=True)
class RegionRow:
    mu: float
    nu: float
    lam_s: float
    lam_u: float
    dissipative: bool


@dataclass(frozen=True)
class RegionReport:
    rows: tuple[RegionRow, ...]
    grid_n: int
    radius: float
    r_star: float
    component_size: int
    all_dissipative: bool
    low_resolution: bool

    def summary_dict(self) -> dict:
        return {"r_star": self.r_star}


def scan_dissipative_region(center: RenormParams, radius: float, grid_n: int) -> RegionReport:
    """Grid scan of the square around ``center``.

    Reports the 4-connected dissipative component containing the centre
    and the largest grid-certified radius r* <= radius such that every
    grid point within Euclidean distance r* of the centre is dissipative.
    """
    if radius <= 0:
        raise PreconditionError("radius must be positive")
    if grid_n < 3:
        raise PreconditionError("grid_n must be >= 3")
    xs = [center.mu - radius + 2 * radius * i / (grid_n - 1) for i in range(grid_n)]
    ys = [center.nu - radius + 2 * radius * j / (grid_n - 1) for j in range(grid_n)]
    rows: list[RegionRow] = []
    diss = [[False] * grid_n for _ in range(grid_n)]
    for i, mu in enumerate(xs):
        for j, nu in enumerate(ys):
            try:
                sd = saddle_data(RenormParams(mu, nu))
                ok = sd.strongly_dissipative
                rows.append(RegionRow(mu, nu, sd.lam_s, sd.lam_u, ok))
            except DomainError:
                ok = False
                rows.append(RegionRow(mu, nu, math.nan, math.nan, False))
            diss[i][j] = ok

    # flood fill from the centre cell
    ci = cj = (grid_n - 1) // 2
    component = 0
    if diss[ci][cj]:
        seen = [[False] * grid_n for _ in range(grid_n)]
        stack = [(ci, cj)]
        seen[ci][cj] = True
        while stack:
            i, j = stack.pop()
            component += 1
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                a, b = i + di, j + dj
                if 0 <= a < grid_n and 0 <= b < grid_n and diss[a][b] and not seen[a][b]:
                    seen[a][b] = True
                    stack.append((a, b))

    # largest grid-point distance d with all points inside distance d dissipative
    pts = sorted(
        (math.hypot(xs[i] - center.mu, ys[j] - center.nu), diss[i][j])
        for i in range(grid_n)
        for j in range(grid_n)
    )
    r_star = 0.0
    for d, ok in pts:
        if not ok:
            break
        r_star = min(d, radius)
    all_ok = all(ok for _, ok in pts)
    return RegionReport(
        rows=tuple(rows),
        grid_n=grid_n,
        radius=radius,
        r_star=r_star,
        component_size=component,
        all_dissipative=all_ok,
        low_resolution=grid_n <= 3,
    )


def write_region_csv(path: str, report: RegionReport) -> None:
    write_csv(
        path,
        ["mu", "nu", "lam_s", "lam_u", "dissipative"],
        [(r.mu, r.nu, r.lam_s, r.lam_u, r.dissipative) for r in report.rows],
    )


def write_region_summary(path: str, report: RegionReport) -> None:
    write_json(path, report.summary_dict())


# ----------------------------------------------------------- plain family


def henon_iterate(
    a: float, b: float, pt: tuple[float, float], n: int
) -> tuple[tuple[float, float], bool]:
    """n-fold application of (x, y) -> (1 - a x^2 + b y, x).

    Returns the final point and an escape flag; iteration stops early
    once |x| + |y| exceeds the divergence cutoff.
    """
    if n < 0:
        raise PreconditionError("n must be >= 0")
    x, y = pt
    for _ in range(n):
        if abs(x) + abs(y) > ESCAPE_RADIUS:
            return ((x, y), True)
        x, y = 1 - a * x * x + b * y, x
    return ((x, y), abs(x) + abs(y) > ESCAPE_RADIUS)


def henon_fixed_points(a: float, b: float) -> list[tuple[float, float]]:
    """Real fixed points of the plain family, solved from the quadratic."""
    if a == 0:
        x = 1.0 / (1.0 - b) if b != 1 else math.nan
        return [(x, x)] if math.isfinite(x) else []
    disc = (1 - b) ** 2 + 4 * a
    if disc < 0:
        return []
    out = []
    for sgn in (1.0, -1.0):
        x = (-(1 - b) + sgn * math.sqrt(disc)) / (2 * a)
        out.append((x, x))
    return out
