"""Batch front-end: every verification as a subcommand with file reports.

Exit codes are a stable contract: 0 all checks pass, 1 a verification
failed, 2 usage or configuration error.  All numeric output is decimal
text with 17 significant digits so identical configs and seeds produce
byte-identical artifacts.

Subcommands: feasibility, sequences, verify-all, oscillate, henon.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass

from . import cocycle, geometry, henon, modelmap
from . import parameters as params_mod
from . import sequences as seqs
from .errors import ConfigurationError, FtleLabError
from .logscalar import SignedLogReal
from .modelmap import LogPoint
from .reporting import write_csv, write_json

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_USAGE = 2


@dataclass
class RunConfig:
    params: params_mod.Params
    mode: str = "GEOMETRIC"
    M: int = 30
    seeds: tuple[int, ...] = (1,)
    output_dir: str = "out"
    henon_center: tuple[float, float] = (-2.0, 0.0)
    henon_radius: float = 0.005
    henon_grid_n: int = 41

    def validate(self) -> None:
        if self.M < 1:
            raise ConfigurationError("horizon M must be >= 1")
        if self.mode not in ("GEOMETRIC", "SYNTHETIC"):
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        if self.mode == "SYNTHETIC" and not self.seeds:
            raise ConfigurationError("SYNTHETIC mode requires at least one seed")
        if self.henon_grid_n < 3:
            raise ConfigurationError("henon grid_n must be >= 3")
        if self.henon_radius <= 0:
            raise ConfigurationError("henon radius must be positive")


def _load_document(path: str) -> dict:
    if path.endswith(".toml"):
        try:
            import tomllib  # type: ignore[import-not-found]
        except ModuleNotFoundError:  # pragma: no cover - 3.10 fallback
            import tomli as tomllib  # type: ignore[no-redef]
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    with open(path) as fh:
        return json.load(fh)


def load_config(path: str, overrides: argparse.Namespace) -> RunConfig:
    doc = _load_document(path)
    if "params" not in doc:
        raise ConfigurationError("config must contain a 'params' document")
    p = params_mod.Params.from_mapping(doc["params"])
    henon_doc = doc.get("henon", {})
    cfg = RunConfig(
        params=p,
        mode=doc.get("mode", "GEOMETRIC"),
        M=int(doc.get("M", 30)),
        seeds=tuple(int(s) for s in doc.get("seeds", [1])),
        output_dir=doc.get("output_dir", "out"),
        henon_center=(
            float(henon_doc.get("mu", -2.0)),
            float(henon_doc.get("nu", 0.0)),
        ),
        henon_radius=float(henon_doc.get("radius", 0.005)),
        henon_grid_n=int(henon_doc.get("grid_n", 41)),
    )
    if overrides.out is not None:
        cfg.output_dir = overrides.out
    if getattr(overrides, "mode", None):
        cfg.mode = overrides.mode
    if getattr(overrides, "horizon", None) is not None:
        cfg.M = overrides.horizon
    if getattr(overrides, "seed", None) is not None:
        cfg.seeds = tuple(overrides.seed)
    cfg.validate()
    return cfg


def _calibrated(cfg: RunConfig, check_feasible: bool = True) -> params_mod.Params:
    p = cfg.params
    if check_feasible:
        params_mod.require_feasible(p)
    if not p.is_calibrated():
        p = params_mod.calibrate(p, M_max=max(cfg.M, 400), check_feasible=check_feasible)
    return p


def _outpath(cfg: RunConfig, name: str) -> str:
    os.makedirs(cfg.output_dir, exist_ok=True)
    return os.path.join(cfg.output_dir, name)


# ------------------------------------------------------------ subcommands


def cmd_feasibility(cfg: RunConfig) -> int:
    report = params_mod.check_feasibility(cfg.params)
    path = _outpath(cfg, "feasibility.json")
    with open(path, "w") as fh:
        fh.write(report.to_json() + "\n")
    if report.feasible:
        print("feasibility: all constraints satisfied")
        return EXIT_OK
    bad = report.first_violation()
    print(f"feasibility: violated constraint {bad.id} (margin {bad.lhs_log:+.6g})")
    return EXIT_VERIFICATION


def cmd_sequences(cfg: RunConfig) -> int:
    p = _calibrated(cfg)
    table = seqs.build_table(p, p.k0, p.k0 + cfg.M)
    seqs.write_table_csv(table, _outpath(cfg, "sequences.csv"))
    print(f"sequences: wrote k0={p.k0}..{p.k0 + cfg.M}")
    return EXIT_OK


def _assemble_model(p: params_mod.Params, M: int):
    chart = modelmap.chart_for(p)
    anchors = modelmap.place_anchors(p, chart, p.k0, p.k0 + M + 1)
    folds = modelmap.build_fold_family(p, chart, anchors, p.k0, p.k0 + M)
    return chart, anchors, folds


def _base_offset(p: params_mod.Params, frac: float = 0.5) -> LogPoint:
    lw = seqs.log_eps_m(p, p.k0, 0) + 0.5 * seqs.log_b(p, p.k0)
    lh = seqs.log_eps_m(p, p.k0, 0) + seqs.log_b(p, p.k0) + math.log(0.25)
    f = math.log(frac)
    return LogPoint(SignedLogReal(1, lw + f), SignedLogReal(1, lh + f))


def cmd_verify_all(cfg: RunConfig) -> int:
    p = _calibrated(cfg)
    M = cfg.M

    failures: list[str] = []
    for name, ok, detail in params_mod.validate_calibration(p, M):
        if not ok:
            print(f"verify-all: calibration condition {name} failed: {detail}")
            return EXIT_VERIFICATION

    chart, anchors, folds = _assemble_model(p, M)

    # certified scale-ladder inequality per m
    ladder_rows = []
    llu = math.log(p.lambda_u)
    for m in range(M + 1):
        lhs = seqs.log_eps_m(p, p.k0, m)
        rhs = seqs.n_hyper(p, p.k0 + m) * llu + seqs.log_eps_m(p, p.k0, m + 1)
        ladder_rows.append((p.k0, m, rhs - lhs, lhs <= rhs))
    write_csv(_outpath(cfg, "eps_ladder.csv"), ["k", "m", "margin_log", "pass"], ladder_rows)
    if not all(r[3] for r in ladder_rows):
        failures.append("eps_ladder")

    chart_rows = []
    for m in range(M + 1):
        rect = geometry.rectangle_at(p, anchors, p.k0, m)
        rep = geometry.chart_containment_report(p, rect, chart)
        chart_rows.append((p.k0, m, rep.min_margin_log, rep.ok))
    write_csv(
        _outpath(cfg, "chart_containment.csv"), ["k", "m", "min_margin_log", "pass"], chart_rows
    )
    if not all(r[3] for r in chart_rows):
        failures.append("chart_containment")

    center_rows = []
    for m in range(M + 1):
        rep = geometry.verify_center_line_containment(p, chart, anchors, folds, p.k0, m)
        center_rows.append((p.k0, m, rep.containment_margin_log, rep.ok))
    write_csv(_outpath(cfg, "center_line.csv"), ["k", "m", "min_margin_log", "pass"], center_rows)
    if not all(r[3] for r in center_rows):
        failures.append("center_line")

    fiber_rows = []
    for m in range(M + 1):
        rep = geometry.verify_fiber_shrink_ratio(p, chart, anchors, folds, p.k0, m)
        fiber_rows.append((p.k0, m, math.log(1 / 8) - rep.max_ratio_log, rep.ok))
    write_csv(_outpath(cfg, "fiber_ratio.csv"), ["k", "m", "min_margin_log", "pass"], fiber_rows)
    if not all(r[3] for r in fiber_rows):
        failures.append("fiber_ratio")

    nest_rows = geometry.nesting_report(p, chart, anchors, folds, p.k0, M)
    geometry.write_margin_csv(_outpath(cfg, "nesting.csv"), nest_rows)
    if not all(r.ok for r in nest_rows):
        failures.append("nesting")

    # fold-entry offset bound along a 9x9 grid of starting offsets
    offset_rows = []
    lw0 = seqs.log_eps_m(p, p.k0, 0) + 0.5 * seqs.log_b(p, p.k0)
    lh0 = seqs.log_eps_m(p, p.k0, 0) + seqs.log_b(p, p.k0) + math.log(0.25)
    worst = math.inf
    orbit = modelmap.ModelOrbit(p, chart, anchors, folds)
    for i in range(9):
        for j in range(9):
            ts = -1.0 + 2.0 * i / 8
            tu = -1.0 + 2.0 * j / 8
            offset = LogPoint(
                SignedLogReal.zero()
                if ts == 0
                else SignedLogReal(int(math.copysign(1, ts)), lw0 + math.log(abs(ts))),
                SignedLogReal.zero()
                if tu == 0
                else SignedLogReal(int(math.copysign(1, tu)), lh0 + math.log(abs(tu))),
            )
            for rec in orbit.run(offset, M):
                n = rec.nH
                lhs = rec.fold_entry_offset.norm()
                lhs_log = (lhs.log_mag if lhs.sign else -math.inf) + n * chart.log_lambda_u
                rhs_log = math.log(p.xi) + n * chart.log_lambda_s
                worst = min(worst, rhs_log - lhs_log)
    offset_rows.append((p.k0, worst, worst > 0))
    write_csv(_outpath(cfg, "fold_entry_offset.csv"), ["k", "min_margin_log", "pass"], offset_rows)
    if worst <= 0:
        failures.append("fold_entry_offset")

    # coefficient bounds along the product (geometric mode)
    coeff_rows = []
    coeffs = cocycle.geometric_coeffs(p, chart, anchors, folds, _base_offset(p), M)
    state = cocycle.initial_state(p)
    for c in coeffs:
        state = cocycle.product_step(state, c)
        coeff_rows.append((state.m, cocycle.check_coefficient_bounds(state)))
    write_csv(_outpath(cfg, "coefficient_bounds.csv"), ["m", "pass"], coeff_rows)
    if not all(r[1] for r in coeff_rows):
        failures.append("coefficient_bounds")

    if failures:
        print(f"verify-all: FAILED at {failures[0]}")
        return EXIT_VERIFICATION
    lam = modelmap.model_lambda(chart, folds.values())
    print(f"verify-all: all checks passed up to m={M} (model expansion constant {lam:.6g})")
    return EXIT_OK


def cmd_oscillate(cfg: RunConfig, allow_infeasible: bool = False, plot_data: bool = False) -> int:
    p = _calibrated(cfg, check_feasible=not allow_infeasible)
    M = cfg.M
    reports = []
    if cfg.mode == "GEOMETRIC":
        chart, anchors, folds = _assemble_model(p, M)
        coeffs = cocycle.geometric_coeffs(p, chart, anchors, folds, _base_offset(p), M)
        rep = cocycle.oscillation_report(p, coeffs)
        cocycle.write_oscillation_csv(_outpath(cfg, "oscillation.csv"), rep)
        reports.append((None, rep))
    else:
        for seed in cfg.seeds:
            coeffs = cocycle.synthetic_coeffs(p, seed, M)
            rep = cocycle.oscillation_report(p, coeffs)
            cocycle.write_oscillation_csv(_outpath(cfg, f"oscillation_seed{seed}.csv"), rep)
            reports.append((seed, rep))
    first = reports[0][1]
    summary = first.summary_dict()
    if cfg.mode == "SYNTHETIC":
        summary["per_seed"] = {
            str(seed): rep.summary_dict()["verdict"] for seed, rep in reports
        }
    write_json(_outpath(cfg, "summary.json"), summary)
    if plot_data:
        write_csv(
            _outpath(cfg, "plotdata.csv"),
            ["m", "fte"],
            [(r.m, r.fte) for r in first.rows],
        )
    ok = all(rep.verdict for _, rep in reports)
    print(
        "oscillate: verdict",
        "oscillation-confirmed" if ok else "no-oscillation",
        f"(gap {first.gap:.6g}, m_star {first.m_star})",
    )
    return EXIT_OK if ok else EXIT_VERIFICATION


def cmd_henon(cfg: RunConfig) -> int:
    center = henon.RenormParams(*cfg.henon_center)
    rep = henon.scan_dissipative_region(center, cfg.henon_radius, cfg.henon_grid_n)
    henon.write_region_csv(_outpath(cfg, "henon_region.csv"), rep)
    henon.write_region_summary(_outpath(cfg, "summary.json"), rep)
    note = " (low resolution)" if rep.low_resolution else ""
    print(
        f"henon: {rep.component_size} dissipative points in the centre component, "
        f"r_star={rep.r_star:.6g}{note}"
    )
    return EXIT_OK


# ------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ftlelab",
        description="Numerical verifications for finite-time Lyapunov exponent oscillation.",
    )
    ap.add_argument("--config", required=True, help="JSON or TOML run configuration")
    ap.add_argument("--out", default=None, help="output directory (overrides config)")
    ap.add_argument("--mode", choices=["GEOMETRIC", "SYNTHETIC"], default=None)
    ap.add_argument("--horizon", type=int, default=None, help="cycle horizon M")
    ap.add_argument("--seed", type=int, action="append", default=None)
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("feasibility")
    sub.add_parser("sequences")
    sub.add_parser("verify-all")
    osc = sub.add_parser("oscillate")
    osc.add_argument("--allow-infeasible", action="store_true", help="debug: skip the feasibility gate")
    osc.add_argument("--plot-data", action="store_true", help="emit an (m, fte) series file")
    sub.add_parser("henon")
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else 0
    try:
        cfg = load_config(args.config, args)
    except (FtleLabError, OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "feasibility":
            return cmd_feasibility(cfg)
        if args.command == "sequences":
            return cmd_sequences(cfg)
        if args.command == "verify-all":
            return cmd_verify_all(cfg)
        if args.command == "oscillate":
            return cmd_oscillate(
                cfg, allow_infeasible=args.allow_infeasible, plot_data=args.plot_data
            )
        if args.command == "henon":
            return cmd_henon(cfg)
    except FtleLabError as e:
        print(f"verification error: {e}", file=sys.stderr)
        return EXIT_VERIFICATION
    raise AssertionError("unreachable")


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
