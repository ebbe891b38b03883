"""Oscillation holds across the open set, the cone, and coefficient noise."""

import math

import pytest

from conftest import base_offset
from ftlelab import cocycle as cc
from ftlelab import modelmap as mm
from ftlelab import sequences as seqs
from ftlelab.errors import ConfigurationError, ModelInconsistencyError
from ftlelab.logscalar import SignedLogReal
from ftlelab.modelmap import LogPoint


@pytest.mark.parametrize("fracs", [(0.5, 0.5), (-0.9, 0.3), (0.05, -0.85)])
@pytest.mark.parametrize("c0", [(1.0, 1.0), (1.2, 0.9), (-0.8, 1.0)])
def test_oscillation_across_points_and_cone(ref, model, fracs, c0):
    chart, anchors, folds = model
    offset = base_offset(ref, *fracs)
    coeffs = cc.geometric_coeffs(ref, chart, anchors, folds, offset, 200)
    rep = cc.oscillation_report(ref, coeffs, c0=c0, limit_tol=0.01)
    assert rep.verdict
    assert all(r.sandwich_ok for r in rep.rows)


def test_oscillation_with_jittered_folds(ref, model):
    # coefficient noise within the certified ranges leaves the structure
    # intact: the product bounds and the growth envelope keep holding
    chart, anchors, _ = model
    folds = mm.build_fold_family(ref, chart, anchors, ref.k0, ref.k0 + 60, jitter=0.1, seed=11)
    coeffs = cc.geometric_coeffs(ref, chart, anchors, folds, base_offset(ref), 60)
    state = cc.initial_state(ref)
    for c in coeffs:
        state = cc.product_step(state, c)
        assert cc.check_coefficient_bounds(state)
        assert cc.finite_time_le(state, (1.0, 1.0), ref.C0).sandwich_ok


def test_synthetic_sandwich_never_violated(ref):
    for seed in (0, 1, 2, 3, 4):
        state = cc.initial_state(ref)
        for c in cc.synthetic_coeffs(ref, seed, 120):
            state = cc.product_step(state, c)
            assert cc.finite_time_le(state, (1.0, 1.0), ref.C0).sandwich_ok


def test_orbit_requires_covering_fold_family(ref, model):
    chart, anchors, _ = model
    folds = mm.build_fold_family(ref, chart, anchors, ref.k0, ref.k0 + 2)
    orbit = mm.ModelOrbit(ref, chart, anchors, folds)
    with pytest.raises(ModelInconsistencyError):
        orbit.run(base_offset(ref), 10)


def test_fold_family_requires_covering_anchors(ref, model):
    chart, anchors, _ = model
    with pytest.raises(ConfigurationError):
        mm.build_fold_family(ref, chart, anchors, ref.k0, ref.k0 + 10**6)


def test_exponent_never_settles_between_the_limits(ref, model):
    # the whole point: the running exponent keeps crossing the gap, so no
    # single limit exists; verify sign flips of (fte - midpoint) persist
    chart, anchors, folds = model
    coeffs = cc.geometric_coeffs(ref, chart, anchors, folds, base_offset(ref), 300)
    rep = cc.oscillation_report(ref, coeffs)
    mid = 0.5 * (rep.even_limit + rep.odd_limit)
    tail = [r for r in rep.rows if r.m >= 100]
    crossings = sum(
        1
        for a, b in zip(tail, tail[1:])
        if (a.fte - mid) * (b.fte - mid) < 0
    )
    assert crossings >= len(tail) - 2  # alternates essentially every step


@pytest.mark.parametrize(
    "ls,lu,a,b",
    [(0.03, 2.5, 1.01, 1.02), (0.1, 1.8, 1.015, 1.03)],
)
def test_pipeline_generalizes_to_other_tuples(ls, lu, a, b):
    # full pipeline on independent feasible tuples, including one whose
    # admissible xi band midpoint exceeds float range (placement capped)
    from ftlelab import Params, calibrate, check_feasibility

    p0 = Params(lambda_s=ls, lambda_u=lu, alpha=a, beta=b, n0H=12)
    assert check_feasibility(p0).feasible
    p = calibrate(p0)
    assert 0 < p.xi < 1
    chart = mm.chart_for(p)
    anchors = mm.place_anchors(p, chart, p.k0, p.k0 + 202)
    folds = mm.build_fold_family(p, chart, anchors, p.k0, p.k0 + 201)
    lw = seqs.log_eps_m(p, p.k0, 0) + 0.5 * seqs.log_b(p, p.k0)
    lh = seqs.log_eps_m(p, p.k0, 0) + seqs.log_b(p, p.k0) + math.log(0.25)
    off = LogPoint(SignedLogReal(1, lw + math.log(0.5)), SignedLogReal(1, lh + math.log(0.5)))
    coeffs = cc.geometric_coeffs(p, chart, anchors, folds, off, 200)
    rep = cc.oscillation_report(p, coeffs, limit_tol=0.01)
    assert rep.verdict
    assert all(r.sandwich_ok for r in rep.rows)
