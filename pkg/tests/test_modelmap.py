import json
import math

import pytest

from conftest import base_offset
from ftlelab import modelmap as mm
from ftlelab import sequences as seqs
from ftlelab.errors import ConfigurationError, DomainError, ModelInconsistencyError
from ftlelab.logscalar import SignedLogReal, slog
from ftlelab.modelmap import LogPoint


def test_chart_validation():
    with pytest.raises(ConfigurationError):
        mm.SaddleChart(0.5, 2.0)  # violates strong dissipation
    ch = mm.SaddleChart(0.05, 2.0)
    assert ch.rho == pytest.approx(0.1)


def test_anchor_placement(ref, model):
    chart, anchors, _ = model
    k = ref.k0
    z = anchors.zeta[k]
    assert z.s.to_float() == pytest.approx(0.1)
    n = seqs.n_hyper(ref, k)
    assert z.u.log_mag == pytest.approx(math.log(0.5) - n * math.log(2.0))
    zp = anchors.zeta_prime[k + 1]
    assert zp.u.to_float() == pytest.approx(0.5)
    assert zp.s.log_mag == pytest.approx(math.log(0.1) + n * math.log(0.05))
    # whole hyperbolic segment stays in the core: u grows monotonically to 0.5
    for j in (0, n // 2, n):
        u_log = z.u.log_mag + j * chart.log_lambda_u
        assert u_log <= math.log(0.5) + 1e-12
        s_log = z.s.log_mag + j * chart.log_lambda_s
        assert s_log <= math.log(0.9)


def test_anchor_placement_rejects_bad_base(ref):
    chart = mm.chart_for(ref)
    with pytest.raises(ConfigurationError):
        mm.place_anchors(ref, chart, ref.k0, ref.k0 + 1, z_u=1.5)


def test_apply_hyperbolic():
    ch = mm.SaddleChart(0.05, 2.0)
    pt = LogPoint.from_floats(0.1, 0.5 * 2.0**-20)
    assert mm.apply_hyperbolic(ch, pt, 0) is pt
    img = mm.apply_hyperbolic(ch, pt, 20)
    assert img.u.to_float() == pytest.approx(0.5, rel=1e-14)
    assert img.s.to_float() == pytest.approx(0.1 * 0.05**20, rel=1e-12)
    # composition adds exponents exactly up to final rounding
    two = mm.apply_hyperbolic(ch, mm.apply_hyperbolic(ch, pt, 7), 13)
    assert math.isclose(two.s.log_mag, img.s.log_mag, rel_tol=1e-14)
    assert math.isclose(two.u.log_mag, img.u.log_mag, rel_tol=1e-14)


def _toy_fold():
    return mm.FoldMap(
        k=0,
        a11=0.3,
        a12=1.0,
        a21=-1.0,
        q=2.0,
        source_anchor=LogPoint.from_floats(0.2, 0.5),
        target_anchor=LogPoint.from_floats(0.1, 0.25),
    )


def test_fold_maps_anchor_to_anchor():
    f = _toy_fold()
    img = mm.apply_fold(f, f.source_anchor)
    assert img.s == f.target_anchor.s
    assert img.u == f.target_anchor.u


def test_fold_matches_float_formula():
    f = _toy_fold()
    for ds, du in ((0.01, -0.02), (-0.03, 0.015), (0.0, 0.05)):
        img = mm.apply_fold(f, LogPoint.from_floats(0.2 + ds, 0.5 + du))
        s, u = img.decode()
        assert s == pytest.approx(0.1 + 0.3 * ds + 1.0 * du, rel=1e-10, abs=1e-14)
        assert u == pytest.approx(0.25 - 1.0 * ds + 2.0 * du * du, rel=1e-10, abs=1e-14)


def test_fold_vertical_segment_is_quadratic():
    # a vertical segment (ds = 0) maps so that the u-extent equals
    # (|q|/a12^2) times the squared s-extent: the curvature constant
    f = _toy_fold()
    du = 0.01
    img = f.apply_offset(LogPoint(SignedLogReal.zero(), slog(du)))
    s_proj = abs(img.s.to_float())
    u_proj = abs(img.u.to_float())
    assert u_proj == pytest.approx(f.quad_constant() * s_proj**2, rel=1e-12)
    assert f.quad_constant() == pytest.approx(2.0)


def test_fold_domain_box():
    f = _toy_fold()
    with pytest.raises(DomainError):
        mm.apply_fold(f, LogPoint.from_floats(0.2 + 0.5, 0.5))


def test_fold_jacobian_structure():
    f = _toy_fold()
    at_anchor = mm.fold_jacobian(f, f.source_anchor)
    assert at_anchor.a22.is_zero
    assert at_anchor.a11.to_float() == pytest.approx(0.3)
    assert at_anchor.a12.to_float() == pytest.approx(1.0)
    assert at_anchor.a21.to_float() == pytest.approx(-1.0)
    det = at_anchor.det().to_float()
    assert det == pytest.approx(1.0)  # -a12*a21
    # at offset u the (2,2) entry is 2 q u and the difference norm is 2|q||u|
    u_off = 0.013
    jac = mm.fold_jacobian(f, LogPoint.from_floats(0.2, 0.5 + u_off))
    assert jac.a22.to_float() == pytest.approx(2 * 2.0 * u_off, rel=1e-12)
    diff = 2 * abs(f.q) * u_off
    # bounded by Lambda1^nT times the offset for any nT >= 2 with Lambda1 = 2
    assert diff <= 2.0**2 * u_off


def test_fold_family_bounds(ref, model):
    chart, anchors, folds = model
    k = ref.k0
    f = folds[k]
    nT = seqs.n_tan(ref, k)
    lam_pow = ref.Lambda1**nT
    assert max(abs(f.a11), abs(f.a12), abs(f.a21)) <= 0.5 * lam_pow
    assert min(abs(f.a12), abs(f.a21)) >= 2.0 / lam_pow
    assert 2 * abs(f.q) <= lam_pow
    assert f.quad_constant() <= ref.C_T
    assert mm.model_lambda(chart, folds.values()) >= chart.lambda_u
    assert ref.Lambda1 >= f.norm_bound()


def test_fold_family_is_diffeomorphism(ref, model):
    # determinant bounded away from zero at box corners and an interior grid
    _, _, folds = model
    f = folds[ref.k0]
    r = f.box_radius
    for us in (-r, -r / 2, 0.0, r / 2, r):
        det = f.a11 * 2 * f.q * us - f.a12 * f.a21
        assert abs(det) > 0.5


def test_fold_family_jitter_mode(ref, model):
    chart, anchors, _ = model
    folds = mm.build_fold_family(ref, chart, anchors, ref.k0, ref.k0 + 5, jitter=0.1, seed=7)
    for f in folds.values():
        assert f.quad_constant() <= ref.C_T + 1e-12
        assert f.a12 * f.a21 != 0


def test_orbit_membership_guard(ref, model):
    chart, anchors, folds = model
    orbit = mm.ModelOrbit(ref, chart, anchors, folds)
    records = orbit.run(base_offset(ref), 10)
    assert len(records) == 10
    # an offset outside the base rectangle trips the guard immediately
    lw, _ = orbit.membership_bounds(0)
    bad = LogPoint(SignedLogReal(1, lw + math.log(2.0)), SignedLogReal.zero())
    with pytest.raises(ModelInconsistencyError):
        orbit.run(bad, 1)


def test_birkhoff_constant_observable(ref, model):
    chart, anchors, folds = model
    one = mm.Observable(fn=lambda s, u: 1.0, sup=1.0)
    avg = mm.birkhoff_average(ref, chart, anchors, folds, one, base_offset(ref), 500)
    assert avg == pytest.approx(1.0, rel=1e-15)


def test_birkhoff_s_coordinate_decays(ref, model):
    chart, anchors, folds = model
    s_obs = mm.Observable(fn=lambda s, u: abs(s), sup=1.0)
    zero = LogPoint(SignedLogReal.zero(), SignedLogReal.zero())  # the anchor orbit itself
    short = mm.birkhoff_average(ref, chart, anchors, folds, s_obs, zero, 200)
    longer = mm.birkhoff_average(ref, chart, anchors, folds, s_obs, zero, 5000)
    assert longer < short
    assert longer < 0.01


def test_orbit_ndjson_dump(tmp_path, ref, model):
    chart, anchors, folds = model
    orbit = mm.ModelOrbit(ref, chart, anchors, folds)
    records = orbit.run(base_offset(ref), 3)
    path = tmp_path / "orbit.ndjson"
    mm.dump_orbit_ndjson(str(path), records, anchors)
    lines = [json.loads(line) for line in path.read_text().splitlines()]
    assert len(lines) == 6  # two phases per return
    assert {r["phase"] for r in lines} == {"hyperbolic", "fold"}
    assert all(set(r) == {"k", "point_s_log", "point_u_log", "phase"} for r in lines)
    assert lines[0]["k"] == ref.k0
