import math

import pytest

from ftlelab import geometry as geo
from ftlelab import sequences as seqs
from ftlelab.errors import ConfigurationError
from ftlelab.logscalar import SignedLogReal
from ftlelab.modelmap import LogPoint


def test_rectangle_dimensions(ref, model):
    _, anchors, _ = model
    k = ref.k0
    rect = geo.rectangle_at(ref, anchors, k, 0)
    lw = seqs.log_eps_m(ref, k, 0) + 0.5 * seqs.log_b(ref, k)
    lh = seqs.log_eps_m(ref, k, 0) + seqs.log_b(ref, k) + math.log(0.25)
    assert rect.half_width.log_mag == pytest.approx(lw, abs=1e-12)
    assert rect.half_height.log_mag == pytest.approx(lh, abs=1e-12)
    assert rect.half_width > rect.half_height > SignedLogReal.zero()
    # aspect ratio 4 / sqrt(b)
    ratio = rect.half_width.log_mag - rect.half_height.log_mag
    assert ratio == pytest.approx(math.log(4) - 0.5 * seqs.log_b(ref, k), abs=1e-9)


def test_rectangle_rejects_flat_box():
    c = LogPoint.from_floats(0.0, 0.0)
    with pytest.raises(ConfigurationError):
        geo.Rectangle(c, SignedLogReal(1, -2.0), SignedLogReal(1, -1.0), 0, 0)


def test_diameter_dominates_height(ref, model):
    _, anchors, _ = model
    for m in (0, 3, 7):
        rect = geo.rectangle_at(ref, anchors, ref.k0, m)
        lh_quarter = seqs.log_eps_m(ref, ref.k0, m) + seqs.log_b(ref, ref.k0 + m) + math.log(0.25)
        assert rect.log_diam() >= lh_quarter


def test_eps_gap_to_chart_boundary(ref, model):
    # twice the base scale fits inside the core-to-boundary gap, which is
    # what makes the step-zero containment automatic
    chart, _, _ = model
    import math as _math

    assert 2 * _math.exp(seqs.log_eps(ref, ref.k0)) < chart.rho


def test_chart_containment(ref, model):
    chart, anchors, _ = model
    for m in (0, 5, 11):
        rect = geo.rectangle_at(ref, anchors, ref.k0, m)
        rep = geo.chart_containment_report(ref, rect, chart)
        assert rep.ok and rep.min_margin_log > 0
        assert geo.verify_stays_in_chart(ref, rect, chart)


def test_chart_containment_negative_control(ref, model):
    # inflating the box so its half-height reaches order one makes the
    # expanded corner leave the chart within a couple of steps
    chart, anchors, _ = model
    rect = geo.rectangle_at(ref, anchors, ref.k0, 0)
    factor = -(seqs.log_eps(ref, ref.k0) + seqs.log_b(ref, ref.k0))
    blown = rect.scaled(factor)
    rep = geo.chart_containment_report(ref, blown, chart)
    assert not rep.ok
    assert rep.fail_step is not None and rep.fail_step <= 3


def test_center_line_containment(ref, model):
    chart, anchors, folds = model
    for m in (0, 4, 9):
        rep = geo.verify_center_line_containment(ref, chart, anchors, folds, ref.k0, m)
        assert rep.ok
        assert rep.containment_margin_log > 0
        assert rep.s_projection_margin_log >= 0
        assert rep.quad_ratio_ok
        # image height stays far below half the target height, and the
        # quadratic budget makes the ratio at most C_T/2 * eps of the target
        bound = math.log(0.5 * ref.C_T) + seqs.log_eps_m(ref, ref.k0, m + 1)
        assert rep.height_ratio_log <= bound
        assert rep.height_ratio_log < math.log(0.5)
        assert rep.expansion_gap_log < 0


def test_fiber_shrink_ratio(ref, model):
    chart, anchors, folds = model
    for m in (0, 4, 9):
        rep = geo.verify_fiber_shrink_ratio(ref, chart, anchors, folds, ref.k0, m)
        assert rep.ok
        assert rep.max_ratio_log < math.log(1 / 8)


def test_fiber_proof_ratio_decays_in_k(ref, model):
    chart, anchors, folds = model
    vals = []
    for k in range(ref.k0, ref.k0 + 11):
        rep = geo.verify_fiber_shrink_ratio(ref, chart, anchors, folds, k, 0)
        bound = geo.fiber_decay_bound_log(ref, chart, k)
        assert rep.proof_ratio_log <= bound
        vals.append(rep.proof_ratio_log)
    assert vals[-1] < vals[0]  # decays as the base index grows


def test_forward_nesting(ref, model):
    chart, anchors, folds = model
    rows = geo.nesting_report(ref, chart, anchors, folds, ref.k0, 10)
    assert all(r.ok and r.min_margin_log > 0 for r in rows)
    assert geo.verify_forward_nesting(ref, chart, anchors, folds, ref.k0, 5)


def test_verifications_stable_for_larger_base_index(ref, model):
    # once the verifications pass at the base index they keep passing on
    # the next ten indices
    chart, anchors, folds = model
    for k in range(ref.k0, ref.k0 + 11):
        rect = geo.rectangle_at(ref, anchors, k, 0)
        assert geo.chart_containment_report(ref, rect, chart).ok
        assert geo.verify_center_line_containment(ref, chart, anchors, folds, k, 0).ok
        assert geo.verify_fiber_shrink_ratio(ref, chart, anchors, folds, k, 0).ok
        assert all(r.ok for r in geo.nesting_report(ref, chart, anchors, folds, k, 2))


def test_margin_csv(tmp_path, ref, model):
    chart, anchors, folds = model
    rows = geo.nesting_report(ref, chart, anchors, folds, ref.k0, 3)
    path = tmp_path / "margins.csv"
    geo.write_margin_csv(str(path), rows)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "k,m,min_margin_log,pass"
    assert len(lines) == 5
    assert lines[1].endswith("true")
