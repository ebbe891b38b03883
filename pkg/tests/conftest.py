import math

import pytest

from ftlelab import calibrate, modelmap, reference_params
from ftlelab import sequences as seqs
from ftlelab.logscalar import SignedLogReal
from ftlelab.modelmap import LogPoint

OSC_HORIZON = 400


@pytest.fixture(scope="session")
def ref():
    """Calibrated reference parameters."""
    return calibrate(reference_params())


@pytest.fixture(scope="session")
def model(ref):
    """(chart, anchors, folds) covering the full oscillation horizon."""
    chart = modelmap.chart_for(ref)
    anchors = modelmap.place_anchors(ref, chart, ref.k0, ref.k0 + OSC_HORIZON + 2)
    folds = modelmap.build_fold_family(ref, chart, anchors, ref.k0, ref.k0 + OSC_HORIZON + 1)
    return chart, anchors, folds


def base_offset(p, frac_s=0.5, frac_u=0.5):
    """An interior offset of the base rectangle (fractions of half extents)."""
    lw = seqs.log_eps_m(p, p.k0, 0) + 0.5 * seqs.log_b(p, p.k0)
    lh = seqs.log_eps_m(p, p.k0, 0) + seqs.log_b(p, p.k0) + math.log(0.25)
    s = (
        SignedLogReal.zero()
        if frac_s == 0
        else SignedLogReal(1 if frac_s > 0 else -1, lw + math.log(abs(frac_s)))
    )
    u = (
        SignedLogReal.zero()
        if frac_u == 0
        else SignedLogReal(1 if frac_u > 0 else -1, lh + math.log(abs(frac_u)))
    )
    return LogPoint(s, u)
