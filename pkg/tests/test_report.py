import math
import xml.etree.ElementTree as ET

import pytest
from hypothesis import given
from hypothesis import strategies as st

from eescreen.effects import EffectsSummary, summarize
from eescreen.exceptions import ClassificationError
from eescreen.report import (
    classify,
    classify_all,
    emit_scatter_svg,
    monotonicity_ratios,
    read_summary_csv,
    scatter_svg,
    write_summary_csv,
)

SVG = "{http://www.w3.org/2000/svg}"


def summary(mu_star, sigma, mu=None, i=0, j=None, n=10):
    mu = mu_star if mu is None else mu
    return EffectsSummary("first" if j is None else "second", i, j, mu, mu_star, sigma,
                          sigma / mu_star if mu_star else None, sigma / abs(mu) if mu else None, n)


@pytest.mark.parametrize("ratio, zone", [
    (0.05, "almost_linear"),
    (0.3, "monotonic"),
    (0.7, "almost_monotonic"),
    (1.2, "nonmonotonic_or_interacting"),
    (0.1, "monotonic"),
    (1.0, "nonmonotonic_or_interacting"),
])
def test_zone_thresholds(ratio, zone):
    assert classify(summary(100.0, ratio * 100.0), max_mu_star=100.0) == zone


def test_zero_effects_negligible():
    s = summarize([0.0, 0.0, 0.0])
    assert classify(s, max_mu_star=0.0) == "negligible"
    assert classify(s, max_mu_star=5.0) == "negligible"


def test_small_effects_negligible_relative_to_max():
    assert classify(summary(0.5, 0.4), max_mu_star=100.0) == "negligible"
    # small mu* but large scatter is not negligible
    assert classify(summary(0.5, 3.0), max_mu_star=100.0) == "nonmonotonic_or_interacting"
    assert classify(summary(0.5, 0.4), max_mu_star=100.0, negligible_rel=0.001) == "almost_monotonic"


def test_classification_refused_for_one_replicate():
    with pytest.raises(ClassificationError):
        classify(summarize([1.0]), max_mu_star=1.0)


def test_classify_all_scales_kinds_separately():
    rows = [summary(100.0, 1.0), summary(1.0, 0.01, i=1), summary(0.5, 0.0, i=0, j=1)]
    assert classify_all(rows) == ["almost_linear", "almost_linear", "almost_linear"]


def test_ratios_sign_uniform_equal():
    s = summarize([-1.0, -2.5, -0.25, -7.0])
    rs, ra = monotonicity_ratios(s)
    assert rs == ra


def test_ratios_opposite_pair():
    s = summarize([3.0, -3.0])
    rs, ra = monotonicity_ratios(s)
    assert ra is None
    assert rs == pytest.approx(math.sqrt(2), rel=1e-15)


def test_ratios_constant_samples():
    assert monotonicity_ratios(summarize([2.0, 2.0, 2.0])) == (0.0, 0.0)


def test_ratios_undefined_when_mu_star_zero():
    assert monotonicity_ratios(summarize([0.0, 0.0])) == (None, None)


values_st = st.lists(st.floats(-1e4, 1e4).filter(lambda v: abs(v) > 1e-6), min_size=2, max_size=20)


@given(values_st)
def test_ratio_star_never_exceeds_ratio_abs(values):
    rs, ra = monotonicity_ratios(summarize(values))
    if rs is not None and ra is not None:
        assert rs <= ra * (1 + 1e-12)


@given(values_st, st.floats(1e-3, 1e3))
def test_zones_invariant_under_positive_rescaling(values, c):
    rows = [summarize(values, i=0), summarize([v * 0.5 + 1 for v in values], i=1)]
    scaled = [summarize([v * c for v in values], i=0), summarize([(v * 0.5 + 1) * c for v in values], i=1)]
    for a, b in zip(rows, scaled):
        ra, rb = monotonicity_ratios(a), monotonicity_ratios(b)
        for x, y in zip(ra, rb):
            assert (x is None) == (y is None)
            if x is not None:
                assert y == pytest.approx(x, rel=1e-9, abs=1e-12)
    za, zb = classify_all(rows), classify_all(scaled)
    # exact threshold ties may flip under rounding; none of these sit on a boundary
    for a, x, y in zip(rows, za, zb):
        r = a.ratio_star
        if r is not None and all(abs(r - t) > 1e-9 for t in (0.1, 0.5, 1.0)):
            assert x == y


def test_summary_csv_round_trip(tmp_path):
    rows = [summarize([1.0, -2.0, 3.0], i=0), summarize([5.0], i=1), summarize([0.0, 0.0], "second", 0, 1)]
    path = tmp_path / "s.csv"
    write_summary_csv(rows, path)
    assert path.read_text().splitlines()[0] == "kind,i,j,mu,mu_star,sigma,ratio_star,ratio_abs,n"
    assert read_summary_csv(path) == rows


# --- SVG -----------------------------------------------------------------------

def parse(svg):
    root = ET.fromstring(svg)
    pts = {c.get("data-label"): c for c in root.iter(f"{SVG}circle")}
    guides = {float(g.get("data-slope")): g for g in root.iter(f"{SVG}line") if g.get("data-slope")}
    return root, pts, guides


def line_y_at(line, x):
    x1, y1, x2, y2 = (float(line.get(a)) for a in ("x1", "y1", "x2", "y2"))
    return y1 + (y2 - y1) * (x - x1) / (x2 - x1)


def test_point_below_linear_guide():
    root, pts, guides = parse(scatter_svg([summary(1.0, 0.05), summary(2.0, 1.5, i=1)], "sigma"))
    assert root.get("width") == "800" and root.get("height") == "600"
    p = pts["1"]
    cx, cy = float(p.get("cx")), float(p.get("cy"))
    # SVG y grows downward: "below the line" means a larger pixel y
    assert cy > line_y_at(guides[0.1], cx)
    assert sorted(guides) == [0.1, 0.5, 1.0]


def test_ratio_presentation_same_information():
    rows = [summary(1.0, 0.05), summary(2.0, 1.5, i=1), summary(0.4, 0.3, i=2)]
    _, sig, _ = parse(scatter_svg(rows, "sigma"))
    _, rat, guides = parse(scatter_svg(rows, "ratio"))
    for label in sig:
        x, y = float(sig[label].get("data-x")), float(sig[label].get("data-y"))
        assert float(rat[label].get("data-x")) == x
        assert float(rat[label].get("data-y")) == pytest.approx(y / x, rel=1e-15)
    for g in guides.values():
        assert g.get("y1") == g.get("y2")
    # ranking by mu* is shared: same x pixel in both plots
    assert [rat[k].get("cx") for k in sorted(rat)] == [sig[k].get("cx") for k in sorted(sig)]


def test_pair_labels():
    _, pts, _ = parse(scatter_svg([summary(1.0, 0.2, i=2, j=4)], "sigma"))
    assert list(pts) == ["3-5"]


def test_svg_deterministic():
    rows = [summary(1.0, 0.05), summary(2.0, 1.5, i=1)]
    assert scatter_svg(rows, "ratio") == scatter_svg(rows, "ratio")


def test_empty_list_no_file(tmp_path):
    path = tmp_path / "pairs.svg"
    with pytest.raises(ValueError):
        emit_scatter_svg([], "sigma", path)
    assert not path.exists()


def test_unwritable_path(tmp_path):
    with pytest.raises(OSError):
        emit_scatter_svg([summary(1.0, 0.1)], "sigma", tmp_path / "missing" / "x.svg")
