import math

import mpmath as mp
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nucshare import network as net
from nucshare.errors import DataError, DomainError, ExpansionLimitError
from nucshare.finance import annuity
from nucshare.network import ExpansionStep, Link, LinkKind


def link(kind=LinkKind.HVDC, length=1000.0, steps=(), **kw):
    return Link("L", "A", "B", kind, "electricity", length, steps=steps, **kw)


def haversine_oracle(a, b):
    lat1, lon1, lat2, lon2 = (mp.radians(mp.mpf(v)) for v in (*a, *b))
    cos_angle = mp.sin(lat1) * mp.sin(lat2) + mp.cos(lat1) * mp.cos(lat2) * mp.cos(lon2 - lon1)
    return float(6371 * mp.acos(cos_angle))


def test_great_circle_examples():
    assert net.great_circle_km((10.0, 20.0), (10.0, 20.0)) == 0.0
    assert net.great_circle_km((0, 0), (0, 180)) == pytest.approx(20015.1, abs=0.05)
    berlin, amsterdam = (52.52, 13.405), (52.37, 4.90)
    d = net.great_circle_km(berlin, amsterdam)
    assert abs(d - 577) <= 2
    assert d == pytest.approx(haversine_oracle(berlin, amsterdam), rel=1e-12)
    with pytest.raises(DomainError):
        net.great_circle_km((91, 0), (0, 0))


coords = st.tuples(st.floats(-89, 89), st.floats(-179, 179))


@given(coords, coords)
def test_great_circle_symmetric_and_bounded(a, b):
    d = net.great_circle_km(a, b)
    assert d == pytest.approx(net.great_circle_km(b, a), abs=1e-9)
    assert 0 <= d <= math.pi * net.EARTH_RADIUS_KM + 1e-6


def test_delivered_bits():
    assert f"{net.delivered(1.0, link(LinkKind.HVDC)):.6f}" == "0.970000"
    assert f"{net.delivered(1.0, link(LinkKind.HVAC)):.6f}" == "0.950000"
    assert f"{net.delivered(1.0, link(LinkKind.H2_PIPELINE)):.6f}" == "0.975600"
    assert net.delivered(1.0, link(LinkKind.H2_PIPELINE, 500.0)) == pytest.approx(0.9878, abs=1e-15)
    assert net.delivered(2.5, link(length=0.0)) == 2.5
    assert link(LinkKind.HVDC).efficiency == pytest.approx(0.97, abs=1e-15)
    with pytest.raises(DomainError):
        net.delivered(-1.0, link())


@given(st.floats(0, 1e3), st.floats(0, 1e3), st.floats(0, 5000))
def test_delivered_linear(a, b, length):
    L = link(LinkKind.HVAC, length)
    assert net.delivered(a + b, L) == pytest.approx(net.delivered(a, L) + net.delivered(b, L), rel=1e-12, abs=1e-12)


def test_link_validation():
    with pytest.raises(DataError, match="100%"):
        link(LinkKind.HVAC, 20000.0)
    with pytest.raises(DataError):
        link(length=-1.0)
    with pytest.raises(DataError):
        link(loss_per_1000km=1.0)
    with pytest.raises(DataError, match="nondecreasing"):
        link(steps=(ExpansionStep(300, 1), ExpansionStep(100, 2)))
    with pytest.raises(DataError):
        link(LinkKind.TRUCK_TRADE, existing_gw=1.0)
    with pytest.raises(DataError):
        Link("L", "A", "A", LinkKind.HVAC, "electricity", 10.0)
    assert not link(LinkKind.TRUCK_TRADE).has_capacity
    assert link().directions() == [("A", "B"), ("B", "A")]
    assert link(bidirectional=False).directions() == [("A", "B")]


def test_expansion_cost_examples():
    L = link(steps=(ExpansionStep(100.0, 2.0), ExpansionStep(300.0, 1.0)))
    assert net.expansion_cost(L, 0.0) == 0.0
    assert net.expansion_cost(L, 2.5) == 350.0
    assert net.expansion_cost(L, 3.0) == 500.0
    with pytest.raises(ExpansionLimitError):
        net.expansion_cost(L, 3.5)
    with pytest.raises(ExpansionLimitError):
        net.marginal_expansion_cost(L, 3.0)
    assert net.marginal_expansion_cost(L, 1.0) == 100.0
    assert net.marginal_expansion_cost(L, 2.0) == 300.0


step_curves = st.lists(st.tuples(st.floats(0, 1e4), st.floats(0.01, 10)), min_size=1, max_size=6).map(
    lambda s: tuple(ExpansionStep(c, g) for c, g in zip(sorted(x[0] for x in s), (x[1] for x in s))))


@given(step_curves, st.floats(0, 1), st.floats(0, 1))
def test_expansion_cost_convex(steps, u, v):
    L = link(steps=steps)
    x, y = sorted((u * L.expansion_limit, v * L.expansion_limit))
    if y < L.expansion_limit:
        assert net.marginal_expansion_cost(L, x) <= net.marginal_expansion_cost(L, y)
    mid = net.expansion_cost(L, (x + y) / 2)
    assert mid <= (net.expansion_cost(L, x) + net.expansion_cost(L, y)) / 2 + 1e-9 * (1 + mid)


def test_pipeline_cost_and_annualized_steps():
    assert net.pipeline_step_cost(500.0, 0.05) == pytest.approx(annuity(0, 200.0, 0.05, 40), rel=1e-15)
    steps = net.annualize_steps([ExpansionStep(1000.0, 2.0)], 0.0, 20)
    assert steps == (ExpansionStep(50.0, 2.0),)


def test_link_from_row():
    centroids = {"A": (52.52, 13.405), "B": (52.37, 4.90)}
    row = {"id": "ab", "from": "A", "to": "B", "kind": "hvdc", "carrier": "electricity",
           "length_km": "", "existing_gw": "2", "step1_cost": "10", "step1_gw": "1",
           "step2_cost": "20", "step2_gw": "3", "bidirectional": "false"}
    L = net.link_from_row(row, centroids)
    assert L.kind is LinkKind.HVDC and L.length_km == pytest.approx(net.great_circle_km(*centroids.values()))
    assert L.steps == (ExpansionStep(10.0, 1.0), ExpansionStep(20.0, 3.0))
    assert L.existing_gw == 2.0 and not L.bidirectional
    pipe = net.link_from_row({"id": "p", "from": "A", "to": "B", "kind": "h2_pipeline",
                              "carrier": "hydrogen", "length_km": "100", "max_expansion_gw": "5"}, centroids)
    assert pipe.steps == (ExpansionStep(net.pipeline_step_cost(100.0, 0.05), 5.0),)
    with pytest.raises(DataError):
        net.link_from_row(dict(row, to="C"), centroids)
    with pytest.raises(DataError):
        net.link_from_row(dict(row, step2_gw=""), centroids)
    with pytest.raises(DataError):
        net.link_from_row(dict(row, kind="ferry"), centroids)
