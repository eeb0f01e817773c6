import pytest

from gradedkit.grading import EVEN, ODD, ChartError, Weight, mk_chart


def test_weight_arithmetic():
    a, b = Weight((1, 2)), Weight((0, 3))
    assert a + b == Weight((1, 5))
    assert a - b == Weight((1, -1))
    assert a.total == 3
    assert Weight.zero(2) == Weight((0, 0))
    assert not (a - b).is_nonnegative()


def test_t2m_chart_bound_and_rank():
    c = mk_chart(1, [("x", (0,), EVEN), ("dx", (1,), EVEN), ("d2x", (2,), EVEN)])
    assert c.degree_bound == Weight((2,))
    assert [c.rank(n) for n in ("x", "dx", "d2x")] == [0, 1, 2]


def test_rank_orders_by_weight_then_parity_then_name():
    c = mk_chart(1, [("b", (1,), EVEN), ("a", (1,), ODD), ("z", (0,), EVEN)])
    assert sorted(c.names, key=c.rank) == ["z", "b", "a"]


@pytest.mark.parametrize(
    "coords",
    [
        [("x", (0,), EVEN), ("x", (1,), EVEN)],
        [("x", (0, 1), EVEN)],
        [("x", (-1,), EVEN)],
    ],
)
def test_invalid_charts(coords):
    with pytest.raises(ChartError):
        mk_chart(1, coords)


def test_parity_component_requirement():
    with pytest.raises(ChartError):
        mk_chart(2, [("xi", (0, 1), EVEN)], require_parity_component=1)
    assert mk_chart(2, [("xi", (0, 1), ODD)], require_parity_component=1).names == ("xi",)


def test_params_are_not_geometric():
    c = mk_chart(1, [("x", (1,), EVEN)]).with_params("t")
    assert list(c.params) == ["t"]
    assert [g.name for g in c.geometric] == ["x"]
    assert c.without_params().names == ("x",)
