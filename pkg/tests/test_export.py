import json
from fractions import Fraction

from mtm.export import destination_table, format_value, grid_table, point_table


def test_format_values():
    assert format_value(Fraction(2, 4)) == "1/2"
    assert format_value(1) == "1/1"
    assert format_value(0.1) == "0.10000000000000001"


def test_tables():
    d = {1: Fraction(1, 3), 0: Fraction(2, 3)}
    assert point_table(d) == "point_id,probability\n0,2/3\n1,1/3\n"
    assert json.loads(point_table(d, "json")) == [
        {"point_id": 0, "probability": "2/3"},
        {"point_id": 1, "probability": "1/3"},
    ]
    assert grid_table({0: 0.5, 1: 0.5}, [(0, 0), (0, 1)]).splitlines()[0] == "i,j,probability"
    assert destination_table(d, 4).splitlines()[0] == "dest_id,probability_at_4"
