import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import box_iou, dfl_formula
from synthdrive.errors import ValidationError
from synthdrive.evaluation import box_loss, ciou, cls_loss, dfl_loss

boxes = st.tuples(st.floats(0.1, 0.9), st.floats(0.1, 0.9), st.floats(0.01, 0.5), st.floats(0.01, 0.5))


def test_box_loss_identical_is_zero():
    assert box_loss((0.4, 0.5, 0.2, 0.3), (0.4, 0.5, 0.2, 0.3)) == 0.0


@given(boxes, boxes)
def test_ciou_bounded_by_iou(a, b):
    assert ciou(a, b) <= box_iou(a, b) + 1e-12
    assert -1.0 - 1e-12 <= ciou(a, b)
    assert 0.0 <= box_loss(a, b) <= 2.0 + 1e-12


def test_ciou_centre_penalty_for_disjoint_boxes():
    # same shape, centres 0.4 apart on x; enclosing box 0.5 x 0.1
    value = ciou((0.3, 0.5, 0.1, 0.1), (0.7, 0.5, 0.1, 0.1))
    assert value == pytest.approx(-(0.4 ** 2) / (0.5 ** 2 + 0.1 ** 2))


def test_cls_loss_perfect_prediction():
    assert cls_loss([0.0, 1.0, 0.0], 1) <= 1e-9
    assert cls_loss([1.0, 0.0, 0.0], [1.0, 0.0, 0.0]) <= 1e-9


def test_cls_loss_matches_bce_average():
    p = np.array([0.2, 0.7, 0.1])
    want = -(math.log(0.8) + math.log(0.7) + math.log(0.9)) / 3
    assert cls_loss(p, 1) == pytest.approx(want)


def test_cls_loss_guards_log_zero():
    assert math.isfinite(cls_loss([1.0, 0.0, 0.0], 1))


def test_dfl_worked_example():
    # bins {2, 3}, y = 2.3, S2 = 0.7, S3 = 0.3
    s = np.zeros(5)
    s[2], s[3] = 0.7, 0.3
    assert dfl_loss(s, 2.3) == pytest.approx(0.61086, abs=1e-5)
    assert dfl_loss(s, 2.3) == pytest.approx(dfl_formula(2, 3, 2.3, 0.7, 0.3), abs=1e-12)


@pytest.mark.parametrize("y", [0.0, 1.0, 2.0, 3.0])
def test_dfl_zero_for_one_hot_at_exact_bin(y):
    s = np.zeros(4)
    s[int(y)] = 1.0
    assert dfl_loss(s, y) == 0.0


def test_dfl_positive_off_bin():
    s = np.zeros(4)
    s[1] = 1.0
    assert dfl_loss(s, 1.5) > 1.0


@pytest.mark.parametrize("y", [0.3, 1.5, 2.75])
def test_dfl_minimised_at_interpolation_weights(y):
    n = 4
    i = int(math.floor(y))
    best = dfl_loss(_two_bin(n, i, i + 1 - y), y)
    grid = np.linspace(0.0, 1.0, 101)
    for a, b in itertools.product(grid, grid):
        if a + b > 1.0 + 1e-12:
            continue
        s = np.zeros(n)
        s[i], s[i + 1] = a, b
        s[(i + 2) % n] += max(0.0, 1.0 - a - b)
        assert dfl_loss(s, y) >= best - 1e-12


def _two_bin(n, i, left_weight):
    s = np.zeros(n)
    s[i], s[i + 1] = left_weight, 1.0 - left_weight
    return s


def test_loss_input_validation():
    with pytest.raises(ValidationError):
        cls_loss([0.5, 0.6], 0)
    with pytest.raises(ValidationError):
        dfl_loss([0.5, 0.5], 1.5)
    with pytest.raises(ValidationError):
        box_loss((0.5, 0.5, 0.0, 0.1), (0.5, 0.5, 0.1, 0.1))
