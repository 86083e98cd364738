import pytest

from tippingpoint.imputation import Arm, Direction, Method
from tippingpoint.planning import Imbalance, plan, plan_dataset

from conftest import make_dataset


def test_control_heavier():
    rec = plan(0.13, 0.012)
    assert rec.imbalance_direction is Imbalance.CONTROL_HEAVIER
    methods = {r.method for r in rec.recommended_methods}
    assert methods == {Method.DETERMINISTIC, Method.MODEL_WEIBULL, Method.DONOR}
    assert all(r.arm is Arm.CONTROL for r in rec.recommended_methods)
    donor = next(r for r in rec.recommended_methods if r.method is Method.DONOR)
    assert donor.direction is Direction.BEST


def test_experimental_heavier():
    rec = plan(0.018, 0.056)
    assert rec.imbalance_direction is Imbalance.EXPERIMENTAL_HEAVIER
    assert all(r.arm is Arm.EXPERIMENTAL for r in rec.recommended_methods)
    assert "inflating" in " ".join(rec.lines())


def test_balanced():
    rec = plan(0.1, 0.1)
    assert rec.imbalance_direction is Imbalance.BALANCED
    assert "balanced" in list(rec.lines())[1]
    assert plan(0.10, 0.11, tolerance=0.02).imbalance_direction is Imbalance.BALANCED


@pytest.mark.parametrize("scale", [0.1, 0.5, 2.0, 5.0])
def test_depends_only_on_sign(scale):
    base = plan(0.13, 0.012)
    scaled = plan(0.13 * scale / 5, 0.012 * scale / 5)
    assert scaled.recommended_methods == base.recommended_methods


def test_rates_validated():
    with pytest.raises(ValueError):
        plan(1.2, 0.1)


def test_plan_dataset():
    d = make_dataset([0, 0, 1, 1], [1.0, 2.0, 3.0, 4.0], [False, True, True, True],
                     dropout=[True, False, False, False])
    assert plan_dataset(d).imbalance_direction is Imbalance.CONTROL_HEAVIER
