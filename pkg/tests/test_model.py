import dataclasses

import numpy as np
import pytest

from nomamec.model import (
    Allocation,
    InfeasibleInstanceError,
    NomaGroup,
    ProblemInstance,
    min_offload_bits,
    validate_instance,
)

from conftest import small_instance, user


def test_min_offload_boundary_is_zero():
    assert min_offload_bits(user(R=1e5, C=1000, f=1e9), 0.1) == 0.0


def test_min_offload_arithmetic():
    assert min_offload_bits(user(R=5e5, C=1500, f=1e9), 0.1) == pytest.approx((7.5e8 - 1e8) / 1500, rel=1e-15)
    assert min_offload_bits(user(R=5e5, C=1500, f=1e9), 0.1) == pytest.approx(433333.33, abs=0.01)


def test_min_offload_zero_workload():
    assert min_offload_bits(user(R=0.0), 0.1) == 0.0


def test_min_offload_never_exceeds_data():
    assert min_offload_bits(user(R=100.0, C=1e6, f=1.0), 0.1) <= 100.0


def test_group_coefficients():
    g = NomaGroup.from_users(user(h=2e-10), user(h=1e-10), 4e-21)
    assert g.a1 == pytest.approx(2e-11)
    assert g.a2 == pytest.approx(4e-11)
    assert not g.degenerate


def test_ordering_violation_names_group():
    inst = ProblemInstance.build([(user(h=2.0), user(h=1.0)), (user(h=1.0), user(h=3.0))], 1e7, 1e-20, 0.1, 6e9)
    report = validate_instance(inst)
    assert not report.ok
    (diag,) = [d for d in report.errors if d.code == "ordering"]
    assert diag.group == 1
    assert "ordering violated, group 1" in str(diag)


def test_infeasible_cloud_budget():
    heavy = user(R=5e5, C=1500, f=1e9)
    inst = ProblemInstance.build([(heavy, heavy)], 1e7, 1e-20, 0.1, 1e9)
    report = validate_instance(inst)
    assert any("infeasible: mandatory offload exceeds cloud capacity" in str(d) for d in report.errors)
    with pytest.raises(InfeasibleInstanceError):
        report.raise_if_failed()


def test_degenerate_group_is_a_warning():
    inst = ProblemInstance.build([(user(h=1.0), user(h=1.0))], 1e7, 1e-20, 0.1, 6e9)
    report = validate_instance(inst)
    assert report.ok
    assert [d.code for d in report.warnings] == ["degenerate"]


def test_stale_coefficient_detected():
    inst = ProblemInstance.build([(user(h=2.0), user(h=1.0))], 1e7, 1e-20, 0.1, 6e9)
    g = dataclasses.replace(inst.groups[0], a1=inst.groups[0].a1 * 1.5)
    bad = dataclasses.replace(inst, groups=(g,))
    assert any(d.code == "stale_coefficient" for d in validate_instance(bad).errors)


def test_bad_user_field():
    inst = ProblemInstance.build([(user(h=2.0), user(h=1.0, C=0.0))], 1e7, 1e-20, 0.1, 6e9)
    errs = validate_instance(inst).errors
    assert [(d.code, d.group, d.user) for d in errs] == [("bad_cycles", 0, 2)]


@pytest.mark.parametrize("seed", range(10))
def test_sampled_instances_at_default_capacity_validate(seed):
    assert validate_instance(small_instance(seed, n_users=30)).ok


def test_allocation_shapes():
    a = Allocation([0.1, 0.2], [1, 2, 3, 4])
    assert a.t.shape == (2,) and a.d.shape == (2, 2)
    with pytest.raises(ValueError):
        Allocation([0.1], np.zeros((2, 2)))


def test_with_changes_recomputes_mandatory_bits():
    inst = small_instance(2, n_users=6)
    looser = inst.with_changes(deadline=0.2)
    assert np.all(looser.arrays.D <= inst.arrays.D)
    assert looser.groups is inst.groups
