import math

import numpy as np
import pytest

from bmlab.config import default_config
from bmlab.errors import ConfigError, DomainExceeded
from bmlab.experiments import (
    run_correspondence,
    run_kernel_decay,
    run_subprincipal,
    run_theorem1,
    run_theorem2,
    run_tian_zelditch,
)


def test_theorem2_at_time_zero_is_tian_zelditch():
    a = run_theorem2(default_config("theorem2", t=0.0, v=(0.0, 0.0, 1.0), phi0=(-0.05, 0.1)))
    b = run_tian_zelditch(default_config("tian-zelditch"))
    for q in ("fs_error_gauged", "fs_error_ungauged"):
        assert a.values(q) == b.values(q)


def test_zero_time_distance_vanishes():
    table = run_theorem1(default_config("theorem1", t=0.0, v=(0.0, 0.0, 1.0), k_list=(8, 16)))
    assert max(v for _, v in table.values("distance")) == 0.0


def test_constant_velocity_distance_vanishes():
    # v = c: both the Mabuchi geodesic and the Bergman ray only rescale
    table = run_theorem1(default_config("theorem1", v=(0.3,), k_list=(8, 32)))
    assert max(v for _, v in table.values("distance")) <= 1e-12


def test_theorem1_outside_interval():
    with pytest.raises(DomainExceeded, match="theorem1.t"):
        run_theorem1(default_config("theorem1", v=(0.0, 0.0, 1.0), t=2.5))


def test_tian_zelditch_constant_potential_closed_form():
    table = run_tian_zelditch(default_config("tian-zelditch", phi0=(0.2,), k_list=(4, 64)))
    assert max(v for _, v in table.values("closed_form_deviation")) <= 1e-12
    assert table.passed


def test_tian_zelditch_ungauged_error_is_log_k_over_k():
    table = run_tian_zelditch(default_config("tian-zelditch", phi0=(0.0,), k_list=(8, 64)))
    for k, v in table.values("fs_error_ungauged"):
        assert abs(v - abs(math.log((k + 1) / (2 * math.pi))) / k) <= 1e-13


def test_correspondence_trace_constant_near_inverse_area():
    table = run_correspondence(default_config("correspondence"))
    assert abs(table.info["trace_constant"] * 2 * math.pi - 1) <= 1e-3
    assert abs(table.info["classical_trace"] - math.pi / 6) <= 1e-12


def test_correspondence_invariant_pair_commutes():
    table = run_correspondence(default_config("correspondence", v2=(0.0, 0.0, 1.0), k_list=(8, 16, 32)))
    assert table.passed
    assert max(abs(v) for _, v in table.values("commutator_scaled")) <= 1e-12


def test_subprincipal_constants_give_zero():
    table = run_subprincipal(default_config("subprincipal", f=(2.0,), g=(3.0,), v=(1.5,), k_list=(16, 32)))
    assert max(v for _, v in table.values("product_residual")) <= 1e-12
    assert max(v for _, v in table.values("symbol_defect")) <= 1e-8


def test_subprincipal_requires_reference_metric():
    with pytest.raises(ConfigError):
        run_subprincipal(default_config("subprincipal", phi0=(0.0, 0.1)))


def test_kernel_decay_closed_form():
    table = run_kernel_decay(default_config("kernel-decay", k_list=(8, 16)))
    for k, v in table.values("log_kernel"):
        expected = (math.log((k + 1) / (2 * math.pi)) + 0.5 * k * math.log(0.5)) / k
        assert abs(v - expected) <= 1e-13
    for k, v in table.values("log_kernel_diagonal"):
        assert abs(v - math.log((k + 1) / (2 * math.pi)) / k) <= 1e-13


def test_kernel_decay_rejects_coincident_points():
    with pytest.raises(ConfigError, match="x2"):
        run_kernel_decay(default_config("kernel-decay", x2=0.0))


def test_output_is_sorted_by_k_then_quantity():
    table = run_tian_zelditch(default_config("tian-zelditch", k_list=(8, 16, 32), threads=3))
    keys = [(r.k, r.quantity) for r in table.rows]
    assert keys == sorted(keys)
    assert np.all(np.diff([k for k, _ in table.values("fs_error_gauged")]) > 0)
