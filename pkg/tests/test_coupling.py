import math

import numpy as np
import pytest

from helpers import (
    SYMMETRIC_PAIR_LOAD,
    build_instance,
    fd_hessian_entry,
    fd_jacobian,
    random_instance,
    symmetric_pair_instance,
)
from loadcouple import (
    LinearizedSystem,
    asymptotic_linearization,
    cell_hessian,
    coefficients,
    evaluate,
    hessian_entry,
    jacobian,
    load_function,
    sinr,
    tangent_linearization,
)

SEED = 31415
JAC_RTOL = 1e-5
HESS_RTOL = 1e-4


def test_coefficient_values_single_pixel_each():
    # two cells, one pixel each; every coefficient is checkable by hand
    gains = np.array([[2e-7, 5e-8], [4e-8, 3e-7]])
    instance = build_instance(gains, demands=[50.0, 20.0], powers=[2.0, 1.0],
                              noise=1e-8, num_resource_units=10, rate_scale=5.0)
    cc = coefficients(instance)
    assert cc.num_cells == 2
    assert list(instance.serving.server_of) == [0, 1]
    # budget per demand: num_resource_units * rate_scale / demand
    assert cc.rate_per_demand[0][0] == 10 * 5.0 / 50.0
    assert cc.rate_per_demand[1][0] == 10 * 5.0 / 20.0
    # interference relative to own received power
    assert cc.rel_interference[0][1, 0] == (1.0 * 4e-8) / (2.0 * 2e-7)
    assert cc.rel_interference[1][0, 0] == (2.0 * 5e-8) / (1.0 * 3e-7)
    assert cc.rel_interference[0][0, 0] == 0.0
    assert cc.rel_interference[1][1, 0] == 0.0
    # noise relative to own received power
    assert cc.rel_noise[0][0] == 1e-8 / (2.0 * 2e-7)
    assert cc.rel_noise[1][0] == 1e-8 / (1.0 * 3e-7)


def test_coefficients_skip_zero_demand_pixels():
    gains = np.array([[1e-7, 2e-7, 5e-8], [4e-8, 3e-8, 1e-7]])
    instance = build_instance(gains, demands=[10.0, 0.0, 5.0], powers=[1.0, 1.0], noise=1e-9)
    cc = coefficients(instance)
    assert list(cc.pixel_idx[0]) == [0]  # pixel 1 dropped despite being served
    assert list(cc.pixel_idx[1]) == [2]


def test_sinr_matches_direct_formula():
    rng = np.random.default_rng(SEED)
    instance = random_instance(rng, 4, 5)
    cc = coefficients(instance)
    powers = instance.powers()
    rho = rng.uniform(0.0, 1.0, 4)
    for i in range(4):
        for j in instance.serving.areas[i]:
            interference = sum(
                powers[k] * instance.gains[k, j] * rho[k] for k in range(4) if k != i
            )
            expected = powers[i] * instance.gains[i, j] / (interference + instance.noise_power)
            np.testing.assert_allclose(sinr(cc, i, j, rho), expected, rtol=1e-12)


def test_sinr_at_zero_load_is_inverse_rel_noise():
    rng = np.random.default_rng(SEED + 1)
    instance = random_instance(rng, 3, 4)
    cc = coefficients(instance)
    for i in range(3):
        for pos, j in enumerate(cc.pixel_idx[i]):
            value = sinr(cc, i, int(j), np.zeros(3))
            np.testing.assert_allclose(value, 1.0 / cc.rel_noise[i][pos], rtol=1e-14)


def test_sinr_rejects_pixel_not_in_area():
    rng = np.random.default_rng(SEED + 2)
    instance = random_instance(rng, 3, 4)
    cc = coefficients(instance)
    j = instance.serving.areas[0][0]
    with pytest.raises(ValueError):
        sinr(cc, 1, j, np.zeros(3))


def test_load_symmetric_pair_matches_high_precision():
    instance = symmetric_pair_instance()
    cc = coefficients(instance)
    value = load_function(cc, np.array([1.0, 1.0]))
    # both components equal ln(2) / ln(1 + 1/(0.5 + 0.1)), frozen at 50 digits
    np.testing.assert_allclose(value, SYMMETRIC_PAIR_LOAD, rtol=1e-15)
    assert value[0] == value[1]


def test_load_single_cell_is_constant():
    gains = np.array([[1e-7, 3e-8]])
    instance = build_instance(gains, demands=[5.0, 2.0], powers=[1.0], noise=1e-9,
                              num_resource_units=4, rate_scale=2.0)
    cc = coefficients(instance)
    expected = 0.0
    for j in range(2):
        a = 4 * 2.0 / instance.pixels[j].demand_bits
        c = 1e-9 / gains[0, j]
        expected += math.log(2) / (a * math.log1p(1.0 / c))
    for rho in ([0.0], [0.5], [123.0]):
        np.testing.assert_allclose(load_function(cc, np.array(rho)), expected, rtol=1e-14)


def test_load_zero_demand_cell_is_zero():
    gains = np.array([[1e-7, 2e-8], [3e-8, 9e-8]])
    instance = build_instance(gains, demands=[10.0, 0.0], powers=[1.0, 1.0], noise=1e-9)
    cc = coefficients(instance)
    out = load_function(cc, np.array([0.7, 0.7]))
    assert out[1] == 0.0
    assert out[0] > 0.0


def test_load_strictly_increasing_in_other_cells():
    rng = np.random.default_rng(SEED + 3)
    for _ in range(10):
        instance = random_instance(rng, int(rng.integers(2, 6)), 4)
        n = instance.num_cells
        cc = coefficients(instance)
        lo = rng.uniform(0.0, 0.5, n)
        hi = lo + rng.uniform(0.05, 0.5, n)
        f_lo, f_hi = load_function(cc, lo), load_function(cc, hi)
        assert np.all(f_hi > f_lo)


def test_jacobian_matches_central_differences():
    rng = np.random.default_rng(SEED + 4)
    for _ in range(10):
        instance = random_instance(rng, int(rng.integers(2, 7)), int(rng.integers(2, 8)))
        cc = coefficients(instance)
        rho = rng.uniform(0.05, 1.0, instance.num_cells)
        np.testing.assert_allclose(
            jacobian(cc, rho), fd_jacobian(cc, rho), rtol=JAC_RTOL, atol=1e-11
        )


def test_jacobian_diagonal_zero_offdiagonal_positive():
    rng = np.random.default_rng(SEED + 5)
    instance = random_instance(rng, 5, 6)
    jac = jacobian(coefficients(instance), rng.uniform(0.0, 1.0, 5))
    assert np.all(np.diag(jac) == 0.0)
    off = jac[~np.eye(5, dtype=bool)]
    assert np.all(off > 0.0)


def test_jacobian_decreases_with_load():
    # each entry shrinks as interference rises: the map flattens out
    rng = np.random.default_rng(SEED + 6)
    instance = random_instance(rng, 4, 5)
    cc = coefficients(instance)
    j_low = jacobian(cc, np.full(4, 0.1))
    j_high = jacobian(cc, np.full(4, 0.9))
    off = ~np.eye(4, dtype=bool)
    assert np.all(j_high[off] < j_low[off])


def test_jacobian_far_out_matches_asymptotic_slope():
    rng = np.random.default_rng(SEED + 7)
    for _ in range(5):
        instance = random_instance(rng, int(rng.integers(2, 6)), 4)
        n = instance.num_cells
        cc = coefficients(instance)
        slope = asymptotic_linearization(cc).slope
        jac = jacobian(cc, np.full(n, 1e6))
        off = ~np.eye(n, dtype=bool)
        np.testing.assert_allclose(jac[off], slope[off], rtol=1e-4)


def test_jacobian_dominates_asymptotic_slope():
    # the map is concave and increasing, so its slope sits above the limit slope
    rng = np.random.default_rng(SEED + 8)
    instance = random_instance(rng, 4, 6)
    cc = coefficients(instance)
    slope = asymptotic_linearization(cc).slope
    for rho_level in (0.0, 0.4, 2.0):
        jac = jacobian(cc, np.full(4, rho_level))
        off = ~np.eye(4, dtype=bool)
        assert np.all(jac[off] >= slope[off])


def test_hessian_entry_matches_second_differences():
    rng = np.random.default_rng(SEED + 9)
    for _ in range(5):
        n = int(rng.integers(3, 6))
        instance = random_instance(rng, n, 4)
        cc = coefficients(instance)
        rho = rng.uniform(0.2, 0.8, n)
        i = int(rng.integers(0, n))
        others = [k for k in range(n) if k != i]
        k = others[int(rng.integers(0, len(others)))]
        h = others[int(rng.integers(0, len(others)))]
        np.testing.assert_allclose(
            hessian_entry(cc, i, k, h, rho),
            fd_hessian_entry(cc, i, k, h, rho),
            rtol=HESS_RTOL, atol=1e-9,
        )


def test_hessian_entries_negative_and_own_axis_zero():
    rng = np.random.default_rng(SEED + 10)
    instance = random_instance(rng, 4, 5)
    cc = coefficients(instance)
    for _ in range(25):
        rho = rng.uniform(0.0, 1.5, 4)
        for i in range(4):
            for k in range(4):
                for h in range(4):
                    value = hessian_entry(cc, i, k, h, rho)
                    if k == i or h == i:
                        assert value == 0.0
                    else:
                        assert value < 0.0


def test_cell_hessian_matches_entries_and_is_symmetric():
    rng = np.random.default_rng(SEED + 11)
    instance = random_instance(rng, 5, 4)
    cc = coefficients(instance)
    rho = rng.uniform(0.1, 1.0, 5)
    for i in range(5):
        others = [k for k in range(5) if k != i]
        block = cell_hessian(cc, i, rho)
        assert block.shape == (4, 4)
        np.testing.assert_allclose(block, block.T, rtol=1e-13)
        for r, k in enumerate(others):
            for c, h in enumerate(others):
                np.testing.assert_allclose(
                    block[r, c], hessian_entry(cc, i, k, h, rho), rtol=1e-13
                )


def test_cell_hessian_negative_definite():
    rng = np.random.default_rng(SEED + 12)
    for _ in range(5):
        n = int(rng.integers(2, 7))
        instance = random_instance(rng, n, 5)
        cc = coefficients(instance)
        for _ in range(5):
            rho = rng.uniform(0.0, 2.0, n)
            for i in range(n):
                eigs = np.linalg.eigvalsh(cell_hessian(cc, i, rho))
                assert np.max(eigs) < 0.0


def test_midpoint_concavity():
    rng = np.random.default_rng(SEED + 13)
    instance = random_instance(rng, 4, 6)
    cc = coefficients(instance)
    for _ in range(200):
        x = rng.uniform(0.0, 2.0, 4)
        y = rng.uniform(0.0, 2.0, 4)
        mid = load_function(cc, 0.5 * (x + y))
        avg = 0.5 * (load_function(cc, x) + load_function(cc, y))
        assert np.all(mid >= avg - 1e-12)


def test_asymptotic_linearization_values():
    # single pixel per cell: slope entries are ln(2) * b / a exactly
    gains = np.array([[2e-7, 5e-8], [4e-8, 3e-7]])
    instance = build_instance(gains, demands=[50.0, 20.0], powers=[2.0, 1.0],
                              noise=1e-8, num_resource_units=10, rate_scale=5.0)
    cc = coefficients(instance)
    system = asymptotic_linearization(cc)
    assert system.kind == "asymptotic"
    assert np.all(system.anchor == 0.0)
    b_01 = (1.0 * 4e-8) / (2.0 * 2e-7)
    b_10 = (2.0 * 5e-8) / (1.0 * 3e-7)
    np.testing.assert_allclose(system.slope[0, 1], math.log(2) * b_01 / 1.0, rtol=1e-14)
    np.testing.assert_allclose(system.slope[1, 0], math.log(2) * b_10 / 2.5, rtol=1e-14)
    np.testing.assert_allclose(system.offset, load_function(cc, np.zeros(2)), rtol=0)


def test_linearizations_bracket_the_map():
    rng = np.random.default_rng(SEED + 14)
    for _ in range(5):
        n = int(rng.integers(2, 6))
        instance = random_instance(rng, n, 4)
        cc = coefficients(instance)
        below = asymptotic_linearization(cc)
        anchor = rng.uniform(0.1, 1.0, n)
        above = tangent_linearization(cc, anchor)
        assert above.kind == "tangent"
        for _ in range(50):
            rho = rng.uniform(0.0, 2.0, n)
            f = load_function(cc, rho)
            scale = 1.0 + np.abs(f)
            assert np.all(evaluate(below, rho) <= f + 1e-12 * scale)
            assert np.all(evaluate(above, rho) >= f - 1e-12 * scale)


def test_tangent_is_exact_at_anchor():
    rng = np.random.default_rng(SEED + 15)
    instance = random_instance(rng, 4, 5)
    cc = coefficients(instance)
    anchor = rng.uniform(0.1, 1.0, 4)
    system = tangent_linearization(cc, anchor)
    assert np.array_equal(evaluate(system, anchor), load_function(cc, anchor))


def test_evaluate_hand_case():
    system = LinearizedSystem(
        slope=np.array([[0.0, 0.5], [0.25, 0.0]]),
        anchor=np.array([1.0, 2.0]),
        offset=np.array([3.0, 4.0]),
        kind="tangent",
    )
    np.testing.assert_allclose(evaluate(system, np.array([5.0, 6.0])), [5.0, 5.0], rtol=0)


def test_empty_area_gives_zero_row_and_offset():
    # cell 2 loses both pixels to cell 1: its load is identically zero
    gains = np.array([[1e-7, 9e-8], [1e-8, 2e-8]])
    instance = build_instance(gains, demands=[5.0, 5.0], powers=[1.0, 1.0], noise=1e-9)
    assert list(instance.serving.server_of) == [0, 0]
    cc = coefficients(instance)
    system = asymptotic_linearization(cc)
    assert np.all(system.slope[1, :] == 0.0)
    assert system.offset[1] == 0.0
    assert system.slope[0, 1] > 0.0
