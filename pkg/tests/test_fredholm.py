"""Weighted finite sections: kernel/cokernel counts, borderline decay, SH index.

Expected dimensions are frozen from the case table for the weighted ell-th
difference: below the first forbidden weight the operator is onto with an
ell-dimensional polynomial kernel, above the last it is one-to-one with an
ell-dimensional cokernel, and each crossing trades one kernel direction for
one cokernel direction on the side that crossed.
"""

import numpy as np
import pytest

from stripelab.errors import (
    BorderlineWeight,
    ConfigError,
    NoCleanGap,
    SubspaceMismatch,
)
from stripelab.fredholm import (
    WeightSpec,
    adjoint_operator,
    borderline_range_test,
    discrete_weighted_operator,
    integral_inverse_bound,
    kernel_cokernel_dims,
    polynomial_kernel_check,
    proposition_dims,
    sh_linearization_index_scan,
)


def iso(gamma, p=2.0):
    return WeightSpec(gamma, gamma, p=p)


# ---------------------------------------------------------------- sections


def test_forward_difference_kills_constants():
    op = discrete_weighted_operator("delta", {"ell": 1, "i": 0}, 64, iso(0.0))
    assert op.base.shape == (128, 129)
    res = op.base @ np.ones(op.base.shape[1])
    assert np.max(np.abs(res)) == 0.0


def test_second_difference_kills_affine():
    op = discrete_weighted_operator("delta", {"ell": 2, "i": 1}, 64, iso(0.0))
    assert op.base.shape == (127, 129)
    res = op.base @ op.positions
    assert np.max(np.abs(res)) == 0.0


def test_regularized_kills_constants():
    for ell in (1, 2):
        op = discrete_weighted_operator("regularized", {"ell": ell}, 64, iso(0.0))
        res = op.base @ np.ones(op.base.shape[1])
        scale = np.max(np.abs(op.base))
        assert np.max(np.abs(res)) < 1e-12 * scale


def test_svals_sorted_descending():
    op = discrete_weighted_operator("delta", {"ell": 2, "i": 0}, 64, iso(1.0))
    assert np.all(np.diff(op.svals) <= 0.0)
    assert np.all(np.isfinite(op.conjugated))


def test_weights_stay_finite_at_extremes():
    w = WeightSpec(12.0, -12.0)
    vals = w.values(np.arange(-4096.0, 4097.0, 256.0))
    assert np.all(np.isfinite(vals)) and np.all(vals > 0.0)


def test_borderline_weight_guard():
    with pytest.raises(BorderlineWeight):
        discrete_weighted_operator("delta", {"ell": 1, "i": 0}, 64, iso(0.5))
    op = discrete_weighted_operator(
        "delta", {"ell": 1, "i": 0}, 64, iso(0.5), borderline=True
    )
    assert op.base.shape == (128, 129)


def test_config_guards():
    with pytest.raises(ConfigError):
        discrete_weighted_operator("delta", {"ell": 1, "i": 0}, 32, iso(0.0))
    with pytest.raises(ConfigError):
        discrete_weighted_operator("nosuch", {"ell": 1}, 64, iso(0.0))
    with pytest.raises(ConfigError):
        WeightSpec(0.0, 0.0, p=1.0)
    with pytest.raises(ConfigError):
        discrete_weighted_operator("delta", {"ell": 1, "i": 2}, 64, iso(0.0))


# ------------------------------------------------------------------ counts


def test_forward_difference_dims_bottom():
    op = discrete_weighted_operator("delta", {"ell": 1, "i": 0}, 128, iso(0.0))
    dk, dc, report = kernel_cokernel_dims(op)
    assert (dk, dc) == (1, 0)
    assert report["kernel"]["gap"] > 1e4


def test_forward_difference_dims_top():
    op = discrete_weighted_operator("delta", {"ell": 1, "i": 0}, 128, iso(1.0))
    assert kernel_cokernel_dims(op)[:2] == (0, 1)


def test_mixed_difference_dims_middle():
    op = discrete_weighted_operator("delta", {"ell": 2, "i": 1}, 128, iso(1.0))
    assert kernel_cokernel_dims(op)[:2] == (1, 1)


def test_case_table_full_scan():
    # integer weights sit mid-interval on the p = 2 scale
    for ell in (1, 2, 3):
        for i in range(ell + 1):
            for gamma in range(ell + 1):
                w = iso(float(gamma))
                op = discrete_weighted_operator("delta", {"ell": ell, "i": i}, 64, w)
                dk, dc, _ = kernel_cokernel_dims(op)
                assert (dk, dc) == proposition_dims(ell, w), (ell, i, gamma)
                assert dk - dc == ell - 2 * sum(
                    gamma > m - 0.5 for m in range(1, ell + 1)
                )


def test_regularized_matches_difference_dims():
    for gamma in (0.0, 1.0):
        op = discrete_weighted_operator("regularized", {"ell": 1}, 64, iso(gamma))
        assert kernel_cokernel_dims(op)[:2] == proposition_dims(1, iso(gamma))


def test_gridded_derivative_matches_difference_dims():
    op = discrete_weighted_operator("partialx", {"ell": 2}, 64, iso(1.0))
    assert kernel_cokernel_dims(op)[:2] == (1, 1)


def test_anisotropic_index_steps_by_one():
    # one half-axis pinned above every forbidden value; stepping the other
    # across the scale moves the index by exactly one per crossing
    seen = []
    for gplus in (0.0, 1.0, 2.0):
        w = WeightSpec(6.0, gplus)
        op = discrete_weighted_operator("delta", {"ell": 2, "i": 0}, 64, w)
        dk, dc, _ = kernel_cokernel_dims(op)
        assert (dk, dc) == proposition_dims(2, w)
        seen.append(dk - dc)
    assert seen == [0, -1, -2]


def test_duality_swaps_dims():
    op = discrete_weighted_operator("delta", {"ell": 2, "i": 0}, 64, iso(2.0))
    assert kernel_cokernel_dims(op)[:2] == (0, 2)
    assert kernel_cokernel_dims(adjoint_operator(op))[:2] == (2, 0)


def test_deep_weight_exposes_left_null_vector():
    # far above the forbidden scale the truncated section itself develops a
    # tiny singular value whose left vector is the weighted constant
    op = discrete_weighted_operator("delta", {"ell": 1, "i": 0}, 256, iso(6.0))
    u = op._svd[0][:, -1]
    sigma = op.svals[-1]
    assert sigma < op.svals[0] * 1e-8
    target = op.weights.values(op.row_positions, shift=0.0) ** -1.0
    target /= np.linalg.norm(target)
    assert abs(abs(u @ target) - 1.0) < 1e-3


def test_no_clean_gap_when_demanded_gap_is_absurd():
    op = discrete_weighted_operator("delta", {"ell": 1, "i": 0}, 256, iso(6.0))
    with pytest.raises(NoCleanGap):
        kernel_cokernel_dims(op, gap_factor=1e30)


# ---------------------------------------------------------------- subspaces


def test_kernel_aligns_with_constants():
    op = discrete_weighted_operator("delta", {"ell": 1, "i": 0}, 128, iso(0.0))
    assert polynomial_kernel_check(op, 1) < 1e-6


def test_kernel_aligns_with_affine_span():
    op = discrete_weighted_operator("delta", {"ell": 2, "i": 1}, 128, iso(0.0))
    assert polynomial_kernel_check(op, 2) < 1e-6


def test_empty_expected_kernel_skips():
    op = discrete_weighted_operator("delta", {"ell": 1, "i": 0}, 64, iso(1.0))
    assert polynomial_kernel_check(op, 0) == 0.0


def test_subspace_mismatch_raised():
    op = discrete_weighted_operator("delta", {"ell": 1, "i": 0}, 64, iso(0.0))
    with pytest.raises(SubspaceMismatch):
        polynomial_kernel_check(op, 2)


# ---------------------------------------------------------------- borderline


def test_borderline_ratio_decays():
    rep = borderline_range_test("delta", 1, 2.0, (8, 16, 32, 64))
    assert rep.gamma == 0.5
    assert all(b < a for a, b in zip(rep.ratios, rep.ratios[1:]))
    assert rep.exponent < -0.1


def test_borderline_second_order_decays():
    rep = borderline_range_test("delta", 2, 2.0, (8, 16, 32, 64))
    assert all(b < a for a, b in zip(rep.ratios, rep.ratios[1:]))
    assert rep.exponent < -0.1


def test_off_borderline_stays_bounded_below():
    rep = borderline_range_test("delta", 1, 2.0, (8, 16, 32, 64), gamma=0.4)
    assert min(rep.ratios) > 0.0
    assert rep.ratios[-1] > 0.5 * rep.ratios[0]
    assert rep.exponent > -0.08


def test_single_bump_ratio_finite():
    rep = borderline_range_test("delta", 1, 2.0, (1, 2, 4))
    assert np.isfinite(rep.ratios[0]) and rep.ratios[0] > 0.0


# ------------------------------------------------------------- SH sections


def test_sh_index_scan(sol01, derivs01):
    rows = sh_linearization_index_scan(
        sol01, (0.0, 1.0, 2.0), N=256, h=0.05, derivs=derivs01
    )
    dims = [(r.dim_ker, r.dim_coker) for r in rows]
    assert dims == [(2, 0), (1, 1), (0, 2)]
    assert rows[2].dim_ker - rows[2].dim_coker == -2
    assert rows[2].coker_angle < 1e-4


def test_sh_scan_rejects_half_integer_weight(sol01):
    with pytest.raises(BorderlineWeight):
        sh_linearization_index_scan(sol01, (1.5,), N=64, h=0.05)


# ---------------------------------------------------- continuum inverse bound


def test_integral_inverse_bound():
    rep = integral_inverse_bound(1.3, n_samples=20, seed=101)
    ratios = np.array(rep.ratios)
    assert ratios.shape == (20,)
    assert np.all(np.isfinite(ratios)) and np.all(ratios > 0.0)
    assert rep.c_fit == pytest.approx(np.max(ratios))
    # a single constant covers every sample with room to spare
    assert np.max(ratios) < 20.0 * np.median(ratios)


def test_integral_inverse_bound_guard():
    with pytest.raises(ConfigError):
        integral_inverse_bound(0.3)
