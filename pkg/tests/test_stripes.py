"""Oracle tests for the periodic stripe solver.

Independent oracles: the closed-form Landau amplitude, a brute-force
two-mode Galerkin solve via scipy.optimize.fsolve, and centered finite
differences across independently re-solved family members.
"""

import numpy as np
import pytest
from scipy.optimize import fsolve

from stripelab.errors import (
    ContinuationBreakdown,
    NoNontrivialStripe,
    OutOfBand,
    TailBoundExceeded,
)
from stripelab.stripes import (
    continue_family,
    evaluate,
    landau_amplitude,
    partial_k,
    series_eval,
    solve_stripe,
)

# 2*sqrt(0.1/3), frozen from the closed form
LANDAU_AMP_01 = 0.36514837167011076


def stripe_residual_values(sol, xi):
    """Stationary residual evaluated from the series, test-local code path."""
    m = np.arange(sol.n_modes + 1)
    symbol = -((1.0 - (sol.k * m) ** 2) ** 2) + sol.mu
    lin = series_eval(symbol * sol.cos_coeffs, xi)
    u = series_eval(sol.cos_coeffs, xi)
    return lin - u**3


def two_mode_oracle(mu, k):
    """Brute-force Galerkin solve on span{cos, cos 3.}, independent path."""
    xi = np.linspace(0.0, 2.0 * np.pi, 4097)[:-1]

    def projections(a):
        u = a[0] * np.cos(xi) + a[1] * np.cos(3.0 * xi)
        lin = (
            (-((1.0 - k**2) ** 2) + mu) * a[0] * np.cos(xi)
            + (-((1.0 - 9.0 * k**2) ** 2) + mu) * a[1] * np.cos(3.0 * xi)
        )
        r = lin - u**3
        return [np.mean(r * np.cos(xi)), np.mean(r * np.cos(3.0 * xi))]

    seed = [2.0 * np.sqrt((mu - (1.0 - k**2) ** 2) / 3.0), 0.0]
    return fsolve(projections, seed)


def test_amplitude_matches_frozen_landau_value(sol01, fine_xi):
    u = series_eval(sol01.cos_coeffs, fine_xi)
    amp = np.max(np.abs(u))
    assert abs(amp - LANDAU_AMP_01) / LANDAU_AMP_01 < 0.05


def test_residual_small_on_doubled_grid(sol01):
    xi = np.linspace(0.0, 2.0 * np.pi, 8 * sol01.n_modes + 1)[:-1]
    assert np.max(np.abs(stripe_residual_values(sol01, xi))) < 1e-9
    assert sol01.residual_norm < 1e-9


def test_two_mode_galerkin_cross_check(sol01):
    a1_oracle, a3_oracle = two_mode_oracle(0.1, 1.0)
    assert abs(sol01.cos_coeffs[1] - a1_oracle) < 5e-3
    assert abs(sol01.cos_coeffs[3] - a3_oracle) < 5e-3


def test_amplitude_law_improves_as_mu_decreases():
    errs = []
    for mu in (0.1, 0.05, 0.025):
        sol = solve_stripe(mu, 1.0, n_modes=32)
        xi = np.linspace(0.0, 2.0 * np.pi, 1025)[:-1]
        amp = np.max(np.abs(series_eval(sol.cos_coeffs, xi)))
        errs.append(abs(amp - landau_amplitude(mu, 1.0)) / landau_amplitude(mu, 1.0))
    assert errs[0] < 0.08
    assert errs[2] < errs[0]


def test_even_harmonics_absent(sol01):
    # the branch through A cos has the u(. + pi) = -u symmetry
    assert np.max(np.abs(sol01.cos_coeffs[0::2])) < 1e-11


def test_outside_existence_band_raises():
    with pytest.raises(NoNontrivialStripe):
        solve_stripe(0.1, 1.35, n_modes=32)


def test_zero_seed_lands_on_zero_branch():
    with pytest.raises(NoNontrivialStripe):
        solve_stripe(0.1, 1.0, n_modes=32, seed=np.zeros(33))


def test_tail_auto_doubling():
    sol = solve_stripe(0.3, 1.0, n_modes=8)
    tail = max(abs(sol.cos_coeffs[-1]), abs(sol.cos_coeffs[-2]))
    assert tail / np.max(np.abs(sol.cos_coeffs)) < 1e-10
    assert sol.n_modes > 8


def test_tail_cap_exceeded():
    with pytest.raises(TailBoundExceeded):
        solve_stripe(0.3, 1.0, n_modes=8, max_modes=8)


def test_continue_family_amplitude_peaks_at_band_center():
    k_grid = np.linspace(0.9, 1.1, 21)
    fam = continue_family(0.2, k_grid)
    assert len(fam) == 21
    amps = [np.max(np.abs(s.cos_coeffs)) for s in fam]
    assert 8 <= int(np.argmax(amps)) <= 12


def test_continue_family_single_point_matches_solve():
    fam = continue_family(0.1, [1.0])
    sol = solve_stripe(0.1, 1.0)
    assert np.allclose(fam[0].cos_coeffs, sol.cos_coeffs, atol=1e-12)


def test_continuation_breaks_at_existence_boundary():
    # band at mu=0.1: (1-k^2)^2 < 0.1, k_max ~ 1.147
    with pytest.raises(ContinuationBreakdown) as exc:
        continue_family(0.1, np.linspace(1.0, 1.25, 26))
    assert exc.value.diagnostics["last_good_k"] > 1.0


def test_partial_k_defining_equation_residual(sol01, derivs01, fine_xi):
    # [-(1+k^2 d^2)^2 + mu - 3u^2] d_k - 4k m^2 (1-k^2m^2)-type forcing,
    # re-evaluated from the series by test-local code
    mu, k = sol01.mu, sol01.k
    m = np.arange(sol01.n_modes + 1)
    symbol = -((1.0 - (k * m) ** 2) ** 2) + mu
    dk_coeffs = derivs01.k_jets[1]
    lin = series_eval(symbol * dk_coeffs, fine_xi)
    u = series_eval(sol01.cos_coeffs, fine_xi)
    q = series_eval(dk_coeffs, fine_xi)
    lhs = lin - 3.0 * u**2 * q
    rhs = series_eval(-4.0 * k * m**2 * (1.0 - (k * m) ** 2) * sol01.cos_coeffs, fine_xi)
    assert np.max(np.abs(lhs - rhs)) < 1e-9


def test_partial_k_matches_centered_differences():
    h = 1e-3
    sol = solve_stripe(0.1, 1.0, n_modes=32)
    d = partial_k(sol)
    up = solve_stripe(0.1, 1.0 + h, n_modes=32)
    dn = solve_stripe(0.1, 1.0 - h, n_modes=32)
    fd = (up.cos_coeffs - dn.cos_coeffs) / (2.0 * h)
    assert np.max(np.abs(fd - d.k_jets[1])) < 1e-4


def test_second_jet_matches_centered_differences():
    h = 5e-3
    sol = solve_stripe(0.1, 1.0, n_modes=32)
    d = partial_k(sol)
    up = solve_stripe(0.1, 1.0 + h, n_modes=32)
    dn = solve_stripe(0.1, 1.0 - h, n_modes=32)
    fd2 = (up.cos_coeffs - 2.0 * sol.cos_coeffs + dn.cos_coeffs) / h**2
    scale = np.max(np.abs(d.k_jets[2]))
    assert np.max(np.abs(fd2 - d.k_jets[2])) / scale < 1e-2


def test_higher_jets_satisfy_their_equations(sol01, derivs01, fine_xi):
    """Each jet order m solves L u_m = RHS_m; re-derive RHS_m test-side."""
    mu, k = sol01.mu, sol01.k
    modes = np.arange(sol01.n_modes + 1)
    symbol = -((1.0 - (k * modes) ** 2) ** 2) + mu
    A1 = 4.0 * k * modes**2 * (1.0 - (k * modes) ** 2)
    A2 = 4.0 * modes**2 * (1.0 - (k * modes) ** 2) - 8.0 * k**2 * modes**4
    A3 = -24.0 * k * modes**4
    A4 = -24.0 * modes**4

    J = derivs01.k_jets
    vals = [series_eval(J[m], fine_xi) for m in range(5)]
    u, u1, u2, u3, _ = vals

    def lhs(m):
        return series_eval(symbol * J[m], fine_xi) - 3.0 * u**2 * vals[m]

    rhs2 = (
        series_eval(-2.0 * A1 * J[1] - A2 * J[0], fine_xi) + 6.0 * u * u1**2
    )
    rhs3 = (
        series_eval(-3.0 * A1 * J[2] - 3.0 * A2 * J[1] - A3 * J[0], fine_xi)
        + 18.0 * u * u1 * u2
        + 6.0 * u1**3
    )
    rhs4 = (
        series_eval(
            -4.0 * A1 * J[3] - 6.0 * A2 * J[2] - 4.0 * A3 * J[1] - A4 * J[0], fine_xi
        )
        + 24.0 * u * u1 * u3
        + 18.0 * u * u2**2
        + 36.0 * u1**2 * u2
    )
    for m, rhs in ((2, rhs2), (3, rhs3), (4, rhs4)):
        scale = max(1.0, np.max(np.abs(rhs)))
        assert np.max(np.abs(lhs(m) - rhs)) / scale < 1e-8


def test_taylor_in_k_matches_fresh_solve(sol01, derivs01, fine_xi):
    dk = 0.005
    direct = solve_stripe(0.1, 1.0 + dk, n_modes=32)
    taylor = derivs01.partial(0, 0, fine_xi, dk=dk)
    exact = series_eval(direct.cos_coeffs, fine_xi)
    assert np.max(np.abs(taylor - exact)) < 1e-8


def test_partial_trust_radius(derivs01):
    with pytest.raises(OutOfBand):
        derivs01.partial(0, 0, np.array([0.0]), dk=0.02)


def test_symmetries(sol01, derivs01):
    xi = np.linspace(0.0, np.pi, 101)
    assert np.allclose(
        series_eval(sol01.cos_coeffs, xi, order=1),
        -series_eval(sol01.cos_coeffs, -xi, order=1),
        atol=1e-12,
    )
    assert np.allclose(
        series_eval(derivs01.k_jets[1], xi),
        series_eval(derivs01.k_jets[1], -xi),
        atol=1e-12,
    )


def test_evaluate_periodicity_and_oddness(sol01, derivs01):
    x = np.array([0.3, 1.7, -2.2])
    a = evaluate(sol01, derivs01, x)
    b = evaluate(sol01, derivs01, x + 2.0 * np.pi / sol01.k)
    assert np.max(np.abs(a - b)) < 1e-13
    assert abs(series_eval(sol01.cos_coeffs, np.array([0.0]), order=1)[0]) < 1e-14


def test_evaluate_fourth_derivative_against_fd(sol01, derivs01):
    x = np.linspace(-1.0, 1.0, 41)
    h = 1e-2
    vals = evaluate(sol01, derivs01, x)
    u4 = vals[4]
    stencil = (
        evaluate(sol01, derivs01, x - 2 * h)[0]
        - 4.0 * evaluate(sol01, derivs01, x - h)[0]
        + 6.0 * vals[0]
        - 4.0 * evaluate(sol01, derivs01, x + h)[0]
        + evaluate(sol01, derivs01, x + 2 * h)[0]
    ) / h**4
    assert np.max(np.abs(u4 - stencil)) / np.max(np.abs(u4)) < 1e-2


def test_up_prime_and_up_kstar_definitions(sol01, derivs01):
    x = np.linspace(-2.0, 2.0, 17)
    xi = sol01.k * x
    want_prime = sol01.k * series_eval(sol01.cos_coeffs, xi, order=1)
    assert np.allclose(derivs01.up_prime(x), want_prime, atol=1e-13)
    want_kstar = x * series_eval(sol01.cos_coeffs, xi, order=1) + series_eval(
        derivs01.k_jets[1], xi
    )
    assert np.allclose(derivs01.up_kstar(x), want_kstar, atol=1e-13)
