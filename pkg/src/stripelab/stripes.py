"""Periodic stripe solutions of the stationary 1D Swift-Hohenberg equation.

The profile u_p(xi; k), xi = k x, solves

    -(1 + k^2 d_xi^2)^2 u + mu u - u^3 = 0

on [0, 2pi) in the even (cosine) subspace, which removes the translation
mode exactly. Discretization: cosine Galerkin with the cubic term formed
pointwise on a 4M collocation grid (dealiased for the retained modes).
Parameter derivatives d^m/dk^m u_p up to order 4 come from recursive
implicit differentiation; every solve reuses the same even-subspace
linearization.
"""

from dataclasses import dataclass
from math import factorial

import numpy as np

from .errors import (
    ContinuationBreakdown,
    MaxIterations,
    NoNontrivialStripe,
    OutOfBand,
    SingularLinearization,
    TailBoundExceeded,
)

UPDATE_TOL = 1e-12
MAX_NEWTON = 50
ZERO_BRANCH_TOL = 1e-6
TAIL_RATIO = 1e-10
MODE_CAP = 384
JET_ORDER = 4
K_TRUST_RADIUS = 0.01


def landau_amplitude(mu, k):
    """Leading-order amplitude 2 sqrt(max(mu - (1-k^2)^2, 0)/3)."""
    return 2.0 * np.sqrt(max(mu - (1.0 - k * k) ** 2, 0.0) / 3.0)


def series_eval(coeffs, xi, order=0):
    """Evaluate d^order/dxi^order of sum a_m cos(m xi) at points xi."""
    coeffs = np.asarray(coeffs, dtype=float)
    m = np.arange(coeffs.size)
    xi = np.mod(np.asarray(xi, dtype=float), 2.0 * np.pi)
    ang = np.multiply.outer(xi, m)
    w = coeffs * m**order
    if order % 2 == 0:
        sign = -1.0 if order % 4 == 2 else 1.0
        return sign * (np.cos(ang) @ w)
    sign = -1.0 if order % 4 == 1 else 1.0
    return sign * (np.sin(ang) @ w)


def _quad_grid(n_modes):
    n = 4 * n_modes
    return np.arange(n) * (2.0 * np.pi / n)


def _to_cos_coeffs(values, n_modes):
    """Cosine coefficients 0..n_modes of an even grid function (4M points)."""
    n = values.size
    c = np.fft.rfft(values)
    a = 2.0 * c[: n_modes + 1].real / n
    a[0] *= 0.5
    return a


def _linear_symbol(mu, k, modes):
    return -((1.0 - (k * modes) ** 2) ** 2) + mu


def _mult_operator(values, n_modes, cos_table):
    """Matrix of multiplication by `values` on cosine coefficients."""
    v = values[:, None] * cos_table
    f = np.fft.rfft(v, axis=0)
    a = 2.0 * f[: n_modes + 1].real / values.size
    a[0] *= 0.5
    return a


def _residual_coeffs(coeffs, symbol, cos_table, n_modes):
    u = cos_table @ coeffs
    return symbol * coeffs - _to_cos_coeffs(u**3, n_modes), u


def _newton(coeffs, mu, k, n_modes):
    modes = np.arange(n_modes + 1)
    symbol = _linear_symbol(mu, k, modes)
    xi = _quad_grid(n_modes)
    cos_table = np.cos(np.outer(xi, modes))

    res, u = _residual_coeffs(coeffs, symbol, cos_table, n_modes)
    for _ in range(MAX_NEWTON):
        jac = np.diag(symbol) - 3.0 * _mult_operator(u**2, n_modes, cos_table)
        try:
            delta = np.linalg.solve(jac, -res)
        except np.linalg.LinAlgError as exc:
            raise SingularLinearization(
                "Newton matrix singular", k=k, mu=mu
            ) from exc
        step = 1.0
        norm0 = np.linalg.norm(res)
        for _ in range(30):
            trial = coeffs + step * delta
            res_t, u_t = _residual_coeffs(trial, symbol, cos_table, n_modes)
            if np.linalg.norm(res_t) < norm0:
                break
            step *= 0.5
        else:
            raise NoNontrivialStripe(
                "Newton stalled; parameters likely outside the existence band",
                mu=mu,
                k=k,
                residual=float(norm0),
            )
        coeffs, res, u = trial, res_t, u_t
        if np.max(np.abs(step * delta)) < UPDATE_TOL:
            return coeffs
    raise MaxIterations("Newton did not converge", mu=mu, k=k,
                        residual=float(np.linalg.norm(res)))


def _residual_maxnorm(coeffs, mu, k, n_modes):
    """Collocation residual in max norm on a doubled (8M) grid."""
    xi = np.arange(8 * n_modes) * (2.0 * np.pi / (8 * n_modes))
    modes = np.arange(n_modes + 1)
    symbol = _linear_symbol(mu, k, modes)
    lin = series_eval(symbol * coeffs, xi)
    u = series_eval(coeffs, xi)
    return float(np.max(np.abs(lin - u**3)))


@dataclass(frozen=True)
class StripeSolution:
    mu: float
    k: float
    cos_coeffs: np.ndarray
    n_modes: int
    residual_norm: float


def solve_stripe(mu, k, n_modes=48, tol=1e-10, seed=None, max_modes=MODE_CAP):
    """Newton solve for the nontrivial even periodic stripe at (mu, k)."""
    if mu <= 0 or k <= 0:
        raise ValueError("mu and k must be positive")
    if n_modes < 8:
        raise ValueError("need at least 8 modes")

    amp = landau_amplitude(mu, k)
    if seed is None and amp == 0.0:
        raise NoNontrivialStripe(
            "outside the leading-order existence band", mu=mu, k=k
        )

    m_current = int(n_modes)
    while True:
        coeffs = np.zeros(m_current + 1)
        if seed is None:
            coeffs[1] = amp
        else:
            s = np.asarray(seed, dtype=float)
            n = min(s.size, m_current + 1)
            coeffs[:n] = s[:n]
        coeffs = _newton(coeffs, mu, k, m_current)
        if np.max(np.abs(coeffs)) < ZERO_BRANCH_TOL:
            raise NoNontrivialStripe("converged to the zero branch", mu=mu, k=k)
        tail = max(abs(coeffs[-1]), abs(coeffs[-2])) / np.max(np.abs(coeffs))
        if tail < TAIL_RATIO:
            break
        if 2 * m_current > max_modes:
            raise TailBoundExceeded(
                "spectral tail unresolved at the mode cap",
                n_modes=m_current,
                tail_ratio=float(tail),
            )
        seed = coeffs
        m_current *= 2

    res = _residual_maxnorm(coeffs, mu, k, m_current)
    if res > tol:
        raise MaxIterations(
            "converged update but residual above tolerance",
            residual=res,
            tol=tol,
        )
    return StripeSolution(
        mu=float(mu),
        k=float(k),
        cos_coeffs=coeffs,
        n_modes=m_current,
        residual_norm=res,
    )


def continue_family(mu, k_grid, n_modes=48, tol=1e-10):
    """Solve along an ordered k grid, seeding each point from its neighbor."""
    k_grid = np.atleast_1d(np.asarray(k_grid, dtype=float))
    family = []
    seed = None
    for k in k_grid:
        try:
            sol = solve_stripe(mu, k, n_modes=n_modes, tol=tol, seed=seed)
        except (NoNontrivialStripe, MaxIterations, TailBoundExceeded) as exc:
            raise ContinuationBreakdown(
                "continuation failed",
                failed_k=float(k),
                last_good_k=float(family[-1].k) if family else None,
            ) from exc
        family.append(sol)
        seed = sol.cos_coeffs

    if len(family) > 2:
        diffs = []
        for a, b in zip(family[:-1], family[1:]):
            n = max(a.cos_coeffs.size, b.cos_coeffs.size)
            ca = np.zeros(n)
            cb = np.zeros(n)
            ca[: a.cos_coeffs.size] = a.cos_coeffs
            cb[: b.cos_coeffs.size] = b.cos_coeffs
            diffs.append(np.linalg.norm(cb - ca))
        med = float(np.median(diffs))
        if med > 0 and max(diffs) > 10.0 * med:
            raise ContinuationBreakdown(
                "branch jump detected",
                last_good_k=float(k_grid[int(np.argmax(diffs))]),
            )
    return family


class StripeDerivatives:
    """Wavenumber jets of a stripe solution.

    k_jets[m] holds the cosine coefficients of d^m/dk^m u_p at the base
    wavenumber; evaluation at nearby k uses the degree-4 Taylor expansion,
    guarded by a trust radius. Mixed partials d_xi^a d_k^b feed the
    modulated-profile machinery.
    """

    def __init__(self, sol, k_jets, xi_grid, d_xi, d_k):
        self.sol = sol
        self.k_jets = k_jets
        self.xi_grid = xi_grid
        self.d_xi = d_xi
        self.d_k = d_k

    def partial(self, a, b, xi, dk=0.0, check_radius=True):
        """d_xi^a d_k^b u_p at (xi, k + dk)."""
        if b > JET_ORDER:
            raise ValueError("k-derivative order exceeds stored jets")
        dk = np.asarray(dk, dtype=float)
        if check_radius and np.any(np.abs(dk) > K_TRUST_RADIUS):
            raise OutOfBand(
                "local wavenumber outside the jet trust radius",
                max_offset=float(np.max(np.abs(dk))),
                radius=K_TRUST_RADIUS,
            )
        out = 0.0
        for m in range(JET_ORDER - b + 1):
            term = series_eval(self.k_jets[b + m], xi, order=a)
            out = out + term * dk**m / factorial(m)
        return out

    def up_prime(self, x):
        """x-derivative of the stripe: k d_xi u_p(k x)."""
        x = np.asarray(x, dtype=float)
        return self.sol.k * self.partial(1, 0, self.sol.k * x)

    def up_kstar(self, x):
        """Linearly growing partner x d_xi u_p + d_k u_p at xi = k x."""
        x = np.asarray(x, dtype=float)
        xi = self.sol.k * x
        return x * self.partial(1, 0, xi) + self.partial(0, 1, xi)


def partial_k(sol):
    """Jets d^m/dk^m u_p, m = 1..4, by recursive implicit differentiation."""
    mu, k, M = sol.mu, sol.k, sol.n_modes
    modes = np.arange(M + 1)
    symbol = _linear_symbol(mu, k, modes)
    xi = _quad_grid(M)
    cos_table = np.cos(np.outer(xi, modes))
    u_vals = cos_table @ sol.cos_coeffs

    lin = np.diag(symbol) - 3.0 * _mult_operator(u_vals**2, M, cos_table)
    svals = np.linalg.svd(lin, compute_uv=False)
    if svals[-1] < 1e-10 * svals[0]:
        raise SingularLinearization(
            "even-subspace linearization numerically singular",
            smin=float(svals[-1]),
            smax=float(svals[0]),
        )
    lu = np.linalg.inv(lin)

    # Symbols of the k-derivatives of A(k) = -(1 + k^2 d_xi^2)^2
    a1 = 4.0 * k * modes**2 * (1.0 - (k * modes) ** 2)
    a2 = 4.0 * modes**2 * (1.0 - (k * modes) ** 2) - 8.0 * k**2 * modes**4
    a3 = -24.0 * k * modes**4
    a4 = -24.0 * modes**4

    c0 = sol.cos_coeffs
    u1 = lu @ (-(a1 * c0))
    u1_vals = cos_table @ u1

    rhs2 = -2.0 * a1 * u1 - a2 * c0 + _to_cos_coeffs(6.0 * u_vals * u1_vals**2, M)
    u2 = lu @ rhs2
    u2_vals = cos_table @ u2

    rhs3 = (
        -3.0 * a1 * u2
        - 3.0 * a2 * u1
        - a3 * c0
        + _to_cos_coeffs(18.0 * u_vals * u1_vals * u2_vals + 6.0 * u1_vals**3, M)
    )
    u3 = lu @ rhs3
    u3_vals = cos_table @ u3

    rhs4 = (
        -4.0 * a1 * u3
        - 6.0 * a2 * u2
        - 4.0 * a3 * u1
        - a4 * c0
        + _to_cos_coeffs(
            24.0 * u_vals * u1_vals * u3_vals
            + 18.0 * u_vals * u2_vals**2
            + 36.0 * u1_vals**2 * u2_vals,
            M,
        )
    )
    u4 = lu @ rhs4

    k_jets = np.vstack([c0, u1, u2, u3, u4])
    d_xi = series_eval(c0, xi, order=1)
    d_k = cos_table @ u1
    return StripeDerivatives(sol, k_jets, xi, d_xi, d_k)


def evaluate(sol, derivs, x, order=4, phase=0.0, dk=0.0):
    """x-derivatives (rows 0..order) of u_p(k x - phase; k + dk)."""
    x = np.asarray(x, dtype=float)
    keff = sol.k + dk
    xi = keff * x - phase
    rows = []
    for j in range(order + 1):
        if dk == 0.0:
            rows.append(sol.k**j * series_eval(sol.cos_coeffs, xi, order=j))
        else:
            rows.append(keff**j * derivs.partial(j, 0, xi, dk=dk))
    return np.stack(rows)
