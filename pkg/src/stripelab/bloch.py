"""Bloch dispersion of the stripe linearization on one periodic cell.

The operator -(1 + (d_x + i sigma)^2)^2 + mu - 3 u_p^2 acts on 2pi/k
periodic functions; in the basis e^{i n k x} the derivative part is
diagonal with symbol -(1 - (n k + sigma)^2)^2 and the potential is a
Toeplitz matrix built from the Fourier coefficients of u_p^2. The neutral
eigenvalue branch lambda(sigma) through zero gives the phase diffusion
coefficient lambda2 two ways: a quadratic fit of the branch and the jet
projection formula; a third route differences the family action integral.
"""

from dataclasses import dataclass

import numpy as np

from .errors import BranchCrossing, HypothesisViolated
from .stripes import series_eval, solve_stripe

BRANCH_CLUSTER_GAP = 1e-8


def _potential_coeffs(sol, n_four):
    """Exponential coefficients of u_p^2 on a window |j| <= 2 n_four."""
    m2 = 2 * sol.n_modes
    grid = np.arange(4 * sol.n_modes) * (2.0 * np.pi / (4 * sol.n_modes))
    u = series_eval(sol.cos_coeffs, grid)
    f = np.fft.rfft(u**2)
    b = 2.0 * f[: m2 + 1].real / grid.size
    b[0] *= 0.5
    chat = np.zeros(4 * n_four + 1)
    top = min(m2, 2 * n_four)
    chat[2 * n_four] = b[0]
    for j in range(1, top + 1):
        chat[2 * n_four + j] = 0.5 * b[j]
        chat[2 * n_four - j] = 0.5 * b[j]
    return chat


def _default_window(sol):
    # eigenvalue precision floors at eps * max|symbol| ~ eps * n_four^4, while
    # the stripe harmonics decay so fast that truncation error is negligible
    # already at half the solve modes; keep the window modest on purpose
    return max(16, sol.n_modes // 2)


def assemble_bloch(sol, sigma, n_four=None):
    """Dense Bloch matrix in the basis e^{i n k x}, n = -n_four..n_four."""
    if n_four is None:
        n_four = _default_window(sol)
    n = np.arange(-n_four, n_four + 1)
    sym = -((1.0 - (n * sol.k + sigma) ** 2) ** 2) + sol.mu
    chat = _potential_coeffs(sol, n_four)
    idx = np.subtract.outer(n, n) + 2 * n_four
    mat = np.diag(sym).astype(complex) - 3.0 * chat[idx]
    return mat


@dataclass
class BlochData:
    sigma_grid: np.ndarray
    branch: np.ndarray
    lambda2_fit: float
    lambda2_jet: float
    lambda1_fit: float
    e0: np.ndarray
    e1: np.ndarray
    stable: bool
    gap0: float
    min_offzero: float
    other_max: float


def _track_branch(sol, sigma_grid):
    """Follow the eigenvalue branch from the zero mode by vector overlap.

    Eigenvalues within BRANCH_CLUSTER_GAP of the followed one count as a
    single cluster (the even/odd Fourier sublattices of the stripe cross
    exactly at half the cell wavenumber); the previous eigenvector is
    projected into the cluster. Losing most of the vector to eigenvalues
    outside the cluster means the continuation is ambiguous.
    """
    branch = np.empty(sigma_grid.size)
    min_offzero = np.inf
    other_max = -np.inf
    v_prev = None
    for i, sigma in enumerate(sigma_grid):
        mat = assemble_bloch(sol, sigma)
        lam, vec = np.linalg.eigh(mat)
        if i == 0:
            j = int(np.argmin(np.abs(lam)))
            v_prev = vec[:, j]
        else:
            ov = np.abs(vec.conj().T @ v_prev)
            j = int(np.argmax(ov))
            cluster = np.abs(lam - lam[j]) <= BRANCH_CLUSTER_GAP * (1.0 + abs(lam[j]))
            amps = vec[:, cluster].conj().T @ v_prev
            total = np.linalg.norm(amps)
            if total < 0.75:
                raise BranchCrossing(
                    "eigenvector continuation ambiguous",
                    sigma=float(sigma),
                    captured=float(total),
                    gap=float(np.min(np.abs(np.delete(lam, j) - lam[j]))),
                )
            v_prev = (vec[:, cluster] @ amps) / total
        branch[i] = lam[j]
        others = np.delete(lam, j)
        if i > 0:
            min_offzero = min(min_offzero, float(np.min(np.abs(lam))))
        other_max = max(other_max, float(np.max(others)))
    return branch, min_offzero, other_max


def lambda2_from_jet(sol, derivs, n_grid=1024):
    """Phase diffusion coefficient by projecting the sigma^2 jet equation."""
    k = sol.k
    period = 2.0 * np.pi / k
    x = np.arange(n_grid) * (period / n_grid)
    xi = k * x

    c0 = sol.cos_coeffs
    c1 = derivs.k_jets[1]
    e0 = k * series_eval(c0, xi, order=1)
    e0_xx = k**3 * series_eval(c0, xi, order=3)
    e1 = 1j * k * series_eval(c1, xi)
    e1_x = 1j * k**2 * series_eval(c1, xi, order=1)
    e1_xxx = 1j * k**4 * series_eval(c1, xi, order=3)

    l1_e1 = -4j * (e1_x + e1_xxx)
    l2_e0 = 2.0 * e0 + 6.0 * e0_xx
    num = np.mean((l1_e1 + l2_e0) * np.conj(e0)) * period
    den = np.mean(e0 * np.conj(e0)) * period
    lam2 = num / den
    assert abs(lam2.imag) < 1e-10
    return float(lam2.real)


def lambda2_from_family(mu, k, h=2e-3, n_modes=48):
    """Cross-check route: centered k-difference of the action integral.

    J(k) = int_0^{2pi} [k^3 u_xixi^2 - k u_xi^2] dxi over the family, and
    lambda2 ||u_p'||^2 = -2k J'(k); equivalent to the jet formula by
    integration by parts against the implicit k-derivative equation.
    """

    def action(sol):
        m = np.arange(sol.cos_coeffs.size)
        a2 = sol.cos_coeffs**2
        return np.pi * (sol.k**3 * np.sum(m**4 * a2) - sol.k * np.sum(m**2 * a2))

    sol_m = solve_stripe(mu, k - h, n_modes=n_modes)
    sol_0 = solve_stripe(mu, k, n_modes=n_modes)
    sol_p = solve_stripe(mu, k + h, n_modes=n_modes)
    jprime = (action(sol_p) - action(sol_m)) / (2.0 * h)
    m = np.arange(sol_0.cos_coeffs.size)
    e0_sq = np.pi * k * np.sum(m**2 * sol_0.cos_coeffs**2)
    return float(-2.0 * k * jprime / e0_sq)


def _fit_lambda2(sol, sigma_fit):
    """Weighted LSQ of lambda(sigma) against even powers of sigma.

    The branch is even in sigma, so the expansion runs in sigma^2; the
    sigma^-4 weights keep the small-sigma points from being swamped by
    the quartic tail of the window.
    """
    lam_vals = np.empty(sigma_fit.size)
    for i, sigma in enumerate(sigma_fit):
        lam = np.linalg.eigvalsh(assemble_bloch(sol, sigma))
        lam_vals[i] = lam[np.argmin(np.abs(lam))]
    w = sigma_fit**-4
    design = np.column_stack([sigma_fit**2, sigma_fit**4])
    lhs = design.T @ (w[:, None] * design)
    rhs = design.T @ (w * lam_vals)
    c2, _ = np.linalg.solve(lhs, rhs)
    design3 = np.column_stack([sigma_fit, sigma_fit**2, sigma_fit**4])
    lhs3 = design3.T @ (w[:, None] * design3)
    rhs3 = design3.T @ (w * lam_vals)
    c1 = np.linalg.solve(lhs3, rhs3)[0]
    return float(c2), float(c1)


def dispersion_branch(sol, derivs, n_sigma=64):
    """Track the neutral branch over [0, k) and fit lambda2 near zero."""
    if n_sigma < 8:
        raise ValueError("n_sigma too small to resolve the branch")
    k = sol.k
    sigma_grid = k * np.arange(n_sigma) / n_sigma
    branch, min_offzero, other_max = _track_branch(sol, sigma_grid)

    lam0 = np.linalg.eigvalsh(assemble_bloch(sol, 0.0))
    lam0_sorted = np.sort(np.abs(lam0))
    gap0 = float(lam0_sorted[1])

    sigma_fit = k * np.linspace(0.01, 0.1, 12)
    lambda2_fit, lambda1_fit = _fit_lambda2(sol, sigma_fit)

    if derivs is not None:
        lambda2_jet = lambda2_from_jet(sol, derivs)
        n_cell = 256
        x = np.arange(n_cell) * (2.0 * np.pi / k / n_cell)
        e0 = k * series_eval(sol.cos_coeffs, k * x, order=1)
        e1 = 1j * k * series_eval(derivs.k_jets[1], k * x)
    else:
        lambda2_jet = float("nan")
        e0 = e1 = np.array([])

    stable = bool(
        np.all(branch[1:] < 0.0)
        and other_max < 0.0
        and np.isfinite(lambda2_jet)
        and lambda2_jet < 0.0
    )
    return BlochData(
        sigma_grid=sigma_grid,
        branch=branch,
        lambda2_fit=lambda2_fit,
        lambda2_jet=lambda2_jet,
        lambda1_fit=lambda1_fit,
        e0=e0,
        e1=e1,
        stable=stable,
        gap0=gap0,
        min_offzero=float(min_offzero),
        other_max=float(other_max),
    )


def verify_hypotheses(sol, derivs, n_sigma=64, zero_gap=1e-4, simple_gap=1e-3):
    """Audit the spectral standing assumptions; raise on the failing clause."""
    if n_sigma < 16:
        raise ValueError("n_sigma too small to audit the spectral band")
    data = dispersion_branch(sol, derivs, n_sigma=n_sigma)

    zero_only = bool(
        np.all(data.branch[1:] < 0.0)
        and data.other_max < 0.0
        and data.min_offzero > zero_gap
    )
    simple = data.gap0 > simple_gap
    lam2_ok = abs(data.lambda2_jet) > 1e-6

    report = {
        "zero_only_at_origin": {"passed": zero_only, "margin": data.min_offzero},
        "kernel_simple": {"passed": simple, "margin": data.gap0},
        "lambda2_nonzero": {"passed": lam2_ok, "margin": abs(data.lambda2_jet)},
        "lambda2_jet": data.lambda2_jet,
        "lambda2_fit": data.lambda2_fit,
        "stable": data.stable,
    }
    for clause in ("zero_only_at_origin", "kernel_simple", "lambda2_nonzero"):
        if not report[clause]["passed"]:
            raise HypothesisViolated(
                f"clause failed: {clause}",
                clause=clause,
                margin=report[clause]["margin"],
                report=report,
            )
    return report


def _hausdorff(a, b):
    d = np.abs(a[:, None] - b[None, :])
    return float(max(d.min(axis=0).max(), d.min(axis=1).max()))


def conjugacy_check(sol, sigma, conjugate_grid_route=False, n_four=None):
    """Spectral Hausdorff distance between the two Bloch realizations.

    Route one places the twist in the derivative symbol directly. Route
    two realizes the twisted boundary condition as a perturbation of the
    untwisted periodic matrix: expanding -(1+(d_x+i sigma)^2)^2 in powers
    of sigma leaves the sigma=0 assembly plus an explicit real diagonal
    correction. The two agree entrywise at sigma=0 and reach the same
    spectrum through different arithmetic otherwise.
    """
    if n_four is None:
        n_four = _default_window(sol)
    a1 = assemble_bloch(sol, sigma, n_four=n_four)

    k = sol.k
    n = np.arange(-n_four, n_four + 1)
    x = n * k
    twist = (
        4.0 * sigma * x * (1.0 - x**2)
        + sigma**2 * (2.0 - 6.0 * x**2)
        - 4.0 * sigma**3 * x
        - sigma**4
    )
    a2 = assemble_bloch(sol, 0.0, n_four=n_four) + np.diag(twist)

    if conjugate_grid_route:
        npts = n.size
        pos = np.arange(npts) * (2.0 * np.pi / k / npts)
        phase = np.exp(1j * sigma * pos)
        a2 = a2 * np.outer(phase, phase.conj())
    eig1 = np.linalg.eigvalsh(a1)
    eig2 = np.linalg.eigvalsh(a2)
    return _hausdorff(eig1, eig2)
