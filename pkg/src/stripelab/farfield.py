"""Glued far-field ansatz and its defect commutator.

The modulated profile carries a slowly varying phase built from the
partition primitives,

    phi(x) = k0 x - phi0 + k1 Theta(x) - phi1 theta(x),

and evaluates the stripe family at (k x + phi(x), k + phi'(x)).  Beyond
the matching zone the profile coincides exactly with the pure stripes at
parameters (phi0 +/- phi1, k0 +/- k1), so the commutator residual

    K = E(u) - chi_+ E(u_+) - chi_- E(u_-),   E = SH residual,

is compactly supported.  Its linearization at psi = 0 and the pairings
against the two bounded kernel fields feed the reduced phase dynamics.
"""

from dataclasses import dataclass

import numpy as np

from .errors import IdentityViolation
from .jets import jet_mul, jet_compose2
from .stripes import evaluate, series_eval

PAIRING_HALF_WIDTH = 2.0
# trapezoid on C_c^inf integrands converges exponentially, but the
# K columns have internal layers of amplitude ~1e3 at width 0.25;
# 2048 nodes/period puts every pairing identity at machine precision
PAIRING_NODES_PER_PERIOD = 2048
KK_BASE_POINTS = 32

PAIR_TOL_DIAG = 1e-8
PAIR_TOL_OFFD = 1e-8
PAIR_TOL_KK = 1e-6
PAIR_TOL_DIFF = 1e-3


@dataclass(frozen=True)
class FarFieldParams:
    """Common (phi0, k0) and split (phi1, k1) phase/wavenumber offsets."""

    phi0: float = 0.0
    k0: float = 0.0
    phi1: float = 0.0
    k1: float = 0.0


@dataclass
class ModulatedStripe:
    x: np.ndarray
    psi: FarFieldParams
    u_jet: np.ndarray
    plus_jet: np.ndarray
    minus_jet: np.ndarray
    d_phi1: np.ndarray
    d_k1: np.ndarray

    @property
    def u(self):
        return self.u_jet[0]

    @property
    def u_plus(self):
        return self.plus_jet[0]

    @property
    def u_minus(self):
        return self.minus_jet[0]


def phase_jet(geom, psi, x, order):
    """x-jet of the modulation phase k0 x - phi0 + k1 Theta - phi1 theta."""
    th = geom.theta_jet(x, order)
    big = geom.big_theta_jet(x, order)
    out = psi.k1 * big - psi.phi1 * th
    out[0] += psi.k0 * x - psi.phi0
    if order >= 1:
        out[1] += psi.k0
    return out


def modulated_profile_jet(sol, derivs, geom, psi, x, order=4, check_radius=True):
    """x-jet of the glued profile plus the mixed partials at its arguments.

    check_radius=False tolerates local wavenumber offsets beyond the jet
    trust radius inside the matching zone (the defect solver's core
    correction absorbs the extrapolation error there).
    """
    phi = phase_jet(geom, psi, x, order + 1)
    xi_jet = phi[: order + 1].copy()
    xi_jet[0] += sol.k * x
    xi_jet[1] += sol.k
    k_jet = phi[1 : order + 2].copy()
    k_jet[0] += sol.k
    dk = k_jet[0] - sol.k

    partials = {}
    for a in range(order + 1):
        for b in range(order + 1 - a):
            partials[(a, b)] = derivs.partial(
                a, b, xi_jet[0], dk=dk,
                check_radius=check_radius and a == 0 and b == 0,
            )
    return jet_compose2(partials, xi_jet, k_jet), partials


def glued_profile_jet(sol, derivs, geom, psi, x, order=4):
    """x-jet of chi+ u_+ + chi- u_- with constant wavenumber per side.

    Each piece is an exact stripe at (phi0 +/- phi1, k0 +/- k1), so the jet
    is free of partition derivatives except through the chi factors; the
    curvature of the residual in (phi1, k1) stays bounded by the chi jets
    alone, unlike the locally modulated profile whose wavenumber argument
    carries theta' and blows up the quadratic response in the matching zone.
    """
    x = np.asarray(x, dtype=float)
    plus = evaluate(
        sol, derivs, x, order=order, phase=psi.phi0 + psi.phi1, dk=psi.k0 + psi.k1
    )
    minus = evaluate(
        sol, derivs, x, order=order, phase=psi.phi0 - psi.phi1, dk=psi.k0 - psi.k1
    )
    cp = geom.chi_plus_jet(x, order)
    signs = (-1.0) ** np.arange(order + 1)
    cm = signs[:, None] * geom.chi_plus_jet(-x, order)
    return jet_mul(cp, plus) + jet_mul(cm, minus)


def modulated_stripe(sol, derivs, geom, psi, x, order=4):
    """Glued profile, the two far-field stripes, and the split tangents.

    Jets are exact in x: the composition routes through the stored mixed
    partials of the stripe family, so no grid differencing enters.
    """
    x = np.asarray(x, dtype=float)
    u_jet, partials = modulated_profile_jet(sol, derivs, geom, psi, x, order)

    plus_jet = evaluate(
        sol, derivs, x, order=order, phase=psi.phi0 + psi.phi1, dk=psi.k0 + psi.k1
    )
    minus_jet = evaluate(
        sol, derivs, x, order=order, phase=psi.phi0 - psi.phi1, dk=psi.k0 - psi.k1
    )

    u_xi = partials[(1, 0)]
    u_k = partials[(0, 1)]
    th = geom.theta(x)
    d_phi1 = -(th * u_xi + geom.theta_prime(x) * u_k)
    d_k1 = geom.big_theta(x) * u_xi + th * u_k
    return ModulatedStripe(
        x=x,
        psi=psi,
        u_jet=u_jet,
        plus_jet=plus_jet,
        minus_jet=minus_jet,
        d_phi1=d_phi1,
        d_k1=d_k1,
    )


def sh_residual(jet, mu):
    """-(u + 2u'' + u'''') + mu u - u^3 from an order-4 x-jet."""
    u = jet[0]
    return -(u + 2.0 * jet[2] + jet[4]) + mu * u - u**3


def commutator_K(sol, derivs, geom, psi, x):
    """Residual left over after subtracting the windowed far-field stripes."""
    ms = modulated_stripe(sol, derivs, geom, psi, x, order=4)
    return (
        sh_residual(ms.u_jet, sol.mu)
        - geom.chi_plus(ms.x) * sh_residual(ms.plus_jet, sol.mu)
        - geom.chi_minus(ms.x) * sh_residual(ms.minus_jet, sol.mu)
    )


@dataclass
class KLinearization:
    x: np.ndarray
    K_phi1: np.ndarray
    K_k1: np.ndarray
    K_phi0: np.ndarray
    K_k0: np.ndarray
    fd: dict
    fd_step: float


def _stripe_jets(sol, derivs, x, order=4):
    """x-jets of u_p, d_xi u_p and d_k u_p along xi = k x."""
    k = sol.k
    xi = k * x
    up = np.stack(
        [k**m * series_eval(sol.cos_coeffs, xi, order=m) for m in range(order + 1)]
    )
    v = np.stack(
        [k**m * series_eval(sol.cos_coeffs, xi, order=m + 1) for m in range(order + 1)]
    )
    q = np.stack(
        [k**m * series_eval(derivs.k_jets[1], xi, order=m) for m in range(order + 1)]
    )
    return up, v, q


def K_linearization(sol, derivs, geom, x, fd_step=1e-4):
    """Derivative of K at psi = 0: closed forms plus centered differences.

    The split directions read K_phi1 = -L0(theta v + theta' q) and
    K_k1 = L0(Theta v + theta q) with v = d_xi u_p, q = d_k u_p and L0 the
    linearization about the stripe; the common directions (phi0, k0) move
    all three profiles together and contribute nothing.
    """
    x = np.asarray(x, dtype=float)
    order = 4
    up, v, q = _stripe_jets(sol, derivs, x, order)
    th = geom.theta_jet(x, order)
    thp = geom.theta_jet(x, order + 1)[1:]
    big = geom.big_theta_jet(x, order)
    w_phi = jet_mul(th, v) + jet_mul(thp, q)
    w_k = jet_mul(big, v) + jet_mul(th, q)
    pot = sol.mu - 3.0 * up[0] ** 2

    def lin_op(jet):
        return -(jet[0] + 2.0 * jet[2] + jet[4]) + pot * jet[0]

    # 4th-order stencil: the 2-point truncation term carries stacked
    # theta-jet factors and is ~1e-3 relative at usable step sizes
    fd = {}
    h = fd_step
    for name in ("phi0", "k0", "phi1", "k1"):
        def k_at(step):
            return commutator_K(sol, derivs, geom, FarFieldParams(**{name: step}), x)

        fd[name] = (-k_at(2 * h) + 8 * k_at(h) - 8 * k_at(-h) + k_at(-2 * h)) / (
            12.0 * h
        )

    return KLinearization(
        x=x,
        K_phi1=-lin_op(w_phi),
        K_k1=lin_op(w_k),
        K_phi0=fd["phi0"],
        K_k0=fd["k0"],
        fd=fd,
        fd_step=h,
    )


def _kk_bracket(sol, derivs, x):
    """Bilinear concomitant of the two kernel fields; constant in x.

    P = sum_{j<=3} (-1)^j a^(j) b^(3-j) + 2 sum_{j<=1} (-1)^j a^(j) b^(1-j)
    with a = x d_xi u_p + d_k u_p and b = u_p'; dP/dx collapses to
    a (b'''' + 2b'') - (a'''' + 2a'') b = 0 on kernel elements.
    """
    x = np.asarray(x, dtype=float)
    up, v, q = _stripe_jets(sol, derivs, x, order=4)
    xj = np.zeros((5,) + x.shape)
    xj[0] = x
    xj[1] = 1.0
    a = jet_mul(xj, v) + q
    b = up[1:]
    first = sum((-1) ** j * a[j] * b[3 - j] for j in range(4))
    second = sum((-1) ** j * a[j] * b[1 - j] for j in range(2))
    return first + 2.0 * second


def _integrate(y, h):
    return h * (np.sum(y) - 0.5 * (y[0] + y[-1]))


def cokernel_pairings(sol, derivs, geom, lambda2, n_per_period=PAIRING_NODES_PER_PERIOD):
    """Pairing matrix of the kernel fields against the K linearization.

    Checks the structural identities (zero diagonal, k-scaled symmetry of
    the off-diagonal, constancy of the kernel concomitant, and agreement
    of <up', K_k1> with -lambda2/pi times the period norm of up') and
    raises IdentityViolation naming the first one that fails.
    """
    k = sol.k
    period = 2.0 * np.pi / k
    h = period / n_per_period
    n_half = int(np.ceil(PAIRING_HALF_WIDTH / h))
    x = np.arange(-n_half, n_half + 1) * h

    lin = K_linearization(sol, derivs, geom, x)
    up, v, q = _stripe_jets(sol, derivs, x, order=1)
    up_prime = up[1]
    up_kstar = x * v[0] + q[0]

    pair = np.empty((2, 2))
    pair[0, 0] = _integrate(up_prime * lin.K_phi1, h)
    pair[0, 1] = _integrate(up_prime * lin.K_k1, h)
    pair[1, 0] = _integrate(up_kstar * lin.K_phi1, h)
    pair[1, 1] = _integrate(up_kstar * lin.K_k1, h)
    scale = abs(pair[0, 1])

    x0 = np.linspace(0.0, period, KK_BASE_POINTS, endpoint=False)
    bracket = _kk_bracket(sol, derivs, x0)
    kk_res = (np.max(bracket) - np.min(bracket)) / max(abs(np.mean(bracket)), 1e-300)

    norm_sq = np.pi * k * np.sum(np.arange(sol.n_modes + 1) ** 2 * sol.cos_coeffs**2)
    diff_ref = -lambda2 / np.pi * norm_sq
    diff_res = abs(pair[0, 1] - diff_ref) / scale

    identities = [
        ("diagonal_phi1", abs(pair[0, 0]) / scale, PAIR_TOL_DIAG),
        ("diagonal_k1", abs(pair[1, 1]) / scale, PAIR_TOL_DIAG),
        ("offdiagonal", abs(pair[0, 1] - k * pair[1, 0]) / scale, PAIR_TOL_OFFD),
        ("kk_constancy", kk_res, PAIR_TOL_KK),
        ("diffusivity", diff_res, PAIR_TOL_DIFF),
    ]
    for name, residual, tol in identities:
        if not residual < tol:
            raise IdentityViolation(
                f"identity failed: {name}",
                identity=name,
                residual=float(residual),
                tolerance=tol,
            )

    return {
        "pairings": pair,
        "det": float(np.linalg.det(pair)),
        "kk_mean": float(np.mean(bracket)),
        "diffusivity_reference": float(diff_ref),
        "identities": [
            {"name": name, "residual": float(res), "tolerance": tol}
            for name, res, tol in identities
        ],
    }
