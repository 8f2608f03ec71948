"""Leading-order impurity response coefficients and pinning phases.

For a localized forcing eps*g the far-field corrections expand as
k1 = M_k(phi0,0) eps + O(eps^2), phi1 = M_phi(phi0,0) eps + O(eps^2),
with both coefficients given by line integrals of g against the stripe's
translation and dilation modes, normalized by the effective diffusivity.
Any pointwise forcing g(x,u) is the u-gradient of int_0^u g(x,s) ds, so
its phase-average of M_k vanishes identically; the advective built-in
g = envelope * a * u_x is the provided non-gradient example.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, TailBoundExceeded, ZeroDiffusivity
from .stripes import series_eval

IMPURITY_KINDS = ("gaussian_times_affine", "compact_bump", "gradient", "advective")
NODES_PER_PERIOD = 1024
DOMAIN_MIN_HALF_WIDTH = 20.0
TAIL_TOL = 1e-12
DEGENERATE_SLOPE = 1e-8


@dataclass(frozen=True)
class ImpuritySpec:
    """Built-in localized forcings.

    gaussian_times_affine: exp(-((x-x0)/w)^2) (a + b u)
    compact_bump:          bump((x-x0)/w) (a + b u), support |x-x0| < w
    gradient:              d_u of exp(-((x-x0)/w)^2) (a u + b u^2/2)
    advective:             exp(-((x-x0)/w)^2) a u_x
    """

    kind: str
    a: float = 0.0
    b: float = 0.0
    w: float = 1.0
    x0: float = 0.0
    gamma_star: float = math.inf

    def __post_init__(self):
        if self.kind not in IMPURITY_KINDS:
            raise ConfigError(f"unknown impurity kind: {self.kind!r}")
        if self.w <= 0.0:
            raise ConfigError("impurity width must be positive")

    def envelope(self, x):
        z = (np.asarray(x, dtype=float) - self.x0) / self.w
        if self.kind == "compact_bump":
            out = np.zeros_like(z)
            inside = np.abs(z) < 1.0
            t = 1.0 - z[inside] ** 2
            vals = np.zeros_like(t)
            pos = t > 1e-12  # exp(-1/t) underflows long before this
            vals[pos] = np.exp(-1.0 / t[pos])
            out[inside] = vals
            return out
        return np.exp(-(z**2))

    def values(self, x, u, ux=None):
        """g pointwise; the advective kind consumes the slope ux."""
        if self.kind == "advective":
            if ux is None:
                raise ConfigError("advective impurity needs the derivative of u")
            return self.envelope(x) * self.a * np.asarray(ux)
        return self.envelope(x) * (self.a + self.b * np.asarray(u))

    def u_derivative(self, x, u):
        if self.kind == "advective":
            return np.zeros_like(np.asarray(x, dtype=float))
        return self.envelope(x) * self.b

    @property
    def is_gradient(self):
        return self.kind != "advective"


def _quadrature(spec, k, nodes_per_period):
    """Composite Simpson grid covering the forcing support."""
    half = max(8.0 * spec.w, DOMAIN_MIN_HALF_WIDTH) + abs(spec.x0)
    h_target = 2.0 * np.pi / (k * nodes_per_period)
    n = int(np.ceil(2.0 * half / h_target))
    n += n % 2
    x = np.linspace(-half, half, n + 1)
    wts = np.ones(n + 1)
    wts[1:-1:2] = 4.0
    wts[2:-1:2] = 2.0
    wts *= (2.0 * half / n) / 3.0
    return x, wts, half


def _audit_tail(spec, half):
    edge = float(
        np.max(spec.envelope(np.array([spec.x0 - half, spec.x0 + half])))
    )
    bound = edge * spec.w * (abs(spec.a) + abs(spec.b) + 1.0)
    if bound > TAIL_TOL:
        raise TailBoundExceeded(
            "forcing tail beyond the quadrature window is not negligible",
            bound=bound,
            half_width=half,
        )


def response_coefficients(
    sol, derivs, lambda2, spec, phi0, nodes_per_period=NODES_PER_PERIOD
):
    """(M_k, M_phi) at relative phase phi0 and k0 = 0."""
    if abs(lambda2) < 1e-10:
        raise ZeroDiffusivity(
            "effective diffusivity too small to normalize the response",
            lambda2=float(lambda2),
        )
    k = sol.k
    x, wts, half = _quadrature(spec, k, nodes_per_period)
    _audit_tail(spec, half)

    xi = k * x - phi0
    u = series_eval(sol.cos_coeffs, xi)
    v = series_eval(sol.cos_coeffs, xi, order=1)
    q = series_eval(derivs.k_jets[1], xi)
    g = spec.values(x, u, ux=k * v if spec.kind == "advective" else None)

    modes = np.arange(sol.n_modes + 1)
    period_integral = np.pi / k * np.sum(modes**2 * sol.cos_coeffs**2)
    denom = lambda2 * k * period_integral

    mk = np.pi * np.sum(wts * g * v) / denom
    mphi = np.pi * np.sum(wts * g * ((x - phi0 / k) * v + q)) / denom
    return float(mk), float(mphi)


@dataclass
class ResponseCurve:
    phi0_grid: np.ndarray
    Mk: np.ndarray
    Mphi: np.ndarray
    mean_Mk: float


def phase_sweep(sol, derivs, lambda2, spec, n_phases, nodes_per_period=NODES_PER_PERIOD):
    """Sample (M_k, M_phi) on a uniform phase grid over [0, 2pi)."""
    if n_phases < 16:
        raise ValueError("n_phases must be at least 16")
    grid = 2.0 * np.pi * np.arange(n_phases) / n_phases
    mk = np.empty(n_phases)
    mphi = np.empty(n_phases)
    for i, p in enumerate(grid):
        mk[i], mphi[i] = response_coefficients(
            sol, derivs, lambda2, spec, p, nodes_per_period
        )
    # uniform periodic samples: the trapezoid mean is the plain mean
    return ResponseCurve(grid, mk, mphi, float(np.mean(mk)))


@dataclass(frozen=True)
class PinningRoot:
    phi: float
    slope: float
    degenerate: bool


@dataclass
class PinningReport:
    roots: list
    curve_degenerate: bool


def _trig_eval(coeffs, n, phi):
    """Evaluate the trigonometric interpolant of n uniform samples."""
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    m = np.arange(len(coeffs))
    scale = np.full(len(coeffs), 2.0)
    scale[0] = 1.0
    if n % 2 == 0:
        scale[-1] = 1.0
    vals = (np.exp(1j * np.outer(phi, m)) @ (scale * coeffs)).real
    return vals


def pinning_phases(curve):
    """Roots of M_k over one period with finite-difference slopes.

    Works on the spectrally accurate trigonometric interpolant of the
    sweep samples; roots with |slope| below DEGENERATE_SLOPE are flagged.
    """
    vals = curve.Mk
    n = len(vals)
    if np.max(np.abs(vals)) < 1e-12:
        return PinningReport(roots=[], curve_degenerate=True)

    coeffs = np.fft.rfft(vals) / n
    two_pi = 2.0 * np.pi

    def s(phi):
        return _trig_eval(coeffs, n, phi)[0]

    def bisect(lo, hi, flo):
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            fm = s(mid)
            if fm == 0.0:
                return mid
            if (flo < 0.0) != (fm < 0.0):
                hi = mid
            else:
                lo, flo = mid, fm
        return 0.5 * (lo + hi)

    roots = []
    for i in range(n):
        lo = curve.phi0_grid[i]
        hi = curve.phi0_grid[i + 1] if i + 1 < n else two_pi
        flo, fhi = vals[i], vals[(i + 1) % n]
        if flo == 0.0:
            roots.append(lo)
        elif flo * fhi < 0.0:
            roots.append(bisect(lo, hi, flo))

    out = []
    d = 1e-6
    for phi in roots:
        slope = (s(phi + d) - s(phi - d)) / (2.0 * d)
        out.append(
            PinningRoot(
                phi=float(phi % two_pi),
                slope=float(slope),
                degenerate=abs(slope) < DEGENERATE_SLOPE,
            )
        )
    out.sort(key=lambda r: r.phi)
    return PinningReport(roots=out, curve_degenerate=False)
