"""Smooth partition of unity and the matching weight functions.

Everything is built from the standard mollifier f(t) = exp(-1/t) (t > 0).
Derivatives of f are f(t) * Q_n(1/t) with polynomials Q_n generated by the
recursion Q_{n+1}(y) = y^2 (Q_n(y) - Q_n'(y)); the smoothstep
s(t) = f(t) / (f(t) + f(1-t)) then carries exact jets through the jet
division, so every evaluator here returns analytic derivatives rather than
finite differences.
"""

from dataclasses import dataclass, field

import numpy as np

from .jets import jet_div

MAX_ORDER = 8

GL_NODES, GL_WEIGHTS = np.polynomial.legendre.leggauss(48)


def _q_polys(order):
    polys = [np.polynomial.Polynomial([1.0])]
    y2 = np.polynomial.Polynomial([0.0, 0.0, 1.0])
    for _ in range(order):
        q = polys[-1]
        polys.append(y2 * (q - q.deriv()))
    return polys


_Q = _q_polys(MAX_ORDER)


def bump_jet(t, order):
    """Jet of f(t) = exp(-1/t) for t > 0, zero for t <= 0."""
    if order > MAX_ORDER:
        raise ValueError("derivative order beyond the prepared recursion")
    t = np.asarray(t, dtype=float)
    out = np.zeros((order + 1,) + t.shape)
    # below ~1e-12 the true value underflows while Q_n(1/t) can overflow;
    # the product is an exact double-precision zero either way
    pos = t > 1e-12
    if np.any(pos):
        inv = 1.0 / t[pos]
        f = np.exp(-inv)
        for m in range(order + 1):
            out[m][pos] = f * _Q[m](inv)
    return out


def smoothstep_jet(t, order):
    """Jet of s(t) = f(t)/(f(t)+f(1-t)): 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    out = np.zeros((order + 1,) + t.shape)
    out[0][t >= 1.0] = 1.0
    mid = (t > 0.0) & (t < 1.0)
    if np.any(mid):
        tm = t[mid]
        num = bump_jet(tm, order)
        flip = bump_jet(1.0 - tm, order)
        signs = (-1.0) ** np.arange(order + 1)
        den = num + signs[:, None] * flip
        s = jet_div(num, den)
        for m in range(order + 1):
            out[m][mid] = s[m]
    return out


@dataclass
class PartitionGeometry:
    """Partition pair chi+/chi-, the sign mollifier theta, and Theta.

    The transition of chi+ lives in [-transition_width, transition_width];
    theta equals sign(x) and Theta equals |x| exactly outside it, with
    Theta(x) = c + integral of theta from 0 to x and c = 1 - int_0^1 theta.
    """

    transition_width: float
    c: float = field(init=False)

    def __post_init__(self):
        d = self.transition_width
        if not 0.0 < d <= 0.5:
            raise ValueError("transition_width must lie in (0, 1/2]")
        nodes = 0.5 * d * (GL_NODES + 1.0)
        self.c = d - 0.5 * d * np.sum(GL_WEIGHTS * self.theta(nodes))

    def chi_plus_jet(self, x, order):
        x = np.asarray(x, dtype=float)
        d = self.transition_width
        s = smoothstep_jet((x + d) / (2.0 * d), order)
        scale = (0.5 / d) ** np.arange(order + 1)
        return s * scale.reshape((-1,) + (1,) * x.ndim)

    def chi_plus(self, x, order=0):
        return self.chi_plus_jet(x, order)[order]

    def chi_minus(self, x, order=0):
        return (-1.0) ** order * self.chi_plus(-np.asarray(x, dtype=float), order)

    def theta_jet(self, x, order):
        jet = 2.0 * self.chi_plus_jet(x, order)
        jet[0] -= 1.0
        return jet

    def theta(self, x, order=0):
        return self.theta_jet(x, order)[order]

    def theta_prime(self, x):
        return self.theta(x, 1)

    def big_theta_jet(self, x, order):
        x = np.asarray(x, dtype=float)
        out = np.zeros((order + 1,) + x.shape)
        out[0] = self.big_theta(x)
        if order > 0:
            out[1:] = self.theta_jet(x, order - 1)
        return out

    def big_theta(self, x, order=0):
        if order > 0:
            return self.theta(x, order - 1)
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        out = ax.copy()
        inner = ax < self.transition_width
        if np.any(inner):
            xi = ax[inner]
            # Gauss-Legendre on [0, x] per point; theta is smooth there
            nodes = 0.5 * xi[:, None] * (GL_NODES[None, :] + 1.0)
            vals = self.theta(nodes)
            out[inner] = self.c + 0.5 * xi * (vals @ GL_WEIGHTS)
        return out


def build_partition(transition_width=0.375):
    """Partition geometry with the transition confined to the given width."""
    return PartitionGeometry(transition_width=float(transition_width))
