"""Truncated Taylor (jet) arithmetic on point arrays.

A jet of order n is an ndarray of shape (n+1, ...) whose row m holds the
m-th derivative (not divided by m!) of a function evaluated on a grid.
Everything downstream that needs exact x-derivatives of products,
quotients and compositions of analytically known pieces routes through
these helpers instead of grid differencing.
"""

from math import comb

import numpy as np


def jet_mul(a, b):
    """Leibniz product of two jets of equal order."""
    n = a.shape[0]
    if b.shape[0] != n:
        raise ValueError("jet orders differ")
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
    for m in range(n):
        acc = out[m]
        for j in range(m + 1):
            acc += comb(m, j) * a[j] * b[m - j]
    return out


def jet_div(a, b):
    """Jet of a/b, requires b[0] nonzero everywhere."""
    n = a.shape[0]
    if b.shape[0] != n:
        raise ValueError("jet orders differ")
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
    for m in range(n):
        acc = np.array(np.broadcast_to(a[m], out[m].shape), dtype=float)
        for j in range(m):
            acc -= comb(m, j) * out[j] * b[m - j]
        out[m] = acc / b[0]
    return out


def jet_rescale(a, scale):
    """Chain rule through an affine substitution x -> scale*x + shift.

    Row m picks up scale**m; the shift is already absorbed in where the
    inner jet was evaluated.
    """
    factors = scale ** np.arange(a.shape[0])
    return a * factors.reshape((-1,) + (1,) * (a.ndim - 1))


def jet_const(value, order, shape=()):
    out = np.zeros((order + 1,) + tuple(shape))
    out[0] = value
    return out


def jet_compose2(partials, xi_jet, k_jet):
    """x-jet of u(xi(x), k(x)) from mixed partials of u.

    partials[(a, b)] holds d_xi^a d_k^b u evaluated at (xi(x), k(x)) for
    all a + b <= n; xi_jet and k_jet are the argument jets of order n.
    Uses the recursion d/dx F_{a,b} = F_{a+1,b} xi' + F_{a,b+1} k', which
    is exact (no truncation in x).
    """
    n = xi_jet.shape[0] - 1
    memo = {}

    def fjet(a, b, m):
        key = (a, b, m)
        if key in memo:
            return memo[key]
        head = np.asarray(partials[(a, b)], dtype=float)
        out = np.empty((m + 1,) + head.shape)
        out[0] = head
        if m > 0:
            da = fjet(a + 1, b, m - 1)
            db = fjet(a, b + 1, m - 1)
            out[1:] = jet_mul(da, xi_jet[1 : m + 1]) + jet_mul(db, k_jet[1 : m + 1])
        memo[key] = out
        return out

    return fjet(0, 0, n)
