"""Quadratic slope blends and piecewise-affine maps smoothed by them.

The blend ``h_{a,b}`` is ``a*u`` for ``u < -1``, ``b*u`` for ``u > 1`` and the
quadratic ``(b-a)/4 u^2 + (b+a)/2 u + (b-a)/4`` on ``[-1, 1]``.  Its derivative
is the convex combination ``(1-u)/2 a + (1+u)/2 b``, so it never leaves
``[min(a,b), max(a,b)]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def blend_value(alpha, beta, u):
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    u = np.asarray(u, dtype=float)
    q = 0.25 * (beta - alpha)
    mid = q * u * u + 0.5 * (beta + alpha) * u + q
    return np.where(u < -1.0, alpha * u, np.where(u > 1.0, beta * u, mid))


def blend_deriv(alpha, beta, u):
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    u = np.asarray(u, dtype=float)
    mid = 0.5 * (1.0 - u) * alpha + 0.5 * (1.0 + u) * beta
    return np.where(u < -1.0, alpha, np.where(u > 1.0, beta, mid))


def blend_inverse(alpha, beta, v):
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    v = np.asarray(v, dtype=float)
    q = 0.25 * (beta - alpha)
    b = 0.5 * (beta + alpha)
    disc = np.maximum(b * b - 4.0 * q * (q - v), 0.0)
    # cancellation-free root of q u^2 + b u + (q - v) = 0
    mid = 2.0 * (v - q) / (b + np.sqrt(disc))
    return np.where(v < -alpha, v / alpha, np.where(v > beta, v / beta, mid))


@dataclass(frozen=True)
class Blend:
    """The real-line map ``h_{alpha,beta}``."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("blend slopes must be positive")

    def __call__(self, u):
        return blend_value(self.alpha, self.beta, u)

    def deriv(self, u):
        return blend_deriv(self.alpha, self.beta, u)

    def inverse(self, v):
        return blend_inverse(self.alpha, self.beta, v)


class PiecewiseBlended:
    """Piecewise-affine map through knots ``(X[i], Y[i])``, with the corner at
    knot ``i`` replaced by a localized blend of radius ``R[i]`` (0 = keep the
    corner).  Only valid on ``[X[0], X[-1]]``; blends at the two end knots are
    ignored.  Requires ``R[i] + R[i+1] <= X[i+1] - X[i]``.
    """

    def __init__(self, X, Y, R=None):
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        if X.ndim != 1 or X.shape != Y.shape or X.size < 2:
            raise ValueError("knots must be 1-d arrays of equal length >= 2")
        if np.any(np.diff(X) <= 0) or np.any(np.diff(Y) <= 0):
            raise ValueError("knots must be strictly increasing")
        R = np.zeros_like(X) if R is None else np.asarray(R, dtype=float).copy()
        R[0] = R[-1] = 0.0
        if np.any(R < 0) or np.any(R[:-1] + R[1:] > np.diff(X) * (1 + 1e-12)):
            raise ValueError("blend windows overlap")
        self.X, self.Y, self.R = X, Y, R
        self.S = np.diff(Y) / np.diff(X)
        self.S_left = np.concatenate([[self.S[0]], self.S])
        self.S_right = np.concatenate([self.S, [self.S[-1]]])

    def _segment(self, x, side="right"):
        i = np.searchsorted(self.X, x, side=side) - 1
        return np.clip(i, 0, self.X.size - 2)

    def _blend_knot(self, x, i):
        """Index of the knot whose blend window contains x, or -1."""
        j = np.full(np.shape(x), -1)
        near_left = (x - self.X[i]) < self.R[i]
        near_right = (self.X[i + 1] - x) < self.R[i + 1]
        j = np.where(near_left, i, j)
        j = np.where(near_right, i + 1, j)
        return j

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        i = self._segment(x)
        out = self.Y[i] + self.S[i] * (x - self.X[i])
        j = self._blend_knot(x, i)
        m = j >= 0
        if np.any(m):
            jj = j[m]
            eta = self.R[jj]
            u = (x[m] - self.X[jj]) / eta
            out = np.array(out, copy=True)
            out[m] = self.Y[jj] + eta * blend_value(self.S_left[jj], self.S_right[jj], u)
        return out

    def deriv(self, x, side="right"):
        x = np.asarray(x, dtype=float)
        i = self._segment(x, side=side)
        out = np.array(self.S[i], dtype=float, copy=True)
        j = self._blend_knot(x, i)
        m = j >= 0
        if np.any(m):
            jj = j[m]
            u = (x[m] - self.X[jj]) / self.R[jj]
            out[m] = blend_deriv(self.S_left[jj], self.S_right[jj], u)
        return out

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        i = np.clip(np.searchsorted(self.Y, y, side="right") - 1, 0, self.Y.size - 2)
        out = self.X[i] + (y - self.Y[i]) / self.S[i]
        # blended image windows coincide with the host's images of the windows
        j = np.full(y.shape, -1)
        lo_i = self.Y[i] + self.S_right[i] * self.R[i]
        hi_i = self.Y[i + 1] - self.S_left[i + 1] * self.R[i + 1]
        j = np.where((y < lo_i) & (self.R[i] > 0), i, j)
        j = np.where((y > hi_i) & (self.R[i + 1] > 0), i + 1, j)
        m = j >= 0
        if np.any(m):
            jj = j[m]
            eta = self.R[jj]
            v = (y[m] - self.Y[jj]) / eta
            out = np.array(out, copy=True)
            out[m] = self.X[jj] + eta * blend_inverse(self.S_left[jj], self.S_right[jj], v)
        return out

    def is_breakpoint(self, x, tol=0.0):
        """True where x sits on an unblended corner (left slope != right slope)."""
        x = np.asarray(x, dtype=float)
        k = np.clip(np.searchsorted(self.X, x), 0, self.X.size - 1)
        best = np.zeros(x.shape, dtype=bool)
        for kk in (k - 1, k):
            kk = np.clip(kk, 0, self.X.size - 1)
            corner = (self.R[kk] == 0) & (self.S_left[kk] != self.S_right[kk])
            best |= corner & (np.abs(x - self.X[kk]) <= tol)
        return best
