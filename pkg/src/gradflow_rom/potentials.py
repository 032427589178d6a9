"""Double-well potentials for the Allen-Cahn free energy.

Every potential exposes the same vectorised interface:

* ``F(u)``     potential density
* ``f(u)``     derivative ``F'(u)``, the nonlinear reaction term
* ``df(u)``    second derivative ``f'(u)``
* ``avf(a, b)``   the mean value ``int_0^1 f(tau*b + (1-tau)*a) dtau``
* ``avf_db(a, b)``  its partial derivative with respect to ``b``

All functions accept scalars or numpy arrays and broadcast.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "NonlinearDomainError",
    "Potential",
    "Quartic",
    "Logarithmic",
    "avf_line_integral",
]

# 4-point Gauss-Legendre on [0, 1] for the tau-integral
_GL_X, _GL_W = np.polynomial.legendre.leggauss(4)
TAU_NODES = 0.5 * (_GL_X + 1.0)
TAU_WEIGHTS = 0.5 * _GL_W


class NonlinearDomainError(ValueError):
    """Raised when a potential is evaluated outside its domain."""


class Potential:
    """Base class; subclasses define ``F``, ``f`` and ``df``."""

    name = "potential"

    def F(self, u):
        raise NotImplementedError

    def f(self, u):
        raise NotImplementedError

    def df(self, u):
        raise NotImplementedError

    def avf(self, a, b):
        a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
        out = np.zeros(a.shape)
        for t, w in zip(TAU_NODES, TAU_WEIGHTS):
            out += w * self.f(t * b + (1.0 - t) * a)
        return out

    def avf_db(self, a, b):
        a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
        out = np.zeros(a.shape)
        for t, w in zip(TAU_NODES, TAU_WEIGHTS):
            out += w * t * self.df(t * b + (1.0 - t) * a)
        return out

    def to_dict(self) -> dict:
        return {"kind": self.name}


@dataclass(frozen=True)
class Quartic(Potential):
    """``F(u) = (u^2 - 1)^2 / 4`` with ``f(u) = u^3 - u``."""

    name = "quartic"

    def F(self, u):
        u = np.asarray(u, dtype=float)
        return 0.25 * (u * u - 1.0) ** 2

    def f(self, u):
        u = np.asarray(u, dtype=float)
        return u ** 3 - u

    def df(self, u):
        u = np.asarray(u, dtype=float)
        return 3.0 * u * u - 1.0

    def avf(self, a, b):
        # (F(b) - F(a)) / (b - a) expanded as a polynomial: exact, no division
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        return 0.25 * (a ** 3 + a * a * b + a * b * b + b ** 3) - 0.5 * (a + b)

    def avf_db(self, a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        return 0.25 * (a * a + 2.0 * a * b + 3.0 * b * b) - 0.5


@dataclass(frozen=True)
class Logarithmic(Potential):
    """Logarithmic (Flory-Huggins type) potential.

    ``F(u) = (theta*[(1+u)ln(1+u) + (1-u)ln(1-u)] - theta_c*u^2) / 2``

    The logarithms are only evaluated on ``[-1 + delta, 1 - delta]``; outside
    that range ``F`` continues as its quadratic Taylor expansion about the
    nearest end point.  With ``clamp=False`` values with ``|u| >= 1`` raise
    :class:`NonlinearDomainError` instead.
    """

    theta: float
    theta_c: float
    delta: float = 1e-8
    clamp: bool = True

    name = "logarithmic"

    def __post_init__(self):
        if not self.theta > 0:
            raise ValueError(f"theta must be positive, got {self.theta}")
        if not self.theta_c > 0:
            raise ValueError(f"theta_c must be positive, got {self.theta_c}")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")

    def _arg(self, u):
        u = np.asarray(u, dtype=float)
        if not self.clamp and (np.any(np.abs(u) >= 1.0) or not np.all(np.isfinite(u))):
            raise NonlinearDomainError(
                "logarithmic potential evaluated outside (-1, 1); "
                f"max |u| = {np.max(np.abs(u)):.6g}")
        return u

    def _split(self, u):
        # clamped point c and offset d = u - c (zero inside the clamp range)
        u = self._arg(u)
        if not self.clamp:
            return u, None
        lim = 1.0 - self.delta
        c = np.clip(u, -lim, lim)
        return c, u - c

    def _F(self, u):
        ent = (1.0 + u) * np.log1p(u) + (1.0 - u) * np.log1p(-u)
        return 0.5 * (self.theta * ent - self.theta_c * u * u)

    def _f(self, u):
        return 0.5 * self.theta * (np.log1p(u) - np.log1p(-u)) - self.theta_c * u

    def _df(self, u):
        return self.theta / ((1.0 - u) * (1.0 + u)) - self.theta_c

    # Beyond the clamp the functions continue as the second-order Taylor
    # expansion about the clamp point, so F' = f and f' = df hold everywhere.
    def F(self, u):
        c, d = self._split(u)
        if d is None:
            return self._F(c)
        return self._F(c) + d * self._f(c) + 0.5 * d * d * self._df(c)

    def f(self, u):
        c, d = self._split(u)
        if d is None:
            return self._f(c)
        return self._f(c) + d * self._df(c)

    def df(self, u):
        return self._df(self._split(u)[0])

    def _extension(self, c, d):
        # value of the Taylor tail divided by d: f(c) + d df(c) / 2
        return self._f(c) + 0.5 * d * self._df(c)

    def avf(self, a, b):
        a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
        ca, da = self._split(a)
        cb, db = self._split(b)
        if da is None:
            da, db = np.zeros_like(a), np.zeros_like(b)
        diff = b - a
        same = diff == 0
        safe = np.where(same, 1.0, diff)
        inner = 0.5 * (self.theta * _entropy_quotient(ca, cb) - self.theta_c * (ca + cb))
        w_in = (cb - ca) / safe
        shared = ca == cb
        tail = np.where(shared,
                        (1.0 - w_in) * (self._f(ca) + 0.5 * (da + db) * self._df(ca)),
                        db / safe * self._extension(cb, db) - da / safe * self._extension(ca, da))
        return np.where(same, self.f(a), w_in * inner + tail)

    def avf_db(self, a, b):
        a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
        ca, da = self._split(a)
        cb, db = self._split(b)
        inside = np.ones(a.shape, bool) if da is None else (da == 0) & (db == 0)
        out = 0.5 * (self.theta * _entropy_quotient_db(ca, cb) - self.theta_c)
        if np.all(inside):
            return out
        # both beyond the same clamp point: F is quadratic there
        beyond = (ca == cb) & ~inside
        diff = b - a
        safe = np.where(diff == 0, 1.0, diff)
        mixed = (self.f(b) - self.avf(a, b)) / safe
        return np.where(inside, out, np.where(beyond | (diff == 0), 0.5 * self.df(cb), mixed))

    def to_dict(self) -> dict:
        return {"kind": self.name, "theta": self.theta, "theta_c": self.theta_c}


def _log1p_ratio(x):
    """``log1p(x) / x`` with the removable singularity at 0 filled in."""
    small = np.abs(x) < 1e-4
    xs = np.where(small, 1.0, x)
    series = 1.0 - x / 2 + x * x / 3 - x ** 3 / 4
    return np.where(small, series, np.log1p(xs) / xs)


def _log1p_ratio_dx(x):
    """Derivative of :func:`_log1p_ratio`."""
    small = np.abs(x) < 1e-3
    xs = np.where(small, 1.0, x)
    series = -0.5 + 2 * x / 3 - 3 * x * x / 4 + 4 * x ** 3 / 5 - 5 * x ** 4 / 6
    return np.where(small, series, (xs / (1.0 + xs) - np.log1p(xs)) / (xs * xs))


def _entropy_quotient(a, b):
    """Difference quotient of ``(1+u)ln(1+u) + (1-u)ln(1-u)`` between a and b.

    Written with ``log1p(x)/x`` so that no cancellation occurs for close
    arguments, even next to the singular points.
    """
    x = (b - a) / (1.0 + a)
    y = (a - b) / (1.0 - a)
    return np.log1p(b) + _log1p_ratio(x) - np.log1p(-b) - _log1p_ratio(y)


def _entropy_quotient_db(a, b):
    x = (b - a) / (1.0 + a)
    y = (a - b) / (1.0 - a)
    return (1.0 / (1.0 + b) + _log1p_ratio_dx(x) / (1.0 + a)
            + 1.0 / (1.0 - b) + _log1p_ratio_dx(y) / (1.0 - a))


def avf_line_integral(potential: Potential, a, b):
    """Mean of ``f`` along the straight path from ``a`` to ``b``."""
    return potential.avf(a, b)


def make_potential(kind: str, theta: float | None = None,
                   theta_c: float | None = None, **kw) -> Potential:
    kind = kind.lower()
    if kind == "quartic":
        return Quartic()
    if kind in ("logarithmic", "log"):
        if theta is None or theta_c is None:
            raise ValueError("logarithmic potential needs theta and theta_c")
        return Logarithmic(float(theta), float(theta_c), **kw)
    raise ValueError(f"unknown potential kind {kind!r}")
