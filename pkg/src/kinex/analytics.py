"""Closed-form predictions and bounds used as oracles against simulation."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .coefficients import ModelDiagnostics
from .errors import DegenerateModel, InvalidConfig, InvalidRate

_REPEATED_ROOT_TOL = 1e-8


@dataclass(frozen=True)
class MomentPrediction:
    """Closed-form solution of the coupled second-moment / cross-moment ODEs.

    g(t) = E[(V^1)^2] and h(t) = E[V^1 V^2] solve
        g' = -a g + b h,
        h' = (c g - d h) / (N - 1),
    so g satisfies a linear second-order ODE with characteristic roots
    lambda1 >= lambda2.
    """

    g0: float
    h0: float
    a: float
    b: float
    c: float
    d: float
    n_particles: int
    lambda1: float
    lambda2: float
    c1: float
    c2: float
    repeated_root: bool

    def g(self, t):
        if self.repeated_root:
            return (self.c1 + self.c2 * t) * math.exp(self.lambda1 * t)
        return (self.c1 * math.exp(self.lambda1 * t)
                + self.c2 * math.exp(self.lambda2 * t))

    def g_prime(self, t):
        if self.repeated_root:
            return (self.c2 + self.lambda1 * (self.c1 + self.c2 * t)) \
                * math.exp(self.lambda1 * t)
        return (self.c1 * self.lambda1 * math.exp(self.lambda1 * t)
                + self.c2 * self.lambda2 * math.exp(self.lambda2 * t))

    def h(self, t):
        if abs(self.b) > 1e-14:
            return (self.g_prime(t) + self.a * self.g(t)) / self.b
        # b = 0 decouples g; solve the linear h equation directly
        mu = self.d / (self.n_particles - 1)
        src = self.c / (self.n_particles - 1)
        if abs(mu - self.a) > 1e-14:
            part = src * self.g0 / (mu - self.a)
            return ((self.h0 - part) * math.exp(-mu * t)
                    + part * math.exp(-self.a * t))
        return (self.h0 + src * self.g0 * t) * math.exp(-mu * t)

    def evaluate(self, t):
        return self.g(t), self.h(t)


def second_moment_solution(diag: ModelDiagnostics, n_particles: int,
                           g0: float, h0: float) -> MomentPrediction:
    """Solve the second-moment ODE system from its quadratic constants."""
    if n_particles < 2:
        raise InvalidConfig("need at least 2 particles")
    a, b, c, d = diag.a, diag.b, diag.c, diag.d
    A = a + d / (n_particles - 1)
    B = (a * d - b * c) / (n_particles - 1)
    disc = A * A - 4.0 * B
    gp0 = -a * g0 + b * h0
    if disc < 0:
        raise InvalidConfig("oscillatory second-moment dynamics are out of scope")
    s = math.sqrt(disc)
    lam1, lam2 = 0.5 * (-A + s), 0.5 * (-A - s)
    if abs(lam1 - lam2) < _REPEATED_ROOT_TOL:
        # limiting form (c1 + c2 t) e^{lam t} avoids catastrophic cancellation
        lam = 0.5 * (lam1 + lam2)
        return MomentPrediction(g0, h0, a, b, c, d, n_particles,
                                lam, lam, g0, gp0 - lam * g0, True)
    c1 = (gp0 - lam2 * g0) / (lam1 - lam2)
    c2 = g0 - c1
    return MomentPrediction(g0, h0, a, b, c, d, n_particles,
                            lam1, lam2, c1, c2, False)


def theorem1_envelope(diag: ModelDiagnostics, em0p: float, t: float) -> float:
    """e^{-gamma t} E[M_0^p], the moment envelope of the empirical mean.

    A lower bound on E[M_t^p] for p > 1, an upper bound for p < 1, and exactly
    E[M_0] for p = 1.
    """
    if t < 0:
        raise InvalidConfig("need t >= 0")
    if diag.p == 1.0:
        return em0p
    return math.exp(-diag.gamma_np * t) * em0p


def moment_propagation_bound(diag: ModelDiagnostics, m: float, g0: float) -> float:
    """Uniform-in-time bound g0 + (2 m b_p / a_p)^p on E[(V_t^1)^p].

    Valid for strictly conservative, non-degenerate trades, which force
    a_p > 0 for p > 1.
    """
    if diag.a_p <= 0.0:
        raise DegenerateModel(
            f"a_p = {diag.a_p} <= 0: the uniform moment bound does not apply")
    x_star = (2.0 * m * diag.b_p / diag.a_p) ** diag.p
    return g0 + x_star


def gronwall_envelope(a: float, b: float, c: float, u0: float, t) -> float:
    """Bound 2 u0 e^{-at} + 2c/a + 4 b^2/a^2 for u' <= -a u + b sqrt(u) + c."""
    if a <= 0:
        raise InvalidRate("need a > 0")
    if b < 0 or c < 0 or u0 < 0:
        raise InvalidConfig("need b, c, u0 >= 0")
    return 2.0 * u0 * math.exp(-a * t) + 2.0 * c / a + 4.0 * b * b / (a * a)


def contraction_rate(diag: ModelDiagnostics, n_particles: int) -> float:
    """Exact coupled-pair contraction rate a + b/(N-1)."""
    if n_particles < 2:
        raise InvalidConfig("need at least 2 particles")
    return diag.a + diag.b / (n_particles - 1)
