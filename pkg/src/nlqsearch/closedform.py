"""Closed-form and quadrature results for search on the complete graph and its relatives.

Runtimes follow from integrating dx/dt, where x is the success probability.  The
substitution x = k/N + (1 - k/N) sin^2(theta) turns
    dx / sqrt((1 - x)(N x - k))   into   (2 / sqrt(N)) dtheta,
so every runtime integral becomes a bounded integrand over [0, pi/2].
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import mpmath
import numpy as np
from scipy.optimize import brentq

from .dynamics import Nonlinearity
from .graphs import CollapsedGraph, SrgParams, srg_check

EULER_GAMMA = 0.57721566490153286061
DEFAULT_EPSILON = 0.01


@dataclass(frozen=True)
class CompleteSearchParams:
    n_vertices: float
    marked_count: float = 1
    g: float = 0.0
    epsilon_height: float = DEFAULT_EPSILON

    def __post_init__(self):
        if not 1 <= self.marked_count < self.n_vertices:
            raise ValueError("need 1 <= k < N")

    @property
    def G(self) -> float:
        k, n = self.marked_count, self.n_vertices
        return self.g / (k * (n - k))

    @classmethod
    def from_G(cls, n, G, marked_count=1, epsilon_height=DEFAULT_EPSILON):
        return cls(n, marked_count, G * marked_count * (n - marked_count), epsilon_height)


# ---------------------------------------------------------------- linear and cubic

def linear_prob(n, t):
    if n < 2:
        raise ValueError("N must be at least 2")
    phase = np.asarray(t, dtype=float) / np.sqrt(n)
    return np.cos(phase) ** 2 / n + np.sin(phase) ** 2


def _kg(p: CompleteSearchParams) -> float:
    kg = p.marked_count + p.g
    if kg <= 0:
        raise ValueError("need k + g > 0")
    return kg


def cubic_prob(p: CompleteSearchParams, t):
    """Success probability under the critical jumping rate, cubic nonlinearity."""
    n, k, kg = p.n_vertices, p.marked_count, _kg(p)
    phi = np.pi / 2 - np.sqrt(kg / n) * np.asarray(t, dtype=float)
    c2, s2 = np.cos(phi) ** 2, np.sin(phi) ** 2
    return (n * c2 + kg * s2) / (n * c2 + (n / k) * kg * s2)


def cubic_time_of_prob(p: CompleteSearchParams, x):
    """First time at which cubic_prob reaches x, for k/N <= x <= 1."""
    n, k, kg = p.n_vertices, p.marked_count, _kg(p)
    x = np.asarray(x, dtype=float)
    if np.any(x < k / n - 1e-15) or np.any(x > 1 + 1e-15):
        raise ValueError("x must lie in [k/N, 1]")
    num = np.sqrt(n * k) * np.sqrt(np.clip(1 - x, 0, None))
    den = np.sqrt(kg) * np.sqrt(np.clip(n * x - k, 0, None))
    return np.sqrt(n / kg) * (np.pi / 2 - np.arctan2(num, den))


def cubic_runtime(p: CompleteSearchParams) -> float:
    return float(np.pi * np.sqrt(p.n_vertices) / (2 * np.sqrt(_kg(p))))


def cubic_width(p: CompleteSearchParams, mode: str = "exact") -> float:
    n, k, eps = p.n_vertices, p.marked_count, p.epsilon_height
    kg = _kg(p)
    if not 0 < eps < 1 - k / n:
        raise ValueError("need 0 < epsilon < 1 - k/N")
    if mode == "exact":
        arg = np.sqrt(n * k) * np.sqrt(eps) / (np.sqrt(kg) * np.sqrt(n * (1 - eps) - k))
        return float(2 * np.sqrt(n / kg) * np.arctan(arg))
    if mode == "leading":
        return float(2 * n / (1 + p.g / k) * np.sqrt(eps / (k * (n - k))))
    raise ValueError("mode must be 'exact' or 'leading'")


def cubic_dxdt(p: CompleteSearchParams, x, sign: float = 1.0):
    """Rate of change of the success probability for one marked vertex."""
    if p.marked_count != 1:
        raise ValueError("first-derivative form is for one marked vertex")
    n, big_g = p.n_vertices, p.G
    x = np.asarray(x, dtype=float)
    return sign * 2.0 / n * np.sqrt((n * x - 1) * (1 - x)) * np.abs(1 + big_g * (n * x - 1))


def rescaled_time_residual(t, x, n, G) -> float:
    """Max deviation of a k=1 trajectory from the time-rescaled linear evolution."""
    from scipy.integrate import cumulative_trapezoid

    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    tau = (1 - G) * t + G * n * cumulative_trapezoid(x, t, initial=0.0)
    phase = tau / np.sqrt(n)
    pred = np.sin(phase) ** 2 + np.cos(phase) ** 2 / n
    return float(np.max(np.abs(pred - x)))


# ---------------------------------------------------------------- quadrature

def _graded_panels(levels: int = 40) -> np.ndarray:
    """Breakpoints on [0, pi/2] refined geometrically towards both endpoints."""
    half = np.pi / 4
    left = half * 2.0 ** -np.arange(levels, -1, -1)
    right = np.pi / 2 - left[::-1]
    return np.concatenate([[0.0], left, right[1:], [np.pi / 2]])


_PANELS = _graded_panels()


def theta_quadrature(h: Callable, tol: float = 1e-8, n_start: int = 8, n_max: int = 1024,
                     upper: float = np.pi / 2) -> float:
    """Integral of h(theta) over [0, upper] by composite Gauss-Legendre, doubling nodes per panel.

    Panels shrink geometrically towards both endpoints so that mild endpoint
    singularities of the integrand (logarithmic ones in particular) are resolved.
    """
    if not 0 < upper <= np.pi / 2:
        raise ValueError("upper limit must lie in (0, pi/2]")
    edges = _PANELS * (upper / (np.pi / 2))
    a, b = edges[:-1], edges[1:]
    prev = None
    n = n_start
    while n <= n_max:
        nodes, weights = np.polynomial.legendre.leggauss(n)
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        theta = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
        w = (half[:, None] * weights[None, :]).ravel()
        val = float(np.dot(w, h(theta)))
        if prev is not None and abs(val - prev) <= tol * abs(val):
            return val
        prev = val
        n *= 2
    raise ValueError("quadrature did not converge")


def _x_of_theta(theta, n, k):
    a = k / n
    s2 = np.sin(theta) ** 2
    return a + (1 - a) * s2, (1 - a) * np.cos(theta) ** 2


def _fdiff(nl: Nonlinearity, x, omx, n, k):
    """f(x/k) - f((1-x)/(N-k)) with 1-x passed separately to keep precision near x = 1."""
    if nl.kind == "loglinear":
        with np.errstate(divide="ignore"):
            return np.log(((n - k) / k) * x / omx)
    return nl.f(x / k) - nl.f(omx / (n - k))


def _denominator(nl, x, omx, n, k):
    return 1.0 + nl.g * _fdiff(nl, x, omx, n, k)


def _check_denominator(nl, n, k, samples: int = 4001):
    theta = np.linspace(0, np.pi / 2, samples)[:-1]
    x, omx = _x_of_theta(theta, n, k)
    d = _denominator(nl, x, omx, n, k)
    bad = np.flatnonzero(~(d > 0))
    if bad.size:
        i = bad[0]
        if i == 0:
            xs = k / n
        else:
            fx = lambda xx: float(_denominator(nl, np.array(xx), np.array(1 - xx), n, k))
            xs = brentq(fx, x[i - 1], x[i])
        raise ValueError(
            f"1 + g(f_alpha - f_beta) vanishes at the stationary point x_s = {xs:.12g}; "
            "the success probability cannot reach 1"
        )


def general_runtime(nl: Nonlinearity, n, k=1, tol: float = 1e-8) -> float:
    """Runtime under the critical jumping rate for any nonlinearity, by theta quadrature."""
    if not 1 <= k < n:
        raise ValueError("need 1 <= k < N")
    _check_denominator(nl, n, k)
    return float(np.sqrt(n / k) * theta_quadrature(_runtime_integrand(nl, n, k), tol))


def _runtime_integrand(nl, n, k):
    def h(theta):
        x, omx = _x_of_theta(theta, n, k)
        d = _denominator(nl, x, omx, n, k)
        out = np.zeros_like(theta)
        ok = np.isfinite(d)
        out[ok] = 1.0 / d[ok]
        return out

    return h


def general_time_of_prob(nl: Nonlinearity, n, k, x, tol: float = 1e-10) -> float:
    """Time at which the success probability first reaches x (same integral, upper limit x)."""
    if not k / n <= x <= 1:
        raise ValueError("x must lie in [k/N, 1]")
    theta_x = float(np.arcsin(np.sqrt((x - k / n) / (1 - k / n))))
    if theta_x == 0.0:
        return 0.0
    _check_denominator(nl, n, k)
    return float(np.sqrt(n / k) * theta_quadrature(_runtime_integrand(nl, n, k), tol, upper=theta_x))


def general_width_leading(nl: Nonlinearity, n, k=1, epsilon: float = DEFAULT_EPSILON,
                          exact_quintic: bool = False) -> float:
    """Leading-order peak width at height 1 - epsilon.

    For the cubic-quintic term with k >= 2 the difference (k-1)/k^2 is replaced by
    1/k unless exact_quintic is set; with k = 1 the difference is exactly 0.
    """
    if nl.kind == "loglinear":
        raise ValueError("loglinear width diverges at leading order; use log_width_lower_bound")
    if nl.kind == "linear":
        d1 = 0.0
    elif nl.kind == "cubic":
        d1 = 1.0 / k
    elif nl.kind == "cubic_quintic":
        d1 = 0.0 if k == 1 else ((k - 1) / k**2 if exact_quintic else 1.0 / k)
    else:
        d1 = float(nl.f(np.array(1.0 / k)) - nl.f(np.array(0.0)))
        if not np.isfinite(d1):
            raise ValueError("f diverges at the peak; the leading-order width is undefined")
    denom = 1 + nl.g * d1
    if denom <= 0:
        raise ValueError("non-positive denominator at the peak")
    return float(2 * n / denom * np.sqrt(epsilon / (k * (n - k))))


# ---------------------------------------------------------------- cubic-quintic

@dataclass(frozen=True)
class CubicQuinticCoeffs:
    a: float
    b: float
    c: float
    Delta: float
    Sigma: float
    Xi: float


def cq_coeffs(n, k, g) -> CubicQuinticCoeffs:
    a = -g * n * (n - 2 * k)
    b = g * k * (n * n - k * n - 2 * k)
    c = -g * k * k * (n - k - 1) + k * k * (n - k) ** 2
    return CubicQuinticCoeffs(a, b, c, b * b - 4 * a * c, a + b + c, 2 * a * k + 2 * c * n + b * (k + n))


def cq_runtime(n, k, g, dps: int = 60) -> float:
    """Closed-form cubic-quintic runtime, evaluated in extended precision.

    The sum xi + sqrt(Delta)(k - N) loses most of its digits to cancellation in
    double precision, so the whole expression is evaluated with mpmath.
    """
    if not 1 <= k < n / 2:
        raise ValueError("need 1 <= k < N/2")
    if g == 0:
        return general_runtime(Nonlinearity("linear"), n, k)
    with mpmath.workdps(dps):
        N, K, Gm = mpmath.mpf(n), mpmath.mpf(k), mpmath.mpf(g)
        a = -Gm * N * (N - 2 * K)
        b = Gm * K * (N * N - K * N - 2 * K)
        c = -Gm * K * K * (N - K - 1) + K * K * (N - K) ** 2
        delta = b * b - 4 * a * c
        sigma = a + b + c
        xi = 2 * a * K + 2 * c * N + b * (K + N)
        rd = mpmath.sqrt(delta) if delta >= 0 else None
        r1 = xi + rd * (K - N) if rd is not None else None
        r2 = xi - rd * (K - N) if rd is not None else None
        if rd is None or sigma <= 0 or r1 <= 0 or r2 <= 0:
            warnings.warn("cubic-quintic closed form outside its domain; using quadrature", RuntimeWarning)
            return general_runtime(Nonlinearity("cubic_quintic", g), n, k)
        pref = mpmath.pi / 2 * N * K**2 * (N - K) ** 2 / (2 * mpmath.sqrt(K))
        pref *= mpmath.sqrt(2) / (mpmath.sqrt(sigma) * rd)
        val = pref * ((2 * a + b + rd) / mpmath.sqrt(r1) + (-2 * a - b + rd) / mpmath.sqrt(r2))
        return float(val)


# ---------------------------------------------------------------- exponential integral and loglinear

def _e1_series(x: float) -> float:
    total, term, j = 0.0, 1.0, 1
    while True:
        term *= -x / j
        add = -term / j
        total += add
        if abs(add) <= 1e-17 * abs(total) or j > 200:
            break
        j += 1
    return -EULER_GAMMA - math.log(x) + total


def _e1_scaled_cf(x: float) -> float:
    """exp(x) E1(x) by the modified Lentz continued fraction, valid for x >= 1."""
    tiny = 1e-300
    b = x + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10000):
        an = -float(i * i)
        b += 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) <= 1e-16:
            return h
    raise ValueError("E1 continued fraction did not converge")


def exp_integral_e1(x):
    """E1(x) for x > 0 (power series below 1, continued fraction from 1 on)."""
    xs = np.asarray(x, dtype=float)
    if np.any(~(xs > 0)):
        raise ValueError("E1 needs x > 0")
    out = np.vectorize(lambda v: _e1_series(v) if v < 1 else math.exp(-v) * _e1_scaled_cf(v))(xs)
    return float(out) if out.ndim == 0 else out


def exp_integral_e1_scaled(x):
    """exp(x) E1(x); finite for arbitrarily large x."""
    xs = np.asarray(x, dtype=float)
    if np.any(~(xs > 0)):
        raise ValueError("E1 needs x > 0")
    out = np.vectorize(lambda v: math.exp(v) * _e1_series(v) if v < 1 else _e1_scaled_cf(v))(xs)
    return float(out) if out.ndim == 0 else out


def e1_bounds(x):
    x = np.asarray(x, dtype=float)
    lower = 0.5 * np.exp(-x) * np.log1p(2 / x)
    upper = np.exp(-x) * np.log1p(1 / x)
    return lower, upper


def log_runtime_numeric(n, k, g) -> float:
    return general_runtime(Nonlinearity("loglinear", g), n, k)


def log_runtime_bounds(n, k, g) -> dict:
    """Closed-form bounds on the loglinear runtime.

    ``lower`` and ``lower_elementary`` are the closed-form lower-bound expressions;
    both subtract the tail term.  ``lower_split`` is the exact integral of the two
    split lower integrands (tail term added), which is tighter and still a lower bound.
    """
    if not g > 0:
        raise ValueError("need g > 0")
    if not 1 <= k < n / 2:
        raise ValueError("need 1 <= k < N/2")
    L = math.log((n - k) / k)
    L2 = math.log(2 * (n - k) / k)
    pre = n / (2 * math.sqrt(k))
    head = math.sqrt(2 * (n - 2 * k) / n) / (1 + g * L)
    z = (1 + g * L2) / (2 * g)
    # e^{1/(2g)} E1(z) = e^{1/(2g) - z} * (e^z E1(z)) = (2(N-k)/k)^{-1/2} e^z E1(z)
    tail = math.sqrt((n - k) / k) / g * math.sqrt(k / (2 * (n - k))) * exp_integral_e1_scaled(z)
    lower = pre / math.sqrt(n - k) * (head - tail)
    lower_split = pre / math.sqrt(n - k) * (head + tail)
    lower_elem = pre / math.sqrt(n - k) * (head - math.log1p(2 * g / (1 + g * L2)) / (math.sqrt(2) * g))
    upper_loose = pre * (2 * math.sqrt(n - 2 * k) / n + 2 / (math.sqrt(n - 2 * k) * (1 + g * L)))
    D = n - 2 * k + 2 * g * (n - k) * L
    q = 4 * g * k + n - 2 * g * n + g * n * L
    r = 1 + 2 * g + g * L
    t1 = -2 * math.sqrt(n - 2 * k) / (math.sqrt(n) * math.sqrt(D)) * math.atan(math.sqrt(n) / math.sqrt(D))
    t2 = math.pi / (math.sqrt(n - k) * math.sqrt(n)) * math.sqrt((n * n - 3 * k * n + 2 * k * k) / D)
    t3 = 2 * math.atan(math.sqrt(q) / (math.sqrt(n - 2 * k) * math.sqrt(r))) / (math.sqrt(r) * math.sqrt(q))
    upper_tight = pre * (t1 + t2 + t3)
    return {
        "lower": lower,
        "lower_elementary": lower_elem,
        "lower_split": lower_split,
        "upper_tight": upper_tight,
        "upper_loose": upper_loose,
    }


def log_width_lower_bound(n, k, g, epsilon: float = DEFAULT_EPSILON) -> float:
    """Scaling estimate sqrt(N/k) / (g log(N/(k eps))) of the loglinear peak width (lower-bound semantics)."""
    if not 0 < epsilon < 0.5:
        raise ValueError("epsilon must lie in (0, 1/2)")
    if not g > 0:
        raise ValueError("need g > 0")
    return float(math.sqrt(n / k) / (g * math.log(n / (k * epsilon))))


# ---------------------------------------------------------------- repulsive regime

def repulsive_stationary_points(n, k, G) -> dict:
    """Critical points 1/N (minimum), 1 (maximum) and (G-1)/(NG) (stationary) for one marked vertex."""
    if not G < 0:
        raise ValueError("repulsive regime needs G < 0")
    if k != 1:
        raise ValueError("stationary-point formula is for one marked vertex")
    x_stat = (G - 1) / (n * G)
    return {
        "x_min": 1.0 / n,
        "x_max": 1.0,
        "x_stat": x_stat,
        "blocking": bool(1.0 / n < x_stat < 1.0),
    }


# ---------------------------------------------------------------- strongly regular graphs

@dataclass(frozen=True)
class SrgPrediction:
    case: str
    gamma: float
    e_plus: float
    e_minus: float
    norm_A: float | None
    gap: float
    t_star: float
    amplitude: float
    n_vertices: int

    def predicted_prob(self, t):
        t = np.asarray(t, dtype=float)
        return self.amplitude * np.sin(0.5 * self.gap * t) ** 2


def srg_prediction(params: SrgParams, case: str = "auto") -> SrgPrediction:
    """Perturbative eigenstructure: case1 (k of order N, conference graphs) or case2 (k = o(N)).

    ``auto`` selects case1 for conference (Type I) parameters, case2 otherwise.
    """
    rep = srg_check(params)
    if not rep["feasible"]:
        raise ValueError("infeasible SRG parameters")
    n, k, lam, mu = params.as_tuple()
    if case == "auto":
        case = "case1" if rep["type"] == "TypeI" else "case2"
    if case == "case1":
        gamma = 1.0 / k
        gap = 2.0 / math.sqrt(n - 1)
        return SrgPrediction("case1", gamma, -1 + gap / 2, -1 - gap / 2, None, gap,
                             math.pi * math.sqrt(n - 1) / 2, 1.0, n)
    if case != "case2":
        raise ValueError("case must be 'auto', 'case1' or 'case2'")
    if mu == 0:
        raise ValueError("case2 needs mu > 0")
    gamma = 1.0 / k
    A = (1 + (k - lam + mu) ** 2 / k) ** -0.5
    split = gamma * A * math.sqrt(n / k) * mu
    gap = 2 * split
    amp = (A * mu * n / k**1.5) ** 2
    return SrgPrediction("case2", gamma, -gamma * k + split, -gamma * k - split, A, gap,
                         math.pi / gap, amp, n)


def srg_basis_transform(params: SrgParams) -> np.ndarray:
    """Orthogonal map from {w, a, b} to {w, r, e3}; its own inverse."""
    n, k = params.n_vertices, params.degree
    p, q = math.sqrt(k / (n - 1)), math.sqrt((n - k - 1) / (n - 1))
    return np.array([[1.0, 0.0, 0.0], [0.0, p, q], [0.0, q, -p]])


def suff_complete_probs(collapsed: CollapsedGraph, t):
    """Idealised class probabilities for a sufficiently complete graph (single marked vertex)."""
    if collapsed.class_sizes[0] != 1:
        raise ValueError("needs a single marked vertex")
    n = collapsed.n_vertices
    sizes = np.asarray(collapsed.class_sizes, dtype=float)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    cos2 = np.cos(t / np.sqrt(n)) ** 2
    out = np.outer(cos2, sizes / n)
    out[:, 0] = cos2 / n + np.sin(t / np.sqrt(n)) ** 2
    return out


def bloch_coords(c0, c1) -> tuple[float, float, float]:
    """Bloch vector with |w> at the north pole."""
    c0, c1 = complex(c0), complex(c1)
    norm = abs(c0) ** 2 + abs(c1) ** 2
    if abs(norm - 1) > 1e-8:
        raise ValueError("amplitudes must be normalised")
    z = abs(c0) ** 2 - abs(c1) ** 2
    xy = 2 * c0 * c1.conjugate()
    return (xy.real, xy.imag, z)


def table_csv(rows: list[dict]) -> str:
    out = ["N,k,g,t_star,width_exact,width_leading"]
    for r in rows:
        out.append(",".join(f"{r[c]:.12g}" for c in ("N", "k", "g", "t_star", "width_exact", "width_leading")))
    return "\n".join(out) + "\n"
