"""Reduced-subspace nonlinear Schrodinger search dynamics.

The state is a vector of class amplitudes c_i (marked class first).  The
equation of motion is dc/dt = -i [H0(gamma) - V(c)] c with the self-potential
V_i = g f(|c_i|^2 / |m_i|) and gamma re-evaluated from the current stage state.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq, minimize_scalar

from .graphs import (
    CollapsedGraph,
    FamilySpec,
    SrgParams,
    collapse_analytic,
    family_params,
    srg_check,
)

NONLINEARITIES = ("linear", "cubic", "cubic_quintic", "loglinear", "custom")
POLICIES = (
    "fixed",
    "cubic_critical",
    "general_critical",
    "srg_c1",
    "srg_c2",
    "srg_c2_prime",
    "suff_complete_critical",
    "numeric_table",
)
LOG_FLOOR = 1e-300
# Controls.rel_tol / abs_tol are targets for the whole run (norm drift included);
# the embedded 5(4) pair is driven with local tolerances this many times tighter
# because its per-step errors accumulate over many oscillation periods.
LOCAL_TOL_FACTOR = 20.0


class IntegrationError(RuntimeError):
    """Raised when the integrator cannot continue (step underflow or non-finite state)."""


@dataclass(frozen=True)
class Nonlinearity:
    kind: str = "linear"
    g: float = 0.0
    custom_f: Callable | None = field(default=None, compare=False, repr=False)
    custom_f_prime: Callable | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in NONLINEARITIES:
            raise ValueError(f"unknown nonlinearity {self.kind!r}")
        if not np.isfinite(self.g):
            raise ValueError("g must be finite")
        if self.kind == "custom" and self.custom_f is None:
            raise ValueError("custom nonlinearity needs custom_f")

    def f(self, p):
        p = np.asarray(p, dtype=float)
        if self.kind == "linear":
            return np.zeros_like(p)
        if self.kind == "cubic":
            return p
        if self.kind == "cubic_quintic":
            return p - p * p
        if self.kind == "loglinear":
            return np.log(np.maximum(p, LOG_FLOOR))
        return np.asarray(self.custom_f(p), dtype=float)

    def f_prime(self, p):
        p = np.asarray(p, dtype=float)
        if self.kind == "linear":
            return np.zeros_like(p)
        if self.kind == "cubic":
            return np.ones_like(p)
        if self.kind == "cubic_quintic":
            return 1.0 - 2.0 * p
        if self.kind == "loglinear":
            return 1.0 / np.maximum(p, LOG_FLOOR)
        if self.custom_f_prime is None:
            raise ValueError("custom nonlinearity has no derivative")
        return np.asarray(self.custom_f_prime(p), dtype=float)


@dataclass(frozen=True)
class GammaPolicy:
    kind: str = "fixed"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in POLICIES:
            raise ValueError(f"unknown gamma policy {self.kind!r}")
        if self.kind == "fixed" and "gamma0" not in self.params:
            raise ValueError("fixed policy needs params['gamma0']")
        if self.kind == "suff_complete_critical" and "gamma_L" not in self.params:
            raise ValueError("suff_complete_critical needs params['gamma_L']")
        if self.kind == "numeric_table":
            t = np.asarray(self.params.get("t", []), dtype=float)
            g = np.asarray(self.params.get("gamma", []), dtype=float)
            if t.size < 1 or t.shape != g.shape or np.any(np.diff(t) <= 0):
                raise ValueError("numeric_table needs increasing params['t'] and matching params['gamma']")


@dataclass(frozen=True)
class Controls:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = np.inf
    sample_dt: float = 0.01

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0 and self.sample_dt > 0 and self.max_step > 0):
            raise ValueError("controls must be positive")


@dataclass(frozen=True)
class SearchConfig:
    family: str
    size_param: int | None = None
    marked_count: int = 1
    nonlinearity: Nonlinearity = field(default_factory=Nonlinearity)
    policy: GammaPolicy = field(default_factory=lambda: GammaPolicy("fixed", {"gamma0": 0.0}))
    controls: Controls = field(default_factory=Controls)
    srg: tuple[int, int, int, int] | None = None
    hamiltonian_mode: str = "auto"

    def srg_params(self) -> SrgParams | None:
        if self.family == "srg":
            return SrgParams(*self.srg)
        if self.family in ("complete", "hypercube"):
            return None
        return family_params(FamilySpec(self.family, self.size_param))

    def collapsed(self) -> CollapsedGraph:
        if self.family == "srg":
            if self.srg is None:
                raise ValueError("family 'srg' needs srg=(N,k,lambda,mu)")
            return collapse_analytic(SrgParams(*self.srg), self.marked_count)
        return collapse_analytic(FamilySpec(self.family, self.size_param), self.marked_count)

    def to_dict(self) -> dict:
        c = asdict(self.controls)
        return {
            "family": self.family,
            "size_param": self.size_param,
            "srg": list(self.srg) if self.srg else None,
            "marked_count": self.marked_count,
            "nonlinearity": {"kind": self.nonlinearity.kind, "g": self.nonlinearity.g},
            "policy": {"kind": self.policy.kind, "params": _jsonable(self.policy.params)},
            "tolerances": c,
            "hamiltonian_mode": self.hamiltonian_mode,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "SearchConfig":
        tol = d.get("tolerances", {})
        return cls(
            family=d["family"],
            size_param=d.get("size_param"),
            marked_count=int(d.get("marked_count", 1)),
            nonlinearity=Nonlinearity(d["nonlinearity"]["kind"], float(d["nonlinearity"]["g"])),
            policy=GammaPolicy(d["policy"]["kind"], dict(d["policy"].get("params", {}))),
            controls=Controls(**{k: float(v) for k, v in tol.items()}),
            srg=tuple(d["srg"]) if d.get("srg") else None,
            hamiltonian_mode=d.get("hamiltonian_mode", "auto"),
        )

    @classmethod
    def from_json(cls, text: str) -> "SearchConfig":
        return cls.from_dict(json.loads(text))

    def hash(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


@dataclass(frozen=True)
class SubspaceState:
    t: float
    c: np.ndarray


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    probs: np.ndarray
    gamma: np.ndarray
    norm_err: np.ndarray
    config_hash: str = ""
    amplitudes: np.ndarray | None = field(default=None, repr=False, compare=False)
    dense: Callable | None = field(default=None, repr=False, compare=False)

    @property
    def success(self) -> np.ndarray:
        return self.probs[:, 0]

    def to_csv(self) -> str:
        m = self.probs.shape[1]
        header = ["t"] + [f"p{i}" for i in range(m)] + ["gamma", "norm_err"]
        rows = [",".join(header)]
        for i in range(len(self.t)):
            vals = [self.t[i], *self.probs[i], self.gamma[i], self.norm_err[i]]
            rows.append(",".join(f"{v:.12g}" for v in vals))
        return "\n".join(rows) + "\n"


def initial_state(collapsed: CollapsedGraph) -> np.ndarray:
    sizes = np.asarray(collapsed.class_sizes, dtype=float)
    return np.sqrt(sizes / sizes.sum()).astype(complex)


def _use_projector(collapsed: CollapsedGraph, mode: str) -> bool:
    if mode not in ("auto", "projector", "adjacency"):
        raise ValueError(f"unknown hamiltonian mode {mode!r}")
    if mode == "auto":
        return bool(collapsed.complete)
    return mode == "projector"


def walk_operator(collapsed: CollapsedGraph, mode: str = "auto") -> np.ndarray:
    """Matrix multiplying -gamma in H0: N|s><s| (complete-graph mode) or the reduced adjacency."""
    if _use_projector(collapsed, mode):
        s = np.sqrt(np.asarray(collapsed.class_sizes, dtype=float))
        return np.outer(s, s)
    return np.array(collapsed.reduced_adjacency, dtype=float)


def oracle_operator(collapsed: CollapsedGraph) -> np.ndarray:
    m = len(collapsed.class_sizes)
    o = np.zeros((m, m))
    idx = np.arange(collapsed.n_marked_classes)
    o[idx, idx] = 1.0
    return o


def hamiltonian(collapsed: CollapsedGraph, gamma: float, mode: str = "auto") -> np.ndarray:
    """-gamma * (walk operator) - oracle, degree term dropped."""
    if not np.isfinite(gamma):
        raise ValueError("gamma must be finite")
    return -gamma * walk_operator(collapsed, mode) - oracle_operator(collapsed)


def self_potential(c, collapsed: CollapsedGraph, nl: Nonlinearity) -> np.ndarray:
    if isinstance(c, SubspaceState):
        c = c.c
    sizes = np.asarray(collapsed.class_sizes, dtype=float)
    p = np.abs(np.asarray(c)) ** 2 / sizes
    if nl.kind == "linear" or nl.g == 0:
        return np.zeros(len(sizes))
    return nl.g * nl.f(p)


def _require_two_class(collapsed: CollapsedGraph, kind: str) -> tuple[int, int]:
    if len(collapsed.class_sizes) != 2 or not collapsed.complete:
        raise ValueError(f"policy {kind} applies only to the complete graph")
    k = collapsed.class_sizes[0]
    return collapsed.n_vertices, k


def gamma_value(
    policy: GammaPolicy,
    c: np.ndarray,
    t: float,
    collapsed: CollapsedGraph,
    nl: Nonlinearity,
    srg: SrgParams | None = None,
) -> float:
    """Jumping rate for the current state; a pure function of its arguments."""
    kind, prm = policy.kind, policy.params
    if kind == "fixed":
        return float(prm["gamma0"])
    if kind == "numeric_table":
        return float(np.interp(t, prm["t"], prm["gamma"]))
    if kind == "cubic_critical":
        n, k = _require_two_class(collapsed, kind)
        a2, b2 = abs(c[0]) ** 2, abs(c[1]) ** 2
        big_g = nl.g / (k * (n - k))
        delta = (n - k) * a2 - k * b2
        return (1.0 + big_g * delta) / n
    if kind == "general_critical":
        n, k = _require_two_class(collapsed, kind)
        fa, fb = nl.f(np.abs(c[:2]) ** 2 / np.array([k, n - k], dtype=float))
        return (1.0 + nl.g * (fa - fb)) / n
    if kind == "suff_complete_critical":
        sizes = np.asarray(collapsed.class_sizes[:2], dtype=float)
        f0, f1 = nl.f(np.abs(c[:2]) ** 2 / sizes)
        return float(prm["gamma_L"]) * (1.0 + nl.g * f0 - nl.g * f1)
    # SRG policies
    if srg is None or len(collapsed.class_sizes) != 3:
        raise ValueError(f"policy {kind} needs strongly regular parameters")
    n, k, _, mu = srg.as_tuple()
    if kind == "srg_c1":
        return 1.0 / k
    if kind == "srg_c2":
        if mu == 0:
            raise ValueError("srg_c2 needs mu > 0")
        return 1.0 / k + 1.0 / ((n - 1) * mu)
    if k == mu:
        raise ValueError("srg_c2_prime needs k != mu")
    return 1.0 / (k - mu)


def gamma_eval(policy: GammaPolicy, state: SubspaceState, config: SearchConfig) -> float:
    return gamma_value(policy, np.asarray(state.c), state.t, config.collapsed(), config.nonlinearity, config.srg_params())


def make_rhs(collapsed, nl, policy, srg=None, mode="auto"):
    """Right-hand side dc/dt of the reduced equation of motion."""
    walk = walk_operator(collapsed, mode)
    oracle = oracle_operator(collapsed)
    sizes = np.asarray(collapsed.class_sizes, dtype=float)
    nonlinear = nl.kind != "linear" and nl.g != 0

    def rhs(t, c):
        if not np.all(np.isfinite(c)):
            raise IntegrationError(f"non-finite state at t={t:.6g}")
        gamma = gamma_value(policy, c, t, collapsed, nl, srg)
        hc = -gamma * (walk @ c) - oracle @ c
        if nonlinear:
            hc = hc - nl.g * nl.f(np.abs(c) ** 2 / sizes) * c
        return -1j * hc

    return rhs


def sample_times(t_end: float, dt: float) -> np.ndarray:
    n = int(np.floor(t_end / dt + 1e-9))
    return dt * np.arange(n + 1)


def run_ode(rhs, c0, t_end, controls: Controls, dense: bool = False):
    ts = sample_times(t_end, controls.sample_dt)
    try:
        sol = solve_ivp(
            rhs,
            (0.0, float(t_end)),
            np.asarray(c0, dtype=complex),
            method="RK45",
            t_eval=ts,
            rtol=controls.rel_tol / LOCAL_TOL_FACTOR,
            atol=controls.abs_tol / LOCAL_TOL_FACTOR,
            max_step=controls.max_step,
            dense_output=dense,
        )
    except FloatingPointError as exc:  # pragma: no cover - numpy errstate dependent
        raise IntegrationError(str(exc)) from exc
    if sol.status != 0:
        raise IntegrationError(f"integration failed at t={sol.t[-1] if sol.t.size else 0:.6g}: {sol.message}")
    if not np.all(np.isfinite(sol.y)):
        raise IntegrationError("non-finite amplitudes in output")
    return ts, sol.y.T, (sol.sol if dense else None)


def integrate(config: SearchConfig, t_end: float, controls: Controls | None = None, dense: bool = False) -> Trajectory:
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    controls = controls or config.controls
    collapsed = config.collapsed()
    srg = config.srg_params()
    if srg is not None and not srg_check(srg)["feasible"]:
        raise ValueError("infeasible strongly regular parameters")
    nl, policy = config.nonlinearity, config.policy
    rhs = make_rhs(collapsed, nl, policy, srg, config.hamiltonian_mode)
    ts, amps, sol = run_ode(rhs, initial_state(collapsed), t_end, controls, dense)
    probs = np.abs(amps) ** 2
    gammas = np.array([gamma_value(policy, amps[i], ts[i], collapsed, nl, srg) for i in range(len(ts))])
    norm_err = np.abs(probs.sum(axis=1) - 1.0)
    return Trajectory(ts, probs, gammas, norm_err, config.hash(), amps, sol)


def first_peak(traj: Trajectory, column: int = 0, rel_height: float = 0.5) -> tuple[float, float]:
    """First local maximum of a probability column reaching rel_height of the global maximum.

    The sample maximum is refined on the dense interpolant when one is attached,
    otherwise by a parabola through the three neighbouring samples.
    """
    p = traj.probs[:, column]
    t = traj.t
    if len(p) < 3:
        raise ValueError("trajectory too short")
    cut = rel_height * p.max()
    idx = None
    for i in range(1, len(p) - 1):
        if p[i] >= cut and p[i] >= p[i - 1] and p[i] >= p[i + 1]:
            idx = i
            break
    if idx is None:
        i = int(np.argmax(p))
        return float(t[i]), float(p[i])
    if traj.dense is not None:
        res = minimize_scalar(
            lambda s: -abs(traj.dense(s)[column]) ** 2,
            bounds=(t[idx - 1], t[idx + 1]),
            method="bounded",
            options={"xatol": 1e-12},
        )
        if -res.fun >= p[idx]:
            return float(res.x), float(-res.fun)
        return float(t[idx]), float(p[idx])
    y0, y1, y2 = p[idx - 1], p[idx], p[idx + 1]
    denom = y0 - 2 * y1 + y2
    if denom >= 0:
        return float(t[idx]), float(y1)
    h = t[idx + 1] - t[idx]
    off = 0.5 * (y0 - y2) / denom
    return float(t[idx] + off * h), float(y1 - 0.25 * (y0 - y2) * off)


def measure_width(config: SearchConfig, epsilon: float = 0.01, t_end: float | None = None,
                  controls: Controls | None = None) -> dict:
    """Width of the first success peak at height 1 - epsilon, by root bracketing on the dense trajectory."""
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if t_end is None:
        n = config.collapsed().n_vertices
        t_end = 1.6 * np.pi * np.sqrt(n) / 2
    traj = integrate(config, t_end, controls, dense=True)
    t_pk, p_pk = first_peak(traj)
    level = 1.0 - epsilon
    if p_pk < level:
        raise ValueError(f"peak height {p_pk:.6g} never reaches 1 - epsilon")
    p = traj.success
    t = traj.t

    def h(s):
        return abs(traj.dense(s)[0]) ** 2 - level

    below_left = np.flatnonzero((t < t_pk) & (p < level))
    below_right = np.flatnonzero((t > t_pk) & (p < level))
    if below_left.size == 0 or below_right.size == 0:
        raise ValueError("peak is not bracketed inside the integration window; increase t_end")
    t_lo = brentq(h, t[below_left[-1]], t_pk, xtol=1e-13, rtol=1e-14)
    t_hi = brentq(h, t_pk, t[below_right[0]], xtol=1e-13, rtol=1e-14)
    return {"t_peak": t_pk, "p_peak": p_pk, "t_left": t_lo, "t_right": t_hi, "width": t_hi - t_lo}


def _golden(fun, lo, hi, tol=1e-13, max_iter=200):
    inv = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - inv * (b - a), a + inv * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(max_iter):
        if b - a <= tol * max(1.0, abs(a) + abs(b)):
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv * (b - a)
            fd = fun(d)
    return 0.5 * (a + b)


def overlap_balance(collapsed: CollapsedGraph, gamma: float) -> float:
    from .spectral import eig_sym

    sizes = np.asarray(collapsed.class_sizes, dtype=float)
    s = np.sqrt(sizes / sizes.sum())
    _, vecs = eig_sym(hamiltonian(collapsed, gamma))
    ov = (s @ vecs[:, :2]) ** 2
    return float(abs(ov[0] - ov[1]))


def find_gamma_numeric(collapsed: CollapsedGraph, gamma_range=None, n_grid: int = 400) -> float:
    """Jumping rate where the two lowest eigenvectors overlap |s> equally (grid, then golden section)."""
    if gamma_range is None:
        deg = collapsed.degree or max(collapsed.n_vertices - 1, 1)
        gamma_range = (1e-6, 2.0 / deg)
    lo, hi = float(gamma_range[0]), float(gamma_range[1])
    if not 0 < lo < hi:
        raise ValueError("gamma_range must satisfy 0 < lo < hi")
    if n_grid < 3:
        raise ValueError("n_grid must be at least 3")
    grid = np.linspace(lo, hi, n_grid)
    vals = np.array([overlap_balance(collapsed, g) for g in grid])
    i = int(np.argmin(vals))
    if i in (0, n_grid - 1):
        warnings.warn("no overlap crossing inside gamma_range; returning the boundary", RuntimeWarning)
        return float(grid[i])
    return _golden(lambda g: overlap_balance(collapsed, g), grid[i - 1], grid[i + 1])
