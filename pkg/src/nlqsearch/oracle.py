"""Brute-force integration in the full N-dimensional vertex basis, used to check the reduced dynamics."""

from __future__ import annotations

import json

import numpy as np

from .dynamics import (
    CollapsedGraph,
    Controls,
    GammaPolicy,
    Nonlinearity,
    Trajectory,
    gamma_value,
    run_ode,
)
from .graphs import Graph

MAX_FULL_VERTICES = 5000


def _is_complete(a: np.ndarray) -> bool:
    n = a.shape[0]
    return int(a.sum()) == n * (n - 1)


def _gamma_classes(a: np.ndarray, marked: np.ndarray) -> list[np.ndarray]:
    """Marked set, its neighbours, and everything else (empty classes dropped)."""
    n = a.shape[0]
    is_m = np.zeros(n, dtype=bool)
    is_m[marked] = True
    near = (a[marked].sum(axis=0) > 0) & ~is_m
    rest = ~is_m & ~near
    return [np.flatnonzero(c) for c in (is_m, near, rest) if c.any()]


def full_integrate(
    graph: Graph,
    marked,
    nl: Nonlinearity,
    policy: GammaPolicy,
    t_end: float,
    controls: Controls | None = None,
    mode: str = "auto",
) -> Trajectory:
    """Integrate i dpsi/dt = [-gamma A' - sum_marked |x><x| - g sum_i f(|psi_i|^2)|i><i|] psi.

    A' is the all-ones matrix N|s><s| in complete-graph mode, the adjacency otherwise.
    The jumping rate is evaluated from the per-class probabilities of the full state.
    """
    controls = controls or Controls()
    a = np.asarray(graph.adjacency, dtype=float)
    n = a.shape[0]
    if n > MAX_FULL_VERTICES:
        raise ValueError(f"full integration limited to N <= {MAX_FULL_VERTICES}")
    marked = np.array(sorted(set(int(v) for v in marked)))
    if marked.size == 0 or marked[0] < 0 or marked[-1] >= n:
        raise ValueError("invalid marked set")
    complete = _is_complete(a)
    if mode == "auto":
        projector = complete
    elif mode in ("projector", "adjacency"):
        projector = mode == "projector"
    else:
        raise ValueError(f"unknown hamiltonian mode {mode!r}")

    classes = _gamma_classes(a, marked)
    if complete:
        classes = [classes[0], np.setdiff1d(np.arange(n), marked)]
    sizes = tuple(len(c) for c in classes)
    # Stand-in carrying only what gamma_value reads: class sizes and graph type.
    meta = CollapsedGraph(sizes, np.zeros((len(sizes), len(sizes))), complete=complete)
    srg = graph.params
    nonlinear = nl.kind != "linear" and nl.g != 0

    def class_amps(psi):
        probs = np.array([np.sum(np.abs(psi[c]) ** 2) for c in classes])
        return np.sqrt(probs)

    def rhs(t, psi):
        gamma = gamma_value(policy, class_amps(psi), t, meta, nl, srg)
        walk = np.full(n, psi.sum()) if projector else a @ psi
        hpsi = -gamma * walk
        hpsi[marked] -= psi[marked]
        if nonlinear:
            hpsi = hpsi - nl.g * nl.f(np.abs(psi) ** 2) * psi
        return -1j * hpsi

    psi0 = np.full(n, 1 / np.sqrt(n), dtype=complex)
    ts, amps, _ = run_ode(rhs, psi0, t_end, controls)
    probs = np.abs(amps) ** 2
    gammas = np.array([gamma_value(policy, class_amps(amps[i]), ts[i], meta, nl, srg) for i in range(len(ts))])
    return Trajectory(ts, probs, gammas, np.abs(probs.sum(axis=1) - 1), "full", amps)


def compare(full: Trajectory, reduced: Trajectory, classes) -> dict:
    """Aggregate per-vertex probabilities into classes and report deviations from the reduced run."""
    if full.t.shape != reduced.t.shape or np.max(np.abs(full.t - reduced.t), initial=0.0) > 1e-12:
        raise ValueError("trajectories must share sample times")
    if len(classes) != reduced.probs.shape[1]:
        raise ValueError("class count does not match the reduced trajectory")
    agg = np.column_stack([full.probs[:, list(c)].sum(axis=1) for c in classes])
    dev = np.abs(agg - reduced.probs).max(axis=0)
    return {"max_abs_dev": float(dev.max()), "per_class_dev": [float(d) for d in dev]}


def within_class_spread(full: Trajectory, classes) -> float:
    """Largest difference between per-vertex probabilities inside one class (zero by symmetry)."""
    return float(max(np.ptp(full.probs[:, list(c)], axis=1).max() for c in classes))


def compare_report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True)
