from __future__ import annotations

import json
import math

import numpy as np
import pytest

from nlqsearch.closedform import CompleteSearchParams, cubic_prob
from nlqsearch.dynamics import Controls, GammaPolicy, Nonlinearity, SearchConfig, find_gamma_numeric, integrate
from nlqsearch.graphs import FamilySpec, build_graph, collapse
from nlqsearch.oracle import compare, compare_report_json, full_integrate, within_class_spread

CTL = Controls(sample_dt=0.05)


def run_pair(spec, nl, policy, t_end, k=1):
    graph = build_graph(spec)
    marked = list(range(k))
    cfg = SearchConfig(spec.family, spec.size_param, k, nl, policy, CTL)
    red = integrate(cfg, t_end)
    full = full_integrate(graph, marked, nl, policy, t_end, CTL)
    classes = collapse(graph, marked).classes
    return full, red, classes


def complete_policy(n, kind):
    return GammaPolicy("fixed", {"gamma0": 1 / n}) if kind == "linear" else GammaPolicy("general_critical")


COMPLETE_G = {"linear": 0.0, "cubic": None, "cubic_quintic": 5.0, "loglinear": 0.5}


@pytest.mark.parametrize("n", [8, 64])
@pytest.mark.parametrize("kind", ["linear", "cubic", "cubic_quintic", "loglinear"])
def test_complete_graph_equivalence(n, kind):
    g = COMPLETE_G[kind] if COMPLETE_G[kind] is not None else float(n - 1)
    full, red, classes = run_pair(FamilySpec("complete", n), Nonlinearity(kind, g), complete_policy(n, kind),
                                  1.3 * math.pi * math.sqrt(n) / 2)
    assert compare(full, red, classes)["max_abs_dev"] <= 1e-6
    assert within_class_spread(full, classes) <= 1e-12


def test_complete_graph_multiple_marked():
    n, k = 64, 3
    full, red, classes = run_pair(FamilySpec("complete", n), Nonlinearity("cubic", 10.0),
                                  GammaPolicy("cubic_critical"), 8.0, k=k)
    assert compare(full, red, classes)["max_abs_dev"] <= 1e-6


def _srg_policy(spec):
    if spec.family == "hypercube":
        cfg = SearchConfig("hypercube", spec.size_param)
        return GammaPolicy("fixed", {"gamma0": find_gamma_numeric(cfg.collapsed())})
    return GammaPolicy("srg_c1")


@pytest.mark.parametrize("spec", [
    FamilySpec("petersen"),
    FamilySpec("paley", 13),
    FamilySpec("square_lattice", 3),
    FamilySpec("triangular", 4),
    FamilySpec("hypercube", 3),
    FamilySpec("hypercube", 4),
], ids=lambda s: f"{s.family}-{s.size_param}")
@pytest.mark.parametrize("kind", ["linear", "cubic"])
def test_structured_graph_equivalence(spec, kind):
    nl = Nonlinearity(kind, 0.0 if kind == "linear" else 1.0)
    full, red, classes = run_pair(spec, nl, _srg_policy(spec), 15.0)
    rep = compare(full, red, classes)
    assert rep["max_abs_dev"] <= 1e-6
    assert within_class_spread(full, classes) <= 1e-10


def test_petersen_linear_symmetry_classes():
    graph = build_graph(FamilySpec("petersen"))
    full = full_integrate(graph, [0], Nonlinearity(), GammaPolicy("fixed", {"gamma0": 1 / 3}), 10.0, CTL)
    a = np.asarray(graph.adjacency)
    near = np.flatnonzero(a[0])
    far = np.setdiff1d(np.arange(1, 10), near)
    assert len(near) == 3 and len(far) == 6
    assert np.ptp(full.probs[:, near], axis=1).max() <= 1e-12
    assert np.ptp(full.probs[:, far], axis=1).max() <= 1e-12


def test_complete_eight_cubic_matches_closed_form():
    n = 8
    graph = build_graph(FamilySpec("complete", n))
    nl = Nonlinearity("cubic", float(n - 1))
    full = full_integrate(graph, [0], nl, GammaPolicy("cubic_critical"), 3.0, CTL)
    expected = cubic_prob(CompleteSearchParams(n, 1, n - 1), full.t)
    assert np.max(np.abs(full.probs[:, 0] - expected)) <= 1e-6


def test_compare_identical_and_report():
    cfg = SearchConfig("complete", 8, 1, policy=GammaPolicy("fixed", {"gamma0": 1 / 8}), controls=CTL)
    red = integrate(cfg, 2.0)
    graph = build_graph(FamilySpec("complete", 8))
    classes = collapse(graph, [0]).classes
    full = full_integrate(graph, [0], Nonlinearity(), GammaPolicy("fixed", {"gamma0": 1 / 8}), 2.0, CTL)
    rep = compare(full, red, classes)
    assert json.loads(compare_report_json(rep)) == rep
    # a reduced run compared with itself, expanded back to vertices, gives zero
    expanded = full.__class__(red.t, np.column_stack([red.probs[:, 0]] + [red.probs[:, 1] / 7] * 7),
                              red.gamma, red.norm_err)
    assert compare(expanded, red, classes)["max_abs_dev"] == pytest.approx(0.0, abs=1e-15)


def test_oracle_errors():
    graph = build_graph(FamilySpec("complete", 8))
    with pytest.raises(ValueError):
        full_integrate(graph, [], Nonlinearity(), GammaPolicy("fixed", {"gamma0": 0.1}), 1.0)
    with pytest.raises(ValueError):
        full_integrate(graph, [9], Nonlinearity(), GammaPolicy("fixed", {"gamma0": 0.1}), 1.0)
    with pytest.raises(ValueError):
        full_integrate(graph, [0], Nonlinearity(), GammaPolicy("fixed", {"gamma0": 0.1}), 1.0, mode="bogus")
    cfg = SearchConfig("complete", 8, 1, policy=GammaPolicy("fixed", {"gamma0": 1 / 8}), controls=CTL)
    red = integrate(cfg, 2.0)
    full = full_integrate(graph, [0], Nonlinearity(), GammaPolicy("fixed", {"gamma0": 1 / 8}), 1.0, CTL)
    with pytest.raises(ValueError):
        compare(full, red, collapse(graph, [0]).classes)
