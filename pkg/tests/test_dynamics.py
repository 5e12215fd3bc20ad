from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlqsearch.closedform import CompleteSearchParams, cubic_prob, cubic_runtime, linear_prob
from nlqsearch.dynamics import (
    Controls,
    GammaPolicy,
    IntegrationError,
    Nonlinearity,
    SearchConfig,
    SubspaceState,
    find_gamma_numeric,
    first_peak,
    gamma_eval,
    gamma_value,
    hamiltonian,
    initial_state,
    integrate,
    measure_width,
    run_ode,
    self_potential,
)
from nlqsearch.graphs import FamilySpec, SrgParams, build_graph, collapse, collapse_analytic, complete_collapsed
from nlqsearch.spectral import eig_sym


def complete_cfg(n, nl="linear", g=0.0, policy=None, k=1, **ctl):
    policy = policy or GammaPolicy("fixed", {"gamma0": 1 / n})
    return SearchConfig("complete", n, k, Nonlinearity(nl, g), policy, Controls(**ctl))


# ---------------------------------------------------------------- nonlinearities and potentials

def test_nonlinearity_library():
    p = np.array([0.25, 1.0])
    assert np.all(Nonlinearity("linear").f(p) == 0)
    assert np.allclose(Nonlinearity("cubic").f(p), p)
    assert np.allclose(Nonlinearity("cubic_quintic").f(p), p - p**2)
    assert np.allclose(Nonlinearity("loglinear").f(p), np.log(p))
    assert np.isfinite(Nonlinearity("loglinear").f(0.0))
    assert np.allclose(Nonlinearity("cubic_quintic").f_prime(p), 1 - 2 * p)
    custom = Nonlinearity("custom", 2.0, custom_f=np.sin, custom_f_prime=np.cos)
    assert np.allclose(custom.f(p), np.sin(p))


@pytest.mark.parametrize("kwargs", [{"kind": "quartic"}, {"kind": "cubic", "g": math.nan}, {"kind": "custom"}])
def test_bad_nonlinearity(kwargs):
    with pytest.raises(ValueError):
        Nonlinearity(**kwargs)


def test_self_potential_examples():
    cg = complete_collapsed(10, 1)
    c = np.array([0.6, 0.8j])
    assert np.all(self_potential(c, cg, Nonlinearity("linear")) == 0)
    v = self_potential(c, cg, Nonlinearity("cubic", 3.0))
    assert v == pytest.approx([3.0 * 0.36, 3.0 * 0.64 / 9])
    cg4 = complete_collapsed(4, 1)
    v = self_potential(SubspaceState(0.0, initial_state(cg4)), cg4, Nonlinearity("cubic", 1.0))
    assert v == pytest.approx([0.25, 0.25])


# ---------------------------------------------------------------- hamiltonian

def test_hamiltonian_oracle_only():
    vals, _ = eig_sym(hamiltonian(complete_collapsed(16, 1), 0.0))
    assert vals == pytest.approx([-1, 0], abs=1e-15)


def test_hamiltonian_complete_gap():
    n = 1024
    vals, _ = eig_sym(hamiltonian(complete_collapsed(n, 1), 1 / n))
    assert vals[1] - vals[0] == pytest.approx(2 / math.sqrt(n), rel=1e-3)


def test_hamiltonian_projector_vs_adjacency_shift():
    cg = complete_collapsed(12, 3)
    gamma = 0.07
    diff = hamiltonian(cg, gamma, "adjacency") - hamiltonian(cg, gamma, "projector")
    assert np.allclose(diff, gamma * np.eye(2), atol=1e-14)


def test_hamiltonian_petersen_explicit():
    k, lam, mu, gamma = 3, 0, 1, 1 / 3
    cg = collapse(build_graph(FamilySpec("petersen")), [0])
    n = 10
    expected = -gamma * np.array([
        [0, math.sqrt(k), 0],
        [math.sqrt(k), lam, math.sqrt((k - lam - 1) * mu)],
        [0, math.sqrt((k - lam - 1) * mu), k - mu],
    ]) - np.diag([1, 0, 0])
    assert (k - lam - 1) * k == (n - k - 1) * mu
    assert np.allclose(hamiltonian(cg, gamma), expected, atol=1e-15)


def test_hamiltonian_rejects_nonfinite_gamma():
    with pytest.raises(ValueError):
        hamiltonian(complete_collapsed(4, 1), math.inf)


# ---------------------------------------------------------------- gamma policies

def test_gamma_policy_examples():
    n = 50
    cfg = complete_cfg(n, "cubic", 0.0, GammaPolicy("general_critical"))
    rng = np.random.default_rng(0)
    for _ in range(5):
        c = rng.normal(size=2) + 1j * rng.normal(size=2)
        c /= np.linalg.norm(c)
        assert gamma_eval(cfg.policy, SubspaceState(0.0, c), cfg) == pytest.approx(1 / n, rel=1e-15)
    cfg = complete_cfg(n, "cubic", 7.0, GammaPolicy("cubic_critical"))
    c0 = initial_state(cfg.collapsed())
    assert gamma_eval(cfg.policy, SubspaceState(0.0, c0), cfg) == pytest.approx(1 / n, rel=1e-14)


def test_srg_policies_by_substitution():
    cfg = SearchConfig("srg", None, 1, Nonlinearity(), GammaPolicy("srg_c2"), srg=(900, 87, 30, 6))
    c = initial_state(cfg.collapsed())
    val = gamma_eval(cfg.policy, SubspaceState(0.0, c), cfg)
    assert val == pytest.approx(1 / 87 + 1 / (899 * 6), rel=1e-15)
    assert val == pytest.approx(0.0116796, abs=5e-8)
    c1 = SearchConfig("srg", None, 1, Nonlinearity(), GammaPolicy("srg_c1"), srg=(900, 87, 30, 6))
    assert gamma_eval(c1.policy, SubspaceState(0.0, c), c1) == pytest.approx(1 / 87)
    c2p = SearchConfig("srg", None, 1, Nonlinearity(), GammaPolicy("srg_c2_prime"), srg=(900, 87, 30, 6))
    assert gamma_eval(c2p.policy, SubspaceState(0.0, c), c2p) == pytest.approx(1 / 81)


def test_numeric_table_and_suff_complete():
    cg = complete_collapsed(16, 1)
    pol = GammaPolicy("numeric_table", {"t": [0.0, 1.0], "gamma": [0.1, 0.3]})
    assert gamma_value(pol, np.array([1, 0]), 0.5, cg, Nonlinearity()) == pytest.approx(0.2)
    pol = GammaPolicy("suff_complete_critical", {"gamma_L": 0.5})
    c = np.array([math.sqrt(0.5), math.sqrt(0.5)])
    nl = Nonlinearity("cubic", 2.0)
    expected = 0.5 * (1 + 2.0 * 0.5 - 2.0 * 0.5 / 15)
    assert gamma_value(pol, c, 0.0, cg, nl) == pytest.approx(expected)


@settings(max_examples=200, deadline=None)
@given(
    st.integers(3, 5000),
    st.integers(1, 50),
    st.floats(-50, 1e4),
    st.floats(0, 2 * math.pi),
    st.floats(0, 1),
)
def test_cubic_and_general_critical_agree(n, k, g, phase, a2):
    k = min(k, n - 1)
    cg = complete_collapsed(n, k)
    c = np.array([math.sqrt(a2), math.sqrt(1 - a2) * np.exp(1j * phase)])
    nl = Nonlinearity("cubic", g)
    a = gamma_value(GammaPolicy("cubic_critical"), c, 0.0, cg, nl)
    b = gamma_value(GammaPolicy("general_critical"), c, 0.0, cg, nl)
    assert a == pytest.approx(b, rel=1e-14, abs=1e-14 * (1 + abs(g)) / n)


def test_policy_graph_mismatch():
    cg = collapse_analytic(SrgParams(10, 3, 0, 1))
    c = initial_state(cg)
    with pytest.raises(ValueError):
        gamma_value(GammaPolicy("cubic_critical"), c, 0.0, cg, Nonlinearity("cubic", 1.0))
    with pytest.raises(ValueError):
        gamma_value(GammaPolicy("srg_c1"), np.array([1.0, 0.0]), 0.0, complete_collapsed(8, 1), Nonlinearity())


@pytest.mark.parametrize("kind,params", [("bogus", {}), ("fixed", {}), ("suff_complete_critical", {}),
                                         ("numeric_table", {"t": [1, 0], "gamma": [0, 0]})])
def test_bad_policy(kind, params):
    with pytest.raises(ValueError):
        GammaPolicy(kind, params)


# ---------------------------------------------------------------- integration

def test_linear_complete_reaches_one():
    n = 1024
    tr = integrate(complete_cfg(n), 60.0, dense=True)
    t_pk, p_pk = first_peak(tr)
    assert t_pk == pytest.approx(math.pi * math.sqrt(n) / 2, rel=1e-3)
    assert p_pk >= 1 - 1e-4
    assert np.max(np.abs(tr.success - linear_prob(n, tr.t))) < 1e-6


@pytest.mark.parametrize("n", [100, 1000])
@pytest.mark.parametrize("G", [0.1, 1.0])
def test_cubic_matches_closed_form_and_is_periodic(n, G):
    g = G * (n - 1)
    params = CompleteSearchParams(n, 1, g)
    t_star = cubic_runtime(params)
    tr = integrate(complete_cfg(n, "cubic", g, GammaPolicy("cubic_critical"), sample_dt=0.01), 2 * t_star, dense=True)
    assert np.max(np.abs(tr.success - cubic_prob(params, tr.t))) <= 1e-6
    x_end = abs(tr.dense(2 * t_star)[0]) ** 2
    assert abs(x_end - 1 / n) <= 1e-4


def test_fixed_gamma_cubic_fails():
    tr = integrate(complete_cfg(1024, "cubic", 1.0, sample_dt=0.05), 200.0)
    assert tr.success.max() < 0.5


@pytest.mark.parametrize("cfg", [
    complete_cfg(64, "cubic", 63.0, GammaPolicy("cubic_critical")),
    complete_cfg(64, "cubic_quintic", 20.0, GammaPolicy("general_critical")),
    complete_cfg(64, "loglinear", 2.0, GammaPolicy("general_critical")),
    complete_cfg(200, "linear"),
    SearchConfig("petersen", None, 1, Nonlinearity("cubic", 1.0), GammaPolicy("srg_c1")),
    SearchConfig("hypercube", 6, 1, Nonlinearity("loglinear", 0.5), GammaPolicy("fixed", {"gamma0": 0.3})),
])
@pytest.mark.parametrize("rel_tol", [1e-8, 1e-10])
def test_norm_conservation(cfg, rel_tol):
    tr = integrate(cfg, 30.0, Controls(rel_tol=rel_tol, abs_tol=rel_tol / 100, sample_dt=0.05))
    assert tr.norm_err.max() <= 10 * rel_tol
    assert np.all(np.diff(tr.t) > 0)
    assert np.all(np.abs(tr.probs.sum(axis=1) - 1) <= tr.norm_err + 1e-15)


def test_repulsive_underperforms_linear():
    n = 128
    t_end = math.pi * math.sqrt(n) / 2
    lin = integrate(complete_cfg(n, policy=GammaPolicy("cubic_critical"), sample_dt=0.05), t_end)
    for g in (-0.5, -1.5, -5.0):
        rep = integrate(complete_cfg(n, "cubic", g, GammaPolicy("cubic_critical"), sample_dt=0.05), t_end)
        assert np.all(rep.success <= lin.success + 1e-9)


@pytest.mark.parametrize("family,size,policy,lo,hi", [
    ("paley", 101, "srg_c1", 0.9, 1.0),
    ("latin_square", 50, "srg_c2", 0.9, 1.0),
    ("latin_square", 30, "srg_c2_prime", 0.0, 0.75),
])
def test_srg_linear_prediction(family, size, policy, lo, hi):
    cfg = SearchConfig(family, size, 1, Nonlinearity(), GammaPolicy(policy), Controls(sample_dt=0.05))
    n = cfg.collapsed().n_vertices
    tr = integrate(cfg, math.pi * math.sqrt(n), dense=True)
    t_pk, p_pk = first_peak(tr)
    assert lo <= p_pk <= hi
    if lo >= 0.9:
        assert t_pk == pytest.approx(math.pi * math.sqrt(n) / 2, rel=0.1)


def test_step_size_underflow_raises():
    with pytest.raises(IntegrationError):
        run_ode(lambda t, c: c**2, np.array([1 + 0j]), 2.0, Controls())


def test_nan_detection_raises():
    nl = Nonlinearity("custom", 1.0, custom_f=lambda p: np.where(p > 0.3, np.nan, p))
    cfg = SearchConfig("complete", 16, 1, nl, GammaPolicy("fixed", {"gamma0": 1 / 16}))
    with pytest.raises(IntegrationError):
        integrate(cfg, 20.0)


def test_integrate_rejects_bad_input():
    with pytest.raises(ValueError):
        integrate(complete_cfg(16), 0.0)
    with pytest.raises(ValueError):
        integrate(SearchConfig("srg", None, 1, srg=(10, 3, 0, 2)), 1.0)
    with pytest.raises(ValueError):
        Controls(rel_tol=-1)


def test_measure_width_linear_matches_formula():
    n = 100
    res = measure_width(complete_cfg(n), 0.01)
    # solve linear_prob(t) = 0.99 around the peak
    from scipy.optimize import brentq

    t_star = math.pi * math.sqrt(n) / 2
    lo = brentq(lambda t: linear_prob(n, t) - 0.99, t_star - 5, t_star)
    hi = brentq(lambda t: linear_prob(n, t) - 0.99, t_star, t_star + 5)
    assert res["width"] == pytest.approx(hi - lo, rel=1e-6)


# ---------------------------------------------------------------- numeric critical gamma

@pytest.mark.parametrize("cg,target,rel", [
    (complete_collapsed(1024, 1), 1 / 1024, 0.01),
    (collapse_analytic(SrgParams(101, 50, 24, 25)), 1 / 50, 0.02),
    (collapse_analytic(SrgParams(900, 87, 30, 6)), 0.011680, 0.02),
])
def test_find_gamma_numeric(cg, target, rel):
    assert find_gamma_numeric(cg) == pytest.approx(target, rel=rel)


def test_find_gamma_numeric_boundary_warning():
    with pytest.warns(RuntimeWarning):
        find_gamma_numeric(complete_collapsed(1024, 1), (0.01, 0.02), 20)


# ---------------------------------------------------------------- serialization

def test_config_json_round_trip_and_hash():
    cfg = SearchConfig("srg", None, 1, Nonlinearity("cubic", 2.5), GammaPolicy("srg_c2"), srg=(900, 87, 30, 6))
    d = json.loads(cfg.to_json())
    assert set(d) >= {"family", "size_param", "marked_count", "nonlinearity", "policy", "tolerances"}
    back = SearchConfig.from_json(cfg.to_json())
    assert back == cfg
    assert back.hash() == cfg.hash()
    other = SearchConfig("srg", None, 1, Nonlinearity("cubic", 2.6), GammaPolicy("srg_c2"), srg=(900, 87, 30, 6))
    assert other.hash() != cfg.hash()


def test_trajectory_csv():
    cfg = complete_cfg(16, sample_dt=0.5)
    tr = integrate(cfg, 1.0)
    lines = tr.to_csv().strip().split("\n")
    assert lines[0] == "t,p0,p1,gamma,norm_err"
    assert len(lines) == 4
    assert tr.config_hash == cfg.hash()
    first = [float(v) for v in lines[1].split(",")]
    assert first[:3] == pytest.approx([0.0, 1 / 16, 15 / 16])
