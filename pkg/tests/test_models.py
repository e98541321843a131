import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import poisson

from squeezelab import (
    ClassicalPumpModel,
    CoherentPumpEnsemble,
    DomainError,
    PropagatorConfig,
    QuantumPumpModel,
    conserved_charge_trace,
    effective_r,
    run_classical,
    run_coherent_ensemble,
    run_quantum_pump,
)
from squeezelab.models import pump_classical_discrepancy, poisson_window

from oracles import (
    coherent_amplitudes,
    evolve_dense,
    pump_chain_dense_run,
    pump_hamiltonian,
    two_mode_numbers,
)


def test_classical_displacement():
    res = run_classical(ClassicalPumpModel(1, 64), [0.0, 1.0])
    assert abs(res["n_a"][1] - 1.0) <= 1e-8
    assert res.metadata["m"] == 64
    assert res.metadata["m_parity"] == "even"


def test_classical_squeezing():
    res = run_classical(ClassicalPumpModel(2, 60), [0.25])
    assert res["n_a"][0] == pytest.approx(math.sinh(0.5) ** 2, rel=1e-10)
    assert not res.warnings


def test_classical_even_odd_diverge():
    r = np.linspace(0, 3, 301)
    even = run_classical(ClassicalPumpModel(3, 200), r)
    odd = run_classical(ClassicalPumpModel(3, 201), r)
    assert odd.metadata["m_parity"] == "odd"
    small = r <= 0.1
    assert np.abs(even["n_a"] - odd["n_a"])[small].max() < 1e-3
    assert np.abs(even["n_a"] - odd["n_a"]).max() > 5.0
    # truncation-dominated regime is flagged, not refused
    assert even.warnings


def test_classical_from_dimension():
    model = ClassicalPumpModel.from_dimension(3, 601)
    assert model.m == 201
    res = run_classical(model, [0.1])
    assert res.metadata["total_dimension"] == 601


def test_classical_distribution_snapshots():
    r = np.linspace(0, 1, 11)
    res = run_classical(ClassicalPumpModel(1, 40), r, distribution_at=[0.5])
    dist = res.metadata["distributions"][0.5]
    poisson_pmf = poisson.pmf(np.arange(40), 0.25)
    np.testing.assert_allclose(dist, poisson_pmf, atol=1e-12)
    assert 0 in res.snapshots and 10 in res.snapshots


def test_classical_model_validation():
    with pytest.raises(DomainError):
        ClassicalPumpModel(3, 1)


def test_pump_two_level():
    r = np.linspace(0, 2 * math.pi / math.sqrt(6), 101)
    res = run_quantum_pump(QuantumPumpModel(3, 1, tuple(r)))
    np.testing.assert_allclose(res["n_a"], 3 * np.sin(math.sqrt(6) * r) ** 2, atol=1e-12)
    np.testing.assert_allclose(res["n_b"], 1 - np.sin(math.sqrt(6) * r) ** 2, atol=1e-12)


def test_pump_matches_dense_21_dim():
    # signal 0..6 x pump 0..2 holds the whole |0,2> chain
    na, nb = pump_chain_dense_run(3, 2, [0.2])
    res = run_quantum_pump(QuantumPumpModel(3, 2, (0.2,)))
    assert abs(res["n_a"][0] - na[0]) <= 1e-10
    assert abs(res["n_b"][0] - nb[0]) <= 1e-10


@pytest.mark.parametrize("n, N", [(1, 3), (2, 4), (3, 5)])
def test_pump_at_zero(n, N):
    res = run_quantum_pump(QuantumPumpModel(n, N, (0.0, 0.1)))
    assert res["n_a"][0] == 0.0
    assert res["n_b"][0] == N
    assert res["depletion"][0] == 0.0


def test_pump_depletion_definition():
    res = run_quantum_pump(QuantumPumpModel(3, 7))
    np.testing.assert_allclose(res["depletion"], (7 - res["n_b"]) / 7)
    # each pump photon converts to n signal photons
    np.testing.assert_allclose(res["n_a"], 3 * (7 - res["n_b"]), atol=1e-10)


def test_pump_default_grid_spans_effective_range():
    res = run_quantum_pump(QuantumPumpModel(3, 16))
    assert res.r_grid[-1] == pytest.approx(3.0 / 4.0)
    assert res.metadata["r_effective"][-1] == pytest.approx(3.0)


@pytest.mark.parametrize("r_tilde, N, expected", [(0.5, 4, 1.0), (0.0, 7, 0.0), (1.0, 1, 1.0)])
def test_effective_r(r_tilde, N, expected):
    assert effective_r(r_tilde, N) == expected


def test_effective_r_domain():
    with pytest.raises(DomainError):
        effective_r(0.5, 0)


def test_conserved_charge():
    res = run_quantum_pump(QuantumPumpModel(3, 2), snapshot_stride=1)
    q = conserved_charge_trace(res)
    assert np.abs(q - 6).max() <= 1e-10
    res = run_quantum_pump(QuantumPumpModel(1, 1), snapshot_stride=5)
    assert np.abs(conserved_charge_trace(res) - 1).max() <= 1e-10
    res = run_quantum_pump(QuantumPumpModel(4, 3, (0.0,)), snapshot_stride=1)
    assert conserved_charge_trace(res)[0] == 12


def test_conserved_charge_needs_pump_run():
    res = run_classical(ClassicalPumpModel(3, 10), [0.1])
    with pytest.raises(DomainError):
        conserved_charge_trace(res)


@pytest.mark.parametrize("N", [2, 5])
def test_pump_chain_exactness_against_enlarged_space(N):
    r = np.linspace(0, 0.4, 5)
    chain = run_quantum_pump(QuantumPumpModel(3, N, tuple(r)))
    na, nb = pump_chain_dense_run(3, N, r)
    assert np.abs(chain["n_a"] - na).max() <= 1e-10
    na_big, nb_big = pump_chain_dense_run(3, N, r, extra_signal=4, extra_pump=2)
    assert np.abs(na_big - na).max() <= 1e-12
    assert np.abs(nb_big - nb).max() <= 1e-12


def _brute_window(mean, eps):
    best = None
    for lo in range(0, int(mean * 4 + 30)):
        for hi in range(lo, int(mean * 4 + 30)):
            if poisson.pmf(np.arange(lo, hi + 1), mean).sum() >= 1 - eps:
                if best is None or hi - lo < best[1] - best[0]:
                    best = (lo, hi)
                break
    return best


@pytest.mark.parametrize("mean, eps", [(0.5, 1e-3), (3.0, 1e-6), (9.0, 1e-8), (20.0, 1e-4)])
def test_poisson_window_minimal(mean, eps):
    lo, hi = poisson_window(mean, eps)
    assert poisson.pmf(np.arange(lo, hi + 1), mean).sum() >= 1 - eps
    blo, bhi = _brute_window(mean, eps)
    assert hi - lo == bhi - blo


def test_poisson_window_cap():
    with pytest.raises(DomainError):
        poisson_window(400.0, 1e-8, N_cap=100)


def test_ensemble_weights_alpha9():
    res = run_coherent_ensemble(CoherentPumpEnsemble(3, 9.0, 1e-8))
    md = res.metadata
    assert md["retained_mass"] >= 1 - 1e-8
    assert abs(md["even_weight"] - 0.5) <= 0.02
    assert abs(md["odd_weight"] - 0.5) <= 0.02
    # direct Poisson summation over the same window
    lo, hi = md["window"]
    Ns = np.arange(lo, hi + 1)
    pmf = poisson.pmf(Ns, 9.0)
    assert md["even_weight"] == pytest.approx(pmf[Ns % 2 == 0].sum(), rel=1e-14)
    np.testing.assert_allclose(res["n_a"], res["n_a_even"] + res["n_a_odd"], rtol=1e-13, atol=1e-14)


def test_ensemble_at_zero():
    res = run_coherent_ensemble(CoherentPumpEnsemble(3, 4.0, 1e-8, (0.0, 0.1)))
    assert res["n_a"][0] == 0.0


def _direct_coherent(n, mean, window, r_tilde):
    lo, hi = window
    sd, pd = n * hi + 1, hi + 1
    H = pump_hamiltonian(n, sd, pd)
    amp = coherent_amplitudes(mean, hi)
    amp[:lo] = 0.0
    psi0 = np.zeros(sd * pd, dtype=complex)
    psi0[:pd] = amp  # signal vacuum, pump in the truncated coherent state
    states = evolve_dense(H, psi0, r_tilde)
    s, _ = two_mode_numbers(sd, pd)
    return (np.abs(states) ** 2) @ s


@pytest.mark.parametrize("mean", [0.5, 1.0, 2.0])
def test_ensemble_matches_direct_two_mode(mean):
    r = np.linspace(0, 0.6, 7)
    window = (0, 3)
    res = run_coherent_ensemble(CoherentPumpEnsemble(3, mean, r_tilde_grid=tuple(r), window=window))
    direct = _direct_coherent(3, mean, window, r)
    assert np.abs(res["n_a"] - direct).max() <= 1e-8


def test_ensemble_matches_hand_weighted_sum():
    r = np.linspace(0, 0.5, 6)
    res = run_coherent_ensemble(CoherentPumpEnsemble(3, 1.5, r_tilde_grid=tuple(r), window=(0, 3)))
    total = np.zeros(r.size)
    for N in range(1, 4):
        total += poisson.pmf(N, 1.5) * run_quantum_pump(QuantumPumpModel(3, N, tuple(r)))["n_a"]
    np.testing.assert_allclose(res["n_a"], total, rtol=1e-13, atol=1e-15)


def test_ensemble_bitwise_reproducible_across_workers():
    ens = CoherentPumpEnsemble(3, 6.0, 1e-6)
    a = run_coherent_ensemble(ens, workers=1)
    b = run_coherent_ensemble(ens, workers=4)
    for key in a.observable_traces:
        assert np.array_equal(a[key], b[key])


def test_ensemble_validation():
    with pytest.raises(DomainError):
        CoherentPumpEnsemble(3, 0.0)
    with pytest.raises(DomainError):
        run_coherent_ensemble(CoherentPumpEnsemble(3, 2.0, window=(0, 50), N_cap=10))
    with pytest.raises(DomainError):
        run_coherent_ensemble(CoherentPumpEnsemble(3, 400.0, N_cap=100))


def test_ensemble_krylov_method():
    ens = CoherentPumpEnsemble(3, 2.0, 1e-6, r_tilde_grid=(0.0, 0.1, 0.2))
    a = run_coherent_ensemble(ens)
    b = run_coherent_ensemble(ens, PropagatorConfig("krylov"))
    assert np.abs(a["n_a"] - b["n_a"]).max() <= 1e-9


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 4), st.integers(1, 40), st.floats(0, 1))
def test_pump_signal_bounded_by_chain(n, N, r_tilde):
    res = run_quantum_pump(QuantumPumpModel(n, N, (r_tilde,)))
    assert -1e-9 <= res["n_a"][0] <= n * N + 1e-9
    assert res.norm_drift <= 1e-10


def test_pump_classical_discrepancy_is_reported():
    r = np.linspace(0, 0.15, 16)
    d = pump_classical_discrepancy(3, 160, 400, r)
    assert np.isfinite(d) and d >= 0
    assert pump_classical_discrepancy(3, 160, 400, [0.0]) == 0.0
