import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from squeezelab import (
    ClassicalPumpModel,
    DomainError,
    FitError,
    Generator,
    build_classical_generator,
    build_sector_basis,
    detect_oscillation,
    extension_convergence,
    fit_scaling,
    kerr_convergence,
    parity_scan,
    run_classical,
    spectrum,
)
from squeezelab.analysis import (
    classical_family,
    fit_power_law,
    nearest_distance,
    parity_metrics,
    pump_family,
    scaling_study,
    trace_gap,
)

from oracles import squeeze_generator


def classical_gen(n, m):
    return build_classical_generator(build_sector_basis(n, 0, m))


def test_spectrum_odd_zero_mode():
    sp = spectrum(Generator([1.0, 2.0, 0.5, 3.0]))
    assert sp.has_zero_mode
    assert sp.min_abs <= 1e-10


def test_spectrum_displacement_symmetric():
    sp = spectrum(classical_gen(1, 6))
    np.testing.assert_allclose(sp.eigenvalues, -sp.eigenvalues[::-1], atol=1e-12)
    assert sp.pairing_defect <= 1e-12
    assert not sp.has_zero_mode


def test_spectrum_matches_dense_hermitian_solve():
    # independent route: dense complex Hermitian i*A from the full Fock-space matrix
    X = squeeze_generator(3, 120)
    idx = np.arange(0, 120, 3)
    dense = np.linalg.eigvalsh(1j * X[np.ix_(idx, idx)])
    sp = spectrum(classical_gen(3, 40))
    np.testing.assert_allclose(sp.eigenvalues, dense, rtol=1e-10, atol=1e-9)


def test_spectrum_with_kerr_has_no_pairing_report():
    basis = build_sector_basis(3, 0, 10)
    gen = build_classical_generator(basis).with_diagonal(np.linspace(0, 1, 10))
    assert spectrum(gen).pairing_defect is None


def test_spectrum_dense_cap():
    with pytest.raises(DomainError):
        spectrum(classical_gen(1, 20), dense_cap=10)


@pytest.mark.parametrize("m", [50, 51, 200, 201])
def test_spectrum_pairing_property(m):
    w = spectrum(classical_gen(3, m)).eigenvalues
    assert np.abs(w + w[::-1]).max() <= 1e-9


def test_trace_gap_scale_free():
    a = np.array([0.0, 1.0, 2.0])
    assert trace_gap(a, a) == 0.0
    assert trace_gap(a, a + 0.3) == pytest.approx(0.3 / 3.3)
    assert trace_gap(100 * a, 100 * a + 30) == pytest.approx(30 / 231)


def test_parity_scan_ordinary_squeezing_has_no_parity_effect():
    r = np.linspace(0, 0.5, 51)
    report = parity_scan(classical_family(2, r), [40, 41, 42, 43])
    assert report.delta_adjacent < 1e-10
    assert not report.drastic


def test_parity_scan_classical_n3_drastic():
    report = parity_scan(classical_family(3), [200, 201, 202, 203])
    assert report.ratio > 10
    assert report.drastic


def test_parity_scan_pump_drastic():
    report = parity_scan(pump_family(3), [30, 31, 32, 33])
    assert report.ratio > 10


def test_parity_scan_preconditions():
    fam = classical_family(2, [0.0, 0.1])
    with pytest.raises(DomainError):
        parity_scan(fam, [40, 41, 42])
    with pytest.raises(DomainError):
        parity_scan(fam, [40, 42, 44, 46])


def _synthetic(size):
    x = np.linspace(0, 1, 20)
    return np.sin(x * size) + (size % 2) * 0.5


@given(st.permutations([10, 11, 12, 13, 14, 17]))
def test_parity_metrics_order_invariant(order):
    ref = parity_scan(_synthetic, [10, 11, 12, 13, 14, 17])
    rep = parity_scan(_synthetic, list(order))
    assert rep.to_dict() == ref.to_dict()


def test_parity_metrics_threaded_same():
    a = parity_scan(classical_family(3, np.linspace(0, 1, 21)), [60, 61, 62, 63])
    b = parity_scan(classical_family(3, np.linspace(0, 1, 21)), [60, 61, 62, 63], workers=4)
    assert a.to_dict() == b.to_dict()


def test_parity_report_floor():
    flat = {s: np.zeros(5) for s in (4, 5, 6, 7)}
    rep = parity_metrics(flat)
    assert rep.ratio == 0.0
    assert rep.delta_same_parity == 0.0


def test_oscillation_two_level():
    r = np.linspace(0, 2 * math.pi / math.sqrt(6), 2001)
    cert = detect_oscillation(3 * np.sin(math.sqrt(6) * r) ** 2, r)
    assert cert
    assert cert.drop == pytest.approx(1.0, abs=1e-6)
    expected = [(2 * j + 1) * math.pi / (2 * math.sqrt(6)) for j in range(2)]
    np.testing.assert_allclose(cert.maxima, expected, atol=r[1] - r[0])


def test_oscillation_monotone_is_empty():
    r = np.linspace(0, 3, 301)
    cert = detect_oscillation(r**2, r)
    assert not cert
    assert cert.kinds == []


def test_oscillation_classical_n3_even():
    res = run_classical(ClassicalPumpModel(3, 200))
    cert = detect_oscillation(res["n_a"], res.r_grid)
    assert cert
    assert cert.drop >= 0.1


def test_oscillation_noise_guard():
    x = np.linspace(0, 1, 50)
    wiggly = x + 1e-11 * np.sin(400 * x)
    assert not detect_oscillation(wiggly)


def test_oscillation_small_drop_not_certified():
    y = np.array([0.0, 1.0, 2.0, 1.95, 2.5, 3.0, 3.5])
    assert not detect_oscillation(y)
    assert detect_oscillation(y, drop_threshold=0.01)


def test_oscillation_needs_five_points():
    with pytest.raises(DomainError):
        detect_oscillation([0, 1, 0, 1])


@settings(max_examples=200)
@given(st.lists(st.floats(0, 10, allow_nan=False), min_size=5, max_size=60))
def test_oscillation_soundness(values):
    y = np.array(values)
    cert = detect_oscillation(y, drop_threshold=0.0)
    assert 0.0 <= cert.drop <= 1.0
    kinds = cert.kinds
    assert all(a != b for a, b in zip(kinds, kinds[1:]))
    for loc, kind in zip(cert.locations, kinds):
        i = int(loc)
        if kind == "max":
            assert y[i] - y[i - 1] > 1e-9 and y[i] - y[i + 1] > 1e-9
        else:
            assert y[i - 1] - y[i] > 1e-9 and y[i + 1] - y[i] > 1e-9


def test_fit_power_law_planted():
    N = np.array([50, 80, 130, 200, 330, 500, 800])
    assert fit_power_law(N, 2.5 * N**0.5).exponent == pytest.approx(0.5, abs=1e-12)
    assert fit_power_law(N, 0.3 * N).exponent == pytest.approx(1.0, abs=1e-12)


@given(st.floats(-2, 3).filter(lambda p: abs(p) > 1e-3), st.floats(0.01, 100))
def test_fit_recovers_planted_exponent(p, c):
    N = np.geomspace(10, 1000, 8)
    fit = fit_power_law(N, c * N**p)
    assert fit.exponent == pytest.approx(p, abs=1e-10)
    assert fit.residual_rms <= 1e-10


def test_fit_scaling_preconditions():
    N = [50, 60, 70, 80, 90, 100]
    fit = fit_scaling(N, np.sqrt(N), np.sqrt(N) / 3)
    assert fit.peak_fit.exponent == pytest.approx(0.5, abs=1e-12)
    assert fit.mean_fit.exponent == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(DomainError):
        fit_scaling(N[:5], np.sqrt(N[:5]), np.sqrt(N[:5]))
    with pytest.raises(DomainError):
        fit_scaling([50, 61, 70, 80, 90, 100], np.sqrt(N), np.sqrt(N))
    with pytest.raises(FitError):
        fit_scaling(N, np.ones(6), np.sqrt(N))


def test_scaling_study_splits_parity_classes():
    fits = scaling_study(3, [20, 24, 28, 32, 36, 40, 21, 25, 29, 33, 37, 41], np.linspace(0, 3, 61))
    assert set(fits) == {"even", "odd"}
    assert all(N % 2 == 0 for N in fits["even"].N_values)


def test_kerr_convergence_regularizes():
    rep = kerr_convergence(3, 0.2, [100, 101, 120, 121, 140, 141, 160, 161])
    assert rep.converged
    assert rep.pair_gaps[-1][2] < 1e-6
    assert rep.converged_from is not None


def test_kerr_control_stays_truncation_dependent():
    rep = kerr_convergence(3, 0.0, [100, 101, 160, 161], allow_zero=True)
    assert rep.delta_adjacent > 1e-2
    assert not rep.converged


def test_kerr_regular_case_needs_no_regularization():
    rep = kerr_convergence(2, 0.0, [40, 41, 42, 43], np.linspace(0, 0.5, 51), allow_zero=True)
    assert rep.delta_adjacent < 1e-8


def test_kerr_convergence_preconditions():
    with pytest.raises(DomainError):
        kerr_convergence(3, 0.0, [100, 101])
    with pytest.raises(DomainError):
        kerr_convergence(3, 0.2, [100, 102])


def test_extension_regular_case_classes_agree():
    # i(a† - a) has continuous spectrum: both truncation classes fill it in alike,
    # so the distance between even and odd low-lying spectra shrinks with size
    sizes = [100, 200, 400, 800]
    even = extension_convergence(1, sizes)
    odd = extension_convergence(1, [s + 1 for s in sizes])
    inter = [nearest_distance(even.eigenvalues[i], odd.eigenvalues[i]).max() for i in range(len(sizes))]
    assert np.all(np.diff(inter) < 0)
    assert np.all(np.diff(even.gaps, axis=0) < 0)


def test_extension_n3_even_gaps_decrease():
    table = extension_convergence(3, [100, 200, 400, 800])
    assert np.all(np.diff(table.gaps, axis=0) < 0)


def test_extension_n3_two_limits():
    sizes = [100, 200, 400, 800]
    even = extension_convergence(3, sizes)
    odd = extension_convergence(3, [s + 1 for s in sizes])
    inter = nearest_distance(even.limit, odd.limit)[:5]
    intra = np.maximum(even.gaps[-1], odd.gaps[-1])[:5]
    assert np.all(inter > intra)


def test_extension_preconditions():
    with pytest.raises(DomainError):
        extension_convergence(3, [100, 101, 200, 400])
    with pytest.raises(DomainError):
        extension_convergence(3, [100, 200, 400])
