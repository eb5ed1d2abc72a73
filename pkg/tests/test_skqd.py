import json

import numpy as np
import pytest
import scipy.linalg as sla
from scipy.stats import chisquare

from conftest import kron_dense, random_pauli_sum
from sparsegs.paulis import Configuration, PauliString, PauliSum
from sparsegs.skqd import (
    ShotRecord,
    SkqdParams,
    default_dt,
    evolve_exact,
    evolve_trotter,
    run_skqd,
    support_coverage,
)


def test_default_dt_single_pauli():
    h = PauliSum([(1.0, PauliString.from_label("X"))], 1)
    assert default_dt(h, 1.0) == pytest.approx(np.pi)


def test_default_dt_multiplier_25(patch_instance):
    h, _ = patch_instance
    assert default_dt(h) == pytest.approx(25 * np.pi / h.coeff_one_norm())


def test_one_norm_bounds_spectral_norm():
    for seed in range(6):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 9))
        h = random_pauli_sum(rng, n, 10)
        spec = np.abs(np.linalg.eigvalsh(kron_dense(h))).max()
        assert h.coeff_one_norm() >= spec - 1e-10


def test_default_dt_rejects_empty():
    h = PauliSum([], 2)
    with pytest.raises(ValueError):
        default_dt(h)


def test_default_dt_rejects_bad_multiplier():
    h = PauliSum([(1.0, PauliString.from_label("X"))], 1)
    with pytest.raises(ValueError):
        default_dt(h, 0.0)


def test_trotter_rejects_complex_coefficients():
    h = PauliSum([(1j, PauliString.from_label("X"))], 1)
    v = np.array([1.0, 0.0], dtype=complex)
    with pytest.raises(ValueError):
        evolve_trotter(h, v, 0.1)


def test_evolve_exact_time_zero():
    rng = np.random.default_rng(0)
    h = random_pauli_sum(rng, 4, 6)
    v = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    assert np.array_equal(evolve_exact(h, v, 0.0), v)


def test_evolve_exact_matches_dense_exponential():
    rng = np.random.default_rng(1)
    h = random_pauli_sum(rng, 6, 12)
    v = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    v /= np.linalg.norm(v)
    t = 0.83
    want = sla.expm(-1j * t * kron_dense(h)) @ v
    got = evolve_exact(h, v, t)
    assert np.linalg.norm(got - want) < 1e-10


def test_eigenstate_evolution_is_stationary(patch_instance):
    h, cert = patch_instance
    psi = np.zeros(1 << 16, dtype=complex)
    for c, a in zip(cert.support, cert.amplitudes):
        psi[c.bits] = a
    out = evolve_exact(h, psi, 2.1)
    assert abs(np.vdot(psi, out)) == pytest.approx(1.0, abs=1e-9)


def test_trotter_exact_for_commuting_terms():
    h = PauliSum(
        [(0.7, PauliString.from_label("ZZI")), (-0.4, PauliString.from_label("IZZ"))], 3
    )
    rng = np.random.default_rng(2)
    v = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    v /= np.linalg.norm(v)
    want = sla.expm(-1j * 0.9 * kron_dense(h)) @ v
    for order in (1, 2):
        got = evolve_trotter(h, v, 0.9, order=order, steps=1)
        assert np.linalg.norm(got - want) < 1e-12


def test_trotter_single_term_exact():
    h = PauliSum([(0.55, PauliString.from_label("XY"))], 2)
    rng = np.random.default_rng(3)
    v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    want = sla.expm(-1j * 1.3 * kron_dense(h)) @ v
    got = evolve_trotter(h, v, 1.3, order=1, steps=1)
    assert np.linalg.norm(got - want) < 1e-12


def test_trotter_error_scaling():
    rng = np.random.default_rng(4)
    h = random_pauli_sum(rng, 6, 10)
    v = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    v /= np.linalg.norm(v)
    t = 0.8
    want = sla.expm(-1j * t * kron_dense(h)) @ v
    e1 = [np.linalg.norm(evolve_trotter(h, v, t, 1, s) - want) for s in (8, 16)]
    e2 = [np.linalg.norm(evolve_trotter(h, v, t, 2, s) - want) for s in (8, 16)]
    assert 1.6 < e1[0] / e1[1] < 2.5   # first order: halving dt halves the error
    assert 3.2 < e2[0] / e2[1] < 5.0   # second order: quarter


def test_run_skqd_patch_recovers_ground_state(patch_instance):
    h, cert = patch_instance
    p = SkqdParams(krylov_dim=8, shots_per_state=2000, rng_seed=5)
    eig, trace, record = run_skqd(h, cert.initial_config, p)
    assert abs(eig.value) < 1e-7
    cov = support_coverage(record, cert)
    assert cov[-1] == 8
    assert np.all(np.diff(cov) >= 0)


def test_run_skqd_d1_energy_bounded_by_reference(patch_instance):
    h, cert = patch_instance
    from sparsegs.paulis import matrix_element

    with pytest.warns(UserWarning):
        eig, trace, record = run_skqd(
            h, cert.initial_config, SkqdParams(krylov_dim=1, shots_per_state=100)
        )
    x0 = cert.initial_config
    assert eig.value <= matrix_element(h, x0, x0).real + 1e-12


def test_run_skqd_energy_nonincreasing_in_dim(patch_instance):
    h, cert = patch_instance
    p = SkqdParams(krylov_dim=6, shots_per_state=500, rng_seed=11)
    _, trace, _ = run_skqd(h, cert.initial_config, p)
    energies = [r.energy for r in trace.rows]
    assert all(b <= a + 1e-9 for a, b in zip(energies, energies[1:]))


def test_run_skqd_trotter_mode(patch_instance):
    h, cert = patch_instance
    p = SkqdParams(krylov_dim=4, shots_per_state=800, rng_seed=2,
                   evolution="trotter2", trotter_steps_per_dt=2)
    eig, trace, record = run_skqd(h, cert.initial_config, p)
    assert np.isfinite(eig.value)
    assert eig.value >= -1e-9


def test_sampling_distribution_chi_squared():
    # 5-qubit state sampled 1e5 times; histogram consistent with Born rule
    rng = np.random.default_rng(6)
    h = random_pauli_sum(rng, 5, 8)
    p = SkqdParams(krylov_dim=2, shots_per_state=100_000, rng_seed=7)
    x0 = Configuration(3, 5)
    eig, trace, record = run_skqd(h, x0, p)
    phi = np.zeros(32, dtype=complex)
    phi[3] = 1.0
    phi = evolve_exact(h, phi, default_dt(h))
    probs = np.abs(phi) ** 2
    probs /= probs.sum()
    hist = record.histograms[1]
    counts = np.array([hist.get(b, 0) for b in range(32)])
    keep = probs > 1e-6
    stat, pval = chisquare(counts[keep], probs[keep] / probs[keep].sum() * counts[keep].sum())
    assert pval > 0.001


def test_noise_channel_exercises_filter(patch_instance):
    h, cert = patch_instance
    p = SkqdParams(krylov_dim=4, shots_per_state=500, rng_seed=8,
                   bitflip_probability=0.05)
    eig, trace, record = run_skqd(h, cert.initial_config, p)
    assert np.isfinite(eig.value)
    assert eig.value >= -1e-9


def test_support_coverage_edge_cases(patch_instance):
    _, cert = patch_instance
    empty = ShotRecord(histograms=[], state_seeds=[], n_qubits=16)
    assert support_coverage(empty, cert).size == 0
    exact = ShotRecord(
        histograms=[{c.bits: 1 for c in cert.support}], state_seeds=[0], n_qubits=16
    )
    assert support_coverage(exact, cert)[0] == len(cert.support)


def test_shot_record_round_trip():
    rec = ShotRecord(histograms=[{3: 5, 9: 1}, {0: 2}], state_seeds=[11, 12], n_qubits=4)
    rec2 = ShotRecord.from_json_dict(json.loads(json.dumps(rec.to_json_dict())))
    assert rec2.histograms == rec.histograms
    assert rec2.state_seeds == rec.state_seeds


def test_reproducible_given_seed(patch_instance):
    h, cert = patch_instance
    p = SkqdParams(krylov_dim=3, shots_per_state=300, rng_seed=9)
    e1, t1, r1 = run_skqd(h, cert.initial_config, p)
    e2, t2, r2 = run_skqd(h, cert.initial_config, p)
    assert e1.value == e2.value
    assert r1.histograms == r2.histograms


def test_budget_and_width_checks():
    rng = np.random.default_rng(10)
    h = random_pauli_sum(rng, 4, 5)
    with pytest.raises(ValueError):
        run_skqd(h, Configuration(0, 5), SkqdParams(krylov_dim=1, shots_per_state=10))
    with pytest.raises(ValueError):
        SkqdParams(krylov_dim=0, shots_per_state=10)
    with pytest.raises(ValueError):
        SkqdParams(krylov_dim=2, shots_per_state=10, evolution="magic")


def test_shot_schedule_per_state(patch_instance):
    h, cert = patch_instance
    p = SkqdParams(krylov_dim=3, shots_per_state=(100, 200, 300), rng_seed=1)
    _, _, rec = run_skqd(h, cert.initial_config, p)
    assert [sum(hh.values()) for hh in rec.histograms] == [100, 200, 300]
