"""Memory metrics: non-Markovianity, memory strength, CMI, Haar survey."""
import numpy as np
import pytest

from proctensor.instruments import instrument, instrument_by_name
from proctensor.linalg import kron, partial_trace
from proctensor.memory import (
    confusion_probability, markov_order_test, memory_strength,
    mutual_information, non_markovianity, non_markovianity_choi,
    projective_survey, quantum_cmi, quantum_cmi_choi)
from proctensor.process import build_common_cause
from proctensor.states import bell, state_by_name


def lam_process():
    g, dims = state_by_name("lambda")
    return build_common_cause(g, dims, (2, 2))


def ome_process():
    g, dims = state_by_name("omega")
    return build_common_cause(g, dims, (2, 3))


def random_density(rng, d):
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def test_non_markovianity_zero_on_products():
    rng = np.random.default_rng(16)
    for _ in range(10):
        g = kron(random_density(rng, 2), random_density(rng, 2),
                 random_density(rng, 2))
        p = build_common_cause(g, (2, 2, 2), (2, 2))
        assert abs(non_markovianity(p)) < 1e-9


def test_non_markovianity_frozen_values():
    assert np.isclose(non_markovianity(lam_process()), 0.2836518149970493,
                      atol=1e-12)
    assert np.isclose(non_markovianity(ome_process()), 1.1225562489182659,
                      atol=1e-12)


def test_choi_path_agrees_with_state_path():
    rng = np.random.default_rng(17)
    for p in (lam_process(), ome_process()):
        assert np.isclose(non_markovianity(p), non_markovianity_choi(p),
                          atol=1e-9)
        assert np.isclose(quantum_cmi_choi(p),
                          quantum_cmi(p.gamma, p.input_dims), atol=1e-9)
    for _ in range(5):
        g = random_density(rng, 8)
        p = build_common_cause(g, (2, 2, 2), (2, 2))
        assert np.isclose(non_markovianity(p), non_markovianity_choi(p),
                          atol=1e-9)


def test_mutual_information():
    rng = np.random.default_rng(18)
    for _ in range(10):
        a = random_density(rng, 2)
        b = random_density(rng, 3)
        assert abs(mutual_information(kron(a, b), (2, 3))) < 1e-10
    b1 = bell(1)
    assert np.isclose(mutual_information(np.outer(b1, b1.conj()), (2, 2)),
                      2.0)


def test_quantum_cmi_strong_subadditivity():
    rng = np.random.default_rng(19)
    for _ in range(200):
        rho = random_density(rng, 8)
        assert quantum_cmi(rho, (2, 2, 2)) > -1e-9
    # vanishes when the last leg is uncorrelated
    for _ in range(10):
        rho = kron(random_density(rng, 4), random_density(rng, 2))
        assert abs(quantum_cmi(rho, (2, 2, 2))) < 1e-9


def test_cmi_frozen_values():
    g, dims = state_by_name("omega")
    assert np.isclose(quantum_cmi(g, dims), 0.5, atol=1e-9)
    g, dims = state_by_name("lambda")
    assert np.isclose(quantum_cmi(g, dims), 0.01899866985941534, atol=1e-12)


def test_confusion_probability():
    assert np.isclose(confusion_probability(1, 1.0), 0.5)
    assert np.isclose(confusion_probability(2, 1.0), 0.25)
    nm = non_markovianity(lam_process())
    assert np.isclose(confusion_probability(1, nm), 0.8215089426338882,
                      atol=1e-12)
    with pytest.raises(ValueError):
        confusion_probability(0, 1.0)


def test_memory_strength_theta_frozen():
    rep = memory_strength(lam_process(), instrument_by_name("theta"))
    probs = [pr for pr, _ in rep.per_event]
    mis = [mi for _, mi in rep.per_event]
    assert np.allclose(probs, [0.3266345176207621, 0.3261658884706606,
                               0.3471995939085773], atol=1e-12)
    assert np.allclose(mis, [1.1448351600051865e-05, 4.5432046575033525e-05,
                             0.007593255286493683], atol=1e-10)
    assert np.isclose(rep.aggregate_uniform, np.mean(mis))
    assert np.isclose(rep.aggregate_weighted,
                      float(np.dot(probs, mis)))
    assert np.isclose(rep.max_event, max(mis))
    assert rep.max_event < 0.02


def test_memory_strength_z_frozen():
    rep = memory_strength(lam_process(), instrument_by_name("z"))
    assert np.isclose(rep.per_event[0][0], 0.4424, atol=1e-12)
    assert np.isclose(rep.per_event[0][1], 0.05143487434841432, atol=1e-10)


def test_memory_strength_zero_probability_event():
    # an all-zero element never fires; it must be flagged, not crash
    inst = instrument([np.zeros((2, 2), dtype=complex),
                       np.eye(2, dtype=complex)])
    rep = memory_strength(lam_process(), inst)
    assert rep.per_event[0] == (0.0, 0.0)
    assert any("zero probability" in f for f in rep.flags)


def test_markov_order():
    ok, detail = markov_order_test(ome_process(), instrument_by_name("xi"))
    assert ok and detail["markov_order_one"]
    assert max(e["trace_distance"] for e in detail["events"]) < 1e-12
    ok, detail = markov_order_test(lam_process(),
                                   instrument_by_name("theta"))
    assert not ok
    tds = [e["trace_distance"] for e in detail["events"]]
    assert np.allclose(tds, [0.0019912661148723063, 0.003345265226582128,
                             0.04600274141280382], atol=1e-10)


def test_qutrit_sharp_memory_frozen():
    rep = memory_strength(ome_process(), instrument_by_name("qutrit_sharp"))
    probs = [pr for pr, _ in rep.per_event]
    mis = [mi for _, mi in rep.per_event]
    assert np.allclose(probs, [0.125, 0.125, 0.125, 0.125, 0.5], atol=1e-12)
    assert np.allclose(mis[:4], [0.20751874963942218] * 4, atol=1e-10)
    assert abs(mis[4]) < 1e-12


def test_survey_thread_invariance_and_determinism():
    p = lam_process()
    f1 = projective_survey(p, 0.0125, 2000, seed=0, threads=1)
    f2 = projective_survey(p, 0.0125, 2000, seed=0, threads=4)
    assert f1 == f2
    f3 = projective_survey(p, 0.0125, 2000, seed=1, threads=1)
    assert f3 != f1
    # uneven split across the 64 chunks still counts every sample
    f4 = projective_survey(p, 0.0125, 1003, seed=0)
    assert 0.0 <= f4 <= 1.0


def test_survey_validation():
    p = lam_process()
    with pytest.raises(ValueError):
        projective_survey(p, -0.1, 1000, seed=0)
    with pytest.raises(ValueError):
        projective_survey(p, 0.0125, 50, seed=0)
    with pytest.raises(ValueError):
        projective_survey(ome_process(), 0.0125, 1000, seed=0)
