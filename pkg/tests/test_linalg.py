"""Core linear-algebra helpers: partial traces, entropies, metrics."""
import numpy as np
import pytest

from proctensor.linalg import (
    Leg, LegLayout, check_density, dagger, fidelity, hermitian_eig,
    hermitize, is_hermitian, kron, layout, mat_dumps, mat_from_json,
    mat_loads, mat_to_json, partial_trace, partial_trace_layout,
    relative_entropy, sqrtm_psd, trace_distance, trace_norm,
    von_neumann_entropy)


def random_density(rng, d):
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def random_unitary(rng, d):
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def test_kron_matches_numpy_and_chains():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(2, 2))
    b = rng.normal(size=(3, 3))
    c = rng.normal(size=(2, 2))
    assert np.allclose(kron(a, b), np.kron(a, b))
    assert np.allclose(kron(a, b, c), np.kron(np.kron(a, b), c))
    assert kron(a).shape == (2, 2)


def test_dagger_and_hermitize():
    rng = np.random.default_rng(1)
    m = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    assert np.allclose(dagger(m), m.conj().T)
    h = hermitize(m)
    assert is_hermitian(h)
    assert not is_hermitian(m + np.diag([1j, 0, 0]))


def test_partial_trace_of_product_factors():
    rng = np.random.default_rng(2)
    for _ in range(20):
        a = random_density(rng, 2)
        b = random_density(rng, 3)
        c = random_density(rng, 2)
        m = kron(a, b, c)
        assert np.allclose(partial_trace(m, (2, 3, 2), (0,)), a)
        assert np.allclose(partial_trace(m, (2, 3, 2), (1,)), b)
        assert np.allclose(partial_trace(m, (2, 3, 2), (0, 2)), kron(a, c))


def test_partial_trace_composition_and_trace():
    rng = np.random.default_rng(3)
    for _ in range(20):
        m = random_density(rng, 12)
        # tracing legs one at a time equals tracing them at once
        step = partial_trace(m, (2, 3, 2), (0, 1))
        step = partial_trace(step, (2, 3), (0,))
        once = partial_trace(m, (2, 3, 2), (0,))
        assert np.allclose(step, once)
        assert np.isclose(np.trace(once), np.trace(m))
    full = partial_trace(m, (2, 3, 2), ())
    assert full.shape == (1, 1)
    assert np.isclose(full[0, 0], 1.0)


def test_partial_trace_rejects_bad_args():
    m = np.eye(4)
    with pytest.raises(IndexError):
        partial_trace(m, (2, 2), (2,))
    with pytest.raises(ValueError):
        partial_trace(m, (2, 3), (0,))


def test_layout_and_partial_trace_layout():
    lay = layout(("A", 2, "input"), ("B", 3, "input"), ("C", 2, "input"))
    assert lay.dims == (2, 3, 2)
    assert lay.total_dim == 12
    assert lay.index("B") == 1
    with pytest.raises(KeyError):
        lay.index("D")
    with pytest.raises(KeyError):
        lay.subset({"A", "D"})
    rng = np.random.default_rng(4)
    m = random_density(rng, 12)
    red, sub = partial_trace_layout(m, lay, {"A", "C"})
    assert sub.labels() == ("A", "C")
    assert np.allclose(red, partial_trace(m, (2, 3, 2), (0, 2)))
    with pytest.raises(ValueError):
        Leg("A", 2, "sideways")
    with pytest.raises(ValueError):
        LegLayout((Leg("A", 2, "input"), Leg("A", 2, "input")))


def test_hermitian_eig_reconstructs():
    rng = np.random.default_rng(5)
    for _ in range(20):
        m = hermitize(rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5)))
        w, v = hermitian_eig(m)
        assert np.all(np.diff(w) <= 1e-12)  # descending
        assert np.allclose((v * w) @ v.conj().T, m)
        # phase convention: first nonzero component real positive
        for k in range(5):
            nz = np.flatnonzero(np.abs(v[:, k]) > 1e-12)
            lead = v[nz[0], k]
            assert abs(lead.imag) < 1e-12 and lead.real > 0
    with pytest.raises(ValueError):
        hermitian_eig(np.array([[0, 1], [0, 0]], dtype=complex))


def test_check_density_raises():
    check_density(np.eye(2) / 2)
    with pytest.raises(ValueError):
        check_density(np.diag([1.5, -0.5]))
    with pytest.raises(ValueError):
        check_density(np.eye(2))
    with pytest.raises(ValueError):
        check_density(np.array([[0.5, 0.5], [-0.5, 0.5]]))


def test_entropy_values_and_unitary_invariance():
    assert von_neumann_entropy(np.diag([1.0, 0.0])) == 0.0
    assert np.isclose(von_neumann_entropy(np.eye(4) / 4), 2.0)
    rng = np.random.default_rng(6)
    for _ in range(20):
        rho = random_density(rng, 4)
        U = random_unitary(rng, 4)
        s = von_neumann_entropy(rho)
        assert 0 <= s <= 2 + 1e-12
        assert np.isclose(von_neumann_entropy(U @ rho @ U.conj().T), s)


def test_relative_entropy_klein_and_support():
    rng = np.random.default_rng(7)
    for _ in range(20):
        x = random_density(rng, 3)
        y = random_density(rng, 3)
        d = relative_entropy(x, y)
        assert d >= -1e-10
        assert np.isclose(relative_entropy(x, x), 0.0, atol=1e-9)
        # S(x || 1/d) = log2 d - S(x)
        assert np.isclose(relative_entropy(x, np.eye(3) / 3),
                          np.log2(3) - von_neumann_entropy(x))
    pure = np.diag([1.0, 0.0])
    with pytest.raises(ValueError):
        relative_entropy(np.eye(2) / 2, pure)


def test_fidelity_pure_states_and_bounds():
    rng = np.random.default_rng(8)
    for _ in range(20):
        a = rng.normal(size=3) + 1j * rng.normal(size=3)
        b = rng.normal(size=3) + 1j * rng.normal(size=3)
        a, b = a / np.linalg.norm(a), b / np.linalg.norm(b)
        ra, rb = np.outer(a, a.conj()), np.outer(b, b.conj())
        assert np.isclose(fidelity(ra, rb), abs(a.conj() @ b) ** 2)
        rho = random_density(rng, 3)
        assert np.isclose(fidelity(rho, rho), 1.0)
        f = fidelity(rho, random_density(rng, 3))
        assert -1e-10 <= f <= 1 + 1e-10


def test_trace_distance_and_norm():
    assert np.isclose(trace_distance(np.eye(2) / 2, np.eye(2) / 2), 0.0)
    assert np.isclose(trace_distance(np.diag([1.0, 0]), np.diag([0, 1.0])),
                      1.0)
    rng = np.random.default_rng(9)
    for _ in range(20):
        a = random_density(rng, 4)
        b = random_density(rng, 4)
        td = trace_distance(a, b)
        assert 0 <= td <= 1 + 1e-12
        assert np.isclose(td, trace_norm(a - b) / 2)


def test_sqrtm_psd():
    rng = np.random.default_rng(10)
    for _ in range(20):
        rho = random_density(rng, 4)
        s = sqrtm_psd(rho)
        assert np.allclose(s @ s, rho)
        assert is_hermitian(s, 1e-10)


def test_mat_json_roundtrip():
    rng = np.random.default_rng(11)
    m = rng.normal(size=(3, 5)) + 1j * rng.normal(size=(3, 5))
    back = mat_from_json(mat_to_json(m))
    assert np.array_equal(back, m)
    assert np.array_equal(mat_loads(mat_dumps(m)), m)
