"""Reconstruction of a three-step process from one middle instrument's
conditional statistics, plus the tools to compare it against the truth.

The reconstructed object replaces the middle input leg by dual-frame
operators weighted with event probabilities and conditional marginals. It
is a faithful predictor only for middle-party observables inside the span
of the instrument it was built from, and it need not be globally positive;
expectation therefore validates observables before contracting.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .instruments import (DualFrame, Instrument, PAULI, dual_frame,
                          span_project)
from .linalg import Leg, LegLayout, kron, partial_trace
from .process import (_CANON_PERM, ProcessTensor, _permute_legs,
                      condition_instrument)

SPAN_TOL = 1e-10

# Pauli stack without the identity, for Bloch decompositions
_SIG = np.stack(PAULI[1:])


@dataclass(frozen=True)
class RecoveredProcess:
    """Process-shaped reconstruction valid on one instrument's span.

    Shares the core field names of ProcessTensor so conditioning and the
    Born fast path apply unchanged; positivity holds on the instrument
    span only, not globally.
    """
    matrix: np.ndarray = field(repr=False)
    layout: LegLayout
    gamma: np.ndarray = field(repr=False)
    input_dims: tuple[int, int, int]
    output_dims: tuple[int, int]
    source_instrument: Instrument
    dual: DualFrame
    # per-event (probability, A marginal, C marginal) of the true process
    events: tuple = field(repr=False, default=())


def recover(p: ProcessTensor | RecoveredProcess,
            inst: Instrument) -> RecoveredProcess:
    """Rebuild the process from the statistics of one middle instrument.

    The middle leg of each event is replaced by the instrument's dual
    operator, weighted by the event probability and tensored with the
    normalized conditional marginals of the two outer parties.
    """
    dA, dB, dC = p.input_dims
    dAo, dBo = p.output_dims
    if inst.dim != dB:
        raise ValueError("instrument dimension does not match middle leg")
    frame = dual_frame(inst)
    conds = condition_instrument(p, "B", inst)
    gamma_rec = np.zeros((dA * dB * dC, dA * dB * dC), dtype=complex)
    events = []
    for cond, dual in zip(conds, frame.duals):
        prob = cond.probability
        if prob <= 1e-14:
            events.append((0.0, np.eye(dA) / dA, np.eye(dC) / dC))
            continue
        gA = partial_trace(cond.state, (dA, dC), (0,))
        gC = partial_trace(cond.state, (dA, dC), (1,))
        gamma_rec = gamma_rec + prob * kron(gA, dual, gC)
        events.append((prob, gA, gC))
    big = kron(gamma_rec, np.eye(dAo), np.eye(dBo))
    full = _permute_legs(big, (dA, dB, dC, dAo, dBo), _CANON_PERM)
    lay = LegLayout((
        Leg("A_in", dA, "input"), Leg("A_out", dAo, "output"),
        Leg("B_in", dB, "input"), Leg("B_out", dBo, "output"),
        Leg("C_in", dC, "input"),
    ))
    return RecoveredProcess(full, lay, gamma_rec, (dA, dB, dC), (dAo, dBo),
                            inst, frame, tuple(events))


@dataclass(frozen=True)
class Observable:
    """Multi-time observable sum_y c_y A^(y) x B^(y) x C^(y)."""
    terms: tuple  # of (coefficient, alice_op, bob_op, charlie_op)

    def __post_init__(self):
        terms = tuple(
            (float(c), np.asarray(a, dtype=complex),
             np.asarray(b, dtype=complex), np.asarray(g, dtype=complex))
            for c, a, b, g in self.terms)
        object.__setattr__(self, "terms", terms)


def observable(coefficient, alice_op, bob_op, charlie_op) -> Observable:
    """Single-term observable helper."""
    return Observable(((coefficient, alice_op, bob_op, charlie_op),))


def validate_observable(obs: Observable, inst: Instrument) -> dict:
    """Per-term distance of the middle op from the instrument span."""
    mats = inst.matrices()
    residuals = []
    for _, _, bob_op, _ in obs.terms:
        proj = span_project(bob_op, mats)
        residuals.append(float(np.linalg.norm(bob_op - proj)))
    return {"residuals": residuals,
            "pass": all(r < SPAN_TOL for r in residuals)}


def expectation(p: ProcessTensor | RecoveredProcess,
                obs: Observable) -> float:
    """Expectation value of a product observable against the process.

    Output legs carry the identity convention of the process contraction,
    so each term reduces to a pairing on the input-leg state. Recovered
    processes reject observables whose middle part leaves the span.
    """
    if isinstance(p, RecoveredProcess):
        report = validate_observable(obs, p.source_instrument)
        if not report["pass"]:
            raise ValueError(
                "observable leaves the instrument span; the recovered "
                f"process cannot predict it (residuals {report['residuals']})")
    dA, dB, dC = p.input_dims
    val = 0.0
    for c, a_op, b_op, c_op in obs.terms:
        if a_op.shape != (dA, dA) or b_op.shape != (dB, dB) \
                or c_op.shape != (dC, dC):
            raise ValueError("observable term dimension mismatch")
        val += c * float(np.real(np.trace(kron(a_op, b_op, c_op) @ p.gamma)))
    return val


def _bloch_vectors(thetas, phases):
    """All Bloch vectors of cos(t)|0> + e^{i phase} sin(t)|1> on a grid.

    Returns the flattened (len(thetas)*len(phases), 3) array, theta slow.
    """
    t2 = 2.0 * np.asarray(thetas, dtype=float)[:, None]
    ph = np.asarray(phases, dtype=float)[None, :]
    n = np.empty((t2.shape[0], ph.shape[1], 3))
    n[..., 0] = np.sin(t2) * np.cos(ph)
    n[..., 1] = np.sin(t2) * np.sin(ph)
    n[..., 2] = np.cos(t2) * np.ones_like(ph)
    return n.reshape(-1, 3)


def _ac_bloch_data(p):
    """(a, c, M): Bloch marginals and correlation matrix of the AC state."""
    dA, dB, dC = p.input_dims
    if dA != 2 or dC != 2:
        raise ValueError("deviation scan requires qubit outer parties")
    g_ac = partial_trace(p.gamma, (dA, dB, dC), (0, 2))
    r4 = g_ac.reshape(2, 2, 2, 2)
    rA = np.einsum('acAc->aA', r4)
    rC = np.einsum('acaC->cC', r4)
    a = np.real(np.einsum('iAa,aA->i', _SIG, rA))
    c = np.real(np.einsum('iCc,cC->i', _SIG, rC))
    M = np.real(np.einsum('acAC,iAa,jCc->ij', r4, _SIG, _SIG))
    return a, c, M


@dataclass(frozen=True)
class ScanResult:
    """Flat grid of true/reconstructed expectation values and differences."""
    convention: str
    theta1: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    theta2: np.ndarray = field(repr=False)
    psi: np.ndarray = field(repr=False)
    true_values: np.ndarray = field(repr=False)
    recovered_values: np.ndarray = field(repr=False)
    abs_diff: np.ndarray = field(repr=False)
    max_abs_diff: float
    argmax: dict

    def to_csv(self, path) -> None:
        close = False
        if isinstance(path, (str, bytes)):
            fh = open(path, "w", newline="")
            close = True
        else:
            fh = path
        try:
            w = csv.writer(fh)
            w.writerow(["theta1", "phi", "theta2", "psi",
                        "true", "recovered", "abs_diff"])
            for row in zip(self.theta1, self.phi, self.theta2, self.psi,
                           self.true_values, self.recovered_values,
                           self.abs_diff):
                w.writerow([f"{v:.12g}" for v in row])
        finally:
            if close:
                fh.close()


def deviation_scan(true_p, recovered_p, grid: int = 64,
                   convention: str = "projector",
                   full: bool = False) -> ScanResult:
    """Grid scan of |<C>_true - <C>_rec| with the middle party untouched.

    Both outer parties range over pure-state directions parameterized by
    cos(theta)|0> + e^{i phase} sin(theta)|1>. The default scan sweeps
    theta1, theta2 over [0, pi/2] with both phases fixed to 0; full=True
    sweeps the phases over [0, 2pi) as well (grid^4 points). Convention
    "projector" contracts rank-1 projectors on both sides (values in
    [0, 1]); "correlator" contracts the +/-1 observable of each projector
    pair. Everything reduces to Bloch algebra, so the grid is evaluated
    in one vectorized pass, ordered by grid index.
    """
    if convention not in ("projector", "correlator"):
        raise ValueError(f"unknown convention {convention!r}")
    if grid < 2:
        raise ValueError("grid needs at least 2 steps per angle")
    if full and ((grid + 1) * grid) ** 2 > 2 ** 22:
        raise ValueError("full scan too large; reduce grid")
    # grid counts steps: thetas inclusive of both ends, phases periodic
    thetas = np.linspace(0.0, np.pi / 2, grid + 1)
    phases = np.linspace(0.0, 2 * np.pi, grid, endpoint=False) if full \
        else np.array([0.0])
    a_t, c_t, M_t = _ac_bloch_data(true_p)
    a_r, c_r, M_r = _ac_bloch_data(recovered_p)
    N1 = _bloch_vectors(thetas, phases)
    N2 = N1
    if convention == "projector":
        def values(a, c, M):
            u1 = N1 @ a
            u2 = N2 @ c
            return 0.25 * (1.0 + u1[:, None] + u2[None, :] + N1 @ M @ N2.T)
    else:
        def values(a, c, M):
            return N1 @ M @ N2.T
    tv = values(a_t, c_t, M_t)
    rv = values(a_r, c_r, M_r)
    diff = np.abs(tv - rv)
    k = int(np.argmax(diff))
    i1, i2 = divmod(k, diff.shape[1])
    n_ph = len(phases)
    ang = {
        "theta1": float(thetas[i1 // n_ph]), "phi": float(phases[i1 % n_ph]),
        "theta2": float(thetas[i2 // n_ph]), "psi": float(phases[i2 % n_ph]),
    }
    th1 = np.repeat(thetas, n_ph)
    ph1 = np.tile(phases, len(thetas))
    return ScanResult(
        convention=convention,
        theta1=np.repeat(th1, len(N2)), phi=np.repeat(ph1, len(N2)),
        theta2=np.tile(th1, len(N1)), psi=np.tile(ph1, len(N1)),
        true_values=tv.reshape(-1), recovered_values=rv.reshape(-1),
        abs_diff=diff.reshape(-1), max_abs_diff=float(diff[i1, i2]),
        argmax=ang)


def noisy_replay(gamma: np.ndarray, dims, strengths, seed=None) -> np.ndarray:
    """Leg-local depolarizing noise on a multipartite state.

    strengths is one value per leg (a scalar applies to every leg). Each
    leg is mixed toward its maximally mixed marginal while the other legs
    keep their joint state, so the trace is preserved exactly. The map is
    deterministic; seed is accepted for interface stability and unused.
    """
    g = np.asarray(gamma, dtype=complex)
    dims = tuple(int(d) for d in dims)
    n = len(dims)
    if np.isscalar(strengths):
        strengths = (float(strengths),) * n
    strengths = tuple(float(s) for s in strengths)
    if len(strengths) != n:
        raise ValueError("need one strength per leg")
    for s in strengths:
        if not 0.0 <= s <= 1.0:
            raise ValueError("depolarizing strength must be in [0, 1]")
    for k, s in enumerate(strengths):
        if s == 0.0:
            continue
        others = tuple(i for i in range(n) if i != k)
        rest = partial_trace(g, dims, others)
        mixed = kron(rest, np.eye(dims[k]) / dims[k])
        order = list(others) + [k]
        perm = tuple(order.index(j) for j in range(n))
        from_dims = tuple(dims[i] for i in order)
        g = (1.0 - s) * g + s * _permute_legs(mixed, from_dims, perm)
    return g


_RT2 = float(np.sqrt(2.0))

# tabulated event weights and rounded conditional marginals for the
# theta reconstruction of the two-qubit common-cause process
_REF_THETA_WEIGHTS = (2.0 * (3.0 - 2.0 * _RT2),
                      2.0 * (3.0 - 2.0 * _RT2),
                      8.0 * _RT2 - 11.0)
_REF_THETA_MARGINALS = (
    np.array([[0.5, 0.008967], [0.008967, 0.5]]),
    np.array([[0.5, 0.1976], [0.1976, 0.5]]),
    np.array([[0.5, -0.1652], [-0.1652, 0.5]]),
)
_REF_THETA_DUALS = (
    np.array([[-_RT2 / 2.0, 0.5], [0.5, (2.0 + _RT2) / 2.0]]),
    np.array([[1.0, -(1.0 + _RT2) / 2.0], [-(1.0 + _RT2) / 2.0, 0.0]]),
    np.array([[1.0, 0.5], [0.5, 0.0]]),
)


def reference_recovered_lambda() -> np.ndarray:
    """Tabulated closed form for the theta reconstruction of the
    two-qubit common-cause process, on legs (A, B, C).

    Assembled from rounded event weights and conditional marginals; the
    exact Born weights differ from the tabulated ones by up to 0.034, so
    recover() output sits a few parts in 1e3 away from this matrix.
    """
    out = np.zeros((8, 8), dtype=complex)
    for w, m, d in zip(_REF_THETA_WEIGHTS, _REF_THETA_MARGINALS,
                       _REF_THETA_DUALS):
        out = out + w * kron(m, d, m)
    return out


def reference_recovered_omega() -> np.ndarray:
    """Closed form for the xi reconstruction of the qubit-qutrit
    common-cause process, on legs (A, B, C).

    Each event enters with weight one half; the middle factor of each
    term is the corresponding xi dual operator, which keeps the total
    trace at one. recover() reproduces this matrix to machine precision.
    """
    term1 = kron(np.eye(2) / 2.0, np.diag([0.5, 0.5, 0.0]), np.eye(2) / 2.0)
    term2 = kron(np.diag([1.0, 0.0]), np.diag([0.0, 0.0, 1.0]),
                 np.diag([1.0, 0.0]))
    return (0.5 * (term1 + term2)).astype(complex)


__all__ = [
    "Observable", "RecoveredProcess", "ScanResult", "deviation_scan",
    "expectation", "noisy_replay", "observable", "recover",
    "reference_recovered_lambda", "reference_recovered_omega",
    "validate_observable",
]
