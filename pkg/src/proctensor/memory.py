"""Memory metrics: non-Markovianity, instrument-specific memory strength,
Markov-order testing, conditional mutual information, and the Haar survey of
projective instruments.

All information quantities are in bits. For common-cause processes the
identity output legs carry no correlations, so every metric here evaluates
on input-leg states; the full-Choi equivalence is exercised by the tests.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .instruments import Instrument
from .linalg import (kron, partial_trace, relative_entropy, trace_distance,
                     von_neumann_entropy)
from .process import ProcessTensor, condition_instrument, marginals


def non_markovianity(p: ProcessTensor) -> float:
    """Relative entropy to the nearest memoryless process, in bits.

    The minimizer is the product of the process marginals, so the value is
    the total correlation of the input-leg state; identity output legs
    cancel between the two normalized Choi operators.
    """
    gA, gB, gC = marginals(p)
    return relative_entropy(p.gamma, kron(gA, gB, gC))


def non_markovianity_choi(p: ProcessTensor) -> float:
    """Same quantity evaluated on full normalized Choi operators.

    Kept as the cross-check path; agrees with non_markovianity to
    numerical precision.
    """
    from .process import markov_product
    norm = p.trace_norm_target
    return relative_entropy(p.matrix / norm, markov_product(p).matrix / norm)


def mutual_information(rho: np.ndarray, split: tuple[int, int]) -> float:
    """I(1:2) = S_1 + S_2 - S_12 for a bipartite state."""
    d1, d2 = split
    r1 = partial_trace(rho, (d1, d2), (0,))
    r2 = partial_trace(rho, (d1, d2), (1,))
    return (von_neumann_entropy(r1) + von_neumann_entropy(r2)
            - von_neumann_entropy(rho))


def quantum_cmi(gamma: np.ndarray, dims: tuple[int, int, int]) -> float:
    """I(A:C|B) = S_AB + S_BC - S_ABC - S_B (nonnegative by strong
    subadditivity)."""
    rAB = partial_trace(gamma, dims, (0, 1))
    rBC = partial_trace(gamma, dims, (1, 2))
    rB = partial_trace(gamma, dims, (1,))
    return (von_neumann_entropy(rAB) + von_neumann_entropy(rBC)
            - von_neumann_entropy(gamma) - von_neumann_entropy(rB))


def quantum_cmi_choi(p: ProcessTensor) -> float:
    """I(A:C|B) on the trace-normalized full Choi operator, with the B
    block taken as (B_in, B_out). Equals the state-level value for
    common-cause processes (identity legs contribute zero)."""
    dA, dAo, dB, dBo, dC = p.layout.dims
    m = p.matrix / p.trace_norm_target
    # legs are contiguous per party, so regrouping is just coarser dims
    return quantum_cmi(m, (dA * dAo, dB * dBo, dC))


def confusion_probability(n: int, nm_bits: float) -> float:
    """Asymptotic probability of mistaking the process for its memoryless
    counterpart after n shots; the exponent wants natural units, so the
    bit-valued argument is scaled by ln 2 before exponentiation."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    return float(np.exp(-n * nm_bits * np.log(2.0)))


@dataclass(frozen=True)
class MemoryReport:
    per_event: tuple[tuple[float, float], ...]  # (probability, MI bits)
    aggregate_uniform: float
    aggregate_weighted: float
    max_event: float
    flags: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        return {
            "per_event": [{"probability": p, "mutual_information": m}
                          for p, m in self.per_event],
            "aggregate_uniform": self.aggregate_uniform,
            "aggregate_weighted": self.aggregate_weighted,
            "max_event": self.max_event,
            "flags": list(self.flags),
        }


def memory_strength(p: ProcessTensor, inst: Instrument) -> MemoryReport:
    """Per-event mutual information between the first and last party after
    the middle party's instrument fires, plus uniform and probability
    weighted aggregates."""
    dA, _, dC = p.input_dims
    rows = []
    flags = []
    for cp in condition_instrument(p, "B", inst):
        if cp.probability <= 1e-14:
            rows.append((0.0, 0.0))
            flags.append(f"event {cp.event_index}: zero probability")
            continue
        mi = mutual_information(cp.state, (dA, dC))
        rows.append((cp.probability, max(mi, 0.0)))
    mis = np.array([m for _, m in rows])
    ps = np.array([pr for pr, _ in rows])
    return MemoryReport(tuple(rows), float(mis.mean()),
                        float(ps @ mis), float(mis.max()), tuple(flags))


def markov_order_test(p: ProcessTensor, inst: Instrument,
                      tol: float = 1e-8) -> tuple[bool, dict]:
    """True iff every event's conditional state is product across the
    first/last split within trace distance tol. Mutual information is
    reported alongside as the secondary criterion."""
    dA, _, dC = p.input_dims
    events = []
    for cp in condition_instrument(p, "B", inst):
        if cp.probability <= 1e-14:
            events.append({"event": cp.event_index, "probability": 0.0,
                           "trace_distance": 0.0, "mutual_information": 0.0})
            continue
        rA = partial_trace(cp.state, (dA, dC), (0,))
        rC = partial_trace(cp.state, (dA, dC), (1,))
        td = trace_distance(cp.state, kron(rA, rC))
        mi = mutual_information(cp.state, (dA, dC))
        events.append({"event": cp.event_index,
                       "probability": cp.probability,
                       "trace_distance": td,
                       "mutual_information": max(mi, 0.0)})
    ok = all(e["trace_distance"] < tol for e in events)
    return ok, {"events": events, "tol": tol, "markov_order_one": ok}


def _survey_chunk(gamma6, nsamp: int, seed, cutoff: float) -> int:
    """One vectorized survey chunk: Haar projector pairs, max event MI."""
    rng = np.random.default_rng(seed)
    V = rng.normal(size=(nsamp, 2)) + 1j * rng.normal(size=(nsamp, 2))
    V = V / np.linalg.norm(V, axis=1, keepdims=True)
    P = np.einsum('ni,nj->nij', V, V.conj())
    mx = np.full(nsamp, -np.inf)
    for E in (P, np.eye(2)[None, :, :] - P):
        conds = np.einsum('nbD,aDcAbC->nacAC', E, gamma6)
        conds = conds.reshape(nsamp, 4, 4)
        pr = np.real(np.einsum('nii->n', conds))
        rho = conds / pr[:, None, None]
        rt = rho.reshape(-1, 2, 2, 2, 2)
        rA = np.einsum('nacbc->nab', rt)
        rC = np.einsum('nabcb->nac', rt)

        def ent(mats):
            w = np.clip(np.linalg.eigvalsh(mats), 1e-14, None)
            return -np.sum(w * np.log2(w), axis=1)

        mx = np.maximum(mx, ent(rA) + ent(rC) - ent(rho))
    return int((mx < cutoff).sum())


N_SURVEY_CHUNKS = 64


def projective_survey(p: ProcessTensor, cutoff: float, samples: int,
                      seed, threads: int | None = None) -> float:
    """Fraction of Haar-random projective qubit instruments at the middle
    party whose worst-event memory strength stays below cutoff.

    Work is split into 64 fixed chunks, each with its own child seed, so
    the result depends only on (samples, seed), not on thread count.
    """
    if cutoff <= 0:
        raise ValueError("cutoff must be positive")
    if samples < 100:
        raise ValueError("need at least 100 samples")
    if p.input_dims[1] != 2:
        raise ValueError("survey requires a qubit middle party")
    dA, dB, dC = p.input_dims
    gamma6 = p.gamma.reshape(dA, dB, dC, dA, dB, dC)
    children = np.random.SeedSequence(seed).spawn(N_SURVEY_CHUNKS)
    sizes = [samples // N_SURVEY_CHUNKS
             + (1 if i < samples % N_SURVEY_CHUNKS else 0)
             for i in range(N_SURVEY_CHUNKS)]
    if threads is None:
        threads = int(os.environ.get("PROCTENSOR_THREADS", "0")) or None
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            below = sum(ex.map(
                lambda cs: _survey_chunk(gamma6, cs[1], cs[0], cutoff),
                zip(children, sizes)))
    else:
        below = sum(_survey_chunk(gamma6, n, c, cutoff)
                    for c, n in zip(children, sizes))
    return below / samples


__all__ = [
    "MemoryReport", "confusion_probability", "markov_order_test",
    "memory_strength", "mutual_information", "non_markovianity",
    "non_markovianity_choi", "projective_survey", "quantum_cmi",
    "quantum_cmi_choi",
]
