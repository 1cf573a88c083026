"""Process-tensor construction, validity checks, the temporal Born rule, and
conditioning on instrument events.

A three-step common-cause process is the Choi operator
Gamma = gamma (on the three input legs) x identity (on the two output legs),
with legs kept in chronological order (A_in, A_out, B_in, B_out, C_in).
Contractions follow the Choi convention in which a CP map's Choi matrix
carries the transposed POVM element on its input leg and the Born trace
transposes the instrument side; the net effect is the plain pairing
tr[(E_A x E_B x E_C) gamma], which the fast paths below use directly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .instruments import Instrument
from .linalg import Leg, LegLayout, hermitize, kron, partial_trace

PARTIES = ("A", "B", "C")

# (Ai,Bi,Ci,Ao,Bo) -> (Ai,Ao,Bi,Bo,Ci)
_CANON_PERM = (0, 3, 1, 4, 2)


def _permute_legs(m: np.ndarray, dims_from: tuple[int, ...],
                  perm: tuple[int, ...]) -> np.ndarray:
    n = len(dims_from)
    t = m.reshape(*dims_from, *dims_from)
    axes = list(perm) + [p + n for p in perm]
    t = t.transpose(axes)
    d = int(np.prod(dims_from))
    return t.reshape(d, d)


@dataclass(frozen=True)
class ProcessTensor:
    """Common-cause process tensor in chronological leg order."""
    matrix: np.ndarray = field(repr=False)
    layout: LegLayout
    gamma: np.ndarray = field(repr=False)  # input-leg state (A_in,B_in,C_in)
    input_dims: tuple[int, int, int]
    output_dims: tuple[int, int]

    @property
    def trace_norm_target(self) -> int:
        return int(np.prod(self.output_dims))

    def validate(self, pos_tol: float = 1e-10, trace_tol: float = 1e-8):
        w = np.linalg.eigvalsh(hermitize(self.matrix))
        if w.min() < -pos_tol:
            raise ValueError(f"process not PSD: min eigenvalue {w.min():.3e}")
        tr = float(np.real(np.trace(self.matrix)))
        if abs(tr - self.trace_norm_target) > trace_tol:
            raise ValueError(
                f"trace {tr} deviates from {self.trace_norm_target}")
        return self


def build_common_cause(gamma: np.ndarray,
                       input_dims: tuple[int, int, int],
                       output_dims: tuple[int, int]) -> ProcessTensor:
    """Promote a tripartite input-leg state to a full process tensor."""
    gamma = np.asarray(gamma, dtype=complex)
    dA, dB, dC = input_dims
    dAo, dBo = output_dims
    if gamma.shape != (dA * dB * dC, dA * dB * dC):
        raise ValueError("state dimension does not match input_dims")
    big = kron(gamma, np.eye(dAo), np.eye(dBo))
    full = _permute_legs(big, (dA, dB, dC, dAo, dBo), _CANON_PERM)
    lay = LegLayout((
        Leg("A_in", dA, "input"), Leg("A_out", dAo, "output"),
        Leg("B_in", dB, "input"), Leg("B_out", dBo, "output"),
        Leg("C_in", dC, "input"),
    ))
    return ProcessTensor(full, lay, gamma, tuple(input_dims),
                         tuple(output_dims)).validate()


def check_causality(p: ProcessTensor) -> dict:
    """Trace-condition hierarchy: discarding the future must leave an
    identity output leg times the earlier process. Diagnostic report."""
    dims = p.layout.dims  # (dA, dAo, dB, dBo, dC)
    dA, dAo, dB, dBo, dC = dims
    # level 3: trace C_in, compare to 1_{B_out} x Upsilon_{2:1}
    g3 = partial_trace(p.matrix, dims, (0, 1, 2, 3))
    up2 = partial_trace(p.matrix, dims, (0, 1, 2)) / dBo
    ref3 = _permute_legs(kron(up2, np.eye(dBo)),
                         (dA, dAo, dB, dBo), (0, 1, 2, 3))
    r3 = float(np.linalg.norm(g3 - ref3))
    # level 2: trace B_in of Upsilon_{2:1}, compare to 1_{A_out} x gamma_A
    g2 = partial_trace(up2, (dA, dAo, dB), (0, 1))
    up1 = partial_trace(up2, (dA, dAo, dB), (0,)) / dAo
    r2 = float(np.linalg.norm(g2 - kron(up1, np.eye(dAo))))
    # level 1: full trace of gamma_A is 1
    r1 = abs(float(np.real(np.trace(up1))) - 1.0)
    residuals = {"level3": r3, "level2": r2, "level1": r1}
    return {"residuals": residuals,
            "ok": all(v < 1e-8 for v in residuals.values())}


def measure_discard_choi(element: np.ndarray, d_out: int) -> np.ndarray:
    """Choi matrix of 'measure POVM element, discard, emit maximally mixed'.

    The input-leg marginal of a Choi matrix is the transposed element, so
    the transpose sits here and the Born trace cancels it.
    """
    return kron(np.asarray(element).T, np.eye(d_out) / d_out)


def final_choi(element: np.ndarray) -> np.ndarray:
    """Choi of a final-party POVM element (input leg only)."""
    return np.asarray(element, dtype=complex).T


def born_rule(p: ProcessTensor, ops: list[np.ndarray]) -> float:
    """Temporal Born rule p = tr[(op_A x op_B x op_C)^T Gamma].

    ops are per-party CP-map Choi matrices on (input, output) legs; the
    final party's op lives on its input leg alone.
    """
    if len(ops) != 3:
        raise ValueError("need one op per party")
    dA, dAo, dB, dBo, dC = p.layout.dims
    expect = ((dA * dAo, dA * dAo), (dB * dBo, dB * dBo), (dC, dC))
    for op, shape in zip(ops, expect):
        if np.asarray(op).shape != shape:
            raise ValueError("op dimension mismatch")
    joint = kron(*ops)
    val = complex(np.trace(joint.T @ p.matrix))
    if abs(val.imag) > 1e-10:
        raise ValueError(f"Born probability has imaginary part {val.imag}")
    if not -1e-10 <= val.real <= 1 + 1e-10:
        raise ValueError(f"Born probability {val.real} outside [0, 1]")
    return float(val.real)


def born_probability(p: ProcessTensor,
                     a_element: np.ndarray | None = None,
                     b_element: np.ndarray | None = None,
                     c_element: np.ndarray | None = None) -> float:
    """Born probability from POVM elements (None means non-selective).

    Fast path evaluated directly on the input-leg state; identical to
    born_rule with measure-and-discard Chois.
    """
    dA, dB, dC = p.input_dims
    EA = np.eye(dA) if a_element is None else np.asarray(a_element)
    EB = np.eye(dB) if b_element is None else np.asarray(b_element)
    EC = np.eye(dC) if c_element is None else np.asarray(c_element)
    val = complex(np.trace(kron(EA, EB, EC) @ p.gamma))
    return float(val.real)


@dataclass(frozen=True)
class ConditionalProcess:
    """Process left over after one party's instrument fires one event."""
    matrix: np.ndarray = field(repr=False)  # remaining legs, unnormalized
    layout: LegLayout
    probability: float
    event_index: int
    state: np.ndarray = field(repr=False)  # normalized remaining-input state
    input_dims: tuple[int, ...]


def _condition_gamma(gamma6, element):
    # cond[ac,a'c'] = sum_{b,b''} E[b,b''] gamma[(a,b'',c),(a',b,c')]
    return np.einsum('bD,aDcAbC->acAC', element, gamma6)


def condition(p: ProcessTensor, party: str, element: np.ndarray,
              event_index: int = 0) -> ConditionalProcess:
    """Condition the process on one instrument event at one party.

    The remaining parties keep their legs (identity output legs included);
    probability is the trace after identity-leg normalization.
    """
    dA, dB, dC = p.input_dims
    dAo, dBo = p.output_dims
    element = np.asarray(element, dtype=complex)
    g6 = p.gamma.reshape(dA, dB, dC, dA, dB, dC)
    if party == "B":
        cond = _condition_gamma(g6, element).reshape(dA * dC, dA * dC)
        prob = float(np.real(np.trace(cond)))
        c4 = cond.reshape(dA, dC, dA, dC)
        mat = np.einsum('acAC,oO->aocAOC', c4, np.eye(dAo)
                        ).reshape(dA * dAo * dC, dA * dAo * dC)
        lay = LegLayout((Leg("A_in", dA, "input"), Leg("A_out", dAo, "output"),
                         Leg("C_in", dC, "input")))
        state = cond / prob if prob > 1e-14 else cond
        return ConditionalProcess(mat, lay, prob, event_index, state,
                                  (dA, dC))
    if party == "A":
        cond = np.einsum('aD,DbcaBC->bcBC', element, g6)
        cond = cond.reshape(dB * dC, dB * dC)
        prob = float(np.real(np.trace(cond)))
        c4 = cond.reshape(dB, dC, dB, dC)
        mat = np.einsum('bcBC,oO->bocBOC', c4, np.eye(dBo)
                        ).reshape(dB * dBo * dC, dB * dBo * dC)
        lay = LegLayout((Leg("B_in", dB, "input"), Leg("B_out", dBo, "output"),
                         Leg("C_in", dC, "input")))
        state = cond / prob if prob > 1e-14 else cond
        return ConditionalProcess(mat, lay, prob, event_index, state,
                                  (dB, dC))
    if party == "C":
        cond = np.einsum('cD,abDABc->abAB', element, g6)
        cond = cond.reshape(dA * dB, dA * dB)
        prob = float(np.real(np.trace(cond)))
        c4 = cond.reshape(dA, dB, dA, dB)
        mat = np.einsum('abAB,oO,pP->aobpAOBP', c4, np.eye(dAo), np.eye(dBo)
                        ).reshape(dA * dAo * dB * dBo, dA * dAo * dB * dBo)
        lay = LegLayout((Leg("A_in", dA, "input"), Leg("A_out", dAo, "output"),
                         Leg("B_in", dB, "input"), Leg("B_out", dBo, "output")))
        state = cond / prob if prob > 1e-14 else cond
        return ConditionalProcess(mat, lay, prob, event_index, state,
                                  (dA, dB))
    raise KeyError(f"unknown party {party!r} (expected A, B, or C)")


def condition_instrument(p: ProcessTensor, party: str,
                         inst: Instrument) -> list[ConditionalProcess]:
    return [condition(p, party, e.matrix, i + 1)
            for i, e in enumerate(inst.elements)]


def marginals(p: ProcessTensor) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    dims = p.input_dims
    gA = partial_trace(p.gamma, dims, (0,))
    gB = partial_trace(p.gamma, dims, (1,))
    gC = partial_trace(p.gamma, dims, (2,))
    return gA, gB, gC


def markov_product(p: ProcessTensor) -> ProcessTensor:
    """The memoryless process with the same single-party marginals."""
    gA, gB, gC = marginals(p)
    return build_common_cause(kron(gA, gB, gC), p.input_dims, p.output_dims)


def cp_divisibility_check(p: ProcessTensor) -> dict:
    """Verify the step maps are channels whose Chois factor as
    identity-output x next-input-marginal, so composition holds exactly."""
    dims = p.layout.dims
    dA, dAo, dB, dBo, dC = dims
    gA, gB, gC = marginals(p)
    # each traced-out output leg contributes its dimension to the norm
    ao_bi = partial_trace(p.matrix, dims, (1, 2)) / dBo
    bo_ci = partial_trace(p.matrix, dims, (3, 4)) / dAo
    ao_ci = partial_trace(p.matrix, dims, (1, 4)) / dBo
    residuals = {
        "A_out:B_in": float(np.linalg.norm(ao_bi - kron(np.eye(dAo), gB))),
        "B_out:C_in": float(np.linalg.norm(bo_ci - kron(np.eye(dBo), gC))),
        "A_out:C_in": float(np.linalg.norm(ao_ci - kron(np.eye(dAo), gC))),
    }
    return {"residuals": residuals,
            "ok": all(v < 1e-10 for v in residuals.values())}


__all__ = [
    "ConditionalProcess", "PARTIES", "ProcessTensor", "born_probability",
    "born_rule", "build_common_cause", "check_causality",
    "condition", "condition_instrument", "cp_divisibility_check",
    "final_choi", "marginals", "markov_product", "measure_discard_choi",
]
