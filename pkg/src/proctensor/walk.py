"""Discrete-time quantum walk on a line whose output ports realize POVMs.

A walker starts at the origin carrying a coin qubit. Each circuit step
applies position-controlled coin unitaries (identity elsewhere) and then a
conditional translation. Terminal positions act as output ports: the
amplitude pairs reaching a port form a Kraus row, and port statistics
realize a coin-space POVM. Circuits are data (coins plus a port-to-element
map); this module executes and verifies them, it does not synthesize coins
for a target POVM.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .instruments import Instrument, instrument
from .linalg import mat_from_json, mat_to_json

NORM_TOL = 1e-12
UNITARY_TOL = 1e-10
PORT_AMP_TOL = 1e-12

# coin basis: 0 = H (moves left), 1 = V (moves right)
BITFLIP = np.array([[0, 1], [1, 0]], dtype=complex)


@dataclass(frozen=True)
class WalkState:
    """Sparse walker state: (position, coin) -> amplitude, unit norm."""
    amplitudes: dict

    def __post_init__(self):
        total = sum(abs(a) ** 2 for a in self.amplitudes.values())
        if abs(total - 1.0) > NORM_TOL:
            raise ValueError(f"walk state norm {total} deviates from 1")

    @property
    def positions(self) -> tuple:
        return tuple(sorted({x for x, _ in self.amplitudes}))


def coin_state(vec) -> WalkState:
    """Walker at the origin with the given coin amplitudes (H, V)."""
    v = np.asarray(vec, dtype=complex).reshape(2)
    return WalkState({(0, 0): v[0], (0, 1): v[1]})


def translate(s: WalkState) -> WalkState:
    """Conditional shift: V moves right, H moves left. Exactly unitary."""
    out = {}
    for (x, c), a in s.amplitudes.items():
        nx = x + 1 if c == 1 else x - 1
        out[(nx, c)] = out.get((nx, c), 0) + a
    return WalkState(out)


def _check_unitary(U: np.ndarray, pos) -> np.ndarray:
    U = np.asarray(U, dtype=complex)
    if U.shape != (2, 2):
        raise ValueError(f"coin at position {pos} is not 2x2")
    if np.linalg.norm(U.conj().T @ U - np.eye(2)) > UNITARY_TOL:
        raise ValueError(f"coin at position {pos} is not unitary")
    return U


def apply_coins(s: WalkState, coins: dict) -> WalkState:
    """Apply position-controlled coin unitaries, identity elsewhere."""
    ops = {int(x): _check_unitary(U, x) for x, U in coins.items()}
    present = {x for (x, _), a in s.amplitudes.items()
               if abs(a) > PORT_AMP_TOL}
    idle = sorted(set(ops) - present)
    if idle:
        warnings.warn(f"coins at unreachable positions {idle} act on "
                      "nothing", stacklevel=2)
    out = {}
    for (x, c), a in s.amplitudes.items():
        U = ops.get(x)
        if U is None:
            out[(x, c)] = out.get((x, c), 0) + a
            continue
        for c2 in (0, 1):
            amp = U[c2, c] * a
            if amp != 0:
                out[(x, c2)] = out.get((x, c2), 0) + amp
    return WalkState(out)


@dataclass(frozen=True)
class WalkCircuit:
    """Ordered coin maps (one per step, translation follows each) plus the
    port-to-element assignment, which is circuit data."""
    steps: tuple
    ports: dict  # terminal position -> 1-based POVM element index
    name: str = ""

    def __post_init__(self):
        steps = tuple({int(x): _check_unitary(U, x) for x, U in st.items()}
                      for st in self.steps)
        object.__setattr__(self, "steps", steps)
        ports = {int(x): int(i) for x, i in self.ports.items()}
        if sorted(ports.values()) != list(range(1, len(ports) + 1)):
            raise ValueError("port map must enumerate elements 1..n once")
        object.__setattr__(self, "ports", ports)

    @property
    def n_elements(self) -> int:
        return len(self.ports)


def run_protocol(initial_coin, circuit: WalkCircuit) -> dict:
    """Run the full circuit from the origin; group output by port.

    Returns {position: (amp_H, amp_V)} over terminal positions carrying
    amplitude, ordered by position descending.
    """
    s = coin_state(initial_coin)
    for coins in circuit.steps:
        s = translate(apply_coins(s, coins))
    out = {}
    for (x, c), a in s.amplitudes.items():
        pair = out.setdefault(x, [0j, 0j])
        pair[c] += a
    return {x: tuple(out[x]) for x in sorted(out, reverse=True)}


def extract_povm(circuit: WalkCircuit) -> Instrument:
    """POVM realized by the circuit, from basis-state runs.

    Each port's Kraus matrix collects the output amplitude pairs for coin
    inputs H and V; the element is K^dag K, placed at the index the
    circuit's port map assigns.
    """
    # a single basis run cannot reach every branch of a deterministic
    # first coin; coverage is checked across both runs via the port map
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        runs = [run_protocol(basis, circuit) for basis in ((1, 0), (0, 1))]
    observed = set()
    for run in runs:
        for x, pair in run.items():
            if max(abs(pair[0]), abs(pair[1])) > PORT_AMP_TOL:
                observed.add(x)
    if len(observed) > circuit.n_elements:
        raise ValueError(
            f"walker reached {len(observed)} ports, circuit declares "
            f"{circuit.n_elements} elements")
    undeclared = observed - set(circuit.ports)
    if undeclared:
        raise ValueError(f"walker reached undeclared ports "
                         f"{sorted(undeclared)}")
    mats = [np.zeros((2, 2), dtype=complex)
            for _ in range(circuit.n_elements)]
    for x, idx in circuit.ports.items():
        K = np.zeros((2, 2), dtype=complex)
        for col, run in enumerate(runs):
            pair = run.get(x, (0j, 0j))
            K[0, col] = pair[0]
            K[1, col] = pair[1]
        mats[idx - 1] = K.conj().T @ K
    resid = float(np.linalg.norm(sum(mats) - np.eye(2)))
    if resid > 1e-8:
        raise ValueError(f"port POVM incomplete: residual {resid:.3e}")
    return instrument(mats, circuit.name or "walk")


def port_probabilities(initial_coin, circuit: WalkCircuit) -> dict:
    """Probability of the walker terminating at each declared port."""
    run = run_protocol(initial_coin, circuit)
    probs = {}
    for x in circuit.ports:
        pair = run.get(x, (0j, 0j))
        probs[x] = float(abs(pair[0]) ** 2 + abs(pair[1]) ** 2)
    return probs


def _round_steps(c1, c2):
    # one protocol round: coin at the origin, then coin at x=1 with a
    # bit flip at x=-1; a translation follows each map
    return ({0: c1}, {1: c2, -1: BITFLIP})


def theta_circuit() -> WalkCircuit:
    """Two-round circuit realizing the three-element unsharp POVM.

    The two non-identity coins are unitarized forms of the printed table
    entries (the printed matrices fail unitarity by 0.69 and 1.0; the
    corrected coins keep their sign pattern and reproduce every element
    exactly).
    """
    rt2 = np.sqrt(2.0)
    c12 = np.array([[2 ** 0.25, 1], [1, -(2 ** 0.25)]],
                   dtype=complex) / np.sqrt(1 + rt2)
    s = np.sqrt((rt2 - 1) / rt2)
    c21 = np.array([[-(2 ** -0.25), s], [s, 2 ** -0.25]], dtype=complex)
    eye = np.eye(2, dtype=complex)
    steps = _round_steps(eye, c12) + _round_steps(c21, eye)
    return WalkCircuit(steps, {0: 2, 2: 3, 4: 1}, "theta")


def tetra_circuit() -> WalkCircuit:
    """Three-round circuit built from the printed tetrahedral coin table.

    The coins are entered exactly as printed (all unitary). The realized
    elements form a tetrahedral POVM that is a global qubit rotation of
    tetra_povm(); the port map records the rotated-frame correspondence.
    """
    rt2, rt3 = np.sqrt(2.0), np.sqrt(3.0)
    ph = np.exp(1j * np.pi / 4)
    c11 = np.array([[1 + rt3, rt2], [rt2 * ph, -(1 + rt3) * ph]],
                   dtype=complex) / np.sqrt(6 + 2 * rt3)
    c12 = np.array([[-1, 1], [1, 1]], dtype=complex) / rt2
    c21 = np.array([[1, 1], [1, -1]], dtype=complex) / rt2
    c22 = np.array([[rt2, 1], [1, -rt2]], dtype=complex) / rt3
    c31 = np.array([[np.exp(-1j * np.pi / 3), np.exp(1j * np.pi / 6)],
                    [np.exp(1j * np.pi / 3), np.exp(-1j * np.pi / 6)]],
                   dtype=complex) / rt2
    c32 = np.eye(2, dtype=complex)
    steps = (_round_steps(c11, c12) + _round_steps(c21, c22)
             + _round_steps(c31, c32))
    return WalkCircuit(steps, {0: 1, 2: 4, 4: 3, 6: 2}, "tetra")


def circuit_by_name(name: str) -> WalkCircuit:
    builders = {"theta": theta_circuit, "tetra": tetra_circuit}
    if name not in builders:
        raise KeyError(f"unknown circuit {name!r} "
                       f"(expected one of {sorted(builders)})")
    return builders[name]()


def circuit_to_json(circuit: WalkCircuit) -> dict:
    return {
        "name": circuit.name,
        "steps": [{"coins": {str(x): mat_to_json(U) for x, U in st.items()}}
                  for st in circuit.steps],
        "ports": [[x, i] for x, i in sorted(circuit.ports.items())],
    }


def circuit_from_json(obj: dict) -> WalkCircuit:
    steps = []
    for st in obj["steps"]:
        coins = {}
        for x, U in st["coins"].items():
            coins[int(x)] = BITFLIP if U == "bitflip" else mat_from_json(U)
        steps.append(coins)
    ports = {int(x): int(i) for x, i in obj["ports"]}
    return WalkCircuit(tuple(steps), ports, obj.get("name", ""))


_SIGMA = (np.array([[0, 1], [1, 0]], dtype=complex),
          np.array([[0, -1j], [1j, 0]], dtype=complex),
          np.array([[1, 0], [0, -1]], dtype=complex))


def bloch_vector(element: np.ndarray) -> np.ndarray:
    """Pauli components (tr[E sigma_j] / 2) of a Hermitian qubit operator."""
    e = np.asarray(element, dtype=complex)
    if e.shape != (2, 2):
        raise ValueError("qubit operator expected")
    return np.array([np.trace(e @ s).real / 2.0 for s in _SIGMA])


def _su2_from_rotation(rot: np.ndarray) -> np.ndarray:
    # quaternion extraction, branch on the largest diagonal combination
    t = np.trace(rot)
    if t > 0:
        w = 0.5 * np.sqrt(1.0 + t)
        x = (rot[2, 1] - rot[1, 2]) / (4.0 * w)
        y = (rot[0, 2] - rot[2, 0]) / (4.0 * w)
        z = (rot[1, 0] - rot[0, 1]) / (4.0 * w)
    else:
        i = int(np.argmax(np.diag(rot)))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = np.sqrt(max(1.0 + rot[i, i] - rot[j, j] - rot[k, k], 0.0))
        q = np.zeros(4)
        q[1 + i] = 0.5 * s
        q[0] = (rot[k, j] - rot[j, k]) / (2.0 * s)
        q[1 + j] = (rot[j, i] + rot[i, j]) / (2.0 * s)
        q[1 + k] = (rot[k, i] + rot[i, k]) / (2.0 * s)
        w, x, y, z = q
    return w * np.eye(2) - 1j * (x * _SIGMA[0] + y * _SIGMA[1] + z * _SIGMA[2])


def align_frames(target_mats, mats) -> tuple[np.ndarray, float]:
    """Best single-qubit rotation U with target[x] ~ U mats[x] U^dag.

    Elements are matched by index. The rotation acts on the Bloch
    vectors, fit by an SVD Procrustes step; only proper rotations are
    reachable by conjugation, so a reflection-only match reports a
    large residual instead. Returns (U, max entrywise residual).
    """
    target_mats = [np.asarray(m, dtype=complex) for m in target_mats]
    mats = [np.asarray(m, dtype=complex) for m in mats]
    if len(target_mats) != len(mats):
        raise ValueError("element lists differ in length")
    va = np.array([bloch_vector(m) for m in target_mats])
    vb = np.array([bloch_vector(m) for m in mats])
    corr = vb.T @ va
    u, _, vt = np.linalg.svd(corr)
    # det correction flips the smallest-singular-value axis so degenerate
    # (coplanar) vector sets still yield a proper rotation
    d1 = np.diag([1.0, 1.0, float(np.linalg.det(vt.T @ u.T))])
    d2 = np.diag([1.0, 1.0, float(np.linalg.det(u @ vt))])
    best = None
    for rot in (vt.T @ d1 @ u.T, u @ d2 @ vt):
        cand = _su2_from_rotation(rot)
        for op in (cand, cand.conj().T):
            resid = max(
                float(np.max(np.abs(a - op @ b @ op.conj().T)))
                for a, b in zip(target_mats, mats))
            if best is None or resid < best[1]:
                best = (op, resid)
    return best


def save_circuit(circuit: WalkCircuit, path) -> None:
    with open(path, "w") as fh:
        json.dump(circuit_to_json(circuit), fh, indent=1, sort_keys=True)


def load_circuit(path) -> WalkCircuit:
    with open(path) as fh:
        return circuit_from_json(json.load(fh))


__all__ = [
    "BITFLIP", "WalkCircuit", "WalkState", "align_frames", "apply_coins",
    "bloch_vector", "circuit_by_name", "circuit_from_json", "circuit_to_json",
    "coin_state", "extract_povm", "load_circuit", "port_probabilities",
    "run_protocol", "save_circuit", "tetra_circuit", "theta_circuit",
    "translate",
]
