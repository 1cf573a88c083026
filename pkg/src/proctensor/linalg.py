"""Dense complex linear algebra on small labeled tensor legs.

Everything here operates on plain numpy arrays. Entropic quantities are in
bits (log base 2) throughout the package; eigenvalues below CLIP_EPS are
treated as exact zeros when taking logarithms.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

HERM_TOL = 1e-12
CLIP_EPS = 1e-12
LN2 = np.log(2.0)


@dataclass(frozen=True)
class Leg:
    label: str
    dim: int
    direction: str  # "input" | "output"

    def __post_init__(self):
        if self.direction not in ("input", "output"):
            raise ValueError(f"bad leg direction {self.direction!r}")
        if self.dim < 1:
            raise ValueError("leg dimension must be positive")


@dataclass(frozen=True)
class LegLayout:
    """Ordered list of legs; total dimension is the product of leg dims."""
    legs: tuple[Leg, ...]

    def __post_init__(self):
        labels = [leg.label for leg in self.legs]
        if len(set(labels)) != len(labels):
            raise ValueError("leg labels must be unique")

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(leg.dim for leg in self.legs)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    def labels(self) -> tuple[str, ...]:
        return tuple(leg.label for leg in self.legs)

    def index(self, label: str) -> int:
        for i, leg in enumerate(self.legs):
            if leg.label == label:
                return i
        raise KeyError(f"unknown leg label {label!r}")

    def subset(self, keep: set[str]) -> "LegLayout":
        unknown = keep - set(self.labels())
        if unknown:
            raise KeyError(f"unknown leg labels {sorted(unknown)}")
        return LegLayout(tuple(leg for leg in self.legs if leg.label in keep))


def layout(*spec: tuple[str, int, str]) -> LegLayout:
    return LegLayout(tuple(Leg(*s) for s in spec))


def is_hermitian(m: np.ndarray, tol: float = HERM_TOL) -> bool:
    return bool(np.abs(m - m.conj().T).max() <= tol)


def hermitize(m: np.ndarray) -> np.ndarray:
    return (m + m.conj().T) / 2


def kron(*mats: np.ndarray) -> np.ndarray:
    out = np.array([[1.0]], dtype=complex)
    for m in mats:
        out = np.kron(out, np.asarray(m, dtype=complex))
    return out


def dagger(m: np.ndarray) -> np.ndarray:
    return np.asarray(m).conj().T


def partial_trace(m: np.ndarray, dims: tuple[int, ...],
                  keep: tuple[int, ...]) -> np.ndarray:
    """Trace out all legs not in keep; kept legs stay in their given order.

    dims lists every leg dimension of the square matrix m; keep holds leg
    positions. Trace is preserved: tr(result) = tr(m).
    """
    n = len(dims)
    keep = tuple(keep)
    if any(k < 0 or k >= n for k in keep):
        raise IndexError("keep positions out of range")
    if int(np.prod(dims)) != m.shape[0] or m.shape[0] != m.shape[1]:
        raise ValueError("dims do not match matrix shape")
    t = np.asarray(m, dtype=complex).reshape(*dims, *dims)
    drop = [i for i in range(n) if i not in keep]
    for off, i in enumerate(sorted(drop)):
        ax = i - off
        t = np.trace(t, axis1=ax, axis2=ax + (n - off))
    d_keep = int(np.prod([dims[i] for i in keep])) if keep else 1
    return t.reshape(d_keep, d_keep)


def partial_trace_layout(m: np.ndarray, lay: LegLayout,
                         keep: set[str]) -> tuple[np.ndarray, LegLayout]:
    idx = tuple(i for i, leg in enumerate(lay.legs) if leg.label in keep)
    if len(idx) != len(keep):
        lay.subset(keep)  # raises with the offending labels
    return partial_trace(m, lay.dims, idx), lay.subset(keep)


def hermitian_eig(m: np.ndarray, tol: float = 1e-10):
    """Eigenvalues descending, eigenvectors as columns, phases fixed so the
    first nonzero component of each vector is real positive."""
    m = np.asarray(m, dtype=complex)
    if not is_hermitian(m, tol):
        raise ValueError("matrix is not Hermitian within tolerance")
    w, v = np.linalg.eigh(hermitize(m))
    order = np.argsort(w)[::-1]
    w, v = w[order], v[:, order]
    for k in range(v.shape[1]):
        col = v[:, k]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size:
            ph = col[nz[0]] / abs(col[nz[0]])
            v[:, k] = col / ph
    return w, v


def check_density(rho: np.ndarray, pos_tol: float = 1e-10,
                  trace_tol: float = 1e-8) -> None:
    if not is_hermitian(rho, 1e-10):
        raise ValueError("density matrix is not Hermitian")
    w = np.linalg.eigvalsh(hermitize(rho))
    if w.min() < -pos_tol:
        raise ValueError(f"negative eigenvalue {w.min():.3e}")
    tr = float(np.real(np.trace(rho)))
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"trace {tr} deviates from 1")


def von_neumann_entropy(rho: np.ndarray) -> float:
    """S(rho) = -sum e log2 e with 0 log 0 := 0."""
    check_density(rho)
    w = np.linalg.eigvalsh(hermitize(rho))
    w = w[w > CLIP_EPS]
    return float(-np.sum(w * np.log2(w)))


def relative_entropy(x: np.ndarray, y: np.ndarray) -> float:
    """S(x||y) = tr[x(log x - log y)] in bits.

    Raises if the support of x is not contained in the support of y.
    """
    check_density(x)
    check_density(y)
    wx, vx = np.linalg.eigh(hermitize(x))
    wy, vy = np.linalg.eigh(hermitize(y))
    ker = vy[:, wy <= CLIP_EPS]
    if ker.shape[1] and np.linalg.norm(ker.conj().T @ x @ ker) > 1e-10:
        raise ValueError("support violation: divergence is infinite")
    wx_c = wx[wx > CLIP_EPS]
    t1 = float(np.sum(wx_c * np.log2(wx_c)))
    log_y = (vy * np.log2(np.clip(wy, CLIP_EPS, None))) @ vy.conj().T
    t2 = float(np.real(np.trace(x @ log_y)))
    return t1 - t2


def sqrtm_psd(rho: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(hermitize(np.asarray(rho, dtype=complex)))
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Squared fidelity F = (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2."""
    check_density(rho)
    check_density(sigma)
    s = sqrtm_psd(rho)
    w = np.clip(np.linalg.eigvalsh(hermitize(s @ sigma @ s)), 0, None)
    return float(np.sum(np.sqrt(w)) ** 2)


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    w = np.linalg.eigvalsh(hermitize(np.asarray(a) - np.asarray(b)))
    return float(np.sum(np.abs(w)) / 2)


def trace_norm(m: np.ndarray) -> float:
    s = np.linalg.svd(np.asarray(m, dtype=complex), compute_uv=False)
    return float(np.sum(s))


def mat_to_json(m: np.ndarray) -> dict:
    m = np.asarray(m, dtype=complex)
    return {"rows": int(m.shape[0]), "cols": int(m.shape[1]),
            "re": np.real(m).reshape(-1).tolist(),
            "im": np.imag(m).reshape(-1).tolist()}


def mat_from_json(obj: dict) -> np.ndarray:
    r, c = int(obj["rows"]), int(obj["cols"])
    re = np.array(obj["re"], dtype=float).reshape(r, c)
    im = np.array(obj["im"], dtype=float).reshape(r, c)
    return re + 1j * im


def mat_dumps(m: np.ndarray) -> str:
    return json.dumps(mat_to_json(m), sort_keys=True)


def mat_loads(s: str) -> np.ndarray:
    return mat_from_json(json.loads(s))
