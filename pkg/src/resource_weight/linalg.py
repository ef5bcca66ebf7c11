"""Dense Hermitian linear algebra shared by every other module.

Matrices are plain complex ``numpy`` arrays. Validation helpers
(:func:`as_hermitian`, :func:`as_density`) check the invariants once at the
boundary and return a cleaned copy, so the rest of the package can assume
well-formed inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np


@dataclass(frozen=True)
class Tolerances:
    """Single table of absolute tolerances used across the package."""

    hermitian: float = 1e-12      # residual max|A - A^dagger| after construction
    input: float = 1e-9           # PSD / trace checks on user inputs
    internal: float = 1e-10       # identities the code itself guarantees
    povm: float = 1e-8            # completeness of effects, channel trace preservation
    primal_res: float = 1e-8
    dual_res: float = 1e-8
    gap: float = 1e-7
    weight_zero: float = 1e-9     # below this a component of a split is dropped


TOL = Tolerances()


class SolverError(RuntimeError):
    """Numerical routine failed; ``residual`` carries the last measured error."""

    def __init__(self, message: str, residual: float | None = None, **info):
        super().__init__(message)
        self.residual = residual
        self.info = info


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def hermitian_residual(a: np.ndarray) -> float:
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - dagger(a))))


def as_hermitian(a, tol: float = TOL.input) -> np.ndarray:
    """Return ``(a + a^dagger)/2`` after checking ``a`` is Hermitian within ``tol``."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    res = hermitian_residual(a)
    if res > tol:
        raise ValueError(f"matrix is not Hermitian (residual {res:.3e})")
    return (a + dagger(a)) / 2


def as_density(a, tol: float = TOL.input) -> np.ndarray:
    """Validate a density matrix: Hermitian, min eigenvalue >= -tol, unit trace."""
    h = as_hermitian(a, tol)
    tr = float(np.trace(h).real)
    if abs(tr - 1.0) > tol:
        raise ValueError(f"density matrix must have unit trace, got {tr!r}")
    lam = np.linalg.eigvalsh(h)[0]
    if lam < -tol:
        raise ValueError(f"density matrix is not positive semidefinite (min eigenvalue {lam:.3e})")
    return h


def as_subnormalized(a, tol: float = TOL.input) -> np.ndarray:
    h = as_hermitian(a, tol)
    lam = np.linalg.eigvalsh(h)[0]
    if lam < -tol:
        raise ValueError(f"operator is not positive semidefinite (min eigenvalue {lam:.3e})")
    tr = float(np.trace(h).real)
    if tr > 1 + tol:
        raise ValueError(f"subnormalized state has trace {tr!r} > 1")
    return h


def herm_eig(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix, eigenvalues in descending order.

    Returns ``(eigenvalues, V)`` with the eigenvectors as the columns of ``V``.
    """
    h = as_hermitian(a)
    try:
        lam, vec = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"eigendecomposition did not converge: {exc}", residual=float("nan")) from exc
    lam, vec = lam[::-1].copy(), vec[:, ::-1].copy()
    residual = float(np.max(np.abs(h - (vec * lam) @ dagger(vec)))) if h.size else 0.0
    if residual > 1e-10 * max(1.0, float(np.max(np.abs(lam), initial=0.0))):
        raise SolverError("eigendecomposition reconstruction failed", residual=residual)
    return lam, vec


def eigvalsh(a: np.ndarray) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix in ascending order (no validation)."""
    return np.linalg.eigvalsh((a + dagger(a)) / 2)


def min_eig(a: np.ndarray) -> float:
    return float(eigvalsh(a)[0])


def trace_norm(a: np.ndarray) -> float:
    """Sum of singular values."""
    a = np.asarray(a, dtype=complex)
    if a.size == 0:
        return 0.0
    if hermitian_residual(a) <= TOL.hermitian:
        return float(np.sum(np.abs(eigvalsh(a))))
    return float(np.sum(np.linalg.svd(a, compute_uv=False)))


def operator_norm(a: np.ndarray) -> float:
    """Largest absolute eigenvalue of a Hermitian matrix."""
    return float(np.max(np.abs(herm_eig(a)[0])))


def inner(a: np.ndarray, b: np.ndarray) -> float:
    """Real part of Tr(a b)."""
    return float(np.real(np.sum(np.asarray(a) * np.asarray(b).T)))


def partial_transpose(a: np.ndarray, dim_a: int, dim_b: int, subsystem: Literal["A", "B"] = "B") -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.shape != (dim_a * dim_b, dim_a * dim_b):
        raise ValueError(f"matrix of shape {a.shape} does not act on {dim_a}x{dim_b}")
    t = a.reshape(dim_a, dim_b, dim_a, dim_b)
    if subsystem == "B":
        t = t.transpose(0, 3, 2, 1)
    elif subsystem == "A":
        t = t.transpose(2, 1, 0, 3)
    else:
        raise ValueError(f"subsystem must be 'A' or 'B', got {subsystem!r}")
    return t.reshape(dim_a * dim_b, dim_a * dim_b)


def partial_trace(a: np.ndarray, dim_a: int, dim_b: int, keep: Literal["A", "B"] = "A") -> np.ndarray:
    t = np.asarray(a).reshape(dim_a, dim_b, dim_a, dim_b)
    if keep == "A":
        return np.einsum("ijkj->ik", t)
    return np.einsum("ijil->jl", t)


def projector(vec) -> np.ndarray:
    v = np.asarray(vec, dtype=complex).reshape(-1)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def bell_state() -> np.ndarray:
    return projector([1, 0, 0, 1])


def maximally_mixed(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex) / dim


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_density(dim: int, seed, ensemble: Literal["pure-haar", "ginibre-mixed"] = "ginibre-mixed") -> np.ndarray:
    """Random state; ``seed`` is an integer or a ``numpy`` Generator owned by the caller.

    ``ginibre-mixed`` draws G G^dagger / Tr(G G^dagger), the Hilbert-Schmidt measure.
    """
    if dim < 2:
        raise ValueError("dim must be >= 2")
    rng = _rng(seed)
    if ensemble == "pure-haar":
        v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        return projector(v)
    if ensemble == "ginibre-mixed":
        g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        rho = g @ dagger(g)
        return (rho + dagger(rho)) / (2 * np.trace(rho).real)
    raise ValueError(f"unknown ensemble {ensemble!r}")


def random_unitary(dim: int, seed) -> np.ndarray:
    """Haar unitary via QR with the phase correction of Mezzadri."""
    rng = _rng(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_hermitian(dim: int, seed) -> np.ndarray:
    rng = _rng(seed)
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (g + dagger(g)) / 2


def hermitian_basis(dim: int) -> np.ndarray:
    """Orthonormal basis of d x d Hermitian matrices under Re Tr(AB); shape (d*d, d, d)."""
    out = []
    s = 1 / np.sqrt(2)
    for j in range(dim):
        e = np.zeros((dim, dim), dtype=complex)
        e[j, j] = 1
        out.append(e)
    for j in range(dim):
        for k in range(j + 1, dim):
            e = np.zeros((dim, dim), dtype=complex)
            e[j, k] = e[k, j] = s
            out.append(e)
            f = np.zeros((dim, dim), dtype=complex)
            f[j, k] = -1j * s
            f[k, j] = 1j * s
            out.append(f)
    return np.array(out)


def clip_psd(a: np.ndarray) -> np.ndarray:
    """Zero out negative eigenvalues (removes round-off, never large corrections)."""
    lam, vec = np.linalg.eigh((a + dagger(a)) / 2)
    lam = np.clip(lam, 0, None)
    out = (vec * lam) @ dagger(vec)
    return (out + dagger(out)) / 2


def numerical_rank(a: np.ndarray, tol: float = 1e-7) -> int:
    lam = np.abs(eigvalsh(a))
    if lam.size == 0:
        return 0
    return int(np.sum(lam > tol * max(1.0, lam.max())))


def matrix_to_json(a: np.ndarray) -> dict:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix JSON form requires a square matrix")
    return {
        "dim": int(a.shape[0]),
        "re": [[float(v) for v in row] for row in a.real],
        "im": [[float(v) for v in row] for row in a.imag],
    }


def matrix_from_json(obj) -> np.ndarray:
    """``{"dim", "re", "im"}`` object, or a plain nested list of real entries."""
    if isinstance(obj, list):
        try:
            m = np.asarray(obj, dtype=float)
        except (TypeError, ValueError) as exc:
            raise ValueError(f"malformed matrix JSON: {exc}") from exc
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("matrix JSON list must be square")
        return m.astype(complex)
    try:
        d = int(obj["dim"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros((d, d))), dtype=float)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed matrix JSON: {exc}") from exc
    if re.shape != (d, d) or im.shape != (d, d):
        raise ValueError(f"matrix JSON arrays must be {d}x{d}")
    return re + 1j * im
