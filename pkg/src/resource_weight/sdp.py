"""Primal-dual interior-point solver for small dense semidefinite programs.

Standard form, with Hermitian PSD blocks ``X_b`` and a nonnegative vector ``x``::

    minimize    sum_b Re Tr(C_b X_b) + c . x
    subject to  sum_b Re Tr(A_ib X_b) + a_i . x = b_i      (i = 1..m)
                X_b >= 0,  x >= 0

and its dual::

    maximize    b . y
    subject to  Z_b = C_b - sum_i y_i A_ib >= 0,   z = c - sum_i y_i a_i >= 0

Complex blocks are handled through the real symmetric embedding
``H -> [[Re H, -Im H], [Im H, Re H]]``, which doubles the block size. The
search direction is HKM with Mehrotra's predictor-corrector.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import linalg as sla

from .linalg import TOL, SolverError, dagger, hermitian_basis, matrix_from_json, matrix_to_json

log = logging.getLogger(__name__)


@dataclass
class SdpProblem:
    block_dims: tuple[int, ...]
    n_scalar: int
    c_blocks: list[np.ndarray]
    c_scalar: np.ndarray
    a_blocks: list[np.ndarray]  # each (m, n_b, n_b)
    a_scalar: np.ndarray  # (m, n_scalar)
    b: np.ndarray  # (m,)

    def __post_init__(self):
        self.block_dims = tuple(int(n) for n in self.block_dims)
        self.c_scalar = np.asarray(self.c_scalar, dtype=float).reshape(self.n_scalar)
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        m = self.b.size
        if m < 1:
            raise ValueError("an SDP needs at least one equality constraint")
        self.a_scalar = np.asarray(self.a_scalar, dtype=float).reshape(m, self.n_scalar)
        if len(self.c_blocks) != len(self.block_dims) or len(self.a_blocks) != len(self.block_dims):
            raise ValueError("one objective and one constraint stack per block required")
        cb, ab = [], []
        for n, c, a in zip(self.block_dims, self.c_blocks, self.a_blocks):
            c = np.asarray(c, dtype=complex)
            a = np.asarray(a, dtype=complex)
            if c.shape != (n, n) or a.shape != (m, n, n):
                raise ValueError(f"block of size {n} has inconsistent coefficient shapes")
            if np.max(np.abs(c - dagger(c)), initial=0) > 1e-12 or np.max(np.abs(a - dagger(a)), initial=0) > 1e-12:
                raise ValueError("coefficient matrices must be Hermitian")
            cb.append((c + dagger(c)) / 2)
            ab.append((a + dagger(a)) / 2)
        self.c_blocks, self.a_blocks = cb, ab

    @property
    def m(self) -> int:
        return self.b.size

    def a_map(self, xs: Sequence[np.ndarray], x: np.ndarray) -> np.ndarray:
        out = self.a_scalar @ np.asarray(x, dtype=float)
        for a, xb in zip(self.a_blocks, xs):
            out = out + np.real(np.einsum("mij,ji->m", a, xb))
        return out

    def objective(self, xs: Sequence[np.ndarray], x: np.ndarray) -> float:
        val = float(self.c_scalar @ np.asarray(x, dtype=float))
        for c, xb in zip(self.c_blocks, xs):
            val += float(np.real(np.sum(c * xb.T)))
        return val

    def dual_slack(self, y: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
        zs = [c - np.einsum("m,mij->ij", y, a) for c, a in zip(self.c_blocks, self.a_blocks)]
        return zs, self.c_scalar - self.a_scalar.T @ y

    def permuted(self, order: Sequence[int]) -> "SdpProblem":
        order = list(order)
        return SdpProblem(
            self.block_dims, self.n_scalar, self.c_blocks, self.c_scalar,
            [a[order] for a in self.a_blocks], self.a_scalar[order], self.b[order],
        )

    def to_json(self) -> dict:
        return {
            "block_dims": list(self.block_dims),
            "n_scalar": self.n_scalar,
            "objective": [matrix_to_json(c) for c in self.c_blocks],
            "objective_scalar": self.c_scalar.tolist(),
            "constraints": [
                {
                    "blocks": [matrix_to_json(a[i]) for a in self.a_blocks],
                    "scalar": self.a_scalar[i].tolist(),
                    "rhs": float(self.b[i]),
                }
                for i in range(self.m)
            ],
            "sense": "minimize",
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SdpProblem":
        if obj.get("sense", "minimize") != "minimize":
            raise ValueError("only minimization problems are supported")
        dims = tuple(obj["block_dims"])
        cons = obj["constraints"]
        a_blocks = [np.array([matrix_from_json(c["blocks"][k]) for c in cons]) for k in range(len(dims))]
        return cls(
            dims, int(obj["n_scalar"]),
            [matrix_from_json(c) for c in obj["objective"]],
            np.asarray(obj["objective_scalar"], dtype=float),
            a_blocks,
            np.array([c["scalar"] for c in cons], dtype=float).reshape(len(cons), int(obj["n_scalar"])),
            np.array([c["rhs"] for c in cons], dtype=float),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


@dataclass
class SdpSolution:
    status: str  # optimal | infeasible | dual-infeasible | max-iter
    primal_blocks: list[np.ndarray]
    primal_scalar: np.ndarray
    y: np.ndarray
    dual_blocks: list[np.ndarray]
    dual_scalar: np.ndarray
    primal_objective: float
    dual_objective: float
    gap: float
    iterations: int
    history: list[dict] = field(default_factory=list, repr=False)
    certificate: dict | None = None


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-10
    max_iter: int = 200
    step_fraction: float = 0.98
    divergence_window: int = 30
    raise_on_failure: bool = True


# -- real symmetric embedding -------------------------------------------------

def _embed(h: np.ndarray) -> np.ndarray:
    re, im = h.real, h.imag
    top = np.concatenate([re, -im], axis=-1)
    bot = np.concatenate([im, re], axis=-1)
    return np.concatenate([top, bot], axis=-2)


def _unembed(s: np.ndarray) -> np.ndarray:
    n = s.shape[-1] // 2
    re = (s[..., :n, :n] + s[..., n:, n:]) / 2
    im = (s[..., n:, :n] - s[..., :n, n:]) / 2
    h = re + 1j * im
    return (h + dagger(h)) / 2


def embedding_residual(s: np.ndarray) -> float:
    """Distance of a real symmetric matrix from the image of the complex embedding."""
    return float(np.max(np.abs(s - _embed(_unembed(s)))))


def _sym(a: np.ndarray) -> np.ndarray:
    return (a + a.T) / 2


def _max_step(x: np.ndarray, dx: np.ndarray) -> float:
    try:
        L = np.linalg.cholesky(x)
    except np.linalg.LinAlgError:
        return 0.0
    li = sla.solve_triangular(L, np.eye(L.shape[0]), lower=True)
    lam = np.linalg.eigvalsh(_sym(li @ dx @ li.T))[0]
    return np.inf if lam >= 0 else -1.0 / lam


def _max_step_vec(x: np.ndarray, dx: np.ndarray) -> float:
    neg = dx < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-x[neg] / dx[neg]))


def residuals(p: SdpProblem, s: SdpSolution) -> tuple[float, float, float]:
    """Recompute (primal_res, dual_res, gap) from scratch.

    primal_res is the Euclidean norm of A(X) - b plus any cone violation; dual_res
    the norm of C - A^T y - Z plus cone violation; gap = |primal obj - dual obj|.
    """
    if len(s.primal_blocks) != len(p.block_dims) or len(s.dual_blocks) != len(p.block_dims):
        raise ValueError("solution block count does not match the problem")
    for n, xb, zb in zip(p.block_dims, s.primal_blocks, s.dual_blocks):
        if xb.shape != (n, n) or zb.shape != (n, n):
            raise ValueError("solution block shapes do not match the problem")
    if s.y.shape != (p.m,) or s.primal_scalar.shape != (p.n_scalar,):
        raise ValueError("solution vector shapes do not match the problem")
    pr = float(np.linalg.norm(p.a_map(s.primal_blocks, s.primal_scalar) - p.b))
    for xb in s.primal_blocks:
        pr += max(0.0, -float(np.linalg.eigvalsh(xb)[0]))
    if p.n_scalar:
        pr += max(0.0, -float(np.min(s.primal_scalar)))
    zs, zv = p.dual_slack(s.y)
    dr_sq = float(np.sum((zv - s.dual_scalar) ** 2))
    dr_sq += sum(float(np.sum(np.abs(z - zb) ** 2)) for z, zb in zip(zs, s.dual_blocks))
    dr = np.sqrt(dr_sq)
    for zb in s.dual_blocks:
        dr += max(0.0, -float(np.linalg.eigvalsh(zb)[0]))
    if p.n_scalar:
        dr += max(0.0, -float(np.min(s.dual_scalar)))
    gap = abs(p.objective(s.primal_blocks, s.primal_scalar) - float(p.b @ s.y))
    return pr, dr, gap


def solve(p: SdpProblem, opts: SolverOptions = SolverOptions()) -> SdpSolution:
    """Solve ``p``; raises :class:`SolverError` unless an optimal point is certified.

    With ``opts.raise_on_failure=False`` the best iterate is returned with its
    status instead (``infeasible`` carries a certificate direction).
    """
    m = p.m
    C = [_embed(c) / 2 for c in p.c_blocks]
    A = [_embed(a) / 2 for a in p.a_blocks]
    Aflat = [a.reshape(m, -1) for a in A]
    cs, As, b = p.c_scalar, p.a_scalar, p.b
    dims = [2 * n for n in p.block_dims]
    nu = sum(dims) + p.n_scalar

    def a_op(xs, x):
        out = As @ x
        for af, xb in zip(Aflat, xs):
            out = out + af @ xb.reshape(-1)
        return out

    def at_op(y):
        return [np.tensordot(y, a, axes=1) for a in A], As.T @ y

    norm_b = np.linalg.norm(b)
    norm_c = np.sqrt(sum(np.sum(c * c) for c in C) + cs @ cs)
    a_norms = np.sqrt(sum(np.sum(af * af, axis=1) for af in Aflat) + np.sum(As * As, axis=1))
    xi = max(10.0, np.sqrt(nu), float(np.max((1 + np.abs(b)) / (1 + a_norms))))
    eta = max(10.0, np.sqrt(nu), norm_c, float(np.max(a_norms)))
    X = [xi * np.eye(n) for n in dims]
    Z = [eta * np.eye(n) for n in dims]
    x = np.full(p.n_scalar, xi)
    z = np.full(p.n_scalar, eta)
    y = np.zeros(m)

    history: list[dict] = []
    best = None
    status = "max-iter"
    certificate = None
    stall = 0

    def pack(st, cert=None, it=0):
        xs = [_unembed(xb) for xb in X]
        zs = [2 * _unembed(zb) for zb in Z]
        pobj = p.objective(xs, x)
        dobj = float(b @ y)
        return SdpSolution(st, xs, x.copy(), y.copy(), zs, z.copy(), pobj, dobj, abs(pobj - dobj), it, history, cert)

    for it in range(1, opts.max_iter + 1):
        ATy, ATy_s = at_op(y)
        rp = b - a_op(X, x)
        Rd = [c - aty - zb for c, aty, zb in zip(C, ATy, Z)]
        rd = cs - ATy_s - z
        gap_inner = sum(np.sum(xb * zb) for xb, zb in zip(X, Z)) + x @ z
        mu = gap_inner / nu
        pobj = sum(np.sum(c * xb) for c, xb in zip(C, X)) + cs @ x
        dobj = b @ y
        pinf = np.linalg.norm(rp) / (1 + norm_b)
        dinf = np.sqrt(sum(np.sum(r * r) for r in Rd) + rd @ rd) / (1 + norm_c)
        relgap = abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj))
        history.append(dict(it=it, pobj=float(pobj), dobj=float(dobj), pinf=float(pinf), dinf=float(dinf), mu=float(mu)))
        merit = max(pinf, dinf, relgap)
        if best is None or merit < best[0] * 0.999:
            best = (merit, it)
            stall = 0
        else:
            stall += 1

        if pinf < opts.tol and dinf < opts.tol and relgap < opts.tol:
            status = "optimal"
            break

        # infeasibility certificates from diverging iterates
        if dobj > 0 and it > 5:
            scale = dobj
            ray = np.sqrt(sum(np.sum((aty + zb) ** 2) for aty, zb in zip(ATy, Z)) + np.sum((ATy_s + z) ** 2)) / scale
            if ray < 1e-8 and scale > 1e8:
                status = "infeasible"
                certificate = {"kind": "primal-infeasible", "y": (y / scale).tolist()}
                break
        if pobj < 0 and it > 5:
            scale = -pobj
            ray = np.linalg.norm(a_op(X, x)) / scale
            if ray < 1e-8 and scale > 1e8:
                status = "dual-infeasible"
                certificate = {"kind": "dual-infeasible", "x_scale": float(scale)}
                break
        if stall >= opts.divergence_window:
            # duality measure has not improved over the window
            status = "infeasible" if pinf > 1e-6 else ("dual-infeasible" if dinf > 1e-6 else "stalled")
            certificate = {"kind": "divergence", "pinf": float(pinf), "dinf": float(dinf)}
            break

        Zinv = []
        for zb in Z:
            try:
                Lz = np.linalg.cholesky(zb)
            except np.linalg.LinAlgError:
                status = "numerical"
                break
            li = sla.solve_triangular(Lz, np.eye(zb.shape[0]), lower=True)
            Zinv.append(li.T @ li)
        else:
            pass
        if status == "numerical":
            break

        # Schur complement M_ij = sum_b Tr(A_i X A_j Z^-1) + sum_s a_is (x/z) a_js
        Msch = (As * (x / z)) @ As.T
        for a, xb, zi in zip(A, X, Zinv):
            G = np.matmul(np.matmul(xb, a), zi)  # (m,n,n)
            Msch += a.reshape(m, -1) @ np.swapaxes(G, 1, 2).reshape(m, -1).T
        Msch = (Msch + Msch.T) / 2
        if not np.all(np.isfinite(Msch)):
            status = "numerical"
            certificate = {"kind": "ill-conditioned", "condition": float("inf")}
            break
        msolve = None
        shift = 0.0
        scale = float(np.max(np.abs(np.diag(Msch)))) or 1.0
        for _ in range(4):
            try:
                cho = sla.cho_factor(Msch + shift * np.eye(m))
                msolve = lambda r, cho=cho: sla.cho_solve(cho, r)
                break
            except (np.linalg.LinAlgError, ValueError):
                # near the optimum the Schur matrix may lose rank; regularize slightly
                shift = scale * (1e-15 if shift == 0 else shift / scale * 100)
        if msolve is None:
            cond = float(np.linalg.cond(Msch))
            if not np.isfinite(cond):
                status = "numerical"
                certificate = {"kind": "ill-conditioned", "condition": cond}
                break
            msolve = lambda r: np.linalg.lstsq(Msch, r, rcond=None)[0]

        def direction(Rc, rc):
            # Rc_b: complementarity residual target (matrix), rc: scalar version
            rhs = rp.copy()
            for af, xb, zi, rcb, rdb in zip(Aflat, X, Zinv, Rc, Rd):
                t = _sym((rcb - xb @ rdb) @ zi)
                rhs -= af @ t.reshape(-1)
            rhs -= As @ ((rc - x * rd) / z)
            dy = msolve(rhs)
            dy = dy + msolve(rhs - Msch @ dy)  # one step of iterative refinement
            aty, aty_s = at_op(dy)
            dZ = [rdb - a for rdb, a in zip(Rd, aty)]
            dz = rd - aty_s
            dX = [_sym((rcb - xb @ dzb) @ zi) for xb, zi, rcb, dzb in zip(X, Zinv, Rc, dZ)]
            dx = (rc - x * dz) / z
            return dX, dx, dy, dZ, dz

        def steps(dX, dx, dZ, dz):
            ap = min([_max_step(xb, d) for xb, d in zip(X, dX)] + [_max_step_vec(x, dx)] + [np.inf])
            ad = min([_max_step(zb, d) for zb, d in zip(Z, dZ)] + [_max_step_vec(z, dz)] + [np.inf])
            return min(1.0, opts.step_fraction * ap), min(1.0, opts.step_fraction * ad)

        # predictor
        Rc0 = [-xb @ zb for xb, zb in zip(X, Z)]
        rc0 = -x * z
        dXa, dxa, dya, dZa, dza = direction(Rc0, rc0)
        ap, ad = steps(dXa, dxa, dZa, dza)
        mu_aff = (sum(np.sum((xb + ap * dxb) * (zb + ad * dzb)) for xb, dxb, zb, dzb in zip(X, dXa, Z, dZa))
                  + (x + ap * dxa) @ (z + ad * dza)) / nu
        sigma = float(np.clip((mu_aff / mu) ** 3, 0.0, 1.0)) if mu > 0 else 0.0

        # corrector
        Rc = [sigma * mu * np.eye(xb.shape[0]) - xb @ zb - dxb @ dzb for xb, zb, dxb, dzb in zip(X, Z, dXa, dZa)]
        rc = sigma * mu - x * z - dxa * dza
        dX, dx, dy, dZ, dz = direction(Rc, rc)
        ap, ad = steps(dX, dx, dZ, dz)

        X = [_sym(xb + ap * d) for xb, d in zip(X, dX)]
        x = x + ap * dx
        y = y + ad * dy
        Z = [_sym(zb + ad * d) for zb, d in zip(Z, dZ)]
        z = z + ad * dz
    else:
        status = "max-iter"

    sol = pack(status, certificate, len(history))
    pr, dr, gap = residuals(p, sol)
    if status != "optimal" and status not in ("infeasible", "dual-infeasible"):
        # accept a stalled iterate that already meets the optimality thresholds; the
        # gap floor grows with the multipliers since y . (A(X) - b) enters it
        if pr <= TOL.primal_res and dr <= TOL.dual_res and gap <= TOL.gap * max(1.0, float(np.max(np.abs(y)))):
            sol.status = "optimal"
    if sol.status == "optimal" and not (pr <= TOL.primal_res and dr <= TOL.dual_res
                                        and gap <= TOL.gap * max(1.0, float(np.max(np.abs(y))))):
        sol.status = "max-iter"
    log.debug("sdp: status=%s it=%d pres=%.2e dres=%.2e gap=%.2e", sol.status, sol.iterations, pr, dr, gap)
    if sol.status != "optimal" and opts.raise_on_failure:
        raise SolverError(
            f"SDP solver finished with status {sol.status!r}",
            residual=max(pr, dr, gap),
            status=sol.status,
            solution=sol,
        )
    return sol


# -- problem construction helpers ---------------------------------------------

LinearMap = Callable[[np.ndarray], np.ndarray]


class SdpBuilder:
    """Assemble an :class:`SdpProblem` from matrix-valued equality constraints.

    A matrix equality ``sum_b L_b(X_b) + sum_j x_j G_j = R`` (Hermitian, d x d)
    is expanded over an orthonormal Hermitian basis {E_k}; each block enters via
    the adjoint of its linear map, ``Re Tr(L_b^dagger(E_k) X_b)``.
    """

    def __init__(self):
        self.block_dims: list[int] = []
        self.n_scalar = 0
        self._c: dict[int, np.ndarray] = {}
        self._cs: dict[int, float] = {}
        self._rows: list[tuple[dict[int, np.ndarray], dict[int, float], float]] = []

    def psd_block(self, dim: int) -> int:
        self.block_dims.append(dim)
        return len(self.block_dims) - 1

    def scalars(self, count: int) -> list[int]:
        idx = list(range(self.n_scalar, self.n_scalar + count))
        self.n_scalar += count
        return idx

    def minimize_block(self, block: int, c: np.ndarray) -> None:
        self._c[block] = self._c.get(block, 0) + np.asarray(c, dtype=complex)

    def minimize_scalar(self, idx: int, c: float) -> None:
        self._cs[idx] = self._cs.get(idx, 0.0) + float(c)

    def add_scalar_constraint(self, blocks: dict[int, np.ndarray], scalars: dict[int, float], rhs: float) -> int:
        self._rows.append((dict(blocks), dict(scalars), float(rhs)))
        return len(self._rows) - 1

    def add_matrix_equality(
        self,
        rhs: np.ndarray,
        blocks: dict[int, LinearMap],
        scalars: dict[int, np.ndarray] | None = None,
    ) -> slice:
        """``blocks`` maps a block index to the adjoint of its linear map."""
        rhs = np.asarray(rhs, dtype=complex)
        d = rhs.shape[0]
        basis = hermitian_basis(d)
        start = len(self._rows)
        for e in basis:
            row_b = {k: adj(e) for k, adj in blocks.items()}
            row_s = {j: float(np.real(np.sum(e * np.asarray(g).T))) for j, g in (scalars or {}).items()}
            self._rows.append((row_b, row_s, float(np.real(np.sum(e * rhs.T)))))
        return slice(start, len(self._rows))

    def build(self) -> SdpProblem:
        m = len(self._rows)
        a_blocks = [np.zeros((m, n, n), dtype=complex) for n in self.block_dims]
        a_scalar = np.zeros((m, self.n_scalar))
        b = np.zeros(m)
        for i, (rb, rs, rhs) in enumerate(self._rows):
            for k, mat in rb.items():
                a_blocks[k][i] = mat
            for j, v in rs.items():
                a_scalar[i, j] = v
            b[i] = rhs
        c_blocks = [self._c.get(k, np.zeros((n, n), dtype=complex)) for k, n in enumerate(self.block_dims)]
        c_scalar = np.array([self._cs.get(j, 0.0) for j in range(self.n_scalar)])
        return SdpProblem(tuple(self.block_dims), self.n_scalar, c_blocks, c_scalar, a_blocks, a_scalar, b)


def multiplier_matrix(sol: SdpSolution, rows: slice, dim: int) -> np.ndarray:
    """Hermitian multiplier sum_k y_k E_k of a matrix equality added by the builder."""
    basis = hermitian_basis(dim)
    return np.tensordot(sol.y[rows], basis, axes=1)
