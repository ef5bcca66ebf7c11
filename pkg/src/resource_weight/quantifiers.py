"""Weight and generalized robustness of a resource, with primal/dual certificates.

Both quantities are computed from one interior-point solve whose dual slack on
the ``rho - sigma'`` block is the dual witness ``Y``. Afterwards ``Y`` is
rescaled so that its free-set constraint holds exactly, and the reported gap is
the distance between the primal value and the rescaled dual value.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .free_sets import (
    PRIMAL_ROUTE,
    FreeSetSpec,
    encode_dual_constraints,
    free_set_from_json,
    free_set_to_json,
    max_linear_over_free,
    min_linear_over_free,
)
from .linalg import (
    TOL,
    SolverError,
    as_density,
    dagger,
    eigvalsh,
    inner,
    matrix_from_json,
    matrix_to_json,
    numerical_rank,
    operator_norm,
    partial_transpose,
    trace_norm,
)
from .sdp import SdpBuilder, SolverOptions, solve


@dataclass
class WeightCertificate:
    """Convex split ``rho = w rho_general + (1-w) sigma_free`` plus dual witness ``Y``.

    ``Y >= 0`` with ``Tr[Y sigma] >= 1`` on the free set, so ``1 - Tr[Y rho]``
    lower-bounds the weight; ``gap`` is its distance to ``w``.
    """

    w: float
    sigma_free: np.ndarray | None
    rho_general: np.ndarray | None
    dual_witness: np.ndarray
    gap: float
    rho: np.ndarray
    free_set: FreeSetSpec
    dual_non_unique: bool = False
    diagnostics: dict = field(default_factory=dict)

    def check(self, tol_decomp: float = 1e-7, tol_dual: float = 1e-6) -> dict:
        """Re-verify every invariant from the stored matrices alone."""
        out = {}
        rec = np.zeros_like(self.rho)
        if self.rho_general is not None:
            rec = rec + self.w * self.rho_general
        if self.sigma_free is not None:
            rec = rec + (1 - self.w) * self.sigma_free
        out["decomposition"] = trace_norm(self.rho - rec) if self.w < 1 else 0.0
        y = self.dual_witness
        out["y_min_eig"] = float(eigvalsh(y)[0])
        out["dual_min_free"] = min_linear_over_free(y, self.free_set)[0]
        out["duality"] = abs((1 - inner(y, self.rho)) - self.w)
        out["pass"] = bool(
            out["decomposition"] <= tol_decomp
            and out["y_min_eig"] >= -TOL.input
            and out["dual_min_free"] >= 1 - 1e-8
            and out["duality"] <= tol_dual
            and -TOL.input <= self.w <= 1 + TOL.input
        )
        return out

    def to_json(self) -> dict:
        return {
            "kind": "weight",
            "w": self.w,
            "gap": self.gap,
            "rho": matrix_to_json(self.rho),
            "sigma_free": None if self.sigma_free is None else matrix_to_json(self.sigma_free),
            "rho_general": None if self.rho_general is None else matrix_to_json(self.rho_general),
            "Y": matrix_to_json(self.dual_witness),
            "free_set": free_set_to_json(self.free_set),
            "dual_non_unique": self.dual_non_unique,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "WeightCertificate":
        opt = lambda key: None if obj.get(key) is None else matrix_from_json(obj[key])
        return cls(
            float(obj["w"]), opt("sigma_free"), opt("rho_general"), matrix_from_json(obj["Y"]),
            float(obj["gap"]), matrix_from_json(obj["rho"]), free_set_from_json(obj["free_set"]),
            bool(obj.get("dual_non_unique", False)),
        )


@dataclass
class RobustnessCertificate:
    """``rho + r rho_general = (1+r) sigma_free``; ``dual_witness`` satisfies ``Tr[Y sigma] <= 1`` on F."""

    r: float
    sigma_free: np.ndarray
    rho_general: np.ndarray | None
    dual_witness: np.ndarray
    gap: float
    rho: np.ndarray
    free_set: FreeSetSpec

    @property
    def r_dual(self) -> float:
        return inner(self.dual_witness, self.rho) - 1

    def check(self, tol_decomp: float = 1e-7, tol_dual: float = 1e-6) -> dict:
        out = {}
        lhs = self.rho + (self.r * self.rho_general if self.rho_general is not None else 0)
        out["decomposition"] = trace_norm(lhs - (1 + self.r) * self.sigma_free)
        out["y_min_eig"] = float(eigvalsh(self.dual_witness)[0])
        out["dual_max_free"] = max_linear_over_free(self.dual_witness, self.free_set)[0]
        out["duality"] = abs(self.r_dual - self.r)
        out["pass"] = bool(
            out["decomposition"] <= tol_decomp
            and out["y_min_eig"] >= -TOL.input
            and out["dual_max_free"] <= 1 + 1e-8
            and out["duality"] <= tol_dual
            and self.r >= -TOL.input
        )
        return out

    def to_json(self) -> dict:
        return {
            "kind": "robustness",
            "r": self.r,
            "gap": self.gap,
            "rho": matrix_to_json(self.rho),
            "sigma_free": matrix_to_json(self.sigma_free),
            "rho_general": None if self.rho_general is None else matrix_to_json(self.rho_general),
            "Y": matrix_to_json(self.dual_witness),
            "free_set": free_set_to_json(self.free_set),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RobustnessCertificate":
        rg = obj.get("rho_general")
        return cls(
            float(obj["r"]), matrix_from_json(obj["sigma_free"]), None if rg is None else matrix_from_json(rg),
            matrix_from_json(obj["Y"]), float(obj["gap"]), matrix_from_json(obj["rho"]),
            free_set_from_json(obj["free_set"]),
        )


@dataclass
class Witness:
    """``W = Y - 1`` separates rho from F; ``X = 1 - W/||W||`` maps it into ``[0, 1]`` on F."""

    W: np.ndarray
    X: np.ndarray

    @property
    def x_norm(self) -> float:
        return operator_norm(self.X)


def _herm(a: np.ndarray) -> np.ndarray:
    return (a + dagger(a)) / 2


# below this smallest eigenvalue of rho the congruence preconditioner is skipped
_PRECONDITION_EIG = 1e-7


def _cone_problem(rho: np.ndarray, f: FreeSetSpec, sign: int):
    """Build the SDP with ``sign * (rho - sigma') >= 0``; returns builder handles.

    sign=+1 gives the weight problem (sigma' below rho, maximize its trace),
    sign=-1 the robustness problem (sigma' above rho, minimize its trace).
    For the weight of a full-rank ``rho`` over a finite set of extreme points
    the matrix constraint is conjugated by ``rho^{-1/2}``, so the multipliers
    stay of order one even when the witness is huge.
    """
    d = rho.shape[0]
    bld = SdpBuilder()
    gap_block = bld.psd_block(d)
    gens = encode_dual_constraints(f)
    if gens is PRIMAL_ROUTE:
        s1 = bld.psd_block(d)
        s2 = bld.psd_block(d)
        bld.minimize_block(s1, -sign * np.eye(d))
        bld.add_matrix_equality(rho, {s1: lambda e: e, gap_block: lambda e: sign * e})
        da, db = f.dim_a, f.dim_b
        bld.add_matrix_equality(np.zeros((d, d)), {s1: lambda e: partial_transpose(e, da, db), s2: lambda e: -e})
        handles = ("ppt", gap_block, s1, None)
    else:
        lam, vec = np.linalg.eigh(rho)
        rhs, pre = rho, None
        if sign > 0 and lam[0] > _PRECONDITION_EIG:
            rh = (vec * np.sqrt(lam)) @ dagger(vec)
            ri = (vec / np.sqrt(lam)) @ dagger(vec)
            rhs, pre = np.eye(d, dtype=complex), (rh, ri)
            gens_in = [_herm(ri @ g @ ri) for g in gens]
        else:
            gens_in = list(gens)
        idx = bld.scalars(len(gens))
        for j in idx:
            bld.minimize_scalar(j, -sign)
        bld.add_matrix_equality(rhs, {gap_block: lambda e: sign * e}, dict(zip(idx, gens_in)))
        handles = ("ext", gap_block, list(zip(idx, gens)), pre)
    return bld.build(), handles


def _sigma_prime(sol, handles) -> np.ndarray:
    kind, _, h, _ = handles
    if kind == "ppt":
        return _herm(sol.primal_blocks[h])
    return _herm(sum(max(sol.primal_scalar[j], 0.0) * g for j, g in h))


def _gap_and_witness(sol, handles) -> tuple[np.ndarray, np.ndarray]:
    """The ``rho - sigma'`` block and its dual slack, undoing the preconditioner."""
    _, g, _, pre = handles
    diff, y = _herm(sol.primal_blocks[g]), _herm(sol.dual_blocks[g])
    if pre is not None:
        rh, ri = pre
        diff, y = _herm(rh @ diff @ rh), _herm(ri @ y @ ri)
    return diff, y


def weight(rho, f: FreeSetSpec, opts: SolverOptions = SolverOptions()) -> WeightCertificate:
    """Weight of resource of ``rho`` with respect to ``f``."""
    rho = as_density(rho)
    if rho.shape[0] != f.dim:
        raise ValueError("state dimension does not match the free set")
    p, handles = _cone_problem(rho, f, +1)
    sol = solve(p, opts)
    if sol.status != "optimal":  # pragma: no cover - solve raises first
        raise SolverError("weight SDP did not converge", status=sol.status)
    sig = _sigma_prime(sol, handles)
    diff, y = _gap_and_witness(sol, handles)
    t = float(np.trace(sig).real)
    w = float(np.clip(1 - t, 0.0, 1.0))

    ymin, _ = min_linear_over_free(y, f)
    if ymin <= TOL.internal:
        raise SolverError("dual witness has no positive value on the free set", residual=ymin)
    y = y / ymin
    gap = abs((1 - inner(y, rho)) - w)

    # Y bounds the free share by Tr[Y rho]; below the floor it is not resolvable
    free_share = min(t, float(inner(y, rho)))
    sigma_free = None if free_share <= TOL.weight_zero else sig / t
    rho_general = None if w <= TOL.weight_zero else diff / w
    if rho_general is not None and sigma_free is not None:
        # absorb the primal residual so the split reproduces rho exactly
        rho_general = (rho - (1 - w) * sigma_free) / w
    non_unique = (d := rho.shape[0]) - numerical_rank(diff) > 1 if w > TOL.weight_zero else False
    return WeightCertificate(
        w, sigma_free, rho_general, y, gap, rho, f, bool(non_unique),
        {"iterations": sol.iterations, "solver_gap": sol.gap},
    )


def robustness(rho, f: FreeSetSpec, opts: SolverOptions = SolverOptions()) -> RobustnessCertificate:
    """Generalized robustness ``r`` of ``rho`` with respect to ``f``."""
    rho = as_density(rho)
    if rho.shape[0] != f.dim:
        raise ValueError("state dimension does not match the free set")
    p, handles = _cone_problem(rho, f, -1)
    sol = solve(p, opts)
    sig = _sigma_prime(sol, handles)
    _, y = _gap_and_witness(sol, handles)
    t = float(np.trace(sig).real)
    r = max(0.0, t - 1)

    ymax, _ = max_linear_over_free(y, f)
    if ymax <= TOL.internal:
        raise SolverError("robustness dual witness vanishes on the free set", residual=ymax)
    y = y / ymax
    gap = abs((inner(y, rho) - 1) - r)
    sigma_free = sig / t
    rho_general = None if r <= TOL.weight_zero else ((1 + r) * sigma_free - rho) / r
    return RobustnessCertificate(r, sigma_free, rho_general, y, gap, rho, f)


def witness_from_dual(cert: WeightCertificate) -> Witness:
    if cert.w <= TOL.weight_zero:
        raise ValueError("free state: no separating witness exists")
    d = cert.dual_witness.shape[0]
    W = cert.dual_witness - np.eye(d)
    nrm = operator_norm(W)
    if nrm <= TOL.internal:
        raise ValueError("degenerate witness (W = 0)")
    return Witness(W, np.eye(d) - W / nrm)
