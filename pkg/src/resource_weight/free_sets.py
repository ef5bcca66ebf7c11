"""Closed convex sets of free states.

Three variants are supported:

* :class:`Incoherent` -- states diagonal in a reference orthonormal basis;
* :class:`PptBipartite` -- states with positive partial transpose on ``A (x) B``.
  This coincides with the separable set only for 2x2 and 2x3 systems and is a
  strict outer approximation otherwise;
* :class:`Hull` -- the convex hull of finitely many generator states.

All specs are immutable; every function here is pure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Union

import numpy as np
from scipy.optimize import linprog

from .linalg import (
    TOL,
    SolverError,
    _rng,
    as_density,
    as_hermitian,
    dagger,
    hermitian_basis,
    inner,
    matrix_from_json,
    matrix_to_json,
    min_eig,
    partial_transpose,
    projector,
    random_density,
)
from .sdp import SdpBuilder, SolverOptions, solve


@dataclass(frozen=True, eq=False)
class Incoherent:
    """Diagonal states in the basis given by the columns of ``basis``."""

    dim: int
    basis: np.ndarray | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be positive")
        v = np.eye(self.dim, dtype=complex) if self.basis is None else np.asarray(self.basis, dtype=complex)
        if v.shape != (self.dim, self.dim):
            raise ValueError(f"basis must be {self.dim}x{self.dim} (vectors as columns)")
        if np.max(np.abs(dagger(v) @ v - np.eye(self.dim))) > 1e-10:
            raise ValueError("reference basis is not orthonormal")
        object.__setattr__(self, "basis", v)

    @cached_property
    def projectors(self) -> list[np.ndarray]:
        return [projector(self.basis[:, i]) for i in range(self.dim)]

    def in_basis(self, a: np.ndarray) -> np.ndarray:
        return dagger(self.basis) @ a @ self.basis


@dataclass(frozen=True)
class PptBipartite:
    dim_a: int
    dim_b: int

    def __post_init__(self):
        if self.dim_a < 2 or self.dim_b < 2:
            raise ValueError("PPT subsystems need dimension >= 2")

    @property
    def dim(self) -> int:
        return self.dim_a * self.dim_b

    @property
    def exact_separable(self) -> bool:
        return self.dim <= 6


@dataclass(frozen=True, eq=False)
class Hull:
    generators: tuple = field(default_factory=tuple)

    def __post_init__(self):
        gens = tuple(as_density(g) for g in self.generators)
        if not gens:
            raise ValueError("hull needs at least one generator")
        d = gens[0].shape[0]
        if any(g.shape != (d, d) for g in gens):
            raise ValueError("hull generators must share a dimension")
        object.__setattr__(self, "generators", gens)

    @property
    def dim(self) -> int:
        return self.generators[0].shape[0]


FreeSetSpec = Union[Incoherent, PptBipartite, Hull]


class _PrimalRoute:
    """Marker: the dual constraint set is semi-infinite, solve the primal instead."""

    def __repr__(self) -> str:
        return "PRIMAL_ROUTE"


PRIMAL_ROUTE = _PrimalRoute()


def _check_dim(a: np.ndarray, f: FreeSetSpec) -> None:
    if a.shape != (f.dim, f.dim):
        raise ValueError(f"operator of shape {a.shape} does not match free set dimension {f.dim}")


def extreme_points(f: FreeSetSpec) -> list[np.ndarray]:
    """Finite list of extreme points (only for polytope variants)."""
    if isinstance(f, Incoherent):
        return list(f.projectors)
    if isinstance(f, Hull):
        return list(f.generators)
    raise TypeError("the PPT set has infinitely many extreme points")


def encode_dual_constraints(f: FreeSetSpec):
    """States ``sigma_j`` such that ``Tr[Y sigma] >= 1`` on F iff it holds on each ``sigma_j``.

    For :class:`PptBipartite` the constraint is semi-infinite and
    :data:`PRIMAL_ROUTE` is returned instead.
    """
    if isinstance(f, PptBipartite):
        return PRIMAL_ROUTE
    return extreme_points(f)


def _ppt_min(k: np.ndarray, f: PptBipartite, opts: SolverOptions) -> tuple[float, np.ndarray]:
    da, db = f.dim_a, f.dim_b
    bld = SdpBuilder()
    s1 = bld.psd_block(f.dim)
    s2 = bld.psd_block(f.dim)
    bld.minimize_block(s1, k)
    pt = lambda e: partial_transpose(e, da, db)
    bld.add_matrix_equality(np.zeros((f.dim, f.dim)), {s1: pt, s2: lambda e: -e})
    bld.add_scalar_constraint({s1: np.eye(f.dim)}, {}, 1.0)
    sol = solve(bld.build(), opts)
    sigma = sol.primal_blocks[s1]
    sigma = (sigma + dagger(sigma)) / 2
    sigma = sigma / np.trace(sigma).real
    return inner(k, sigma), sigma


def min_linear_over_free(k, f: FreeSetSpec, opts: SolverOptions = SolverOptions()) -> tuple[float, np.ndarray]:
    """Minimize ``Tr[k sigma]`` over free states; returns ``(value, argmin)``."""
    k = as_hermitian(k)
    _check_dim(k, f)
    if isinstance(f, PptBipartite):
        return _ppt_min(k, f, opts)
    pts = extreme_points(f)
    vals = [inner(k, s) for s in pts]
    i = int(np.argmin(vals))
    return vals[i], pts[i].copy()


def max_linear_over_free(k, f: FreeSetSpec, opts: SolverOptions = SolverOptions()) -> tuple[float, np.ndarray]:
    v, s = min_linear_over_free(-np.asarray(k), f, opts)
    return -v, s


def hull_distance(sigma: np.ndarray, f: Hull) -> tuple[float, np.ndarray]:
    """Distance from ``sigma`` to the hull and the optimal mixing weights.

    The distance is the L1 norm of ``sigma - sum_i q_i sigma_i`` in coordinates
    of an orthonormal Hermitian basis, minimized over the simplex by a linear
    program (exact at the hull boundary, where the optimum is degenerate).
    """
    d = f.dim
    basis = hermitian_basis(d)
    coords = lambda a: np.real(np.einsum("kij,ji->k", basis, a))
    g = np.column_stack([coords(x) for x in f.generators])
    n, n_gen = g.shape
    # variables: q (n_gen), u (n), v (n);  g q + u - v = coords(sigma),  sum q = 1
    a_eq = np.zeros((n + 1, n_gen + 2 * n))
    a_eq[:n, :n_gen] = g
    a_eq[:n, n_gen:n_gen + n] = np.eye(n)
    a_eq[:n, n_gen + n:] = -np.eye(n)
    a_eq[n, :n_gen] = 1.0
    b_eq = np.concatenate([coords(sigma), [1.0]])
    cost = np.concatenate([np.zeros(n_gen), np.ones(2 * n)])
    res = linprog(cost, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status != 0:
        raise SolverError(f"hull distance LP failed: {res.message}", status=res.status)
    return max(0.0, float(res.fun)), res.x[:n_gen].copy()


def membership(sigma, f: FreeSetSpec, tol: float = 1e-8) -> bool:
    sigma = as_hermitian(sigma)
    _check_dim(sigma, f)
    if isinstance(f, Incoherent):
        s = f.in_basis(sigma)
        off = np.sum(np.abs(s - np.diag(np.diag(s))))
        return bool(off <= tol and min_eig(sigma) >= -tol)
    if isinstance(f, PptBipartite):
        return bool(min_eig(sigma) >= -tol and min_eig(partial_transpose(sigma, f.dim_a, f.dim_b)) >= -tol)
    if len(f.generators) == 1:
        return bool(np.sum(np.abs(np.linalg.eigvalsh(sigma - f.generators[0]))) <= tol)
    try:
        dist, _ = hull_distance(sigma, f)
    except SolverError:
        return False
    return bool(dist <= tol)


def sample_free(f: FreeSetSpec, seed, n_terms: int | None = None) -> np.ndarray:
    """Random member of F.

    Incoherent and hull samples are Dirichlet mixtures of the extreme points.
    PPT samples are mixtures of random pure product states (hence separable);
    with probability 1/2 a single product state is returned so the boundary is
    exercised too.
    """
    rng = _rng(seed)
    if isinstance(f, PptBipartite):
        n = n_terms or (1 if rng.random() < 0.5 else int(rng.integers(2, 2 * f.dim + 1)))
        q = rng.dirichlet(np.ones(n))
        out = np.zeros((f.dim, f.dim), dtype=complex)
        for qi in q:
            a = random_density(f.dim_a, rng, "pure-haar")
            b = random_density(f.dim_b, rng, "pure-haar")
            out += qi * np.kron(a, b)
        return (out + dagger(out)) / 2
    pts = extreme_points(f)
    q = rng.dirichlet(np.full(len(pts), 0.5))
    out = sum(qi * p for qi, p in zip(q, pts))
    return (out + dagger(out)) / 2


def contains_maximally_mixed(f: FreeSetSpec) -> bool:
    return membership(np.eye(f.dim) / f.dim, f, 1e-8)


def free_set_to_json(f: FreeSetSpec) -> dict:
    if isinstance(f, Incoherent):
        return {"variant": "incoherent", "dim": f.dim, "basis": matrix_to_json(f.basis)}
    if isinstance(f, PptBipartite):
        return {"variant": "ppt", "dim_a": f.dim_a, "dim_b": f.dim_b}
    return {"variant": "hull", "generators": [matrix_to_json(g) for g in f.generators]}


def free_set_from_json(obj: dict) -> FreeSetSpec:
    try:
        v = obj["variant"]
        if v == "incoherent":
            basis = matrix_from_json(obj["basis"]) if "basis" in obj else None
            return Incoherent(int(obj["dim"]), basis)
        if v == "ppt":
            return PptBipartite(int(obj["dim_a"]), int(obj["dim_b"]))
        if v == "hull":
            return Hull(tuple(matrix_from_json(g) for g in obj["generators"]))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed free-set JSON: {exc}") from exc
    raise ValueError(f"unknown free-set variant {obj.get('variant')!r}")


def parse_free_set(text: str) -> FreeSetSpec:
    """Inline names ``incoherent:<d>``, ``ppt:<a>x<b>``, ``mixed:<d>`` or a JSON string."""
    text = text.strip()
    if text.startswith("{"):
        return free_set_from_json(json.loads(text))
    name, _, arg = text.partition(":")
    try:
        if name == "incoherent":
            return Incoherent(int(arg))
        if name == "ppt":
            a, b = arg.lower().split("x")
            return PptBipartite(int(a), int(b))
        if name == "mixed":
            d = int(arg)
            return Hull((np.eye(d) / d,))
    except ValueError as exc:
        raise ValueError(f"cannot parse free set {text!r}: {exc}") from exc
    raise ValueError(f"unknown free set {text!r}")
