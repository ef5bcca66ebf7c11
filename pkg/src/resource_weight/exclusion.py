"""State exclusion and discrimination games on finite ensembles."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .linalg import (
    TOL,
    SolverError,
    _rng,
    as_density,
    as_hermitian,
    dagger,
    eigvalsh,
    hermitian_basis,
    hermitian_residual,
    inner,
    matrix_from_json,
    matrix_to_json,
    trace_norm,
)
from .sdp import SdpBuilder, SolverOptions, multiplier_matrix, solve


@dataclass(eq=False)
class StateEnsemble:
    states: list
    priors: np.ndarray
    placeholder: tuple = ()  # indices whose state is an arbitrary stand-in (zero prior)

    def __post_init__(self):
        self.states = [as_density(s) for s in self.states]
        self.priors = np.asarray(self.priors, dtype=float).reshape(-1)
        if len(self.states) < 2:
            raise ValueError("an ensemble needs at least two states")
        if self.priors.size != len(self.states):
            raise ValueError("one prior per state required")
        if np.any(self.priors < -TOL.input) or abs(self.priors.sum() - 1) > TOL.input:
            raise ValueError("priors must be a probability vector")
        self.priors = np.clip(self.priors, 0, None)
        d = self.states[0].shape[0]
        if any(s.shape != (d, d) for s in self.states):
            raise ValueError("ensemble states must share a dimension")
        for i in self.placeholder:
            if self.priors[i] != 0:
                raise ValueError("placeholder states must carry zero prior")

    @property
    def k(self) -> int:
        return len(self.states)

    @property
    def dim(self) -> int:
        return self.states[0].shape[0]

    @property
    def weighted(self) -> list[np.ndarray]:
        return [p * s for p, s in zip(self.priors, self.states)]

    def to_json(self) -> dict:
        return {"priors": self.priors.tolist(), "states": [matrix_to_json(s) for s in self.states]}

    @classmethod
    def from_json(cls, obj: dict) -> "StateEnsemble":
        try:
            return cls([matrix_from_json(s) for s in obj["states"]], obj["priors"])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed ensemble JSON: {exc}") from exc


@dataclass(eq=False)
class Povm:
    effects: list

    def __post_init__(self):
        eff = [as_hermitian(e) for e in self.effects]
        if not eff:
            raise ValueError("a POVM needs at least one effect")
        d = eff[0].shape[0]
        if any(e.shape != (d, d) for e in eff):
            raise ValueError("POVM effects must share a dimension")
        for e in eff:
            lam = eigvalsh(e)[0]
            if lam < -TOL.input:
                raise ValueError(f"POVM effect is not positive (min eigenvalue {lam:.3e})")
        res = np.max(np.abs(sum(eff) - np.eye(d)))
        if res > TOL.povm:
            raise ValueError(f"POVM effects do not sum to identity (residual {res:.3e})")
        self.effects = eff

    @property
    def dim(self) -> int:
        return self.effects[0].shape[0]

    def __len__(self) -> int:
        return len(self.effects)

    @classmethod
    def computational(cls, d: int) -> "Povm":
        return cls([np.diag(np.eye(d)[i]).astype(complex) for i in range(d)])

    def to_json(self) -> dict:
        return {"effects": [matrix_to_json(e) for e in self.effects]}

    @classmethod
    def from_json(cls, obj: dict) -> "Povm":
        try:
            return cls([matrix_from_json(e) for e in obj["effects"]])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed POVM JSON: {exc}") from exc


def _check(e: StateEnsemble, m: Povm) -> None:
    if e.dim != m.dim:
        raise ValueError(f"ensemble dimension {e.dim} does not match POVM dimension {m.dim}")


def joint_table(e: StateEnsemble, m: Povm) -> np.ndarray:
    """``p(a, x) = Tr[M_a p(x) rho_x]`` with outcomes along rows."""
    _check(e, m)
    return np.array([[inner(ma, rt) for rt in e.weighted] for ma in m.effects])


def perr_exclusion_fixed(e: StateEnsemble, m: Povm) -> tuple[float, list[int]]:
    """Best exclusion error using ``m`` followed by classical post-processing.

    Post-processing reduces to a deterministic map outcome -> excluded label;
    each outcome picks the label least likely to have produced it (smallest
    index on ties).
    """
    t = joint_table(e, m)
    assign = [int(i) for i in np.argmin(t, axis=1)]
    perr = float(np.sum(t[np.arange(len(assign)), assign]))
    return float(np.clip(perr, 0.0, 1.0)), assign


def psucc_discrimination_fixed(e: StateEnsemble, m: Povm) -> tuple[float, list[int]]:
    t = joint_table(e, m)
    assign = [int(i) for i in np.argmax(t, axis=1)]
    ps = float(np.sum(t[np.arange(len(assign)), assign]))
    return float(np.clip(ps, 0.0, 1.0)), assign


def optimal_povm(costs: list[np.ndarray], opts: SolverOptions = SolverOptions()) -> tuple[float, Povm, np.ndarray]:
    """Minimize ``sum_x Tr[K_x M_x]`` over POVMs; returns value, POVM and the dual ``Y``."""
    eff, y = _povm_sdp(costs, opts)
    if _asymmetry(costs, eff) > 1e-8 and opts.tol > 1e-12:
        # degenerate optima converge slowly in the effects; retry tighter
        try:
            eff2, y2 = _povm_sdp(costs, replace(opts, tol=1e-12))
        except SolverError:
            eff2 = None
        if eff2 is not None and _asymmetry(costs, eff2) < _asymmetry(costs, eff):
            eff, y = eff2, y2
    val = sum(inner(k, x) for k, x in zip(costs, eff))
    return float(val), Povm(eff), y


def _povm_sdp(costs, opts: SolverOptions):
    d = costs[0].shape[0]
    bld = SdpBuilder()
    blocks = [bld.psd_block(d) for _ in costs]
    for b, k in zip(blocks, costs):
        bld.minimize_block(b, k)
    rows = bld.add_matrix_equality(np.eye(d), {b: (lambda e: e) for b in blocks})
    sol = solve(bld.build(), opts)
    eff = _renormalize([(x + dagger(x)) / 2 for x in sol.primal_blocks])
    polished = _polish(costs, sol.dual_blocks)
    if polished is not None and _asymmetry(costs, polished) < _asymmetry(costs, eff):
        eff = polished
    return eff, multiplier_matrix(sol, rows, d)


def _renormalize(eff: list[np.ndarray]) -> list[np.ndarray]:
    # spread the small completeness residual so the effects sum to identity exactly
    lam, v = np.linalg.eigh(sum(eff))
    s_inv_half = (v / np.sqrt(lam)) @ dagger(v)
    out = [s_inv_half @ x @ s_inv_half for x in eff]
    return [(x + dagger(x)) / 2 for x in out]


def _asymmetry(costs, eff) -> float:
    """Violation of the optimality conditions: non-Hermiticity of ``N`` or negativity of ``K_x - N``."""
    n = sum(k @ m for k, m in zip(costs, eff))
    ns = (n + dagger(n)) / 2
    return max(hermitian_residual(n), -min(float(eigvalsh(k - ns)[0]) for k in costs))


def _polish(costs, slacks, rel: float = 1e-7) -> list[np.ndarray] | None:
    """Snap to the projective measurement singled out by the dual slacks.

    At an optimum each ``M_x`` is supported on the kernel of ``Z_x = K_x - Y``.
    When those kernels together span the space, the optimum is projective and
    interior iterates only approach it like ``sqrt(mu)``; jointly orthonormalizing
    the kernel frames recovers it to solver precision. Returns ``None`` otherwise.
    """
    d = costs[0].shape[0]
    scale = 1.0 + max(float(np.max(np.abs(np.linalg.eigvalsh(k)))) for k in costs)
    frames = []
    for z in slacks:
        lam, v = np.linalg.eigh((z + dagger(z)) / 2)
        frames.append(v[:, lam <= rel * scale])
    sizes = [f.shape[1] for f in frames]
    if sum(sizes) != d:
        return None
    v = np.hstack(frames)
    lam, u = np.linalg.eigh(dagger(v) @ v)
    if lam[0] < 0.5:
        return None
    v = v @ (u / np.sqrt(lam)) @ dagger(u)
    out, pos = [], 0
    for r in sizes:
        vx = v[:, pos:pos + r]
        pos += r
        out.append(vx @ dagger(vx))
    return out


def min_error_exclusion(e: StateEnsemble, opts: SolverOptions = SolverOptions()) -> tuple[float, Povm]:
    """Optimal exclusion error over all POVMs with one effect per label."""
    val, m, _ = optimal_povm(e.weighted, opts)
    return float(np.clip(val, 0.0, 1.0)), m


def max_succ_discrimination(e: StateEnsemble, opts: SolverOptions = SolverOptions()) -> tuple[float, Povm]:
    val, m, _ = optimal_povm([-r for r in e.weighted], opts)
    return float(np.clip(-val, 0.0, 1.0)), m


def binary_exclusion_value(e: StateEnsemble) -> float:
    """Closed-form optimal exclusion error for two states: ``(1 - ||p0 rho0 - p1 rho1||_1) / 2``."""
    if e.k != 2:
        raise ValueError("closed form applies to binary ensembles only")
    r0, r1 = e.weighted
    return 0.5 * (1 - trace_norm(r0 - r1))


def binary_discrimination_value(e: StateEnsemble) -> float:
    if e.k != 2:
        raise ValueError("closed form applies to binary ensembles only")
    r0, r1 = e.weighted
    return 0.5 * (1 + trace_norm(r0 - r1))


def check_exclusion_optimality(e: StateEnsemble, m: Povm, tol: float = 1e-6) -> dict:
    """Optimality test for a k-outcome exclusion measurement.

    With ``N = sum_x p(x) rho_x M_x`` the measurement is optimal iff ``N`` is
    Hermitian and ``p(x) rho_x - N >= 0`` for every ``x``.
    """
    _check(e, m)
    if len(m) != e.k:
        raise ValueError("optimality test needs one effect per ensemble label")
    n = sum(rt @ mx for rt, mx in zip(e.weighted, m.effects))
    herm = hermitian_residual(n)
    ns = (n + dagger(n)) / 2
    slacks = [float(eigvalsh(rt - ns)[0]) for rt in e.weighted]
    return {
        "hermiticity_residual": herm,
        "min_eig_slacks": slacks,
        "pass": bool(herm <= tol and min(slacks) >= -tol),
    }


def sample_play(e: StateEnsemble, m: Povm, shots: int, seed, mode: str = "exclusion") -> np.ndarray:
    """Shot-level simulation; rows are ``(trial, x, g, error)``.

    ``x`` is drawn from the priors, the outcome from the Born rule and ``g`` is
    the guess produced by the stored post-processing. In exclusion mode an error
    is ``g == x``; in discrimination mode ``g != x``.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = _rng(seed)
    t = joint_table(e, m)  # (a, x)
    if mode == "exclusion":
        _, assign = perr_exclusion_fixed(e, m)
    else:
        _, assign = psucc_discrimination_fixed(e, m)
    assign = np.asarray(assign)
    xs = rng.choice(e.k, size=shots, p=e.priors / e.priors.sum())
    out = np.empty(shots, dtype=int)
    for x in range(e.k):
        sel = np.flatnonzero(xs == x)
        if sel.size == 0:
            continue
        born = np.clip(t[:, x], 0, None)
        born = born / born.sum()
        out[sel] = rng.choice(len(m), size=sel.size, p=born)
    g = assign[out]
    err = (g == xs) if mode == "exclusion" else (g != xs)
    return np.column_stack([np.arange(shots), xs, g, err.astype(int)])


def simulate_play(e: StateEnsemble, m: Povm, shots: int, seed, mode: str = "exclusion") -> float:
    """Empirical error frequency over ``shots`` rounds."""
    return float(sample_play(e, m, shots, seed, mode)[:, 3].mean())
