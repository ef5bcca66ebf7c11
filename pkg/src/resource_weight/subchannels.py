"""Subchannel exclusion and discrimination games.

A subchannel is stored by its Choi matrix ``J = sum_ij |i><j| (x) Psi(|i><j|)``
(input factor first). Then

* ``Psi(rho) = Tr_in[(rho^T (x) 1) J]``,
* ``Psi^dagger(K) = Tr_out[(1 (x) K) J]^T``,
* ``Psi`` is CP iff ``J >= 0`` and trace non-increasing iff ``Tr_out J <= 1``.

Error probabilities follow the fixed-measurement protocol: the player measures
``M = {M_a}`` and classically post-processes the outcome into a guess. Unless a
post-processing is given explicitly the optimal one is used, which makes
``perr`` a concave (``psucc`` a convex) function of the input state.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exclusion import Povm, StateEnsemble, check_exclusion_optimality, optimal_povm
from .free_sets import (
    FreeSetSpec,
    PptBipartite,
    extreme_points,
    min_linear_over_free,
    sample_free,
)
from .linalg import (
    TOL,
    SolverError,
    _rng,
    as_hermitian,
    dagger,
    eigvalsh,
    herm_eig,
    inner,
    matrix_from_json,
    matrix_to_json,
    maximally_mixed,
    operator_norm,
    random_density,
)
from .quantifiers import RobustnessCertificate, WeightCertificate, Witness


@dataclass(eq=False)
class Subchannel:
    dim_in: int
    dim_out: int
    choi: np.ndarray

    def __post_init__(self):
        n = self.dim_in * self.dim_out
        j = np.asarray(self.choi, dtype=complex)
        if j.shape != (n, n):
            raise ValueError(f"Choi matrix must be {n}x{n}")
        j = as_hermitian(j)
        lam = eigvalsh(j)[0]
        if lam < -TOL.input:
            raise ValueError(f"map is not completely positive (Choi min eigenvalue {lam:.3e})")
        slack = eigvalsh(np.eye(self.dim_in) - self.trace_out(j))[0]
        if slack < -TOL.povm:
            raise ValueError(f"map increases trace (slack {slack:.3e})")
        self.choi = j

    def _j4(self) -> np.ndarray:
        return self.choi.reshape(self.dim_in, self.dim_out, self.dim_in, self.dim_out)

    def trace_out(self, j: np.ndarray | None = None) -> np.ndarray:
        j = self.choi if j is None else j
        return np.einsum("iaja->ij", j.reshape(self.dim_in, self.dim_out, self.dim_in, self.dim_out))

    def apply(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (self.dim_in, self.dim_in):
            raise ValueError("input dimension mismatch")
        out = np.einsum("ij,iajb->ab", rho, self._j4())
        return (out + dagger(out)) / 2

    def adjoint(self, k: np.ndarray) -> np.ndarray:
        k = np.asarray(k, dtype=complex)
        if k.shape != (self.dim_out, self.dim_out):
            raise ValueError("output dimension mismatch")
        out = np.einsum("ba,iajb->ji", k, self._j4())
        return (out + dagger(out)) / 2

    @classmethod
    def from_kraus(cls, kraus: Sequence[np.ndarray]) -> "Subchannel":
        ks = [np.asarray(k, dtype=complex) for k in kraus]
        d_out, d_in = ks[0].shape
        j4 = sum(np.einsum("ai,bj->iajb", k, k.conj()) for k in ks)
        return cls(d_in, d_out, j4.reshape(d_in * d_out, d_in * d_out))

    @classmethod
    def unitary(cls, u: np.ndarray, weight: float = 1.0) -> "Subchannel":
        return cls.from_kraus([np.sqrt(weight) * np.asarray(u, dtype=complex)])

    @classmethod
    def measure_prepare(cls, effects: Sequence[np.ndarray], states: Sequence[np.ndarray], weight: float = 1.0) -> "Subchannel":
        """``eta -> weight * sum_k Tr(E_k eta) tau_k``; Choi matrix ``sum_k E_k^T (x) tau_k``."""
        j = sum(np.kron(np.asarray(e).T, np.asarray(t)) for e, t in zip(effects, states))
        return cls(np.asarray(effects[0]).shape[0], np.asarray(states[0]).shape[0], weight * j)

    def to_json(self) -> dict:
        return matrix_to_json(self.choi)


@dataclass(eq=False)
class SubchannelEnsemble:
    members: list
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.members:
            raise ValueError("empty subchannel ensemble")
        d_in, d_out = self.members[0].dim_in, self.members[0].dim_out
        if any(m.dim_in != d_in or m.dim_out != d_out for m in self.members):
            raise ValueError("subchannels must share input and output dimensions")
        res = np.max(np.abs(sum(m.trace_out() for m in self.members) - np.eye(d_in)))
        if res > TOL.povm:
            raise ValueError(f"subchannels do not sum to a trace-preserving map (residual {res:.3e})")

    @property
    def k(self) -> int:
        return len(self.members)

    @property
    def dim_in(self) -> int:
        return self.members[0].dim_in

    @property
    def dim_out(self) -> int:
        return self.members[0].dim_out

    def channel_priors(self, tol: float = TOL.povm) -> np.ndarray | None:
        """``p(x)`` when every member is ``p(x)`` times a channel, else ``None``."""
        ps = []
        for m in self.members:
            t = m.trace_out()
            p = float(np.trace(t).real) / self.dim_in
            if np.max(np.abs(t - p * np.eye(self.dim_in))) > tol:
                return None
            ps.append(p)
        return np.array(ps)

    def effective_operators(self, m: Povm) -> np.ndarray:
        """``K[a, x] = Psi_x^dagger(M_a)``, so ``p(a, x | rho) = Tr[K[a, x] rho]``."""
        if m.dim != self.dim_out:
            raise ValueError("POVM does not act on the game output space")
        return np.array([[s.adjoint(ma) for s in self.members] for ma in m.effects])

    def to_json(self) -> dict:
        out = {"dim_in": self.dim_in, "dim_out": self.dim_out, "chois": [s.to_json() for s in self.members]}
        if self.meta:
            out["meta"] = self.meta
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "SubchannelEnsemble":
        try:
            d_in, d_out = int(obj["dim_in"]), int(obj["dim_out"])
            members = [Subchannel(d_in, d_out, matrix_from_json(c)) for c in obj["chois"]]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed game JSON: {exc}") from exc
        return cls(members, dict(obj.get("meta", {})))


@dataclass(eq=False)
class UnitaryFamily:
    unitaries: list
    basis: np.ndarray

    def __post_init__(self):
        self.unitaries = [np.asarray(u, dtype=complex) for u in self.unitaries]
        for u in self.unitaries:
            if np.max(np.abs(dagger(u) @ u - np.eye(u.shape[0]))) > 1e-10:
                raise ValueError("family member is not unitary")
        self.basis = np.asarray(self.basis, dtype=complex)


def apply(s: Subchannel, rho) -> tuple[np.ndarray, float]:
    """Output of the subchannel and its weight ``Tr Psi(rho)``."""
    out = s.apply(rho)
    return out, float(np.trace(out).real)


def ensemble_of_states(game: SubchannelEnsemble, rho, zero_tol: float = 1e-14) -> StateEnsemble:
    """State ensemble ``{Psi_x(rho)/p(x), p(x)}`` seen by the player.

    Branches with ``p(x) <= zero_tol`` get a maximally mixed stand-in, zero
    prior, and are listed in ``placeholder``.
    """
    outs = [s.apply(rho) for s in game.members]
    p = np.array([np.trace(o).real for o in outs])
    placeholder = tuple(i for i, pi in enumerate(p) if pi <= zero_tol)
    states = []
    for i, o in enumerate(outs):
        states.append(maximally_mixed(game.dim_out) if i in placeholder else o / p[i])
    p[list(placeholder)] = 0.0
    return StateEnsemble(states, p / p.sum(), placeholder)


def joint_probabilities(game: SubchannelEnsemble, m: Povm, rho) -> np.ndarray:
    """``p(a, x) = Tr[M_a Psi_x(rho)]`` computed through the adjoint maps."""
    k_ops = game.effective_operators(m)
    rho = np.asarray(rho, dtype=complex)
    return np.real(np.einsum("axij,ji->ax", k_ops, rho))


def _resolve_post(post, n_out: int, k: int):
    if post is None:
        return None
    if isinstance(post, str):
        if post != "identity":
            raise ValueError(f"unknown post-processing {post!r}")
        if n_out != k:
            raise ValueError("identity post-processing needs one outcome per subchannel")
        return list(range(k))
    post = [int(g) for g in post]
    if len(post) != n_out or any(not 0 <= g < k for g in post):
        raise ValueError("post-processing must map every outcome to a label")
    return post


def perr_subchannel(game: SubchannelEnsemble, m: Povm, rho, post=None) -> float:
    """Exclusion error of ``m`` on the game played with ``rho``.

    ``post=None`` uses the optimal post-processing (outcome -> least likely
    label); ``post='identity'`` reads outcome ``x`` as "exclude x"; a list maps
    outcomes to labels explicitly.
    """
    t = joint_probabilities(game, m, rho)
    p = _resolve_post(post, *t.shape)
    val = t.min(axis=1).sum() if p is None else t[np.arange(t.shape[0]), p].sum()
    return float(np.clip(val, 0.0, 1.0))


def psucc_subchannel(game: SubchannelEnsemble, m: Povm, rho, post=None) -> float:
    t = joint_probabilities(game, m, rho)
    p = _resolve_post(post, *t.shape)
    val = t.max(axis=1).sum() if p is None else t[np.arange(t.shape[0]), p].sum()
    return float(np.clip(val, 0.0, 1.0))


# -- exact optimisation of concave piecewise-linear functionals over F --------

@dataclass
class ConcaveMin:
    value: float
    argmin: np.ndarray
    assignment: list
    sdp_calls: int = 0


def min_sum_of_mins(k_ops: np.ndarray, f: FreeSetSpec, incumbent: np.ndarray | None = None, tol: float = 1e-10) -> ConcaveMin:
    """Globally minimize ``phi(sigma) = sum_a min_x Tr[K[a,x] sigma]`` over F.

    ``phi`` is concave, so for polytopes the minimum sits at an extreme point.
    For the PPT set a branch and bound over deterministic assignments is used:
    ``min_F phi = min_g h(sum_a K[a, g(a)])`` with ``h = min_linear_over_free``,
    and a partial assignment ``S`` is bounded below by
    ``h(S) + sum_{a unassigned} min_x h(K[a, x])`` (``h`` is superadditive).
    """
    k_ops = np.asarray(k_ops, dtype=complex)
    n_out, k = k_ops.shape[:2]

    def phi(sig):
        t = np.real(np.einsum("axij,ji->ax", k_ops, sig))
        g = np.argmin(t, axis=1)
        return float(t[np.arange(n_out), g].sum()), [int(v) for v in g]

    if not isinstance(f, PptBipartite):
        best = None
        for pt in extreme_points(f):
            v, g = phi(pt)
            if best is None or v < best.value - 1e-15:
                best = ConcaveMin(v, pt.copy(), g)
        return best

    cache: dict[bytes, tuple[float, np.ndarray]] = {}
    calls = [0]

    def h(a):
        a = (a + dagger(a)) / 2
        key = np.round(a, 11).tobytes()
        if key not in cache:
            calls[0] += 1
            cache[key] = min_linear_over_free(a, f)
        return cache[key]

    ind = [[h(k_ops[a, x]) for x in range(k)] for a in range(n_out)]
    rest = np.zeros(n_out + 1)
    for a in range(n_out - 1, -1, -1):
        rest[a] = rest[a + 1] + min(v for v, _ in ind[a])

    cands = [s for row in ind for _, s in row] + [maximally_mixed(f.dim)]
    if incumbent is not None:
        cands.append(incumbent)
    best_v, best_s = np.inf, None
    for s in cands:
        v, _ = phi(s)
        if v < best_v:
            best_v, best_s = v, s
    scale = 1.0 + float(np.sum(np.abs(np.linalg.eigvalsh(k_ops.sum(axis=(0, 1))))))

    def visit(j: int, acc: np.ndarray):
        nonlocal best_v, best_s
        order = sorted(range(k), key=lambda x: ind[j][x][0])
        for x in order:
            nxt = acc + k_ops[j, x]
            if float(eigvalsh(nxt)[0]) + rest[j + 1] >= best_v - tol * scale:
                continue
            v, s = h(nxt)
            pv, _ = phi(s)
            if pv < best_v:
                best_v, best_s = pv, s
            if v + rest[j + 1] >= best_v - tol * scale or j + 1 == n_out:
                continue
            visit(j + 1, nxt)

    if rest[0] < best_v - tol * scale:
        visit(0, np.zeros_like(k_ops[0, 0]))
    v, g = phi(best_s)
    return ConcaveMin(v, best_s, g, calls[0])


# -- quantum-classical ratios -------------------------------------------------

@dataclass
class QcRatio:
    numerator: float
    denominator: float
    ratio: float
    saturated: bool
    argmin: np.ndarray | None = None
    shared_denominator: float | None = None
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {
            "numerator": self.numerator,
            "denominator": self.denominator,
            "ratio": self.ratio,
            "saturated": self.saturated,
        }
        if self.shared_denominator is not None:
            out["shared_denominator"] = self.shared_denominator
        if self.argmin is not None:
            out["argmin"] = matrix_to_json(self.argmin)
        out.update({k: v for k, v in self.details.items() if isinstance(v, (int, float, bool, str))})
        return out


def _ratio(num: float, den: float, zero: float = TOL.weight_zero) -> tuple[float, bool]:
    if den <= zero:
        return 0.0, True
    return num / den, False


_FREE_POST = ("shared", "optimal")


def _check_free_post(free_post: str) -> None:
    if free_post not in _FREE_POST:
        raise ValueError(f"free_post must be one of {_FREE_POST}")


def qc_ratio_shared(game: SubchannelEnsemble, m: Povm, rho, f: FreeSetSpec, post=None,
                    free_post: str = "shared") -> QcRatio:
    """``perr(rho) / min_{sigma in F} perr(sigma)`` with the same game and measurement.

    ``post=None`` selects the post-processing that is optimal at ``rho``; this
    fixes the simulated measurement ``N``. With ``free_post='shared'`` the free
    player uses the same ``N``, so the error is linear in the state and the
    denominator is one call to :func:`min_linear_over_free`, re-evaluated at
    its argmin. With ``free_post='optimal'`` every free state re-optimizes its
    post-processing; the error is then concave in the state and is minimized
    exactly by :func:`min_sum_of_mins`. The second denominator never exceeds
    the first.
    """
    _check_free_post(free_post)
    k_ops = game.effective_operators(m)
    n_out, k = k_ops.shape[:2]
    num = perr_subchannel(game, m, rho, post)
    fixed = _resolve_post(post, n_out, k)
    if fixed is None:
        fixed = [int(g) for g in np.argmin(joint_probabilities(game, m, rho), axis=1)]
    val, arg = min_linear_over_free(sum(k_ops[a, fixed[a]] for a in range(n_out)), f)
    shared = perr_subchannel(game, m, arg, fixed)
    if abs(shared - max(val, 0.0)) > 1e-8:
        raise SolverError("re-evaluation at the argmin disagrees with the optimum", residual=abs(shared - val))
    details = {"free_post": free_post, "post": "given" if post is not None else "optimal-at-rho"}
    if free_post == "shared":
        r, sat = _ratio(num, shared)
        return QcRatio(num, shared, r, sat, arg, shared, details)
    res = min_sum_of_mins(k_ops, f, incumbent=arg)
    den = perr_subchannel(game, m, res.argmin)
    if abs(den - res.value) > 1e-8:
        raise SolverError("re-evaluation at the argmin disagrees with the optimum", residual=abs(den - res.value))
    details["sdp_calls"] = res.sdp_calls
    r, sat = _ratio(num, den)
    return QcRatio(num, den, r, sat, res.argmin, shared, details)


def qc_ratio_discrimination(game: SubchannelEnsemble, m: Povm, rho, f: FreeSetSpec, post=None,
                            free_post: str = "shared") -> QcRatio:
    """``psucc(rho) / max_{sigma in F} psucc(sigma)``; ``free_post`` as in :func:`qc_ratio_shared`."""
    _check_free_post(free_post)
    k_ops = game.effective_operators(m)
    n_out, k = k_ops.shape[:2]
    num = psucc_subchannel(game, m, rho, post)
    fixed = _resolve_post(post, n_out, k)
    if fixed is None:
        fixed = [int(g) for g in np.argmax(joint_probabilities(game, m, rho), axis=1)]
    v, arg = min_linear_over_free(-sum(k_ops[a, fixed[a]] for a in range(n_out)), f)
    shared = psucc_subchannel(game, m, arg, fixed)
    if abs(shared + v) > 1e-8:
        raise SolverError("re-evaluation at the argmax disagrees with the optimum", residual=abs(shared + v))
    details = {"free_post": free_post, "post": "given" if post is not None else "optimal-at-rho"}
    if free_post == "shared":
        r, sat = _ratio(num, shared)
        return QcRatio(num, shared, r, sat, arg, shared, details)
    res = min_sum_of_mins(-k_ops, f)
    den = psucc_subchannel(game, m, res.argmin)
    if abs(den + res.value) > 1e-8:
        raise SolverError("re-evaluation at the argmax disagrees with the optimum", residual=abs(den + res.value))
    details["sdp_calls"] = res.sdp_calls
    r, sat = _ratio(num, den)
    return QcRatio(num, den, r, sat, res.argmin, shared, details)


def _best_exclusion(game: SubchannelEnsemble, sigma) -> tuple[float, Povm]:
    val, povm, _ = optimal_povm([s.apply(sigma) for s in game.members])
    return max(val, 0.0), povm


def qc_ratio_independent(
    game: SubchannelEnsemble,
    rho,
    f: FreeSetSpec,
    max_rounds: int = 100,
    tol: float = 1e-9,
    restarts: int = 2,
    seed=0,
) -> QcRatio:
    """Ratio of optimal exclusion errors, each side with its own best measurement.

    The free-side function ``sigma -> min_N perr(N, sigma)`` is concave, so for
    polytopes it is minimized exactly over the extreme points. For the PPT set
    it is minimized by alternating between the optimal measurement for the
    current state and the best free state for that measurement, from several
    starting points; this gives an upper bound on the denominator.
    """
    num, _ = _best_exclusion(game, rho)
    flags = {"converged": True}
    if not isinstance(f, PptBipartite):
        best = None
        for pt in extreme_points(f):
            v, povm = _best_exclusion(game, pt)
            if best is None or v < best[0]:
                best = (v, pt, povm)
        den, arg, povm = best
        flags["method"] = "extreme-points"
        flags["rounds"] = 0
    else:
        rng = _rng(seed)
        starts = [maximally_mixed(f.dim)] + [sample_free(f, rng, n_terms=1) for _ in range(restarts)]
        best = None
        total = 0
        for s0 in starts:
            sig = s0
            v, povm = _best_exclusion(game, sig)
            for it in range(max_rounds):
                k_eff = sum(s.adjoint(n) for s, n in zip(game.members, povm.effects))
                _, sig = min_linear_over_free(k_eff, f)
                v_new, povm = _best_exclusion(game, sig)
                total += 1
                if v_new > v + 1e-8:
                    raise SolverError("alternating minimization increased the objective", residual=v_new - v)
                done = v - v_new < tol
                v = min(v, v_new)
                if done:
                    break
            else:
                flags["converged"] = False
            if best is None or v < best[0]:
                best = (v, sig, povm)
        den, arg, povm = best
        flags["method"] = "alternating"
        flags["rounds"] = total
    ens = ensemble_of_states(game, arg)
    if len(povm) == ens.k and not ens.placeholder:
        flags["certificate_pass"] = check_exclusion_optimality(ens, povm, 1e-6)["pass"]
    r, sat = _ratio(num, den)
    return QcRatio(num, den, r, sat, arg, None, flags)


# -- constructions -----------------------------------------------------------

def shift_unitaries(basis) -> UnitaryFamily:
    """Cyclic shifts ``U_y = sum_x |e_{x+y}><e_x|`` for the columns of ``basis``."""
    v = np.asarray(basis, dtype=complex)
    d = v.shape[0]
    if v.shape != (d, d) or np.max(np.abs(dagger(v) @ v - np.eye(d))) > 1e-10:
        raise ValueError("shift family needs an orthonormal basis (as matrix columns)")
    perm = np.roll(np.eye(d), 1, axis=0)
    return UnitaryFamily([v @ np.linalg.matrix_power(perm, y) @ dagger(v) for y in range(d)], v)


def c1_residual(u: UnitaryFamily) -> float:
    d = u.basis.shape[0]
    res = 0.0
    for j in range(d):
        e = np.outer(u.basis[:, j], u.basis[:, j].conj())
        s = sum(w @ e @ dagger(w) for w in u.unitaries)
        res = max(res, float(np.max(np.abs(s - np.eye(d)))))
    return res


def _witness_family(y: np.ndarray) -> UnitaryFamily:
    if float(np.trace(y).real) <= TOL.internal:
        raise ValueError("degenerate witness: Tr Y vanishes")
    _, vec = herm_eig(y)
    return shift_unitaries(vec)


def _rotation_game(y: np.ndarray, fam: UnitaryFamily, kind: str) -> tuple[SubchannelEnsemble, Povm]:
    d = y.shape[0]
    members = [Subchannel.unitary(u, 1.0 / d) for u in fam.unitaries]
    tr = float(np.trace(y).real)
    effects = [u @ y @ dagger(u) / tr for u in fam.unitaries]
    meta = {"construction": kind, "Y": matrix_to_json(y), "unitaries": [matrix_to_json(u) for u in fam.unitaries]}
    return SubchannelEnsemble(members, meta), Povm(effects)


def build_dual_game(rho, cert: WeightCertificate) -> tuple[SubchannelEnsemble, Povm]:
    """Rotation game ``Psi_x = U_x . U_x^dagger / d`` and ``M_x = U_x Y U_x^dagger / Tr Y``.

    ``U_x`` are the cyclic shifts in the eigenbasis of the weight witness ``Y``.
    Read with the identity post-processing the error is ``Tr[Y eta]/Tr Y`` for
    every input ``eta``.
    """
    y = cert.dual_witness
    return _rotation_game(y, _witness_family(y), "weight-rotation")


def build_robustness_game(rho, cert: RobustnessCertificate) -> tuple[SubchannelEnsemble, Povm]:
    """Same rotation game built from the robustness witness (for discrimination)."""
    y = cert.dual_witness
    return _rotation_game(y, _witness_family(y), "robustness-rotation")


def build_binary_dual_game(cert: WeightCertificate) -> tuple[SubchannelEnsemble, Povm]:
    """Two-outcome game whose optimal exclusion error is ``Tr[Y eta] / (2 ||Y||)`` for every ``eta``.

    With ``Q = Y/||Y||`` (so ``0 <= Q <= 1``)::

        Psi_0(eta) = (Tr[Q eta] |0><0| + Tr[(1-Q) eta] |1><1|) / 2
        Psi_1(eta) = Tr[eta] |0><0| / 2

    measured in the computational basis. Outcome 0 excludes label 0 at cost
    ``Tr[Q eta]/2 <= 1/2`` and outcome 1 never occurs under label 1, so the
    optimal post-processing is fixed and the error is linear in ``Tr[Y eta]``.
    Both members are half-weighted channels.
    """
    y = cert.dual_witness
    nrm = operator_norm(y)
    if nrm <= TOL.internal:
        raise ValueError("degenerate witness: Y vanishes")
    d = y.shape[0]
    q = y / nrm
    k0, k1 = np.diag([1.0, 0.0]).astype(complex), np.diag([0.0, 1.0]).astype(complex)
    psi0 = Subchannel.measure_prepare([q, np.eye(d) - q], [k0, k1], 0.5)
    psi1 = Subchannel.measure_prepare([np.eye(d)], [k0], 0.5)
    meta = {"construction": "weight-binary", "Y": matrix_to_json(y)}
    return SubchannelEnsemble([psi0, psi1], meta), Povm.computational(2)


def build_witness_game(wit: Witness) -> SubchannelEnsemble:
    """Binary game ``{L_+/2, L_-/2}`` with measure-and-prepare channels

    ``L_+-(eta) = (1/2 +- t) |0><0| + (1/2 -+ t) |1><1|``, ``t = Tr[X eta] / (2 ||X||)``.
    """
    x = wit.X
    nrm = operator_norm(x)
    if nrm <= TOL.internal or float(eigvalsh(x)[0]) < -TOL.input:
        raise ValueError("degenerate witness operator")
    d = x.shape[0]
    xs = x / nrm
    e_up = (np.eye(d) + xs) / 2
    e_dn = (np.eye(d) - xs) / 2
    k0, k1 = np.diag([1.0, 0.0]).astype(complex), np.diag([0.0, 1.0]).astype(complex)
    plus = Subchannel.measure_prepare([e_up, e_dn], [k0, k1], 0.5)
    minus = Subchannel.measure_prepare([e_dn, e_up], [k0, k1], 0.5)
    return SubchannelEnsemble([plus, minus], {"construction": "witness", "X": matrix_to_json(x)})


def check_result3_conditions(
    u: UnitaryFamily,
    cert: WeightCertificate,
    f: FreeSetSpec,
    samples: Sequence[np.ndarray] | None = None,
    n_samples: int = 100,
    seed=0,
    tol: float = 1e-8,
) -> dict:
    """Residuals of the two unitary-family conditions.

    c1: ``max_j || sum_x U_x e_j U_x^dagger - 1 ||_max`` over eigenprojectors of Y.
    c2: ``max || U_i s U_i^dagger - U_j s U_j^dagger ||_F`` over sampled free states.
    """
    y = cert.dual_witness
    # the family should be diagonal-compatible with Y: check Y commutes with the basis projectors
    yb = dagger(u.basis) @ y @ u.basis
    basis_match = float(np.max(np.abs(yb - np.diag(np.diag(yb)))))
    c1 = c1_residual(u)
    if samples is None:
        rng = _rng(seed)
        samples = [sample_free(f, rng) for _ in range(n_samples)]
    c2 = 0.0
    for s in samples:
        rot = [w @ s @ dagger(w) for w in u.unitaries]
        for a, b in itertools.combinations(rot, 2):
            c2 = max(c2, float(np.linalg.norm(a - b)))
    return {
        "c1_residual": c1,
        "c2_residual": c2,
        "basis_match": basis_match,
        "pass": bool(c1 <= tol and c2 <= tol),
    }


# -- random instances ---------------------------------------------------------

def _random_isometry(rows: int, cols: int, rng) -> np.ndarray:
    g = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    q, _ = np.linalg.qr(g)
    return q


def random_game(d_in: int, d_out: int, k: int, seed, kraus_rank: int = 2) -> SubchannelEnsemble:
    """Random instrument: a Haar isometry cut into ``k * kraus_rank`` Kraus operators."""
    rng = _rng(seed)
    v = _random_isometry(d_out * k * kraus_rank, d_in, rng)
    blocks = v.reshape(k, kraus_rank, d_out, d_in)
    return SubchannelEnsemble([Subchannel.from_kraus(list(b)) for b in blocks])


def random_channel_ensemble(d_in: int, d_out: int, k: int, seed, kraus_rank: int = 2) -> SubchannelEnsemble:
    """``{p(x) Lambda_x}`` with random priors and independent random channels."""
    rng = _rng(seed)
    p = rng.dirichlet(np.ones(k))
    members = []
    for px in p:
        v = _random_isometry(d_out * kraus_rank, d_in, rng).reshape(kraus_rank, d_out, d_in)
        members.append(Subchannel.from_kraus([np.sqrt(px) * b for b in v]))
    return SubchannelEnsemble(members)


def random_povm(d: int, n: int, seed) -> Povm:
    rng = _rng(seed)
    v = _random_isometry(n * d, d, rng).reshape(n, d, d)
    eff = [dagger(b) @ b for b in v]
    s = sum(eff)
    lam, w = np.linalg.eigh(s)
    fix = (w / np.sqrt(lam)) @ dagger(w)
    return Povm([fix @ e @ fix for e in eff])


def random_resourceful_state(f: FreeSetSpec, seed, min_weight: float = 1e-3, max_tries: int = 200):
    """Ginibre state with weight at least ``min_weight``, plus its certificate."""
    from .quantifiers import weight

    rng = _rng(seed)
    for _ in range(max_tries):
        rho = random_density(f.dim, rng)
        cert = weight(rho, f)
        if cert.w >= min_weight:
            return rho, cert
    raise RuntimeError("no resourceful state found")
