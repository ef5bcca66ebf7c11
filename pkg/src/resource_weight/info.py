"""Order plus/minus infinity Renyi entropies and the associated mutual informations.

All logarithms are base 2. Entropies may be infinite; :class:`ExtendedReal`
carries an explicit infinity flag and refuses ``inf - inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exclusion import Povm, StateEnsemble, joint_table
from .free_sets import FreeSetSpec
from .linalg import TOL, as_density
from .subchannels import (
    SubchannelEnsemble,
    ensemble_of_states,
    joint_probabilities,
    min_sum_of_mins,
    qc_ratio_discrimination,
    qc_ratio_shared,
)


@dataclass(frozen=True)
class ExtendedReal:
    """A finite real or +infinity (``value`` is ignored when ``infinite``)."""

    value: float = 0.0
    infinite: bool = False

    @classmethod
    def inf(cls) -> "ExtendedReal":
        return cls(0.0, True)

    @classmethod
    def of(cls, x) -> "ExtendedReal":
        if isinstance(x, ExtendedReal):
            return x
        if math.isinf(x) and x > 0:
            return cls.inf()
        if not math.isfinite(x):
            raise ValueError(f"cannot represent {x!r}")
        return cls(float(x))

    def __add__(self, other):
        other = ExtendedReal.of(other)
        if self.infinite or other.infinite:
            return ExtendedReal.inf()
        return ExtendedReal(self.value + other.value)

    def __neg__(self):
        if self.infinite:
            raise ArithmeticError("-infinity is not representable")
        return ExtendedReal(-self.value)

    def __sub__(self, other):
        other = ExtendedReal.of(other)
        if other.infinite:
            raise ArithmeticError("inf - inf is undefined" if self.infinite else "finite - inf is not representable")
        if self.infinite:
            return ExtendedReal.inf()
        return ExtendedReal(self.value - other.value)

    def __float__(self) -> float:
        return math.inf if self.infinite else self.value

    def __le__(self, other) -> bool:
        return float(self) <= float(ExtendedReal.of(other))

    def __lt__(self, other) -> bool:
        return float(self) < float(ExtendedReal.of(other))

    def isclose(self, other, tol: float) -> bool:
        other = ExtendedReal.of(other)
        if self.infinite or other.infinite:
            return self.infinite and other.infinite
        return abs(self.value - other.value) <= tol

    def to_json(self):
        return "inf" if self.infinite else self.value

    def __repr__(self) -> str:
        return "ExtendedReal(inf)" if self.infinite else f"ExtendedReal({self.value!r})"


def _neg_log2(x: float, zero: float) -> ExtendedReal:
    if x <= zero:
        return ExtendedReal.inf()
    return ExtendedReal(-math.log2(x))


@dataclass(frozen=True)
class JointDistribution:
    """``p[g, x]``: guesses along rows, labels along columns."""

    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.ndim != 2:
            raise ValueError("joint distribution must be a 2D table")
        if np.any(p < -1e-12):
            raise ValueError("negative probability in joint distribution")
        if abs(p.sum() - 1) > TOL.input:
            raise ValueError("joint distribution must sum to 1")
        object.__setattr__(self, "p", np.clip(p, 0, None))

    @property
    def prior(self) -> np.ndarray:
        return self.p.sum(axis=0)


def _prior(prior) -> np.ndarray:
    p = np.asarray(prior, dtype=float).reshape(-1)
    if np.any(p < -1e-12) or abs(p.sum() - 1) > TOL.input:
        raise ValueError("not a probability vector")
    return np.clip(p, 0, None)


def h_minus_inf(prior, zero: float = 0.0) -> ExtendedReal:
    """``-log2 min_x p(x)``."""
    return _neg_log2(float(_prior(prior).min()), zero)


def h_plus_inf(prior) -> ExtendedReal:
    """``-log2 max_x p(x)``."""
    return ExtendedReal(-math.log2(float(_prior(prior).max())))


def h_minus_inf_cond(j: JointDistribution, zero: float = 0.0) -> ExtendedReal:
    """``-log2 sum_g min_x p(g, x)``."""
    return _neg_log2(float(j.p.min(axis=1).sum()), zero)


def h_plus_inf_cond(j: JointDistribution) -> ExtendedReal:
    """``-log2 sum_g max_x p(g, x)``."""
    return ExtendedReal(-math.log2(float(j.p.max(axis=1).sum())))


def _joint(e: StateEnsemble, m: Povm) -> JointDistribution:
    t = joint_table(e, m)
    return JointDistribution(t / t.sum())


def mutual_exclusion_info(e: StateEnsemble, m: Povm, zero: float = 0.0) -> ExtendedReal:
    """``I_{-inf}(X:G) = H_{-inf}(X|G) - H_{-inf}(X)``.

    The conditional term is ``-log2`` of the optimal post-processed exclusion
    error with ``m``.
    """
    return h_minus_inf_cond(_joint(e, m), zero) - h_minus_inf(e.priors, zero)


def mutual_accessible_info(e: StateEnsemble, m: Povm) -> ExtendedReal:
    """``I_{+inf}(X:G) = H_{+inf}(X) - H_{+inf}(X|G)``."""
    return h_plus_inf(e.priors) - h_plus_inf_cond(_joint(e, m))


@dataclass
class InfoAdvantage:
    value: ExtendedReal
    quantum: ExtendedReal
    best_free: ExtendedReal
    argopt: np.ndarray


def info_advantage(
    rho,
    f: FreeSetSpec,
    game: SubchannelEnsemble,
    m: Povm,
    mode: str = "exclusion",
    zero: float = TOL.weight_zero,
    free_post: str = "shared",
) -> InfoAdvantage:
    """Gain in mutual exclusion (or accessible) information of ``rho`` over the best free state.

    ``game`` must be an ensemble of weighted channels ``p(x) Lambda_x``. The
    quantum side uses the post-processing optimal at ``rho``. With
    ``free_post='shared'`` the free side keeps that post-processing and the
    best free state comes from one linear optimization over F, so the value
    is ``-log2`` of the :func:`qc_ratio_shared` ratio (its inverse for
    discrimination). With ``free_post='optimal'`` every free state re-optimizes
    its post-processing and the free-side extremum is found exactly by
    :func:`min_sum_of_mins`. Probabilities at or below ``zero`` count as zero.
    """
    rho = as_density(rho)
    priors = game.channel_priors()
    if priors is None:
        raise ValueError("info advantage needs an ensemble of weighted channels")
    if mode not in ("exclusion", "discrimination"):
        raise ValueError(f"unknown mode {mode!r}")
    if free_post not in ("shared", "optimal"):
        raise ValueError("free_post must be 'shared' or 'optimal'")
    excl = mode == "exclusion"
    q = _info_from_table(joint_probabilities(game, m, rho), priors, mode, zero)
    if free_post == "shared":
        r = (qc_ratio_shared if excl else qc_ratio_discrimination)(game, m, rho, f)
        sigma = r.argmin
        if excl:
            c = _neg_log2(r.denominator, zero) - h_minus_inf(priors, zero)
        else:
            c = h_plus_inf(priors) - ExtendedReal(-math.log2(r.denominator))
    else:
        k_ops = game.effective_operators(m)
        sigma = min_sum_of_mins(k_ops if excl else -k_ops, f).argmin
        c = _info_from_table(joint_probabilities(game, m, sigma), priors, mode, zero)
    return InfoAdvantage(q - c, q, c, sigma)


def _info_from_table(t: np.ndarray, priors: np.ndarray, mode: str, zero: float) -> ExtendedReal:
    t = np.clip(t, 0, None)
    j = JointDistribution(t / t.sum())
    if mode == "exclusion":
        return h_minus_inf_cond(j, zero) - h_minus_inf(priors, zero)
    return h_plus_inf(priors) - h_plus_inf_cond(j)


def ensemble_info(game: SubchannelEnsemble, m: Povm, rho, mode: str = "exclusion") -> ExtendedReal:
    """Mutual information of the state ensemble generated by ``game`` on ``rho``."""
    e = ensemble_of_states(game, rho)
    return mutual_exclusion_info(e, m) if mode == "exclusion" else mutual_accessible_info(e, m)
