"""Parameters and reaction terms of the biomass-toxicity model.

Two formulations share a single parameter set:

* a three-species system for healthy roots ``R_h``, exposed roots ``R_e``
  and soil toxicity ``T``, in which roots switch between the two states on
  a fast timescale ``epsilon``;
* its two-species limit for total roots ``R = R_h + R_e`` and ``T``, where
  the switch is instantaneous and the roots acquire the toxicity-dependent
  mobility ``d_R - sigma * theta(T)``.

Units: biomass kg/m^2, toxicity g/m^2, rates 1/year, diffusivities
m^2/year, ``epsilon`` in years.
"""

from __future__ import annotations

import dataclasses
import warnings
from typing import NamedTuple

import numpy as np

from .errors import DomainError, ModelWarning, ParameterError

__all__ = [
    "HomogeneousState",
    "ModelParams",
    "carrying_capacity",
    "derive_T_hat",
    "propagation_coefficient",
    "quasi_steady_split",
    "reaction_fast",
    "reaction_limit",
    "theta",
    "theta_prime",
]


class HomogeneousState(NamedTuple):
    """Spatially uniform state: total roots biomass and toxicity."""

    R: float
    T: float


def _check_toxicity(T, T_hat):
    if not (np.isfinite(T_hat) and T_hat > 0):
        raise DomainError(f"T_hat must be finite and positive, got {T_hat}")
    arr = np.asarray(T, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("toxicity must be finite")
    if np.any(arr < 0):
        raise DomainError("toxicity must be nonnegative")
    return arr


def theta(T, T_hat):
    """Fraction of roots in the exposed state at toxicity ``T``.

    Piecewise linear in ``T``: ``T / T_hat`` up to the critical toxicity
    ``T_hat``, then saturated at 1.  Continuous, nondecreasing and clamped
    to [0, 1].  Accepts scalars or arrays.
    """
    arr = _check_toxicity(T, T_hat)
    out = np.minimum(arr / T_hat, 1.0)
    return float(out) if out.ndim == 0 else out


def theta_prime(T, T_hat):
    """Derivative of :func:`theta` with respect to ``T``.

    Equals ``1 / T_hat`` for ``T <= T_hat`` and 0 above; the kink at
    ``T == T_hat`` deliberately takes the left value so the function is
    deterministic there (the coexistence state satisfies ``T* < T_hat``
    strictly, so analysis never sits on the kink).
    """
    arr = _check_toxicity(T, T_hat)
    out = np.where(arr <= T_hat, 1.0 / T_hat, 0.0)
    return float(out) if out.ndim == 0 else out


def derive_T_hat(c, d, s, k, R_hat):
    """Critical toxicity ``c (d + s) R_hat / k``.

    This is the smallest threshold for which ``[0, R_hat] x [0, T_hat]`` is
    positively invariant; it requires the feasibility condition
    ``c (d + s) / k < 1`` (toxicity never exceeding biomass).
    """
    if k <= 0:
        raise ParameterError("k must be positive")
    ratio = c * (d + s) / k
    if ratio >= 1.0:
        raise ParameterError(
            f"infeasible parameters: c*(d+s)/k = {ratio:.6g} must be < 1"
        )
    return ratio * R_hat


@dataclasses.dataclass(frozen=True)
class ModelParams:
    """Validated parameter set; immutable and safe to share.

    ``T_hat`` may be omitted, in which case it is derived as
    ``c (d + s) R_hat / k``.  ``epsilon`` is only used by the three-species
    fast-switching system and may stay ``None`` otherwise.
    """

    g: float            # max growth rate (1/year)
    gamma: float        # growth-rate reduction by toxicity (1/year)
    d: float            # mortality rate (1/year)
    s: float            # extra mortality of exposed roots (1/year)
    c: float            # biomass -> toxicity conversion (g/kg)
    k: float            # toxicity decay rate (1/year)
    d_R: float          # roots propagation coefficient (m^2/year)
    sigma: float        # propagation reduction by toxicity (m^2/year)
    d_T: float          # toxicity diffusion coefficient (m^2/year)
    R_hat: float        # reference biomass density (kg/m^2)
    T_hat: float | None = None   # critical toxicity (g/m^2); derived if None
    epsilon: float | None = None  # fast-switch timescale (year)
    t_hat_derived: bool = dataclasses.field(default=False, compare=False)

    def __post_init__(self):
        vals = {f: getattr(self, f) for f in
                ("g", "gamma", "d", "s", "c", "k", "d_R", "sigma", "d_T", "R_hat")}
        for name, v in vals.items():
            if not np.isfinite(v):
                raise ParameterError(f"{name} must be finite, got {v}")
            if v < 0:
                raise ParameterError(f"{name} must be nonnegative, got {v}")
        for name in ("k", "R_hat", "d_R"):
            if vals[name] <= 0:
                raise ParameterError(f"{name} must be positive, got {vals[name]}")
        if self.g <= self.d:
            raise ParameterError(f"g must exceed d, got g={self.g}, d={self.d}")
        if self.gamma > self.g:
            raise ParameterError(f"gamma must not exceed g, got gamma={self.gamma}")
        if self.sigma >= self.d_R:
            raise ParameterError(
                f"sigma must be below d_R, got sigma={self.sigma}, d_R={self.d_R}"
            )
        floor = derive_T_hat(self.c, self.d, self.s, self.k, self.R_hat)
        if self.T_hat is None:
            object.__setattr__(self, "T_hat", floor)
            object.__setattr__(self, "t_hat_derived", True)
        else:
            if not np.isfinite(self.T_hat):
                raise ParameterError("T_hat must be finite")
            if self.T_hat < floor:
                raise ParameterError(
                    f"T_hat={self.T_hat} below the invariance floor "
                    f"c*(d+s)*R_hat/k = {floor:.6g}"
                )
            if self.T_hat > floor * (1 + 1e-12):
                warnings.warn(
                    f"T_hat={self.T_hat} exceeds the minimal invariance "
                    f"threshold {floor:.6g}; the analysis fixes T_hat at the "
                    "infimum", ModelWarning, stacklevel=2,
                )
        if self.T_hat <= 0:
            raise ParameterError("T_hat must be positive (requires c*(d+s) > 0)")
        if self.epsilon is not None and not (
            np.isfinite(self.epsilon) and self.epsilon > 0
        ):
            raise ParameterError(f"epsilon must be positive, got {self.epsilon}")

    def with_updates(self, **changes) -> "ModelParams":
        """Copy with fields replaced, revalidated from scratch.

        If ``T_hat`` was derived and is not explicitly supplied here, it is
        re-derived from the new parameters (needed when scanning ``s``).
        """
        if "T_hat" not in changes and self.t_hat_derived:
            changes["T_hat"] = None
        changes.pop("t_hat_derived", None)
        return dataclasses.replace(self, **changes)

    def require_epsilon(self) -> float:
        if self.epsilon is None:
            raise ParameterError("epsilon is required by the fast-reaction system")
        return self.epsilon


def carrying_capacity(params: ModelParams) -> float:
    """Effective carrying capacity ``(g - d) / g * R_hat`` of the roots."""
    if params.g <= params.d:
        raise ParameterError("carrying capacity requires g > d")
    return (params.g - params.d) / params.g * params.R_hat


def propagation_coefficient(T, params: ModelParams):
    """Toxicity-dependent roots mobility ``d_R - sigma * theta(T)`` (> 0)."""
    return params.d_R - params.sigma * theta(T, params.T_hat)


def _check_nonnegative(*fields):
    for f in fields:
        arr = np.asarray(f, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise DomainError("state must be finite")
        if np.any(arr < 0):
            raise DomainError("state must be nonnegative")


def reaction_limit(state, params: ModelParams):
    """Reaction rates (dR/dt, dT/dt) of the two-species limit system.

    Growth is logistic with rate ``g - gamma*theta(T)``, mortality
    ``d + s*theta(T)``; decomposing biomass feeds toxicity with conversion
    ``c`` while toxicity decays at rate ``k``.  Works elementwise on arrays.
    """
    R, T = state
    _check_nonnegative(R, T)
    th = theta(T, params.T_hat)
    mortality = params.d + params.s * th
    dR = (params.g - params.gamma * th) * R * (1.0 - R / params.R_hat) - mortality * R
    dT = params.c * mortality * R - params.k * T
    return dR, dT


def reaction_fast(state3, params: ModelParams):
    """Reaction rates (dR_h/dt, dR_e/dt, dT/dt) of the three-species system.

    Includes the stiff state-switch term ``(1/epsilon)(p(T) R_h - q(T) R_e)``
    with ``p = theta`` and ``q = 1 - p``.
    """
    eps = params.require_epsilon()
    R_h, R_e, T = state3
    _check_nonnegative(R_h, R_e, T)
    p = theta(T, params.T_hat)
    q = 1.0 - p
    exchange = (p * R_h - q * R_e) / eps
    R = R_h + R_e
    crowding = 1.0 - R / params.R_hat
    dR_h = params.g * R_h * crowding - params.d * R_h - exchange
    dR_e = (params.g - params.gamma) * R_e * crowding - (params.d + params.s) * R_e + exchange
    dT = params.c * (params.d * R + params.s * R_e) - params.k * T
    return dR_h, dR_e, dT


def quasi_steady_split(R, T, params: ModelParams):
    """Equilibrium partition of total roots under the fast switch.

    Returns ``(R_h, R_e) = ((1 - theta) R, theta R)``, i.e. the split with
    ``q R_e = p R_h`` at which the exchange term vanishes.
    """
    th = theta(T, params.T_hat)
    return (1.0 - th) * R, th * R
