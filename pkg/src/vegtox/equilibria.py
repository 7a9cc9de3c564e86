"""Homogeneous steady states of the limit system and their stability."""

from __future__ import annotations

import dataclasses
import enum
import math

import numpy as np

from .errors import NumericalError, ParameterError
from .model import ModelParams, theta, theta_prime

__all__ = [
    "Equilibrium",
    "EquilibriumKind",
    "Jacobian2",
    "classify_equilibria",
    "coexistence_equilibrium",
    "jacobian_homogeneous",
    "trivial_equilibrium",
]


class EquilibriumKind(enum.Enum):
    TRIVIAL = "trivial"
    COEXISTENCE = "coexistence"


def _eig2(trace, det):
    """Eigenvalues of a 2x2 matrix in closed form, largest real part first."""
    disc = trace * trace - 4.0 * det
    if disc >= 0.0:
        root = math.sqrt(disc)
        return complex((trace + root) / 2.0), complex((trace - root) / 2.0)
    root = math.sqrt(-disc)
    return complex(trace / 2.0, root / 2.0), complex(trace / 2.0, -root / 2.0)


@dataclasses.dataclass(frozen=True)
class Jacobian2:
    """2x2 Jacobian; diagonal entries in 1/year, cross terms carry the
    kg/g unit conversions of the biomass-toxicity coupling."""

    j11: float
    j12: float
    j21: float
    j22: float

    @property
    def trace(self) -> float:
        return self.j11 + self.j22

    @property
    def determinant(self) -> float:
        return self.j11 * self.j22 - self.j12 * self.j21

    def eigenvalues(self):
        return _eig2(self.trace, self.determinant)

    def as_array(self) -> np.ndarray:
        return np.array([[self.j11, self.j12], [self.j21, self.j22]])


@dataclasses.dataclass(frozen=True)
class Equilibrium:
    R_star: float
    T_star: float
    kind: EquilibriumKind
    eigenvalues: tuple
    stable: bool

    @property
    def state(self):
        return self.R_star, self.T_star


def jacobian_homogeneous(state, params: ModelParams) -> Jacobian2:
    """Jacobian of the homogeneous reaction system at ``state = (R, T)``."""
    R, T = state
    th = theta(T, params.T_hat)
    tp = theta_prime(T, params.T_hat)
    g, gamma, d, s = params.g, params.gamma, params.d, params.s
    j11 = (g - gamma * th) * (1.0 - 2.0 * R / params.R_hat) - (d + s * th)
    j12 = -gamma * R * tp * (1.0 - R / params.R_hat) - s * R * tp
    j21 = params.c * (d + s * th)
    j22 = params.c * s * R * tp - params.k
    return Jacobian2(j11, j12, j21, j22)


def _equilibrium_at(R, T, kind, params) -> Equilibrium:
    eig = jacobian_homogeneous((R, T), params).eigenvalues()
    stable = all(ev.real < 0 for ev in eig)
    return Equilibrium(R, T, kind, eig, stable)


def trivial_equilibrium(params: ModelParams) -> Equilibrium:
    """Bare-soil state (0, 0); always an equilibrium, always unstable (g > d)."""
    return _equilibrium_at(0.0, 0.0, EquilibriumKind.TRIVIAL, params)


def coexistence_equilibrium(params: ModelParams) -> Equilibrium:
    """Interior steady state ``(R*, T*)`` on the ``T <= T_hat`` branch.

    ``R*`` solves the quadratic

        (g s + gamma d) R^2 - (2 g s + gamma d + g d) R_hat R
            + (g - d)(d + s) R_hat^2 = 0

    and only its smaller root is admissible (the larger one carries a
    toxicity above ``T_hat``).  The root is evaluated in the rationalized
    form ``2 c0 / (b + sqrt(b^2 - 4 a c0))`` which avoids cancellation and
    degrades gracefully to the linear case ``a = 0`` (then ``R*`` equals
    the carrying capacity).  ``T*`` follows from the toxicity balance:

        T* = c d R* T_hat / (k T_hat - c s R*).
    """
    g, gamma, d, s = params.g, params.gamma, params.d, params.s
    if d == 0.0:
        raise ParameterError(
            "coexistence equilibrium requires d > 0 (the toxicity balance "
            "degenerates at d = 0)"
        )
    a = g * s + gamma * d
    b = 2.0 * g * s + gamma * d + g * d
    c0 = (g - d) * (d + s)
    if a == 0.0:
        rho = c0 / b
    else:
        disc = b * b - 4.0 * a * c0
        if disc < 0.0:
            raise NumericalError(
                f"negative discriminant {disc:.6g} in the equilibrium "
                "quadratic; excluded by the parameter assumptions"
            )
        rho = 2.0 * c0 / (b + math.sqrt(disc))
    R_star = rho * params.R_hat

    denom = params.k * params.T_hat - params.c * s * R_star
    if denom <= 0.0:
        raise NumericalError(
            "vanishing denominator k*T_hat - c*s*R* in the toxicity balance; "
            "excluded by c*(d+s)/k < 1"
        )
    T_star = params.c * d * R_star * params.T_hat / denom

    if not (0.0 < R_star < params.R_hat and 0.0 < T_star < params.T_hat):
        raise NumericalError(
            f"computed equilibrium ({R_star:.6g}, {T_star:.6g}) outside the "
            f"invariant region (0, {params.R_hat}) x (0, {params.T_hat})"
        )
    return _equilibrium_at(R_star, T_star, EquilibriumKind.COEXISTENCE, params)


def classify_equilibria(params: ModelParams):
    """Both homogeneous equilibria with eigenvalues and stability flags."""
    return [trivial_equilibrium(params), coexistence_equilibrium(params)]
