"""Linear stability of the coexistence state to heterogeneous perturbations.

The growth of the mode belonging to the Laplacian eigenvalue ``lambda_k``
is governed by the characteristic matrix ``M_k = J - lambda_k * J_diff``
with ``J`` the reaction Jacobian and ``J_diff`` the linearized diffusion
matrix at the coexistence state.  ``det M_k`` is a quadratic in
``lambda_k`` with positive leading coefficient and positive value at 0, so
instability requires its linear coefficient to be positive; that happens
exactly for ``sigma > sigma_L`` (:func:`sigma_L`).  The condition is
necessary only: actual instability additionally needs the quadratic's
minimum to dip below zero (:func:`turing_onset_sigma`) and, on a finite
domain, an admissible discrete eigenvalue inside the unstable window
(:func:`is_turing_unstable`).
"""

from __future__ import annotations

import dataclasses
import math
from typing import NamedTuple

import numpy as np

from .equilibria import (
    Equilibrium,
    Jacobian2,
    _eig2,
    coexistence_equilibrium,
    jacobian_homogeneous,
)
from .errors import NumericalError, ParameterError
from .model import ModelParams, theta, theta_prime

__all__ = [
    "DiffusionJacobian",
    "DispersionResult",
    "Mode",
    "ModeSpectrum",
    "RegionScan",
    "TuringTest",
    "characteristic_matrix",
    "diffusion_jacobian",
    "dispersion_relation",
    "growth_rates",
    "is_turing_unstable",
    "mode_onset_sigma",
    "neumann_laplacian_eigenvalues",
    "region_area_by_s",
    "restabilization_s",
    "sigma_L",
    "sigma_L0",
    "turing_onset_sigma",
    "turing_region_scan",
]


@dataclasses.dataclass(frozen=True)
class DiffusionJacobian:
    """Linearized diffusion matrix at the coexistence state (m^2/year).

    Entries: ``j11 = d_R - sigma*theta(T*) > 0``, ``j12 = -sigma R* theta'(T*)
    <= 0``, ``j21 = 0``, ``j22 = d_T``.
    """

    j11: float
    j12: float
    j21: float
    j22: float

    def as_array(self) -> np.ndarray:
        return np.array([[self.j11, self.j12], [self.j21, self.j22]])


def diffusion_jacobian(eq: Equilibrium, params: ModelParams) -> DiffusionJacobian:
    th = theta(eq.T_star, params.T_hat)
    tp = theta_prime(eq.T_star, params.T_hat)
    return DiffusionJacobian(
        j11=params.d_R - params.sigma * th,
        j12=-params.sigma * eq.R_star * tp,
        j21=0.0,
        j22=params.d_T,
    )


def characteristic_matrix(lambda_kappa, eq: Equilibrium, params: ModelParams) -> Jacobian2:
    """``M_k = J(R*, T*) - lambda_k * J_diff(R*, T*)`` for ``lambda_k >= 0``."""
    if lambda_kappa < 0:
        raise ParameterError("Laplacian eigenvalues are nonnegative")
    J = jacobian_homogeneous(eq.state, params)
    D = diffusion_jacobian(eq, params)
    return Jacobian2(
        J.j11 - lambda_kappa * D.j11,
        J.j12 - lambda_kappa * D.j12,
        J.j21 - lambda_kappa * D.j21,
        J.j22 - lambda_kappa * D.j22,
    )


def growth_rates(lambda_kappa, eq: Equilibrium, params: ModelParams):
    """Both eigenvalues of ``M_k``, largest real part first."""
    return characteristic_matrix(lambda_kappa, eq, params).eigenvalues()


class ModeSpectrum(NamedTuple):
    """Laplacian eigenvalues with multiplicities, ascending."""

    lambdas: np.ndarray
    multiplicities: np.ndarray


def neumann_laplacian_eigenvalues(L, n_modes, dim=1) -> ModeSpectrum:
    """Eigenvalues of the zero-flux Laplacian on an interval or square.

    1D: ``(kappa*pi/L)^2`` for ``kappa = 0 .. n_modes-1``.  2D square:
    ``(k1^2 + k2^2)(pi/L)^2`` over ``k1, k2 = 0 .. n_modes-1`` (``n_modes``
    is per axis), sorted ascending and deduplicated with multiplicities.
    """
    if L <= 0:
        raise ParameterError("domain length must be positive")
    if n_modes < 1:
        raise ParameterError("need at least one mode")
    base = (math.pi / L) ** 2
    if dim == 1:
        kappa = np.arange(n_modes)
        return ModeSpectrum(base * kappa**2, np.ones(n_modes, dtype=int))
    if dim == 2:
        k = np.arange(n_modes)
        sq = (k[:, None] ** 2 + k[None, :] ** 2).ravel()
        uniq, counts = np.unique(sq, return_counts=True)
        return ModeSpectrum(base * uniq.astype(float), counts)
    raise ParameterError(f"dim must be 1 or 2, got {dim}")


@dataclasses.dataclass(frozen=True)
class Mode:
    kappa: int                 # 1D: wavenumber index; 2D: rank in the sorted spectrum
    lambda_kappa: float
    growth: tuple              # pair of complex rates, largest real part first
    multiplicity: int = 1


@dataclasses.dataclass(frozen=True)
class DispersionResult:
    modes: list
    max_growth: float          # largest real part over all modes
    max_mode: int              # kappa of the fastest mode
    equilibrium: Equilibrium


def dispersion_relation(params: ModelParams, L=8.0, n_modes=64, dim=1) -> DispersionResult:
    """Per-mode growth rates of heterogeneous perturbations about ``E*``."""
    eq = coexistence_equilibrium(params)
    spectrum = neumann_laplacian_eigenvalues(L, n_modes, dim)
    modes = []
    best = -math.inf
    best_kappa = 0
    for i, (lam, mult) in enumerate(zip(spectrum.lambdas, spectrum.multiplicities)):
        rates = growth_rates(lam, eq, params)
        modes.append(Mode(i, float(lam), rates, int(mult)))
        if rates[0].real > best:
            best = rates[0].real
            best_kappa = i
    return DispersionResult(modes, best, best_kappa, eq)


class TuringTest(NamedTuple):
    unstable: bool
    kappa: int | None          # fastest-growing admissible mode (kappa >= 1)
    lambda_kappa: float | None
    growth_rate: float | None


def is_turing_unstable(params: ModelParams, L=8.0, n_modes=64, dim=1) -> TuringTest:
    """Finite-domain instability check over the discrete mode set.

    True iff some mode with ``kappa >= 1`` has a growth rate with positive
    real part; reports the fastest such candidate either way.
    """
    disp = dispersion_relation(params, L, n_modes, dim)
    best = None
    for mode in disp.modes[1:]:
        if best is None or mode.growth[0].real > best.growth[0].real:
            best = mode
    if best is None:
        return TuringTest(False, None, None, None)
    rate = best.growth[0].real
    return TuringTest(rate > 0.0, best.kappa, best.lambda_kappa, rate)


def sigma_L(params: ModelParams) -> float:
    """Necessary propagation-reduction threshold for pattern onset.

    Evaluates, at the coexistence state,

        sigma_L = ((k T_hat - c s R*) / (c d R* + k T*)) d_R
                  + (R*/R_hat) (d T_hat + s T*)
                    / ((1 - R*/R_hat)(c d R* + k T*)) d_T.

    For ``sigma <= sigma_L`` the linear coefficient of ``det M(lambda)`` has
    the stabilizing sign and no heterogeneous mode can grow.
    """
    eq = coexistence_equilibrium(params)
    R, T = eq.state
    if R >= params.R_hat:
        raise NumericalError("R* must lie strictly below R_hat")
    c, d, s, k = params.c, params.d, params.s, params.k
    denom = c * d * R + k * T
    term1 = (k * params.T_hat - c * s * R) / denom * params.d_R
    frac = R / params.R_hat
    term2 = frac * (d * params.T_hat + s * T) / ((1.0 - frac) * denom) * params.d_T
    return term1 + term2


def sigma_L0(params: ModelParams) -> float:
    """Threshold with growth inhibition and extra mortality both off:

    ``sigma_L0 = (g/2) (d_R/(g - d) + d_T/k)``.
    """
    if params.g <= params.d:
        raise ParameterError("requires g > d")
    return params.g / 2.0 * (params.d_R / (params.g - params.d) + params.d_T / params.k)


def _det_quadratic_coeffs(params: ModelParams, sigma=None, eq=None):
    """Coefficients (A, B, C) of ``det M(lambda) = A l^2 - B l + C``."""
    if eq is None:
        eq = coexistence_equilibrium(params)
    if sigma is None:
        sigma = params.sigma
    J = jacobian_homogeneous(eq.state, params)
    th = theta(eq.T_star, params.T_hat)
    tp = theta_prime(eq.T_star, params.T_hat)
    d11 = params.d_R - sigma * th
    d12 = -sigma * eq.R_star * tp
    A = params.d_T * d11
    B = params.d_T * J.j11 + d11 * J.j22 - d12 * J.j21
    C = J.determinant
    return A, B, C


def mode_onset_sigma(params: ModelParams, lambda_kappa, eq=None):
    """The sigma at which the mode with eigenvalue ``lambda_kappa`` turns
    neutral (``det M = 0``); ``det M`` is affine in sigma, so this is exact.

    The returned value may exceed ``d_R``, meaning the mode never
    destabilizes within the admissible sigma range.
    """
    if lambda_kappa <= 0:
        raise ParameterError("the zero mode never destabilizes; need lambda > 0")
    if eq is None:
        eq = coexistence_equilibrium(params)
    J = jacobian_homogeneous(eq.state, params)
    th = theta(eq.T_star, params.T_hat)
    tp = theta_prime(eq.T_star, params.T_hat)
    lam = lambda_kappa
    numer = (
        params.d_T * params.d_R * lam * lam
        - (params.d_T * J.j11 + params.d_R * J.j22) * lam
        + J.determinant
    )
    denom = params.d_T * th * lam * lam + (eq.R_star * tp * J.j21 - th * J.j22) * lam
    if denom <= 0:
        raise NumericalError("degenerate sigma dependence; excluded at E*")
    return numer / denom


def turing_onset_sigma(params: ModelParams, tol=1e-12):
    """Smallest sigma at which the continuous spectrum admits a growing mode.

    Solves ``B(sigma) = 2 sqrt(A(sigma) C)`` (the unstable lambda-window of
    ``det M`` opening up) by bisection on ``(sigma_L, d_R)``; always above
    the necessary threshold :func:`sigma_L`.  Returns ``inf`` when no onset
    exists below the ``sigma < d_R`` ceiling.
    """
    eq = coexistence_equilibrium(params)

    def gap(sig):
        A, B, C = _det_quadratic_coeffs(params, sigma=sig, eq=eq)
        return B - 2.0 * math.sqrt(A * C)

    lo = sigma_L(params)
    hi = params.d_R
    if gap(hi) <= 0.0:
        return math.inf
    if gap(lo) >= 0.0:
        raise NumericalError("window already open at sigma_L; inconsistent state")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0.0:
            hi = mid
        else:
            lo = mid
        if hi - lo < tol * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def restabilization_s(params: ModelParams, sigma, lambdas=None, s_hi=None, tol=1e-10):
    """Extra-mortality level at which instability at the given sigma dies out.

    With ``lambdas = None`` the continuous spectrum is used (the unstable
    window of ``det M`` closes); otherwise the last of the given discrete
    Laplacian eigenvalues to stabilize decides.  The toxicity threshold is
    re-derived as ``s`` varies.  Requires the state at ``params.s`` to be
    unstable and the one near the feasibility ceiling stable.
    """
    cap = params.k / params.c - params.d if params.c > 0 else math.inf
    if s_hi is None:
        s_hi = params.s + 0.999 * (cap - params.s)

    def unstable(s):
        p = params.with_updates(s=s, sigma=sigma)
        eq = coexistence_equilibrium(p)
        if lambdas is None:
            A, B, C = _det_quadratic_coeffs(p, eq=eq)
            return B > 0 and B * B - 4.0 * A * C > 0.0
        for lam in lambdas:
            if lam <= 0:
                continue
            A, B, C = _det_quadratic_coeffs(p, eq=eq)
            if A * lam * lam - B * lam + C < 0.0:
                return True
        return False

    lo, hi = params.s, s_hi
    if not unstable(lo):
        raise NumericalError(f"state at s={lo} is already stable at sigma={sigma}")
    if unstable(hi):
        raise NumericalError(f"state at s={hi} is still unstable at sigma={sigma}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if unstable(mid):
            lo = mid
        else:
            hi = mid
        if hi - lo < tol * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


@dataclasses.dataclass(frozen=True)
class RegionScan:
    """Rectangular scan of sigma_L over (gamma, s); NaN marks infeasible cells.

    The admissible-sigma interval at a cell is ``(sigma_L, ceiling)`` where
    the ceiling is the constant ``d_R``.
    """

    gammas: np.ndarray
    ss: np.ndarray
    sigma_L: np.ndarray        # shape (len(gammas), len(ss))
    feasible: np.ndarray       # bool, same shape
    ceiling: float


def turing_region_scan(params: ModelParams, gamma_range=(0.0, 10.0),
                       s_range=(0.0, 1.0), resolution=101) -> RegionScan:
    """Scan sigma_L over a (gamma, s) grid, re-deriving T_hat per cell.

    Cells whose parameters violate the model assumptions (e.g. the
    feasibility ceiling ``c (d + s) / k < 1``) are flagged infeasible, not
    fatal.  Deterministic and independent of evaluation order.
    """
    if isinstance(resolution, int):
        ng = ns = resolution
    else:
        ng, ns = resolution
    gammas = np.linspace(gamma_range[0], gamma_range[1], ng)
    ss = np.linspace(s_range[0], s_range[1], ns)
    grid = np.full((ng, ns), np.nan)
    ok = np.zeros((ng, ns), dtype=bool)
    for i, gam in enumerate(gammas):
        for j, s in enumerate(ss):
            try:
                p = params.with_updates(gamma=gam, s=s)
                grid[i, j] = sigma_L(p)
                ok[i, j] = True
            except (ParameterError, NumericalError):
                pass
    return RegionScan(gammas, ss, grid, ok, params.d_R)


def region_area_by_s(scan: RegionScan):
    """Area of the admissible-(gamma, sigma) cross-section per s value.

    Integrates ``max(ceiling - sigma_L, 0)`` over gamma (midpoint rule);
    infeasible cells contribute nothing.
    """
    width = np.where(scan.feasible, np.maximum(scan.ceiling - scan.sigma_L, 0.0), 0.0)
    dgam = scan.gammas[1] - scan.gammas[0] if len(scan.gammas) > 1 else 1.0
    return scan.ss, width.sum(axis=0) * dgam
