"""Steady states of the 1D discretized limit system under parameter sweeps.

The steady problem shares the solver's cell-centered stencil, so converged
simulation endpoints lie on continuation branches of the same operator.
Branches are traced with pseudo-arclength predictor-corrector steps
(bordered Newton systems), tagged for stability by the eigenvalues of the
linearization, and scanned for folds (parameter-tangent sign changes) and
branch points (bordered-determinant sign changes), each sharpened by
bisection along the branch.
"""

from __future__ import annotations

import dataclasses
import enum
import math

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .equilibria import coexistence_equilibrium
from .errors import ContinuationError, NewtonError, ParameterError
from .model import ModelParams
from .solver import Grid, l1_norm

__all__ = [
    "Branch",
    "BranchPoint",
    "ContinuationParameter",
    "SpecialPoint",
    "SpecialPointKind",
    "StepConfig",
    "SteadyProblem",
    "bifurcation_diagram",
    "branch_switch",
    "continue_branch",
    "homogeneous_start",
    "newton_solve",
    "solution_at",
    "steady_jacobian",
    "steady_residual",
]


class ContinuationParameter(enum.Enum):
    SIGMA = "sigma"
    S = "s"


def _neumann_laplacian_matrix(n, dx) -> np.ndarray:
    """Dense matrix of the 1D reflecting-ghost Laplacian stencil."""
    L = np.zeros((n, n))
    for i in range(n):
        im = max(i - 1, 0)
        ip = min(i + 1, n - 1)
        L[i, im] += 1.0
        L[i, ip] += 1.0
        L[i, i] -= 2.0
    return L / dx**2


@dataclasses.dataclass(frozen=True)
class SteadyProblem:
    """Steady-state root problem for a 1D grid; unknown ``u = [R; T]``."""

    grid: Grid
    params: ModelParams
    parameter: ContinuationParameter = ContinuationParameter.SIGMA
    laplacian: np.ndarray = dataclasses.field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.grid.dim != 1:
            raise ParameterError("continuation runs on 1D grids")
        object.__setattr__(
            self, "laplacian", _neumann_laplacian_matrix(self.grid.n, self.grid.dx))

    @property
    def n(self) -> int:
        return self.grid.n

    def params_at(self, value: float) -> ModelParams:
        if self.parameter is ContinuationParameter.SIGMA:
            return self.params.with_updates(sigma=value)
        return self.params.with_updates(s=value)

    # weighted inner product: mean-square over cells for the u part, so
    # arclength steps are grid-independent
    @property
    def weight(self) -> float:
        return 1.0 / (2 * self.n)

    def dot(self, x, y) -> float:
        return self.weight * float(x[:-1] @ y[:-1]) + x[-1] * y[-1]

    def norm(self, x) -> float:
        return math.sqrt(max(self.dot(x, x), 0.0))

    def unorm(self, u) -> float:
        return math.sqrt(self.weight * float(u @ u))


def _theta_clamped(T, T_hat):
    return np.clip(T / T_hat, 0.0, 1.0)


def _theta_prime_clamped(T, T_hat):
    return np.where((T >= 0.0) & (T <= T_hat), 1.0 / T_hat, 0.0)


def steady_residual(u, value, problem: SteadyProblem) -> np.ndarray:
    """Discrete steady-state residual (diffusion of ``w`` and of ``T`` plus
    reactions) at parameter ``value``."""
    p = problem.params_at(value)
    n = problem.n
    R, T = u[:n], u[n:]
    th = _theta_clamped(T, p.T_hat)
    w = (p.d_R - p.sigma * th) * R
    mort = p.d + p.s * th
    fR = (p.g - p.gamma * th) * R * (1.0 - R / p.R_hat) - mort * R
    fT = p.c * mort * R - p.k * T
    return np.concatenate([problem.laplacian @ w + fR,
                           p.d_T * (problem.laplacian @ T) + fT])


def steady_jacobian(u, value, problem: SteadyProblem) -> np.ndarray:
    """Analytic Jacobian of :func:`steady_residual` with respect to ``u``."""
    p = problem.params_at(value)
    n = problem.n
    R, T = u[:n], u[n:]
    L = problem.laplacian
    th = _theta_clamped(T, p.T_hat)
    tp = _theta_prime_clamped(T, p.T_hat)
    J = np.empty((2 * n, 2 * n))
    # d(L w)/dR = L diag(phi), d(L w)/dT = L diag(-sigma theta' R)
    J[:n, :n] = L * (p.d_R - p.sigma * th)[None, :]
    J[:n, n:] = L * (-p.sigma * tp * R)[None, :]
    J[n:, :n] = 0.0
    J[n:, n:] = p.d_T * L
    j11 = (p.g - p.gamma * th) * (1.0 - 2.0 * R / p.R_hat) - (p.d + p.s * th)
    j12 = -p.gamma * R * tp * (1.0 - R / p.R_hat) - p.s * R * tp
    j21 = p.c * (p.d + p.s * th)
    j22 = p.c * p.s * R * tp - p.k
    idx = np.arange(n)
    J[idx, idx] += j11
    J[idx, idx + n] += j12
    J[idx + n, idx] += j21
    J[idx + n, idx + n] += j22
    return J


def _residual_dparam(u, value, problem: SteadyProblem) -> np.ndarray:
    """Derivative of the residual with respect to the active parameter."""
    p = problem.params_at(value)
    n = problem.n
    R, T = u[:n], u[n:]
    if problem.parameter is ContinuationParameter.SIGMA:
        th = _theta_clamped(T, p.T_hat)
        return np.concatenate([problem.laplacian @ (-th * R), np.zeros(n)])
    # s enters reactions and, through the re-derived T_hat, theta itself;
    # differentiate numerically (one-sided at feasibility boundaries)
    h = 1e-6 * max(1.0, abs(value))

    def residual_or_none(v):
        try:
            return steady_residual(u, v, problem)
        except ParameterError:
            return None

    fp = residual_or_none(value + h)
    fm = residual_or_none(value - h)
    if fp is not None and fm is not None:
        return (fp - fm) / (2.0 * h)
    f0 = steady_residual(u, value, problem)
    if fp is not None:
        return (fp - f0) / h
    if fm is not None:
        return (f0 - fm) / h
    raise ParameterError(f"parameter derivative undefined at {value}")


def newton_solve(u0, value, problem: SteadyProblem, tol=1e-10,
                 max_iter=30, max_halvings=8) -> np.ndarray:
    """Damped Newton at fixed parameter; converged when ||F||_inf < tol."""
    u = np.array(u0, dtype=float)
    F = steady_residual(u, value, problem)
    fnorm = float(np.max(np.abs(F)))
    for _ in range(max_iter):
        if fnorm < tol:
            return u
        J = steady_jacobian(u, value, problem)
        try:
            du = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError as exc:
            raise NewtonError(f"singular Jacobian: {exc}", fnorm, u) from exc
        lam = 1.0
        for _ in range(max_halvings + 1):
            u_try = u + lam * du
            F_try = steady_residual(u_try, value, problem)
            f_try = float(np.max(np.abs(F_try)))
            if f_try < fnorm or f_try < tol:
                u, F, fnorm = u_try, F_try, f_try
                break
            lam *= 0.5
        else:
            raise NewtonError("line search stalled", fnorm, u)
    if fnorm < tol:
        return u
    raise NewtonError(f"no convergence in {max_iter} iterations "
                      f"(residual {fnorm:.3e})", fnorm, u)


def n_unstable(u, value, problem: SteadyProblem, k_eigs=6) -> int:
    """Count of linearization eigenvalues with positive real part.

    Dense solve up to 2n = 400; beyond that the ``k_eigs`` eigenvalues
    nearest zero via shift-invert (only crossings matter for tagging).
    """
    J = steady_jacobian(u, value, problem)
    if J.shape[0] <= 400:
        eig = scipy.linalg.eigvals(J)
    else:
        eig = scipy.sparse.linalg.eigs(
            scipy.sparse.csc_matrix(J), k=k_eigs, sigma=0.0,
            return_eigenvectors=False)
    return int(np.sum(eig.real > 0.0))


class SpecialPointKind(enum.Enum):
    FOLD = "fold"
    BRANCH_POINT = "branch_point"


@dataclasses.dataclass(frozen=True)
class SpecialPoint:
    kind: SpecialPointKind
    param: float
    u: np.ndarray
    ambiguous: bool = False


@dataclasses.dataclass(frozen=True)
class BranchPoint:
    """One accepted continuation point."""

    param: float
    u: np.ndarray
    l1_R: float
    n_unstable: int


@dataclasses.dataclass
class Branch:
    points: list
    special_points: list
    termination: str = ""

    @property
    def params(self) -> np.ndarray:
        return np.array([pt.param for pt in self.points])

    @property
    def l1_norms(self) -> np.ndarray:
        return np.array([pt.l1_R for pt in self.points])

    @property
    def stability(self) -> np.ndarray:
        return np.array([pt.n_unstable for pt in self.points])


@dataclasses.dataclass(frozen=True)
class StepConfig:
    ds0: float = 0.01
    ds_min: float = 1e-4
    ds_max: float = 0.1
    grow: float = 1.3
    easy_streak: int = 3
    easy_iters: int = 4
    max_points: int = 400
    param_tol: float = 1e-6
    corrector_iters: int = 12


@dataclasses.dataclass
class _Point:
    x: np.ndarray            # (u, p) concatenated, length 2n+1
    tangent: np.ndarray      # unit tangent in the weighted norm
    n_unstable: int
    det_sign: float

    @property
    def u(self):
        return self.x[:-1]

    @property
    def p(self):
        return float(self.x[-1])


def _bordered_matrix(problem, u, p, tangent):
    n2 = u.size
    M = np.zeros((n2 + 1, n2 + 1))
    M[:n2, :n2] = steady_jacobian(u, p, problem)
    M[:n2, n2] = _residual_dparam(u, p, problem)
    M[n2, :n2] = problem.weight * tangent[:-1]
    M[n2, n2] = tangent[-1]
    return M


def _tangent_and_detsign(problem, u, p, border, orient=None):
    """Solve the bordered tangent system; also return sign(det) of the
    bordered matrix, the branch-point test function."""
    M = _bordered_matrix(problem, u, p, border)
    rhs = np.zeros(u.size + 1)
    rhs[-1] = 1.0
    try:
        tau = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError as exc:
        raise ContinuationError(f"singular bordered system: {exc}") from exc
    tau /= problem.norm(tau)
    if orient is not None and problem.dot(tau, orient) < 0:
        tau = -tau
    sign, _ = np.linalg.slogdet(M)
    return tau, float(sign)


def _correct(problem, x_pred, base, tangent, ds, cfg, tol=1e-10):
    """Newton on the bordered system: residual plus arclength constraint."""
    x = np.array(x_pred, dtype=float)
    for it in range(cfg.corrector_iters):
        F = steady_residual(x[:-1], x[-1], problem)
        N = problem.dot(tangent, x - base) - ds
        norm = max(float(np.max(np.abs(F))), abs(N))
        if norm < tol:
            return x, it
        M = _bordered_matrix(problem, x[:-1], x[-1], tangent)
        rhs = np.concatenate([F, [N]])
        try:
            dx = np.linalg.solve(M, -rhs)
        except np.linalg.LinAlgError as exc:
            raise NewtonError(f"singular bordered system: {exc}") from exc
        x = x + dx
    F = steady_residual(x[:-1], x[-1], problem)
    N = problem.dot(tangent, x - base) - ds
    if max(float(np.max(np.abs(F))), abs(N)) < tol:
        return x, cfg.corrector_iters
    raise NewtonError("corrector did not converge",
                      float(np.max(np.abs(F))), x[:-1])


def _point_from_x(problem, x, border, orient):
    tau, _ = _tangent_and_detsign(problem, x[:-1], x[-1], border, orient)
    # the branch-point test function is the bordered determinant with the
    # point's own oriented tangent as the border row; a border inherited
    # from elsewhere would make its sign orientation-dependent
    sign, _ = np.linalg.slogdet(_bordered_matrix(problem, x[:-1], x[-1], tau))
    return _Point(x, tau, n_unstable(x[:-1], x[-1], problem), float(sign))


def _midpoint_on_branch(problem, a: _Point, b: _Point, cfg):
    """Corrected midpoint of a branch segment (constraint plane through the
    chord midpoint, normal to the chord)."""
    chord = b.x - a.x
    ds = 0.5 * problem.norm(chord)
    border = chord / problem.norm(chord)
    x, _ = _correct(problem, 0.5 * (a.x + b.x), a.x, border, ds, cfg)
    return _point_from_x(problem, x, border, orient=border)


def _refine_special(problem, a: _Point, b: _Point, cfg, out, depth=0):
    """Bisect a segment that triggered a detection test and classify the
    located crossing.  Handles multiple crossings by recursion."""
    fold_flip = a.tangent[-1] * b.tangent[-1] < 0
    det_flip = a.det_sign * b.det_sign < 0
    dn = b.n_unstable - a.n_unstable
    if not (fold_flip or det_flip or dn != 0):
        return
    if depth > 40 or (abs(b.p - a.p) < cfg.param_tol
                      and problem.norm(b.x - a.x) < 1e-7):
        kind, ambiguous = _classify(a, b, fold_flip, det_flip, dn)
        out.append(SpecialPoint(kind, 0.5 * (a.p + b.p),
                                0.5 * (a.u + b.u), ambiguous))
        return
    try:
        m = _midpoint_on_branch(problem, a, b, cfg)
    except (NewtonError, ContinuationError, ParameterError):
        kind, ambiguous = _classify(a, b, fold_flip, det_flip, dn)
        out.append(SpecialPoint(kind, 0.5 * (a.p + b.p),
                                0.5 * (a.u + b.u), True))
        return
    _refine_special(problem, a, m, cfg, out, depth + 1)
    _refine_special(problem, m, b, cfg, out, depth + 1)


def _classify(a, b, fold_flip, det_flip, dn):
    if fold_flip and not det_flip:
        return SpecialPointKind.FOLD, False
    if det_flip and not fold_flip:
        return SpecialPointKind.BRANCH_POINT, False
    if fold_flip and det_flip:
        # dominant criterion: a genuine fold has a near-vertical tangent
        near_vertical = min(abs(a.tangent[-1]), abs(b.tangent[-1])) < 0.1
        if near_vertical:
            return SpecialPointKind.FOLD, False
        return SpecialPointKind.BRANCH_POINT, True
    # eigenvalue count moved without either flip
    return SpecialPointKind.BRANCH_POINT, True


def _dedup_specials(problem, specials):
    """Collapse near-coincident detections of one crossing.

    The bisection refinement can emit the same fold from both adjacent
    sub-segments, or a leftover ambiguous branch point right next to a
    fold (the eigenvalue crossing and the tangent flip refine to slightly
    different positions).  Points are duplicates when both the parameter
    and the solution coincide; distinct solutions at equal parameters
    (e.g. the two folds of a symmetric pitchfork pair) are kept.
    """
    kept = []
    for sp in specials:
        match = None
        for i, other in enumerate(kept):
            if (abs(sp.param - other.param) < 1e-4 * max(1.0, abs(sp.param))
                    and problem.unorm(sp.u - other.u)
                    < 1e-2 * max(1.0, problem.unorm(sp.u))):
                match = i
                break
        if match is None:
            kept.append(sp)
            continue
        other = kept[match]
        if sp.kind is other.kind:
            if other.ambiguous and not sp.ambiguous:
                kept[match] = sp
        elif sp.ambiguous and not other.ambiguous:
            pass
        elif other.ambiguous and not sp.ambiguous:
            kept[match] = sp
        else:
            kept.append(sp)
    return kept


def continue_branch(problem: SteadyProblem, u0, p0, p_range,
                    step: StepConfig | None = None, direction=1.0,
                    orient_vector=None) -> Branch:
    """Trace one branch from a converged point across ``p_range``.

    The first tangent is analytic; afterwards the secant direction both
    predicts and borders the corrector.  The step length adapts within
    ``[ds_min, ds_max]`` (normalized arclength): halve on corrector
    failure, grow after ``easy_streak`` cheap successes.  Stops on range
    exit, step underflow or the point cap; the reason is recorded.
    """
    cfg = step or StepConfig()
    u = newton_solve(u0, p0, problem)
    x = np.concatenate([u, [p0]])
    seed = np.zeros(x.size)
    seed[-1] = 1.0
    first = _point_from_x(problem, x, seed, orient=None)
    if orient_vector is None:
        orient_vector = seed * direction
    if problem.dot(first.tangent, orient_vector) < 0:
        first = dataclasses.replace(first, tangent=-first.tangent)
    pts = [first]
    specials: list = []
    branch = Branch([_branch_point(problem, first)], specials)

    ds = cfg.ds0
    streak = 0
    lo, hi = min(p_range), max(p_range)
    while len(branch.points) < cfg.max_points:
        cur = pts[-1]
        accepted = None
        while True:
            x_pred = cur.x + ds * cur.tangent
            try:
                x_new, iters = _correct(problem, x_pred, cur.x, cur.tangent, ds, cfg)
                secant = x_new - cur.x
                new = _point_from_x(problem, x_new, secant / problem.norm(secant),
                                    orient=secant)
                # a reversal against the previous tangent means the corrector
                # hopped to an unrelated piece of the solution set
                if problem.dot(new.tangent, cur.tangent) <= 0.0:
                    raise ContinuationError("tangent reversal")
            except (NewtonError, ContinuationError, ParameterError):
                ds *= 0.5
                if ds < cfg.ds_min:
                    branch.termination = "step_underflow"
                    branch.special_points[:] = _dedup_specials(problem, specials)
                    return branch
                streak = 0
                continue
            accepted = (new, iters)
            break
        new, iters = accepted
        _refine_special(problem, cur, new, cfg, specials)
        pts.append(new)
        branch.points.append(_branch_point(problem, new))
        if iters <= cfg.easy_iters:
            streak += 1
            if streak >= cfg.easy_streak:
                ds = min(ds * cfg.grow, cfg.ds_max)
                streak = 0
        else:
            streak = 0
        if not (lo - 1e-12 <= new.p <= hi + 1e-12):
            branch.termination = "range_exit"
            break
    else:
        branch.termination = "max_points"
    branch.special_points[:] = _dedup_specials(problem, specials)
    return branch


def _branch_point(problem, point: _Point) -> BranchPoint:
    n = problem.n
    return BranchPoint(point.p, point.u.copy(),
                       l1_norm(point.u[:n], problem.grid), point.n_unstable)


def homogeneous_start(problem: SteadyProblem, p0) -> np.ndarray:
    """Spatially constant coexistence state replicated over the grid."""
    eq = coexistence_equilibrium(problem.params_at(p0))
    n = problem.n
    return np.concatenate([np.full(n, eq.R_star), np.full(n, eq.T_star)])


def solution_at(problem: SteadyProblem, branch: Branch, p_target):
    """Polish the branch point nearest ``p_target`` to that exact parameter.

    Intended for reading a diagram ordinate at a prescribed parameter, e.g.
    to compare with a simulation endpoint; only meaningful away from folds.
    """
    idx = int(np.argmin(np.abs(branch.params - p_target)))
    u = newton_solve(branch.points[idx].u, p_target, problem)
    return u, l1_norm(u[:problem.n], problem.grid)


def _kernel_vector(J, seed=0, iters=60, shift=1e-10):
    """Inverse iteration for the eigenvector of the eigenvalue nearest zero."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(J.shape[0])
    v /= np.linalg.norm(v)
    A = J + shift * np.eye(J.shape[0])
    try:
        lu, piv = scipy.linalg.lu_factor(A)
    except scipy.linalg.LinAlgError as exc:
        raise ContinuationError(f"kernel factorization failed: {exc}") from exc
    for _ in range(iters):
        w = scipy.linalg.lu_solve((lu, piv), v)
        w /= np.linalg.norm(w)
        if np.linalg.norm(w - v) < 1e-13 or np.linalg.norm(w + v) < 1e-13:
            return w
        v = w
    return v


def branch_switch(problem: SteadyProblem, special: SpecialPoint,
                  delta_rel=1e-2):
    """Start points on the branch crossing at a branch point.

    Perturbs the solution by ``+-delta`` along the kernel of the critical
    linearization and corrects with the kernel amplitude pinned at
    ``+-delta`` and the parameter free (plain fixed-parameter correction
    slides back onto the primary branch at a pitchfork, whose off-branch
    solutions have a vanishing Newton basin near the crossing).  Solutions
    that end up on the primary branch anyway are discarded.  Folds are
    rejected: nothing crosses there.
    """
    if special.kind is SpecialPointKind.FOLD:
        raise ContinuationError("cannot switch at a fold: no crossing branch")
    if special.kind is not SpecialPointKind.BRANCH_POINT:
        raise ContinuationError(f"unknown special point kind {special.kind}")
    u_bp, p_bp = special.u, special.param
    J = steady_jacobian(u_bp, p_bp, problem)
    psi = _kernel_vector(J)
    psi /= problem.unorm(psi)
    unorm = problem.unorm(u_bp)
    if unorm == 0.0:
        raise ContinuationError("cannot scale a perturbation of the zero state")
    x_bp = np.concatenate([u_bp, [p_bp]])
    border = np.concatenate([psi, [0.0]])
    cfg = StepConfig(corrector_iters=30)
    found = []
    for sign in (1.0, -1.0):
        for delta in (delta_rel * unorm, 0.5 * delta_rel * unorm):
            # psi has unit weighted norm, so the constraint value is the
            # signed kernel amplitude itself
            x_pred = x_bp + sign * delta * border
            try:
                x_new, _ = _correct(problem, x_pred, x_bp, border, sign * delta, cfg)
            except (NewtonError, ContinuationError, ParameterError):
                continue
            try:
                u_primary = newton_solve(u_bp, x_new[-1], problem)
                on_primary = problem.unorm(x_new[:-1] - u_primary) < 0.25 * delta
            except (NewtonError, ParameterError):
                on_primary = False
            if not on_primary:
                found.append((x_new[:-1], float(x_new[-1])))
                break
    if not found:
        raise ContinuationError(
            f"branch switching failed at p={p_bp:.6g}: every perturbation "
            "fell back onto the primary branch")
    return found


def bifurcation_diagram(problem: SteadyProblem, p_range, max_branches=4,
                        step: StepConfig | None = None) -> Branch | list:
    """Primary branch plus up to ``max_branches`` switched branches.

    Continues the spatially homogeneous branch across ``p_range``, switches
    at each detected branch point (in encounter order) and traces every
    secondary branch in both arclength directions.  Individual branch
    failures leave partial results rather than aborting the diagram.  The
    trivial bare-soil branch is excluded (it is homogeneously unstable).
    """
    cfg = step or StepConfig()
    p0, p1 = p_range
    u0 = homogeneous_start(problem, p0)
    primary = continue_branch(problem, u0, p0, p_range, cfg,
                              direction=1.0 if p1 >= p0 else -1.0)
    branches = [primary]
    crossings = [sp for sp in primary.special_points
                 if sp.kind is SpecialPointKind.BRANCH_POINT]
    for sp in crossings[:max_branches]:
        try:
            starts = branch_switch(problem, sp)
        except (ContinuationError, NewtonError):
            continue
        x_bp = np.concatenate([sp.u, [sp.param]])
        legs = []
        # one leg per crossing direction, each traced away from the branch
        # point so neither passes through the singular crossing itself
        for u_s, p_s in starts:
            away = np.concatenate([u_s, [p_s]]) - x_bp
            try:
                legs.append(continue_branch(problem, u_s, p_s, p_range, cfg,
                                            orient_vector=away))
            except (NewtonError, ContinuationError):
                continue
        if not legs and len(starts) == 1:
            # single-sided switch: trace that start in both directions
            u_s, p_s = starts[0]
            away = np.concatenate([u_s, [p_s]]) - x_bp
            for flip in (1.0, -1.0):
                try:
                    legs.append(continue_branch(problem, u_s, p_s, p_range, cfg,
                                                orient_vector=flip * away))
                except (NewtonError, ContinuationError):
                    continue
        if not legs:
            continue
        branches.append(_merge_legs(legs))
    return branches


def _merge_legs(legs) -> Branch:
    if len(legs) == 1:
        return legs[0]
    fwd, bwd = legs[0], legs[1]
    points = list(reversed(bwd.points)) + fwd.points
    specials = bwd.special_points + fwd.special_points
    return Branch(points, specials,
                  f"{bwd.termination}|{fwd.termination}")
