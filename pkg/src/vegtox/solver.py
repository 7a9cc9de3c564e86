"""Finite-difference time integration of both model formulations.

Cell-centered grids on ``[0, L]`` (or ``[0, L]^2``) with reflecting ghost
cells give exactly conservative zero-flux boundaries.  Time stepping is
forward Euler; for the three-species system the stiff healthy/exposed
exchange can instead be taken implicitly per cell (a 2x2 linear solve),
which removes the ``dt <= epsilon/4`` restriction.
"""

from __future__ import annotations

import dataclasses
import enum
import math

import numpy as np
from scipy import ndimage

from . import _kernels
from .equilibria import coexistence_equilibrium
from .errors import BlowUpError, ConfigError, DomainError, ParameterError
from .model import ModelParams, quasi_steady_split
from .turing import characteristic_matrix

__all__ = [
    "Grid",
    "PatternDiagnostics",
    "SimConfig",
    "Snapshot",
    "SpotReport",
    "State2",
    "State3",
    "TimeScheme",
    "Trajectory",
    "convergence_study",
    "gaussian_profile",
    "initial_condition_1d",
    "initial_condition_2d",
    "l1_norm",
    "linear_growth_rate",
    "pattern_diagnostics",
    "run",
    "spot_diagnostics",
    "split_state",
    "stable_dt",
    "stencil_eigenvalue",
    "stencil_eigenvalues",
    "step_fast",
    "step_limit",
]


@dataclasses.dataclass(frozen=True)
class Grid:
    """Cell-centered uniform grid; ``n`` cells per side of length ``L``."""

    dim: int
    L: float
    n: int

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ParameterError(f"dim must be 1 or 2, got {self.dim}")
        if self.n < 3:
            raise ParameterError(f"need at least 3 cells per side, got {self.n}")
        if self.L <= 0:
            raise ParameterError(f"domain length must be positive, got {self.L}")

    @property
    def dx(self) -> float:
        return self.L / self.n

    @property
    def shape(self):
        return (self.n,) if self.dim == 1 else (self.n, self.n)

    def cell_centers(self) -> np.ndarray:
        return (np.arange(self.n) + 0.5) * self.dx

    @property
    def cell_volume(self) -> float:
        return self.dx**self.dim


class TimeScheme(enum.Enum):
    EXPLICIT_EULER = "explicit_euler"
    EXCHANGE_IMPLICIT_EULER = "exchange_implicit_euler"


@dataclasses.dataclass
class State2:
    """Fields of the limit system over a grid."""

    R: np.ndarray
    T: np.ndarray
    t: float = 0.0

    def copy(self):
        return State2(self.R.copy(), self.T.copy(), self.t)


@dataclasses.dataclass
class State3:
    """Fields of the three-species system; ``R_h + R_e`` is the observable
    comparable with the limit system's ``R``."""

    R_h: np.ndarray
    R_e: np.ndarray
    T: np.ndarray
    t: float = 0.0

    @property
    def R(self) -> np.ndarray:
        return self.R_h + self.R_e

    def copy(self):
        return State3(self.R_h.copy(), self.R_e.copy(), self.T.copy(), self.t)


def stable_dt(grid: Grid, params: ModelParams, safety=0.4) -> float:
    """Largest admissible explicit-Euler step, with a safety factor.

    The diffusion limit is ``dx^2 / (2 dim max(d_R, d_T))``; the mobility
    ``d_R - sigma*theta`` never exceeds ``d_R``.
    """
    return safety * grid.dx**2 / (2.0 * grid.dim * max(params.d_R, params.d_T))


@dataclasses.dataclass(frozen=True)
class SimConfig:
    """Time-integration settings.

    ``output_every`` is the diagnostics cadence; full-field snapshots are
    sparser (``snapshot_every``) to bound output size on long runs.
    """

    grid: Grid
    dt: float
    t_fin: float
    output_every: float = 1.0
    snapshot_every: float = 50.0
    scheme: TimeScheme = TimeScheme.EXCHANGE_IMPLICIT_EULER
    clamp_negative: bool = False

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.t_fin <= 0:
            raise ConfigError(f"t_fin must be positive, got {self.t_fin}")
        if self.output_every <= 0 or self.snapshot_every <= 0:
            raise ConfigError("output cadences must be positive")

    def validate_against(self, params: ModelParams, which="limit"):
        bound = stable_dt(self.grid, params)
        if self.dt > bound * (1.0 + 1e-12):
            raise ConfigError(
                f"dt={self.dt:.3e} violates the diffusion stability bound; "
                f"maximal admissible dt is {bound:.3e}"
            )
        if which == "fast" and self.scheme is TimeScheme.EXPLICIT_EULER:
            eps = params.require_epsilon()
            if self.dt > eps / 4.0:
                raise ConfigError(
                    f"explicit exchange requires dt <= epsilon/4 = {eps / 4.0:.3e}"
                )


def gaussian_profile(x, L):
    """Initial biomass hump ``10 exp(-25 (L - 2x)^2 / (4L))``."""
    return 10.0 * np.exp(-25.0 * (L - 2.0 * np.asarray(x)) ** 2 / (4.0 * L))


def initial_condition_1d(grid: Grid) -> State2:
    """Centered biomass hump sampled at cell centers; no initial toxicity."""
    if grid.dim != 1:
        raise DomainError("1D initial condition requires a 1D grid")
    x = grid.cell_centers()
    return State2(gaussian_profile(x, grid.L), np.zeros(grid.n))


def initial_condition_2d(grid: Grid, seed) -> State2:
    """Four 4x4-cell biomass squares at random positions; zero toxicity.

    Square placements may overlap or touch the boundary; later squares
    overwrite earlier ones.  Each square carries one uniform random biomass
    value from [1, 2].  Deterministic for a given seed.
    """
    if grid.dim != 2:
        raise DomainError("2D initial condition requires a 2D grid")
    side = 4
    if grid.n < 2 * side:
        raise DomainError(f"grid too small for {side}x{side} squares, n={grid.n}")
    rng = np.random.default_rng(seed)
    R = np.zeros((grid.n, grid.n))
    for _ in range(4):
        i0 = int(rng.integers(0, grid.n - side + 1))
        j0 = int(rng.integers(0, grid.n - side + 1))
        R[i0:i0 + side, j0:j0 + side] = rng.uniform(1.0, 2.0)
    return State2(R, np.zeros((grid.n, grid.n)))


def split_state(state: State2, params: ModelParams) -> State3:
    """Three-species state with the quasi-steady healthy/exposed split."""
    R_h, R_e = quasi_steady_split(state.R, state.T, params)
    return State3(np.asarray(R_h, dtype=float).copy(),
                  np.asarray(R_e, dtype=float).copy(),
                  state.T.copy(), state.t)


def _limit_args(params, grid, dt, clamp, react, diff):
    return (int(1), float(dt), float(grid.dx), params.g, params.gamma,
            params.d, params.s, params.c, params.k, params.d_R, params.sigma,
            params.d_T, params.R_hat, params.T_hat, clamp, react, diff)


def step_limit(state: State2, params: ModelParams, grid: Grid, dt,
               reactions=True, diffusion=True, clamp_negative=False) -> State2:
    """One forward-Euler step of the limit system; returns a new state.

    ``reactions``/``diffusion`` switch the respective terms off (test
    hooks for conservation and pure-kinetics checks).
    """
    out = state.copy()
    kern = _kernels.advance_limit_1d if grid.dim == 1 else _kernels.advance_limit_2d
    step, cell = kern(out.R, out.T, 1, float(dt), float(grid.dx),
                      params.g, params.gamma, params.d, params.s, params.c,
                      params.k, params.d_R, params.sigma, params.d_T,
                      params.R_hat, params.T_hat,
                      clamp_negative, reactions, diffusion)
    if step >= 0:
        raise BlowUpError(state.t + dt, cell)
    out.t = state.t + dt
    return out


def step_fast(state: State3, params: ModelParams, grid: Grid, dt,
              scheme=TimeScheme.EXCHANGE_IMPLICIT_EULER,
              slow_reactions=True, diffusion=True, exchange=True,
              clamp_negative=False) -> State3:
    """One step of the three-species system; returns a new state.

    Diffusion and the slow reactions are explicit Euler.  With the default
    scheme the stiff exchange is implicit: per cell the 2x2 system in
    ``(R_h, R_e)`` is solved with the transition rates frozen at the
    current toxicity, which preserves ``R_h + R_e`` exactly and relaxes to
    the quasi-steady split as ``epsilon -> 0``.
    """
    eps = params.require_epsilon()
    if scheme is TimeScheme.EXPLICIT_EULER and exchange and dt > eps / 4.0:
        raise ConfigError(f"explicit exchange requires dt <= epsilon/4 = {eps / 4.0:.3e}")
    out = state.copy()
    kern = _kernels.advance_fast_1d if grid.dim == 1 else _kernels.advance_fast_2d
    step, cell = kern(out.R_h, out.R_e, out.T, 1, float(dt), float(grid.dx),
                      params.g, params.gamma, params.d, params.s, params.c,
                      params.k, params.d_R, params.sigma, params.d_T,
                      params.R_hat, params.T_hat, eps,
                      scheme is TimeScheme.EXCHANGE_IMPLICIT_EULER,
                      clamp_negative, slow_reactions, diffusion, exchange)
    if step >= 0:
        raise BlowUpError(state.t + dt, cell)
    out.t = state.t + dt
    return out


def l1_norm(field, grid: Grid) -> float:
    """Discrete L1 norm: sum of |values| times the cell volume."""
    return float(np.sum(np.abs(field)) * grid.cell_volume)


@dataclasses.dataclass(frozen=True)
class Snapshot:
    t: float
    R: np.ndarray
    T: np.ndarray
    R_h: np.ndarray | None = None
    R_e: np.ndarray | None = None


DIAG_COLUMNS = ("t", "l1_R", "min_R", "max_R", "std_R", "l1_T", "min_T", "max_T")


@dataclasses.dataclass
class Trajectory:
    """Run record: sparse field snapshots plus a dense diagnostics series."""

    which: str
    grid: Grid
    dt: float
    diagnostics: dict
    snapshots: list
    final: Snapshot | None = None

    def diag_array(self) -> np.ndarray:
        return np.column_stack([self.diagnostics[c] for c in DIAG_COLUMNS])


def _diag_row(t, R, T, grid):
    return (t, l1_norm(R, grid), float(R.min()), float(R.max()),
            float(R.std()), l1_norm(T, grid), float(T.min()), float(T.max()))


def run(params: ModelParams, config: SimConfig, which="limit", ic=None) -> Trajectory:
    """Advance to ``t_fin`` recording diagnostics and field snapshots.

    ``which`` selects the limit system (state :class:`State2`) or the
    three-species system (``"fast"``, state :class:`State3`; its observable
    ``R`` in all outputs is ``R_h + R_e``).  On blow-up the partial
    trajectory is attached to the raised :class:`BlowUpError`.
    """
    if which not in ("limit", "fast"):
        raise ConfigError(f"unknown system '{which}'")
    grid = config.grid
    config.validate_against(params, which)
    if ic is None:
        if grid.dim != 1:
            raise ConfigError("a 2D run needs an explicit initial state")
        ic = initial_condition_1d(grid)
        if which == "fast":
            ic = split_state(ic, params)

    nsteps = math.ceil(config.t_fin / config.dt - 1e-9)
    dt = config.t_fin / nsteps
    diag_stride = max(1, round(config.output_every / dt))
    snap_stride = max(1, round(config.snapshot_every / dt))

    if which == "limit":
        if not isinstance(ic, State2):
            raise ConfigError("limit system expects a State2 initial condition")
        R = np.array(ic.R, dtype=float)
        T = np.array(ic.T, dtype=float)
        fields = (R, T)
        kern = _kernels.advance_limit_1d if grid.dim == 1 else _kernels.advance_limit_2d
        extra = ()
    else:
        if not isinstance(ic, State3):
            raise ConfigError("fast system expects a State3 initial condition")
        Rh = np.array(ic.R_h, dtype=float)
        Re = np.array(ic.R_e, dtype=float)
        T = np.array(ic.T, dtype=float)
        fields = (Rh, Re, T)
        kern = _kernels.advance_fast_1d if grid.dim == 1 else _kernels.advance_fast_2d
        extra = (params.require_epsilon(),
                 config.scheme is TimeScheme.EXCHANGE_IMPLICIT_EULER)

    args = (params.g, params.gamma, params.d, params.s, params.c, params.k,
            params.d_R, params.sigma, params.d_T, params.R_hat, params.T_hat)

    def observable():
        return (fields[0], fields[1]) if which == "limit" else (fields[0] + fields[1], fields[2])

    def snapshot(t):
        Rv, Tv = observable()
        if which == "limit":
            return Snapshot(t, Rv.copy(), Tv.copy())
        return Snapshot(t, Rv.copy(), Tv.copy(), fields[0].copy(), fields[1].copy())

    diag_rows = [_diag_row(0.0, *observable(), grid)]
    snapshots = [snapshot(0.0)]
    traj = Trajectory(which, grid, dt, {}, snapshots)

    def finalize():
        cols = list(zip(*diag_rows))
        traj.diagnostics = {name: np.asarray(col) for name, col in zip(DIAG_COLUMNS, cols)}
        return traj

    step = 0
    while step < nsteps:
        chunk = min(diag_stride - step % diag_stride,
                    snap_stride - step % snap_stride, nsteps - step)
        if which == "limit":
            bad_step, bad_cell = kern(*fields, chunk, dt, grid.dx, *args,
                                      config.clamp_negative, True, True)
        else:
            bad_step, bad_cell = kern(*fields, chunk, dt, grid.dx, *args, *extra,
                                      config.clamp_negative, True, True, True)
        if bad_step >= 0:
            finalize()
            raise BlowUpError((step + bad_step + 1) * dt, bad_cell, traj)
        step += chunk
        t = step * dt
        if step % diag_stride == 0 or step == nsteps:
            diag_rows.append(_diag_row(t, *observable(), grid))
        if step % snap_stride == 0 and step < nsteps:
            snapshots.append(snapshot(t))

    traj.final = snapshot(nsteps * dt)
    snapshots.append(traj.final)
    return finalize()


# -- diagnostics ----------------------------------------------------------


def _extrema_1d(values, x):
    """Interior local maxima/minima positions with plateau handling.

    A plateau of equal values flanked by lower (higher) neighbors counts as
    a single maximum (minimum) located at its center.  Boundary cells are
    not extremum candidates.
    """
    n = len(values)
    maxima, minima = [], []
    i = 1
    while i < n - 1:
        j = i
        while j + 1 < n and values[j + 1] == values[i]:
            j += 1
        if j >= n - 1:
            break
        left, right = values[i - 1], values[j + 1]
        center = 0.5 * (x[i] + x[j])
        if values[i] > left and values[i] > right:
            maxima.append(center)
        elif values[i] < left and values[i] < right:
            minima.append(center)
        i = j + 1
    return np.asarray(maxima), np.asarray(minima)


@dataclasses.dataclass(frozen=True)
class PatternDiagnostics:
    """Extrema structure of a 1D profile pair.

    The ``major`` maxima are those rising above the midpoint of the field
    range; converged patterns carry low secondary ripples (a small biomass
    ridge mid-gap) that would otherwise obscure peak counting.  Window
    counts are taken over the half-open interval between the outermost
    major toxicity maxima, which covers an integer number of pattern
    periods regardless of the boundary phase; a clean double-peak pattern
    then has exactly twice as many major biomass maxima as toxicity maxima
    in the window.
    """

    r_maxima: np.ndarray
    r_minima: np.ndarray
    t_maxima: np.ndarray
    t_minima: np.ndarray
    r_major_maxima: np.ndarray
    t_major_maxima: np.ndarray
    amplitude_R: float
    amplitude_T: float
    wavelength: float | None
    phase_metric: float | None      # mean |T-max -> nearest R-min| / wavelength
    window_r_maxima: int
    window_t_maxima: int


def pattern_diagnostics(state: State2, grid: Grid) -> PatternDiagnostics:
    """Locate peaks and quantify the T-peak/R-gap phase of a 1D profile."""
    if grid.dim != 1:
        raise DomainError("pattern diagnostics are defined for 1D states")
    x = grid.cell_centers()
    r_max, r_min = _extrema_1d(state.R, x)
    t_max, t_min = _extrema_1d(state.T, x)
    amp_R = float(state.R.max() - state.R.min())
    amp_T = float(state.T.max() - state.T.min())

    def majors(positions, values):
        if len(positions) == 0:
            return positions
        level = 0.5 * (float(values.min()) + float(values.max()))
        heights = np.interp(positions, x, values)
        return positions[heights > level]

    r_major = majors(r_max, state.R)
    t_major = majors(t_max, state.T)
    wavelength = None
    phase = None
    win_r = 0
    win_t = 0
    if len(t_major) >= 2:
        wavelength = float(np.mean(np.diff(t_major)))
        win_lo, win_hi = t_major[0], t_major[-1]
        win_t = int(np.sum((t_major >= win_lo) & (t_major < win_hi)))
        win_r = int(np.sum((r_major >= win_lo) & (r_major < win_hi)))
        if len(r_min) and wavelength > 0:
            dists = [np.min(np.abs(r_min - tm)) for tm in t_major]
            phase = float(np.mean(dists) / wavelength)
    return PatternDiagnostics(r_max, r_min, t_max, t_min, r_major, t_major,
                              amp_R, amp_T, wavelength, phase, win_r, win_t)


@dataclasses.dataclass(frozen=True)
class Spot:
    size: int
    has_central_depression: bool
    t_peak_interior: bool
    touches_boundary: bool


@dataclasses.dataclass(frozen=True)
class SpotReport:
    n_spots: int
    spots: list
    level: float


def spot_diagnostics(state: State2, grid: Grid, level=None, min_cells=4) -> SpotReport:
    """Connected biomass spots of a 2D state and their interior structure.

    Spots are connected components of ``R > level`` (holes filled, so a
    ring-shaped spot keeps its central dip inside).  Per spot this reports
    whether an interior cell is a local minimum of ``R`` (the central
    depression) and whether the spot's toxicity peak falls in its interior.
    """
    if grid.dim != 2:
        raise DomainError("spot diagnostics are defined for 2D states")
    R, T = state.R, state.T
    if level is None:
        level = 0.5 * (float(R.min()) + float(R.max()))
    labels, nlab = ndimage.label(R > level)
    cross = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
    n = R.shape[0]
    spots = []
    for lab in range(1, nlab + 1):
        mask = labels == lab
        if int(mask.sum()) < min_cells:
            continue
        ii, jj = np.where(mask)
        touches = bool(ii.min() == 0 or jj.min() == 0
                       or ii.max() == n - 1 or jj.max() == n - 1)
        filled = ndimage.binary_fill_holes(mask)
        interior = ndimage.binary_erosion(filled, structure=cross, border_value=0)
        depression = False
        for i, j in np.argwhere(interior):
            center = R[i, j]
            neigh = (R[i - 1, j], R[i + 1, j], R[i, j - 1], R[i, j + 1])
            if all(center <= v for v in neigh) and any(center < v for v in neigh):
                depression = True
                break
        t_masked = np.where(filled, T, -np.inf)
        ti, tj = np.unravel_index(int(np.argmax(t_masked)), T.shape)
        spots.append(Spot(int(filled.sum()), depression, bool(interior[ti, tj]),
                          touches))
    return SpotReport(len(spots), spots, float(level))


# -- cross-module checks ---------------------------------------------------


def stencil_eigenvalue(grid: Grid, kappa: int) -> float:
    """Eigenvalue of the discrete 1D zero-flux Laplacian for mode ``kappa``.

    The stencil's eigenvectors are ``cos(kappa*pi*(i+1/2)/n)`` with
    eigenvalues ``(4/dx^2) sin^2(kappa*pi/(2n))``; these converge to the
    continuum values ``(kappa*pi/L)^2`` as the grid refines.
    """
    return 4.0 / grid.dx**2 * math.sin(kappa * math.pi / (2 * grid.n)) ** 2


def stencil_eigenvalues(grid: Grid, n_modes=None) -> np.ndarray:
    m = grid.n if n_modes is None else n_modes
    return np.array([stencil_eigenvalue(grid, kappa) for kappa in range(m)])


def cosine_mode(grid: Grid, kappa: int) -> np.ndarray:
    """Discrete eigenvector ``cos(kappa*pi*(i+1/2)/n)`` of the 1D stencil."""
    i = np.arange(grid.n)
    return np.cos(kappa * math.pi * (i + 0.5) / grid.n)


def linear_growth_rate(params: ModelParams, grid: Grid, kappa: int,
                       amplitude=1e-6, t_end=0.5, dt=1e-5,
                       sample_every=0.01, fit_start_frac=0.0):
    """Measured exponential rate of a single-mode perturbation about E*.

    Seeds one discrete cosine mode with biomass amplitude ``amplitude``,
    the toxicity component chosen along the mode's leading eigenvector (an
    off-eigenvector seed would spend most of the window shedding the
    strongly damped second eigencomponent).  Runs the limit system and
    least-squares fits ``log`` of the biomass mode projection.  Returns
    ``(measured_rate, predicted_rate)``; the prediction is the leading
    eigenvalue of the characteristic matrix at the stencil eigenvalue of
    the mode, which must be real.
    """
    eq = coexistence_equilibrium(params)
    lam = stencil_eigenvalue(grid, kappa)
    M = characteristic_matrix(lam, eq, params)
    mu = M.eigenvalues()[0]
    if mu.imag != 0.0:
        raise DomainError(f"mode {kappa} has a complex leading rate {mu}")
    if abs(M.j12) < 1e-300:
        raise DomainError(f"mode {kappa} does not couple T; eigenvector degenerate")
    # right eigenvector with R-component 1: (1, (mu - j11) / j12)
    t_component = (mu.real - M.j11) / M.j12
    mode = cosine_mode(grid, kappa)
    R = np.full(grid.n, eq.R_star) + amplitude * mode
    T = np.full(grid.n, eq.T_star) + amplitude * t_component * mode
    stride = max(1, round(sample_every / dt))
    nsteps = round(t_end / dt)
    norm = mode @ mode
    times, amps = [0.0], [float((R - eq.R_star) @ mode / norm)]
    done = 0
    while done < nsteps:
        chunk = min(stride, nsteps - done)
        bad_step, bad_cell = _kernels.advance_limit_1d(
            R, T, chunk, dt, grid.dx, params.g, params.gamma, params.d,
            params.s, params.c, params.k, params.d_R, params.sigma,
            params.d_T, params.R_hat, params.T_hat, False, True, True)
        if bad_step >= 0:
            raise BlowUpError((done + bad_step + 1) * dt, bad_cell)
        done += chunk
        times.append(done * dt)
        amps.append(float((R - eq.R_star) @ mode / norm))
    times = np.asarray(times)
    amps = np.abs(np.asarray(amps))
    window = times >= fit_start_frac * t_end
    slope = np.polyfit(times[window], np.log(amps[window]), 1)[0]
    return float(slope), float(mu.real)


@dataclasses.dataclass(frozen=True)
class ConvergenceRow:
    epsilon: float
    sup_R: float
    sup_T: float
    l1_R: float
    l1_T: float


def convergence_study(params: ModelParams, eps_list, t_check,
                      config: SimConfig) -> list:
    """Fast-system vs limit-system mismatch at ``t_check`` per epsilon.

    Both systems start from the same 1D data (the fast system split
    quasi-steadily) on identical grids and steps; errors compare
    ``(R_h + R_e, T)`` against ``(R, T)``.
    """
    grid = config.grid
    cfg = dataclasses.replace(config, t_fin=float(t_check))
    ic2 = initial_condition_1d(grid)
    ref = run(params, cfg, which="limit", ic=ic2).final
    rows = []
    for eps in eps_list:
        p_eps = params.with_updates(epsilon=float(eps))
        ic3 = split_state(ic2, p_eps)
        fin = run(p_eps, cfg, which="fast", ic=ic3).final
        dR = fin.R - ref.R
        dT = fin.T - ref.T
        rows.append(ConvergenceRow(float(eps),
                                   float(np.max(np.abs(dR))),
                                   float(np.max(np.abs(dT))),
                                   l1_norm(dR, grid), l1_norm(dT, grid)))
    return rows
