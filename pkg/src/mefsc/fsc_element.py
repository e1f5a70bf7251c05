"""Single-element spectral solver driven by the flow map.

Each time step: rebuild the orthogonal basis from the current germs, transfer
the state's modes into the new basis exactly (covariance-determinant form of
the transfer, with a projection fallback), then advance the modes one RK4
step with the basis frozen. Local statistics fall out of the modes directly:
the mean is mode 0 and the variance is the weighted sum of squared higher
modes.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import isfinite

import numpy as np

from .basis import BasisSet, gram_schmidt, project, warmstart_basis
from .flowmap import ModelSpec, enriched_germs
from .measures import Distribution, QuadratureGrid, build_quadrature

# Below this determinant-to-diagonal ratio the germ covariance counts as
# singular and the transfer falls back to direct projection.
SINGULAR_RATIO = 1e-28


class NumericalBlowup(RuntimeError):
    """Raised when an element's state stops being representable."""

    def __init__(self, message: str, t: float, element_id: int):
        # All three go into args so the exception survives pickling across
        # process-pool boundaries.
        super().__init__(message, t, element_id)
        self.t = t
        self.element_id = element_id

    def __str__(self) -> str:
        return f"{self.args[0]} (t={self.t:.6g}, element {self.element_id})"


@dataclass
class ElementState:
    """Spectral state of one element: modes of each component on a basis."""

    t: float
    basis: BasisSet
    modes: np.ndarray
    element_id: int
    grid: QuadratureGrid


@dataclass(frozen=True)
class MomentSample:
    t: float
    mean: np.ndarray
    variance: np.ndarray


@dataclass(frozen=True)
class FallbackEvent:
    """One occasion where the exact transfer was replaced by projection.

    ``row`` is the state component index, or -1 when the whole transfer fell
    back because a germ had been dropped.
    """

    t: float
    element_id: int
    row: int
    reason: str


@dataclass(frozen=True)
class WarmStart:
    """Fixed polynomial basis used for an initial interval.

    Deterministic initial conditions make every germ constant, so the
    flow-driven basis cannot start from t=0; integrating on a fixed
    polynomial-chaos basis first lets the state pick up parameter dependence.
    """

    degree: int
    duration: float


@dataclass
class LocalSeries:
    """Per-step local moments of one element, plus solver diagnostics."""

    times: np.ndarray
    mean: np.ndarray
    variance: np.ndarray
    fallback_events: list[FallbackEvent]
    max_orthogonality_residual: float | None
    final_state: ElementState


def rebuild_basis(state: ElementState, model: ModelSpec, truncation: int) -> BasisSet:
    """Fresh orthogonal basis from the current state's germs.

    Evaluates the state at the nodes, forms the germ set (state components
    plus time derivatives), prepends the constant and orthogonalizes.
    """
    values = state.modes @ state.basis.values
    germs = enriched_germs(model, state.t, values, state.grid, truncation)
    cands = np.empty((germs.count + 1, state.grid.n_nodes))
    cands[0] = 1.0
    cands[1:] = germs.values
    return gram_schmidt(cands, state.grid, check=False)


def _transfer_from_values(
    values: np.ndarray,
    new_basis: BasisSet,
    grid: QuadratureGrid,
    t: float,
    element_id: int,
    event_log: list | None,
) -> np.ndarray:
    """Modes of the state components on a basis just built from them.

    Because germ l of the new basis IS state component l, its modes follow
    from germ covariances alone: mode 0 is the mean, mode j for 0<j<l is a
    ratio of covariance determinants (the j x j germ covariance versus the
    same matrix with its last row replaced by component l's covariances),
    mode l is 1 and higher modes vanish. This is exact, no projection error.
    """
    n = values.shape[0]
    w = grid.weights
    means = values @ w
    full = new_basis.count == new_basis.kept_flags.size  # no candidate dropped
    if not (full or np.all(new_basis.kept_flags[1 : n + 1])):
        # A state germ was dropped, so basis rows no longer line up with
        # germ indices; projection is the only meaningful transfer left.
        if event_log is not None:
            event_log.append(FallbackEvent(t, element_id, -1, "state germ dropped"))
        return values @ new_basis.projector(grid)

    centered = values - means[:, None]
    cov = (centered * w) @ centered.T
    modes = np.zeros((n, new_basis.count))
    for li in range(n):
        modes[li, 0] = means[li]
        modes[li, li + 1] = 1.0
        degenerate = False
        for j in range(1, li + 1):
            if j == 1:
                det_sq = cov[0, 0]
                det_tri = cov[li, 0]
                diag_prod = cov[0, 0]
            elif j == 2:
                det_sq = cov[0, 0] * cov[1, 1] - cov[0, 1] * cov[1, 0]
                det_tri = cov[0, 0] * cov[li, 1] - cov[0, 1] * cov[li, 0]
                diag_prod = cov[0, 0] * cov[1, 1]
            else:
                square = cov[:j, :j]
                tri = square.copy()
                tri[-1] = cov[li, :j]
                det_sq = np.linalg.det(square)
                det_tri = np.linalg.det(tri)
                diag_prod = np.prod(np.diagonal(square))
            if not (abs(det_sq) > SINGULAR_RATIO * diag_prod):
                degenerate = True
                break
            modes[li, j] = det_tri / det_sq
        if degenerate:
            modes[li] = values[li] @ new_basis.projector(grid)
            if event_log is not None:
                event_log.append(
                    FallbackEvent(t, element_id, li, "singular germ covariance")
                )
    return modes


def transfer_modes(
    old_state: ElementState,
    new_basis: BasisSet,
    event_log: list | None = None,
) -> np.ndarray:
    values = old_state.modes @ old_state.basis.values
    return _transfer_from_values(
        values, new_basis, old_state.grid, old_state.t, old_state.element_id, event_log
    )


def galerkin_rhs(
    t: float,
    modes: np.ndarray,
    basis: BasisSet,
    model: ModelSpec,
    grid: QuadratureGrid,
    element_id: int = 0,
) -> np.ndarray:
    """Mode time-derivatives, pseudo-spectrally.

    The state is reconstructed at the nodes, the model right-hand side is
    applied pointwise and the result projected back. For companion-form
    systems the derivative of mode row l is identically mode row l+1 (the
    reconstruction-project round trip is the identity on the span), so only
    the highest-derivative row needs node arithmetic.
    """
    values = modes @ basis.values
    if not isfinite(float(values.sum())):
        raise NumericalBlowup("non-finite state values", t, element_id)
    proj = basis.projector(grid)
    if model.companion:
        out = np.empty_like(modes)
        out[:-1] = modes[1:]
        out[-1] = model.derivative_chain(t, grid.nodes, values, 0)[0] @ proj
        return out
    return model.rhs(t, grid.nodes, values) @ proj


def _rk4_modes(t, modes, basis, model, grid, dt, element_id):
    half = 0.5 * dt
    k1 = galerkin_rhs(t, modes, basis, model, grid, element_id)
    k2 = galerkin_rhs(t + half, modes + half * k1, basis, model, grid, element_id)
    k3 = galerkin_rhs(t + half, modes + half * k2, basis, model, grid, element_id)
    k4 = galerkin_rhs(t + dt, modes + dt * k3, basis, model, grid, element_id)
    out = modes + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
    if not isfinite(float(out.sum())):
        raise NumericalBlowup("non-finite modes after step", t + dt, element_id)
    return out


def rk4_step(state: ElementState, model: ModelSpec, dt: float) -> ElementState:
    """One classical RK4 step on the mode system, basis frozen."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    new_modes = _rk4_modes(
        state.t, state.modes, state.basis, model, state.grid, dt, state.element_id
    )
    return ElementState(
        t=state.t + dt,
        basis=state.basis,
        modes=new_modes,
        element_id=state.element_id,
        grid=state.grid,
    )


def local_moments(state: ElementState) -> MomentSample:
    """Mean and variance of each component under the element measure."""
    modes = state.modes
    variance = (modes[:, 1:] ** 2) @ state.basis.squared_norms[1:]
    return MomentSample(
        t=state.t, mean=modes[:, 0].copy(), variance=np.maximum(variance, 0.0)
    )


def _max_offdiag_residual(basis: BasisSet, w: np.ndarray) -> float:
    gram = (basis.values * w) @ basis.values.T
    scale = np.sqrt(np.diagonal(gram))
    normalized = np.abs(gram) / np.outer(scale, scale)
    np.fill_diagonal(normalized, 0.0)
    return float(normalized.max())


def run_element(
    box,
    distributions: tuple[Distribution, ...],
    model: ModelSpec,
    truncation: int,
    dt: float,
    duration: float,
    warmstart: WarmStart | None = None,
    element_id: int = 0,
    points_per_axis: int = 10,
    audit_orthogonality: bool = False,
) -> LocalSeries:
    """Integrate one element and record its local moments at every step.

    With a warm start the basis is a fixed polynomial chaos until the given
    duration, after which the flow-driven rebuild+transfer takes over at
    every step. ``audit_orthogonality`` tracks the worst normalized
    off-diagonal Gram entry over all rebuilds (costly, for validation runs).
    """
    grid = build_quadrature(np.asarray(box, dtype=float), distributions, points_per_axis)
    n = model.state_dim
    n_steps = int(round(duration / dt)) if duration > 0 else 0
    times = np.arange(n_steps + 1) * dt
    state_values = model.initial_state(grid.nodes)

    warm_steps = 0
    if warmstart is not None and warmstart.duration > 0:
        basis = warmstart_basis(grid, grid.dimension, warmstart.degree)
        warm_steps = min(n_steps, int(round(warmstart.duration / dt)))
    else:
        germs = enriched_germs(model, 0.0, state_values, grid, truncation)
        cands = np.empty((germs.count + 1, grid.n_nodes))
        cands[0] = 1.0
        cands[1:] = germs.values
        basis = gram_schmidt(cands, grid, check=False)
    modes = project(state_values, basis, grid)

    mean = np.empty((n, n_steps + 1))
    variance = np.empty((n, n_steps + 1))
    events: list[FallbackEvent] = []
    max_residual = 0.0 if audit_orthogonality else None
    mean[:, 0] = modes[:, 0]
    variance[:, 0] = (modes[:, 1:] ** 2) @ basis.squared_norms[1:]

    rebuild_from = warm_steps if warm_steps else 1
    cands = np.empty((truncation + 1, grid.n_nodes))
    cands[0] = 1.0
    t = 0.0
    for i in range(n_steps):
        if i >= rebuild_from:
            state_values = modes @ basis.values
            germs = enriched_germs(model, t, state_values, grid, truncation)
            cands[1:] = germs.values
            new_basis = gram_schmidt(cands, grid, check=False)
            if new_basis.count == 1 and i == warm_steps and warm_steps:
                raise NumericalBlowup(
                    "all germs degenerate after warm start", t, element_id
                )
            modes = _transfer_from_values(
                state_values, new_basis, grid, t, element_id, events
            )
            basis = new_basis
            if audit_orthogonality:
                residual = _max_offdiag_residual(basis, grid.weights)
                if residual > max_residual:
                    max_residual = residual
        modes = _rk4_modes(t, modes, basis, model, grid, dt, element_id)
        t = times[i + 1]
        mean[:, i + 1] = modes[:, 0]
        variance[:, i + 1] = (modes[:, 1:] ** 2) @ basis.squared_norms[1:]

    final = ElementState(
        t=times[-1], basis=basis, modes=modes, element_id=element_id, grid=grid
    )
    return LocalSeries(
        times=times,
        mean=mean,
        variance=variance,
        fallback_events=events,
        max_orthogonality_residual=max_residual,
        final_state=final,
    )
