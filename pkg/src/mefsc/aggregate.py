"""Element orchestration and global moments.

Global statistics come from the per-element conditional moments through the
laws of total expectation and total variance; element solves are independent
and may run in parallel, with a fixed by-index reduction so the result never
depends on scheduling.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field

import numpy as np

from .flowmap import ModelSpec
from .fsc_element import FallbackEvent, LocalSeries, WarmStart, run_element
from .measures import Distribution, RandomSpacePartition, partition_random_domain

MASS_TOLERANCE = 1e-12
_VAR_CLAMP = -1e-14


@dataclass(frozen=True)
class SolverConfig:
    """Everything a multi-element run needs, minus CLI concerns."""

    model: ModelSpec
    distributions: tuple[Distribution, ...]
    element_counts: tuple[int, ...]
    truncation: int
    dt: float
    duration: float
    warmstart: WarmStart | None = None
    workers: int = 1
    points_per_axis: int = 10
    keep_local: bool = False
    audit_orthogonality: bool = False

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.duration < 0:
            raise ValueError("duration must be >= 0")
        n = self.model.state_dim
        if self.truncation < n + 1:
            raise ValueError(
                f"truncation must be at least state_dim+1 = {n + 1} "
                f"for model {self.model.name!r}"
            )
        if len(self.distributions) != self.model.param_dim:
            raise ValueError("one distribution per model parameter required")
        if len(self.element_counts) != self.model.param_dim:
            raise ValueError("one element count per model parameter required")
        if any(c < 1 for c in self.element_counts):
            raise ValueError("element counts must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class MomentSeries:
    """Global mean and variance of each component on a uniform time grid."""

    times: np.ndarray
    mean: np.ndarray
    variance: np.ndarray
    component_names: tuple[str, ...]
    partition: RandomSpacePartition | None = None
    fallback_events: list[FallbackEvent] = field(default_factory=list)
    max_orthogonality_residual: float | None = None
    local_series: list[LocalSeries] | None = None


def _check_masses(masses: np.ndarray) -> None:
    total = float(np.sum(masses))
    if abs(total - 1.0) > MASS_TOLERANCE:
        raise ValueError(f"element masses sum to {total!r}, expected 1")


def total_expectation(local_means, masses) -> float:
    """Mass-weighted combination of conditional means."""
    local_means = np.asarray(local_means, dtype=float)
    masses = np.asarray(masses, dtype=float)
    if local_means.shape != masses.shape:
        raise ValueError("one mean per element required")
    _check_masses(masses)
    return float(np.sum(masses * local_means))


def total_variance(local_means, local_vars, masses) -> float:
    """Law of total variance for a partition of the random domain.

    Sum of mass-weighted conditional variances, plus the spread of the
    conditional means: sum mu(1-mu) E^2 minus twice the sum of cross products
    mu_a mu_b E_a E_b over element pairs (the pair sum is realized as
    ((sum a)^2 - sum a^2)/2 with a = mu E, which is the same quantity).
    """
    local_means = np.asarray(local_means, dtype=float)
    local_vars = np.asarray(local_vars, dtype=float)
    masses = np.asarray(masses, dtype=float)
    if local_means.shape != masses.shape or local_vars.shape != masses.shape:
        raise ValueError("one mean and one variance per element required")
    _check_masses(masses)
    weighted = masses * local_means
    total = float(np.sum(weighted))
    value = (
        float(np.sum(masses * local_vars))
        + float(np.sum(masses * (1.0 - masses) * local_means**2))
        - (total * total - float(np.sum(weighted * weighted)))
    )
    if _VAR_CLAMP <= value < 0.0:
        return 0.0
    return value


def _element_args(config: SolverConfig, partition: RandomSpacePartition, e: int):
    return (
        partition.boxes[e],
        config.distributions,
        config.model,
        config.truncation,
        config.dt,
        config.duration,
        config.warmstart,
        e,
        config.points_per_axis,
        config.audit_orthogonality,
    )


def run_me_fsc(config: SolverConfig) -> MomentSeries:
    """Partition, solve every element, and aggregate at each time step.

    The reduction is a pairwise sum over elements in index order, so the
    output is bit-identical for any worker count and any completion order.
    """
    partition = partition_random_domain(config.distributions, config.element_counts)
    masses = partition.masses
    _check_masses(masses)
    n_elements = partition.n_elements

    locals_: list[LocalSeries | None] = [None] * n_elements
    if config.workers > 1 and n_elements > 1:
        with ProcessPoolExecutor(max_workers=min(config.workers, n_elements)) as pool:
            futures = {
                pool.submit(run_element, *_element_args(config, partition, e)): e
                for e in range(n_elements)
            }
            for future in as_completed(futures):
                locals_[futures[future]] = future.result()
    else:
        for e in range(n_elements):
            locals_[e] = run_element(*_element_args(config, partition, e))

    mean_stack = np.stack([series.mean for series in locals_])
    var_stack = np.stack([series.variance for series in locals_])
    m = masses[:, None, None]
    weighted = m * mean_stack
    global_mean = np.sum(weighted, axis=0)
    spread = np.sum(m * (1.0 - m) * mean_stack**2, axis=0)
    cross = global_mean**2 - np.sum(weighted**2, axis=0)
    global_var = np.sum(m * var_stack, axis=0) + spread - cross
    global_var = np.where(
        (global_var < 0.0) & (global_var >= _VAR_CLAMP), 0.0, global_var
    )

    events = [ev for series in locals_ for ev in series.fallback_events]
    residuals = [
        series.max_orthogonality_residual
        for series in locals_
        if series.max_orthogonality_residual is not None
    ]
    return MomentSeries(
        times=locals_[0].times,
        mean=global_mean,
        variance=global_var,
        component_names=config.model.component_names,
        partition=partition,
        fallback_events=events,
        max_orthogonality_residual=max(residuals) if residuals else None,
        local_series=list(locals_) if config.keep_local else None,
    )
