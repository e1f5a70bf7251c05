"""Orthogonal bases on an element grid: Gram-Schmidt, warm-start polynomials,
projection and evaluation.

A basis lives entirely as node values plus squared norms; there is no symbolic
polynomial behind it. Orthogonality is with respect to the grid's weighted
inner product, i.e. the element's conditional measure.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .measures import QuadratureGrid

# Squared-norm ratio under which a candidate counts as degenerate (1e-12 in
# amplitude relative to its pre-orthogonalization size).
DROP_RATIO = 1e-24


@dataclass
class BasisSet:
    """Orthogonal basis vectors sampled at the element's quadrature nodes.

    ``values`` is (count, n_nodes) with row 0 identically one. ``kept_flags``
    has one entry per original candidate and records which survived the
    degeneracy drop. ``transform``, when requested, maps candidate rows to
    basis rows (values = transform @ candidates); it exists so tests can
    re-evaluate the same basis on denser grids.
    """

    values: np.ndarray
    squared_norms: np.ndarray
    kept_flags: np.ndarray
    transform: np.ndarray | None = None
    _projector: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def count(self) -> int:
        return self.values.shape[0]

    def projector(self, grid: QuadratureGrid) -> np.ndarray:
        """(n_nodes, count) matrix P such that values @ P = modes of a projection.

        Cached; a BasisSet is only ever used with the grid it was built on.
        """
        if self._projector is None:
            self._projector = (self.values * grid.weights).T / self.squared_norms
        return self._projector


def gram_schmidt(
    candidate_values,
    grid: QuadratureGrid,
    *,
    drop_ratio: float = DROP_RATIO,
    want_transform: bool = False,
    check: bool = True,
) -> BasisSet:
    """Orthogonalize candidate node-value rows against the grid measure.

    Classical Gram-Schmidt with one re-orthogonalization pass. The first
    candidate must be the constant one; it passes through untouched, so row 0
    of the result is exactly one at every node. A candidate whose squared
    norm after orthogonalization drops below ``drop_ratio`` times its
    pre-orthogonalization squared norm is dropped and flagged.

    ``check=False`` skips validating the constant first row; callers that
    fill the candidate buffer themselves and are called once per step can
    afford to promise it instead.
    """
    cands = np.asarray(candidate_values, dtype=float)
    if cands.ndim != 2:
        cands = np.atleast_2d(cands)
    n_cands, n_nodes = cands.shape
    if n_nodes != grid.n_nodes:
        raise ValueError("candidate values do not match the node count")
    if n_cands < 1:
        raise ValueError("need at least one candidate")
    if check and not np.all(cands[0] == 1.0):
        raise ValueError("first candidate must be identically 1")

    w = grid.weights
    values = np.empty_like(cands)
    norms = np.empty(n_cands)
    kept = np.zeros(n_cands, dtype=bool)
    tmat = np.zeros((n_cands, n_cands)) if want_transform else None
    scratch = np.empty(n_nodes)  # holds w*v / v*v products, reused per candidate
    k = 0
    for i in range(n_cands):
        v = cands[i].copy()
        np.multiply(v, v, out=scratch)
        pre = np.dot(w, scratch)
        trow = None
        if want_transform:
            trow = np.zeros(n_cands)
            trow[i] = 1.0
        if k:
            seen = values[:k]
            for _ in range(2):
                np.multiply(w, v, out=scratch)
                coef = seen @ scratch
                coef /= norms[:k]
                v -= coef @ seen
                if want_transform:
                    trow -= coef @ tmat[:k]
            np.multiply(v, v, out=scratch)
            post = np.dot(w, scratch)
        else:
            # Nothing to orthogonalize against, so the norm cannot have moved.
            post = pre
        if post < drop_ratio * pre:
            continue
        values[k] = v
        norms[k] = post
        kept[i] = True
        if want_transform:
            tmat[k] = trow
        k += 1
    return BasisSet(
        values=values[:k].copy(),
        squared_norms=norms[:k].copy(),
        kept_flags=kept,
        transform=tmat[:k].copy() if want_transform else None,
    )


def _graded_lex_exponents(dimension: int, degree: int) -> list[tuple[int, ...]]:
    exps = [
        e
        for e in itertools.product(range(degree + 1), repeat=dimension)
        if sum(e) <= degree
    ]
    exps.sort(key=lambda e: (sum(e), tuple(-x for x in e)))
    return exps


def warmstart_basis(grid: QuadratureGrid, dimension: int, degree: int) -> BasisSet:
    """Element-local polynomial chaos basis of total degree ``degree``.

    Monomials in graded-lexicographic order (constant first) are formed in
    per-axis coordinates rescaled to [-1, 1] -- the same span, but conditioned
    well enough for high degrees -- and orthogonalized against the element
    measure. Works for any of the supported laws, which is what makes it a
    usable warm start when deterministic initial conditions leave the germ
    set degenerate.
    """
    if degree < 0:
        raise ValueError("degree must be >= 0")
    if dimension != grid.dimension:
        raise ValueError("dimension does not match the grid")
    lo = grid.nodes.min(axis=0)
    hi = grid.nodes.max(axis=0)
    unit = 2.0 * (grid.nodes - lo) / (hi - lo) - 1.0
    exponent_rows = _graded_lex_exponents(dimension, degree)
    cands = np.empty((len(exponent_rows), grid.n_nodes))
    for row, exps in enumerate(exponent_rows):
        v = np.ones(grid.n_nodes)
        for ax, p in enumerate(exps):
            if p:
                v = v * unit[:, ax] ** p
        cands[row] = v
    return gram_schmidt(cands, grid)


def project(f_values, basis: BasisSet, grid: QuadratureGrid) -> np.ndarray:
    """Galerkin coefficients of node values on the basis.

    mode_j = <Psi_j, f> / <Psi_j, Psi_j>. Accepts a single (n_nodes,) array
    or a stack (m, n_nodes); returns matching (count,) or (m, count).
    """
    f_values = np.asarray(f_values, dtype=float)
    if f_values.shape[-1] != grid.n_nodes:
        raise ValueError("value array does not match the node count")
    return f_values @ basis.projector(grid)


def evaluate(modes, basis: BasisSet) -> np.ndarray:
    """Reconstruct node values from modes: sum_j mode_j * Psi_j(node)."""
    modes = np.asarray(modes, dtype=float)
    if modes.shape[-1] != basis.count:
        raise ValueError("mode count does not match the basis")
    return modes @ basis.values
