"""Scoring kernel: degree indices, proximity, eigenvectors, fixed point.

Two routes to the same pair of score vectors over entities and categories:

* the spectral route builds the proximity matrix ``N`` (scores rescaled by
  row totals and adjusted column ubiquities), projects it into the two
  similarity matrices ``N N^T`` and ``N^T N``, and takes their principal
  eigenvectors;
* the iterative route runs the nonlinear fitness-complexity map to a fixed
  point, renormalizing both vectors to mean one at every step.

Everything below is a pure, deterministic function of its inputs. Missing
cells are zeros in the score matrix and therefore contribute nothing to
any of the sums.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePanelError, NonConvergenceError
from .panel import ScorePanel

DEFAULT_TOL = 1e-10
DEFAULT_MAX_STEPS = 1000


@dataclass(frozen=True)
class DegreeIndex:
    """Per-entity total score, applicable-cell count, and mean composite.

    The total is the weighted degree of the entity node in the bipartite
    score network; the composite divides by the number of present cells,
    matching mean-based composite indices that skip non-applicable
    categories.
    """

    entities: tuple[str, ...]
    totals: np.ndarray
    applicable_counts: np.ndarray
    composite_means: np.ndarray


@dataclass(frozen=True)
class AdjustedUbiquity:
    """Per-category column sums of the row-normalized score matrix."""

    categories: tuple[str, ...]
    values: np.ndarray


@dataclass(frozen=True)
class ProximityMatrix:
    """Score matrix rescaled by entity totals and adjusted ubiquities.

    Invariant to a global rescaling of all scores; zero exactly where the
    score is zero or missing.
    """

    entities: tuple[str, ...]
    categories: tuple[str, ...]
    values: np.ndarray


@dataclass(frozen=True)
class SimilarityPair:
    """The two symmetric projections of the proximity matrix.

    ``entity_similarity`` compares entities through shared category
    performance; ``category_similarity`` compares categories through the
    entities achieving them. Both are explicitly symmetrized to cancel
    floating-point drift, and they share their nonzero spectrum.
    """

    entities: tuple[str, ...]
    categories: tuple[str, ...]
    entity_similarity: np.ndarray
    category_similarity: np.ndarray


@dataclass(frozen=True)
class ComplexityScores:
    """Entity and category score vectors, both normalized to mean one.

    ``method`` records how they were obtained ("spectral" or "iterative");
    the eigenvalue fields are populated on the spectral route only.
    """

    year: str
    entities: tuple[str, ...]
    categories: tuple[str, ...]
    entity_scores: np.ndarray
    category_scores: np.ndarray
    method: str
    normalization: str = "mean-one"
    entity_eigenvalue: float | None = None
    category_eigenvalue: float | None = None


@dataclass(frozen=True)
class IterationStep:
    """One step of the fixed-point iteration, before and after rescaling."""

    index: int
    entity_raw: np.ndarray
    category_raw: np.ndarray
    entity_scores: np.ndarray
    category_scores: np.ndarray
    residual: float


@dataclass(frozen=True)
class IterationTrace:
    """Full record of a fixed-point run."""

    iterates: tuple[IterationStep, ...]
    converged: bool
    steps: int
    final_residual: float


def degree_index(panel: ScorePanel) -> DegreeIndex:
    """Row totals and per-row mean composites over present cells.

    Raises DegeneratePanelError naming every entity whose total is zero,
    since such rows make all downstream rescalings undefined.
    """
    totals = panel.scores.sum(axis=1)
    counts = panel.present_mask().sum(axis=1)
    zero = np.flatnonzero(totals == 0)
    if zero.size:
        names = tuple(panel.entities[i] for i in zero)
        raise DegeneratePanelError(
            "zero total score for entity: " + ", ".join(names),
            entities=names)
    return DegreeIndex(panel.entities, totals, counts, totals / counts)


def adjusted_ubiquity(panel: ScorePanel, deg: DegreeIndex) -> AdjustedUbiquity:
    """Column sums of scores after dividing each row by its total.

    Raises DegeneratePanelError naming every category whose adjusted sum is
    zero (an all-zero column).
    """
    values = (panel.scores / deg.totals[:, None]).sum(axis=0)
    zero = np.flatnonzero(values == 0)
    if zero.size:
        names = tuple(panel.categories[j] for j in zero)
        raise DegeneratePanelError(
            "zero adjusted ubiquity for category: " + ", ".join(names),
            categories=names)
    return AdjustedUbiquity(panel.categories, values)


def proximity(panel: ScorePanel, deg: DegreeIndex,
              ubiq: AdjustedUbiquity) -> ProximityMatrix:
    """Entrywise scores divided by (row total x adjusted ubiquity)."""
    values = panel.scores / (deg.totals[:, None] * ubiq.values[None, :])
    return ProximityMatrix(panel.entities, panel.categories, values)


def similarity(prox: ProximityMatrix) -> SimilarityPair:
    """Project the proximity matrix onto entity and category similarity.

    Both products are symmetrized as (M + M^T) / 2 so the eigensolver's
    symmetric-input contract holds exactly under floating point.
    """
    n = prox.values
    u = n @ n.T
    v = n.T @ n
    return SimilarityPair(prox.entities, prox.categories,
                          (u + u.T) / 2.0, (v + v.T) / 2.0)


def _power_iterate(matrix: np.ndarray, vec: np.ndarray, tol: float,
                   max_steps: int) -> tuple[float, np.ndarray]:
    residual = np.inf
    eigenvalue = 0.0
    for _ in range(max_steps):
        image = matrix @ vec
        eigenvalue = float(vec @ image) / float(vec @ vec)
        if eigenvalue != 0.0:
            residual = float(np.max(np.abs(image - eigenvalue * vec))
                             / abs(eigenvalue))
            if residual <= tol:
                if vec.sum() < 0:
                    vec = -vec
                return eigenvalue, vec
        norm = float(np.linalg.norm(image))
        if norm == 0.0:
            raise ValueError("power iteration hit the null space")
        vec = image / norm
    raise NonConvergenceError(
        f"power iteration did not reach tol={tol} within {max_steps} steps "
        f"(last residual {residual:.3e})",
        steps=max_steps, residual=residual, eigenvalue=eigenvalue, vector=vec)


def principal_eigenvector(matrix: np.ndarray, tol: float = DEFAULT_TOL,
                          max_steps: int = DEFAULT_MAX_STEPS) -> tuple[float, np.ndarray]:
    """Dominant eigenpair of a symmetric non-negative matrix.

    Power iteration from the uniform positive start vector. Returns the
    Rayleigh-quotient eigenvalue and a unit-norm eigenvector oriented so
    its entry sum is positive; convergence means
    ``max|M v - lambda v| / lambda <= tol``. For a degenerate spectrum the
    limit from the uniform start is returned, which makes ties
    deterministic.
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError("matrix must be square")
    if (matrix == 0).all():
        raise ValueError("matrix is all zero")
    size = matrix.shape[0]
    return _power_iterate(matrix, np.full(size, 1.0 / np.sqrt(size)),
                          tol, max_steps)


def eigenpairs(matrix: np.ndarray, count: int = 2, tol: float = DEFAULT_TOL,
               max_steps: int = DEFAULT_MAX_STEPS) -> list[tuple[float, np.ndarray]]:
    """Leading eigenpairs of a positive semidefinite similarity matrix.

    Repeated power iteration with Hotelling deflation. The first pair is
    exactly what ``principal_eigenvector`` returns; deflated stages start
    from a fixed ramp vector so results stay deterministic. Exposed for
    exploratory use of the sub-dominant structure; nothing downstream
    consumes more than the principal pair.
    """
    matrix = np.asarray(matrix, dtype=float)
    count = min(count, matrix.shape[0])
    pairs = [principal_eigenvector(matrix, tol, max_steps)]
    work = np.array(matrix)
    for _ in range(count - 1):
        lam, vec = pairs[-1]
        work = work - lam * np.outer(vec, vec)
        start = 1.0 + np.arange(work.shape[0]) / work.shape[0]
        pairs.append(_power_iterate(work, start / np.linalg.norm(start),
                                    tol, max_steps))
    return pairs


def genepy_scores(panel: ScorePanel, tol: float = DEFAULT_TOL,
                  max_steps: int = DEFAULT_MAX_STEPS) -> ComplexityScores:
    """Spectral scores: principal eigenvectors of the similarity pair.

    Entity scores come from entity similarity, category scores from
    category similarity; both are rescaled to mean one. The two dominant
    eigenvalues agree up to solver tolerance because the projections share
    their nonzero spectrum.
    """
    deg = degree_index(panel)
    ubiq = adjusted_ubiquity(panel, deg)
    pair = similarity(proximity(panel, deg, ubiq))
    lam_u, vec_u = principal_eigenvector(pair.entity_similarity, tol, max_steps)
    lam_v, vec_v = principal_eigenvector(pair.category_similarity, tol, max_steps)
    return ComplexityScores(
        year=panel.year,
        entities=panel.entities,
        categories=panel.categories,
        entity_scores=vec_u / vec_u.mean(),
        category_scores=vec_v / vec_v.mean(),
        method="spectral",
        entity_eigenvalue=lam_u,
        category_eigenvalue=lam_v)


def _fitness_update(scores: np.ndarray, entity_scores: np.ndarray,
                    category_scores: np.ndarray) -> tuple[np.ndarray, np.ndarray,
                                                          np.ndarray, np.ndarray]:
    """One raw update of the nonlinear map plus both mean-one rescalings.

    Entity update: score-weighted sum of current category scores. Category
    update: reciprocal of the sum of scores divided by current entity
    scores, so categories achieved only by low-scoring entities come out
    on top. Both previous vectors feed the update (Jacobi style).
    """
    entity_raw = scores @ category_scores
    category_raw = 1.0 / (scores / entity_scores[:, None]).sum(axis=0)
    entity_new = entity_raw / (entity_raw.sum() / entity_raw.size)
    category_new = category_raw / (category_raw.sum() / category_raw.size)
    return entity_raw, category_raw, entity_new, category_new


def fitness_step(panel: ScorePanel,
                 current: tuple[np.ndarray, np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Apply one step of the nonlinear map to (entity, category) scores."""
    entity_scores, category_scores = current
    entity_scores = np.asarray(entity_scores, dtype=float)
    category_scores = np.asarray(category_scores, dtype=float)
    if (entity_scores <= 0).any():
        raise ValueError(
            "singular update: entity scores must be strictly positive")
    _, _, entity_new, category_new = _fitness_update(
        panel.scores, entity_scores, category_scores)
    return entity_new, category_new


def run_fitness(panel: ScorePanel, tol: float = DEFAULT_TOL,
                max_steps: int = DEFAULT_MAX_STEPS) -> tuple[ComplexityScores, IterationTrace]:
    """Iterate the nonlinear map from uniform start vectors to a fixed point.

    Stops when the entrywise relative change of both vectors drops to
    ``tol`` (L-infinity). Non-convergence is not an exception: the last
    iterate is returned with ``converged=False`` in the trace so callers
    can decide what to do with it.
    """
    deg = degree_index(panel)
    adjusted_ubiquity(panel, deg)  # reject degenerate columns up front

    entity_scores = np.ones(panel.n_entities)
    category_scores = np.ones(panel.n_categories)
    steps: list[IterationStep] = []
    converged = False
    residual = np.inf
    for index in range(1, max_steps + 1):
        entity_raw, category_raw, entity_new, category_new = _fitness_update(
            panel.scores, entity_scores, category_scores)
        residual = max(
            float(np.max(np.abs(entity_new - entity_scores) / entity_scores)),
            float(np.max(np.abs(category_new - category_scores) / category_scores)))
        steps.append(IterationStep(index, entity_raw, category_raw,
                                   entity_new, category_new, residual))
        entity_scores, category_scores = entity_new, category_new
        if residual <= tol:
            converged = True
            break

    scores = ComplexityScores(
        year=panel.year,
        entities=panel.entities,
        categories=panel.categories,
        entity_scores=entity_scores,
        category_scores=category_scores,
        method="iterative")
    trace = IterationTrace(tuple(steps), converged, len(steps), residual)
    return scores, trace
