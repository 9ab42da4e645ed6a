"""Error rates, disagreement rates, and exact conditioning.

Everything here is a closed-form computation over mass tables or an integer
count over samples; nothing is randomized. Pair lists are plain sequences of
(Hypothesis, Hypothesis) tuples sharing one domain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dataset, DiscreteDistribution, Hypothesis, HypothesisClass, enumerate_class

__all__ = [
    "ConditioningResult",
    "empirical_error",
    "true_error",
    "empirical_disagreement",
    "true_disagreement",
    "fraction_predicting_positive",
    "mass_predicting_positive",
    "agreement_points",
    "condition_on_agreement",
    "condition_on_disagreement",
    "determinize",
    "split_class",
]


def _require_samples(data: Dataset) -> None:
    if len(data) == 0:
        raise ValueError("empty sample set")


def empirical_error(h: Hypothesis, data: Dataset) -> float:
    """Fraction of samples where h disagrees with the observed label."""
    _require_samples(data)
    wrong = int(np.count_nonzero(h.labels[data.points] != data.labels))
    return wrong / len(data)


def true_error(h: Hypothesis, dist: DiscreteDistribution) -> float:
    """Exact mass of the (point, label) cells that h mislabels."""
    wrong_column = np.where(h.labels == 1, 0, 1)
    return float(dist.mass[np.arange(dist.domain_size), wrong_column].sum())


def empirical_disagreement(h1: Hypothesis, h2: Hypothesis, data: Dataset) -> float:
    """Fraction of sample points where the two hypotheses differ."""
    _require_samples(data)
    differ = h1.labels != h2.labels
    return int(np.count_nonzero(differ[data.points])) / len(data)


def true_disagreement(h1: Hypothesis, h2: Hypothesis, dist: DiscreteDistribution) -> float:
    """Exact point mass of the region where the two hypotheses differ."""
    return float(dist.point_marginal()[h1.labels != h2.labels].sum())


def fraction_predicting_positive(h: Hypothesis, data: Dataset) -> float:
    """Fraction of sample points that h labels +1."""
    _require_samples(data)
    return int(np.count_nonzero(h.labels[data.points] == 1)) / len(data)


def mass_predicting_positive(h: Hypothesis, dist: DiscreteDistribution) -> float:
    """Point mass of the region that h labels +1."""
    return float(dist.point_marginal()[h.labels == 1].sum())


def agreement_points(pairs, domain_size: int) -> np.ndarray:
    """Boolean mask of points where every pair agrees (all true if no pairs)."""
    mask = np.ones(domain_size, dtype=bool)
    for h1, h2 in pairs:
        mask &= h1.labels == h2.labels
    return mask


@dataclass(frozen=True)
class ConditioningResult:
    """A renormalized conditional distribution plus the region's mass."""

    conditional: DiscreteDistribution
    region_mass: float


def _condition(dist: DiscreteDistribution, region: np.ndarray) -> ConditioningResult:
    mass = float(dist.mass[region].sum())
    if mass <= 0.0:
        raise ValueError("empty conditioning region")
    scaled = np.where(region[:, None], dist.mass / mass, 0.0)
    return ConditioningResult(DiscreteDistribution(scaled), mass)


def condition_on_agreement(dist: DiscreteDistribution, pairs) -> ConditioningResult:
    """Restrict to the points where every pair agrees and renormalize.

    An empty pair list conditions on everything: the original distribution
    comes back with region mass exactly 1.
    """
    pairs = list(pairs)
    if not pairs:
        return ConditioningResult(dist, 1.0)
    return _condition(dist, agreement_points(pairs, dist.domain_size))


def condition_on_disagreement(dist: DiscreteDistribution, pairs) -> ConditioningResult:
    """Restrict to the points where some pair disagrees and renormalize."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError("empty conditioning region: no pairs disagree anywhere")
    return _condition(dist, ~agreement_points(pairs, dist.domain_size))


def determinize(dist: DiscreteDistribution, klass: HypothesisClass):
    """Split every point into one twin per label.

    Point i becomes points 2i (carrying the mass of label -1) and 2i+1 (the
    mass of label +1), so the output distribution has deterministic labels while
    every hypothesis keeps its exact error. Returns the transformed
    distribution, the transformed class, and the concept labeling the twins.
    """
    if klass.domain_size != dist.domain_size:
        raise ValueError("class and distribution must share a domain")
    u = dist.domain_size
    mass = np.zeros((2 * u, 2))
    mass[0::2, 0] = dist.mass[:, 0]
    mass[1::2, 1] = dist.mass[:, 1]
    doubled = np.repeat(enumerate_class(klass).matrix, 2, axis=1)
    concept = Hypothesis(np.tile(np.array([-1, 1], dtype=np.int8), u))
    return (
        DiscreteDistribution(mass),
        HypothesisClass(doubled, declared_vc=klass.declared_vc),
        concept,
    )


def split_class(klass: HypothesisClass, base: Hypothesis, concept: Hypothesis):
    """Difference indicators of each member against a base hypothesis.

    For each h the first output is +1 exactly where h moves away from the
    base onto the concept's label, the second where it moves away onto the
    wrong label. Returned as two lists aligned with the class index, because
    distinct members can map to identical indicators.
    """
    mat = enumerate_class(klass).matrix
    moves = mat != base.labels[None, :]
    onto_concept = mat == concept.labels[None, :]
    eq_rows = np.where(moves & onto_concept, 1, -1).astype(np.int8)
    neq_rows = np.where(moves & ~onto_concept, 1, -1).astype(np.int8)
    return (
        [Hypothesis(row) for row in eq_rows],
        [Hypothesis(row) for row in neq_rows],
    )
