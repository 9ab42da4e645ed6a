"""Shared builders for small hand-checkable instances."""

import numpy as np
import pytest

from paclab import DiscreteDistribution, Hypothesis, HypothesisClass


def hyp(*labels) -> Hypothesis:
    return Hypothesis(np.array(labels, dtype=np.int8))


@pytest.fixture
def complement_pair_class():
    """Two hypotheses disagreeing on both points of a 2-point domain."""
    return HypothesisClass(np.array([[1, -1], [-1, 1]], dtype=np.int8))


@pytest.fixture
def uniform_positive_4():
    """Uniform marginal over 4 points, every label +1."""
    return DiscreteDistribution.uniform_deterministic(np.ones(4, dtype=np.int8))
