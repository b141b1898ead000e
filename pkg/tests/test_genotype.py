"""Three-class classifier: responsibility bookkeeping, normalization and
classification accuracy on synthetic two-channel data."""

import numpy as np
import pytest

from dpmseq.core import NIWParams
from dpmseq.genotype import (
    anchored_niw_priors, concordance, gen_three_class, quantile_anchors,
    quantile_normalize_two_channel, three_class_fit,
)

CENTERS = np.array([[0.0, 0.0], [8.0, 0.0], [4.0, 7.0]])


def test_concordance_basics():
    assert concordance([0, 1, 2], [0, 1, 2]) == 1.0
    assert concordance([0, 0, 0], [1, 1, 1]) == 0.0
    assert abs(concordance([0, 1, 2, 0], [0, 1, 0, 0]) - 0.75) < 1e-12
    with pytest.raises(ValueError):
        concordance([0, 1], [0, 1, 2])


def test_anchored_priors():
    priors = anchored_niw_priors(CENTERS)
    assert len(priors) == 3
    for p, c in zip(priors, CENTERS):
        assert isinstance(p, NIWParams)
        np.testing.assert_array_equal(p.mean, c)
    with pytest.raises(ValueError):
        anchored_niw_priors(CENTERS[:2])


def test_quantile_anchors_shape_and_ordering():
    ds = gen_three_class(500, 0)
    anchors = quantile_anchors(ds.values)
    assert anchors.shape == (3, 2)
    assert anchors[0, 0] < anchors[1, 0] < anchors[2, 0]


def test_generator_reproducible_and_balanced():
    a = gen_three_class(1000, 5)
    b = gen_three_class(1000, 5)
    assert np.array_equal(a.values, b.values)
    freq = np.bincount(a.labels) / a.n
    np.testing.assert_allclose(freq, 1 / 3, atol=0.06)


def test_responsibilities_are_distributions():
    ds = gen_three_class(200, 1)
    fit = three_class_fit(ds.values, anchored_niw_priors(CENTERS), 1.0, 8)
    np.testing.assert_allclose(fit.responsibilities.sum(axis=1), 1.0,
                               atol=1e-12)
    assert np.all(fit.responsibilities >= 0)
    assert np.array_equal(fit.labels, np.argmax(fit.responsibilities, axis=1))


@pytest.mark.parametrize("engine", ["vsugs", "sugs"])
def test_classification_accuracy(engine):
    ds = gen_three_class(600, 2)
    fit = three_class_fit(ds.values, anchored_niw_priors(CENTERS), 1.0, 8,
                          engine=engine)
    assert concordance(fit.labels, ds.labels) >= 0.98


def test_soft_engine_spreads_counts_across_classes():
    ds = gen_three_class(300, 3)
    fit = three_class_fit(ds.values, anchored_niw_priors(CENTERS), 1.0, 8)
    totals = [st.soft_counts.sum() for st in fit.class_states]
    assert abs(sum(totals) - ds.n) < 1e-6
    assert all(t > 0 for t in totals)


def test_identical_priors_warn():
    ds = gen_three_class(50, 4)
    same = anchored_niw_priors(np.zeros((3, 2)))
    with pytest.warns(UserWarning):
        three_class_fit(ds.values, same, 1.0, 6)


def test_invalid_engine_rejected():
    ds = gen_three_class(20, 0)
    with pytest.raises(ValueError):
        three_class_fit(ds.values, anchored_niw_priors(CENTERS), 1.0, 6,
                        engine="gibbs")


class TestQuantileNormalize:
    def test_columns_share_sorted_values(self):
        rng = np.random.default_rng(0)
        v = rng.uniform(1.0, 100.0, size=(50, 2))
        out = quantile_normalize_two_channel(v)
        np.testing.assert_allclose(np.sort(out[:, 0]), np.sort(out[:, 1]),
                                   atol=1e-12)

    def test_ranks_preserved_within_columns(self):
        rng = np.random.default_rng(1)
        v = rng.uniform(1.0, 100.0, size=(40, 2))
        out = quantile_normalize_two_channel(v)
        for c in range(2):
            assert np.array_equal(np.argsort(v[:, c]),
                                  np.argsort(out[:, c]))

    def test_log_transform_requires_positive(self):
        with pytest.raises(ValueError):
            quantile_normalize_two_channel(np.array([[1.0, -2.0],
                                                     [3.0, 4.0]]))

    def test_shape_enforced(self):
        with pytest.raises(ValueError):
            quantile_normalize_two_channel(np.ones((5, 3)))
