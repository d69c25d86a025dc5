import math

import numpy as np
import pytest

from app.core.errors import InvalidParameterError
from app.utils.random_utils import derive_rng


def test_single_cell_mass(embeddings):
    assert embeddings.stable_embedding_mass_witness(1, 1.0, 2.0, K1=0.8) == pytest.approx(0.8)
    assert embeddings.stable_embedding_mass_witness(1, 2.0, 2.0, K1=0.8, C2=2.0) == pytest.approx(0.16)


@pytest.mark.parametrize("n", [2, 4, 16, 64])
def test_mass_grows_like_n_to_one_minus_p_over_q(embeddings, n):
    mass = embeddings.stable_embedding_mass_witness(n, 1.0, 2.0, K1=1.0)
    assert mass == pytest.approx(math.sqrt(n), rel=1e-9)


def test_equal_exponents_give_flat_masses(embeddings):
    masses = [embeddings.stable_embedding_mass_witness(n, 2.0, 2.0, K1=0.9) for n in (2, 8, 32)]
    np.testing.assert_allclose(masses, [0.81, 0.81, 0.81], rtol=1e-9)


def test_upper_cuts(embeddings):
    assert math.isinf(embeddings.stable_embedding_mass_witness(8, 1.0, 2.0, K1=1.0, C1=0.5))
    assert embeddings.stable_embedding_mass_witness(8, 1.0, 2.0, K1=1.0, C1=4.0) == pytest.approx(math.sqrt(8))


def test_dyadic_cells_partition_the_atoms(embeddings):
    cells = embeddings.dyadic_cells(8, 2)
    assert len(cells) == 4
    np.testing.assert_array_equal(np.concatenate(cells), np.arange(8))


def test_gaussian_embedding_is_normalized(embeddings):
    model = embeddings.build_embedding(8, 1.0, 2.0, seed=3)
    assert model.sampler == "gaussian"
    assert model.K1 <= 1.0 + 1e-12 <= model.K_max + 2e-12
    assert model.atoms == 8
    ones = np.ones(8)
    image = embeddings.spaces.norm_eval(model.operator.codomain, model.operator.matrix @ ones)
    assert image == pytest.approx(embeddings.spaces.norm_eval(model.operator.domain, ones))


def test_stable_samples_have_the_requested_shape(embeddings):
    samples, sampler, _ = embeddings.sample_stable(1.5, (16, 3), derive_rng(0, "test-stable"))
    assert samples.shape == (16, 3)
    assert np.all(np.isfinite(samples))
    assert sampler in {"chambers-mallows-stuck", "gaussian"}


def test_counterexample_slope(embeddings):
    report = embeddings.counterexample(p=1.0, q=2.0, sizes=(4, 8, 16, 32), seed=0)
    assert report.slope == pytest.approx(0.5, abs=1e-6)
    assert report.expected_slope == pytest.approx(0.5)
    assert report.strictly_increasing
    assert report.masses[0] == pytest.approx(report.K1 * 2.0)


def test_counterexample_without_growth(embeddings):
    report = embeddings.counterexample(p=2.0, q=2.0, sizes=(4, 8, 16), seed=0)
    assert report.slope == pytest.approx(0.0, abs=1e-6)
    np.testing.assert_allclose(report.masses, report.K1 ** 2, rtol=1e-9)


def test_counterexample_with_contradicting_cuts(embeddings):
    report = embeddings.counterexample(p=1.0, q=2.0, sizes=(4, 8), C1=1e-3, seed=0)
    assert all(math.isinf(m) for m in report.masses)
    assert math.isnan(report.slope)
    assert report.warnings


def test_parameter_validation(embeddings):
    with pytest.raises(InvalidParameterError):
        embeddings.stable_embedding_mass_witness(6, 1.0, 2.0, K1=1.0)
    with pytest.raises(InvalidParameterError):
        embeddings.stable_embedding_mass_witness(4, 2.0, 1.5, K1=1.0)
    with pytest.raises(InvalidParameterError):
        embeddings.stable_embedding_mass_witness(4, 1.0, 2.0, K1=1.0, C2=0.0)
