import numpy as np
import pytest

from bctsne import (
    SimSpec,
    ValidationError,
    kbet_acceptance,
    lisi,
    normalize_log1p_cpm,
    pc_regression,
    pca_reduce,
    run_tsne,
    simulate,
    OptimizerConfig,
)


class TestSimulate:
    def test_shapes_and_integrality(self):
        spec = SimSpec(n_cells=60, n_genes=150, seed=0)
        out = simulate(spec)
        assert out.counts.shape == (60, 150)
        assert np.all(out.counts >= 0)
        assert np.array_equal(out.counts, np.round(out.counts))
        assert len(out.batch_labels) == 60
        assert len(out.group_labels) == 60

    def test_balanced_label_marginals(self):
        out = simulate(SimSpec(n_cells=80, n_genes=50, n_batches=4, n_groups=4))
        _, batch_counts = np.unique(out.batch_labels, return_counts=True)
        _, group_counts = np.unique(out.group_labels, return_counts=True)
        assert np.all(batch_counts == 20)
        assert np.all(group_counts == 20)

    def test_seed_determinism(self):
        spec = SimSpec(n_cells=40, n_genes=100, seed=5)
        a, b = simulate(spec), simulate(spec)
        assert np.array_equal(a.counts, b.counts)
        assert np.array_equal(a.batch_labels, b.batch_labels)

    def test_no_effects_cells_exchangeable(self):
        spec = SimSpec(
            n_cells=200, n_genes=300, batch_effect_sd=0.0, group_effect_sd=0.0, seed=1
        )
        out = simulate(spec)
        X = normalize_log1p_cpm(out.counts)
        scores = pca_reduce(X, 10, seed=1).scores
        acc = kbet_acceptance(scores, out.batch_labels.tolist(), knn=20, seed=1)
        assert acc >= 0.8  # near the null acceptance level

    def test_group_only_effect_separates_groups(self):
        spec = SimSpec(
            n_cells=200,
            n_genes=400,
            batch_effect_sd=0.0,
            group_effect_sd=1.5,
            de_prob=0.2,
            seed=2,
        )
        out = simulate(spec)
        X = normalize_log1p_cpm(out.counts)
        scores = pca_reduce(X, 10, seed=2).scores
        state = run_tsne(scores, OptimizerConfig(n_iter=400, seed=2))
        batch_lisi, _ = lisi(state.Y, out.batch_labels.tolist())
        assert batch_lisi > 0.9 * spec.n_batches

    def test_batch_effect_monotone_in_pc_regression(self):
        r2 = []
        for sd in (0.0, 0.5, 1.0):
            spec = SimSpec(
                n_cells=150, n_genes=300, batch_effect_sd=sd,
                group_effect_sd=0.0, seed=3,
            )
            out = simulate(spec)
            scores = pca_reduce(normalize_log1p_cpm(out.counts), 10, seed=3).scores
            r2.append(pc_regression(scores, out.batch_labels.tolist()))
        assert r2[0] <= r2[1] + 1e-9
        assert r2[1] <= r2[2] + 1e-9

    def test_invalid_spec(self):
        with pytest.raises(ValidationError):
            simulate(SimSpec(n_cells=0))
        with pytest.raises(ValidationError):
            simulate(SimSpec(de_prob=1.5))


class TestNormalize:
    def test_all_zero_gene_stays_zero(self):
        counts = np.array([[0.0, 3.0], [0.0, 5.0]])
        X = normalize_log1p_cpm(counts)
        assert np.all(X[:, 0] == 0)

    def test_single_cell_arithmetic(self):
        X = normalize_log1p_cpm(np.array([[1.0, 1.0]]), scale=1e4)
        assert np.allclose(X, np.log1p(5000.0))

    def test_row_sum_identity(self):
        rng = np.random.default_rng(4)
        counts = rng.poisson(5.0, size=(20, 50)).astype(float)
        counts[:, 0] += 1  # no empty cells
        X = normalize_log1p_cpm(counts, scale=1e4)
        assert np.allclose(np.expm1(X).sum(axis=1), 1e4)

    def test_negative_counts_rejected(self):
        with pytest.raises(ValidationError):
            normalize_log1p_cpm(np.array([[-1.0, 2.0]]))
