import numpy as np
import pytest

from bctsne import (
    CollinearityError,
    EmbeddingState,
    OptimizerConfig,
    Projector,
    ValidationError,
    build_design,
    input_affinities,
    kl_gradient,
    projected_step,
    run_tsne,
    silhouette,
)


class TestBuildDesign:
    def test_dummy_coding_with_intercept(self):
        d = build_design({"batch": ["A", "A", "B", "B"]})
        assert d.column_names == ("intercept", "batch[B]")
        assert np.array_equal(d.Z, np.array([[1, 0], [1, 0], [1, 1], [1, 1]], float))
        assert d.encoding == (("batch", ("A", "B"), "A"),)

    def test_duplicated_factor_collinear(self):
        labels = {"v1": ["A", "A", "B", "B"], "v2": ["x", "x", "y", "y"]}
        with pytest.raises(CollinearityError) as exc:
            build_design(labels)
        assert "v2[y]" in exc.value.columns

    def test_confounded_design_pruned_with_warning(self):
        # mouse determines sex and date exactly
        mouse = ["m1", "m1", "m2", "m2", "m3", "m3", "m4", "m4", "m5", "m5"]
        sex = ["F", "F", "F", "F", "M", "M", "M", "M", "M", "M"]
        date = ["jul02", "jul02", "jul02", "jul02", "jul25", "jul25",
                "aug18", "aug18", "aug18", "aug18"]
        labels = {"mouse": mouse, "sex": sex, "date": date}
        with pytest.warns(UserWarning, match="sex"):
            d = build_design(labels, on_collinear="prune")
        kept = [c for c in d.column_names if c != "intercept"]
        assert all(c.startswith("mouse[") for c in kept)
        assert np.linalg.matrix_rank(d.Z) == d.Z.shape[1]

    def test_single_level_without_intercept_rejected(self):
        with pytest.raises(ValidationError):
            build_design({"b": ["A", "A", "A"]}, intercept=False)

    def test_single_level_with_intercept_degenerate_ok(self):
        d = build_design({"b": ["A", "A", "A"]})
        assert d.column_names == ("intercept",)

    def test_binary_dummy_columns(self):
        rng = np.random.default_rng(0)
        d = build_design({"b": rng.integers(0, 3, 30).tolist()})
        dummies = d.Z[:, 1:]
        assert set(np.unique(dummies)) <= {0.0, 1.0}


class TestProjector:
    def _random_pair(self, rng, n=40, b=4, q=2):
        Z = np.column_stack(
            [np.ones(n)] + [rng.standard_normal(n) for _ in range(b - 1)]
        )
        Y = rng.standard_normal((n, q))
        return Z, Y

    def test_idempotence(self):
        rng = np.random.default_rng(1)
        Z, Y = self._random_pair(rng)
        P = Projector(Z)
        Yt = P.project(Y)
        assert np.abs(P.project(Yt) - Yt).max() < 1e-12

    def test_intercept_only_centers(self):
        rng = np.random.default_rng(2)
        Y = rng.standard_normal((20, 3))
        P = Projector(np.ones((20, 1)))
        assert np.allclose(P.project(Y), Y - Y.mean(axis=0), atol=1e-12)

    def test_matches_hat_matrix_oracle(self):
        rng = np.random.default_rng(3)
        Z, Y = self._random_pair(rng)
        P = Projector(Z)
        H = Z @ np.linalg.inv(Z.T @ Z) @ Z.T
        oracle = (np.eye(40) - H) @ Y
        Yt = P.project(Y)
        assert np.abs(Yt - oracle).max() < 1e-8
        assert np.abs(Z.T @ Yt).max() < 1e-9

    @pytest.mark.parametrize("seed", range(5))
    def test_linearity_and_contraction(self, seed):
        rng = np.random.default_rng(seed)
        Z, Y1 = self._random_pair(rng)
        Y2 = rng.standard_normal(Y1.shape)
        P = Projector(Z)
        lhs = P.project(2.5 * Y1 - 1.3 * Y2)
        rhs = 2.5 * P.project(Y1) - 1.3 * P.project(Y2)
        assert np.abs(lhs - rhs).max() < 1e-10
        assert np.linalg.norm(P.project(Y1)) <= np.linalg.norm(Y1) + 1e-12

    def test_empty_design_is_identity(self):
        Y = np.random.default_rng(4).standard_normal((10, 2))
        P = Projector(np.empty((10, 0)))
        assert np.array_equal(P.project(Y), Y)

    def test_row_mismatch(self):
        with pytest.raises(ValidationError):
            Projector(np.ones((5, 1))).project(np.ones((6, 2)))


class TestProjectedStep:
    def test_fixed_point_in_constraint_set(self):
        rng = np.random.default_rng(5)
        Z = np.column_stack([np.ones(12), rng.integers(0, 2, 12).astype(float)])
        P = Projector(Z)
        Y = P.project(rng.standard_normal((12, 2)))
        state = EmbeddingState(Y=Y, Y_prev=Y.copy(), gains=np.ones_like(Y), iter=0)
        cfg = OptimizerConfig(momentum_initial=0.0, adaptive_gains=False)
        new = projected_step(state, np.zeros_like(Y), cfg, P)
        assert np.abs(new.Y - Y).max() < 1e-12

    def test_orthogonality_every_iteration(self):
        rng = np.random.default_rng(6)
        X = rng.standard_normal((40, 6))
        design = build_design({"b": (np.arange(40) % 2).tolist()})
        P = Projector(design)
        trace = []
        run_tsne(
            X,
            OptimizerConfig(n_iter=120, perplexity=10, seed=0),
            projector=P,
            on_trace=trace.append,
            trace_every=1,
        )
        assert len(trace) == 120
        assert all(r.orthogonality_maxabs < 1e-8 for r in trace)

    def test_confounded_blobs_batch_removed(self):
        # blob label coincides with batch label: projection must destroy the
        # batch separation an unprojected run shows
        rng = np.random.default_rng(7)
        X = np.vstack(
            [rng.standard_normal((40, 5)), rng.standard_normal((40, 5)) + 8]
        )
        batch = ["a"] * 40 + ["b"] * 40
        cfg = OptimizerConfig(n_iter=600, perplexity=20, seed=2)
        plain = run_tsne(X, cfg)
        raw_plain, _ = silhouette(plain.Y, batch)
        design = build_design({"batch": batch})
        corrected = run_tsne(X, cfg, projector=Projector(design))
        raw_corr, _ = silhouette(corrected.Y, batch)
        assert raw_plain > 0.5
        assert raw_corr < 0.1

    def test_null_projector_matches_unprojected_run(self):
        rng = np.random.default_rng(8)
        X = rng.standard_normal((30, 4))
        cfg = OptimizerConfig(n_iter=80, perplexity=8, seed=3)
        s1 = run_tsne(X, cfg)
        s2 = run_tsne(X, cfg, projector=Projector(np.empty((30, 0))))
        assert np.array_equal(s1.Y, s2.Y)
