import numpy as np
import pytest

from bctsne import (
    DomainError,
    ValidationError,
    build_design,
    pca_reduce,
    residualized_reduce,
)


def principal_angles(A, B):
    Qa, _ = np.linalg.qr(A)
    Qb, _ = np.linalg.qr(B)
    s = np.linalg.svd(Qa.T @ Qb, compute_uv=False)
    return np.arccos(np.clip(s, -1, 1))


class TestPcaReduce:
    def test_collinear_data_one_direction(self):
        t = np.linspace(-1, 1, 20)
        X = np.column_stack([t, 2 * t])
        red = pca_reduce(X, 2)
        assert red.explained_variance[0] == pytest.approx(1.0)
        assert red.explained_variance[1] == pytest.approx(0.0, abs=1e-12)

    def test_identity_input_equal_variance(self):
        red = pca_reduce(np.eye(5), 2)
        assert np.allclose(red.explained_variance, [0.25, 0.25])

    def test_scores_match_full_svd_oracle(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((25, 8))
        red = pca_reduce(X, 4)
        Xc = X - X.mean(axis=0)
        U, S, _ = np.linalg.svd(Xc, full_matrices=False)
        oracle = U[:, :4] * S[:4]
        # compare up to per-column sign
        for j in range(4):
            assert np.allclose(red.scores[:, j], oracle[:, j], atol=1e-9) or np.allclose(
                red.scores[:, j], -oracle[:, j], atol=1e-9
            )

    def test_constant_matrix_rejected(self):
        with pytest.raises(ValidationError):
            pca_reduce(np.full((6, 3), 2.5), 2)

    def test_k_out_of_range(self):
        with pytest.raises(DomainError):
            pca_reduce(np.random.default_rng(0).standard_normal((5, 3)), 4)


class TestResidualizedReduce:
    def test_single_batch_level_equals_pca(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((30, 10))
        Z = np.zeros((30, 0))  # no batch columns at all
        adj = residualized_reduce(X, Z, 3)
        plain = pca_reduce(X, 3)
        # residualizing on the intercept only re-centers already centered scores
        assert np.allclose(adj.scores, plain.scores, atol=1e-10)

    def test_planted_batch_effect_removed(self):
        rng = np.random.default_rng(2)
        n, p = 60, 20
        Z = (np.arange(n) % 3 == np.arange(3)[:, None]).T.astype(float)[:, 1:]
        Z1 = np.column_stack([np.ones(n), Z])
        # rank-3 noise E with columns orthogonal to the design and rows
        # orthogonal to the planted batch loadings, so the singular
        # decomposition of X separates batch and signal blocks exactly
        Ve, _ = np.linalg.qr(rng.standard_normal((p, 3)))
        G = rng.standard_normal((n, 3))
        G -= Z1 @ np.linalg.lstsq(Z1, G, rcond=None)[0]
        Ue, _ = np.linalg.qr(G)
        E = Ue @ np.diag([3.0, 2.0, 1.0]) @ Ve.T
        B = rng.standard_normal((2, p))
        B -= (B @ Ve) @ Ve.T
        X = 5.0 * (Z @ B) + E
        red = residualized_reduce(X, Z, 5)
        Zc = Z - Z.mean(axis=0)
        norms = np.linalg.norm(red.scores, axis=0)
        for j in range(red.scores.shape[1]):
            if norms[j] < 1e-8 * norms.max():
                continue  # batch direction annihilated by the residualization
            for c in range(Zc.shape[1]):
                r = np.corrcoef(red.scores[:, j], Zc[:, c])[0, 1]
                assert abs(r) < 1e-8
        # the top-5 directions of X are the 2 planted batch directions plus
        # the 3 leading directions of E; residualization removes the former,
        # so the adjusted scores span E's 3 leading score directions.
        # oracle: residualize X columns directly, then PCA.
        Xr = X - Z1 @ np.linalg.lstsq(Z1, X, rcond=None)[0]
        oracle = pca_reduce(Xr, 3, center=False)
        live = red.scores[:, norms > 1e-8 * norms.max()]
        assert live.shape[1] == 3
        angles = principal_angles(live, oracle.scores)
        assert angles.max() < 1e-6

    def test_full_rank_spans_residual_space(self):
        rng = np.random.default_rng(3)
        X = rng.standard_normal((20, 10))
        Z = (rng.integers(0, 2, 20))[:, None].astype(float)
        k = 10
        red = residualized_reduce(X, Z, k)
        Z1 = np.column_stack([np.ones(20), Z])
        Xc = X - X.mean(axis=0)
        T = Xc - Z1 @ np.linalg.lstsq(Z1, Xc, rcond=None)[0]
        keep = np.linalg.matrix_rank(T)
        angles = principal_angles(red.scores[:, :keep], T)
        assert angles.max() < 1e-6

    def test_orthogonality_invariant(self):
        rng = np.random.default_rng(4)
        X = rng.standard_normal((40, 15))
        design = build_design({"b": (rng.integers(0, 4, 40)).tolist()})
        red = residualized_reduce(X, design, 6)
        Zc = design.Z - design.Z.mean(axis=0)
        assert np.abs(Zc.T @ red.scores).max() < 1e-8

    def test_projection_is_contraction(self):
        rng = np.random.default_rng(5)
        X = rng.standard_normal((30, 12))
        Z = (rng.integers(0, 2, 30))[:, None].astype(float)
        adj = residualized_reduce(X, Z, 5)
        plain = pca_reduce(X, 5)
        assert np.linalg.norm(adj.scores) <= np.linalg.norm(plain.scores) + 1e-12

    def test_row_mismatch(self):
        with pytest.raises(ValidationError):
            residualized_reduce(np.eye(6), np.ones((5, 1)), 2)
