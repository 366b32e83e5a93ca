"""Embedding-quality metrics: silhouette, kBET-style local chi-squared
acceptance, LISI diversity, and principal-component regression.

Every metric also reports a [0, 1] rescaled value oriented so that 1 means
the labeling is perfectly mixed through the embedding and 0 means perfectly
separated.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import ValidationError
from .linalg import ensure_matrix, pairwise_sqdist
from .tsne import calibrate_bandwidths, _conditional_rows


def _levels(labels):
    labels = np.asarray(labels)
    levels = sorted(set(labels.tolist()), key=str)
    lookup = {lev: i for i, lev in enumerate(levels)}
    codes = np.array([lookup[x] for x in labels.tolist()])
    return levels, codes


def silhouette(Y, labels):
    """Mean silhouette width (Euclidean) and its mixing-oriented rescaling.

    rescaled = 1 - |raw|: strong clustering by the labels (raw near +1)
    and strong anti-clustering (raw near -1) both map to 0, while a labeling
    spread uniformly through the embedding (raw near 0) maps to 1.
    """
    Y = ensure_matrix(Y, "Y")
    levels, codes = _levels(labels)
    if len(levels) < 2:
        raise ValidationError("silhouette needs at least 2 label levels")
    counts = np.bincount(codes, minlength=len(levels))
    if np.any(counts < 2):
        bad = levels[int(np.argmin(counts))]
        raise ValidationError(f"label level {bad!r} has fewer than 2 members")
    D = np.sqrt(pairwise_sqdist(Y))
    onehot = np.eye(len(levels))[codes]
    sums = D @ onehot  # n x L total distance to each level
    a = sums[np.arange(len(codes)), codes] / (counts[codes] - 1)
    means = sums / counts[None, :]
    means[np.arange(len(codes)), codes] = np.inf
    b = means.min(axis=1)
    s = (b - a) / np.maximum(a, b)
    raw = float(s.mean())
    return raw, 1.0 - abs(raw)


def kbet_acceptance(Y, batch, knn=None, n_test=None, alpha=0.05, seed=0):
    """Fraction of sampled points whose knn-neighborhood batch composition is
    consistent (chi-squared) with the global batch proportions."""
    Y = ensure_matrix(Y, "Y")
    n = Y.shape[0]
    levels, codes = _levels(batch)
    if len(levels) < 2:
        raise ValidationError("kBET needs at least 2 batch levels")
    if knn is None:
        knn = max(10, int(0.05 * n))
    if n_test is None:
        n_test = min(500, n)
    if knn >= n:
        raise ValidationError(f"knn={knn} must be smaller than n={n}")
    props = np.bincount(codes, minlength=len(levels)) / n
    expected = props * knn
    if np.all(expected < 1):
        raise ValidationError(
            f"knn={knn} too small: every expected neighborhood count < 1"
        )
    rng = np.random.default_rng(seed)
    test_idx = (
        np.arange(n) if n_test >= n else rng.choice(n, size=n_test, replace=False)
    )
    D = pairwise_sqdist(Y)
    dof = len(levels) - 1
    accepted = 0
    for i in test_idx:
        row = D[i].copy()
        row[i] = np.inf
        neigh = np.argpartition(row, knn)[:knn]
        observed = np.bincount(codes[neigh], minlength=len(levels))
        stat = float(np.sum((observed - expected) ** 2 / np.maximum(expected, 1e-12)))
        if stats.chi2.sf(stat, dof) >= alpha:
            accepted += 1
    return accepted / len(test_idx)


def lisi(Y, labels, perplexity=30.0):
    """Mean inverse Simpson index of labels under perplexity-calibrated
    Gaussian neighbor weights; rescaled to [0, 1] by (mean - 1)/(L - 1)."""
    Y = ensure_matrix(Y, "Y")
    levels, codes = _levels(labels)
    D = pairwise_sqdist(Y)
    sigma2 = calibrate_bandwidths(D, perplexity)
    W = _conditional_rows(D, sigma2)
    onehot = np.eye(len(levels))[codes]
    per_level = W @ onehot
    simpson = np.sum(per_level**2, axis=1)
    mean_raw = float(np.mean(1.0 / simpson))
    if len(levels) == 1:
        return mean_raw, 0.0
    return mean_raw, (mean_raw - 1.0) / (len(levels) - 1.0)


def pc_regression(M, labels):
    """Variance-weighted R^2 of the principal components of M regressed on
    the label dummies."""
    M = ensure_matrix(M, "M")
    levels, codes = _levels(labels)
    if len(codes) != M.shape[0]:
        raise ValidationError("labels length does not match matrix rows")
    if len(levels) < 2:
        raise ValidationError("pc_regression needs at least 2 label levels")
    Mc = M - M.mean(axis=0)
    U, S, _ = np.linalg.svd(Mc, full_matrices=False)
    keep = S > max(S[0], 1.0) * 1e-12 if S.size else S.astype(bool)
    U, S = U[:, keep], S[keep]
    if S.size == 0:
        raise ValidationError("matrix has no variance")
    design = np.column_stack(
        [np.ones(M.shape[0])] + [(codes == j).astype(float) for j in range(1, len(levels))]
    )
    Q, _ = np.linalg.qr(design)
    pcs = U * S  # columns are centered
    fitted = Q @ (Q.T @ pcs)
    ss_fit = np.sum(fitted**2, axis=0)
    ss_tot = np.sum(pcs**2, axis=0)
    r2 = ss_fit / ss_tot
    weights = S**2
    return float(np.sum(weights * r2) / np.sum(weights))


@dataclass(frozen=True)
class MetricsConfig:
    knn: int | None = None
    n_test: int | None = None
    alpha: float = 0.05
    lisi_perplexity: float = 30.0
    seed: int = 0


@dataclass(frozen=True)
class LabelingScores:
    labeling: str
    sil_raw: float
    sil_rescaled: float
    kbet_acceptance: float
    lisi_mean: float
    lisi_rescaled: float
    pcreg_r2: float


@dataclass(frozen=True)
class MetricsReport:
    scores: tuple  # LabelingScores per labeling
    config: MetricsConfig

    def rows(self):
        """CSV rows: labeling, metric, raw, rescaled."""
        out = []
        for s in self.scores:
            out.append((s.labeling, "silhouette", s.sil_raw, s.sil_rescaled))
            out.append((s.labeling, "kbet", s.kbet_acceptance, s.kbet_acceptance))
            out.append((s.labeling, "lisi", s.lisi_mean, s.lisi_rescaled))
            out.append((s.labeling, "pcreg", s.pcreg_r2, s.pcreg_r2))
        return out

    def format_table(self):
        lines = [
            f"{'labeling':<12} {'SIL':>8} {'kBET':>8} {'LISI':>8} {'PcReg':>8}"
        ]
        for s in self.scores:
            lines.append(
                f"{s.labeling:<12} {s.sil_rescaled:>8.3f} {s.kbet_acceptance:>8.3f} "
                f"{s.lisi_rescaled:>8.3f} {s.pcreg_r2:>8.3f}"
            )
        return "\n".join(lines)


def evaluate(Y, labelings, cfg=MetricsConfig()):
    """Run all four metrics for every named labeling."""
    scores = []
    for name, labels in labelings.items():
        sil_raw, sil_resc = silhouette(Y, labels)
        kbet = kbet_acceptance(
            Y, labels, knn=cfg.knn, n_test=cfg.n_test, alpha=cfg.alpha, seed=cfg.seed
        )
        lisi_mean, lisi_resc = lisi(Y, labels, perplexity=cfg.lisi_perplexity)
        pcr = pc_regression(Y, labels)
        scores.append(
            LabelingScores(
                labeling=name,
                sil_raw=sil_raw,
                sil_rescaled=sil_resc,
                kbet_acceptance=kbet,
                lisi_mean=lisi_mean,
                lisi_rescaled=lisi_resc,
                pcreg_r2=pcr,
            )
        )
    return MetricsReport(scores=tuple(scores), config=cfg)
