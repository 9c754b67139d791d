"""Per-series spectral coordinates via truncated SVD, plus the trained alternative.

The spectral route places row i of the left singular factor of the (block)
entity-time matrix into a zero-padded 256-dim coordinate.  The trained
encoder optimizes per-series embeddings under a graph-consistency loss with
a shared linear restriction map and is provided for comparison runs; the
spectral route is the default everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import SeriesCorpus
from .errors import ConfigError, ContractViolation, DivergenceError
from .manifold import DistanceGraph
from .nn import AdamW, Parameter, param_rng

EMBED_DIM = 256
SIGN_RULE = "largest-magnitude entry positive"


@dataclass
class SheafCoordinates:
    """N x 256 per-series coordinates; columns beyond each block's rank are zero."""

    coords: np.ndarray
    effective_rank: dict[str, int]
    group_map: list[str] | None = None
    degenerate_blocks: list[str] = field(default_factory=list)
    sign_rule: str = SIGN_RULE

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=np.float64)
        if self.coords.ndim != 2 or self.coords.shape[1] != EMBED_DIM:
            raise ContractViolation(f"coordinates must be N x {EMBED_DIM}")

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    def header(self) -> dict:
        return {
            "n": self.n,
            "dim": EMBED_DIM,
            "effective_rank": self.effective_rank,
            "degenerate_blocks": self.degenerate_blocks,
            "sign_rule": self.sign_rule,
        }


def svd_truncated(M, k: int):
    """Top-k SVD factors (U: N x k, S: k, V: T x k), singular values non-increasing."""
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise ContractViolation("svd_truncated expects a matrix")
    if not 1 <= k <= min(M.shape):
        raise ConfigError(f"k={k} out of range for shape {M.shape}")
    u, s, vt = np.linalg.svd(M, full_matrices=False)
    return u[:, :k], s[:k], vt[:k].T


def _fix_signs(u: np.ndarray, s: np.ndarray, tol: float) -> tuple[np.ndarray, bool]:
    """Sign-fix each column; order degenerate-singular-value columns deterministically."""
    u = u.copy()
    anchors = []
    for c in range(u.shape[1]):
        idx = int(np.argmax(np.abs(u[:, c])))  # first index on magnitude ties
        if u[idx, c] < 0:
            u[:, c] = -u[:, c]
        anchors.append(idx)
    degenerate = False
    c = 0
    while c < len(s):
        d = c
        while d + 1 < len(s) and abs(s[d + 1] - s[c]) <= tol:
            d += 1
        if d > c:
            degenerate = True
            order = sorted(range(c, d + 1), key=lambda j: anchors[j])
            u[:, c : d + 1] = u[:, order]
        c = d + 1
    return u, degenerate


def spectral_coordinates(corpus: SeriesCorpus, groups: list[str] | None = None) -> SheafCoordinates:
    """Block-wise truncated SVD of the entity-time matrix, rows of U zero-padded to 256.

    ``groups`` defaults to the corpus group labels when present; pass an
    explicit list to override, or leave the corpus ungrouped for a single
    global block.
    """
    if groups is None:
        groups = corpus.group_labels
    n = corpus.n
    coords = np.zeros((n, EMBED_DIM))
    ranks: dict[str, int] = {}
    degenerate: list[str] = []
    blocks: dict[str, list[int]] = {}
    if groups is None:
        blocks["global"] = list(range(n))
    else:
        if len(groups) != n:
            raise ContractViolation("groups length must equal series count")
        for i, g in enumerate(groups):
            blocks.setdefault(g, []).append(i)
    for label, rows in blocks.items():
        m = corpus.values[rows, :]
        k = min(len(rows), corpus.t, EMBED_DIM)
        u, s, _ = svd_truncated(m, k)
        tol = max(m.shape) * np.finfo(np.float64).eps * (s[0] if s.size else 0.0)
        rank = int(np.sum(s > tol))
        u, is_degenerate = _fix_signs(u[:, :rank], s[:rank], tol)
        if is_degenerate:
            degenerate.append(label)
        coords[np.array(rows, dtype=int)[:, None], np.arange(rank)] = u
        ranks[label] = rank
    return SheafCoordinates(
        coords=coords,
        effective_rank=ranks,
        group_map=list(groups) if groups is not None else None,
        degenerate_blocks=degenerate,
    )


def sheaf_dirichlet_energy(weight_graph: DistanceGraph, coords: SheafCoordinates | np.ndarray) -> float:
    """Sum over edges of w_ij * ||z_i - z_j||^2 (identity restriction maps)."""
    z = coords.coords if isinstance(coords, SheafCoordinates) else np.asarray(coords, dtype=np.float64)
    if weight_graph.n != z.shape[0]:
        raise ContractViolation("graph nodes must match coordinate rows")
    total = 0.0
    for i, j, w in weight_graph.edges:
        diff = z[i] - z[j]
        total += w * float(diff @ diff)
    return total


@dataclass(frozen=True)
class NeuralSheafConfig:
    embed_dim: int = EMBED_DIM
    lambda_c: float = 1.0
    lambda_r: float = 0.1
    beta: float = 0.01
    epochs: int = 50
    learning_rate: float = 1e-3
    knn_k: int = 10

    def __post_init__(self):
        for name in ("lambda_c", "lambda_r", "beta"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")


@dataclass
class NeuralSheafResult:
    coordinates: SheafCoordinates
    loss_curve: list[float]
    edge_disagreement: list[float]  # per-epoch sum of w * ||R e_i - R e_j||^2


def neural_sheaf_train(corpus: SeriesCorpus, weight_graph: DistanceGraph,
                       config: NeuralSheafConfig,
                       warm_start: SheafCoordinates | None = None,
                       seed: int = 0) -> NeuralSheafResult:
    """Optimize per-series embeddings under the graph-consistency objective.

    Loss = lambda_c * sum_e w_ij ||R e_i - R e_j||^2
         + lambda_r * ||dec(e) - series_mean||^2
         - beta * mean-component variance of R e across series.

    Embeddings warm-start from the spectral coordinates; R is a shared
    linear map and dec a linear read-out to the per-series mean.
    """
    if warm_start is None:
        warm_start = spectral_coordinates(corpus)
    n, dim = warm_start.coords.shape
    if dim != config.embed_dim:
        raise ConfigError("warm start dimension != configured embed_dim")
    if weight_graph.n != n:
        raise ContractViolation("graph size must match corpus")

    emb = Parameter("sheaf.embeddings", warm_start.coords.copy())
    r_std = 1.0 / np.sqrt(dim)
    r_map = Parameter("sheaf.restriction", param_rng(seed, "sheaf.restriction").normal(0, r_std, (dim, dim)))
    dec_w = Parameter("sheaf.dec.w", param_rng(seed, "sheaf.dec.w").normal(0, r_std, (dim,)))
    dec_b = Parameter("sheaf.dec.b", np.zeros(()))
    target = corpus.values.mean(axis=1)

    edges = weight_graph.edges
    opt = AdamW([emb, r_map, dec_w, dec_b], lr=config.learning_rate, weight_decay=0.0)
    loss_curve: list[float] = []
    disagreement: list[float] = []
    for epoch in range(config.epochs):
        opt.zero_grad()
        y = emb.value @ r_map.value
        g_y = np.zeros_like(y)
        loss = 0.0
        pair_term = 0.0
        for i, j, w in edges:
            diff = y[i] - y[j]
            sq = float(diff @ diff)
            pair_term += w * sq
            g = 2.0 * config.lambda_c * w * diff
            g_y[i] += g
            g_y[j] -= g
        disagreement.append(pair_term)
        loss += config.lambda_c * pair_term

        resid = emb.value @ dec_w.value + dec_b.value - target
        loss += config.lambda_r * float(resid @ resid)
        g_emb = (2.0 * config.lambda_r) * resid[:, None] * dec_w.value[None, :]
        dec_w.grad += emb.value.T @ (2.0 * config.lambda_r * resid)
        dec_b.grad += 2.0 * config.lambda_r * resid.sum()

        centered = y - y.mean(axis=0, keepdims=True)
        loss -= config.beta * float((centered**2).sum()) / (n * dim)
        g_y -= config.beta * 2.0 * centered / (n * dim)

        emb.grad += g_y @ r_map.value.T + g_emb
        r_map.grad += emb.value.T @ g_y

        if not np.isfinite(loss):
            raise DivergenceError(
                "neural sheaf training diverged",
                diagnostics={"epoch": epoch, "loss_curve": loss_curve},
            )
        loss_curve.append(float(loss))
        opt.step()

    coords = SheafCoordinates(
        coords=emb.value.copy(),
        effective_rank={"trained": dim},
        group_map=warm_start.group_map,
        sign_rule="trained embeddings (no sign rule)",
    )
    return NeuralSheafResult(coordinates=coords, loss_curve=loss_curve, edge_disagreement=disagreement)
