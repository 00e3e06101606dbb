"""Siamese contrastive training with handwritten gradients.

One training example is a pair of poses and a binary label y (1 similar,
0 dissimilar). Both poses run through the same embedding model (shared
weights), the cosine distance d between the embeddings feeds the
margin-based contrastive loss

    L = 1/2 * y * d^2 + 1/2 * (1 - y) * max(0, m - d)^2

and gradients are backpropagated by hand through the distance, the MLP head
and the graph layers. Parameters are updated with bias-corrected Adam. The
loop is bit-deterministic: shuffling comes from a single seeded PCG64
generator, gradients accumulate in shuffled index order, and the final short
batch is trained rather than dropped.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from posesim.network import (
    EmbeddingModel,
    ForwardCache,
    copy_model,
    forward_variant,
    init_model,
    parameter_list,
)
from posesim.skeleton import (
    NUM_KEYPOINTS,
    Pose,
    SkeletonTopology,
    build_skeleton_topology,
    normalize_pose,
)

NORM_FLOOR = 1e-12

DEFAULT_MARGIN = 1.35


@dataclass(frozen=True)
class PosePair:
    """A labelled pose pair, the unit of training and evaluation.

    magnitude optionally records the ground-truth perturbation size that
    produced a positive pair; graded ranking evaluation uses it.
    """

    pose_a: Pose
    pose_b: Pose
    label_y: int
    magnitude: float | None = None

    def __post_init__(self):
        if self.label_y not in (0, 1):
            raise ValueError(f"label_y must be 0 or 1, got {self.label_y!r}")
        if self.magnitude is not None and not self.magnitude >= 0.0:
            raise ValueError(f"magnitude must be >= 0, got {self.magnitude!r}")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    batch_size: int = 64
    epochs: int = 50
    margin_m: float = 1.35
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    seed: int = 0
    loss_reduction: str = "mean"

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not 0 < self.margin_m <= 2:
            raise ValueError("margin_m must be in (0, 2]")
        for name in ("adam_beta1", "adam_beta2"):
            if not 0 < getattr(self, name) < 1:
                raise ValueError(f"{name} must be in (0, 1)")
        if not self.adam_epsilon > 0:
            raise ValueError("adam_epsilon must be > 0")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in 64 unsigned bits")
        if self.loss_reduction not in ("mean", "sum"):
            raise ValueError("loss_reduction must be 'mean' or 'sum'")


@dataclass
class AdamState:
    m: list
    v: list
    t: int = 0


@dataclass
class TrainHistory:
    """Per-epoch training statistics; all three lists share the epoch count.

    Distances are means over the pairs of each label within the epoch,
    measured with the weights current when the pair was visited. An epoch
    with no pairs of a label records nan for that mean.
    """

    mean_loss: list = field(default_factory=list)
    mean_pos_dist: list = field(default_factory=list)
    mean_neg_dist: list = field(default_factory=list)

    def __post_init__(self):
        if not (len(self.mean_loss) == len(self.mean_pos_dist)
                == len(self.mean_neg_dist)):
            raise ValueError("history columns must have equal length")


def history_csv(history: TrainHistory) -> str:
    lines = ["epoch,mean_loss,mean_pos_dist,mean_neg_dist"]
    rows = zip(history.mean_loss, history.mean_pos_dist, history.mean_neg_dist)
    for epoch, (loss, pos, neg) in enumerate(rows, start=1):
        lines.append(f"{epoch},{float(loss)!r},{float(pos)!r},{float(neg)!r}")
    return "\n".join(lines) + "\n"


def _finite_vector(e, what: str) -> np.ndarray:
    arr = np.asarray(e, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{what} must be a vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} contains non-finite values")
    return arr


def cosine_distance(e1, e2) -> float:
    """1 - cos(e1, e2), with each norm clamped below at 1e-12.

    The clamp keeps the value (and its gradient) finite when an embedding
    collapses to zero; at every realistic operating point it is inactive.
    Result lies in [0, 2] up to rounding.
    """
    e1 = _finite_vector(e1, "e1")
    e2 = _finite_vector(e2, "e2")
    if e1.shape != e2.shape:
        raise ValueError(f"shape mismatch: {e1.shape} vs {e2.shape}")
    n1 = max(float(np.linalg.norm(e1)), NORM_FLOOR)
    n2 = max(float(np.linalg.norm(e2)), NORM_FLOOR)
    return 1.0 - float(e1 @ e2) / (n1 * n2)


def cosine_distance_grads(e1, e2):
    """Distance plus its analytic gradients w.r.t. both embeddings.

    Where a norm is clamped it is locally constant, so its term drops out of
    that side's gradient.
    """
    e1 = np.asarray(e1, dtype=np.float64)
    e2 = np.asarray(e2, dtype=np.float64)
    raw1 = float(np.linalg.norm(e1))
    raw2 = float(np.linalg.norm(e2))
    n1 = max(raw1, NORM_FLOOR)
    n2 = max(raw2, NORM_FLOOR)
    denom = n1 * n2
    cos = float(e1 @ e2) / denom
    g1 = -e2 / denom
    if raw1 >= NORM_FLOOR:
        g1 = g1 + (cos / (n1 * n1)) * e1
    g2 = -e1 / denom
    if raw2 >= NORM_FLOOR:
        g2 = g2 + (cos / (n2 * n2)) * e2
    return 1.0 - cos, g1, g2


def contrastive_loss(d_c: float, y: int, m: float = DEFAULT_MARGIN) -> float:
    if y not in (0, 1):
        raise ValueError(f"y must be 0 or 1, got {y!r}")
    if not m > 0:
        raise ValueError("margin must be > 0")
    if y == 1:
        return 0.5 * d_c * d_c
    hinge = m - d_c
    return 0.5 * hinge * hinge if hinge > 0.0 else 0.0


def _loss_ddist(d: float, y: int, m: float) -> float:
    """dL/dd. The hinge subgradient at d == m is 0."""
    if y == 1:
        return d
    return -(m - d) if d < m else 0.0


def _network_backward(model: EmbeddingModel, cache: ForwardCache,
                      g_emb: np.ndarray, topo, grads: list) -> None:
    """Accumulate dL/dparam into grads, given dL/dembedding for one twin."""
    g = g_emb
    for i in reversed(range(len(model.mlp_layers))):
        layer = model.mlp_layers[i]
        if model.arch.mlp_activations[i] == "relu":
            g = g * (cache.mlp_pre[i] > 0.0)
        a_prev = cache.flat if i == 0 else cache.mlp_post[i - 1]
        grads[2 + 2 * i] += np.outer(a_prev, g)
        grads[3 + 2 * i] += g
        g = layer.w @ g
    if not cache.gcn_pre:
        return
    a_norm = topo.adjacency_norm
    gh = g.reshape(cache.gcn_post[-1].shape)
    for i in reversed(range(len(model.gcn_weights))):
        if model.arch.gcn_activation == "relu":
            gh = gh * (cache.gcn_pre[i] > 0.0)
        h_in = cache.x if i == 0 else cache.gcn_post[i - 1]
        grads[i] += (a_norm @ h_in).T @ gh
        gh = a_norm.T @ (gh @ model.gcn_weights[i].T)


def _pair_backward_full(model, topo, pair: PosePair, cfg: TrainConfig,
                        variant: str):
    """(loss, distance, grads) for one pair; twins share weights so both
    twins' gradient contributions are summed."""
    na = normalize_pose(pair.pose_a)
    nb = normalize_pose(pair.pose_b)
    e1, cache1 = forward_variant(model, na, topo, variant)
    e2, cache2 = forward_variant(model, nb, topo, variant)
    d, gd1, gd2 = cosine_distance_grads(e1, e2)
    loss = contrastive_loss(d, pair.label_y, cfg.margin_m)
    dl_dd = _loss_ddist(d, pair.label_y, cfg.margin_m)
    grads = [np.zeros_like(p) for p in parameter_list(model)]
    if dl_dd != 0.0:
        _network_backward(model, cache1, dl_dd * gd1, topo, grads)
        _network_backward(model, cache2, dl_dd * gd2, topo, grads)
    return loss, d, grads


def pair_backward(model: EmbeddingModel, topo: SkeletonTopology,
                  pair: PosePair, cfg: TrainConfig, variant: str = "gcn"):
    """Loss and exact analytic parameter gradients for one pair."""
    loss, _, grads = _pair_backward_full(model, topo, pair, cfg, variant)
    return loss, grads


def init_adam_state(model: EmbeddingModel) -> AdamState:
    params = parameter_list(model)
    return AdamState(m=[np.zeros_like(p) for p in params],
                     v=[np.zeros_like(p) for p in params], t=0)


def adam_step(model: EmbeddingModel, grads, state: AdamState,
              cfg: TrainConfig):
    """One bias-corrected Adam update, applied in place to the model's
    parameter buffers and the state; both are also returned."""
    params = parameter_list(model)
    if len(grads) != len(params):
        raise ValueError(f"expected {len(params)} gradients, got {len(grads)}")
    state.t += 1
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    bias1 = 1.0 - b1 ** state.t
    bias2 = 1.0 - b2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if g.shape != p.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter {p.shape}")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= cfg.learning_rate * (m / bias1) / (np.sqrt(v / bias2) + cfg.adam_epsilon)
    return model, state


def train(model: EmbeddingModel, topo: SkeletonTopology, pairs,
          cfg: TrainConfig = TrainConfig(), variant: str = "gcn"):
    """Fit the model on labelled pairs; returns (model, TrainHistory).

    Per epoch: shuffle with the run-level seeded generator, split into
    batches of cfg.batch_size keeping the final short batch, accumulate
    per-pair gradients in shuffled index order, reduce (mean by default),
    then take one adam_step per batch. Fully determined by (model, pairs
    order, cfg).
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("pairs must be nonempty")
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    state = init_adam_state(model)
    history = TrainHistory()
    for _ in range(cfg.epochs):
        order = rng.permutation(len(pairs))
        losses = []
        pos_d, neg_d = [], []
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            accum = [np.zeros_like(p) for p in parameter_list(model)]
            for idx in batch:
                pair = pairs[idx]
                loss, d, grads = _pair_backward_full(model, topo, pair, cfg,
                                                     variant)
                for a, g in zip(accum, grads):
                    a += g
                losses.append(loss)
                (pos_d if pair.label_y == 1 else neg_d).append(d)
            scale = 1.0 / len(batch) if cfg.loss_reduction == "mean" else 1.0
            if scale != 1.0:
                for a in accum:
                    a *= scale
            adam_step(model, accum, state, cfg)
        history.mean_loss.append(float(np.mean(losses)))
        history.mean_pos_dist.append(float(np.mean(pos_d)) if pos_d else float("nan"))
        history.mean_neg_dist.append(float(np.mean(neg_d)) if neg_d else float("nan"))
    return model, history


def gradient_check(model: EmbeddingModel, topo: SkeletonTopology,
                   pair: PosePair, cfg: TrainConfig = TrainConfig(),
                   variant: str = "gcn", fd_epsilon: float = 1e-6) -> float:
    """Max relative error between analytic and central-difference gradients.

    The denominator is max(|analytic|, |numeric|, 1e-8) per coordinate. The
    model is not modified; differencing runs on a private copy.
    """
    if not fd_epsilon > 0:
        raise ValueError("fd_epsilon must be > 0")
    work = copy_model(model)
    _, _, analytic = _pair_backward_full(work, topo, pair, cfg, variant)
    na = normalize_pose(pair.pose_a)
    nb = normalize_pose(pair.pose_b)

    def loss_at_current():
        e1, _ = forward_variant(work, na, topo, variant)
        e2, _ = forward_variant(work, nb, topo, variant)
        return contrastive_loss(cosine_distance(e1, e2), pair.label_y,
                                cfg.margin_m)

    worst = 0.0
    for p, ga in zip(parameter_list(work), analytic):
        flat = p.reshape(-1)
        gflat = ga.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + fd_epsilon
            up = loss_at_current()
            flat[i] = orig - fd_epsilon
            down = loss_at_current()
            flat[i] = orig
            numeric = (up - down) / (2.0 * fd_epsilon)
            denom = max(abs(gflat[i]), abs(numeric), 1e-8)
            worst = max(worst, abs(gflat[i] - numeric) / denom)
    return float(worst)


def _fd_friendly(model, topo, pair: PosePair, na, nb) -> bool:
    """Whether central differencing at step 1e-6 is trustworthy at this point.

    Differencing needs the loss smooth within the step and the comparison
    clear of the float64 noise floor (about machine epsilon times the loss
    over the step, ~1e-10 here). Checked per variant: embeddings off the
    norm clamp, distance on the active side of and away from the hinge kink,
    every relu pre-activation away from zero, and every nonzero analytic
    gradient coordinate above the noise floor by a wide margin. The gradient
    condition reads only analytic magnitudes, so it cannot hide a wrong
    gradient from the comparison.
    """
    for variant in ("gcn", "mlp"):
        e1, c1 = forward_variant(model, na, topo, variant)
        e2, c2 = forward_variant(model, nb, topo, variant)
        if min(np.linalg.norm(e1), np.linalg.norm(e2)) < 1e-3:
            return False
        if cosine_distance(e1, e2) > DEFAULT_MARGIN - 1e-3:
            return False
        for cache in (c1, c2):
            for z in (*cache.gcn_pre, *cache.mlp_pre[:-1]):  # identity head has no kink
                if float(np.min(np.abs(z))) < 1e-4:
                    return False
        _, _, grads = _pair_backward_full(model, topo, pair, TrainConfig(),
                                          variant)
        for g in grads:
            mags = np.abs(g.reshape(-1))
            nonzero = mags[mags > 0.0]
            if nonzero.size and float(nonzero.min()) < 3e-6:
                return False
    return True


def random_check_instance(seed: int):
    """A random (model, pair) gradient-check instance, deterministic in seed.

    Alternates labels with the seed's parity so a sweep of consecutive seeds
    exercises both loss branches (the dissimilar side with its hinge active).
    Candidates are redrawn until the point is one where finite differencing
    is meaningful for both variants; see _fd_friendly.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    topo = build_skeleton_topology()
    while True:
        model = init_model(h=2, seed=int(rng.integers(2 ** 32)))
        pose_a = Pose(rng.uniform(-3.0, 3.0, size=(NUM_KEYPOINTS, 2)))
        pose_b = Pose(rng.uniform(-3.0, 3.0, size=(NUM_KEYPOINTS, 2)))
        pair = PosePair(pose_a, pose_b, label_y=seed % 2)
        na, nb = normalize_pose(pose_a), normalize_pose(pose_b)
        if _fd_friendly(model, topo, pair, na, nb):
            return model, pair
