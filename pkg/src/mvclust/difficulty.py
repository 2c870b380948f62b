"""Per-view difficulty labels and their adversarial cross-view reconciliation.

Each view labels every sample easy (0) or difficult (1) from its distance to
the anchor. Views disagree; a minimax game between a shared feature embedder
and a binary classifier settles the disagreements: the classifier learns to
tell the two members of an inconsistent pair apart while the embedder pulls
them (and their fused concatenation) toward a common representation. The
trained classifier's verdict on the fused sample becomes the shared label.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DataError, NumericalError, ShapeError
from .nets import PROB_EPS, AdamState, Net, adam_step, clamp_prob, make_net

REGION_POSITIVE = "P"
REGION_NEGATIVE = "N"
REGION_ANCHOR = "A"


@dataclass
class DifficultyAssignment:
    """Per-view binary labels (easy=0 / difficult=1) plus region tags."""

    labels: np.ndarray    # (V, n) ints in {0, 1}
    regions: list         # per view: length-n array of 'P'/'N'/'A'
    mu: float             # boundary factor used

    @property
    def n_views(self):
        return self.labels.shape[0]

    @property
    def n(self):
        return self.labels.shape[1]

    def copy(self):
        return DifficultyAssignment(
            self.labels.copy(), [r.copy() for r in self.regions], self.mu
        )


def assign_difficulty(partition, mu):
    """Label one view's samples via the anchor-distance boundary rule.

    A negative-set sample farther than mu * d_max(N), or a positive-set sample
    closer than mu * d_max(P), is easy (0); every other sample is difficult (1).
    Both inequalities are strict. The anchor itself is tagged 'A' and easy.
    """
    if not 0.0 < mu < 1.0:
        raise DataError(f"mu must be in (0, 1), got {mu}")
    if len(partition.positive) == 0 or len(partition.negative) == 0:
        raise DataError(
            "difficulty boundary undefined: positive or negative set is empty"
        )
    n = partition.n
    dist = partition.anchor_distances
    d_max_n = dist[partition.negative].max()
    d_max_p = dist[partition.positive].max()
    labels = np.ones(n, dtype=int)
    regions = np.full(n, REGION_ANCHOR, dtype="<U1")
    regions[partition.positive] = REGION_POSITIVE
    regions[partition.negative] = REGION_NEGATIVE
    for k in partition.negative:
        labels[k] = 0 if dist[k] > mu * d_max_n else 1
    for k in partition.positive:
        labels[k] = 0 if dist[k] < mu * d_max_p else 1
    labels[partition.anchor_index] = 0
    return labels, regions


def assignment_from_partitions(partitions, mu):
    """Apply the boundary rule to every view."""
    labels, regions = [], []
    for part in partitions:
        lab, reg = assign_difficulty(part, mu)
        labels.append(lab)
        regions.append(reg)
    return DifficultyAssignment(np.stack(labels), regions, mu)


def collect_inconsistent(labels):
    """All (sample, view_i, view_j) triples whose labels disagree, i < j."""
    labels = np.asarray(labels)
    if labels.shape[0] < 2:
        raise DataError("need labels from at least 2 views")
    pairs = []
    n_views = labels.shape[0]
    for i in range(n_views):
        for j in range(i + 1, n_views):
            for k in np.nonzero(labels[i] != labels[j])[0]:
                pairs.append((int(k), i, j))
    pairs.sort()
    return pairs


def fuse_pair(x_i, x_j):
    """Fused representation of one cross-view pair: plain concatenation."""
    return np.concatenate([np.asarray(x_i, dtype=float).ravel(),
                           np.asarray(x_j, dtype=float).ravel()])


def adv_loss(f_i, f_j, ell):
    """Binary classification loss over inconsistent pairs.

    -(1/K) * sum ell * (log f_i + log(1 - f_j)); 0 for an empty pair set.
    """
    f_i = np.asarray(f_i, dtype=float).ravel()
    f_j = np.asarray(f_j, dtype=float).ravel()
    if f_i.shape != f_j.shape:
        raise ShapeError("classifier output vectors differ in length")
    if f_i.size == 0:
        return 0.0
    f_i = clamp_prob(f_i)
    f_j = clamp_prob(f_j)
    return float(-np.mean(ell * (np.log(f_i) + np.log(1.0 - f_j))))


def sim_loss(e_i, e_fused, e_j, margin):
    """Triplet hinge: the fused embedding should sit no closer to the first
    member than margin-past-the-second."""
    e_i = np.atleast_2d(np.asarray(e_i, dtype=float))
    e_fused = np.atleast_2d(np.asarray(e_fused, dtype=float))
    e_j = np.atleast_2d(np.asarray(e_j, dtype=float))
    if not (e_i.shape == e_fused.shape == e_j.shape):
        raise ShapeError("triplet embeddings must share one shape")
    if margin < 0:
        raise ShapeError(f"margin must be >= 0, got {margin}")
    d_i = ((e_fused - e_i) ** 2).sum(axis=1)
    d_j = ((e_fused - e_j) ** 2).sum(axis=1)
    return float(np.mean(np.maximum(0.0, margin + d_i - d_j)))


@dataclass
class ReconcilerModel:
    """Shared embedder (per-input heads + common trunk) and binary classifier."""

    trunk: Net
    view_heads: dict
    pair_heads: dict
    classifier: Net
    margin: float
    pseudo_label: float   # weight on the classifier's log terms
    sim_weight: float     # alpha
    adv_weight: float     # beta
    embed_opt: AdamState
    cls_opt: AdamState

    def embedder_blocks(self):
        blocks = list(self.trunk.blocks())
        for i in sorted(self.view_heads):
            blocks.extend(self.view_heads[i].blocks())
        for key in sorted(self.pair_heads):
            blocks.extend(self.pair_heads[key].blocks())
        return blocks

    def embed_view(self, x, view_index):
        head = self.view_heads[view_index]
        h, c_head = head.forward(np.atleast_2d(x))
        e, c_trunk = self.trunk.forward(h)
        return e, (c_head, c_trunk)

    def embed_pair(self, x_fused, pair_key):
        head = self.pair_heads[pair_key]
        h, c_head = head.forward(np.atleast_2d(x_fused))
        e, c_trunk = self.trunk.forward(h)
        return e, (c_head, c_trunk)

    def classify(self, e):
        p, cache = self.classifier.forward(np.atleast_2d(e))
        return clamp_prob(p), cache


def build_reconciler(view_dims, rng, embed_width=32, head_width=64,
                     margin=0.05, pseudo_label=0.5, sim_weight=0.3,
                     adv_weight=0.5, learning_rate=1e-4):
    """Fresh model: one head per view, one per unordered view pair, shared
    two-layer trunk, 3-layer sigmoid classifier."""
    view_heads = {
        i: make_net([d, head_width], ["relu"], rng) for i, d in enumerate(view_dims)
    }
    pair_heads = {}
    for i in range(len(view_dims)):
        for j in range(i + 1, len(view_dims)):
            pair_heads[(i, j)] = make_net(
                [view_dims[i] + view_dims[j], head_width], ["relu"], rng
            )
    trunk = make_net([head_width, head_width, embed_width], ["relu", "identity"], rng)
    classifier = make_net([embed_width, 16, 8, 1], ["relu", "relu", "sigmoid"], rng)
    return ReconcilerModel(
        trunk=trunk,
        view_heads=view_heads,
        pair_heads=pair_heads,
        classifier=classifier,
        margin=margin,
        pseudo_label=pseudo_label,
        sim_weight=sim_weight,
        adv_weight=adv_weight,
        embed_opt=AdamState(learning_rate=learning_rate),
        cls_opt=AdamState(learning_rate=learning_rate),
    )


def _group_pairs(batch):
    groups = {}
    for k, i, j in batch:
        groups.setdefault((i, j), []).append(k)
    return groups


def _zero_grads_like(net):
    return [np.zeros_like(b) for b in net.blocks()]


def _accumulate(target, grads):
    for t, g in zip(target, grads.blocks()):
        t += g


def _batch_losses_and_grads(model, dataset, batch):
    """Both loss values and all gradients of J = alpha*L_sim - beta*L_adv.

    Returns (L_sim, L_adv, embedder gradient blocks of J,
    classifier gradient blocks of beta*L_adv), batch-mean normalized.
    """
    b = len(batch)
    g_trunk = _zero_grads_like(model.trunk)
    g_view = {i: _zero_grads_like(net) for i, net in model.view_heads.items()}
    g_pair = {k: _zero_grads_like(net) for k, net in model.pair_heads.items()}
    g_cls = _zero_grads_like(model.classifier)
    sim_total = 0.0
    adv_total = 0.0
    alpha, beta, ell, m = (model.sim_weight, model.adv_weight,
                           model.pseudo_label, model.margin)

    for (i, j), ks in sorted(_group_pairs(batch).items()):
        ks = np.array(ks)
        x_i = dataset.views[i][ks]
        x_j = dataset.views[j][ks]
        x_f = np.hstack([x_i, x_j])
        e_i, cache_i = model.embed_view(x_i, i)
        e_j, cache_j = model.embed_view(x_j, j)
        e_f, cache_f = model.embed_pair(x_f, (i, j))

        # hinge terms
        diff_i = e_f - e_i
        diff_j = e_f - e_j
        s = m + (diff_i ** 2).sum(axis=1) - (diff_j ** 2).sum(axis=1)
        active = (s > 0.0).astype(float)[:, None]
        sim_total += np.maximum(0.0, s).sum()
        dsim_ef = active * 2.0 * (diff_i - diff_j)
        dsim_ei = active * (-2.0) * diff_i
        dsim_ej = active * 2.0 * diff_j

        # classifier terms (clamped before logs; clamped region has zero grad)
        p_i_raw, c_cls_i = model.classifier.forward(e_i)
        p_j_raw, c_cls_j = model.classifier.forward(e_j)
        p_i = clamp_prob(p_i_raw)
        p_j = clamp_prob(p_j_raw)
        in_i = ((p_i_raw > PROB_EPS) & (p_i_raw < 1.0 - PROB_EPS)).astype(float)
        in_j = ((p_j_raw > PROB_EPS) & (p_j_raw < 1.0 - PROB_EPS)).astype(float)
        adv_total += -ell * (np.log(p_i).sum() + np.log(1.0 - p_j).sum())
        dadv_pi = -ell / p_i * in_i
        dadv_pj = ell / (1.0 - p_j) * in_j
        gc_i, dadv_ei = model.classifier.backward(c_cls_i, dadv_pi)
        gc_j, dadv_ej = model.classifier.backward(c_cls_j, dadv_pj)

        # classifier minimizes beta * L_adv
        for t, a, b_ in zip(g_cls, gc_i.blocks(), gc_j.blocks()):
            t += beta * (a + b_) / b

        # embedder minimizes J = alpha*L_sim - beta*L_adv
        dj_ei = (alpha * dsim_ei - beta * dadv_ei) / b
        dj_ej = (alpha * dsim_ej - beta * dadv_ej) / b
        dj_ef = alpha * dsim_ef / b
        for e_grad, (c_head, c_trunk), head_grads in (
            (dj_ei, cache_i, g_view[i]),
            (dj_ej, cache_j, g_view[j]),
            (dj_ef, cache_f, g_pair[(i, j)]),
        ):
            gt, dh = model.trunk.backward(c_trunk, e_grad)
            _accumulate(g_trunk, gt)
            if head_grads is g_view[i]:
                gh, _ = model.view_heads[i].backward(c_head, dh)
            elif head_grads is g_view[j]:
                gh, _ = model.view_heads[j].backward(c_head, dh)
            else:
                gh, _ = model.pair_heads[(i, j)].backward(c_head, dh)
            _accumulate(head_grads, gh)

    embed_grads = list(g_trunk)
    for i in sorted(model.view_heads):
        embed_grads.extend(g_view[i])
    for key in sorted(model.pair_heads):
        embed_grads.extend(g_pair[key])
    return sim_total / b, adv_total / b, embed_grads, g_cls


def minimax_epoch(model, dataset, pairs, batch_size, t_steps, rng):
    """One pass over the inconsistent pairs.

    Per batch: t_steps embedder updates descending alpha*L_sim - beta*L_adv,
    then one classifier update ascending the same objective. Batches are a
    seeded shuffle without replacement. Returns mean losses; a no-op when the
    pair set is empty.
    """
    if not pairs:
        return {"sim": 0.0, "adv": 0.0}
    order = rng.permutation(len(pairs))
    sim_vals, adv_vals = [], []
    for start in range(0, len(pairs), batch_size):
        batch = [pairs[idx] for idx in order[start:start + batch_size]]
        for _ in range(t_steps):
            l_sim, l_adv, embed_grads, _ = _batch_losses_and_grads(
                model, dataset, batch
            )
            if not np.isfinite(l_sim) or not np.isfinite(l_adv):
                raise NumericalError(
                    f"non-finite loss in batch starting at pair {start}"
                )
            adam_step(model.embed_opt, model.embedder_blocks(), embed_grads)
        l_sim, l_adv, _, cls_grads = _batch_losses_and_grads(model, dataset, batch)
        adam_step(model.cls_opt, model.classifier.blocks(), cls_grads)
        sim_vals.append(l_sim)
        adv_vals.append(l_adv)
    return {"sim": float(np.mean(sim_vals)), "adv": float(np.mean(adv_vals))}


def train_reconciler(model, dataset, pairs, epochs, batch_size=32, t_steps=3,
                     seed=0):
    """Run minimax epochs with a seeded shuffle; returns the loss history."""
    rng = np.random.default_rng(seed)
    history = []
    for _ in range(epochs):
        history.append(minimax_epoch(model, dataset, pairs, batch_size, t_steps, rng))
    return history


def _pair_verdict(model, dataset, k, i, j):
    x_f = fuse_pair(dataset.views[i][k], dataset.views[j][k])
    e_f, _ = model.embed_pair(x_f, (i, j))
    p, _ = model.classify(e_f)
    return float(p[0, 0])


def resolve_labels(model, dataset, assignment):
    """Replace every cross-view disagreement with the classifier's verdict on
    the fused pair (>= 0.5 means difficult). Returns a consistent assignment.
    """
    resolved = assignment.copy()
    labels = resolved.labels
    pairs = collect_inconsistent(labels)
    verdicts = {}
    for k, i, j in pairs:
        p = _pair_verdict(model, dataset, k, i, j)
        verdicts[(k, i, j)] = p
        label = 1 if p >= 0.5 else 0
        labels[i, k] = label
        labels[j, k] = label
    # With 3+ views, sequential pair verdicts can leave a sample mixed;
    # fall back to the mean verdict over all its fused pairs.
    leftover = collect_inconsistent(labels)
    for k in sorted({k for k, _, _ in leftover}):
        ps = [p for (kk, _, _), p in verdicts.items() if kk == k]
        label = 1 if np.mean(ps) >= 0.5 else 0
        labels[:, k] = label
    return resolved


def classifier_agreement_rate(model, dataset, pairs):
    """Fraction of pairs whose two members get the same classifier verdict."""
    if not pairs:
        return 1.0
    agree = 0
    for k, i, j in pairs:
        e_i, _ = model.embed_view(dataset.views[i][k:k + 1], i)
        e_j, _ = model.embed_view(dataset.views[j][k:k + 1], j)
        p_i, _ = model.classify(e_i)
        p_j, _ = model.classify(e_j)
        agree += int((p_i[0, 0] >= 0.5) == (p_j[0, 0] >= 0.5))
    return agree / len(pairs)


def similarity_direction_rate(model, dataset, pairs):
    """Diagnostic: fraction of pairs whose fused embedding sits closer to the
    first member than to the second. Logged, never asserted."""
    if not pairs:
        return 0.0
    hits = 0
    for k, i, j in pairs:
        x_f = fuse_pair(dataset.views[i][k], dataset.views[j][k])
        e_f, _ = model.embed_pair(x_f, (i, j))
        e_i, _ = model.embed_view(dataset.views[i][k:k + 1], i)
        e_j, _ = model.embed_view(dataset.views[j][k:k + 1], j)
        d_i = float(((e_f - e_i) ** 2).sum())
        d_j = float(((e_f - e_j) ** 2).sum())
        hits += int(d_i < d_j)
    return hits / len(pairs)


def export_difficulty(raw, resolved, path):
    """CSV dump: sample_index, view, region, raw_label, resolved_label."""
    with open(path, "w") as fh:
        fh.write("sample_index,view,region,raw_label,resolved_label\n")
        for v in range(raw.n_views):
            for k in range(raw.n):
                fh.write(
                    f"{k},{v},{raw.regions[v][k]},"
                    f"{raw.labels[v, k]},{resolved.labels[v, k]}\n"
                )
