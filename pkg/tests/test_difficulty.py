import numpy as np
import pytest

from mvclust.data import MultiViewDataset, NeighborPartition, build_partition
from mvclust.difficulty import (ReconcilerModel, adv_loss, assign_difficulty,
                                assignment_from_partitions, build_reconciler,
                                classifier_agreement_rate, collect_inconsistent,
                                export_difficulty, fuse_pair, minimax_epoch,
                                resolve_labels, sim_loss,
                                _batch_losses_and_grads, train_reconciler)
from mvclust.errors import DataError

from conftest import rel_err


def partition_from_distances(distances, k, anchor=0):
    """Build a 1-D dataset whose anchor distances are exactly ``distances``."""
    pts = np.concatenate([[0.0], distances]).reshape(-1, 1)
    ds = MultiViewDataset([pts, pts.copy()])
    return build_partition(ds, 0, anchor, k)


def test_negative_sample_beyond_boundary_is_easy():
    # distances: P = {1.0}, N = {5.0, 8.0, 10.0}; mu=0.618 => boundary 6.18
    part = partition_from_distances([1.0, 5.0, 8.0, 10.0], k=1)
    labels, regions = assign_difficulty(part, 0.618)
    assert labels[3] == 0  # d=8.0 > 6.18
    assert labels[4] == 0  # d=10.0
    assert labels[2] == 1  # d=5.0 <= 6.18
    assert regions[2] == "N" and regions[1] == "P"


def test_positive_boundary_is_strict():
    # P distances {1.0, 2.0}: d_max(P)=2.0; with mu=0.5 the sample at exactly
    # 1.0 = mu*d_max fails the strict inequality and stays difficult
    part = partition_from_distances([1.0, 2.0, 9.0, 10.0], k=2)
    labels, _ = assign_difficulty(part, 0.5)
    assert labels[1] == 1
    assert labels[2] == 1  # d_max(P) itself can never be < mu*d_max(P)


def test_empty_region_rejected():
    part = partition_from_distances([1.0, 2.0, 3.0], k=3)  # N empty
    with pytest.raises(DataError, match="empty"):
        assign_difficulty(part, 0.618)


def test_difficulty_matches_bruteforce(rng):
    # the two-branch rule re-evaluated naively on random geometries
    for _ in range(50):
        n = int(rng.integers(8, 40))
        dist = np.sort(rng.uniform(0.1, 10.0, size=n - 1))
        k = int(rng.integers(1, n - 1))
        mu = float(rng.uniform(0.1, 0.9))
        part = partition_from_distances(dist, k=k)
        labels, regions = assign_difficulty(part, mu)
        d = part.anchor_distances
        d_max_n = d[part.negative].max()
        d_max_p = d[part.positive].max()
        for s in range(part.n):
            if s == part.anchor_index:
                continue
            if regions[s] == "N":
                expect = 0 if d[s] > mu * d_max_n else 1
            else:
                expect = 0 if d[s] < mu * d_max_p else 1
            assert labels[s] == expect


def test_collect_inconsistent_two_views():
    pairs = collect_inconsistent(np.array([[0, 1], [0, 0]]))
    assert pairs == [(1, 0, 1)]


def test_collect_inconsistent_identical_views():
    assert collect_inconsistent(np.array([[0, 1, 1], [0, 1, 1]])) == []


def test_collect_inconsistent_three_views():
    labels = np.array([[0], [1], [0]])
    pairs = collect_inconsistent(labels)
    assert (0, 0, 1) in pairs
    assert (0, 1, 2) in pairs
    assert (0, 0, 2) not in pairs


def test_fuse_pair_concatenates():
    np.testing.assert_array_equal(fuse_pair([1.0, 2.0], [3.0]), [1.0, 2.0, 3.0])
    np.testing.assert_array_equal(fuse_pair(np.zeros(2), np.zeros(3)), np.zeros(5))


def test_fused_head_lands_in_embedding_width(rng):
    model = build_reconciler([3, 5], rng, embed_width=8)
    fused = fuse_pair(rng.normal(size=3), rng.normal(size=5))
    e, _ = model.embed_pair(fused, (0, 1))
    assert e.shape == (1, 8)


def test_adv_loss_hand_values():
    assert abs(adv_loss([0.9], [0.1], 0.5)
               - (-0.5 * (np.log(0.9) + np.log(0.9)))) < 1e-12
    assert abs(adv_loss([0.5], [0.5], 1.0) - (-(np.log(0.5) + np.log(0.5)))) < 1e-12
    assert adv_loss([0.3], [0.8], 0.0) == 0.0
    assert adv_loss([], [], 0.5) == 0.0


def test_sim_loss_hand_values(rng):
    e = rng.normal(size=(1, 4))
    shift = rng.normal(size=(1, 4))
    shift /= np.linalg.norm(shift)
    # equidistant members: hinge = margin
    assert abs(sim_loss(e + shift, e, e - shift, 0.05) - 0.05) < 1e-12
    # fused embedding much closer to the first member: hinge saturates at 0
    assert sim_loss(e + 0.01 * shift, e, e + 10 * shift, 0.05) == 0.0
    # zero margin, identical embeddings
    assert sim_loss(e, e, e, 0.0) == 0.0


def toy_inconsistent_setup(seed=3, n=40):
    rng = np.random.default_rng(seed)
    views = [rng.normal(size=(n, 6)), rng.normal(size=(n, 4))]
    ds = MultiViewDataset(views)
    parts = [build_partition(ds, v, 0, n // 2) for v in range(2)]
    assignment = assignment_from_partitions(parts, 0.618)
    pairs = collect_inconsistent(assignment.labels)
    return ds, parts, assignment, pairs


def test_minimax_lr_zero_keeps_parameters():
    ds, _, _, pairs = toy_inconsistent_setup()
    assert pairs, "toy setup must produce inconsistent pairs"
    model = build_reconciler([6, 4], np.random.default_rng(0), learning_rate=0.0)
    before = [b.copy() for b in model.embedder_blocks() + model.classifier.blocks()]
    minimax_epoch(model, ds, pairs, batch_size=8, t_steps=2,
                  rng=np.random.default_rng(1))
    after = model.embedder_blocks() + model.classifier.blocks()
    for a, b in zip(after, before):
        np.testing.assert_array_equal(a, b)


def test_minimax_first_order_directions():
    # one fresh optimizer step must move the objective the right way to
    # first order: embedder descends J, classifier ascends it
    ds, _, _, pairs = toy_inconsistent_setup()
    model = build_reconciler([6, 4], np.random.default_rng(0), learning_rate=1e-4)
    batch = pairs[:8]

    _, _, embed_grads, cls_grads = _batch_losses_and_grads(model, ds, batch)
    before_e = [b.copy() for b in model.embedder_blocks()]
    before_c = [b.copy() for b in model.classifier.blocks()]
    minimax_epoch(model, ds, batch, batch_size=8, t_steps=1,
                  rng=np.random.default_rng(1))
    # direction actually taken by the embedder step
    delta_e = [a - b for a, b in zip(model.embedder_blocks(), before_e)]
    dir_deriv_e = sum(float((g * d).sum()) for g, d in zip(embed_grads, delta_e))
    assert dir_deriv_e <= 0.0  # embedder descends J

    # the classifier step descends beta*L_adv, which ascends J
    # (J depends on the classifier only through -beta*L_adv)
    delta_c = [a - b for a, b in zip(model.classifier.blocks(), before_c)]
    dir_deriv_c = sum(float((g * d).sum()) for g, d in zip(cls_grads, delta_c))
    assert dir_deriv_c <= 0.0


def test_minimax_agreement_rises_on_toy_set():
    # scripted reference run: pretraining the classifier alone drives the two
    # members of each pair apart; the minimax game then pulls them together
    ds, _, _, pairs = toy_inconsistent_setup(seed=3)
    assert len(pairs) >= 10
    model = build_reconciler([6, 4], np.random.default_rng(0),
                             learning_rate=3e-3)
    # classifier-only warm-up (no embedder steps)
    train_reconciler(model, ds, pairs, epochs=60, batch_size=16, t_steps=0,
                     seed=7)
    before = classifier_agreement_rate(model, ds, pairs)
    train_reconciler(model, ds, pairs, epochs=200, batch_size=16, t_steps=3,
                     seed=8)
    after = classifier_agreement_rate(model, ds, pairs)
    assert before < 0.6
    assert after > 0.9


def test_resolution_removes_all_disagreements():
    ds, _, assignment, pairs = toy_inconsistent_setup()
    model = build_reconciler([6, 4], np.random.default_rng(0), learning_rate=1e-3)
    train_reconciler(model, ds, pairs, epochs=5, batch_size=16, t_steps=2, seed=2)
    resolved = resolve_labels(model, ds, assignment)
    assert collect_inconsistent(resolved.labels) == []
    # consistent samples keep their original labels
    disagreeing = {k for k, _, _ in pairs}
    for k in range(ds.n):
        if k not in disagreeing:
            assert resolved.labels[0, k] == assignment.labels[0, k]


def test_resolution_noop_without_pairs(rng):
    views = [rng.normal(size=(10, 3)), rng.normal(size=(10, 3))]
    ds = MultiViewDataset(views)
    labels = np.zeros((2, 10), dtype=int)
    from mvclust.difficulty import DifficultyAssignment
    assignment = DifficultyAssignment(
        labels, [np.full(10, "P"), np.full(10, "P")], 0.618)
    model = build_reconciler([3, 3], rng)
    resolved = resolve_labels(model, ds, assignment)
    np.testing.assert_array_equal(resolved.labels, labels)


def test_three_view_resolution_is_total(rng):
    views = [rng.normal(size=(20, 3)), rng.normal(size=(20, 4)),
             rng.normal(size=(20, 5))]
    ds = MultiViewDataset(views)
    parts = [build_partition(ds, v, 0, 10) for v in range(3)]
    assignment = assignment_from_partitions(parts, 0.618)
    model = build_reconciler([3, 4, 5], rng)
    resolved = resolve_labels(model, ds, assignment)
    assert collect_inconsistent(resolved.labels) == []


def test_export_difficulty(tmp_path):
    ds, _, assignment, pairs = toy_inconsistent_setup()
    path = tmp_path / "difficulty.csv"
    export_difficulty(assignment, assignment, str(path))
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "sample_index,view,region,raw_label,resolved_label"
    assert len(lines) == 1 + 2 * ds.n
