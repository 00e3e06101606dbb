"""Embedding network tests against a loop-based reference forward pass."""

import json

import numpy as np
import pytest

from posesim.network import (
    AffineLayer,
    ArchMeta,
    EmbeddingModel,
    copy_model,
    forward,
    forward_mlp_baseline,
    forward_variant,
    gcn_layer_forward,
    init_model,
    load_checkpoint,
    parameter_count,
    parameter_list,
    save_checkpoint,
)
from posesim.skeleton import (
    NUM_KEYPOINTS,
    NormalizedPose,
    Pose,
    build_skeleton_topology,
    normalize_pose,
)


def mat_mul(a, b):
    """Reference matrix product in pure Python."""
    n, k = len(a), len(a[0])
    m = len(b[0])
    assert len(b) == k
    return [[sum(a[i][t] * b[t][j] for t in range(k)) for j in range(m)]
            for i in range(n)]


def relu_rows(rows):
    return [[v if v > 0.0 else 0.0 for v in row] for row in rows]


def ref_forward(model, features, a_norm, use_gcn):
    """Reference embedding computed entirely with Python loops."""
    h = [list(row) for row in features]
    if use_gcn:
        a = [list(row) for row in a_norm]
        for w in model.gcn_weights:
            h = relu_rows(mat_mul(mat_mul(a, h), [list(r) for r in w]))
    flat = [v for row in h for v in row]
    acts = model.arch.mlp_activations
    vec = flat
    for layer, act in zip(model.mlp_layers, acts):
        w = layer.w
        z = [sum(vec[i] * w[i, j] for i in range(len(vec))) + layer.b[j]
             for j in range(w.shape[1])]
        if act == "relu":
            z = [v if v > 0.0 else 0.0 for v in z]
        vec = z
    return np.array(vec)


def random_pose(rng):
    return normalize_pose(Pose(rng.uniform(-4.0, 4.0, size=(NUM_KEYPOINTS, 2))))


class TestInit:
    def test_parameter_count_default_width(self):
        model = init_model(h=2, seed=0)
        assert parameter_count(model) == 5848

    def test_parameter_count_breakdown(self):
        model = init_model(h=2, seed=3)
        sizes = [p.size for p in parameter_list(model)]
        assert sizes == [4, 4, 30 * 40, 40, 40 * 50, 50, 50 * 50, 50]

    def test_same_seed_bit_identical(self):
        a = init_model(h=2, seed=11)
        b = init_model(h=2, seed=11)
        for pa, pb in zip(parameter_list(a), parameter_list(b)):
            assert np.array_equal(pa, pb)

    def test_different_seeds_differ(self):
        a = init_model(h=2, seed=11)
        b = init_model(h=2, seed=12)
        assert not np.array_equal(a.gcn_weights[0], b.gcn_weights[0])

    def test_glorot_bounds_and_zero_biases(self):
        model = init_model(h=3, seed=5)
        fans = [(2, 3), (3, 2), (30, 40), (40, 50), (50, 50)]
        weights = [model.gcn_weights[0], model.gcn_weights[1],
                   *(layer.w for layer in model.mlp_layers)]
        for (fan_in, fan_out), w in zip(fans, weights):
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            assert np.all(np.abs(w) <= bound)
        for layer in model.mlp_layers:
            assert np.all(layer.b == 0.0)

    def test_draw_order_is_canonical(self):
        # Drawing the same five matrices by hand from a fresh generator must
        # reproduce init_model exactly.
        rng = np.random.Generator(np.random.PCG64(7))
        expected = []
        for fan_in, fan_out in [(2, 2), (2, 2), (30, 40), (40, 50), (50, 50)]:
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            expected.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        model = init_model(h=2, seed=7)
        got = [model.gcn_weights[0], model.gcn_weights[1],
               *(layer.w for layer in model.mlp_layers)]
        for e, g in zip(expected, got):
            assert np.array_equal(e, g)

    def test_rejects_zero_width(self):
        with pytest.raises(ValueError):
            init_model(h=0)


class TestModelValidation:
    def test_wrong_gcn_shape_rejected(self):
        model = init_model(h=2, seed=0)
        with pytest.raises(ValueError, match="gcn weight 0"):
            EmbeddingModel((np.zeros((3, 2)), model.gcn_weights[1]),
                           model.mlp_layers, model.arch)

    def test_wrong_mlp_shape_rejected(self):
        model = init_model(h=2, seed=0)
        bad = (model.mlp_layers[0],
               AffineLayer(w=np.zeros((40, 49)), b=np.zeros(50)),
               model.mlp_layers[2])
        with pytest.raises(ValueError, match="mlp weight 1"):
            EmbeddingModel(model.gcn_weights, bad, model.arch)

    def test_non_finite_rejected(self):
        model = init_model(h=2, seed=0)
        w0 = model.gcn_weights[0].copy()
        w0[0, 0] = np.nan
        with pytest.raises(ValueError, match="non-finite"):
            EmbeddingModel((w0, model.gcn_weights[1]), model.mlp_layers, model.arch)

    def test_constructor_copies_arrays(self):
        model = init_model(h=2, seed=0)
        w0 = model.gcn_weights[0].copy()
        rebuilt = EmbeddingModel((w0, model.gcn_weights[1]),
                                 model.mlp_layers, model.arch)
        w0[0, 0] = 99.0
        assert rebuilt.gcn_weights[0][0, 0] != 99.0

    def test_copy_model_is_independent(self):
        model = init_model(h=2, seed=0)
        dup = copy_model(model)
        dup.gcn_weights[0][0, 0] = 42.0
        assert model.gcn_weights[0][0, 0] != 42.0

    def test_arch_rejects_unknown_activation(self):
        with pytest.raises(ValueError):
            ArchMeta(gcn_activation="tanh")

    def test_arch_rejects_foreign_flatten_order(self):
        with pytest.raises(ValueError):
            ArchMeta(flatten_order="feature_major")


class TestGcnLayer:
    def test_matches_reference_on_random_graphs(self):
        rng = np.random.default_rng(21)
        for _ in range(10):
            n, din, dout = rng.integers(2, 8, size=3)
            h_in = rng.normal(size=(n, din))
            a = rng.normal(size=(n, n))
            w = rng.normal(size=(din, dout))
            got = gcn_layer_forward(h_in, a, w)
            want = relu_rows(mat_mul(mat_mul(a.tolist(), h_in.tolist()), w.tolist()))
            np.testing.assert_allclose(got, np.array(want), atol=1e-10)

    def test_identity_activation(self):
        h_in = np.array([[1.0, -2.0], [0.5, 3.0]])
        a = np.eye(2)
        w = np.eye(2)
        got = gcn_layer_forward(h_in, a, w, activation="identity")
        np.testing.assert_array_equal(got, h_in)

    def test_shape_mismatches_rejected(self):
        with pytest.raises(ValueError, match="adjacency"):
            gcn_layer_forward(np.zeros((3, 2)), np.eye(4), np.zeros((2, 2)))
        with pytest.raises(ValueError, match="weight"):
            gcn_layer_forward(np.zeros((3, 2)), np.eye(3), np.zeros((3, 2)))


class TestForward:
    def test_matches_reference_oracle(self):
        topo = build_skeleton_topology()
        rng = np.random.default_rng(33)
        for seed in range(5):
            model = init_model(h=2, seed=seed)
            pose = random_pose(rng)
            emb, _ = forward(model, pose, topo)
            want = ref_forward(model, pose.features.tolist(),
                               topo.adjacency_norm.tolist(), use_gcn=True)
            assert emb.shape == (50,)
            np.testing.assert_allclose(emb, want, atol=1e-10)

    def test_mlp_baseline_matches_reference_oracle(self):
        rng = np.random.default_rng(34)
        for seed in range(5):
            model = init_model(h=2, seed=seed)
            pose = random_pose(rng)
            emb, _ = forward_mlp_baseline(model, pose)
            want = ref_forward(model, pose.features.tolist(), None, use_gcn=False)
            np.testing.assert_allclose(emb, want, atol=1e-10)

    def test_flatten_is_node_major(self):
        topo = build_skeleton_topology()
        model = init_model(h=2, seed=1)
        pose = random_pose(np.random.default_rng(8))
        _, cache = forward(model, pose, topo)
        final = cache.gcn_post[-1]
        for i in range(NUM_KEYPOINTS):
            for j in range(2):
                assert cache.flat[2 * i + j] == final[i, j]

    def test_baseline_flattens_raw_features(self):
        model = init_model(h=2, seed=1)
        pose = random_pose(np.random.default_rng(9))
        _, cache = forward_mlp_baseline(model, pose)
        assert cache.gcn_pre == [] and cache.gcn_post == []
        np.testing.assert_array_equal(cache.flat, pose.features.reshape(-1))

    def test_identity_gcn_weights_reduce_to_adjacency_powers(self):
        # With identity 2x2 graph weights and nonnegative inputs the graph
        # stack collapses to A_norm @ A_norm @ X (entries stay >= 0, so relu
        # never clips).
        topo = build_skeleton_topology()
        base = init_model(h=2, seed=0)
        eye = np.eye(2)
        model = EmbeddingModel((eye, eye), base.mlp_layers, base.arch)
        pose = random_pose(np.random.default_rng(10))
        _, cache = forward(model, pose, topo)
        a2x = topo.adjacency_norm @ topo.adjacency_norm @ pose.features
        np.testing.assert_allclose(cache.gcn_post[-1], a2x, atol=1e-12)
        np.testing.assert_allclose(cache.flat, a2x.reshape(-1), atol=1e-12)

    def test_forward_is_pure(self):
        topo = build_skeleton_topology()
        model = init_model(h=2, seed=2)
        pose = random_pose(np.random.default_rng(11))
        before = [p.copy() for p in parameter_list(model)]
        emb1, _ = forward(model, pose, topo)
        emb2, _ = forward(model, pose, topo)
        np.testing.assert_array_equal(emb1, emb2)
        for old, new in zip(before, parameter_list(model)):
            assert np.array_equal(old, new)

    def test_variant_dispatch(self):
        topo = build_skeleton_topology()
        model = init_model(h=2, seed=3)
        pose = random_pose(np.random.default_rng(12))
        gcn_emb, _ = forward_variant(model, pose, topo, "gcn")
        mlp_emb, _ = forward_variant(model, pose, topo, "mlp")
        np.testing.assert_array_equal(gcn_emb, forward(model, pose, topo)[0])
        np.testing.assert_array_equal(mlp_emb, forward_mlp_baseline(model, pose)[0])
        with pytest.raises(ValueError, match="variant"):
            forward_variant(model, pose, topo, "transformer")

    def test_cache_layers_line_up(self):
        topo = build_skeleton_topology()
        model = init_model(h=2, seed=4)
        pose = random_pose(np.random.default_rng(13))
        emb, cache = forward(model, pose, topo)
        assert len(cache.gcn_pre) == len(cache.gcn_post) == 2
        assert len(cache.mlp_pre) == len(cache.mlp_post) == 3
        np.testing.assert_array_equal(cache.mlp_post[-1], emb)
        # identity output activation: last pre equals last post
        np.testing.assert_array_equal(cache.mlp_pre[-1], cache.mlp_post[-1])

    def test_wider_hidden_layer_runs(self):
        topo = build_skeleton_topology()
        model = init_model(h=16, seed=5)
        pose = random_pose(np.random.default_rng(14))
        emb, cache = forward(model, pose, topo)
        assert emb.shape == (50,)
        assert cache.gcn_pre[0].shape == (NUM_KEYPOINTS, 16)
        want = ref_forward(model, pose.features.tolist(),
                           topo.adjacency_norm.tolist(), use_gcn=True)
        np.testing.assert_allclose(emb, want, atol=1e-10)


class TestCheckpoint:
    def test_round_trip_bit_identical(self):
        model = init_model(h=2, seed=17)
        # perturb away from init to cover non-zero biases
        model.mlp_layers[0].b[:] = np.random.default_rng(1).normal(size=40)
        blob = save_checkpoint(model)
        loaded = load_checkpoint(blob)
        for pa, pb in zip(parameter_list(model), parameter_list(loaded)):
            assert np.array_equal(pa, pb)
        assert loaded.arch == model.arch

    def test_save_is_byte_stable(self):
        model = init_model(h=2, seed=17)
        blob = save_checkpoint(model)
        assert blob == save_checkpoint(load_checkpoint(blob))

    def test_checkpoint_is_valid_json_with_metadata(self):
        model = init_model(h=3, seed=9)
        doc = json.loads(save_checkpoint(model))
        assert doc["format_version"] == 1
        assert doc["arch"]["gcn_hidden"] == 3
        assert doc["arch"]["flatten_order"] == "node_major"
        assert doc["arch"]["activations"] == {"gcn": "relu",
                                              "mlp": ["relu", "relu", "identity"]}
        assert doc["seed"] == 9

    def test_truncated_payload_rejected(self):
        blob = save_checkpoint(init_model(h=2, seed=0))
        with pytest.raises(ValueError, match="malformed"):
            load_checkpoint(blob[: len(blob) // 2])

    def test_non_object_payload_rejected(self):
        with pytest.raises(ValueError, match="malformed"):
            load_checkpoint(b"[1, 2, 3]")

    def test_missing_field_rejected(self):
        doc = json.loads(save_checkpoint(init_model(h=2, seed=0)))
        del doc["gcn_w1"]
        with pytest.raises(ValueError, match="malformed"):
            load_checkpoint(json.dumps(doc).encode())

    def test_unsupported_version_rejected(self):
        doc = json.loads(save_checkpoint(init_model(h=2, seed=0)))
        doc["format_version"] = 2
        with pytest.raises(ValueError, match="format_version"):
            load_checkpoint(json.dumps(doc).encode())

    def test_shape_mismatch_rejected(self):
        doc = json.loads(save_checkpoint(init_model(h=2, seed=0)))
        doc["gcn_w0"] = [[0.0, 0.0]]
        with pytest.raises(ValueError, match="shape"):
            load_checkpoint(json.dumps(doc).encode())

    def test_non_finite_parameter_rejected(self):
        doc = json.loads(save_checkpoint(init_model(h=2, seed=0)))
        doc["mlp"][1]["w"][0][0] = None
        with pytest.raises(ValueError):
            load_checkpoint(json.dumps(doc).encode())

    def test_wrong_layer_count_rejected(self):
        doc = json.loads(save_checkpoint(init_model(h=2, seed=0)))
        doc["mlp"] = doc["mlp"][:2]
        with pytest.raises(ValueError, match="3 mlp layers"):
            load_checkpoint(json.dumps(doc).encode())

    def test_undeclared_hidden_width_rejected(self):
        # weights for h=3 but arch says h=2
        doc = json.loads(save_checkpoint(init_model(h=3, seed=0)))
        doc["arch"]["gcn_hidden"] = 2
        with pytest.raises(ValueError, match="shape"):
            load_checkpoint(json.dumps(doc).encode())
