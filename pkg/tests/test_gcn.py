import numpy as np
import pytest

from tcprune.data import synth_dataset
from tcprune.errors import DivergenceError, DomainError, ShapeError
from tcprune.gcn import (
    GcnModel,
    GcnShape,
    ParamMasks,
    TrainConfig,
    apply_param_masks,
    as_layered,
    copy_model,
    evaluate,
    forward_batch,
    gcn_forward,
    init_model,
    load_model,
    loss_and_grads,
    save_model,
    train,
    view_mask_to_param_masks,
)
from tcprune.network import MaskTensor, full_mask
from tcprune.pruner import PruneSpec, tc_mp

TINY = GcnShape(heads=2, nodes=3, signal_dim=3, filters=2, num_classes=2)


def tiny_batch(rng, count=8):
    signals = rng.standard_normal((count, TINY.signal_dim, TINY.nodes))
    labels = rng.integers(0, TINY.num_classes, count)
    return signals, labels


def numeric_gradient(model, arr, signals, labels, step=1e-5):
    grad = np.zeros_like(arr)
    it = np.nditer(arr, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = arr[idx]
        arr[idx] = orig + step
        up, _ = loss_and_grads(model, signals, labels)
        arr[idx] = orig - step
        down, _ = loss_and_grads(model, signals, labels)
        arr[idx] = orig
        grad[idx] = (up - down) / (2 * step)
    return grad


class TestForward:
    def test_probabilities_sum_to_one(self, rng):
        model = init_model(TINY, seed=0)
        probs = gcn_forward(model, rng.standard_normal((3, 3)))
        assert probs.shape == (2,)
        assert (probs >= 0).all()
        assert abs(probs.sum() - 1.0) <= 1e-9

    def test_zero_signal_gives_uniform(self):
        model = init_model(TINY, seed=1)
        probs = gcn_forward(model, np.zeros((3, 3)))
        assert np.allclose(probs, 0.5)

    def test_single_head_identity_reduction(self, rng):
        shape = GcnShape(heads=1, nodes=3, signal_dim=3, filters=3, num_classes=9)
        model = GcnModel(
            shape,
            np.eye(3)[None],
            np.eye(3)[None],
            np.eye(9),
        )
        u = rng.standard_normal((3, 3))
        want = np.maximum(u.T, 0.0).reshape(9)
        z = np.exp(want - want.max())
        assert np.allclose(gcn_forward(model, u), z / z.sum())

    def test_against_per_node_loop(self, rng):
        model = init_model(TINY, seed=2)
        u = rng.standard_normal((3, 3))
        hidden = np.zeros((3, 2))
        for i in range(3):
            for c in range(2):
                acc = 0.0
                for k in range(2):
                    for m in range(3):
                        for j in range(3):
                            acc += model.attention[k, i, j] * u[m, j] * model.conv[k, m, c]
                hidden[i, c] = max(acc, 0.0)
        logits = model.head.T @ hidden.reshape(6)
        z = np.exp(logits - logits.max())
        assert np.abs(gcn_forward(model, u) - z / z.sum()).max() <= 1e-10

    def test_shape_validation(self, rng):
        model = init_model(TINY, seed=0)
        with pytest.raises(ShapeError):
            gcn_forward(model, rng.standard_normal((4, 3)))


class TestGradients:
    def test_matches_central_differences(self, rng):
        model = init_model(TINY, seed=3)
        signals, labels = tiny_batch(rng)
        _, (g_attn, g_conv, g_head) = loss_and_grads(model, signals, labels)
        for analytic, arr in (
            (g_attn, model.attention),
            (g_conv, model.conv),
            (g_head, model.head),
        ):
            numeric = numeric_gradient(model, arr, signals, labels)
            denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-6)
            assert (np.abs(analytic - numeric) / denom).max() <= 1e-4


class TestTraining:
    def test_zero_learning_rate_changes_nothing(self, rng):
        dataset = synth_dataset(2, 4, 3, 6, seed=0)
        shape = GcnShape(heads=2, nodes=3, signal_dim=3, filters=2, num_classes=2)
        model = init_model(shape, seed=0)
        cfg = TrainConfig(epochs=5, initial_lr=1e-12, seed=0)
        trained, losses = train(model, dataset, cfg)
        assert len(losses) == 5
        assert np.allclose(trained.attention, model.attention, atol=1e-10)
        assert np.abs(np.diff(losses)).max() <= 1e-9

    def test_loss_decreases(self):
        dataset = synth_dataset(2, 10, 3, 6, seed=1, noise=0.1)
        shape = GcnShape(heads=2, nodes=3, signal_dim=3, filters=4, num_classes=2)
        trained, losses = train(init_model(shape, 0), dataset, TrainConfig(epochs=60, seed=0))
        assert losses[-1] < losses[0]

    def test_masked_parameters_stay_exactly_zero(self, rng):
        dataset = synth_dataset(2, 6, 3, 6, seed=2)
        shape = GcnShape(heads=2, nodes=3, signal_dim=3, filters=2, num_classes=2)
        model = init_model(shape, seed=1)
        masks = ParamMasks(
            rng.random((2, 3, 3)) < 0.5,
            rng.random((2, 3, 2)) < 0.5,
            rng.random((6, 2)) < 0.5,
        )
        trained, _ = train(model, dataset, TrainConfig(epochs=100, seed=0), masks)
        assert (trained.attention[~masks.attention] == 0.0).all()
        assert (trained.conv[~masks.conv] == 0.0).all()
        assert (trained.head[~masks.head] == 0.0).all()
        # surviving weights actually moved
        assert not np.allclose(trained.head[masks.head], model.head[masks.head])

    def test_input_model_never_mutated(self):
        dataset = synth_dataset(2, 4, 3, 6, seed=3)
        shape = GcnShape(heads=1, nodes=3, signal_dim=3, filters=2, num_classes=2)
        model = init_model(shape, seed=2)
        before = [model.attention.copy(), model.conv.copy(), model.head.copy()]
        train(model, dataset, TrainConfig(epochs=10, seed=0))
        assert np.array_equal(model.attention, before[0])
        assert np.array_equal(model.conv, before[1])
        assert np.array_equal(model.head, before[2])

    def test_divergence_reports_epoch(self):
        dataset = synth_dataset(2, 4, 3, 6, seed=4)
        shape = GcnShape(heads=1, nodes=3, signal_dim=3, filters=2, num_classes=2)
        model = init_model(shape, seed=0)
        broken = GcnModel(shape, 1e300 * np.ones_like(model.attention), model.conv, model.head)
        with pytest.raises(DivergenceError) as exc:
            train(broken, dataset, TrainConfig(epochs=3, seed=0))
        assert exc.value.epoch == 0

    def test_empty_dataset_rejected(self):
        with pytest.raises(DomainError):
            train(init_model(TINY, 0), [], TrainConfig(epochs=1))


class TestEvaluate:
    def test_balanced_accuracy_of_constant_predictor(self):
        dataset = synth_dataset(2, 10, 3, 6, seed=5)
        shape = GcnShape(heads=1, nodes=3, signal_dim=3, filters=2, num_classes=2)
        model = init_model(shape, seed=0)
        constant = GcnModel(
            shape,
            np.zeros_like(model.attention),
            np.zeros_like(model.conv),
            np.zeros_like(model.head),
        )
        assert evaluate(constant, dataset) == pytest.approx(0.5)

    def test_invariant_under_shuffling(self, rng):
        dataset = synth_dataset(3, 6, 3, 6, seed=6)
        shape = GcnShape(heads=2, nodes=3, signal_dim=3, filters=2, num_classes=3)
        model = init_model(shape, seed=1)
        shuffled = list(dataset)
        rng.shuffle(shuffled)
        assert evaluate(model, dataset) == pytest.approx(evaluate(model, shuffled))

    def test_memorization_after_calibration_run(self):
        dataset = synth_dataset(2, 8, 6, 10, seed=7, noise=0.3)
        shape = GcnShape(heads=2, nodes=6, signal_dim=6, filters=4, num_classes=2)
        trained, _ = train(init_model(shape, 0), dataset, TrainConfig(epochs=150, seed=0))
        assert evaluate(trained, dataset) >= 0.95


class TestLayeredView:
    def test_requires_signal_dim_equal_nodes(self):
        shape = GcnShape(heads=2, nodes=4, signal_dim=6, filters=2, num_classes=2)
        with pytest.raises(DomainError):
            as_layered(init_model(shape, 0))

    def test_view_dims_and_parameter_count(self):
        model = init_model(TINY, seed=0)
        view, index_map = as_layered(model)
        k, n, s, c, q = 2, 3, 3, 2, 2
        assert view.dims == (n, k * n, n * c, q)
        assert index_map.parameter_count == k * n * n + k * s * c + n * c * q
        assert index_map.view_dims() == view.dims

    def test_every_parameter_has_exactly_one_view_slot(self):
        model = init_model(TINY, seed=1)
        view, index_map = as_layered(model)
        seen = {}
        for layer, w in enumerate(view.weights, start=1):
            for r in range(w.shape[0]):
                for col in range(w.shape[1]):
                    param = index_map.param_at(layer, r, col)
                    if param is None:
                        assert w[r, col] == 0.0  # structural zero
                        continue
                    assert param not in seen
                    seen[param] = w[r, col]
        assert len(seen) == index_map.parameter_count
        for (kind, *idx), value in seen.items():
            arrays = {"attention": model.attention, "conv": model.conv, "head": model.head}
            assert arrays[kind][tuple(idx)] == value

    def test_position_map_round_trip(self):
        model = init_model(TINY, seed=2)
        _, index_map = as_layered(model)
        for kind, idx in (
            ("attention", (1, 2, 0)),
            ("conv", (0, 1, 1)),
            ("head", (4, 1)),
        ):
            layer, r, c = index_map.view_position(kind, *idx)
            assert index_map.param_at(layer, r, c) == (kind, *idx)

    def test_all_ones_mask_keeps_forward_unchanged(self, rng):
        model = init_model(TINY, seed=3)
        view, _ = as_layered(model)
        params = view_mask_to_param_masks(full_mask(view), model.shape)
        masked = apply_param_masks(model, params)
        u = rng.standard_normal((3, 3))
        assert np.array_equal(gcn_forward(model, u), gcn_forward(masked, u))

    def test_mask_round_trip_through_params(self, rng):
        model = init_model(TINY, seed=4)
        view, index_map = as_layered(model)
        mask = MaskTensor(tuple(rng.random(w.shape) < 0.5 for w in view.weights))
        params = view_mask_to_param_masks(mask, model.shape)
        for layer, m in enumerate(mask.masks, start=1):
            for r in range(m.shape[0]):
                for col in range(m.shape[1]):
                    param = index_map.param_at(layer, r, col)
                    if param is None:
                        continue
                    kind, *idx = param
                    arrays = {"attention": params.attention, "conv": params.conv, "head": params.head}
                    assert arrays[kind][tuple(idx)] == m[r, col]

    def test_chain_mask_keeps_real_signal_alive(self, rng):
        # a consistent chain through the view maps to parameters that form a
        # complete multiplicative path in the model itself; with positive
        # weights and inputs nothing can cancel, so the output must move
        shape = GcnShape(heads=2, nodes=3, signal_dim=3, filters=2, num_classes=2)
        model = GcnModel(
            shape,
            np.abs(rng.standard_normal((2, 3, 3))) + 0.1,
            np.abs(rng.standard_normal((2, 3, 2))) + 0.1,
            np.abs(rng.standard_normal((6, 2))) + 0.1,
        )
        view, _ = as_layered(model)
        mask = tc_mp(view, PruneSpec(rate=0.9, tc=True, seed=0))
        masked = apply_param_masks(model, view_mask_to_param_masks(mask, shape))
        signals = np.stack([np.abs(rng.standard_normal((3, 3))) + 0.5 for _ in range(6)])
        probs, _ = forward_batch(masked, signals)
        assert np.abs(probs - 0.5).max() > 1e-6  # output depends on the input


class TestPersistence:
    def test_model_round_trip(self, tmp_path):
        model = init_model(TINY, seed=5)
        path = tmp_path / "model.json"
        save_model(model, path)
        back = load_model(path)
        assert back.shape == model.shape
        assert np.array_equal(back.attention, model.attention)
        assert np.array_equal(back.conv, model.conv)
        assert np.array_equal(back.head, model.head)

    def test_copy_is_independent(self):
        model = init_model(TINY, seed=6)
        dup = copy_model(model)
        dup.attention[0, 0, 0] += 1.0
        assert model.attention[0, 0, 0] != dup.attention[0, 0, 0]
