import numpy as np
import pytest

import fragscan as fs
from fragscan.activations import identity, softmax, tanh
from fragscan.errors import LayerSizeError

import oracles
from conftest import rand_image, rand_maps

# frozen once from forward_patch itself: desk net, seed-42 weights,
# synthetic_slice(16, seed=9)
GOLDEN_POSTERIOR_F32 = [0.09976515173912048, 0.6844170689582825, 0.21581776440143585]
GOLDEN_POSTERIOR_F64 = [0.099765149738013, 0.6844170531835101, 0.21581779707847695]


class TestConvForwardPatch:
    def test_hand_example(self):
        maps = np.arange(1, 10, dtype=np.float32).reshape(1, 3, 3)
        out = fs.conv_forward_patch(maps, np.ones((1, 1, 2, 2), np.float32), np.zeros(1, np.float32))
        assert out.tolist() == [[[12.0, 16.0], [24.0, 28.0]]]

    def test_identity_layer(self):
        maps = rand_maps((1, 6, 6), seed=1)
        out = fs.conv_forward_patch(maps, np.ones((1, 1, 1, 1), np.float32), np.zeros(1, np.float32))
        assert np.array_equal(out, maps)

    def test_first_layer_shapes(self, table1_net):
        weights = fs.init_weights(table1_net, 0)
        lw = weights.by_layer[1]
        out = fs.conv_forward_patch(rand_maps((1, 95, 95), seed=2), lw.values, lw.bias, tanh)
        assert out.shape == (48, 92, 92)

    def test_map_smaller_than_kernel(self):
        with pytest.raises(LayerSizeError, match="smaller"):
            fs.conv_forward_patch(rand_maps((1, 2, 2)), np.zeros((1, 1, 3, 3), np.float32), np.zeros(1, np.float32))


class TestMaxpoolForwardPatch:
    def test_hand_example(self):
        maps = np.arange(1, 17, dtype=np.float32).reshape(1, 4, 4)
        assert fs.maxpool_forward_patch(maps, 2).tolist() == [[[6.0, 8.0], [14.0, 16.0]]]

    def test_sizes_halve(self):
        out = fs.maxpool_forward_patch(rand_maps((48, 42, 42), seed=3), 2)
        assert out.shape == (48, 21, 21)

    def test_constant_map(self):
        out = fs.maxpool_forward_patch(np.full((2, 6, 6), 1.5, np.float32), 2)
        assert out.shape == (2, 3, 3)
        assert np.all(out == 1.5)

    def test_pool_commutes_with_constant_shift(self):
        maps = rand_maps((2, 6, 6), seed=4)
        shifted = fs.maxpool_forward_patch(maps + np.float32(0.25), 2)
        assert np.allclose(shifted, fs.maxpool_forward_patch(maps, 2) + np.float32(0.25), atol=1e-7)

    def test_indivisible_size_rejected(self):
        with pytest.raises(LayerSizeError, match="divisible"):
            fs.maxpool_forward_patch(rand_maps((1, 5, 5)), 2)


class TestFcForward:
    def test_identity(self):
        vec = rand_maps((6,), seed=5)
        out = fs.fc_forward(vec, np.eye(6, dtype=np.float32), np.zeros(6, np.float32))
        assert np.allclose(out, vec, atol=1e-7)

    def test_softmax_symmetry(self):
        out = fs.fc_forward(
            np.zeros(2, np.float32), np.zeros((2, 2), np.float32), np.zeros(2, np.float32), softmax
        )
        assert out.tolist() == [0.5, 0.5]

    def test_table1_classifier_shapes(self, table1_net):
        weights = fs.init_weights(table1_net, 0)
        lw = weights.by_layer[9]
        out = fs.fc_forward(rand_maps((432,), seed=6), lw.values, lw.bias, tanh)
        assert out.shape == (200,)

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(8)
        vec = rng.standard_normal(10).astype(np.float32)
        matrix = rng.standard_normal((4, 10)).astype(np.float32)
        bias = rng.standard_normal(4).astype(np.float32)
        got = fs.fc_forward(vec, matrix, bias, identity)
        assert np.allclose(got.astype(np.float64), oracles.fc(vec, matrix, bias), atol=1e-5)

    def test_length_mismatch(self):
        with pytest.raises(LayerSizeError, match="length"):
            fs.fc_forward(np.zeros(3, np.float32), np.zeros((2, 4), np.float32), np.zeros(2, np.float32))


class TestForwardPatch:
    def test_zero_weights_uniform_posterior(self, desk_net):
        zero = fs.WeightSet(
            {
                index: fs.LayerWeights(np.zeros(v, np.float32), np.zeros(b, np.float32))
                for index, (v, b) in fs.weight_shapes(desk_net).items()
            }
        )
        post = fs.forward_patch(desk_net, zero, rand_image(desk_net, 16, seed=7))
        assert np.allclose(post, 1.0 / 3.0, atol=1e-7)

    def test_intermediate_sizes_follow_patch_sizes(self, table1_net):
        weights = fs.init_weights(table1_net, 0)
        patch = rand_image(table1_net, 95, seed=8)
        maps_per_layer = dict(fs.iter_patch_maps(table1_net, weights, patch))
        for layer, size in enumerate(table1_net.patch_sizes):
            assert maps_per_layer[layer].shape[-2:] == (size, size)
        assert maps_per_layer[8].shape == (48, 3, 3)

    def test_golden_posterior(self, desk_net):
        weights = fs.init_weights(desk_net, 42)
        post = fs.forward_patch(desk_net, weights, fs.synthetic_slice(16, seed=9))
        assert np.allclose(post, GOLDEN_POSTERIOR_F32, atol=1e-6)

    def test_golden_posterior_f64(self, desk_net):
        with fs.precision("f64"):
            weights = fs.init_weights(desk_net, 42)
            post = fs.forward_patch(desk_net, weights, fs.synthetic_slice(16, seed=9))
        assert post.dtype == np.float64
        assert np.allclose(post, GOLDEN_POSTERIOR_F64, atol=1e-9)

    def test_matches_loop_oracle(self, desk_net, desk_weights):
        patch = rand_image(desk_net, 16, seed=10)
        got = fs.forward_patch(desk_net, desk_weights, patch)
        expected = oracles.forward_net(desk_net, desk_weights, patch)
        assert np.allclose(got.astype(np.float64), expected, atol=2e-5)

    def test_matches_loop_oracle_f64(self, desk_net):
        with fs.precision("f64"):
            weights = fs.init_weights(desk_net, 3)
            patch = rand_image(desk_net, 16, seed=11).astype(np.float64)
            got = fs.forward_patch(desk_net, weights, patch)
            expected = oracles.forward_net(desk_net, weights, patch)
        assert np.allclose(got, expected, atol=1e-12)

    def test_wrong_patch_size(self, desk_net, desk_weights):
        with pytest.raises(LayerSizeError, match="patch"):
            fs.forward_patch(desk_net, desk_weights, rand_image(desk_net, 17, seed=12))


class TestScanNaive:
    def test_single_window_image(self, desk_net, desk_weights):
        image = rand_image(desk_net, 16, seed=13)
        dense = fs.scan_naive(desk_net, desk_weights, image)
        assert (dense.width, dense.height) == (1, 1)
        assert np.array_equal(dense.posteriors[0, 0], fs.forward_patch(desk_net, desk_weights, image))

    def test_output_dimensions_rectangular(self, desk_net, desk_weights):
        dense = fs.scan_naive(desk_net, desk_weights, rand_image(desk_net, 21, 19, seed=14))
        assert (dense.width, dense.height) == (21 - 16 + 1, 19 - 16 + 1)
        assert dense.posteriors.shape == (4, 6, 3)
        assert dense.labels.shape == (4, 6)

    def test_each_pixel_equals_forward_patch_bitwise(self, desk_net, desk_weights):
        image = rand_image(desk_net, 19, seed=15)
        dense = fs.scan_naive(desk_net, desk_weights, image)
        for y in range(dense.height):
            for x in range(dense.width):
                expected = fs.forward_patch(desk_net, desk_weights, fs.crop(image, x, y, 16, 16))
                assert np.array_equal(dense.posteriors[y, x], expected)

    def test_posteriors_sum_to_one(self, desk_net, desk_weights):
        dense = fs.scan_naive(desk_net, desk_weights, rand_image(desk_net, 20, seed=16))
        sums = dense.posteriors.sum(axis=2)
        assert np.allclose(sums, 1.0, atol=1e-6)
        assert np.all(dense.posteriors >= 0) and np.all(dense.posteriors <= 1)

    def test_padded_scan_covers_every_pixel(self):
        net = fs.parse_net("input 1 5\nconv 2 2\nmaxpool 2\nfc 2\n")
        weights = fs.init_weights(net, 1)
        image = rand_image(net, 9, 7, seed=17)
        dense = fs.scan_naive(net, weights, image, pad=True)
        assert (dense.width, dense.height) == (9, 7)
        # center window of the padded image is the plain window at (2, 2)
        unpadded = fs.scan_naive(net, weights, image, pad=False)
        assert np.array_equal(dense.posteriors[2:-2, 2:-2], unpadded.posteriors)

    def test_even_window_cannot_pad(self, desk_net, desk_weights):
        with pytest.raises(LayerSizeError, match="odd"):
            fs.scan_naive(desk_net, desk_weights, rand_image(desk_net, 20, seed=18), pad=True)

    def test_image_smaller_than_window(self, desk_net, desk_weights):
        with pytest.raises(LayerSizeError, match="smaller"):
            fs.scan_naive(desk_net, desk_weights, rand_image(desk_net, 12, seed=19))

    def test_argmax_ties_take_lowest_class(self, desk_net):
        zero = fs.WeightSet(
            {
                index: fs.LayerWeights(np.zeros(v, np.float32), np.zeros(b, np.float32))
                for index, (v, b) in fs.weight_shapes(desk_net).items()
            }
        )
        dense = fs.scan_naive(desk_net, zero, rand_image(desk_net, 18, seed=20))
        # uniform posteriors tie every class; the lowest index must win
        assert np.all(dense.labels == 0)
