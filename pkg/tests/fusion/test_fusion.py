import torch
import unittest
from kgforge.errors import ConfigurationError, ContractViolation
from kgforge.fusion import (
    AttentionFusion,
    DefaultFusionConfig,
    FusedEmbedding,
    FusionMethod,
    MeanFusion,
    RedafFusion,
    build_fusion,
    finalize_unified,
    fuse_attention,
    fuse_mean,
    fuse_redaf,
)
from kgforge.modality import ModalityView, Provenance
from kgforge.numerics import DTYPE, ParamStore, check_param_gradients, make_generator


def view_of(*vectors, node_id: int = 0) -> ModalityView:
    return ModalityView(
        node_id=node_id,
        vectors=[(f"m{i}", torch.as_tensor(v, dtype=DTYPE), Provenance.loaded) for i, v in enumerate(vectors)],
    )


def random_stack(n: int, m: int, d: int, seed: int = 0) -> torch.Tensor:
    return torch.randn((n, m, d), generator=make_generator(seed), dtype=DTYPE)


class MeanFusionTestCase(unittest.TestCase):
    def test_two_vectors(self):
        fused = fuse_mean(view_of([1.0, 3.0], [3.0, 1.0]))
        self.assertTrue(torch.equal(fused.vector, torch.tensor([2.0, 2.0], dtype=DTYPE)))
        self.assertTrue(torch.equal(fused.weights, torch.full((2,), 0.5, dtype=DTYPE)))
        self.assertIs(fused.method, FusionMethod.none)

    def test_single_modality_is_identity(self):
        fused = fuse_mean(view_of([0.25, -4.0]))
        self.assertTrue(torch.equal(fused.vector, torch.tensor([0.25, -4.0], dtype=DTYPE)))

    def test_copies_are_idempotent(self):
        v = [0.1, 0.2, 0.3]
        self.assertTrue(torch.allclose(fuse_mean(view_of(v, v, v)).vector, torch.tensor(v, dtype=DTYPE), atol=1e-15))

    def test_empty_view(self):
        with self.assertRaises(ContractViolation):
            fuse_mean(ModalityView(node_id=3, vectors=[]))

    def test_modality_order_does_not_matter(self):
        stack = random_stack(4, 3, 5)
        model = MeanFusion(3, 5)
        a, _, _ = model(stack)
        b, _, _ = model(stack[:, [2, 0, 1]])
        self.assertTrue(torch.allclose(a, b, atol=1e-15))


class AttentionFusionTestCase(unittest.TestCase):
    def test_identical_projections_give_uniform_weights(self):
        model = AttentionFusion(3, 4, seed=1)
        with torch.no_grad():
            for projection in model.projections:
                projection.copy_(model.projections[0])
        fused = fuse_attention(view_of([1.0, 2.0, 3.0, 4.0], [1.0, 2.0, 3.0, 4.0], [1.0, 2.0, 3.0, 4.0]), model)
        self.assertTrue(torch.allclose(fused.weights, torch.full((3,), 1 / 3, dtype=DTYPE), atol=1e-15))

    def test_zero_query_gives_uniform_weights(self):
        model = AttentionFusion(2, 3, out_dim=5, seed=2)
        with torch.no_grad():
            model.query.zero_()
        fused = fuse_attention(view_of([1.0, 0.0, 9.0], [-3.0, 2.0, 0.5]), model)
        self.assertTrue(torch.equal(fused.weights, torch.full((2,), 0.5, dtype=DTYPE)))
        self.assertEqual(fused.vector.shape, (5,))
        self.assertEqual(fused.mean.shape, (5,))

    def test_weights_live_in_the_open_simplex(self):
        model = AttentionFusion(3, 6, seed=0)
        _, weights, _ = model(random_stack(100, 3, 6, seed=4))
        self.assertTrue((weights > 0).all())
        self.assertTrue(torch.allclose(weights.sum(dim=1), torch.ones(100, dtype=DTYPE), atol=1e-9))

    def test_permuting_modalities_permutes_weights(self):
        model = AttentionFusion(3, 4, seed=5)
        stack = random_stack(6, 3, 4, seed=5)
        order = [1, 2, 0]
        weighted, weights, _ = model(stack)
        with torch.no_grad():
            permuted = AttentionFusion(3, 4, seed=5)
            for slot, source in enumerate(order):
                permuted.projections[slot].copy_(model.projections[source])
            permuted.query.copy_(model.query)
        weighted_p, weights_p, _ = permuted(stack[:, order])
        self.assertTrue(torch.allclose(weights_p, weights[:, order], atol=1e-14))
        self.assertTrue(torch.allclose(weighted_p, weighted, atol=1e-14))

    def test_gradients_match_finite_differences(self):
        model = AttentionFusion(2, 4, out_dim=3, seed=7)
        stack = random_stack(5, 2, 4, seed=8)
        params = ParamStore.from_modules({"fusion/attention": model})
        worst = check_param_gradients(lambda: model.unified(stack).pow(2).sum(), params, trials=100)
        self.assertLess(worst, 1e-4)

    def test_wrong_dimension(self):
        model = AttentionFusion(2, 4)
        with self.assertRaises(ContractViolation):
            model(random_stack(1, 2, 3))


class RedafFusionTestCase(unittest.TestCase):
    def test_zero_gate_gives_uniform_weights(self):
        model = RedafFusion(2, 3, num_contexts=2, num_nodes=4)
        with torch.no_grad():
            model.gate.zero_()
        fused = fuse_redaf(view_of([1.0, 2.0, 3.0], [0.0, 0.0, 1.0], node_id=2), 1, model)
        self.assertTrue(torch.allclose(fused.weights, torch.full((3,), 1 / 3, dtype=DTYPE), atol=1e-15))

    def test_lower_temperature_sharpens(self):
        model = RedafFusion(3, 4, num_contexts=1, seed=3)
        stack = random_stack(1, 3, 4, seed=3)
        previous = 0.0
        for zeta in [4.0, 2.0, 0.0, -1.0, -2.0, -4.0, -8.0]:
            with torch.no_grad():
                model.temperature.fill_(zeta)
                _, weights, _ = model(stack)
            top = weights.max().item()
            self.assertGreaterEqual(top, previous - 1e-15)
            previous = top

    def test_weights_sum_to_one(self):
        for trial in range(100):
            model = RedafFusion(3, 5, num_contexts=3, seed=trial)
            type_ids = torch.tensor([trial % 3, (trial + 1) % 3], dtype=torch.long)
            _, weights, _ = model(random_stack(2, 3, 5, seed=trial), type_ids=type_ids)
            self.assertTrue(torch.allclose(weights.sum(dim=1), torch.ones(2, dtype=DTYPE), atol=1e-9))
            self.assertTrue((weights > 0).all())

    def test_structural_member_needs_node_ids(self):
        model = RedafFusion(2, 3, num_contexts=1, num_nodes=5)
        self.assertEqual(model.num_members, 3)
        with self.assertRaises(ContractViolation):
            model(random_stack(2, 2, 3))

    def test_context_out_of_range(self):
        model = RedafFusion(2, 3, num_contexts=2)
        with self.assertRaises(ContractViolation):
            model(random_stack(1, 2, 3), type_ids=torch.tensor([2]))

    def test_empty_batch(self):
        model = RedafFusion(2, 3, num_contexts=2, num_nodes=4)
        empty = random_stack(0, 2, 3)
        weighted, weights, mean = model(empty, torch.zeros(0, dtype=torch.long), torch.zeros(0, dtype=torch.long))
        self.assertEqual(weighted.shape, (0, 3))
        self.assertEqual(weights.shape, (0, 3))
        self.assertEqual(mean.shape, (0, 3))
        self.assertEqual(model.unified(empty).shape, (0, 3))

    def test_gradients_match_finite_differences(self):
        model = RedafFusion(3, 4, num_contexts=2, num_nodes=6, seed=11)
        stack = random_stack(6, 3, 4, seed=12)
        node_ids = torch.arange(6)
        type_ids = node_ids % 2
        params = ParamStore.from_modules({"fusion/redaf": model})
        worst = check_param_gradients(
            lambda: model.unified(stack, node_ids, type_ids).pow(2).sum(), params, trials=100
        )
        self.assertLess(worst, 1e-4)


class FinalizeUnifiedTestCase(unittest.TestCase):
    def test_mean_method_is_identity(self):
        vector = torch.tensor([1.0, 2.0], dtype=DTYPE)
        fused = FusedEmbedding(vector=vector, weights=torch.ones(1, dtype=DTYPE), method=FusionMethod.none)
        self.assertIs(finalize_unified(fused), vector)

    def test_weighted_and_mean_are_averaged(self):
        fused = FusedEmbedding(
            vector=torch.tensor([2.0, 0.0], dtype=DTYPE),
            weights=torch.tensor([0.5, 0.5], dtype=DTYPE),
            method=FusionMethod.attention,
            mean=torch.tensor([0.0, 4.0], dtype=DTYPE),
        )
        self.assertTrue(torch.equal(finalize_unified(fused), torch.tensor([1.0, 2.0], dtype=DTYPE)))

    def test_batched_unified_matches_per_node(self):
        model = AttentionFusion(2, 3, out_dim=4, seed=0)
        stack = random_stack(3, 2, 3, seed=1)
        unified = model.unified(stack)
        self.assertEqual(unified.shape, (3, 4))
        for node_id in range(3):
            single = finalize_unified(model.fuse_one(stack[node_id], node_id=node_id))
            self.assertTrue(torch.allclose(unified[node_id], single, atol=1e-14))


class BuildFusionTestCase(unittest.TestCase):
    def test_methods(self):
        self.assertIsInstance(build_fusion(DefaultFusionConfig(), 2, 8, 3, 10, seed=0), MeanFusion)
        attention = build_fusion(DefaultFusionConfig(method="attention", dim=4), 2, 8, 3, 10, seed=0)
        self.assertEqual(attention.out_dim, 4)
        redaf = build_fusion(DefaultFusionConfig(method="redaf", structural=True), 2, 8, 3, 10, seed=0)
        self.assertEqual(redaf.structural.shape, (10, 8))
        self.assertEqual(redaf.temperature.shape, (3,))

    def test_same_seed_same_parameters(self):
        a = build_fusion(DefaultFusionConfig(method="attention"), 2, 4, 1, 1, seed=9)
        b = build_fusion(DefaultFusionConfig(method="attention"), 2, 4, 1, 1, seed=9)
        self.assertTrue(torch.equal(a.query, b.query))

    def test_unknown_method(self):
        with self.assertRaises(ConfigurationError) as context:
            DefaultFusionConfig(method="concat")
        self.assertEqual(context.exception.key, "fusion")


if __name__ == "__main__":
    unittest.main()
