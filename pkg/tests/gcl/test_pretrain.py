import os
import torch
import tempfile
import unittest
from unittest.mock import patch
from kgforge.errors import ConfigurationError
from kgforge.fusion import AttentionFusion, MeanFusion
from kgforge.gcl import GclConfig, GcnEncoder, pretrain, write_curve
from kgforge.graph import DRUG, GENE_PROTEIN, homogeneous_subgraph
from kgforge.graph.synthetic import synthetic_graph
from kgforge.modality import modality_stack
from kgforge.numerics import DTYPE, OptimConfig, make_generator
from kgforge.utils import read_csv
from tests.fixtures import random_graph


def community_fixture(num_nodes: int = 90, dim: int = 8, seed: int = 0):
    # drug_drug only, so drugs form a 30-node community graph and the other types are edgeless
    graph, tables = synthetic_graph(
        num_nodes=num_nodes, num_relations=1, num_communities=3, p_in=0.5, p_out=0.02, dim=dim, seed=seed
    )
    stack, _ = modality_stack(graph.num_nodes, tables, seed=seed)
    return graph, stack


def short_run(epochs: int = 60) -> OptimConfig:
    return OptimConfig(learning_rate=0.01, epochs=epochs, warmup_steps=5, patience=epochs)


class PretrainTestCase(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.graph, cls.stack = community_fixture()

    def run_method(self, method: str, seed: int = 0, epochs: int = 60, fusion=None):
        config = GclConfig(method=method, hidden_dim=16, dim=8)
        fusion = fusion or MeanFusion(2, 8)
        return pretrain(self.graph, self.stack, fusion, config, short_run(epochs), seed=seed)

    def assertDescends(self, curve, window: int = 10):
        losses = [loss for _, loss in curve]
        first, last = sum(losses[:window]) / window, sum(losses[-window:]) / window
        self.assertLess(last, first)

    def test_grace_loss_descends(self):
        results = self.run_method("grace")
        self.assertDescends(results[DRUG].curve)

    def test_dgi_loss_descends(self):
        results = self.run_method("dgi", epochs=50)
        self.assertDescends(results[DRUG].curve, window=5)

    def test_ggd_runs_and_records_a_curve(self):
        results = self.run_method("ggd-paper", epochs=20)
        self.assertEqual(len(results[DRUG].curve), 20)
        self.assertTrue(all(loss >= 0 for _, loss in results[DRUG].curve))
        # edgeless types have nothing to reconstruct
        self.assertEqual(results[GENE_PROTEIN].curve, [])

    def test_tables_cover_exactly_their_node_type(self):
        results = self.run_method("grace", epochs=5)
        self.assertEqual(sorted(results), sorted(self.graph.node_types))
        for node_type, result in results.items():
            expected = self.graph.type_index[node_type]
            self.assertEqual(sorted(result.table.rows), sorted(expected))
            self.assertEqual(result.table.dim, 8)
            self.assertEqual(result.table.modality, f"gcl:{node_type}")

    def test_edgeless_type_falls_back_with_a_warning(self):
        with patch("bittensor.logging.warning") as mock_warning:
            results = self.run_method("grace", epochs=5)
        self.assertTrue(results[GENE_PROTEIN].identity_fallback)
        self.assertFalse(results[DRUG].identity_fallback)
        messages = " ".join(str(call.args[0]) for call in mock_warning.call_args_list)
        self.assertIn("identity propagation", messages)

    def test_same_seed_bit_identical_tables(self):
        first = self.run_method("grace", seed=3, epochs=8)
        second = self.run_method("grace", seed=3, epochs=8)
        for node_type, result in first.items():
            other = second[node_type].table.rows
            for node_id, row in result.table.rows.items():
                self.assertTrue(torch.equal(row, other[node_id]))

    def test_none_passes_fused_features_through(self):
        fusion = MeanFusion(2, 8)
        results = self.run_method("none", fusion=fusion)
        unified = fusion.unified(self.stack).detach()
        for result in results.values():
            self.assertEqual(result.curve, [])
            for node_id, row in result.table.rows.items():
                self.assertTrue(torch.equal(row, unified[node_id]))

    def test_fusion_trains_jointly_per_type(self):
        fusion = AttentionFusion(2, 8, seed=0)
        before = fusion.query.detach().clone()
        results = self.run_method("grace", epochs=30, fusion=fusion)
        self.assertTrue(torch.equal(fusion.query.detach(), before))
        self.assertIn("fusion/query", results[DRUG].params)
        self.assertFalse(torch.equal(results[DRUG].fusion.query.detach(), before))

    def test_curve_csv(self):
        results = self.run_method("grace", epochs=3)
        with tempfile.TemporaryDirectory() as directory:
            path = write_curve(os.path.join(directory, "curve.csv"), results[DRUG].curve)
            rows = read_csv(path)
        self.assertEqual([int(row["step"]) for row in rows], [0, 1, 2])
        self.assertEqual(float(rows[0]["loss"]), results[DRUG].curve[0][1])


class SameTypeEdgesTestCase(unittest.TestCase):
    def test_encoders_never_see_cross_type_edges(self):
        graph = random_graph(45, 200)
        same_type = {node_type: set() for node_type in graph.node_types}
        for head, _, tail in graph.triples:
            if graph.node_type(head) == graph.node_type(tail):
                same_type[graph.node_type(head)].add((head, tail))
        self.assertLess(sum(len(pairs) for pairs in same_type.values()), graph.num_triples)
        stack = torch.randn((graph.num_nodes, 2, 8), generator=make_generator(0), dtype=DTYPE)

        original = GcnEncoder.forward
        seen = []

        def recording(encoder, view):
            seen.append((encoder, view.edges.clone(), view.num_nodes))
            return original(encoder, view)

        for method in ("grace", "dgi", "ggd-paper"):
            seen.clear()
            with patch.object(GcnEncoder, "forward", autospec=True, side_effect=recording):
                results = pretrain(
                    graph, stack, MeanFusion(2, 8), GclConfig(method=method, hidden_dim=8, dim=4), short_run(2), seed=0
                )
            owner = {id(result.encoder): node_type for node_type, result in results.items()}
            with self.subTest(method=method):
                self.assertTrue(seen)
                for encoder, edges, num_nodes in seen:
                    node_type = owner[id(encoder)]
                    parents = homogeneous_subgraph(graph, node_type).parent_ids
                    self.assertEqual(num_nodes, len(parents))
                    for head, tail in edges.t().tolist():
                        self.assertIn((parents[head], parents[tail]), same_type[node_type])


class GclConfigTestCase(unittest.TestCase):
    def test_invalid_values_name_their_key(self):
        for kwargs, key in (
            ({"method": "mvgrl"}, "gcl"),
            ({"p_drop": 1.5}, "gcl.p_drop"),
            ({"tau": 0.0}, "gcl.tau"),
            ({"ggd_reduction": "max"}, "gcl.ggd_reduction"),
        ):
            with self.assertRaises(ConfigurationError) as context:
                GclConfig(**kwargs)
            self.assertEqual(context.exception.key, key)


if __name__ == "__main__":
    unittest.main()
