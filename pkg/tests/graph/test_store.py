import os
import tempfile
import unittest
from collections import Counter
from unittest.mock import patch
from kgforge.errors import ContractViolation, LoadError
from kgforge.graph import DRUG, GENE_PROTEIN, Triple, homogeneous_subgraph, load_graph, restrict_triples, save_graph
from tests.fixtures import make_graph

NODES = (
    "node_id\texternal_id\tnode_type\tsubtype\tname\n"
    "0\tDB001\tdrug\tmolecule\taspirin\n"
    "1\tP001\tgene/protein\t\tPTGS1\n"
    "2\tMONDO1\tdisease\t\tpain\n"
)


class LoadGraphTestCase(unittest.TestCase):
    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.nodes = os.path.join(self.directory.name, "nodes.tsv")
        self.triples = os.path.join(self.directory.name, "triples.tsv")
        with open(self.nodes, "w") as f:
            f.write(NODES)

    def tearDown(self):
        self.directory.cleanup()

    def write_triples(self, *rows):
        with open(self.triples, "w") as f:
            f.write("head_id\trelation_name\ttail_id\n")
            for row in rows:
                f.write(row + "\n")

    def test_fixture_counts(self):
        self.write_triples("0\tdrug_protein\t1", "1\tprotein_disease\t2")
        graph = load_graph(self.nodes, self.triples)
        self.assertEqual((graph.num_nodes, graph.num_relations, graph.num_triples), (3, 2, 2))
        self.assertEqual(graph.nodes[0].subtype, "molecule")
        self.assertIsNone(graph.nodes[1].subtype)
        self.assertEqual(graph.relation_id("protein_disease"), 1)

    def test_duplicate_triple_is_dropped_and_counted(self):
        self.write_triples("0\tdrug_protein\t1", "0\tdrug_protein\t1")
        with patch("bittensor.logging.warning") as mock_warning:
            graph = load_graph(self.nodes, self.triples)
            mock_warning.assert_called_once()
        self.assertEqual(graph.num_triples, 1)
        self.assertEqual(graph.duplicate_count, 1)

    def test_unknown_node_names_the_row(self):
        self.write_triples("0\tdrug_protein\t1", "0\tdrug_protein\t7")
        with self.assertRaises(LoadError) as context:
            load_graph(self.nodes, self.triples)
        self.assertEqual(context.exception.line, 3)
        self.assertIn("7", str(context.exception))

    def test_malformed_row(self):
        self.write_triples("0\tdrug_protein")
        with self.assertRaises(LoadError) as context:
            load_graph(self.nodes, self.triples)
        self.assertEqual(context.exception.line, 2)

    def test_bad_header(self):
        with open(self.triples, "w") as f:
            f.write("h\tr\tt\n")
        with self.assertRaises(LoadError):
            load_graph(self.nodes, self.triples)

    def test_save_then_load_is_identity(self):
        self.write_triples("0\tdrug_protein\t1", "1\tprotein_disease\t2", "0\tdrug_disease\t2")
        graph = load_graph(self.nodes, self.triples)
        nodes, triples = os.path.join(self.directory.name, "n2.tsv"), os.path.join(self.directory.name, "t2.tsv")
        save_graph(graph, nodes, triples)
        reloaded = load_graph(nodes, triples)
        self.assertEqual(reloaded.nodes, graph.nodes)
        self.assertEqual(reloaded.relations, graph.relations)
        self.assertEqual(Counter(reloaded.triples), Counter(graph.triples))


class KnowledgeGraphTestCase(unittest.TestCase):
    def test_triples_must_reference_known_ids(self):
        graph = make_graph(3, [])
        with self.assertRaises(ContractViolation):
            make_graph(3, [(0, 0, 5)])
        self.assertEqual(graph.num_triples, 0)

    def test_adjacency_reconstructs_triples(self):
        graph = make_graph(6, [(0, 0, 1), (1, 1, 2), (0, 2, 3), (4, 0, 5), (5, 1, 0)])
        from_out = {Triple(h, r, t) for h, neighbors in enumerate(graph.out_neighbors) for r, t in neighbors}
        from_in = {Triple(h, r, t) for t, neighbors in enumerate(graph.in_neighbors) for r, h in neighbors}
        self.assertEqual(from_out, set(graph.triples))
        self.assertEqual(from_in, set(graph.triples))
        pointer, tails = graph.out_csr
        self.assertEqual(sorted(tails[pointer[0] : pointer[1]].tolist()), [1, 3])

    def test_relation_types(self):
        graph = make_graph(6, [(0, 0, 1), (3, 0, 4), (1, 1, 2)])
        self.assertEqual(graph.relation_types[0], ((DRUG,), (GENE_PROTEIN,)))


class HomogeneousSubgraphTestCase(unittest.TestCase):
    def setUp(self):
        # drugs are 0, 3, 6; proteins 1, 4, 7
        self.graph = make_graph(9, [(0, 0, 3), (3, 0, 6), (0, 1, 1), (4, 2, 7), (6, 1, 4)])

    def test_only_same_type_edges_survive(self):
        drugs = homogeneous_subgraph(self.graph, DRUG)
        self.assertEqual(drugs.parent_ids, [0, 3, 6])
        parents = {Triple(drugs.parent_ids[h], r, drugs.parent_ids[t]) for h, r, t in drugs.triples}
        brute_force = {
            triple
            for triple in self.graph.triples
            if self.graph.node_type(triple.head) == DRUG and self.graph.node_type(triple.tail) == DRUG
        }
        self.assertEqual(parents, brute_force)

    def test_type_without_same_type_edges(self):
        diseases = homogeneous_subgraph(self.graph, "disease")
        self.assertEqual(diseases.num_nodes, 3)
        self.assertEqual(diseases.num_triples, 0)

    def test_unknown_type_is_empty(self):
        other = homogeneous_subgraph(self.graph, "anatomy")
        self.assertEqual((other.num_nodes, other.num_triples), (0, 0))

    def test_parent_mapping_is_injective(self):
        proteins = homogeneous_subgraph(self.graph, GENE_PROTEIN)
        self.assertEqual(len(set(proteins.parent_ids)), proteins.num_nodes)

    def test_restrict_triples_keeps_nodes(self):
        restricted = restrict_triples(self.graph, [0, 2])
        self.assertEqual(restricted.num_nodes, self.graph.num_nodes)
        self.assertEqual(restricted.triples, [self.graph.triples[0], self.graph.triples[2]])


if __name__ == "__main__":
    unittest.main()
