import os
import torch
import tempfile
import unittest
from unittest.mock import patch
from kgforge.errors import ContractViolation, LoadError
from kgforge.modality import EmbeddingTable, load_table, save_table
from kgforge.numerics import DTYPE


def small_table(modality: str = "sequence", dim: int = 3) -> EmbeddingTable:
    return EmbeddingTable(
        modality=modality,
        dim=dim,
        rows={
            0: torch.tensor([0.1, -2.5, 1e-17][:dim], dtype=DTYPE),
            4: torch.tensor([1.0 / 3.0, 0.0, 7.25][:dim], dtype=DTYPE),
        },
    )


class EmbeddingTableTestCase(unittest.TestCase):
    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.directory.cleanup()

    def path(self, name: str) -> str:
        return os.path.join(self.directory.name, name)

    def assertSameTable(self, a: EmbeddingTable, b: EmbeddingTable):
        self.assertEqual((a.modality, a.dim), (b.modality, b.dim))
        self.assertEqual(sorted(a.rows), sorted(b.rows))
        for node_id, vector in a.rows.items():
            self.assertTrue(torch.equal(vector, b.rows[node_id]))

    def test_binary_and_text_reload_exactly(self):
        table = small_table()
        self.assertSameTable(load_table(save_table(table, self.path("t.kge"))), table)
        self.assertSameTable(load_table(save_table(table, self.path("t.tsv"), binary=False)), table)

    def test_text_format(self):
        path = self.path("seq.tsv")
        with open(path, "w") as f:
            f.write("node_id\tdim=2\tmodality=sequence\n0\t0.5,-1\n2\t1,2\n")
        table = load_table(path, modality="sequence")
        self.assertEqual(len(table), 2)
        self.assertTrue(torch.equal(table.get(0), torch.tensor([0.5, -1.0], dtype=DTYPE)))
        self.assertIsNone(table.get(1))

    def test_short_row_names_the_node(self):
        path = self.path("seq.tsv")
        values = ",".join(["0.0"] * 767)
        with open(path, "w") as f:
            f.write(f"node_id\tdim=768\tmodality=sequence\n42\t{values}\n")
        with self.assertRaises(LoadError) as context:
            load_table(path)
        self.assertIn("42", str(context.exception))
        self.assertEqual(context.exception.line, 2)

    def test_non_finite_values(self):
        path = self.path("seq.tsv")
        with open(path, "w") as f:
            f.write("node_id\tdim=2\tmodality=sequence\n0\tnan,1\n")
        with self.assertRaises(LoadError):
            load_table(path)

    def test_unknown_node_ids_are_skipped(self):
        path = save_table(small_table(), self.path("t.kge"))
        with patch("bittensor.logging.warning") as mock_warning:
            table = load_table(path, num_nodes=3)
            mock_warning.assert_called_once()
        self.assertEqual(sorted(table.rows), [0])
        self.assertEqual(table.skipped, 1)

    def test_wrong_modality(self):
        path = save_table(small_table("description"), self.path("t.kge"))
        with self.assertRaises(LoadError):
            load_table(path, modality="sequence")

    def test_truncated_binary(self):
        path = save_table(small_table(), self.path("t.kge"))
        with open(path, "rb") as f:
            blob = f.read()
        with open(path, "wb") as f:
            f.write(blob[:-8])
        with self.assertRaises(LoadError):
            load_table(path)

    def test_missing_file(self):
        with self.assertRaises(LoadError) as context:
            load_table(self.path("absent.kge"))
        self.assertIn("absent.kge", str(context.exception))

    def test_vectors_must_match_dim(self):
        with self.assertRaises(ContractViolation):
            EmbeddingTable(modality="sequence", dim=3, rows={0: torch.zeros(2, dtype=DTYPE)})


if __name__ == "__main__":
    unittest.main()
