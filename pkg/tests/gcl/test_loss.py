import math
import torch
import unittest
import numpy as np
from scipy.spatial.distance import jensenshannon
from kgforge.errors import ConfigurationError, ContractViolation
from kgforge.gcl import DgiHead, GraceHead, dgi_loss, ggd_loss, grace_loss, info_nce, jsd_loss, score_histogram
from kgforge.numerics import DTYPE, make_generator

LN2 = math.log(2.0)


def randn(*shape, seed: int = 0) -> torch.Tensor:
    return torch.randn(shape, generator=make_generator(seed), dtype=DTYPE)


class DgiLossTestCase(unittest.TestCase):
    def test_zero_scores_give_ln2(self):
        h = torch.zeros(4, 3, dtype=DTYPE)
        summary = DgiHead.readout(h)
        self.assertAlmostEqual(dgi_loss(h, h, summary).item(), LN2, places=12)

    def test_separated_scores_approach_zero(self):
        summary = torch.ones(2, dtype=DTYPE)
        real = torch.full((3, 2), 50.0, dtype=DTYPE)
        self.assertLess(dgi_loss(real, -real, summary).item(), 1e-20)

    def test_readout_is_sigmoid_of_mean(self):
        h = torch.tensor([[0.0, 2.0], [2.0, -2.0]], dtype=DTYPE)
        self.assertTrue(torch.equal(DgiHead.readout(h), torch.sigmoid(torch.tensor([1.0, 0.0], dtype=DTYPE))))

    def test_bilinear_head_scores_through_weight(self):
        head = DgiHead(3, bilinear=True, seed=1)
        h, summary = randn(4, 3), randn(3, seed=2)
        self.assertTrue(torch.allclose(head(h, summary), h @ head.weight.detach() @ summary, atol=1e-14))


class GgdLossTestCase(unittest.TestCase):
    def test_single_zero_logit_positive(self):
        h = torch.zeros(2, 2, dtype=DTYPE)
        positive = torch.tensor([[0], [1]])
        empty = torch.zeros((2, 0), dtype=torch.long)
        self.assertAlmostEqual(ggd_loss(h, positive, empty, reduction="sum").item(), LN2, places=12)

    def test_separated_pairs_approach_zero(self):
        h = torch.tensor([[10.0, 0.0], [10.0, 0.0], [-10.0, 0.0]], dtype=DTYPE)
        positive = torch.tensor([[0], [1]])
        negative = torch.tensor([[0], [2]])
        self.assertLess(ggd_loss(h, positive, negative).item(), 1e-40)

    def test_matches_direct_summation(self):
        h = randn(5, 3, seed=3)
        positive = torch.tensor([[0, 1, 2, 3], [1, 2, 3, 4]])
        negative = torch.tensor([[0, 4, 1, 0], [2, 1, 4, 3]])

        def log_sigmoid(x: float) -> float:
            return -math.log1p(math.exp(-x)) if x >= 0 else x - math.log1p(math.exp(x))

        expected = 0.0
        rows = h.tolist()
        for i, j in zip(*positive.tolist()):
            expected -= log_sigmoid(sum(a * b for a, b in zip(rows[i], rows[j])))
        for i, j in zip(*negative.tolist()):
            expected -= log_sigmoid(-sum(a * b for a, b in zip(rows[i], rows[j])))

        self.assertAlmostEqual(ggd_loss(h, positive, negative, reduction="sum").item(), expected, delta=1e-12)
        self.assertAlmostEqual(ggd_loss(h, positive, negative).item(), expected / 8, delta=1e-12)

    def test_empty_positive_set(self):
        with self.assertRaises(ContractViolation):
            ggd_loss(randn(3, 2), torch.zeros((2, 0), dtype=torch.long), torch.tensor([[0], [1]]))

    def test_unknown_reduction(self):
        with self.assertRaises(ConfigurationError):
            ggd_loss(randn(3, 2), torch.tensor([[0], [1]]), torch.tensor([[0], [2]]), reduction="max")


class GraceLossTestCase(unittest.TestCase):
    def test_two_orthogonal_nodes(self):
        z = torch.eye(2, dtype=DTYPE)
        expected = -math.log(math.e / (math.e + 1.0))
        self.assertAlmostEqual(info_nce(z, z, tau=1.0).item(), expected, places=12)
        self.assertAlmostEqual(expected, 0.3133, places=4)

    def test_node_order_does_not_matter(self):
        z1, z2 = randn(6, 4, seed=1), randn(6, 4, seed=2)
        order = torch.tensor([3, 1, 5, 0, 2, 4])
        self.assertAlmostEqual(info_nce(z1, z2, 0.5).item(), info_nce(z1[order], z2[order], 0.5).item(), places=12)

    def test_scaling_and_rotation_leave_loss_unchanged(self):
        z1, z2 = randn(5, 3, seed=4), randn(5, 3, seed=5)
        base = info_nce(z1, z2, 0.5).item()
        self.assertAlmostEqual(info_nce(3.5 * z1, 0.25 * z2, 0.5).item(), base, places=12)
        rotation, _ = torch.linalg.qr(randn(3, 3, seed=6))
        self.assertAlmostEqual(info_nce(z1 @ rotation, z2 @ rotation, 0.5).item(), base, places=12)

    def test_intra_view_negatives_enlarge_the_denominator(self):
        z1, z2 = randn(5, 3, seed=7), randn(5, 3, seed=8)
        self.assertGreater(info_nce(z1, z2, 0.5, intra_view=True).item(), info_nce(z1, z2, 0.5).item())

    def test_temperature_must_be_positive(self):
        with self.assertRaises(ConfigurationError):
            info_nce(randn(2, 2), randn(2, 2), tau=0.0)
        with self.assertRaises(ConfigurationError):
            GraceHead(4, tau=-1.0)

    def test_head_projects_both_views(self):
        head = GraceHead(4, tau=0.5, seed=3)
        h1, h2 = randn(3, 4, seed=1), randn(3, 4, seed=2)
        self.assertEqual(grace_loss(h1, h2, head).item(), info_nce(head(h1), head(h2), 0.5).item())
        self.assertGreaterEqual(grace_loss(h1, h2, head).item(), 0.0)

    def test_views_must_share_nodes(self):
        with self.assertRaises(ContractViolation):
            grace_loss(randn(3, 4), randn(2, 4), GraceHead(4))


class JsdLossTestCase(unittest.TestCase):
    def test_identical_histograms(self):
        p = torch.tensor([0.2, 0.3, 0.5], dtype=DTYPE)
        self.assertEqual(jsd_loss(p, p).item(), 0.0)

    def test_disjoint_support_is_ln2(self):
        p = torch.tensor([0.5, 0.5, 0.0, 0.0], dtype=DTYPE)
        q = torch.tensor([0.0, 0.0, 0.25, 0.75], dtype=DTYPE)
        self.assertAlmostEqual(jsd_loss(p, q).item(), LN2, places=12)

    def test_matches_scipy_and_is_symmetric(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            p, q = rng.random(8), rng.random(8)
            p, q = p / p.sum(), q / q.sum()
            value = jsd_loss(torch.from_numpy(p), torch.from_numpy(q)).item()
            self.assertAlmostEqual(value, jensenshannon(p, q) ** 2, delta=1e-12)
            self.assertAlmostEqual(value, jsd_loss(torch.from_numpy(q), torch.from_numpy(p)).item(), delta=1e-12)
            self.assertTrue(0.0 <= value <= LN2)

    def test_unnormalized_input(self):
        with self.assertRaises(ContractViolation):
            jsd_loss(torch.tensor([0.5, 0.6], dtype=DTYPE), torch.tensor([0.5, 0.5], dtype=DTYPE))

    def test_score_histogram_is_normalized(self):
        histogram = score_histogram(randn(100), bins=10)
        self.assertEqual(histogram.shape, (10,))
        self.assertAlmostEqual(histogram.sum().item(), 1.0, places=12)


if __name__ == "__main__":
    unittest.main()
