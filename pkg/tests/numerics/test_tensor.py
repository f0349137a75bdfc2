import math
import torch
import unittest
from kgforge.errors import ContractViolation, NumericFault
from kgforge.numerics import DTYPE, ParamStore, as_tensor, check_param_gradients, dropout, forward_backward, row_normalize, scatter_add
from kgforge.fusion import AttentionFusion, RedafFusion
from kgforge.kge import Rgcn
from kgforge.numerics.tensor import store_name


def store_of(**tensors) -> ParamStore:
    store = ParamStore()
    for name, value in tensors.items():
        store.add(name, torch.nn.Parameter(torch.as_tensor(value, dtype=DTYPE)))
    return store


class _WrongSquare(torch.autograd.Function):
    @staticmethod
    def forward(ctx, x):
        ctx.save_for_backward(x)
        return x * x

    @staticmethod
    def backward(ctx, grad):
        (x,) = ctx.saved_tensors
        return grad * x  # should be 2x


class TensorTestCase(unittest.TestCase):
    def test_as_tensor_checks_shape(self):
        self.assertEqual(as_tensor([1, 2, 3, 4, 5, 6], shape=(2, 3)).shape, (2, 3))
        self.assertEqual(as_tensor([1.0]).dtype, torch.float64)
        with self.assertRaises(ContractViolation):
            as_tensor([1, 2, 3], shape=(2, 2))

    def test_store_name(self):
        self.assertEqual(store_name("rgcn", "layer.0.rel.3"), "rgcn/layer0/rel3")
        self.assertEqual(store_name("", "Z"), "Z")

    def test_param_store_rejects_duplicates_and_reserved_names(self):
        store = store_of(w=[1.0])
        with self.assertRaises(ContractViolation):
            store.add("w", torch.nn.Parameter(torch.zeros(1, dtype=DTYPE)))
        with self.assertRaises(ContractViolation):
            store.add("opt/w", torch.nn.Parameter(torch.zeros(1, dtype=DTYPE)))

    def test_quadratic_gradient(self):
        params = store_of(w=[1.0, 2.0])
        forward_backward(lambda: (params["w"] * params["w"]).sum(), params)
        self.assertTrue(torch.equal(params["w"].grad, torch.tensor([2.0, 4.0], dtype=DTYPE)))

    def test_sigmoid_at_zero(self):
        params = store_of(x=[0.0])
        (value,) = forward_backward(lambda: torch.sigmoid(params["x"]).sum(), params)
        self.assertEqual(value.item(), 0.5)
        self.assertEqual(params["x"].grad.item(), 0.25)

    def test_gradients_accumulate_until_zeroed(self):
        params = store_of(w=[1.0, 2.0])
        loss_fn = lambda: (params["w"] * params["w"]).sum()
        forward_backward(loss_fn, params)
        forward_backward(loss_fn, params)
        self.assertTrue(torch.equal(params["w"].grad, torch.tensor([4.0, 8.0], dtype=DTYPE)))
        params.zero_grad()
        forward_backward(loss_fn, params)
        self.assertTrue(torch.equal(params["w"].grad, torch.tensor([2.0, 4.0], dtype=DTYPE)))

    def test_unused_parameter_gets_zero_gradient(self):
        params = store_of(w=[1.0], unused=[3.0, 4.0])
        forward_backward(lambda: params["w"].sum(), params)
        self.assertTrue(torch.equal(params["unused"].grad, torch.zeros(2, dtype=DTYPE)))

    def test_non_scalar_loss_is_a_contract_violation(self):
        params = store_of(w=[1.0, 2.0])
        with self.assertRaises(ContractViolation):
            forward_backward(lambda: params["w"] * 2, params)

    def test_nan_loss_names_the_op(self):
        params = store_of(w=[-1.0, 4.0])
        with self.assertRaises(NumericFault) as context:
            forward_backward(lambda: (torch.sqrt(params["w"]) * 2 + 1).sum(), params)
        self.assertEqual(context.exception.op, "sqrt")
        self.assertIn("[sqrt]", str(context.exception))

    def test_nan_inside_a_module_names_the_op(self):
        layer = torch.nn.Linear(2, 2).to(DTYPE)
        params = ParamStore.from_modules({"layer": layer})
        x = torch.tensor([[1.0, -2.0]], dtype=DTYPE)
        with torch.no_grad():
            layer.weight.fill_(1.0)
            layer.bias.fill_(0.0)
        with self.assertRaises(NumericFault) as context:
            forward_backward(lambda x: torch.log(layer(x)).sum(), params, x)
        self.assertEqual(context.exception.op, "log")

    def test_masked_infinities_are_not_blamed(self):
        params = store_of(w=[0.5, 1.5])

        def loss_fn():
            logits = params["w"].masked_fill(torch.tensor([True, False]), -math.inf)
            return -torch.log_softmax(logits, dim=0)[1]

        (loss,) = forward_backward(loss_fn, params)
        self.assertEqual(loss.item(), 0.0)

    def test_overflow_without_nan_is_attributed_to_the_loss(self):
        params = store_of(w=[1000.0])
        with self.assertRaises(NumericFault) as context:
            forward_backward(lambda: torch.exp(params["w"]).sum(), params)
        self.assertEqual(context.exception.op, "loss")

    def test_non_finite_input_is_rejected(self):
        params = store_of(w=[1.0])
        with self.assertRaises(NumericFault):
            forward_backward(lambda x: (params["w"] * x).sum(), params, torch.tensor([math.inf], dtype=DTYPE))

    def test_softmax_rows_are_distributions(self):
        logits = torch.randn((50, 7), dtype=DTYPE, generator=torch.Generator().manual_seed(0)) * 10
        probabilities = torch.softmax(logits, dim=1)
        self.assertTrue((probabilities > 0).all())
        self.assertLess((probabilities.sum(1) - 1).abs().max().item(), 1e-12)

    def test_every_pipeline_op_matches_finite_differences(self):
        generator = torch.Generator().manual_seed(1)
        params = store_of(
            A=torch.randn((4, 5), dtype=DTYPE, generator=generator),
            B=torch.randn((5, 3), dtype=DTYPE, generator=generator),
            c=torch.randn(3, dtype=DTYPE, generator=generator),
        )
        index = torch.tensor([0, 2, 2, 1])

        def loss_fn():
            hidden = torch.relu(params["A"] @ params["B"] + 0.1)
            joined = torch.cat([torch.tanh(hidden), torch.sigmoid(hidden)], dim=1)
            weights = torch.softmax(joined @ torch.cat([params["c"], params["c"]]).unsqueeze(1), dim=0)
            pooled = scatter_add(row_normalize(joined) * weights, index, 3)
            return dropout(pooled, 0.2, training=False).pow(2).sum() + pooled[index].sum()

        worst = check_param_gradients(loss_fn, params, trials=100, seed=0)
        self.assertLess(worst, 1e-4)

    def test_gradient_check_catches_a_wrong_backward(self):
        params = store_of(w=[1.5, -0.5])
        with self.assertRaises(NumericFault):
            check_param_gradients(lambda: _WrongSquare.apply(params["w"]).sum(), params, trials=10)


class TorchGradcheckTestCase(unittest.TestCase):
    def setUp(self):
        self.generator = torch.Generator().manual_seed(7)

    def randn(self, *shape, requires_grad: bool = True) -> torch.Tensor:
        return torch.randn(shape, dtype=DTYPE, generator=self.generator).requires_grad_(requires_grad)

    def test_rgcn_input_gradients(self):
        model = Rgcn(2, 3, 4, 3, dropout=0.0, seed=5)
        triples = torch.tensor([[0, 0, 1], [1, 1, 2], [2, 0, 3], [3, 1, 4], [4, 0, 0], [1, 0, 3]])
        self.assertTrue(torch.autograd.gradcheck(lambda x: model(x, triples), (self.randn(5, 3),)))

    def test_fusion_input_gradients(self):
        attention = AttentionFusion(3, 4, seed=2)
        redaf = RedafFusion(3, 4, num_contexts=2, seed=3)
        type_ids = torch.tensor([0, 1, 1, 0])
        stack = self.randn(4, 3, 4)
        self.assertTrue(torch.autograd.gradcheck(attention.unified, (stack,)))
        self.assertTrue(torch.autograd.gradcheck(lambda s: redaf.unified(s, type_ids=type_ids), (stack,)))

    def test_agrees_with_check_param_gradients(self):
        A, b = self.randn(4, 3, requires_grad=False), self.randn(4, requires_grad=False)
        params = store_of(w=torch.randn(3, dtype=DTYPE, generator=self.generator))
        loss = lambda w: torch.nn.functional.softplus(A @ w + b).pow(2).sum()
        self.assertTrue(torch.autograd.gradcheck(loss, (params["w"].detach().clone().requires_grad_(True),)))
        self.assertLess(check_param_gradients(lambda: loss(params["w"]), params, trials=30), 1e-4)


if __name__ == "__main__":
    unittest.main()
