import torch
import unittest
from unittest.mock import patch
from kgforge.errors import ConfigurationError, ContractViolation
from kgforge.numerics import (
    DTYPE,
    OptimConfig,
    ParamStore,
    adam_step,
    clip_gradients,
    dropout,
    fit_warmup,
    make_generator,
    schedule_lr,
)


def store_with_grads(**grads) -> ParamStore:
    store = ParamStore()
    for name, grad in grads.items():
        grad = torch.as_tensor(grad, dtype=DTYPE)
        param = torch.nn.Parameter(torch.ones_like(grad))
        param.grad = grad.clone()
        store.add(name, param)
    return store


class OptimConfigTestCase(unittest.TestCase):
    def test_defaults(self):
        config = OptimConfig()
        self.assertEqual(
            (config.learning_rate, config.batch_size, config.epochs, config.dropout, config.reg_weight),
            (0.001, 128, 100, 0.2, 0.01),
        )
        self.assertEqual((config.max_grad_norm, config.warmup_steps, config.patience), (1.0, 200, 3))

    def test_invalid_values_name_their_key(self):
        for kwargs, key in (
            ({"learning_rate": 0.0}, "optim.learning_rate"),
            ({"dropout": 1.0}, "optim.dropout"),
            ({"patience": -1}, "optim.patience"),
            ({"schedule": "step"}, "optim.schedule"),
        ):
            with self.assertRaises(ConfigurationError) as context:
                OptimConfig(**kwargs)
            self.assertEqual(context.exception.key, key)


class ScheduleTestCase(unittest.TestCase):
    def setUp(self):
        self.config = OptimConfig()

    def test_warmup_end_reaches_base(self):
        self.assertAlmostEqual(schedule_lr(200, self.config, 1200), 0.001, places=15)

    def test_warmup_ramps_linearly(self):
        self.assertEqual(schedule_lr(0, self.config, 1200), 0.0)
        self.assertAlmostEqual(schedule_lr(100, self.config, 1200), 0.0005, places=15)

    def test_cosine_endpoint_and_midpoint(self):
        self.assertEqual(schedule_lr(1200, self.config, 1200), 0.0)
        self.assertAlmostEqual(schedule_lr(700, self.config, 1200), 0.0005, places=15)

    def test_total_not_beyond_warmup_is_a_configuration_error(self):
        with self.assertRaises(ConfigurationError):
            schedule_lr(0, self.config, 200)

    def test_constant_schedule(self):
        config = OptimConfig(schedule="constant")
        self.assertEqual(schedule_lr(5, config, 1000), 0.001)

    def test_fit_warmup_shrinks_for_short_runs(self):
        with patch("bittensor.logging.warning") as mock_warning:
            fitted = fit_warmup(self.config, 50)
            mock_warning.assert_called_once()
        self.assertEqual(fitted.warmup_steps, 5)
        self.assertIs(fit_warmup(self.config, 1000), self.config)
        with self.assertRaises(ConfigurationError):
            fit_warmup(self.config, 0)


class ClipTestCase(unittest.TestCase):
    def test_norm_two_halves_gradients(self):
        store = store_with_grads(a=[2.0, 0.0], b=[0.0, 0.0])
        self.assertAlmostEqual(clip_gradients(store, 1.0), 0.5, places=15)
        self.assertTrue(torch.allclose(store["a"].grad, torch.tensor([1.0, 0.0], dtype=DTYPE)))

    def test_small_norm_is_untouched(self):
        store = store_with_grads(a=[0.3])
        self.assertEqual(clip_gradients(store, 1.0), 1.0)
        self.assertEqual(store["a"].grad.item(), 0.3)

    def test_three_four_vector(self):
        store = store_with_grads(a=[3.0, 4.0])
        clip_gradients(store, 1.0)
        self.assertTrue(torch.allclose(store["a"].grad, torch.tensor([0.6, 0.8], dtype=DTYPE), atol=1e-15))

    def test_missing_gradient(self):
        store = store_with_grads(a=[1.0])
        store["a"].grad = None
        with self.assertRaises(ContractViolation):
            clip_gradients(store, 1.0)


class AdamTestCase(unittest.TestCase):
    def test_first_step_moves_by_learning_rate(self):
        store = store_with_grads(a=[0.5, -3.0, 1e-2])
        adam_step(store, OptimConfig())
        delta = (store["a"].detach() - 1.0).abs()
        self.assertTrue(torch.allclose(delta, torch.full((3,), 0.001, dtype=DTYPE), rtol=1e-4))
        self.assertEqual(store.step, 1)

    def test_zero_gradient_leaves_parameters(self):
        store = store_with_grads(a=[0.0, 0.0])
        adam_step(store, OptimConfig())
        self.assertTrue(torch.equal(store["a"].detach(), torch.ones(2, dtype=DTYPE)))

    def test_missing_gradient(self):
        store = store_with_grads(a=[1.0])
        store["a"].grad = None
        with self.assertRaises(ContractViolation):
            adam_step(store, OptimConfig())

    def test_identical_runs_are_bit_identical(self):
        def run():
            store = store_with_grads(a=[0.0, 0.0, 0.0])
            generator = make_generator(7)
            for _ in range(5):
                store["a"].grad = torch.randn(3, dtype=DTYPE, generator=generator)
                clip_gradients(store, 1.0)
                adam_step(store, OptimConfig(), lr=schedule_lr(store.step, OptimConfig(warmup_steps=2), 10))
            return store["a"].detach().clone()

        self.assertTrue(torch.equal(run(), run()))


class DropoutTestCase(unittest.TestCase):
    def test_eval_mode_is_identity(self):
        x = torch.randn(10, dtype=DTYPE)
        self.assertIs(dropout(x, 0.2, training=False), x)

    def test_survivors_are_scaled(self):
        x = torch.ones(100_000, dtype=DTYPE)
        out = dropout(x, 0.2, training=True, generator=make_generator(0))
        survivors = out[out != 0]
        self.assertTrue(torch.allclose(survivors, torch.full_like(survivors, 1.25)))
        self.assertAlmostEqual(out.mean().item(), 1.0, delta=0.02)

    def test_same_generator_seed_same_mask(self):
        x = torch.ones(64, dtype=DTYPE)
        a = dropout(x, 0.5, training=True, generator=make_generator(3))
        b = dropout(x, 0.5, training=True, generator=make_generator(3))
        self.assertTrue(torch.equal(a, b))

    def test_rate_out_of_range(self):
        with self.assertRaises(ContractViolation):
            dropout(torch.ones(2, dtype=DTYPE), 1.0, training=True)


if __name__ == "__main__":
    unittest.main()
