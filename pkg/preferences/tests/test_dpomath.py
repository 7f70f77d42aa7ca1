import math
import os
from fractions import Fraction

import numpy as np
from django.test import SimpleTestCase

from preferences.services.dpomath import (
    DomainError,
    DpoBatch,
    EmptyMask,
    LengthMismatch,
    gradient_check,
    masked_logratio,
    mean_loss,
    mean_pass_at_k,
    pass_at_k,
    pass_at_k_exact,
    reward_stats,
    salv_dpo_grad,
    salv_dpo_loss,
)

FULL = os.environ.get("SALVKIT_FULL_ACCEPTANCE") == "1"


def batch(w_policy, w_ref, l_policy, l_ref, w_mask=None, l_mask=None, beta=0.1):
    return DpoBatch(
        w_policy,
        w_ref,
        l_policy,
        l_ref,
        w_mask if w_mask is not None else [True] * len(w_policy),
        l_mask if l_mask is not None else [True] * len(l_policy),
        beta=beta,
    )


def random_batch(rng, beta):
    n_w, n_l = rng.integers(10, 500 if FULL else 60, size=2)
    w_mask = rng.random(n_w) < 0.4
    l_mask = rng.random(n_l) < 0.4
    w_mask[0] = l_mask[0] = True
    return batch(
        list(rng.uniform(-2.0, -0.1, n_w)),
        list(rng.uniform(-2.0, -0.1, n_w)),
        list(rng.uniform(-2.0, -0.1, n_l)),
        list(rng.uniform(-2.0, -0.1, n_l)),
        list(w_mask),
        list(l_mask),
        beta=beta,
    )


class MaskedLogratioTests(SimpleTestCase):
    def test_masked_sum(self):
        self.assertAlmostEqual(masked_logratio([-0.9, -0.8, -0.7], [-1.0, -1.0, -1.0], [True, False, True]), 0.4)

    def test_errors(self):
        with self.assertRaises(LengthMismatch):
            masked_logratio([-1.0, -1.0], [-1.0], [True, True])
        with self.assertRaises(EmptyMask):
            masked_logratio([-1.0], [-1.0], [False])


class LossTests(SimpleTestCase):
    def test_identity_is_ln2(self):
        logps = [-0.5, -1.5, -2.0]
        loss, margin = salv_dpo_loss(batch(logps, logps, logps, logps))
        self.assertEqual(margin, 0.0)
        self.assertAlmostEqual(loss, math.log(2), places=12)

    def test_known_margin(self):
        loss, margin = salv_dpo_loss(batch([-1.0], [-3.0], [-4.0], [-1.0]))
        self.assertAlmostEqual(margin, 0.5, places=12)
        self.assertAlmostEqual(loss, 0.474077, places=6)

    def test_extreme_margins_stay_finite(self):
        loss, margin = salv_dpo_loss(batch([-1.0], [-501.0], [-1.0], [-1.0], beta=1.0))
        self.assertAlmostEqual(margin, 500.0)
        self.assertTrue(math.isfinite(loss) and loss >= 0.0)
        loss, _ = salv_dpo_loss(batch([-501.0], [-1.0], [-1.0], [-1.0], beta=1.0))
        self.assertAlmostEqual(loss, 500.0)

    def test_convex_and_decreasing_in_margin(self):
        losses = []
        for m in np.linspace(-20, 20, 81):
            losses.append(salv_dpo_loss(batch([-30.0 + m], [-30.0], [-1.0], [-1.0], beta=1.0))[0])
        diffs = np.diff(losses)
        self.assertTrue(np.all(diffs < 0))
        self.assertTrue(np.all(np.diff(diffs) >= -1e-12))

    def test_domain_errors(self):
        with self.assertRaises(DomainError):
            salv_dpo_loss(batch([-1.0], [-1.0], [-1.0], [-1.0], beta=0.0))
        with self.assertRaises(DomainError):
            salv_dpo_loss(batch([0.5], [-1.0], [-1.0], [-1.0]))
        with self.assertRaises(DomainError):
            salv_dpo_loss(batch([float("nan")], [-1.0], [-1.0], [-1.0]))
        with self.assertRaises(EmptyMask):
            salv_dpo_loss(batch([-1.0], [-1.0], [-1.0], [-1.0], l_mask=[False]))

    def test_from_json(self):
        data = batch([-1.0], [-3.0], [-4.0], [-1.0]).to_json()
        self.assertEqual(salv_dpo_loss(DpoBatch.from_json(data)), salv_dpo_loss(batch([-1.0], [-3.0], [-4.0], [-1.0])))
        del data["l_mask"]
        with self.assertRaises(DomainError):
            DpoBatch.from_json(data)

    def test_mean_and_rewards(self):
        good = batch([-1.0], [-3.0], [-4.0], [-1.0])
        stats = reward_stats(good)
        self.assertAlmostEqual(stats.chosen_reward, 0.2)
        self.assertAlmostEqual(stats.rejected_reward, -0.3)
        self.assertTrue(stats.accurate)
        same = batch([-1.0], [-1.0], [-1.0], [-1.0])
        self.assertAlmostEqual(mean_loss([good, same]), (0.474077 + math.log(2)) / 2, places=6)
        with self.assertRaises(DomainError):
            mean_loss([])


class GradientTests(SimpleTestCase):
    def test_zero_margin_gradient(self):
        logps = [-0.5, -1.5, -2.0]
        mask = [True, False, True]
        d_w, d_l = salv_dpo_grad(batch(logps, logps, logps, logps, mask, mask))
        np.testing.assert_allclose(d_w, [-0.05, 0.0, -0.05])
        np.testing.assert_allclose(d_l, [0.05, 0.0, 0.05])

    def test_finite_differences(self):
        rng = np.random.default_rng(7)
        for i in range(100 if FULL else 12):
            beta = (0.05, 0.1, 0.5)[i % 3]
            with self.subTest(i=i, beta=beta):
                self.assertLessEqual(gradient_check(random_batch(rng, beta)), 1e-6)

    def test_descent_direction(self):
        rng = np.random.default_rng(3)
        b = random_batch(rng, 0.1)
        d_w, d_l = salv_dpo_grad(b)
        self.assertTrue(np.all(d_w[np.asarray(b.w_mask)] < 0))
        self.assertTrue(np.all(d_l[np.asarray(b.l_mask)] > 0))

    def test_unmasked_tokens_do_not_matter(self):
        rng = np.random.default_rng(11)
        b = random_batch(rng, 0.1)
        t = next(i for i, m in enumerate(b.w_mask) if not m)
        policy = list(b.w_policy_logps)
        policy[t] = -7.0
        changed = DpoBatch(policy, b.w_ref_logps, b.l_policy_logps, b.l_ref_logps, b.w_mask, b.l_mask, beta=b.beta)
        self.assertEqual(salv_dpo_loss(b), salv_dpo_loss(changed))
        for before, after in zip(salv_dpo_grad(b), salv_dpo_grad(changed)):
            np.testing.assert_array_equal(before, after)

    def test_beta_scaling(self):
        base = batch([-1.0, -2.0], [-1.5, -2.5], [-1.0, -0.5], [-0.8, -0.9])
        m0 = masked_logratio(base.w_policy_logps, base.w_ref_logps, base.w_mask) - masked_logratio(
            base.l_policy_logps, base.l_ref_logps, base.l_mask
        )
        for beta in (0.01, 0.1, 0.5, 1.0, 2.0):
            scaled = DpoBatch(
                base.w_policy_logps, base.w_ref_logps, base.l_policy_logps, base.l_ref_logps,
                base.w_mask, base.l_mask, beta=beta,
            )
            d_w, _ = salv_dpo_grad(scaled)
            expected = beta / (1.0 + math.exp(beta * m0))
            np.testing.assert_allclose(d_w, [-expected, -expected], rtol=1e-12)


class PassAtKTests(SimpleTestCase):
    def test_examples(self):
        self.assertEqual(pass_at_k(20, 20, 1), 1.0)
        self.assertAlmostEqual(pass_at_k(2, 1, 1), 0.5)
        self.assertAlmostEqual(pass_at_k(5, 2, 3), 0.9)
        self.assertEqual(pass_at_k_exact(5, 2, 3), Fraction(9, 10))

    def test_k_one_is_fraction_correct(self):
        for c in range(11):
            self.assertAlmostEqual(pass_at_k(10, c, 1), c / 10)

    def test_monotone_and_bounded(self):
        n = 12
        for k in range(1, n + 1):
            values = [pass_at_k(n, c, k) for c in range(n + 1)]
            self.assertTrue(all(0.0 <= v <= 1.0 for v in values))
            self.assertTrue(all(b >= a - 1e-15 for a, b in zip(values, values[1:])))
        for c in range(n + 1):
            values = [pass_at_k(n, c, k) for k in range(1, n + 1)]
            self.assertTrue(all(b >= a - 1e-15 for a, b in zip(values, values[1:])))

    def test_matches_exact(self):
        for n, c, k in ((10, 3, 4), (30, 1, 10), (7, 0, 3), (100, 40, 5)):
            self.assertAlmostEqual(pass_at_k(n, c, k), float(pass_at_k_exact(n, c, k)), places=12)

    def test_large_n(self):
        self.assertAlmostEqual(pass_at_k(10_000, 1, 100), 0.01)
        self.assertTrue(math.isfinite(pass_at_k(10_000, 5_000, 5_000)))

    def test_mean(self):
        self.assertAlmostEqual(mean_pass_at_k([(2, 1), (20, 20)], 1), 0.75)
        with self.assertRaises(DomainError):
            mean_pass_at_k([], 1)

    def test_domain(self):
        for n, c, k in ((5, 6, 1), (5, -1, 1), (5, 2, 0), (5, 2, 6)):
            with self.subTest(n=n, c=c, k=k):
                with self.assertRaises(DomainError):
                    pass_at_k(n, c, k)

    def test_agrees_with_sampling(self):
        rng = np.random.default_rng(12)
        triples, draws, tolerance = (200, 1_000_000, 0.005) if FULL else (30, 100_000, 0.01)
        for _ in range(triples):
            n = int(rng.integers(1, 51))
            c = int(rng.integers(0, n + 1))
            k = int(rng.integers(1, n + 1))
            # a draw of k samples without replacement passes if it holds a correct one
            hits = rng.hypergeometric(c, n - c, k, size=draws) > 0 if c else np.zeros(draws, dtype=bool)
            with self.subTest(n=n, c=c, k=k):
                self.assertLess(abs(hits.mean() - pass_at_k(n, c, k)), tolerance)
