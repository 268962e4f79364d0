import math

import numpy as np
import pytest

from conftest import unit_rows
from ptta import autodiff as ad
from ptta.adapter import (
    LinearClassifier,
    TextAdapter,
    adapter_logits,
    adapter_logits_batch,
    combined_logits,
    combined_logits_batch,
    init_from_templates,
    init_random,
    one_hot_labels,
    phi,
    predict,
)
from ptta.encoder import DOMAIN_CLASS_TEMPLATE, ToyEncoder
from ptta.trainer import fused_cross_entropy


def random_adapter(rng, n, k, d, alpha=1.0, beta=2.0) -> TextAdapter:
    return TextAdapter(
        keys=unit_rows(rng, n * k, d),
        labels=one_hot_labels(n, k),
        alpha=alpha,
        beta=beta,
    )


class TestPhi:
    def test_phi_of_one_is_exactly_one(self):
        for beta in (0.5, 1.0, 2.0, 5.0):
            assert phi(1.0, beta) == 1.0

    def test_phi_at_zero_beta_two(self):
        assert phi(0.0, 2.0) == pytest.approx(math.exp(-2.0), abs=1e-12)
        assert phi(0.0, 2.0) == pytest.approx(0.1353352832366127, abs=1e-12)

    def test_phi_at_minus_one_beta_two(self):
        assert phi(-1.0, 2.0) == pytest.approx(math.exp(-4.0), abs=1e-12)
        assert phi(-1.0, 2.0) == pytest.approx(0.0183156388887342, abs=1e-12)

    def test_strictly_increasing(self):
        xs = np.linspace(-1, 1, 101)
        ys = phi(xs, 2.0)
        assert np.all(np.diff(ys) > 0)

    def test_beta_must_be_positive(self):
        with pytest.raises(ValueError, match="beta"):
            phi(0.5, 0.0)


class TestOneHotLabels:
    def test_row_layout_class_major(self):
        labels = one_hot_labels(2, 3)
        assert labels.shape == (6, 2)
        for j in range(2):
            for k in range(3):
                expected = np.zeros(2)
                expected[j] = 1.0
                np.testing.assert_array_equal(labels[j * 3 + k], expected)

    def test_rows_sum_to_one(self):
        labels = one_hot_labels(5, 11)
        np.testing.assert_array_equal(labels.sum(axis=1), np.ones(55))


class TestTemplateInit:
    def test_row_order_n2_k2(self):
        enc = ToyEncoder(seed=0, token_dim=8, feature_dim=16)
        classes, domains = ("c0", "c1"), ("d0", "d1")
        keys = init_from_templates(enc, classes, domains)
        assert keys.shape == (4, 16)
        for j, c in enumerate(classes):
            for k, d in enumerate(domains):
                fresh = enc.encode(DOMAIN_CLASS_TEMPLATE, class_name=c, domain_name=d)
                np.testing.assert_array_equal(keys[j * 2 + k], fresh)

    def test_rows_unit_norm(self):
        enc = ToyEncoder(seed=1, token_dim=8, feature_dim=16)
        keys = init_from_templates(enc, ("a", "b", "c"), ("x", "y"))
        np.testing.assert_allclose(np.linalg.norm(keys, axis=1), 1.0, atol=1e-9)

    def test_random_and_template_share_shapes_and_labels(self):
        enc = ToyEncoder(seed=0, token_dim=8, feature_dim=16)
        tpl = init_from_templates(enc, ("a", "b"), ("x", "y", "z"))
        rnd = init_random(2, 3, 16, seed=0)
        assert tpl.shape == rnd.shape
        adapter_tpl = TextAdapter(keys=tpl, labels=one_hot_labels(2, 3))
        adapter_rnd = TextAdapter(keys=rnd, labels=one_hot_labels(2, 3))
        np.testing.assert_array_equal(adapter_tpl.labels, adapter_rnd.labels)
        assert np.any(tpl != rnd)

    def test_random_init_seeded(self):
        np.testing.assert_array_equal(init_random(3, 2, 8, 7), init_random(3, 2, 8, 7))

    def test_empty_names_rejected(self):
        enc = ToyEncoder(seed=0, token_dim=8, feature_dim=16)
        with pytest.raises(ValueError, match="non-empty"):
            init_from_templates(enc, (), ("x",))


class TestAdapterLogits:
    def test_identity_keys_hand_case(self):
        adapter = TextAdapter(
            keys=np.eye(2),
            labels=one_hot_labels(2, 1),
            beta=2.0,
        )
        logits = adapter_logits(np.array([1.0, 0.0]), adapter)
        np.testing.assert_allclose(logits, [1.0, math.exp(-2.0)], atol=1e-15)

    def test_entries_in_zero_k_interval(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            n, k, d = rng.integers(2, 6), rng.integers(1, 5), rng.integers(2, 8)
            adapter = random_adapter(rng, n, k, d)
            f = unit_rows(rng, 1, d)[0]
            logits = adapter_logits(f, adapter)
            assert np.all(logits > 0) and np.all(logits <= k + 1e-12)

    def test_matches_brute_force_double_loop(self):
        rng = np.random.default_rng(123)
        for _ in range(100):
            n, k, d = rng.integers(1, 9), rng.integers(1, 9), rng.integers(1, 9)
            beta = rng.uniform(0.5, 5.0)
            adapter = random_adapter(rng, n, k, d, beta=beta)
            f = unit_rows(rng, 1, d)[0]
            got = adapter_logits(f, adapter)
            expected = np.zeros(n)
            for cls in range(n):
                for dom in range(k):
                    sim = float(np.dot(f, adapter.keys[cls * k + dom]))
                    expected[cls] += math.exp(-beta * (1.0 - sim))
            np.testing.assert_allclose(got, expected, rtol=0, atol=1e-12)

    def test_batch_matches_single(self):
        rng = np.random.default_rng(5)
        adapter = random_adapter(rng, 3, 2, 6)
        X = unit_rows(rng, 7, 6)
        batch = adapter_logits_batch(X, adapter)
        for i in range(7):
            np.testing.assert_allclose(batch[i], adapter_logits(X[i], adapter), atol=1e-12)

    def test_monotone_in_single_key_similarity(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            n, k, d = 3, 2, 6
            adapter = random_adapter(rng, n, k, d)
            f = unit_rows(rng, 1, d)[0]
            base = adapter_logits(f, adapter)
            row = rng.integers(0, n * k)
            cls = row // k
            # move the key toward f (keeping unit norm) -> higher similarity
            moved = adapter.keys.copy()
            moved[row] = moved[row] + 0.5 * f
            moved[row] /= np.linalg.norm(moved[row])
            if np.dot(f, moved[row]) <= np.dot(f, adapter.keys[row]):
                continue
            bumped = TextAdapter(keys=moved, labels=adapter.labels, alpha=adapter.alpha, beta=adapter.beta)
            assert adapter_logits(f, bumped)[cls] >= base[cls]

    def test_dimension_mismatch(self):
        adapter = random_adapter(np.random.default_rng(0), 2, 1, 4)
        with pytest.raises(ValueError, match="dim"):
            adapter_logits(np.ones(5) / np.sqrt(5), adapter)


class TestCombinedLogits:
    def test_alpha_zero_equals_linear_bitwise(self):
        rng = np.random.default_rng(1)
        classifier = LinearClassifier(rng.standard_normal((3, 5)))
        adapter = random_adapter(rng, 3, 2, 5, alpha=0.0)
        f = unit_rows(rng, 1, 5)[0]
        got = combined_logits(f, classifier, adapter)
        np.testing.assert_array_equal(got, classifier.weight @ f)

    def test_zero_classifier_equals_adapter_bitwise(self):
        rng = np.random.default_rng(2)
        adapter = random_adapter(rng, 4, 3, 6, alpha=1.0)
        classifier = LinearClassifier.zeros(4, 6)
        f = unit_rows(rng, 1, 6)[0]
        np.testing.assert_array_equal(
            combined_logits(f, classifier, adapter), adapter_logits(f, adapter)
        )

    def test_random_instance_equals_sum_of_parts(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            n, k, d = rng.integers(2, 6), rng.integers(1, 4), rng.integers(2, 8)
            alpha = rng.uniform(0.0, 5.0)
            classifier = LinearClassifier(rng.standard_normal((n, d)))
            adapter = random_adapter(rng, n, k, d, alpha=alpha)
            f = unit_rows(rng, 1, d)[0]
            expected = classifier.weight @ f + alpha * adapter_logits(f, adapter)
            np.testing.assert_allclose(combined_logits(f, classifier, adapter), expected, atol=1e-12)

    def test_batch_matches_single(self):
        rng = np.random.default_rng(4)
        classifier = LinearClassifier(rng.standard_normal((3, 6)))
        adapter = random_adapter(rng, 3, 2, 6, alpha=1.5)
        X = unit_rows(rng, 5, 6)
        batch = combined_logits_batch(X, classifier, adapter)
        for i in range(5):
            np.testing.assert_allclose(batch[i], combined_logits(X[i], classifier, adapter), atol=1e-12)


class TestPredict:
    def test_tie_breaks_to_lowest_index(self):
        # craft a model producing exactly [0.2, 0.9, 0.9]
        classifier = LinearClassifier(np.array([[0.2], [0.9], [0.9]]))
        adapter = TextAdapter(keys=np.ones((3, 1)), labels=one_hot_labels(3, 1), alpha=0.0)
        assert predict(np.array([1.0]), classifier, adapter) == 1

    def test_alpha_zero_reduces_to_linear_argmax(self):
        rng = np.random.default_rng(6)
        classifier = LinearClassifier(rng.standard_normal((4, 5)))
        adapter = random_adapter(rng, 4, 2, 5, alpha=0.0)
        for f in unit_rows(rng, 10, 5):
            assert predict(f, classifier, adapter) == int(np.argmax(classifier.weight @ f))

    def test_constant_shift_leaves_argmax_unchanged(self):
        rng = np.random.default_rng(7)
        classifier = LinearClassifier(rng.standard_normal((4, 5)))
        adapter = random_adapter(rng, 4, 2, 5)
        for f in unit_rows(rng, 10, 5):
            logits = combined_logits(f, classifier, adapter)
            for c in (-3.0, 0.7, 42.0):
                assert int(np.argmax(logits + c)) == int(np.argmax(logits))


class TestGradients:
    def test_fused_cross_entropy_gradcheck_wrt_classifier_and_keys(self):
        rng = np.random.default_rng(11)
        n, k, d, b = 3, 2, 5, 4
        X = unit_rows(rng, b, d)
        y = rng.integers(0, n, size=b)
        labels = one_hot_labels(n, k)
        w_t = rng.standard_normal((d, n)) * 0.3
        f_t = unit_rows(rng, n * k, d).T.copy()

        def loss_wrt_w(wt):
            ft = wt.tape.tensor(f_t, requires_grad=False)
            return fused_cross_entropy(X, y, wt, ft, labels, alpha=1.3, beta=2.0)

        def loss_wrt_f(ft):
            wt = ft.tape.tensor(w_t, requires_grad=False)
            return fused_cross_entropy(X, y, wt, ft, labels, alpha=1.3, beta=2.0)

        assert ad.gradcheck(loss_wrt_w, w_t, step=1e-5) <= 1e-4
        assert ad.gradcheck(loss_wrt_f, f_t, step=1e-5) <= 1e-4


class TestValidation:
    def test_keys_must_be_unit_norm(self):
        with pytest.raises(ValueError, match="unit-norm"):
            TextAdapter(keys=np.full((2, 2), 3.0), labels=one_hot_labels(2, 1))

    def test_key_label_row_mismatch(self):
        with pytest.raises(ValueError, match="rows"):
            TextAdapter(keys=np.eye(2), labels=one_hot_labels(2, 2))

    def test_renormalize_keys(self):
        rng = np.random.default_rng(0)
        adapter = random_adapter(rng, 2, 2, 4)
        adapter.keys *= 1.0005
        adapter.renormalize_keys()
        np.testing.assert_allclose(np.linalg.norm(adapter.keys, axis=1), 1.0, atol=1e-15)
