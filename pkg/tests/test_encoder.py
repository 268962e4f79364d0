import numpy as np
import pytest

from ptta import autodiff as ad
from ptta.encoder import (
    CLASS_TEMPLATE,
    DOMAIN_CLASS_TEMPLATE,
    STYLE_CLASS_TEMPLATE,
    STYLE_ONLY_TEMPLATE,
    STYLE_SLOT,
    FileEncoder,
    PromptTemplate,
    ToyEncoder,
    projection_matrix,
    render_prompt,
    render_tokens,
    token_embedding,
)
from ptta.errors import DataFormatError
from ptta.featio import FeatureBundle


class TestTokenEmbedding:
    def test_deterministic(self):
        a = token_embedding("dog", seed=5, token_dim=16)
        b = token_embedding("dog", seed=5, token_dim=16)
        np.testing.assert_array_equal(a, b)

    def test_seeds_1_and_2_differ(self):
        a = token_embedding("dog", seed=1, token_dim=16)
        b = token_embedding("dog", seed=2, token_dim=16)
        assert np.any(a != b)

    def test_range_half_open(self):
        for token in ("a", "style", "zebra", "quite-long-token"):
            v = token_embedding(token, seed=0, token_dim=64)
            assert np.all(v >= -1.0) and np.all(v < 1.0)

    def test_empty_token_rejected(self):
        with pytest.raises(ValueError, match="non-empty"):
            token_embedding("", seed=0, token_dim=4)


class TestProjectionMatrix:
    def test_deterministic(self):
        np.testing.assert_array_equal(projection_matrix(3, 8, 4), projection_matrix(3, 8, 4))

    def test_entry_magnitude_bounded(self):
        a = projection_matrix(0, 16, 9)
        assert np.all(np.abs(a) <= 1.0 / 3.0)

    def test_degenerate_1x1_in_range(self):
        a = projection_matrix(42, 1, 1)
        assert a.shape == (1, 1)
        assert -1.0 <= a[0, 0] < 1.0


class TestRendering:
    def test_multiword_names_tokenize(self):
        tokens = render_tokens(DOMAIN_CLASS_TEMPLATE, class_name="Art Painting", domain_name="photo")
        assert tokens == ("a", "photo", "of", "a", "art", "painting")

    def test_render_prompt_string(self):
        assert render_prompt(DOMAIN_CLASS_TEMPLATE, class_name="Dog", domain_name="sketch") == "a sketch of a dog"

    def test_style_template_keeps_slot(self):
        tokens = render_tokens(STYLE_CLASS_TEMPLATE, class_name="dog", keep_style_slot=True)
        assert tokens.count(STYLE_SLOT) == 1

    def test_unbound_class_slot(self):
        with pytest.raises(ValueError, match="class slot"):
            render_tokens(CLASS_TEMPLATE)

    def test_two_style_slots_rejected(self):
        with pytest.raises(ValueError, match="at most one"):
            PromptTemplate((STYLE_SLOT, STYLE_SLOT))


class TestToyEncoder:
    def test_unit_norm_within_1e9(self):
        enc = ToyEncoder(seed=0, token_dim=16, feature_dim=32)
        for name in ("dog", "cat", "some longer class"):
            f = enc.encode(CLASS_TEMPLATE, class_name=name)
            assert abs(np.linalg.norm(f) - 1.0) <= 1e-9

    def test_pure_function_of_inputs(self):
        enc1 = ToyEncoder(seed=9, token_dim=16, feature_dim=32)
        enc2 = ToyEncoder(seed=9, token_dim=16, feature_dim=32)
        style = np.linspace(-0.5, 0.5, 16)
        a = enc1.encode(STYLE_CLASS_TEMPLATE, style=style, class_name="dog")
        b = enc2.encode(STYLE_CLASS_TEMPLATE, style=style, class_name="dog")
        np.testing.assert_array_equal(a, b)

    def test_classes_separate_for_same_style(self):
        enc = ToyEncoder(seed=0, token_dim=16, feature_dim=32)
        style = np.full(16, 0.01)
        f1 = enc.encode(STYLE_CLASS_TEMPLATE, style=style, class_name="class-one")
        f2 = enc.encode(STYLE_CLASS_TEMPLATE, style=style, class_name="class-two")
        assert np.any(f1 != f2)

    def test_traced_matches_plain_encode_bitwise(self):
        enc = ToyEncoder(seed=3, token_dim=16, feature_dim=32)
        rng = np.random.default_rng(0)
        style = rng.standard_normal(16) * 0.3
        plain = enc.encode(STYLE_ONLY_TEMPLATE, style=style)
        tape = ad.Tape()
        traced = enc.encode_traced(STYLE_ONLY_TEMPLATE, tape.tensor(style, requires_grad=True))
        np.testing.assert_array_equal(plain, traced.values)

    def test_gradcheck_cosine_vs_fixed_vector(self):
        enc = ToyEncoder(seed=1, token_dim=16, feature_dim=32)
        rng = np.random.default_rng(5)
        target = rng.standard_normal(32)

        def loss(x):
            feat = enc.encode_traced(STYLE_ONLY_TEMPLATE, x)
            return ad.cosine_similarity(feat, x.tape.tensor(target))

        for _ in range(5):
            err = ad.gradcheck(loss, rng.standard_normal(16) * 0.2, step=1e-5)
            assert err <= 1e-4

    def test_unbound_style_slot_rejected(self):
        enc = ToyEncoder(seed=0, token_dim=8, feature_dim=8)
        with pytest.raises(ValueError, match="style slot"):
            enc.encode(STYLE_CLASS_TEMPLATE, class_name="dog")

    def test_style_vector_shape_checked(self):
        enc = ToyEncoder(seed=0, token_dim=8, feature_dim=8)
        with pytest.raises(ValueError, match="style vector shape"):
            enc.encode(STYLE_ONLY_TEMPLATE, style=np.ones(5))

    def test_encode_classes_stacks_rows(self):
        enc = ToyEncoder(seed=0, token_dim=8, feature_dim=12)
        content = enc.encode_classes(("a1", "b2"))
        assert content.shape == (2, 12)
        np.testing.assert_array_equal(content[1], enc.encode(CLASS_TEMPLATE, class_name="b2"))


def _tiny_bundle() -> FeatureBundle:
    enc = ToyEncoder(seed=0, token_dim=8, feature_dim=16)
    classes = ("dog", "cat")
    domains = ("photo", "sketch")
    content = enc.encode_classes(classes)
    adapter = np.stack(
        [
            enc.encode(DOMAIN_CLASS_TEMPLATE, class_name=c, domain_name=d)
            for c in classes
            for d in domains
        ]
    )
    return FeatureBundle(
        class_names=classes,
        domain_names=domains,
        content_features=content,
        adapter_features=adapter,
    )


class TestFileEncoder:
    def test_lookup_content_and_adapter_rows(self):
        bundle = _tiny_bundle()
        fe = FileEncoder.from_bundle(bundle)
        np.testing.assert_array_equal(fe.encode(CLASS_TEMPLATE, class_name="cat"), bundle.content_features[1])
        got = fe.encode(DOMAIN_CLASS_TEMPLATE, class_name="dog", domain_name="sketch")
        np.testing.assert_array_equal(got, bundle.adapter_features[1])

    def test_miss_reports_rendered_prompt(self):
        fe = FileEncoder.from_bundle(_tiny_bundle())
        with pytest.raises(DataFormatError, match="a photo of a zebra"):
            fe.encode(DOMAIN_CLASS_TEMPLATE, class_name="zebra", domain_name="photo")

    def test_style_templates_rejected(self):
        fe = FileEncoder.from_bundle(_tiny_bundle())
        with pytest.raises(DataFormatError, match="style"):
            fe.encode(STYLE_CLASS_TEMPLATE, style=np.ones(8), class_name="dog")
