"""Style-prompt training, Gaussian feature resampling and residual text-adapter
classifiers, all in a shared unit-norm embedding space."""

from .adapter import (
    DEFAULT_DOMAIN_NAMES,
    LinearClassifier,
    TextAdapter,
    adapter_logits,
    combined_logits,
    init_from_templates,
    init_random,
    one_hot_labels,
    phi,
    predict,
)
from .bench import BenchConfig, EvalReport, EvalSet, SynthConfig, evaluate, generate_synth
from .encoder import (
    CLASS_TEMPLATE,
    DOMAIN_CLASS_TEMPLATE,
    STYLE_CLASS_TEMPLATE,
    STYLE_ONLY_TEMPLATE,
    FileEncoder,
    PromptTemplate,
    ToyEncoder,
)
from .featio import FeatureBundle, FeatureMatrix, read_bundle, read_matrix, write_bundle, write_matrix
from .model import ResidualAdapterClassifier, load_fitted, save_fitted
from .resampler import ClassGaussianResampler, ClassStats, estimate_stats, resample, resample_epoch
from .stylegen import StyleBank, StyleGenConfig, train_styles
from .trainer import TrainConfig, cosine_lr, fit, sgd_step

__version__ = "0.1.0"
