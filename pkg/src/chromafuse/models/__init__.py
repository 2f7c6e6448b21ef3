from .decoder import (
    ColorizationModule,
    DecoderConfig,
    QueryDecoderLayer,
    feature_tokens,
    sinusoidal_position_encoding,
)
from .discriminator import PatchDiscriminator, PatchDiscriminatorConfig, logit_map_size
from .encoder import EncoderConfig, FeaturePyramid, FeaturePyramidEncoder
from .features import (
    FixedEmbedder,
    FixedPerceptualExtractor,
    StagedFeatureExtractor,
    vgg16_stages,
)
from .fusion import ChannelFusionNet, FusionConfig, fusion_parameter_count
from .generator import ColorizationGenerator

__all__ = [
    "ChannelFusionNet",
    "ColorizationGenerator",
    "ColorizationModule",
    "DecoderConfig",
    "EncoderConfig",
    "FeaturePyramid",
    "FeaturePyramidEncoder",
    "FixedEmbedder",
    "FixedPerceptualExtractor",
    "FusionConfig",
    "PatchDiscriminator",
    "PatchDiscriminatorConfig",
    "QueryDecoderLayer",
    "StagedFeatureExtractor",
    "feature_tokens",
    "fusion_parameter_count",
    "logit_map_size",
    "sinusoidal_position_encoding",
    "vgg16_stages",
]
