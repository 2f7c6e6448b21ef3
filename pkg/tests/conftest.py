import numpy as np
import pytest
import torch

from chromafuse.models import DecoderConfig, EncoderConfig, FusionConfig


@pytest.fixture
def tiny_encoder_cfg():
    return EncoderConfig(stage_channels=(32, 32, 16, 16), backbone_widths=(8, 8, 16, 16))


@pytest.fixture
def tiny_decoder_cfg():
    return DecoderConfig(num_queries=8, embed_dim=16, heads=2, num_rounds=2)


@pytest.fixture
def tiny_fusion_cfg():
    return FusionConfig(num_spaces=3)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def torch_rng():
    torch.manual_seed(1234)
    return torch.Generator().manual_seed(1234)
