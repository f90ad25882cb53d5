import pytest

from lccd.config import PipelineConfig
from lccd.divergence import KL, alpha_divergence
from lccd.errors import InvalidConfigError


def test_defaults():
    c = PipelineConfig()
    assert (c.spatial_dim, c.channel_dim) == (432, 324)
    assert c.channel_pairs == ("RG", "RB")


def test_text_round_trip(tmp_path):
    c = PipelineConfig(divergence=alpha_divergence(0.25), channel_pairs="RG,GB",
                       pca_whiten=True, encoding="bow", manifest="m.csv")
    c.save(tmp_path / "c.cfg")
    assert PipelineConfig.load(tmp_path / "c.cfg") == c


def test_string_fields_parsed():
    c = PipelineConfig.loads("# comment\ndivergence = kl\nbins = 12\n\n")
    assert c.divergence == KL and c.bins == 12


@pytest.mark.parametrize("text", [
    "bogus = 1",
    "bins = many",
    "bins = 1",
    "subspace_window = 30",
    "pca_dim = 500",
    "grid_rows = 2",
    "encoding = vlad",
    "divergence = alpha:1",
    "divergence = cosine",
    "channel_pairs = RX",
    "svm_lambda = 0",
    "no equals sign",
])
def test_invalid_entries(text):
    with pytest.raises(InvalidConfigError):
        PipelineConfig.loads(text)


def test_replace_revalidates():
    with pytest.raises(InvalidConfigError):
        PipelineConfig().replace(resize_width=10)


def test_missing_file(tmp_path):
    with pytest.raises(InvalidConfigError):
        PipelineConfig.load(tmp_path / "absent.cfg")
