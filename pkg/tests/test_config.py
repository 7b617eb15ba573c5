import math

import pytest

from svbsc.config import ExperimentConfig, parse_config


def test_defaults():
    cfg = ExperimentConfig()
    assert cfg.budget.channel_uses == 128 and cfg.budget.power_limit == 128.0
    assert cfg.target.l_max == 1152 and cfg.target.epsilon == (0.01, 0.05, 0.1)
    assert cfg.sweep.snr_db[0] == -5.0 and cfg.sweep.snr_db[-1] == 30.0 and len(cfg.sweep.snr_db) == 36
    assert cfg.sweep.frames == 2000


def test_parse_ranges_lists_and_comments():
    cfg = parse_config(
        """
        # a comment
        seed = 42
        sweep.snr_db = -5:5:2.5, 20, inf   # trailing comment
        target.epsilon = 0.1
        target.l_avg_cap = 600
        codec.breakpoints = 640, 1280
        channel.csi_mode = imperfect
        """
    )
    assert cfg.seed == 42
    assert cfg.sweep.snr_db[:5] == (-5.0, -2.5, 0.0, 2.5, 5.0)
    assert cfg.sweep.snr_db[5] == 20.0 and math.isinf(cfg.sweep.snr_db[6])
    assert cfg.target.epsilon == (0.1,) and cfg.target.l_avg_cap == 600.0
    assert cfg.codec.breakpoints == (640, 1280)
    assert cfg.channel.csi_mode == ("imperfect",)


@pytest.mark.parametrize(
    "text",
    ["nonsense", "sweep.bogus = 1", "nosection.x = 1", "sweep.frames = abc", "codec.variant = fancy", "channel.csi_mode = psychic"],
)
def test_parse_errors(text):
    with pytest.raises(ValueError):
        parse_config(text)


def test_text_roundtrip_and_hash():
    cfg = parse_config("seed = 3\nsweep.snr_db = 0:10:1\ncodec.variant = baseline")
    again = parse_config(cfg.to_text())
    assert again.to_text() == cfg.to_text() and again.hash() == cfg.hash()
    assert cfg.replace(output__results="elsewhere.csv").hash() == cfg.hash()
    assert cfg.replace(seed=4).hash() != cfg.hash()
    assert cfg.replace(sweep__frames="10").hash() != cfg.hash()


def test_codec_label():
    assert ExperimentConfig().codec.name == "code3-ladder"
    assert parse_config("codec.label = mine").codec.name == "mine"


def test_none_clears_optional_fields():
    cfg = parse_config("dataset.path = none\ncodec.breakpoints = none\ndataset.test_limit = none")
    assert cfg.dataset.path == () and cfg.codec.breakpoints is None and cfg.dataset.test_limit is None
    assert parse_config("dataset.path = a.bin, b.bin").dataset.path == ("a.bin", "b.bin")
    assert parse_config(cfg.to_text()).hash() == cfg.hash()
