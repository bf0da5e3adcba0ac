import pytest

from rnnpb.config import ConfigError, build, check_keys, parse_config_text, read_config
from rnnpb.learning import TrainerConfig
from rnnpb.recognition import RecognitionConfig


def test_parse_comments_and_quotes():
    text = "# header\neta_r = 0.01  # trailing\n\nwindow='50'\n"
    assert parse_config_text(text) == {"eta_r": "0.01", "window": "50"}


@pytest.mark.parametrize("text", ["no equals sign", "= 3", "a = 1\na = 2"])
def test_parse_errors_name_line(text):
    with pytest.raises(ConfigError, match="<config>:"):
        parse_config_text(text)


def test_build_casts_and_overrides():
    values = {"eta_r": "0.02", "window": "40", "max_iters": "1e3"}
    cfg = build(RecognitionConfig, values, window=7, stop_patience=None)
    assert cfg.eta_r == 0.02 and cfg.window == 7 and cfg.max_iters == 1000
    assert cfg.stop_patience == RecognitionConfig().stop_patience


def test_build_rejects_bad_values():
    with pytest.raises(ConfigError):
        build(RecognitionConfig, {"window": "2.5"})
    with pytest.raises(ConfigError):
        build(TrainerConfig, {"eta_min": "1", "eta_max": "0.1"})


def test_unknown_keys():
    check_keys({"eta_r": "1", "hidden_dim": "4"}, RecognitionConfig, extra=("hidden_dim",))
    with pytest.raises(ConfigError, match="typo_key"):
        check_keys({"typo_key": "1"}, TrainerConfig)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        read_config(tmp_path / "absent.cfg")
