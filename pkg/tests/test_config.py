from dataclasses import fields

import pytest
from hypothesis import given
from hypothesis import strategies as st

from relswlw.config import RunConfig, config_help, parse_config, serialize_config
from relswlw.errors import ConfigError


def test_partial_config_over_defaults():
    cfg = parse_config("epsilon=1.0\nsigma2=0.25\nN=32")
    assert cfg.N == 32 and cfg.epsilon == 1.0 and cfg.sigma2 == 0.25
    assert cfg.mode == RunConfig().mode


def test_comments_blank_lines_and_lambda_alias():
    cfg = parse_config("# header\n\nlambda = 0.5  # Thirring\nmode=picard\n")
    assert cfg.lam == 0.5 and cfg.mode == "picard"


@pytest.mark.parametrize("text, key", [
    ("alpha=-1", "alpha"),
    ("kappa=-0.5", "kappa"),
    ("bogus=1", "bogus"),
    ("N=", "N"),
    ("N=3.5", "N"),
    ("epsilon=abc", "epsilon"),
    ("mode=fast", "mode"),
    ("cfl=0.9", "cfl"),
    ("t_final=inf", "t_final"),
    ("epsilon=1\nsigma2=1.5", "sigma2"),
    ("slab=1\nmode=coevolve", "slab"),
    ("delta=0.001", "delta"),
])
def test_errors_name_the_key(text, key):
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert err.value.key == key
    assert key in str(err.value)


def test_negative_coupling_message_mentions_positivity():
    with pytest.raises(ConfigError, match="positive"):
        parse_config("alpha=-1")


def test_line_without_equals_rejected():
    with pytest.raises(ConfigError, match="line 2"):
        parse_config("N=8\nN 8")


def test_help_lists_every_key_with_default():
    text = config_help()
    for f in fields(RunConfig):
        assert f"{f.name}=" in text


configs = st.builds(
    RunConfig,
    N=st.integers(8, 512),
    slab=st.sampled_from([0, 3]),
    epsilon=st.floats(0.05, 1.0),
    sigma2=st.floats(0.01, 0.2),
    lam=st.floats(-2, 2),
    kappa=st.floats(0, 3),
    alpha=st.floats(0, 1),
    cfl=st.floats(0.05, 0.5),
    t_final=st.floats(1e-3, 10),
    mode=st.sampled_from(["coevolve", "picard", "euler-only", "dirac-only"]),
    fluid_ic=st.sampled_from(["uniform", "acoustic_pulse", "density_sine"]),
    seed=st.integers(0, 2**64 - 1),
    out_dir=st.from_regex(r"[a-z][a-z0-9_/]{0,12}", fullmatch=True),
)


@given(configs)
def test_serialize_parse_roundtrip(cfg):
    text = serialize_config(cfg)
    again = parse_config(text)
    assert again == cfg
    assert serialize_config(again) == text
    assert again.config_hash == cfg.config_hash
