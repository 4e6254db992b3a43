import pytest

from vsgcc import config, params, sim
from vsgcc.errors import ConfigError

GOOD = """\
[circuit]
omega1 = 314.159
v_ll = 380
s_base = 10000
x_s = 0.15
x_g = 0.3

[control]
k_ip = 0.4776
k_vi = 800
kc_re = 1.0
kc_im = 1.1356

[power_loop]
mode = swing
h = 1.0
d = 66.67

[scenario]
duration = 1.0
events =
    0.3 step_v_ref 0.1
    0.5 ramp_grid_freq -0.01 0.0
"""


def test_loads_good_file():
    p, sc = config.loads(GOOD)
    assert p.kc == pytest.approx(1 + 1.1356j)
    assert p.Xs == 0.15 and p.kvi == 800
    assert [e.action for e in sc.events] == ["step_v_ref", "ramp_grid_freq"]
    assert sc.events[1].value == (-0.01, 0.0)


def test_unknown_key_reports_line():
    text = GOOD.replace("x_g = 0.3", "x_g = 0.3\nx_gg = 1")
    with pytest.raises(ConfigError, match=r"<string>:7: unknown key 'x_gg'"):
        config.loads(text)


def test_unknown_section_rejected():
    with pytest.raises(ConfigError, match="unknown section"):
        config.loads(GOOD + "\n[extras]\nfoo = 1\n")


@pytest.mark.parametrize("key", ["omega1", "v_ll", "s_base"])
def test_bases_required(key):
    text = "\n".join(ln for ln in GOOD.splitlines() if not ln.startswith(key))
    with pytest.raises(ConfigError, match=key):
        config.loads(text)


def test_bad_number_reports_line():
    with pytest.raises(ConfigError, match=r"<string>:9: k_ip = 'abc'"):
        config.loads(GOOD.replace("k_ip = 0.4776", "k_ip = abc"))


def test_kc_and_beta_conflict():
    with pytest.raises(ConfigError, match="not both"):
        config.loads(GOOD.replace("kc_re = 1.0", "kc_re = 1.0\nbeta_k = 1.0"))


def test_malformed_event():
    with pytest.raises(ConfigError, match="event line 1"):
        config.loads(GOOD.replace("0.3 step_v_ref 0.1", "0.3 jump 0.1"))


def test_invalid_parameter_value():
    with pytest.raises(ConfigError, match="kip"):
        config.loads(GOOD.replace("k_ip = 0.4776", "k_ip = -1"))


@pytest.mark.parametrize("name", sorted(sim.scenario_presets()))
def test_round_trip_presets(name):
    sc = sim.preset_scenario(name)
    p2, sc2 = config.loads(config.dumps(sc.params, sc))
    assert p2 == sc.params
    assert sc2 == sc


@pytest.mark.parametrize("name", sorted(params.PRESETS))
def test_round_trip_parameter_sets(name):
    p = params.preset(name)
    p2, sc = config.loads(config.dumps(p))
    assert p2 == p and sc is None


def test_missing_file():
    with pytest.raises(ConfigError, match="cannot read"):
        config.load_params("/nonexistent/file.ini")
