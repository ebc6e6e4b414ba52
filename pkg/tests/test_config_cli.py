from __future__ import annotations

import subprocess
import sys

import pytest
from hypothesis import given, settings, strategies as st

from wanderlab import config as cfg
from wanderlab.cli import main
from wanderlab.errors import ConfigError

SMALL = """
[denjoy]
i_max = 2000
verify_horizon = 500

[hopf]
scan_grid = 7

[certify]
horizon = 60
diameter_tol = 1e-3
omega_seeds = 3
omega_start = 500
omega_stop = 1500
omega_stride = 500
resolution = 1e-2
lyapunov_iterates = 5000
density_iterates = 50000
density_eps = 1e-2
"""


@pytest.fixture
def small_ini(tmp_path):
    p = tmp_path / "small.ini"
    p.write_text(SMALL)
    return p


def _files(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


# -- config -----------------------------------------------------------------


def test_defaults_round_trip():
    sc = cfg.default_scenario()
    assert cfg.loads(sc.dumps()) == sc
    assert cfg.loads(sc.dumps()).dumps() == sc.dumps()


@settings(max_examples=50, deadline=None)
@given(mu=st.floats(1e-6, 0.2), mass=st.floats(0.0, 0.6), gamma=st.floats(0.01, 0.99),
       i_max=st.integers(1, 10**6), strict=st.booleans(), family=st.sampled_from(["power", "geometric"]))
def test_round_trip_preserves_values(mu, mass, gamma, i_max, strict, family):
    sc = cfg.default_scenario()
    sc.hopf.mu, sc.hopf.gamma = mu, gamma
    sc.denjoy.mass, sc.denjoy.i_max, sc.denjoy.strict, sc.denjoy.family = mass, i_max, strict, family
    assert cfg.loads(sc.dumps()) == sc


def test_partial_file_keeps_defaults():
    sc = cfg.loads("[hopf]\nmu = 0.01\n")
    assert sc.hopf.mu == 0.01
    assert sc.denjoy == cfg.DenjoySection()


@pytest.mark.parametrize("text,needle", [
    ("[hopf]\nmoo = 1\n", "moo"),
    ("[nope]\nx = 1\n", "nope"),
    ("[hopf]\nmu = abc\n", "hopf.mu"),
    ("[tolerances]\nfirst = 0\n", "tolerances.first"),
    ("[denjoy]\nfamily = table\n", "family"),
    ("[certify]\nomega_start = 10\nomega_stop = 5\n", "omega_start"),
    ("[denjoy]\ni_max = 0\n", "i_max"),
    ("[hopf]\nmu = nan\n", "hopf.mu"),
])
def test_rejected_configs(text, needle):
    with pytest.raises(ConfigError, match=needle):
        cfg.loads(text)


# -- CLI ---------------------------------------------------------------------


def test_dump_defaults(capsys):
    assert main(["model", "--dump-defaults"]) == 0
    out = capsys.readouterr().out
    assert cfg.loads(out) == cfg.default_scenario()
    for sec in ("[cycle]", "[hopf]", "[denjoy]", "[tubes]", "[certify]", "[tolerances]"):
        assert sec in out


def test_unknown_key_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.ini"
    p.write_text("[denjoy]\nalpah = 0.3\n")
    assert main(["denjoy", "--config", str(p), "--out", str(tmp_path / "o")]) == 3
    assert "alpah" in capsys.readouterr().err


def test_usage_errors(tmp_path, small_ini):
    assert main(["denjoy", "--config", str(small_ini)]) == 3
    assert main(["denjoy", "--config", str(tmp_path / "missing.ini"), "--out", str(tmp_path)]) == 3
    with pytest.raises(SystemExit) as err:
        main(["frobnicate", "--config", str(small_ini), "--out", str(tmp_path)])
    assert err.value.code == 3


@pytest.mark.parametrize("sub,files", [
    ("model", {"saddles.csv", "markers.csv"}),
    ("tangency", {"wu_patch.csv", "tangency.csv", "tatjer.txt"}),
    ("hopf-scan", {"ns_scan.csv"}),
    ("denjoy", {"endpoints.csv"}),
])
def test_subcommands_pass_and_are_deterministic(tmp_path, small_ini, sub, files):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main([sub, "--config", str(small_ini), "--out", str(a)]) == 0
    assert main([sub, "--config", str(small_ini), "--out", str(b)]) == 0
    assert set(_files(a)) == files
    assert _files(a) == _files(b)


def test_csv_headers(tmp_path, small_ini):
    out = tmp_path / "o"
    main(["tangency", "--config", str(small_ini), "--out", str(out)])
    main(["hopf-scan", "--config", str(small_ini), "--out", str(out)])
    main(["denjoy", "--config", str(small_ini), "--out", str(out)])
    assert (out / "wu_patch.csv").read_text().splitlines()[0] == "u,v,x,y,z,t1x,t1y,t1z,t2x,t2y,t2z"
    assert (out / "ns_scan.csv").read_text().splitlines()[0] == "mu,re_mult,im_mult,modulus"
    assert (out / "endpoints.csv").read_text().splitlines()[0] == "i,u_i,v_i,l_i"
    row = (out / "endpoints.csv").read_text().splitlines()[2].split(",")
    assert float(row[1]) == float(format(float(row[1]), ".17g"))


def test_certify_bundle_and_seed(tmp_path, small_ini):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert main(["certify", "--config", str(small_ini), "--out", str(a)]) == 0
    assert main(["certify", "--config", str(small_ini), "--out", str(b)]) == 0
    assert main(["certify", "--config", str(small_ini), "--out", str(c), "--seed", "7"]) == 0
    fa, fc = _files(a), _files(c)
    assert set(fa) == {"margins.csv", "diameters.csv", "omega.csv", "verdict.txt", "endpoints.csv"}
    assert fa == _files(b)
    assert fa["omega.csv"] != fc["omega.csv"]
    assert fa["margins.csv"] == fc["margins.csv"]
    verdicts = dict(line.split(": ") for line in fa["verdict.txt"].decode().splitlines())
    assert verdicts["certificate"] == "pass"


def test_certify_fails_with_weak_contraction(tmp_path):
    # with normal multipliers 0.99998 and 0.999 the tube images shrink by
    # about 0.1% per period, far too slowly to reach the tolerance
    text = SMALL.replace("[hopf]\n", "[hopf]\nmu = 1e-5\ngamma = 0.999\n")
    text = text.replace("diameter_tol = 1e-3", "diameter_tol = 1e-5")
    p = tmp_path / "weak.ini"
    p.write_text(text + "\n[tubes]\ndelta_fraction = 0.999\n")
    out = tmp_path / "o"
    assert main(["certify", "--config", str(p), "--out", str(out)]) == 1
    verdicts = dict(line.split(": ") for line in (out / "verdict.txt").read_text().splitlines())
    diams = [float(r.split(",")[1]) for r in (out / "diameters.csv").read_text().splitlines()[1:]]
    assert diams[-1] / diams[-2] > 0.99
    assert verdicts["contracting"] == "fail" and verdicts["certificate"] == "fail"


def test_infeasible_law_fails(tmp_path):
    p = tmp_path / "geo.ini"
    p.write_text("[denjoy]\nfamily = geometric\ni_max = 100\n")
    assert main(["denjoy", "--config", str(p), "--out", str(tmp_path / "o")]) == 1


def test_console_entry(tmp_path, small_ini):
    proc = subprocess.run([sys.executable, "-m", "wanderlab.cli", "denjoy", "--config", str(small_ini),
                           "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "denjoy:" in proc.stdout
