import csv
import os

import pytest
from hypothesis import given, settings, strategies as st

from rcpp.cli import cmd_certify, cmd_graph_check, cmd_graph_emit, cmd_run, main
from rcpp.config import SCHEMA, default_config, parse_config, parse_config_text, reference_page
from rcpp.errors import ConfigError


def write(tmp_path, text, name="c.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def summary(out):
    with open(os.path.join(out, "summary.csv")) as fh:
        return list(csv.DictReader(fh))


# ---- config -------------------------------------------------------------------

def test_defaults(tmp_path, monkeypatch):
    monkeypatch.delenv("RCPP_OUT_DIR", raising=False)
    cfg = parse_config(write(tmp_path, "[graph]\n"))
    assert (cfg.graph.n, cfg.graph.extra_edges, cfg.graph.topology) == (20, 20, "ring")
    assert (cfg.problem.p, cfg.problem.rho) == (10, 0.1)
    assert cfg.algorithm.name == ("rcpp",)
    assert (cfg.algorithm.lambda_, cfg.algorithm.c, cfg.algorithm.K) == (0.02, 0.995, 5000)
    assert (cfg.compressor.kind, cfg.compressor.b) == ("qn", 2)
    assert cfg.output.directory == "runs" and cfg.output.seeds == (0,)
    for sec, keys in SCHEMA.items():
        for key in keys:
            assert hasattr(getattr(cfg, sec), "lambda_" if key == "lambda" else key)


def test_out_dir_env(monkeypatch):
    monkeypatch.setenv("RCPP_OUT_DIR", "/tmp/elsewhere")
    assert default_config().output.directory == "/tmp/elsewhere"


def test_gamma_out_of_range(tmp_path):
    with pytest.raises(ConfigError) as exc:
        parse_config(write(tmp_path, "[algorithm]\ngamma_x = 1.5\n"))
    (msg,) = exc.value.errors
    assert msg.startswith("algorithm.gamma_x (")
    assert ":2)" in msg and "(0, 1]" in msg and "consensus-gain" in msg


def test_unknown_kind_lists_choices():
    with pytest.raises(ConfigError) as exc:
        parse_config_text("[compressor]\nkind = foo\n")
    msg = str(exc.value)
    assert "compressor.kind" in msg and "'foo'" in msg
    for kind in ("identity", "qn", "topk", "qtn", "uniform"):
        assert kind in msg


def test_all_errors_collected():
    text = "[graph]\nn = 0\nbogus = 1\n[problem]\nrho = -1\n[algorithm]\nK = many\nname = rcpp, sgd\n[extra]\n"
    with pytest.raises(ConfigError) as exc:
        parse_config_text(text)
    errs = exc.value.errors
    joined = "\n".join(errs)
    for fragment in ("graph.n", "graph.bogus", "problem.rho", "algorithm.K", "'sgd'", "[extra]"):
        assert fragment in joined
    assert len(errs) >= 6


def test_alpha_bound_uses_compressor():
    with pytest.raises(ConfigError, match="alpha_x"):
        parse_config_text("[algorithm]\nalpha_x = 1.5\n[compressor]\nkind = identity\n")


def test_missing_file():
    with pytest.raises(ConfigError, match="not found"):
        parse_config("/nonexistent/x.ini")


def test_overrides():
    cfg = parse_config_text("[algorithm]\nK = 10\n", ["algorithm.K=20", "compressor.kind=uniform", "output.seeds=1,2"])
    assert cfg.algorithm.K == 20 and cfg.compressor.kind == "uniform" and cfg.output.seeds == (1, 2)
    with pytest.raises(ConfigError):
        parse_config_text("", ["algorithm.nope=1"])
    with pytest.raises(ConfigError):
        parse_config_text("", ["noequals"])


def test_edgelist_topology_needs_path():
    with pytest.raises(ConfigError, match="graph.path"):
        parse_config_text("[graph]\ntopology = edgelist\n")


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(2, 30), K=st.integers(0, 10_000), lam=st.floats(1e-6, 1.0),
    gamma=st.floats(0.01, 1.0), c=st.floats(0.5, 1.0), kind=st.sampled_from(["identity", "topk", "uniform"]),
    seeds=st.lists(st.integers(0, 99), min_size=1, max_size=4),
)
def test_round_trip(n, K, lam, gamma, c, kind, seeds):
    cfg = default_config().with_overrides(
        graph={"n": n, "extra_edges": 0},
        algorithm={"K": K, "lambda_": lam, "gamma_x": gamma, "c": c},
        compressor={"kind": kind},
        output={"seeds": tuple(seeds)},
    )
    assert parse_config_text(cfg.to_text()) == cfg


def test_reference_page_lists_every_key():
    page = reference_page()
    for sec, keys in SCHEMA.items():
        assert f"## [{sec}]" in page
        for key in keys:
            assert f"| `{key}` |" in page


# ---- cmd_run ------------------------------------------------------------------

def test_zero_iterations(tmp_path):
    out = str(tmp_path / "o")
    assert cmd_run(None, ["algorithm.K=0"], out=out) == 0
    with open(os.path.join(out, "rcpp_seed0.csv")) as fh:
        assert len(fh.read().splitlines()) == 2
    (row,) = summary(out)
    assert row["c_hat"] == "no fit" and row["r2"] == "no fit"


def test_summary_and_config_written(tmp_path):
    out = str(tmp_path / "o")
    cfg_path = write(tmp_path, "[algorithm]\nK = 300\nname = rcpp, pushpull\n[output]\nseeds = 0, 1\n")
    assert cmd_run(cfg_path, out=out) == 0
    rows = summary(out)
    assert [(r["algorithm"], r["seed"]) for r in rows] == [("rcpp", "0"), ("rcpp", "1"), ("pushpull", "0"), ("pushpull", "1")]
    assert parse_config(os.path.join(out, "config.ini")).algorithm.K == 300


def test_static_uniform_flags_plateau(tmp_path):
    out = str(tmp_path / "o")
    cmd_run(None, ["compressor.kind=uniform", "algorithm.name=rcpp_static,rcpp"], out=out)
    static, dynamic = summary(out)
    assert static["plateau"] == "true" and static["reached_target"] == "false"
    assert dynamic["plateau"] == "false" and dynamic["reached_target"] == "true"


def test_divergence_keeps_partial_csv(tmp_path):
    out = str(tmp_path / "o")
    with pytest.warns(UserWarning):
        status = cmd_run(None, ["algorithm.lambda=5", "compressor.kind=identity"], out=out)
    assert status == 1
    (row,) = summary(out)
    assert row["status"].startswith("diverged@")
    k = int(row["status"].split("@")[1])
    with open(os.path.join(out, "rcpp_seed0.csv")) as fh:
        assert len(fh.read().splitlines()) == k + 1


def test_config_error_exit_code(tmp_path, capsys):
    assert cmd_run(None, ["algorithm.gamma_y=2"], out=str(tmp_path)) == 2
    assert "algorithm.gamma_y" in capsys.readouterr().err


def test_csvs_identical_across_workers(tmp_path):
    outs = []
    for i, workers in enumerate((1, 2, 1)):
        out = str(tmp_path / f"w{i}")
        cmd_run(None, ["algorithm.K=400", "output.seeds=0,1,2"], out=out, workers=workers)
        outs.append(out)
    names = sorted(f for f in os.listdir(outs[0]) if f.endswith(".csv"))
    assert "rcpp_seed2.csv" in names
    for name in names:
        blobs = [open(os.path.join(o, name), "rb").read() for o in outs]
        assert blobs[0] == blobs[1] == blobs[2]


# ---- certify / graph / main ---------------------------------------------------

def test_certify_identity(capsys):
    assert cmd_certify("identity", 16, 1000, 0) == 0
    out = capsys.readouterr().out
    assert "C_hat       = 0" in out and "sigma2_hat  = 0" in out


def test_certify_uniform_and_topk():
    assert cmd_certify("uniform", 8, 20_000, 0, level=1.0) == 0
    assert cmd_certify("topk", 16, 20_000, 0, k=4) == 0


def test_graph_emit_and_check(tmp_path, capsys):
    path = str(tmp_path / "g.txt")
    assert cmd_graph_emit(6, 4, 1, path) == 0
    assert cmd_graph_check(path) == 0
    out = capsys.readouterr().out
    assert "strongly connected: True" in out and "mixing: OK" in out


def test_graph_check_reports_violation(tmp_path, capsys):
    path = write(tmp_path, "3\n0 1\n1 2\n", "chain.txt")
    assert cmd_graph_check(path) == 1
    assert "mixing: FAIL" in capsys.readouterr().out


def test_main_dispatch(tmp_path, capsys):
    assert main(["defaults"]) == 0
    assert "[algorithm]" in capsys.readouterr().out
    assert main(["defaults", "--markdown"]) == 0
    assert "# Configuration reference" in capsys.readouterr().out
    assert main(["run", "--set", "algorithm.K=5", "--seed", "3", "--out", str(tmp_path)]) == 0
    assert os.path.exists(tmp_path / "rcpp_seed3.csv")
    capsys.readouterr()
    assert main(["graph", "emit", "--n", "3", "--extra-edges", "0"]) == 0
    assert capsys.readouterr().out.startswith("3\n")
    with pytest.raises(SystemExit):
        main(["certify", "--kind", "foo"])


def test_shipped_configs_parse():
    root = os.path.join(os.path.dirname(__file__), os.pardir, "configs")
    names = sorted(os.listdir(root))
    assert "default.ini" in names
    for name in names:
        parse_config(os.path.join(root, name))
    pin = {"directory": "runs"}
    shipped = parse_config(os.path.join(root, "default.ini")).with_overrides(output=pin)
    assert shipped == default_config().with_overrides(output=pin)
