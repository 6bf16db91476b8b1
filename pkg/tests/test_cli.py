import csv
import json
import shutil
import time

import pytest

from inla_lite import cli
from inla_lite import data as io
from inla_lite.errors import InputError


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


@pytest.fixture(scope="module")
def small(tmp_path_factory):
    d = tmp_path_factory.mktemp("small")
    assert cli.main(["simulate", "--units", "10", "--seed", "1", "--out", str(d)]) == 0
    return d


@pytest.fixture(scope="module")
def region(tmp_path_factory):
    d = tmp_path_factory.mktemp("region")
    assert cli.main(["simulate", "--preset", "region-like", "--seed", "42", "--out", str(d)]) == 0
    return d


def fit_args(src, out, *extra):
    return ["fit", "--data", str(src / "data.csv"), "--adjacency", str(src / "adjacency.txt"),
            "--out", str(out), *extra]


# ---------------------------------------------------------------------------
# ingestion


def test_three_row_file(tmp_path):
    d = write(tmp_path / "d.csv", "unit_id,y,N\n0,1,5\n1,2,6\n2,0,4\n")
    a = write(tmp_path / "a.txt", "0 1 1\n1 2 0 2\n2 1 1\n")
    data, graph = io.ingest(d, a)
    assert len(data) == 3 and graph.n_units == 3


@pytest.mark.parametrize("row, message", [
    ("1,2,0", "line 3: N must be at least 1"),
    ("1,7,6", "line 3: y=7 outside 0..N=6"),
    ("1,x,6", "line 3: column 'y' is not a number"),
    ("1,2", "line 3: expected 3 fields"),
])
def test_bad_rows_name_their_line(tmp_path, row, message):
    d = write(tmp_path / "d.csv", f"unit_id,y,N\n0,1,5\n{row}\n2,0,4\n")
    a = write(tmp_path / "a.txt", "0 1 1\n1 2 0 2\n2 1 1\n")
    with pytest.raises(InputError, match=message):
        io.ingest(d, a)


def test_adjacency_errors(tmp_path):
    d = write(tmp_path / "d.csv", "unit_id,y,N\n0,1,5\n1,2,6\n2,0,4\n")
    asym = write(tmp_path / "asym.txt", "0 1 1\n1 1 2\n2 1 1\n")
    with pytest.raises(InputError, match=r"asymmetric adjacency, pair \(0, 1\)"):
        io.ingest(d, asym)
    unknown = write(tmp_path / "unk.txt", "0 1 1\n1 2 0 5\n2 0\n")
    with pytest.raises(InputError, match="unknown unit 5"):
        io.ingest(d, unknown)
    small = write(tmp_path / "two.txt", "0 1 1\n1 1 0\n")
    with pytest.raises(InputError, match="unit_id 2 is not a unit"):
        io.ingest(d, small)


def test_input_errors_exit_2(tmp_path, capsys):
    d = write(tmp_path / "d.csv", "unit_id,y,N\n0,1,5\n1,2,0\n2,0,4\n")
    a = write(tmp_path / "a.txt", "0 1 1\n1 2 0 2\n2 1 1\n")
    code = cli.main(["fit", "--data", str(d), "--adjacency", str(a), "--preset", "icar-only", "--out", str(tmp_path / "o")])
    assert code == 2
    assert "line 3" in capsys.readouterr().err


def test_region_loads_quickly(region):
    t0 = time.perf_counter()
    data, graph = io.ingest(region / "data.csv", region / "adjacency.txt")
    assert time.perf_counter() - t0 < 1.0
    assert len(data) == graph.n_units == 377


# ---------------------------------------------------------------------------
# fit


def test_fit_outputs(small, tmp_path):
    out = tmp_path / "fit"
    assert cli.main(fit_args(small, out, "--preset", "icar-only")) == 0
    dic = read_csv(out / "dic.csv")
    assert dic[0] == ["Model", "p_D", "DIC"] and len(dic) == 2
    for name in ("latent_marginals.csv", "hyper_marginals.csv", "effects_exp.csv", "unit_summaries.csv"):
        raw = (out / name).read_bytes()
        assert b"\r\n" not in raw and raw.endswith(b"\n")
        raw.decode("utf-8")
    units = read_csv(out / "unit_summaries.csv")
    assert units[0][:4] == ["unit_id", "y", "N", "srr_observed"] and len(units) == 11
    prov = json.loads((out / "provenance.json").read_text())
    assert prov["options"]["delta_z"] == 1.0 and prov["options"]["delta_pi"] == 2.5
    assert prov["model"]["preset"] == "icar-only"
    # floats carry 17 significant digits
    mean = read_csv(out / "latent_marginals.csv")[1][3]
    assert len(mean.replace("-", "").replace(".", "").lstrip("0").split("e")[0]) >= 15


def test_convolution_has_two_hyperparameters(small, tmp_path):
    out = tmp_path / "conv"
    assert cli.main(fit_args(small, out, "--preset", "convolution")) == 0
    rows = read_csv(out / "hyper_marginals.csv")[1:]
    assert sorted({r[0] for r in rows}) == ["tau[icar]", "tau[iid]"]
    assert len(rows) == 4  # precision and log-precision scale for each


def test_rerun_and_replay_are_byte_identical(small, tmp_path):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert cli.main(fit_args(small, a, "--preset", "icar-time")) == 0
    assert cli.main(fit_args(small, b, "--preset", "icar-time")) == 0
    assert cli.main(["replay", str(a / "provenance.json"), "--out", str(c)]) == 0
    for f in a.iterdir():
        assert f.read_bytes() == (b / f.name).read_bytes(), f.name
        assert f.read_bytes() == (c / f.name).read_bytes(), f.name


def test_replay_refuses_changed_inputs(small, tmp_path):
    src = tmp_path / "src"
    shutil.copytree(small, src)
    out = tmp_path / "o"
    assert cli.main(fit_args(src, out, "--preset", "icar-only")) == 0
    with open(src / "data.csv", "a") as fh:
        fh.write("\n")
    assert cli.main(["replay", str(out / "provenance.json"), "--out", str(tmp_path / "r")]) == 2


def test_model_config_file(small, tmp_path):
    cfg = write(tmp_path / "m.json", json.dumps({"terms": [{"kind": "intercept"}, {"kind": "icar"}], "name": "mine"}))
    out = tmp_path / "m"
    assert cli.main(fit_args(small, out, "--model", str(cfg))) == 0
    assert read_csv(out / "dic.csv")[1][0] == "mine"


def test_config_errors_exit_4(small, tmp_path):
    assert cli.main(fit_args(small, tmp_path / "x")) == 4
    assert cli.main(fit_args(small, tmp_path / "x", "--preset", "no-such-model")) == 4
    assert cli.main(["simulate", "--out", str(tmp_path / "s")]) == 4


def test_figures_are_opt_in(small, tmp_path):
    out = tmp_path / "f"
    assert cli.main(fit_args(small, out, "--preset", "icar-only", "--figures")) == 0
    pngs = sorted(p.name for p in (out / "figures").glob("*.png"))
    assert pngs
    for p in (out / "figures").glob("*.png"):
        assert p.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    plain = tmp_path / "p"
    assert cli.main(fit_args(small, plain, "--preset", "icar-only")) == 0
    assert not (plain / "figures").exists()


# ---------------------------------------------------------------------------
# compare, simulate, oracle


def test_compare_skips_missing_covariate(small, tmp_path):
    rows = read_csv(small / "data.csv")
    keep = [i for i, h in enumerate(rows[0]) if h != "access_time"]
    src = tmp_path / "src"
    src.mkdir()
    with open(src / "data.csv", "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows([[r[i] for i in keep] for r in rows])
    shutil.copy(small / "adjacency.txt", src / "adjacency.txt")
    out = tmp_path / "cmp"
    code = cli.main(["compare", "--data", str(src / "data.csv"), "--adjacency", str(src / "adjacency.txt"),
                     "--presets", "icar-only,icar-time,icar-dist", "--out", str(out)])
    assert code == 0
    table = read_csv(out / "dic_table.csv")
    assert table[0] == ["Model", "p_D", "DIC", "preset", "lowest_dic", "note"]
    done = [r for r in table[1:] if not r[5]]
    skipped = [r for r in table[1:] if r[5]]
    assert [r[3] for r in skipped] == ["icar-time"] and "access_time" in skipped[0][5]
    assert len(done) == 2
    assert float(done[0][2]) <= float(done[1][2]) and done[0][4] == "true"


def test_compare_identical_presets(small, tmp_path):
    out = tmp_path / "cmp"
    assert cli.main(["compare", "--data", str(small / "data.csv"), "--adjacency", str(small / "adjacency.txt"),
                     "--presets", "icar-only,icar-only", "--out", str(out)]) == 0
    rows = read_csv(out / "dic_table.csv")[1:]
    assert len(rows) == 2 and abs(float(rows[0][2]) - float(rows[1][2])) < 1e-9


def test_simulate_contract(small, region, tmp_path):
    assert len(read_csv(small / "data.csv")) == 11
    assert len(read_csv(region / "data.csv")) == 378
    again = tmp_path / "again"
    assert cli.main(["simulate", "--units", "10", "--seed", "1", "--out", str(again)]) == 0
    for name in ("data.csv", "adjacency.txt", "truth.csv"):
        assert (again / name).read_bytes() == (small / name).read_bytes()
    prov = json.loads((small / "provenance.json").read_text())
    assert prov["seed"] == 1 and prov["rng"]


def test_oracle_command(tmp_path):
    d = write(tmp_path / "d.csv", "unit_id,y,N\n0,3,20\n1,10,20\n2,18,20\n")
    a = write(tmp_path / "a.txt", "0 1 1\n1 2 0 2\n2 1 1\n")
    base = ["oracle", "--data", str(d), "--adjacency", str(a), "--preset", "icar-only"]
    assert cli.main(base + ["--method", "mcmc", "--out", str(tmp_path / "m")]) == 4
    assert cli.main(base + ["--method", "mcmc", "--seed", "3", "--iterations", "20000",
                            "--out", str(tmp_path / "m")]) == 0
    rows = read_csv(tmp_path / "m" / "oracle_latent.csv")
    assert rows[0] == ["label", "mean", "sd", "mcse"] and len(rows) == 5
    prov = json.loads((tmp_path / "m" / "provenance.json").read_text())
    assert prov["seed"] == 3 and prov["split_rhat"] < 1.05
    assert cli.main(base + ["--out", str(tmp_path / "q")]) == 0
    q = read_csv(tmp_path / "q" / "oracle_latent.csv")
    assert float(q[1][1]) == pytest.approx(0.148, abs=1e-3)
