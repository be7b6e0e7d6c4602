import csv
import json
import math

import pytest

from specnet import io as sio
from specnet.cli import main


@pytest.fixture()
def target_file(tmp_path):
    path = tmp_path / "target.json"
    path.write_text(json.dumps({"targets": [1.0, 3.0], "N": 5, "epsilon": 0.1}))
    return path


@pytest.fixture()
def p3_model_file(tmp_path):
    w12 = math.pi * (8 + math.sqrt(10)) / 3
    w23 = math.pi * (8 - math.sqrt(10)) / 3
    obj = {
        "dual_graph": {
            "vertex_count": 3,
            "measures": [2 * math.pi, 4 * math.pi, 2 * math.pi],
            "edges": [[0, 1, w12], [1, 2, w23]],
        },
        "vertex_genera": [1, 1, 1],
    }
    path = tmp_path / "p3.json"
    path.write_text(json.dumps(obj))
    return path


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


class TestPrescribeAssembleSpectrum:
    def test_pipeline(self, tmp_path, target_file):
        out = tmp_path / "run"
        rc = main(["--out", str(out), "--seed", "0", "prescribe", "--target", str(target_file)])
        assert rc == 0
        sol = json.loads((out / "solution.json").read_text())
        assert sol["N"] == 5
        assert len(sol["weights"]) == 10
        assert sol["mismatch"] <= 1e-8
        assert all(w > 0 for _, _, w in sol["weights"])

        rc = main(
            [
                "--out", str(out), "--seed", "0",
                "assemble",
                "--target", str(target_file),
                "--solution", str(out / "solution.json"),
                "--m", "4",
            ]
        )
        assert rc == 0
        g = sio.graph_from_text((out / "network.txt").read_text())
        book = json.loads((out / "network_bookkeeping.json").read_text())
        assert g.vertex_count == len(book["cluster_of"])
        assert sum(1 for c in book["cluster_of"] if c >= 0) == 5 * 64

        rc = main(
            ["--out", str(out), "--seed", "0", "spectrum", "--graph", str(out / "network.txt"), "--k", "6"]
        )
        assert rc == 0
        rows = read_csv(out / "spectrum.csv")
        assert rows[0] == ["k", "eigenvalue", "residual"]
        assert len(rows) == 7
        assert abs(float(rows[1][1])) < 1e-10  # kernel

    def test_spectrum_dense_flag_and_json_format(self, tmp_path):
        g_path = tmp_path / "k3.txt"
        g_path.write_text("n 3\nm 1.0 1.0 1.0\ne 0 1 1.0\ne 0 2 1.0\ne 1 2 1.0\n")
        rc = main(
            ["--out", str(tmp_path), "--format", "json", "spectrum", "--graph", str(g_path), "--k", "3", "--dense"]
        )
        assert rc == 0
        data = json.loads((tmp_path / "spectrum.json").read_text())
        assert [round(d["eigenvalue"], 9) for d in data] == [0.0, 3.0, 3.0]


class TestSweepAndRatios:
    def test_small_sweep_outputs(self, tmp_path, target_file):
        out = tmp_path / "sweep"
        rc = main(
            ["--out", str(out), "--seed", "0", "sweep", "--target", str(target_file), "--m-list", "4,6"]
        )
        assert rc in (0, 2)  # small sweeps may fail guards; files must exist
        rows = read_csv(out / "sweep.csv")
        assert rows[0][0] == "m"
        assert [r[0] for r in rows[1:]] == ["4", "6"]
        meta = json.loads((out / "sweep_meta.json").read_text())
        assert meta["seed"] == 0
        assert "verdicts" in meta and "versions" in meta
        for fig in ("reduction_error.svg", "rescaled_spectrum.svg", "parasitic.svg"):
            assert (out / fig).exists()
        assert (out / "ratios.csv").exists()

        rc = main(["--out", str(out), "ratios", "--sweep-meta", str(out / "sweep_meta.json")])
        assert rc == 0
        ratio_rows = read_csv(out / "ratios.csv")
        assert ratio_rows[0][0] == "m"
        assert len(ratio_rows) == 3

    def test_ratios_skips_failed_rows(self, tmp_path):
        meta = {
            "target": {"targets": [1.0, 3.0], "N": 5, "epsilon": 0.1},
            "V_F": 1.0,
            "mu": [1.0, 3.0, 6.0, 7.0],
            "seed": 0,
            "rows": [
                {"m": 2, "node_count": 0, "error": "AssemblyError: m too small"},
                {
                    "m": 10,
                    "node_count": 1,
                    "nu": [0.0, 1e-4, 3e-4, 6e-4, 7e-4, 1e-2],
                    "rescaled": [0.0, 1.0, 3.0, 6.0, 7.0, 100.0],
                    "parasitic": 1.0,
                    "error": None,
                },
            ],
        }
        path = tmp_path / "meta.json"
        path.write_text(json.dumps(meta))
        rc = main(["--out", str(tmp_path), "ratios", "--sweep-meta", str(path)])
        assert rc == 0
        rows = read_csv(tmp_path / "ratios.csv")
        assert len(rows) == 2  # header + the one good row
        assert rows[1][0] == "10"


class TestSurface:
    def test_schedule_and_figure(self, tmp_path, p3_model_file):
        out = tmp_path / "surf"
        rc = main(
            ["--out", str(out), "surface", "--model", str(p3_model_file), "--deltas", "0.1,0.01"]
        )
        assert rc == 0
        rows = read_csv(out / "surface.csv")
        assert rows[0] == [
            "delta", "lam_0", "lam_1", "lam_2",
            "rescaled_0", "rescaled_1", "rescaled_2", "kappa",
        ]
        first = [float(x) for x in rows[1]]
        assert first[0] == 0.1
        assert first[2] == pytest.approx(0.1, abs=1e-12)
        assert first[5] == pytest.approx(1.0, abs=1e-10)
        assert first[7] == pytest.approx(-10.0)
        assert (out / "surface_spectra.svg").exists()


class TestClusterGap:
    def test_certificates(self, tmp_path):
        out = tmp_path / "gap"
        rc = main(
            ["--out", str(out), "--seed", "3", "cluster-gap", "--size", "64", "--D", "2", "--samples", "2"]
        )
        assert rc == 0
        rows = read_csv(out / "cluster_gap.csv")
        assert len(rows) == 3
        header = rows[0]
        lam2_idx = header.index("lambda2_adjacency")
        thr_idx = header.index("threshold")
        for row in rows[1:]:
            assert float(row[lam2_idx]) <= float(row[thr_idx])


class TestExample013:
    def test_all_pass(self, tmp_path):
        out = tmp_path / "ex"
        rc = main(["--out", str(out), "example-013"])
        assert rc == 0
        rows = read_csv(out / "example013.csv")
        assert all(row[-1] == "True" for row in rows[1:])
        assert (out / "example013.svg").exists()


class TestConfigFile:
    def test_config_round_trip(self, tmp_path, p3_model_file):
        from specnet.config import RunConfig

        cfg = RunConfig(seed=9, delta_schedule=(0.5,))
        cfg_path = tmp_path / "cfg.json"
        cfg.to_file(cfg_path)
        loaded = RunConfig.from_file(cfg_path)
        assert loaded == cfg

        out = tmp_path / "surf"
        rc = main(
            ["--config", str(cfg_path), "--out", str(out), "surface", "--model", str(p3_model_file)]
        )
        assert rc == 0
        rows = read_csv(out / "surface.csv")
        assert len(rows) == 2  # one delta from the config schedule
        assert float(rows[1][0]) == 0.5

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"no_such_option": 1}')
        from specnet.config import RunConfig

        with pytest.raises(ValueError):
            RunConfig.from_file(path)
