import csv
import json
import math

import numpy as np
import pytest
import yaml

from polardd.cli import PRESETS, main
from polardd.io import read_series


def run(*argv):
    return main([str(a) for a in argv])


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_cfg(path, **cfg):
    path.write_text(yaml.safe_dump(cfg))
    return path


def test_presets_list(capsys):
    assert run("presets", "list") == 0
    out = capsys.readouterr().out
    for name, spec in PRESETS.items():
        assert f"{name}\t{spec['figure']}" in out


class TestSimulate:
    def test_pauli_preset_is_flat(self, tmp_path):
        assert run("simulate", "--preset", "fig7-pauli", "--out", tmp_path) == 0
        series = read_series(tmp_path / "series.csv")
        assert set(series) == {"H", "D", "R"}
        for s in series.values():
            assert np.allclose(s.purity, 1, atol=1e-12)
            assert np.allclose(s.fidelity, 1, atol=1e-12)

    def test_bare_preset_decays_to_half(self, tmp_path):
        assert run("simulate", "--preset", "fig5-bare", "--out", tmp_path) == 0
        series = read_series(tmp_path / "series.csv")
        for k in "DR":
            s = series[k]
            assert s.purity[25] == pytest.approx(0.5, abs=1e-3)
        assert np.allclose(series["H"].purity, 1, atol=1e-12)

    def test_noiseless_is_flat(self, tmp_path):
        cfg = write_cfg(tmp_path / "c.yaml", layout="bare", sigma_phi=0.0, inputs=["D", "R", "E"])
        assert run("simulate", "--config", cfg, "--out", tmp_path) == 0
        for s in read_series(tmp_path / "series.csv").values():
            assert np.allclose(s.purity, 1, atol=1e-12)

    def test_manifest(self, tmp_path):
        assert run("simulate", "--preset", "fig5-zcomp", "--out", tmp_path) == 0
        man = json.loads((tmp_path / "manifest.json").read_text())
        assert man["name"] == "fig5-zcomp"
        assert man["figure"] == "Fig. 6"
        assert man["command"] == "simulate"
        assert set(man["versions"]) >= {"polardd", "numpy", "scipy"}
        assert man["wall_time_s"] >= 0
        assert list(man["outputs"]) == ["series.csv"]

    @pytest.mark.parametrize("extra", [[], ["--samples", "20000", "--seed", "11"]])
    def test_replay_is_byte_identical(self, tmp_path, extra):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run("simulate", "--preset", "fig5-bare", "--out", a, *extra) == 0
        assert run("simulate", "--config", a / "manifest.json", "--out", b) == 0
        assert (a / "series.csv").read_bytes() == (b / "series.csv").read_bytes()
        ma, mb = (json.loads((d / "manifest.json").read_text()) for d in (a, b))
        assert ma["outputs"] == mb["outputs"]
        assert ma["spec"] == mb["spec"]

    def test_seed_changes_monte_carlo(self, tmp_path):
        for seed in (1, 2):
            assert run("simulate", "--preset", "fig5-bare", "--samples", "5000", "--seed", seed,
                       "--out", tmp_path / str(seed)) == 0
        assert (tmp_path / "1" / "series.csv").read_bytes() != (tmp_path / "2" / "series.csv").read_bytes()
        r = rows(tmp_path / "1" / "series.csv")
        assert r[0]["method"].startswith("montecarlo")
        assert "purity_se" in r[0]

    def test_json_format(self, tmp_path):
        assert run("simulate", "--preset", "fig7-pauli", "--format", "json", "--out", tmp_path) == 0
        data = json.loads((tmp_path / "series.json").read_text())
        assert len(data) == 3 * 21
        assert data[0]["purity"] == pytest.approx(1)

    def test_time_column(self, tmp_path):
        cfg = write_cfg(tmp_path / "c.yaml", layout="carr-purcell", time_column=True, n_max=5)
        assert run("simulate", "--config", cfg, "--out", tmp_path) == 0
        r = rows(tmp_path / "series.csv")
        # one step of a cycled layout spans two round trips
        assert float(r[1]["time_ns"]) == pytest.approx(2 * 6.80)

    def test_per_round_trip(self, tmp_path):
        cfg = write_cfg(tmp_path / "c.yaml", layout="carr-purcell", per_round_trip=True, n_max=5)
        assert run("simulate", "--config", cfg, "--out", tmp_path) == 0
        r = rows(tmp_path / "series.csv")
        assert len(r) == 3 * 11
        assert r[1]["half_cycle"] == "true"

    def test_counts_output(self, tmp_path):
        cfg = write_cfg(tmp_path / "c.yaml", layout="bare", inputs=["D"], n_max=5, counts_per_basis=1000)
        assert run("simulate", "--config", cfg, "--out", tmp_path) == 0
        r = rows(tmp_path / "counts_D.csv")
        assert len(r) == 6
        assert int(r[0]["D"]) > 900

    def test_quad_order_flag(self, tmp_path):
        assert run("simulate", "--preset", "fig5-bare", "--quad-order", "64", "--out", tmp_path) == 0
        assert json.loads((tmp_path / "manifest.json").read_text())["spec"]["quad_order"] == 64


class TestExitCodes:
    def test_unknown_key(self, tmp_path):
        cfg = write_cfg(tmp_path / "c.yaml", layuot="bare")
        assert run("simulate", "--config", cfg, "--out", tmp_path) == 2

    def test_unknown_preset(self, tmp_path):
        assert run("simulate", "--preset", "fig99", "--out", tmp_path) == 2

    def test_bad_layout(self, tmp_path):
        cfg = write_cfg(tmp_path / "c.yaml", layout="hexagonal")
        assert run("simulate", "--config", cfg, "--out", tmp_path) == 2

    def test_generic_without_theta(self, tmp_path):
        cfg = write_cfg(tmp_path / "c.yaml", layout="generic-bb")
        assert run("simulate", "--config", cfg, "--out", tmp_path) == 2

    def test_bad_input_vector(self, tmp_path):
        cfg = write_cfg(tmp_path / "c.yaml", inputs=[[1, 1, 0]])
        assert run("simulate", "--config", cfg, "--out", tmp_path) == 2

    def test_malformed_yaml(self, tmp_path):
        (tmp_path / "c.yaml").write_text("layout: [bare\n")
        assert run("simulate", "--config", tmp_path / "c.yaml", "--out", tmp_path) == 2

    def test_bad_flag(self):
        assert run("simulate", "--format", "xml") == 2

    def test_missing_counts(self, tmp_path):
        assert run("tomography", "--out", tmp_path) == 2

    def test_unidentifiable_fit(self, tmp_path):
        assert run("simulate", "--preset", "fig7-pauli", "--out", tmp_path) == 0
        assert run("fit", "--series", tmp_path / "series.csv", "--out", tmp_path) == 3

    def test_empty_count_record(self, tmp_path):
        (tmp_path / "c.csv").write_text("n_trip,H,V,D,A,R,L\n0,0,0,0,0,0,0\n")
        assert run("tomography", "--counts", tmp_path / "c.csv", "--out", tmp_path) == 3


@pytest.fixture(scope="module")
def sweep(tmp_path_factory):
    out = tmp_path_factory.mktemp("sweep")
    cfg = write_cfg(out / "c.yaml", layouts=["generic-free", "generic-bb"], phi0=0.0, n_max=200,
                    thetas=[0.0, math.pi / 8, math.pi / 4, math.pi / 2], average=True, grid_size=128)
    assert run("sweep-theta", "--config", cfg, "--out", out) == 0
    return read_series(out / "sweep.csv")


class TestSweepTheta:
    def test_bb_theta_zero_preserved(self, sweep):
        assert np.allclose(sweep["generic-bb@0.000000"].purity, 1, atol=1e-12)

    def test_bb_beats_free(self, sweep):
        for th in ("0.392699", "0.785398", "1.570796"):
            bb, fe = sweep[f"generic-bb@{th}"], sweep[f"generic-free@{th}"]
            assert np.all(bb.purity[:11] >= fe.purity[:11] - 1e-12)

    def test_free_tends_to_two_thirds(self, sweep):
        assert sweep["generic-free@1.570796"].purity[-1] == pytest.approx(2 / 3, abs=0.01)


class TestTomographyCommand:
    def test_closure(self, tmp_path):
        cfg = write_cfg(tmp_path / "c.yaml", layout="bare", inputs=["D"], n_max=10,
                        counts_per_basis=10 ** 8, count_noise="none")
        assert run("simulate", "--config", cfg, "--out", tmp_path) == 0
        assert run("tomography", "--counts", tmp_path / "counts_D.csv", "--out", tmp_path) == 0
        rec = rows(tmp_path / "reconstructed.csv")
        sim = rows(tmp_path / "series.csv")
        assert len(rec) == len(sim) == 11
        for a, b in zip(rec, sim):
            p = np.array([float(a[k]) for k in ("px", "py", "pz")])
            q = np.array([float(b[k]) for k in ("px", "py", "pz")])
            assert np.linalg.norm(p - q) <= 1e-4
            assert a["converged"] == "true"

    def test_reference_fidelity(self, tmp_path):
        cfg = write_cfg(tmp_path / "c.yaml", layout="pauli-group", inputs=["R"], n_max=3,
                        counts_per_basis=10 ** 6, count_noise="none")
        assert run("simulate", "--config", cfg, "--out", tmp_path) == 0
        tomo = write_cfg(tmp_path / "t.yaml", inputs=["R"], counts=str(tmp_path / "counts_R.csv"))
        assert run("tomography", "--config", tomo, "--out", tmp_path) == 0
        for r in rows(tmp_path / "reconstructed.csv"):
            assert float(r["fidelity"]) >= 0.9999


class TestFitCommand:
    def test_recovers_parameters(self, tmp_path):
        cfg = write_cfg(tmp_path / "c.yaml", layout="bare", inputs=["D", "R"], n_max=30, quad_order=256)
        assert run("simulate", "--config", cfg, "--out", tmp_path) == 0
        assert run("fit", "--series", tmp_path / "series.csv", "--out", tmp_path) == 0
        lines = (tmp_path / "fit.txt").read_text().splitlines()
        kv = dict(line.split(" = ", 1) for line in lines[1:])
        assert float(kv["sigma_phi"]) == pytest.approx(0.0839, rel=1e-4)
        assert float(kv["phi0"]) == pytest.approx(-0.2182, abs=1e-4)

    def test_purity_mode(self, tmp_path):
        cfg = write_cfg(tmp_path / "c.yaml", layout="z-compensated", inputs=["D"], n_max=30)
        assert run("simulate", "--config", cfg, "--out", tmp_path) == 0
        fit = write_cfg(tmp_path / "f.yaml", fit_mode="purity", series=str(tmp_path / "series.csv"))
        assert run("fit", "--config", fit, "--out", tmp_path) == 0
        assert "sigma_phi = 0.0839" in (tmp_path / "fit.txt").read_text()


class TestAnalyticCommand:
    def test_outputs(self, tmp_path):
        cfg = write_cfg(tmp_path / "c.yaml", layouts=["generic-bb"], thetas=[math.pi / 4], phi0=0.0,
                        inputs=["D"], n_max=10)
        assert run("analytic", "--config", cfg, "--out", tmp_path) == 0
        pred = rows(tmp_path / "analytic_generic-bb_0.785398_D.csv")
        num = read_series(tmp_path / "numeric.csv")["generic-bb@0.785398:D"]
        assert len(pred) == 11
        assert float(pred[0]["purity"]) == pytest.approx(1)
        assert np.allclose([float(r["purity"]) for r in pred], num.purity, atol=0.01)

    def test_rejects_bare(self, tmp_path):
        cfg = write_cfg(tmp_path / "c.yaml", layout="bare")
        assert run("analytic", "--config", cfg, "--out", tmp_path) == 2
