import csv
import json

import numpy as np
import pytest
import yaml

from kposim.cli import main


def write_cfg(tmp_path, doc, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(doc))
    return str(path)


def base_doc(**sections):
    doc = {
        "physics": {
            "chi_over_2pi_mhz": 18.0,
            "kappa_e_over_2pi_mhz": 0.47,
            "kappa_i_over_2pi_mhz": 0.26,
        },
        "numerics": {"n_trunc": 16},
    }
    doc.update(sections)
    return doc


def read_csv_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


class TestSpectrumCommand:
    def test_two_photon_splitting_column(self, tmp_path):
        cfg = write_cfg(
            tmp_path, base_doc(spectrum={"n_partner": 2, "p_over_2pi_mhz": [1.0]})
        )
        assert main(["spectrum", "--config", cfg, "--out", str(tmp_path)]) == 0
        rows = read_csv_rows(tmp_path / "spectrum.csv")
        assert len(rows) == 1
        split = float(rows[0]["splitting_over_2pi_mhz"])
        assert abs(split - 2 * np.sqrt(2)) / (2 * np.sqrt(2)) <= 1e-3
        sidecar = json.loads((tmp_path / "spectrum.json").read_text())
        assert sidecar["version"]
        assert sidecar["metadata"]["delta_star_over_2pi_mhz"] == pytest.approx(-9.0)

    def test_twelve_photon_matches_library(self, tmp_path):
        # oracle: the spectral layer called directly at the same truncation
        from kposim import FockSpace, KpoParams, degenerate_pair_at, energy_splitting
        from kposim.units import TWO_PI

        doc = base_doc(spectrum={"n_partner": 12, "p_over_2pi_mhz": [0.4, 0.7, 1.0]})
        doc["numerics"]["n_trunc"] = 40
        cfg = write_cfg(tmp_path, doc)
        assert main(["spectrum", "--config", cfg, "--out", str(tmp_path)]) == 0
        rows = read_csv_rows(tmp_path / "spectrum.csv")
        for row in rows:
            params = KpoParams.from_mhz(18.0, 0.0, float(row["p_over_2pi_mhz"]))
            pair = degenerate_pair_at(FockSpace(40), params, 12)
            assert float(row["splitting_over_2pi_mhz"]) == pytest.approx(
                energy_splitting(pair) / TWO_PI, rel=1e-12, abs=1e-18
            )
            assert float(row["fid_plus"]) == pytest.approx(pair.fid_plus, rel=1e-12)

    def test_empty_p_list_rejected(self, tmp_path):
        cfg = write_cfg(tmp_path, base_doc(spectrum={"n_partner": 2, "p_over_2pi_mhz": []}))
        assert main(["spectrum", "--config", cfg, "--out", str(tmp_path)]) == 2

    def test_missing_section(self, tmp_path):
        cfg = write_cfg(tmp_path, base_doc())
        assert main(["spectrum", "--config", cfg, "--out", str(tmp_path)]) == 2


class TestEvolveCommand:
    def test_closed_two_photon_period_return(self, tmp_path):
        # after one full population period the two-photon occupation
        # returns to zero
        period = float(1.0 / (2 * np.sqrt(2) * 1.0))
        doc = base_doc(
            evolve={
                "mode": "closed",
                "delta_over_2pi_mhz": -9.0,
                "p_over_2pi_mhz": 1.0,
                "t_final_us": period,
                "dt_out_us": period / 64,
                "initial": "vacuum",
            }
        )
        doc["physics"]["kappa_e_over_2pi_mhz"] = 0.0
        doc["physics"]["kappa_i_over_2pi_mhz"] = 0.0
        cfg = write_cfg(tmp_path, doc)
        assert main(["evolve", "--config", cfg, "--out", str(tmp_path)]) == 0
        rows = read_csv_rows(tmp_path / "trajectory.csv")
        assert float(rows[-1]["pop_2"]) <= 1e-3

    def test_open_trajectory_columns(self, tmp_path):
        doc = base_doc(
            evolve={
                "mode": "open",
                "delta_over_2pi_mhz": -27.0,
                "p_over_2pi_mhz": 0.5,
                "t_final_us": 1.0,
                "dt_out_us": 0.25,
                "initial": "fock:1",
            }
        )
        doc["numerics"]["n_trunc"] = 8
        cfg = write_cfg(tmp_path, doc)
        assert main(["evolve", "--config", cfg, "--out", str(tmp_path)]) == 0
        rows = read_csv_rows(tmp_path / "trajectory.csv")
        assert len(rows) == 5
        assert set(rows[0]) == {"time_us", "photon_number"} | {f"pop_{k}" for k in range(8)}
        assert float(rows[0]["photon_number"]) == pytest.approx(1.0, abs=1e-12)

    def test_dt_out_validation(self, tmp_path):
        doc = base_doc(
            evolve={
                "mode": "closed",
                "delta_over_2pi_mhz": -9.0,
                "p_over_2pi_mhz": 1.0,
                "t_final_us": 0.5,
                "dt_out_us": 1.5,
                "initial": "vacuum",
            }
        )
        cfg = write_cfg(tmp_path, doc)
        assert main(["evolve", "--config", cfg, "--out", str(tmp_path)]) == 2

    def test_initial_index_bound(self, tmp_path):
        doc = base_doc(
            evolve={
                "mode": "closed",
                "delta_over_2pi_mhz": -9.0,
                "p_over_2pi_mhz": 1.0,
                "t_final_us": 0.5,
                "dt_out_us": 0.1,
                "initial": "fock:99",
            }
        )
        cfg = write_cfg(tmp_path, doc)
        assert main(["evolve", "--config", cfg, "--out", str(tmp_path)]) == 2


class TestSteadyCommand:
    def test_undriven_dark(self, tmp_path, capsys):
        cfg = write_cfg(
            tmp_path, base_doc(steady={"delta_over_2pi_mhz": -9.0, "p_over_2pi_mhz": 0.0})
        )
        assert main(["steady", "--config", cfg, "--out", str(tmp_path)]) == 0
        out = capsys.readouterr().out
        assert "steady photon number" in out
        rows = read_csv_rows(tmp_path / "steady.csv")
        assert float(rows[0]["photon_number"]) == pytest.approx(0.0, abs=1e-10)

    def test_resonant_point_enhanced(self, tmp_path):
        doc = base_doc(
            steady={"delta_over_2pi_mhz": -9.0, "p_over_2pi_mhz": 1.0},
        )
        cfg = write_cfg(tmp_path, doc)
        main(["steady", "--config", cfg, "--out", str(tmp_path)])
        on_peak = float(read_csv_rows(tmp_path / "steady.csv")[0]["photon_number"])
        doc2 = base_doc(steady={"delta_over_2pi_mhz": -22.0, "p_over_2pi_mhz": 1.0})
        cfg2 = write_cfg(tmp_path, doc2, name="cfg2.yaml")
        main(["steady", "--config", cfg2, "--out", str(tmp_path)])
        off_peak = float(read_csv_rows(tmp_path / "steady.csv")[0]["photon_number"])
        assert on_peak > 5 * off_peak

    def test_missing_omega_r_named(self, tmp_path, capsys):
        doc = base_doc(
            steady={"delta_over_2pi_mhz": -9.0, "p_over_2pi_mhz": 0.0, "output_power": True}
        )
        cfg = write_cfg(tmp_path, doc)
        assert main(["steady", "--config", cfg, "--out", str(tmp_path)]) == 2
        assert "omega_r" in capsys.readouterr().err

    def test_power_column_present(self, tmp_path):
        doc = base_doc(
            steady={"delta_over_2pi_mhz": -9.0, "p_over_2pi_mhz": 0.5, "output_power": True}
        )
        doc["physics"]["omega_r_over_2pi_ghz"] = 10.0
        cfg = write_cfg(tmp_path, doc)
        assert main(["steady", "--config", cfg, "--out", str(tmp_path)]) == 0
        rows = read_csv_rows(tmp_path / "steady.csv")
        assert "output_power_w" in rows[0]
        assert float(rows[0]["output_power_w"]) > 0.0

    def test_zero_loss_is_numerical_failure(self, tmp_path):
        doc = base_doc(steady={"delta_over_2pi_mhz": -9.0, "p_over_2pi_mhz": 0.5})
        doc["physics"]["kappa_e_over_2pi_mhz"] = 0.0
        doc["physics"]["kappa_i_over_2pi_mhz"] = 0.0
        cfg = write_cfg(tmp_path, doc)
        assert main(["steady", "--config", cfg, "--out", str(tmp_path)]) == 3


class TestSweepCommand:
    def test_small_grid_rows_and_sidecar(self, tmp_path):
        doc = base_doc(
            sweep={
                "observable": "steady_photon",
                "delta_min_over_2pi_mhz": -10.0,
                "delta_max_over_2pi_mhz": -8.0,
                "delta_count": 2,
                "p_min_over_2pi_mhz": 0.0,
                "p_max_over_2pi_mhz": 1.0,
                "p_count": 2,
            }
        )
        doc["numerics"]["n_trunc"] = 10
        cfg = write_cfg(tmp_path, doc)
        assert main(["sweep", "--config", cfg, "--out", str(tmp_path), "--workers", "1"]) == 0
        lines = (tmp_path / "sweep.csv").read_text().strip().split("\n")
        assert len(lines) == 1 + 4
        payload = json.loads((tmp_path / "sweep.json").read_text())
        assert payload["config"]["sweep"]["p_count"] == 2

    def test_snapshot_multi_time_files(self, tmp_path):
        doc = base_doc(
            sweep={
                "observable": "snapshot_photon",
                "delta_min_over_2pi_mhz": -10.0,
                "delta_max_over_2pi_mhz": -8.0,
                "delta_count": 2,
                "p_min_over_2pi_mhz": 0.0,
                "p_max_over_2pi_mhz": 1.0,
                "p_count": 2,
                "snapshot_times_us": [0.1, 0.3],
            }
        )
        doc["numerics"]["n_trunc"] = 8
        cfg = write_cfg(tmp_path, doc)
        assert main(["sweep", "--config", cfg, "--out", str(tmp_path), "--workers", "1"]) == 0
        assert (tmp_path / "sweep_t0.1us.csv").exists()
        assert (tmp_path / "sweep_t0.3us.csv").exists()

    def test_conflicting_axis_units(self, tmp_path, capsys):
        doc = base_doc(
            sweep={
                "observable": "steady_photon",
                "delta_min_over_2pi_mhz": -10.0,
                "delta_max_over_2pi_mhz": -8.0,
                "delta_count": 2,
                "p_min_over_2pi_mhz": 0.0,
                "p_max_over_2pi_mhz": 1.0,
                "p_min_over_chi": 0.0,
                "p_max_over_chi": 0.05,
                "p_count": 2,
            }
        )
        cfg = write_cfg(tmp_path, doc)
        assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == 2
        assert "conflicting" in capsys.readouterr().err

    def test_peak_report(self, tmp_path):
        doc = base_doc(
            sweep={
                "observable": "steady_photon",
                "delta_min_over_2pi_mhz": -10.0,
                "delta_max_over_2pi_mhz": -8.0,
                "delta_count": 5,
                "p_min_over_2pi_mhz": 0.5,
                "p_max_over_2pi_mhz": 1.0,
                "p_count": 2,
                "peak_report_p_index": 1,
            }
        )
        doc["numerics"]["n_trunc"] = 10
        cfg = write_cfg(tmp_path, doc)
        assert main(["sweep", "--config", cfg, "--out", str(tmp_path), "--workers", "1"]) == 0
        payload = json.loads((tmp_path / "sweep.json").read_text())
        peaks = payload["peak_report"]["peaks"]
        assert len(peaks) == 1
        assert peaks[0]["delta_over_2pi_mhz"] == pytest.approx(-9.0)


class TestCommonBehavior:
    def test_unknown_config_key_exit_code(self, tmp_path, capsys):
        doc = base_doc(steady={"delta_over_2pi_mhz": 0.0, "p_over_2pi_mhz": 0.0})
        doc["physics"]["chi_mhz"] = 18.0
        cfg = write_cfg(tmp_path, doc)
        assert main(["steady", "--config", cfg, "--out", str(tmp_path)]) == 2
        assert "chi_mhz" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path):
        assert main(["steady", "--config", str(tmp_path / "none.yaml")]) == 2

    def test_round_trip_sweep_csv(self, tmp_path):
        from kposim.sweep import read_sweep_csv

        doc = base_doc(
            sweep={
                "observable": "steady_photon",
                "delta_min_over_2pi_mhz": -10.0,
                "delta_max_over_2pi_mhz": -8.0,
                "delta_count": 3,
                "p_min_over_2pi_mhz": 0.0,
                "p_max_over_2pi_mhz": 1.0,
                "p_count": 2,
            }
        )
        doc["numerics"]["n_trunc"] = 10
        cfg = write_cfg(tmp_path, doc)
        main(["sweep", "--config", cfg, "--out", str(tmp_path), "--workers", "1"])
        deltas, ps, grid = read_sweep_csv(tmp_path / "sweep.csv")
        out2 = tmp_path / "resave.csv"
        with open(out2, "w", newline="\n") as fh:
            fh.write("delta_over_2pi_mhz,p_over_2pi_mhz,value\n")
            for i, d in enumerate(deltas):
                for j, p in enumerate(ps):
                    fh.write(f"{d:.17g},{p:.17g},{grid[i, j]:.17g}\n")
        assert out2.read_text() == (tmp_path / "sweep.csv").read_text()
