import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from interdep.cli import main
from interdep.config import ApEnSettings, Bisection, ExperimentConfig
from interdep.depmap import read_map
from interdep.errors import InvalidParameterError
from interdep.graphs import read_edgelist


class TestConfig:
    def test_lattice_side_sets_N(self):
        cfg = ExperimentConfig(L=30)
        assert cfg.N == 900 and cfg.bisection == Bisection()

    def test_scalar_q_becomes_tuple(self):
        assert ExperimentConfig(N=100, q=0.5).q == (0.5,)

    @pytest.mark.parametrize("kw", [
        dict(N=100, q=1.5),
        dict(N=99),
        dict(N=100, p_grid=[]),
        dict(N=100, p_grid=[0.5, 0.4]),
        dict(N=100, p_grid=[0.5], bisection={"scan": "p"}),
        dict(N=100, topology="torus"),
        dict(N=100, map_kind="block_local"),
        dict(N=100, realizations=0),
        dict(N=100, L=11),
        dict(N=100, bisection={"scan": "x"}),
        dict(),
    ])
    def test_invalid(self, kw):
        with pytest.raises(InvalidParameterError):
            ExperimentConfig(**kw) if kw else ExperimentConfig.from_dict({})

    def test_unknown_key(self):
        with pytest.raises(InvalidParameterError):
            ExperimentConfig.from_dict({"N": 100, "colour": "red"})

    def test_malformed_yaml(self):
        with pytest.raises(InvalidParameterError):
            ExperimentConfig.loads("N: [1, 2")

    def test_file_round_trip(self, tmp_path):
        cfg = ExperimentConfig(topology="scale_free", N=500, q=[0.1, 0.9], p_grid=[0.3, 0.6],
                               realizations=3, master_seed=2 ** 63, apen=ApEnSettings(m=3))
        assert ExperimentConfig.load(cfg.save(tmp_path / "c.yaml")) == cfg

    @settings(max_examples=50, deadline=None)
    @given(st.sampled_from(["lattice", "erdos_renyi"]), st.integers(2, 40),
           st.lists(st.floats(0, 1), max_size=4), st.one_of(st.none(), st.lists(st.floats(0, 1), min_size=1, max_size=5)),
           st.integers(0, 2 ** 64 - 1), st.sampled_from(["p", "q", "r"]))
    def test_round_trip(self, topology, side, qs, grid, seed, scan):
        kw = dict(topology=topology, N=side * side, q=qs, master_seed=seed)
        if grid is None:
            kw["bisection"] = Bisection(scan=scan)
        else:
            kw["p_grid"] = sorted(grid)
        cfg = ExperimentConfig(**kw)
        assert ExperimentConfig.loads(cfg.dump()) == cfg

    def test_header_records_defaults(self):
        h = ExperimentConfig(N=10_000).header()
        assert h["beta"] == 0.1 and h["m"] == 2 and h["tolerance_factor"] == 0.2
        assert h["jump_threshold"] == 0.1 and h["eps_surv"] == 0.005


def run(args, capsys):
    code = main(args + ["--quiet", "--threads", "1"])
    out = capsys.readouterr()
    return code, out.out, out.err


class TestCommands:
    def test_generate_small_identity(self, tmp_path, capsys):
        code, _, _ = run(["generate", "-L", "3", "--q", "0", "--out", str(tmp_path)], capsys)
        assert code == 0
        m = read_map(tmp_path / "map_rewired_0_N9.txt")
        assert m.pi.tolist() == list(range(9))
        lines = (tmp_path / "map_rewired_0_N9.txt").read_text().splitlines()
        assert len([ln for ln in lines if not ln.startswith("#")]) == 9
        assert read_edgelist(tmp_path / "graph_lattice_N9.txt").edge_count == 18

    def test_generate_paper_scale(self, tmp_path, capsys):
        code, _, _ = run(["generate", "-L", "1000", "--q", "1", "--out", str(tmp_path)], capsys)
        assert code == 0
        m = read_map(tmp_path / "map_rewired_1_N1000000.txt")
        assert m.size == 10 ** 6 and m.fixed_points() < 10

    def test_invalid_q_is_config_error(self, capsys):
        code, _, err = run(["generate", "-L", "3", "--q", "1.5"], capsys)
        assert code == 2 and "q values" in err

    def test_missing_size(self, capsys):
        code, _, err = run(["sweep"], capsys)
        assert code == 2

    def test_empty_grid(self, tmp_path, capsys):
        cfg = tmp_path / "c.yaml"
        cfg.write_text("N: 100\np_grid: []\n")
        code, _, err = run(["sweep", "--config", str(cfg)], capsys)
        assert code == 2 and "p_grid is empty" in err

    def test_missing_config_file(self, tmp_path, capsys):
        code, _, err = run(["sweep", "--config", str(tmp_path / "none.yaml")], capsys)
        assert code == 2 and "none.yaml" in err

    def test_sweep_is_byte_identical(self, tmp_path, capsys):
        args = ["sweep", "-L", "20", "--q", "0.2,1", "--p-grid", "0.6,0.8", "--realizations", "3",
                "--seed", "11"]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert run(args + ["--out", str(a)], capsys)[0] == 0
        assert run(args + ["--out", str(b)], capsys)[0] == 0
        assert a.read_bytes() == b.read_bytes()
        text = a.read_text()
        assert "# beta=0.1" in text and "# eps_surv=" in text
        rows = [ln for ln in text.splitlines() if not ln.startswith("#")]
        assert rows[0] == "q,p,mean_pinf,std_pinf,mean_noi,realizations,N"
        assert len(rows) == 5

    def test_sweep_to_stdout(self, capsys):
        code, out, _ = run(["sweep", "-L", "10", "--p-grid", "0.9", "--realizations", "1"], capsys)
        assert code == 0 and "q,p,mean_pinf" in out

    def test_critical_p_scan(self, capsys):
        code, out, _ = run(["critical", "-L", "30", "--q", "0,1", "--realizations", "3"], capsys)
        rows = [ln.split(",") for ln in out.splitlines() if not ln.startswith("#")]
        assert code == 0 and rows[0] == ["topology", "q", "p_c", "order", "jump", "noi_at_pc"]
        assert len(rows) == 3 and rows[1][0] == "lattice"

    def test_critical_q_scan(self, tmp_path, capsys):
        cfg = tmp_path / "c.yaml"
        cfg.write_text("L: 30\nrealizations: 2\nbisection: {scan: q, tol_q: 0.25}\n")
        code, out, _ = run(["critical", "--config", str(cfg)], capsys)
        assert code == 0 and "# q_c=" in out and "# q_c_upper=" in out

    def test_critical_r_scan(self, tmp_path, capsys):
        cfg = tmp_path / "c.yaml"
        cfg.write_text("L: 30\nmap_kind: block_local\nr: [2, 30]\nrealizations: 2\n"
                       "bisection: {scan: r}\n")
        code, out, _ = run(["critical", "--config", str(cfg)], capsys)
        assert code == 0 and "# r_c=" in out

    def test_no_transition_from_config(self, tmp_path, capsys):
        cfg = tmp_path / "c.yaml"
        cfg.write_text("topology: erdos_renyi\nN: 1000\nmean_degree: 0.3\nrealizations: 1\n")
        code, _, err = run(["critical", "--config", str(cfg)], capsys)
        assert code == 3 and "p=1" in err

    def test_noi(self, capsys):
        code, out, _ = run(["noi", "-L", "30", "--q", "0", "--realizations", "2"], capsys)
        assert code == 0 and out.splitlines()[-1].endswith(",1.0000")

    def test_apen_lines(self, capsys):
        code, out, _ = run(["apen", "-L", "100", "--q", "0,1"], capsys)
        lines = out.splitlines()
        assert code == 0 and len(lines) == 2
        assert lines[0].startswith("ApEn m=2 tol=0.2 N=10000 value=")
        v0 = float(lines[0].split("value=")[1].split()[0])
        v1 = float(lines[1].split("value=")[1].split()[0])
        assert abs(v0) < 0.05 and v1 > 2.0

    def test_apen_linear_maps(self, capsys):
        code, out, _ = run(["apen", "-L", "100", "--map-kind", "linear", "--r", "8,25,50"], capsys)
        vals = [float(ln.split("value=")[1].split()[0]) for ln in out.splitlines()]
        assert code == 0 and len(vals) == 3 and max(vals) < 0.05

    def test_module_entry_point(self):
        res = subprocess.run([sys.executable, "-m", "interdep", "apen", "-N", "400", "--q", "0",
                              "--quiet"], capture_output=True, text=True)
        assert res.returncode == 0 and res.stdout.startswith("ApEn m=2")
