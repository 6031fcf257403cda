import json

import numpy as np
import pytest

from pseudotoric.cli import main


def run(command, config, tmp_path, extra=()):
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps(config))
    out = tmp_path / "out"
    code = main([command, "--config", str(cfg), "--out", str(out), *extra])
    report = None
    report_path = out / "report.json"
    if report_path.exists():
        report = json.loads(report_path.read_text())
    return code, report, out


CIRCLE = {"kind": "circle", "center": [2.0, 0.0], "radius": 0.5}
UNIT_CIRCLE = {"kind": "circle", "center": [0.0, 0.0], "radius": 1.0}


class TestVerifyStructure:
    def test_pass(self, tmp_path):
        code, report, _ = run("verify-structure", {"k": 3}, tmp_path)
        assert code == 0
        assert report["report"]["pass"] is True

    def test_malformed_json(self, tmp_path):
        cfg = tmp_path / "bad.json"
        cfg.write_text("{not json")
        assert main(["verify-structure", "--config", str(cfg),
                     "--out", str(tmp_path / "o")]) == 2

    def test_unknown_key_rejected(self, tmp_path):
        code, _, _ = run("verify-structure", {"k": 2, "bogus": 1}, tmp_path)
        assert code == 2

    def test_zero_tolerance_fails(self, tmp_path):
        code, report, _ = run("verify-structure",
                              {"k": 2, "tolerances": {"fiber_drift": 0.0}},
                              tmp_path)
        assert code == 3
        assert report["report"]["pass"] is False


class TestBuildTorus:
    def test_standard_torus_csv(self, tmp_path):
        config = {"k": 1, "levels": [0.0], "loop": UNIT_CIRCLE,
                  "resolutions": {"n_t": 8, "n_phi": 8}}
        code, report, out = run("build-torus", config, tmp_path)
        assert code == 0
        data = np.genfromtxt(out / "torus.csv", delimiter=",", names=True)
        for col in ("re_z1", "im_z1", "re_z2", "im_z2"):
            assert col in data.dtype.names
        moduli = np.hypot(data["re_z1"], data["im_z1"])
        assert np.max(np.abs(moduli - 1.0)) <= 1e-9
        assert (out / "metadata.json").exists()

    def test_twist_metadata(self, tmp_path):
        config = {"k": 2, "levels": [0.0, 0.0],
                  "loop": {"kind": "sector", "k": 2},
                  "resolutions": {"n_t": 8, "n_phi": 8}}
        code, report, _ = run("build-torus", config, tmp_path)
        assert code == 0
        assert report["report"]["loop_type"] == "Chekanov"

    def test_resolution_too_low(self, tmp_path):
        config = {"k": 1, "levels": [0.0], "loop": UNIT_CIRCLE,
                  "resolutions": {"n_t": 4, "n_phi": 8}}
        code, _, _ = run("build-torus", config, tmp_path)
        assert code == 2


class TestVerifyLagrangian:
    def test_standard_torus(self, tmp_path):
        config = {"k": 1, "levels": [0.0], "loop": UNIT_CIRCLE,
                  "resolutions": {"n_t": 16, "n_phi": 16}}
        code, report, _ = run("verify-lagrangian", config, tmp_path)
        assert code == 0
        assert report["report"]["max_lagrangian_defect"] <= 1e-6

    def test_loop_through_origin(self, tmp_path):
        config = {"k": 1, "levels": [0.0],
                  "loop": {"kind": "circle", "center": [0.5, 0.0],
                           "radius": 0.5}}
        code, _, _ = run("verify-lagrangian", config, tmp_path)
        assert code == 2


class TestClassifyLoop:
    def test_standard(self, tmp_path):
        code, report, _ = run("classify-loop", {"loop": UNIT_CIRCLE}, tmp_path)
        assert code == 0
        assert report["report"]["type"] == "Standard"
        assert report["report"]["winding_number"] == 1

    def test_plots_flag(self, tmp_path):
        code, _, out = run("classify-loop", {"loop": UNIT_CIRCLE}, tmp_path,
                           extra=("--plots",))
        assert code == 0
        assert (out / "loop.svg").exists()


class TestDisplace:
    def config(self, **kw):
        base = {"k": 1, "levels": [0.0], "loop": CIRCLE,
                "resolutions": {"n_t": 8, "n_phi": 8}}
        base.update(kw)
        return base

    def test_certificate(self, tmp_path):
        code, report, _ = run("displace", self.config(), tmp_path)
        assert code == 0
        assert report["report"]["certificate"] is True
        assert report["report"]["base_radius_margin"] > 0

    def test_twist_certificate(self, tmp_path):
        config = {"k": 2, "levels": [0.0, 0.0],
                  "loop": {"kind": "sector", "k": 2},
                  "resolutions": {"n_t": 8, "n_phi": 8}}
        code, report, _ = run("displace", config, tmp_path)
        assert code == 0
        assert report["report"]["certificate"] is True

    def test_standard_loop_rejected(self, tmp_path):
        code, _, _ = run("displace", self.config(loop=UNIT_CIRCLE), tmp_path)
        assert code == 2

    def test_time_cap_gives_exit_4(self, tmp_path):
        config = self.config(flow={"step_size": 0.001, "max_time": 0.002})
        code, report, _ = run("displace", config, tmp_path)
        assert code == 4
        assert report["report"]["certificate"] is False

    def test_cloud_export(self, tmp_path):
        config = self.config(export_clouds=True)
        code, _, out = run("displace", config, tmp_path)
        assert code == 0
        assert (out / "original.csv").exists()
        assert (out / "flowed.csv").exists()

    def test_plots(self, tmp_path):
        code, _, out = run("displace", self.config(), tmp_path,
                           extra=("--plots",))
        assert code == 0
        assert (out / "displacement.svg").exists()


class TestEquivalence:
    def test_equivalent(self, tmp_path):
        config = {"k": 1, "levels": [0.3], "loop1": CIRCLE,
                  "loop2": {"kind": "circle", "center": [3.0, 0.0],
                            "radius": 0.5}}
        code, report, _ = run("equivalence", config, tmp_path)
        assert code == 0
        assert report["report"]["verdict"] == "Equivalent"

    def test_not_equivalent(self, tmp_path):
        config = {"k": 1, "levels": [0.3], "loop1": CIRCLE,
                  "loop2": {"kind": "circle", "center": [2.0, 0.0],
                            "radius": 0.7}}
        code, report, _ = run("equivalence", config, tmp_path)
        assert code == 0
        assert report["report"]["verdict"] == "NotEquivalent"

    def test_cross_type_unknown(self, tmp_path):
        config = {"k": 1, "levels": [0.0], "loop1": UNIT_CIRCLE,
                  "loop2": {"kind": "circle", "center": [2.0, 0.0],
                            "radius": 1.0}}
        code, report, _ = run("equivalence", config, tmp_path)
        assert code == 0
        assert report["report"]["verdict"] == "Unknown"


class TestDeterminism:
    @pytest.mark.parametrize("command,config", [
        ("verify-structure", {"k": 2}),
        ("build-torus", {"k": 1, "levels": [0.0], "loop": UNIT_CIRCLE,
                         "resolutions": {"n_t": 8, "n_phi": 8}}),
        ("verify-lagrangian", {"k": 1, "levels": [0.0], "loop": UNIT_CIRCLE,
                               "resolutions": {"n_t": 8, "n_phi": 8}}),
        ("classify-loop", {"loop": UNIT_CIRCLE}),
        ("displace", {"k": 1, "levels": [0.0], "loop": CIRCLE,
                      "resolutions": {"n_t": 8, "n_phi": 8}}),
        ("equivalence", {"k": 1, "levels": [0.3], "loop1": CIRCLE,
                         "loop2": {"kind": "circle", "center": [3.0, 0.0],
                                   "radius": 0.5}}),
    ])
    def test_byte_identical_reports(self, command, config, tmp_path):
        (tmp_path / "a").mkdir()
        (tmp_path / "b").mkdir()
        _, _, out1 = run(command, config, tmp_path / "a",
                         extra=("--seed", "0"))
        _, _, out2 = run(command, config, tmp_path / "b",
                         extra=("--seed", "0"))
        assert (out1 / "report.json").read_bytes() \
            == (out2 / "report.json").read_bytes()
