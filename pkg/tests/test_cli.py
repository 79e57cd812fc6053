import json
import math

import pytest

from minifol.cli import main


def write_config(path, doc):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
    return str(path)


@pytest.fixture
def helicoid_config(tmp_path):
    return write_config(
        tmp_path / "heli.json",
        {
            "name": "helicoid",
            "n": 3,
            "m": 1,
            "components": ["atan2(x2, x1) - x3"],
            "domain": {"min": [0.5, 0.5, -3.0], "max": [2.0, 2.0, 3.0]},
            "grid": [17, 17, 17],
            "levels": 3,
            "seed": 0,
        },
    )


@pytest.fixture
def bowl_config(tmp_path):
    return write_config(
        tmp_path / "bowl.json",
        {
            "name": "bowl",
            "n": 2,
            "m": 1,
            "components": ["x1^2 + x2^2"],
            "domain": {"min": [-2.0, -2.0], "max": [2.0, 2.0]},
            "grid": [17, 17],
        },
    )


@pytest.fixture
def sphere_config(tmp_path):
    return write_config(
        tmp_path / "sphere.json",
        {
            "name": "sphere",
            "n": 3,
            "m": 1,
            "components": ["x1^2 + x2^2 + x3^2 - 1"],
            "domain": {"min": [-2.0, -2.0, -2.0], "max": [2.0, 2.0, 2.0]},
            "grid": [48, 48, 48],
        },
    )


class TestCheck:
    def test_regular_map_exit_zero(self, helicoid_config, tmp_path):
        out = tmp_path / "out"
        assert main(["check", "--config", helicoid_config, "--out", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["regular"] is True
        assert report["map"] == "helicoid"
        assert "config_hash" in report and "seed" in report and "version" in report

    def test_bowl_exit_one_with_origin_witness(self, bowl_config, tmp_path):
        out = tmp_path / "out"
        assert main(["check", "--config", bowl_config, "--out", str(out)]) == 1
        report = json.loads((out / "report.json").read_text())
        assert report["regular"] is False
        assert [0.0, 0.0] in report["witnesses"]

    def test_missing_config_exit_two(self, tmp_path, capsys):
        assert main(["check", "--config", str(tmp_path / "nope.json")]) == 2
        assert "error:" in capsys.readouterr().err

    def test_small_grid_rejected(self, bowl_config, capsys):
        assert main(["check", "--config", bowl_config, "--grid", "4"]) == 2
        assert "grid" in capsys.readouterr().err

    def test_readings_in_report(self, bowl_config, tmp_path):
        out = tmp_path / "out"
        main(["check", "--config", bowl_config, "--out", str(out)])
        report = json.loads((out / "report.json").read_text())
        assert report["readings"]["FULL_TRACE"]["verdict"] == "not_minimal"
        assert report["readings"]["FULL_TRACE"]["max_residual"] == pytest.approx(4.0)


class TestExtract:
    def test_sphere_area_in_summary(self, sphere_config, tmp_path):
        out = tmp_path / "out"
        code = main(
            ["extract", "--config", sphere_config, "--level", "0", "--out", str(out)]
        )
        assert code == 0
        assert (out / "leaf_0.obj").exists()
        summary = json.loads((out / "summary.json").read_text())
        area = summary["leaves"][0]["volume"]
        assert area == pytest.approx(4 * math.pi, rel=0.02)

    def test_unsupported_signature_exit_two(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path / "four.json",
            {
                "name": "four",
                "n": 4,
                "m": 1,
                "components": ["x1"],
                "domain": {"min": [-1] * 4, "max": [1] * 4},
                "grid": [9] * 4,
            },
        )
        assert main(["extract", "--config", cfg, "--level", "0"]) == 2
        assert "(4,1)" in capsys.readouterr().err

    def test_level_required(self, sphere_config, capsys):
        assert main(["extract", "--config", sphere_config]) == 2
        assert "level" in capsys.readouterr().err

    def test_curve_level_vector(self, tmp_path):
        cfg = write_config(
            tmp_path / "vlines.json",
            {
                "name": "vlines",
                "n": 3,
                "m": 2,
                "components": ["x1", "x2"],
                "domain": {"min": [-1, -1, -1], "max": [1, 1, 1]},
                "grid": [9, 9, 9],
            },
        )
        out = tmp_path / "out"
        code = main(
            ["extract", "--config", cfg, "--level", "0.25,-0.5", "--out", str(out)]
        )
        assert code == 0
        first = (out / "leaf_0.obj").read_text().splitlines()[0]
        assert first.startswith("v 0.25 -0.5 ")


class TestFoliate:
    def test_leaf_files_and_summary(self, helicoid_config, tmp_path):
        out = tmp_path / "out"
        assert main(["foliate", "--config", helicoid_config, "--out", str(out)]) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert len(summary["leaves"]) == 3
        for k, leaf in enumerate(summary["leaves"]):
            assert leaf["file"] == f"leaf_{k}.obj"
            assert (out / leaf["file"]).exists()
            assert leaf["volume"] > 0
        assert summary["map_regular"] is True

    def test_linear_five_planes(self, tmp_path):
        cfg = write_config(
            tmp_path / "lin.json",
            {
                "name": "slices",
                "n": 3,
                "m": 1,
                "components": ["x3"],
                "domain": {"min": [-1, -1, -1], "max": [1, 1, 1]},
                "grid": [9, 9, 9],
                "levels": 5,
            },
        )
        out = tmp_path / "out"
        assert main(["foliate", "--config", cfg, "--out", str(out)]) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert len(summary["leaves"]) == 5
        for leaf in summary["leaves"]:
            assert leaf["volume"] == pytest.approx(4.0, rel=1e-9)


class TestVariation:
    def test_helicoid_leaf_stationary(self, helicoid_config, tmp_path):
        out = tmp_path / "out"
        code = main(
            [
                "variation",
                "--config",
                helicoid_config,
                "--level",
                "1.0",
                "--grid",
                "48",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        doc = json.loads((out / "variation.json").read_text())
        assert doc["stationary"] is True
        assert len(doc["first_variations"]) == doc["field_count"]

    def test_bowl_leaf_not_stationary(self, bowl_config, tmp_path):
        out = tmp_path / "out"
        code = main(
            [
                "variation",
                "--config",
                bowl_config,
                "--level",
                "1.0",
                "--grid",
                "64",
                "--out",
                str(out),
            ]
        )
        assert code == 1
        doc = json.loads((out / "variation.json").read_text())
        assert doc["stationary"] is False
        assert abs(doc["max_first_variation"]) > doc["tolerances"]["stationary"]


class TestVerifyLemma:
    def test_broken_corpus_names_file(self, tmp_path, capsys):
        bad = tmp_path / "corpus"
        bad.mkdir()
        (bad / "broken.json").write_text(
            json.dumps(
                {
                    "name": "broken",
                    "n": 2,
                    "m": 1,
                    "components": ["x1 +* x2"],
                    "domain": {"min": [-1, -1], "max": [1, 1]},
                }
            )
        )
        assert main(["verify-lemma", "--corpus", str(bad)]) == 2
        assert "broken.json" in capsys.readouterr().err

    def test_empty_corpus_dir(self, tmp_path, capsys):
        empty = tmp_path / "corpus"
        empty.mkdir()
        assert main(["verify-lemma", "--corpus", str(empty)]) == 2
        assert "no corpus maps" in capsys.readouterr().err

    def test_small_corpus_passes(self, tmp_path):
        corpus = tmp_path / "corpus"
        corpus.mkdir()
        (corpus / "planes.json").write_text(
            json.dumps(
                {
                    "name": "planes",
                    "n": 3,
                    "m": 1,
                    "components": ["x3"],
                    "domain": {"min": [-1, -1, -1], "max": [1, 1, 1]},
                }
            )
        )
        out = tmp_path / "out"
        code = main(
            [
                "verify-lemma",
                "--corpus",
                str(corpus),
                "--grid",
                "17",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        doc = json.loads((out / "agreement.json").read_text())
        assert doc["passed"] is True
        assert doc["maps"][0]["map"] == "planes"
        assert doc["form_checks"][0]["closedness"] == 0.0


class TestDeterminism:
    def test_reports_byte_identical(self, sphere_config, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        for out in (out1, out2):
            main(
                ["extract", "--config", sphere_config, "--level", "0", "--out", str(out)]
            )
        assert (out1 / "summary.json").read_bytes() == (out2 / "summary.json").read_bytes()
        assert (out1 / "leaf_0.obj").read_bytes() == (out2 / "leaf_0.obj").read_bytes()

    def test_seed_changes_hash_not_determinism(self, bowl_config, tmp_path):
        out1, out2, out3 = tmp_path / "a", tmp_path / "b", tmp_path / "c"
        main(["check", "--config", bowl_config, "--seed", "1", "--out", str(out1)])
        main(["check", "--config", bowl_config, "--seed", "1", "--out", str(out2)])
        main(["check", "--config", bowl_config, "--seed", "2", "--out", str(out3)])
        a = (out1 / "report.json").read_bytes()
        b = (out2 / "report.json").read_bytes()
        c = json.loads((out3 / "report.json").read_text())
        assert a == b
        assert c["seed"] == 2
        assert c["config_hash"] != json.loads(a)["config_hash"]
