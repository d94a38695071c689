"""Converter acceptance: fixture round trip, fault injection, structural
checks, and acceptance of the output by the downstream loader's CLI."""

import json
import subprocess
import sys

import numpy as np
import pytest
from scipy.io import loadmat

from conftest import build_fixture
from matconverter import StructuralMismatch, convert, verify
from matconverter.cli import main


class TestConvert:
    def test_fixture_round_trip(self, mini_mat, tmp_path):
        manifest, report = convert(mini_mat, tmp_path / "out")
        doc = json.loads(manifest.read_text())
        assert doc["format_version"] == "emoscale-v1"
        assert doc["fs"] == 128
        assert len(doc["channel_names"]) == 14
        assert len(doc["trials"]) == 4  # 2 subjects x 2 clips
        assert report.n_subjects == 2 and report.n_clips == 2
        assert report.eeg_fields_found and "baseline" in report.eeg_fields_found
        check = verify(manifest, mini_mat)
        assert check.clean, check.summary()

    def test_values_lossless_up_to_binary32(self, mini_mat, tmp_path):
        manifest, _ = convert(mini_mat, tmp_path / "out")
        doc = json.loads(manifest.read_text())
        mat = loadmat(str(mini_mat), squeeze_me=True, struct_as_record=False)
        source = mat["DREAMER"].Data[0].EEG.stimuli[0]  # samples x channels
        entry = doc["trials"][0]
        written = np.frombuffer(
            (manifest.parent / entry["stimulus_file"]).read_bytes(), dtype="<f4"
        ).reshape(14, -1)
        assert np.array_equal(written, source.T.astype("<f4"))

    def test_thirteen_channels_rejected(self, tmp_path):
        bad = build_fixture(tmp_path / "bad.mat", n_channels=13)
        with pytest.raises(StructuralMismatch, match="13"):
            convert(bad, tmp_path / "out")

    def test_score_outside_scale_rejected(self, tmp_path):
        from scipy.io import savemat

        path = build_fixture(tmp_path / "mini.mat")
        mat = loadmat(str(path))
        # tamper in place: scores live inside the Data cell
        data = mat["DREAMER"]["Data"][0, 0]
        data[0, 0]["ScoreValence"][0, 0] = 9.0
        savemat(str(tmp_path / "tampered.mat"), {"DREAMER": mat["DREAMER"]})
        with pytest.raises(StructuralMismatch, match="ScoreValence"):
            convert(tmp_path / "tampered.mat", tmp_path / "out")

    def test_missing_source(self, tmp_path):
        with pytest.raises(StructuralMismatch, match="not found"):
            convert(tmp_path / "absent.mat", tmp_path / "out")

    def test_loader_cli_accepts_output(self, mini_mat, tmp_path):
        # the downstream package is consumed through its public CLI only:
        # preprocess loads the manifest and windows it, so success means
        # the converted dataset passes its loader's validation
        manifest, _ = convert(mini_mat, tmp_path / "out")
        result = subprocess.run(
            [
                sys.executable, "-m", "emoscale.cli", "preprocess",
                "--dataset", str(manifest), "--out", str(tmp_path / "windows"),
            ],
            capture_output=True, text=True, timeout=120,
        )
        assert result.returncode == 0, result.stderr
        windows = json.loads((tmp_path / "windows" / "windows.json").read_text())
        assert windows["n"] == 4 * 3  # 384-sample stimuli -> 3 windows each
        assert windows["channels"] == 14


class TestVerify:
    def test_flipped_score_detected(self, mini_mat, tmp_path):
        manifest, _ = convert(mini_mat, tmp_path / "out")
        doc = json.loads(manifest.read_text())
        original = doc["trials"][1]["arousal"]
        doc["trials"][1]["arousal"] = 1 if original != 1 else 5
        manifest.write_text(json.dumps(doc))
        check = verify(manifest, mini_mat)
        assert not check.clean
        assert any("arousal" in d for d in check.divergences)

    def test_corrupted_payload_detected(self, mini_mat, tmp_path):
        manifest, _ = convert(mini_mat, tmp_path / "out")
        doc = json.loads(manifest.read_text())
        target = manifest.parent / doc["trials"][0]["baseline_file"]
        payload = bytearray(target.read_bytes())
        payload[100] ^= 0x5A
        target.write_bytes(bytes(payload))
        check = verify(manifest, mini_mat)
        assert any("checksum" in d for d in check.divergences)

    def test_empty_manifest_vs_source_counts(self, mini_mat, tmp_path):
        manifest, _ = convert(mini_mat, tmp_path / "out")
        doc = json.loads(manifest.read_text())
        doc["trials"] = []
        manifest.write_text(json.dumps(doc))
        check = verify(manifest, mini_mat)
        assert any("0 trials" in d or "missing from manifest" in d for d in check.divergences)


class TestCli:
    def test_convert_with_verify(self, mini_mat, tmp_path, capsys):
        rc = main(["convert", str(mini_mat), str(tmp_path / "out"), "--verify"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "0 divergences" in out
        assert "subjects: 2" in out

    def test_bad_source_exits_nonzero(self, tmp_path):
        rc = main(["convert", str(tmp_path / "no.mat"), str(tmp_path / "out")])
        assert rc == 1
