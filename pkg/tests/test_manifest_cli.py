"""Manifest round trips, run configuration, and the CLI surface.

The CLI must add no arithmetic: its outputs are compared byte for byte
against direct library calls.
"""

import json
import os
import shutil

import numpy as np
import pytest

from flarebench import losskit, metrics, pngio, postproc, synth
from flarebench.cli import main
from flarebench.errors import ManifestError, ParameterError
from flarebench.manifest import (
    ManifestRecord,
    load_manifest,
    load_path_list,
    missing_paths,
    resolve,
    write_manifest,
)
from flarebench.runconfig import load_run_config, resolve_threads, run_config_from_values


class TestManifest:
    def test_round_trip(self, tmp_path):
        records = [
            ManifestRecord(id="b", paths={"clean": "x/b.png"}, sample_seed=3, params={"k": 1}),
            ManifestRecord(id="a", paths={"clean": "x/a.png", "flare": "f/a.png"}),
        ]
        path = tmp_path / "m.jsonl"
        write_manifest(records, path)
        loaded = load_manifest(path)
        assert [r.id for r in loaded] == ["a", "b"]  # lexicographic order
        assert loaded[1] == records[0]
        assert loaded[0] == records[1]

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("")
        assert load_manifest(path) == []

    def test_duplicate_id_reports_both_lines(self, tmp_path):
        path = tmp_path / "dup.jsonl"
        path.write_text(
            '{"id": "a", "clean": "1.png"}\n'
            '{"id": "b", "clean": "2.png"}\n'
            '{"id": "a", "clean": "3.png"}\n'
        )
        with pytest.raises(ManifestError, match="lines 1 and 3"):
            load_manifest(path)

    def test_malformed_line_number(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "a"}\nnot json\n')
        with pytest.raises(ManifestError, match="line 2"):
            load_manifest(path)

    def test_non_string_role_rejected(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "a", "clean": 5}\n')
        with pytest.raises(ManifestError):
            load_manifest(path)

    def test_duplicate_write_rejected(self, tmp_path):
        records = [ManifestRecord(id="a"), ManifestRecord(id="a")]
        with pytest.raises(ManifestError):
            write_manifest(records, tmp_path / "m.jsonl")

    def test_path_list(self, tmp_path):
        path = tmp_path / "list.txt"
        path.write_text("a.png\n\n  b.png  \n")
        assert load_path_list(path) == ["a.png", "b.png"]

    def test_missing_paths(self, tmp_path):
        (tmp_path / "a.png").write_bytes(b"x")
        records = [ManifestRecord(id="a", paths={"clean": "a.png", "flare": "gone.png"})]
        missing = missing_paths(records, tmp_path / "m.jsonl")
        assert len(missing) == 1
        assert "gone.png" in missing[0]


class TestRunConfig:
    def test_parse_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(
            "# comment\n"
            "seed = 7\n"
            "gamma_range = 1.9,2.1\n"
            "blur_kernel_range = 3,9\n"
            "flare_count = 2\n"
            "lightsource_count_weights = 1,1\n"
            "color_jitter_palette = 1,1,1;0.5,0.6,0.7\n"
            "light_threshold = 0.95\n"
            "threads = 2\n"
        )
        run = load_run_config(path)
        assert run.synth.seed == 7
        assert run.synth.gamma_range == (1.9, 2.1)
        assert run.synth.blur_kernel_range == (3, 9)
        assert run.synth.lightsource_count_weights == (1.0, 1.0)
        assert run.synth.color_jitter_palette[1] == (0.5, 0.6, 0.7)
        assert run.light_threshold == 0.95
        assert run.threads == 2

    def test_unknown_key_rejected(self):
        with pytest.raises(ParameterError, match="unknown config key"):
            run_config_from_values({"gamma": "2.0"})

    def test_bad_value_rejected(self):
        with pytest.raises(ParameterError):
            run_config_from_values({"seed": "seven"})

    def test_weights_none_disables_categorical(self):
        run = run_config_from_values({"lightsource_count_weights": "none"})
        assert run.synth.lightsource_count_weights is None

    def test_threads_resolution(self, monkeypatch):
        monkeypatch.delenv("FLAREBENCH_THREADS", raising=False)
        assert resolve_threads(3, 0) == 3
        assert resolve_threads(None, 2) == 2
        monkeypatch.setenv("FLAREBENCH_THREADS", "5")
        assert resolve_threads(None, 2) == 5
        assert resolve_threads(4, 2) == 4
        monkeypatch.setenv("FLAREBENCH_THREADS", "zero")
        with pytest.raises(ParameterError):
            resolve_threads(None, 0)


def run_cli(*argv):
    return main(list(argv))


class TestCliSynth:
    def test_count_zero_succeeds(self, tmp_path, asset_builder):
        bg_list, flare_list = asset_builder(size=32)
        out = tmp_path / "out"
        code = run_cli(
            "synth", "--backgrounds", str(bg_list), "--flares", str(flare_list),
            "--out", str(out), "--count", "0", "--seed", "1",
        )
        assert code == 0
        assert (out / "manifest.jsonl").read_text() == ""

    def test_matches_library_bit_for_bit(self, tmp_path, asset_builder):
        bg_list, flare_list = asset_builder(size=32)
        cli_out = tmp_path / "cli"
        lib_out = tmp_path / "lib"
        code = run_cli(
            "synth", "--backgrounds", str(bg_list), "--flares", str(flare_list),
            "--out", str(cli_out), "--count", "3", "--seed", "21", "--threads", "1",
        )
        assert code == 0
        bgs = [resolve(bg_list, p) for p in load_path_list(bg_list)]
        fls = [resolve(flare_list, p) for p in load_path_list(flare_list)]
        records, _ = synth.synthesize_dataset(
            bgs, fls, synth.SynthConfig(seed=21), 3, str(lib_out), threads=1
        )
        assert (cli_out / "manifest.jsonl").read_bytes() == (lib_out / "manifest.jsonl").read_bytes()
        for rec in records:
            for rel in rec.paths.values():
                assert (cli_out / rel).read_bytes() == (lib_out / rel).read_bytes()


def synth_and_predict(tmp_path, asset_builder, predict_role):
    """Generate a tiny dataset and copy a role's images as predictions."""
    bg_list, flare_list = asset_builder(size=48)
    out = tmp_path / "data"
    code = run_cli(
        "synth", "--backgrounds", str(bg_list), "--flares", str(flare_list),
        "--out", str(out), "--count", "3", "--seed", "9", "--threads", "1",
    )
    assert code == 0
    manifest_path = out / "manifest.jsonl"
    pred_dir = tmp_path / "pred"
    pred_dir.mkdir(exist_ok=True)
    for rec in load_manifest(manifest_path):
        shutil.copy(out / rec.paths[predict_role], pred_dir / f"{rec.id}.png")
    return manifest_path, pred_dir


class TestCliScore:
    def test_perfect_prediction_scores_cap(self, tmp_path, asset_builder, capsys):
        manifest_path, pred_dir = synth_and_predict(tmp_path, asset_builder, "clean")
        report_dir = tmp_path / "report"
        code = run_cli(
            "score", "--pred", str(pred_dir), "--manifest", str(manifest_path),
            "--out", str(report_dir),
        )
        assert code == 0
        assert "score=100.00" in capsys.readouterr().out
        payload = json.loads((report_dir / "report.json").read_text())
        assert payload["score"] == 100.0

    def test_matches_library_evaluation(self, tmp_path, asset_builder):
        manifest_path, pred_dir = synth_and_predict(tmp_path, asset_builder, "corrupted")
        report_dir = tmp_path / "report"
        code = run_cli(
            "score", "--pred", str(pred_dir), "--manifest", str(manifest_path),
            "--out", str(report_dir), "--threads", "1",
        )
        assert code == 0
        report = metrics.evaluate_run(str(pred_dir), str(manifest_path))
        payload = json.loads((report_dir / "report.json").read_text())
        assert payload["score"] == report.score
        for row, obj in zip(sorted(report.rows, key=lambda r: r.id), payload["rows"]):
            assert obj["s_psnr"] == row.s_psnr
            assert obj["global_psnr"] == row.global_psnr

    def test_missing_prediction_nonzero_exit(self, tmp_path, asset_builder):
        manifest_path, pred_dir = synth_and_predict(tmp_path, asset_builder, "clean")
        os.remove(pred_dir / "000001.png")
        code = run_cli(
            "score", "--pred", str(pred_dir), "--manifest", str(manifest_path),
            "--out", str(tmp_path / "report"),
        )
        assert code == 1


class TestCliMaskAndBlend:
    def test_mask_matches_library(self, tmp_path, rng):
        img = (rng.random((16, 16, 3)) * 0.5).astype(np.float32)
        img[4:8, 4:8] = 1.0
        src = tmp_path / "in.png"
        pngio.save_image(src, img, bits=16)
        out = tmp_path / "mask.png"
        assert run_cli("mask", "--input", str(src), "--out", str(out)) == 0
        from flarebench.regionmask import extract_light_mask

        want = extract_light_mask(pngio.load_image(src), 0.99, 1).weights
        assert np.array_equal(pngio.load_mask_weights(out), want)

    @pytest.mark.parametrize("mode", ["lightsource", "ratio"])
    def test_blend_matches_library(self, tmp_path, rng, mode):
        inp = (rng.random((12, 12, 3)) * 0.5).astype(np.float32)
        inp[2:6, 2:6] = 1.0
        pred = rng.random((12, 12, 3)).astype(np.float32)
        inp_path = tmp_path / "inp.png"
        pred_path = tmp_path / "pred.png"
        pngio.save_image(inp_path, inp, bits=16)
        pngio.save_image(pred_path, pred, bits=16)
        out_path = tmp_path / "out.png"
        code = run_cli(
            "blend", "--pred", str(pred_path), "--input", str(inp_path),
            "--out", str(out_path), "--mode", mode, "--alpha", "0.5",
        )
        assert code == 0
        loaded_pred = pngio.load_image(pred_path)
        loaded_inp = pngio.load_image(inp_path)
        if mode == "lightsource":
            want = postproc.blend_back_light_source(loaded_pred, loaded_inp)
        else:
            want = postproc.blend_with_input(loaded_pred, loaded_inp, 0.5)
        lib_path = tmp_path / "lib.png"
        pngio.save_image(lib_path, want, bits=16)
        assert out_path.read_bytes() == lib_path.read_bytes()


class TestCliLoss:
    def write_pair(self, tmp_path, rng):
        a = rng.random((8, 8, 3)).astype(np.float32)
        b = rng.random((8, 8, 3)).astype(np.float32)
        pa, pb = tmp_path / "a.png", tmp_path / "b.png"
        pngio.save_image(pa, a, bits=16)
        pngio.save_image(pb, b, bits=16)
        return pa, pb

    def test_l1_matches_library(self, tmp_path, rng, capsys):
        pa, pb = self.write_pair(tmp_path, rng)
        assert run_cli("loss", "l1", str(pa), str(pb)) == 0
        printed = float(capsys.readouterr().out.strip())
        want = losskit.l1(pngio.load_image(pa), pngio.load_image(pb))
        assert printed == want

    def test_charbonnier_with_override(self, tmp_path, rng, capsys):
        pa, pb = self.write_pair(tmp_path, rng)
        assert run_cli("loss", "charbonnier", str(pa), str(pb), "--set", "eps=0.01") == 0
        printed = float(capsys.readouterr().out.strip())
        want = losskit.charbonnier(pngio.load_image(pa), pngio.load_image(pb), eps=0.01)
        assert printed == want

    def test_weighted_region_needs_mask(self, tmp_path, rng):
        pa, pb = self.write_pair(tmp_path, rng)
        assert run_cli("loss", "weighted_region_l1", str(pa), str(pb)) == 1

    def test_weighted_region_with_mask(self, tmp_path, rng, capsys):
        pa, pb = self.write_pair(tmp_path, rng)
        mask = (rng.random((8, 8)) > 0.5).astype(np.float32)
        pm = tmp_path / "m.png"
        pngio.save_mask_weights(pm, mask)
        code = run_cli("loss", "weighted_region_l1", str(pa), str(pb), "--mask", str(pm))
        assert code == 0
        printed = float(capsys.readouterr().out.strip())
        want = losskit.weighted_region_l1(
            pngio.load_image(pa), pngio.load_image(pb), pngio.load_mask_weights(pm)
        )
        assert printed == want

    def test_usask_hybrid_kernel(self, tmp_path, rng, capsys):
        pa, pb = self.write_pair(tmp_path, rng)
        code = run_cli("loss", "usask_hybrid", str(pa), str(pb), "--set", "adv=0.5")
        assert code == 0
        printed = float(capsys.readouterr().out.strip())
        a, b = pngio.load_image(pa), pngio.load_image(pb)
        want = losskit.usask_hybrid_loss(
            losskit.smooth_l1(a, b),
            losskit.perceptual_loss(a, b),
            losskit.gradient_loss_sobel(a, b),
            0.5,
        )
        assert printed == want

    def test_global_regional_kernel(self, tmp_path, rng, capsys):
        pa, pb = self.write_pair(tmp_path, rng)
        light = np.zeros((8, 8), dtype=np.float32)
        light[0:2, 0:2] = 1.0
        nonflare = np.zeros((8, 8), dtype=np.float32)
        nonflare[4:, 4:] = 1.0
        pl, pn = tmp_path / "light.png", tmp_path / "nf.png"
        pngio.save_mask_weights(pl, light)
        pngio.save_mask_weights(pn, nonflare)
        code = run_cli(
            "loss", "global_regional", str(pa), str(pb),
            "--mask", str(pl), "--mask", str(pn),
        )
        assert code == 0
        printed = float(capsys.readouterr().out.strip())
        pred, clean = pngio.load_image(pa), pngio.load_image(pb)
        img_g, img_r = losskit.global_regional_prediction(pred, clean, light, nonflare)
        assert printed == losskit.l1(img_g, clean) + losskit.l1(img_r, clean)

    def test_unknown_kernel(self, tmp_path, rng):
        pa, pb = self.write_pair(tmp_path, rng)
        assert run_cli("loss", "psnr_loss", str(pa), str(pb)) == 1

    def test_wrong_operand_count(self, tmp_path, rng):
        pa, _ = self.write_pair(tmp_path, rng)
        assert run_cli("loss", "l1", str(pa)) == 1


class TestCliContract:
    def test_unknown_subcommand(self):
        assert run_cli("frobnicate") == 1

    def test_unknown_flag(self):
        assert run_cli("mask", "--input", "x.png", "--out", "y.png", "--bogus") == 1

    def test_help_exits_zero(self):
        assert run_cli("--help") == 0

    def test_missing_file_is_io_error(self, tmp_path):
        code = run_cli("mask", "--input", str(tmp_path / "nope.png"), "--out", str(tmp_path / "o.png"))
        assert code == 2

    def test_validation_error_is_one(self, tmp_path, rng):
        src = tmp_path / "img.png"
        pngio.save_image(src, rng.random((8, 8, 3)).astype(np.float32), bits=8)
        code = run_cli(
            "mask", "--input", str(src), "--out", str(tmp_path / "o.png"), "--threshold", "1.5"
        )
        assert code == 1
