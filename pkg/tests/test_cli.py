"""End-to-end command-line tests, run in process through ``cli.main``."""

import json
import socket
from pathlib import Path

import numpy as np
import pytest

from resdecomp import cli
from resdecomp.dataio import load_dataset, load_pgm, render_gray, write_pgm, GrayImage
from resdecomp.dataio import load_model
from resdecomp.model import MLP_AE, RANK1_TIED, SIGMA_RIDGE


def run(argv):
    """Invoke the CLI, folding argparse's SystemExit into a return code."""
    try:
        code = cli.main(argv)
    except SystemExit as exc:
        code = exc.code
    return int(code or 0)


# --------------------------------------------------------------- fixtures ---

@pytest.fixture(scope="module")
def work(tmp_path_factory):
    return tmp_path_factory.mktemp("cli")


@pytest.fixture(scope="module")
def lowrank_ds(work):
    """Feature-vector dataset (no image shape), d=12."""
    out = work / "lowrank.json"
    assert run(["gen-data", "--synth", "d=12,n=40,rank=2,noise=0.01,seed=3",
                "--out", str(out)]) == 0
    return out


@pytest.fixture(scope="module")
def halves_ds(work):
    """Image dataset 4x3 (d=12) so synth/decompose can render."""
    out = work / "halves.json"
    assert run(["gen-data", "--synth-halves", "h=4,w=3,n=30,noise=0.01,seed=2",
                "--out", str(out)]) == 0
    return out


@pytest.fixture(scope="module")
def tied_model(work, halves_ds):
    """Small trained rank-1 model compatible with both d=12 datasets."""
    out = work / "tied.json"
    assert run(["train", "--data", str(halves_ds), "--out", str(out),
                "--kind", "rank1_tied", "--n-branches", "2", "--sweeps", "2",
                "--epochs", "25", "--seed", "0"]) == 0
    return out


@pytest.fixture(scope="module")
def mlp_init_model(work, halves_ds):
    """Untrained MLP model published with an epoch budget of zero."""
    out = work / "mlp0.json"
    assert run(["train", "--data", str(halves_ds), "--out", str(out),
                "--kind", "mlp", "--widths", "6,2", "--n-branches", "2",
                "--epochs", "0"]) == 0
    return out


# --------------------------------------------------------------- gen-data ---

class TestGenData:
    def test_synth_is_deterministic_and_prints_summary(self, work, capsys):
        a, b = work / "det_a.json", work / "det_b.json"
        for out in (a, b):
            assert run(["gen-data", "--synth", "d=12,n=40,rank=2,noise=0.01,seed=3",
                        "--out", str(out)]) == 0
        assert a.read_bytes() == b.read_bytes()
        line = capsys.readouterr().out.strip().splitlines()[-1]
        assert line.startswith("d=12 n=40 spectrum=[")

    def test_halves_records_image_shape(self, halves_ds, capsys):
        ds = load_dataset(halves_ds)
        assert tuple(ds.image_shape) == (4, 3)
        assert ds.X.shape == (30, 12)

    def test_pgm_dir_ingestion_with_downsampling(self, work, capsys):
        src = work / "imgs"
        src.mkdir()
        rng = np.random.default_rng(0)
        for i in range(3):
            pix = rng.integers(0, 255, size=(8, 6), dtype=np.int64)
            write_pgm(src / f"im{i}.pgm",
                      GrayImage(height=8, width=6, maxval=255, pixels=pix))
        out = work / "imgds.json"
        assert run(["gen-data", "--pgm-dir", str(src), "--out", str(out)]) == 0
        assert load_dataset(out).X.shape == (3, 48)
        out2 = work / "imgds2.json"
        assert run(["gen-data", "--pgm-dir", str(src), "--downsample", "2",
                    "--out", str(out2)]) == 0
        ds2 = load_dataset(out2)
        assert ds2.X.shape == (3, 12) and tuple(ds2.image_shape) == (4, 3)

    def test_pgm_dir_needs_at_least_two_images(self, work):
        lone = work / "lone"
        lone.mkdir()
        write_pgm(lone / "a.pgm",
                  GrayImage(height=2, width=2, maxval=255,
                            pixels=np.zeros((2, 2), dtype=np.int64)))
        assert run(["gen-data", "--pgm-dir", str(lone),
                    "--out", str(work / "x.json")]) == 2

    def test_pgm_dir_rejects_mixed_shapes(self, work):
        src = work / "mixed"
        src.mkdir()
        write_pgm(src / "a.pgm", GrayImage(height=4, width=6, maxval=255,
                                           pixels=np.ones((4, 6), dtype=np.int64)))
        write_pgm(src / "b.pgm", GrayImage(height=8, width=6, maxval=255,
                                           pixels=np.ones((8, 6), dtype=np.int64)))
        assert run(["gen-data", "--pgm-dir", str(src),
                    "--out", str(work / "y.json")]) == 2

    def test_exactly_one_source_is_required(self, work):
        out = str(work / "z.json")
        assert run(["gen-data", "--out", out]) == 2
        assert run(["gen-data", "--synth", "d=4,n=8,rank=1,noise=0,seed=0",
                    "--pgm-dir", ".", "--out", out]) == 2

    def test_synth_missing_or_malformed_keys(self, work):
        out = str(work / "bad.json")
        assert run(["gen-data", "--synth", "d=12,n=40,rank=2,noise=0.01",
                    "--out", out]) == 2
        assert run(["gen-data", "--synth", "d=12,n=forty,rank=2,noise=0.01,seed=1",
                    "--out", out]) == 2
        assert run(["gen-data", "--synth-halves",
                    "h=4,w=3,n=8,noise=0,seed=1,extra=9", "--out", out]) == 2


# ------------------------------------------------------------------ train ---

class TestTrain:
    def test_writes_model_and_jsonl_report(self, tied_model):
        model = load_model(tied_model)
        assert model.config.branch_spec.kind == RANK1_TIED
        assert model.n_branches == 2 and model.config.sweeps == 2
        report = Path(tied_model).with_suffix(".report.jsonl")
        lines = [json.loads(s) for s in report.read_text().splitlines()]
        summaries = [r for r in lines if "fingerprint" in r]
        epochs = [r for r in lines if "fingerprint" not in r]
        assert len(summaries) == 1 and summaries[0]["stage"] == 0
        assert epochs and all(r["stage"] == 0 for r in epochs)
        assert all("loss" in r for r in epochs)

    def test_same_seed_reproduces_model_and_fingerprint(self, work, halves_ds):
        blobs, prints = [], []
        for tag in ("r1", "r2"):
            out = work / f"{tag}.json"
            assert run(["train", "--data", str(halves_ds), "--out", str(out),
                        "--kind", "rank1_tied", "--n-branches", "2",
                        "--epochs", "5", "--seed", "7"]) == 0
            blobs.append(out.read_bytes())
            report = out.with_suffix(".report.jsonl")
            summary = json.loads(report.read_text().splitlines()[-1])
            prints.append(summary["fingerprint"])
        assert blobs[0] == blobs[1]
        assert prints[0] == prints[1]

    def test_flags_beat_config_file_beats_preset(self, work):
        cfg = work / "overlay.json"
        cfg.write_text(json.dumps({"n_branches": 4, "lr": 0.5}))
        args = cli.build_parser().parse_args(
            ["train", "--data", "d", "--out", "m", "--preset", "exp2",
             "--config", str(cfg), "--n-branches", "2"])
        rc = cli.resolve_run_config(args)
        assert rc.kind == MLP_AE and rc.widths == (64, 16)   # from the preset
        assert rc.lr == 0.5                                  # config beats preset
        assert rc.n_branches == 2                            # flag beats config
        assert rc.sigma_warmup == 20

    def test_config_file_rejects_unknown_keys(self, work, halves_ds):
        cfg = work / "badcfg.json"
        cfg.write_text(json.dumps({"learning_rate": 0.1}))
        assert run(["train", "--data", str(halves_ds),
                    "--out", str(work / "nc.json"), "--config", str(cfg)]) == 2

    def test_epoch_budget_zero_publishes_initialization(self, mlp_init_model):
        model = load_model(mlp_init_model)
        assert model.config.branch_spec.kind == MLP_AE
        assert model.config.sweeps == 3            # final-stage configuration
        assert model.config.sigma_mode == SIGMA_RIDGE
        report = Path(mlp_init_model).with_suffix(".report.jsonl")
        assert report.exists() and report.read_text() == ""

    def test_out_and_report_paths_must_differ(self, work, halves_ds):
        same = str(work / "clash.json")
        assert run(["train", "--data", str(halves_ds), "--out", same,
                    "--report", same, "--epochs", "1"]) == 2

    def test_two_stage_curriculum_reports_both_stages(self, work, halves_ds):
        out = work / "staged.json"
        assert run(["train", "--data", str(halves_ds), "--out", str(out),
                    "--kind", "rank1_tied", "--n-branches", "2",
                    "--curriculum", "two_stage", "--epochs", "4",
                    "--stage2-epochs", "3", "--seed", "1"]) == 0
        lines = [json.loads(s) for s in
                 out.with_suffix(".report.jsonl").read_text().splitlines()]
        assert sorted({r["stage"] for r in lines}) == [0, 1]
        assert sum("fingerprint" in r for r in lines) == 2
        assert load_model(out).config.sweeps == 3  # final stage, not the warmup

    def test_divergent_run_exits_3_without_writing_model(self, work, halves_ds):
        out = work / "boom.json"
        assert run(["train", "--data", str(halves_ds), "--out", str(out),
                    "--kind", "linear", "--widths", "4", "--n-branches", "2",
                    "--sigma-mode", "ones", "--optimizer", "sgd",
                    "--lr", "1e6", "--epochs", "50"]) == 3
        assert not out.exists()

    def test_mask_center_count_must_match_branches(self, work, halves_ds):
        assert run(["train", "--data", str(halves_ds),
                    "--out", str(work / "m1.json"), "--kind", "mlp",
                    "--widths", "4,2", "--n-branches", "2", "--epochs", "1",
                    "--with-masks", "--mask-centers", "1,1"]) == 2

    def test_masked_training_attaches_masks(self, work, halves_ds):
        out = work / "masked.json"
        assert run(["train", "--data", str(halves_ds), "--out", str(out),
                    "--kind", "mlp", "--widths", "4,2", "--n-branches", "2",
                    "--epochs", "2", "--with-masks", "--mask-area", "0.4",
                    "--mask-centers", "1,1;2,1"]) == 0
        model = load_model(out)
        assert model.masks is not None and model.masks.shape == (2, 12)

    def test_masks_require_an_image_dataset(self, work, lowrank_ds):
        assert run(["train", "--data", str(lowrank_ds),
                    "--out", str(work / "mi.json"), "--kind", "mlp",
                    "--widths", "4,2", "--n-branches", "2", "--epochs", "1",
                    "--with-masks"]) == 2


# ------------------------------------------------------- decompose / synth ---

@pytest.fixture(scope="module")
def decomp_dir(work, tied_model, halves_ds):
    outdir = work / "decomp"
    assert run(["decompose", "--model", str(tied_model),
                "--data", str(halves_ds), "--samples", "0,2",
                "--outdir", str(outdir)]) == 0
    return outdir


class TestDecomposeSynth:
    def test_decompose_layout_and_sidecar(self, decomp_dir):
        for sid in (0, 2):
            base = f"sample{sid:04d}"
            for suffix in ("_original.pgm", "_comp1.pgm", "_comp2.pgm",
                           "_sum.pgm"):
                assert (decomp_dir / f"{base}{suffix}").exists()
            side = json.loads((decomp_dir / f"{base}.json").read_text())
            assert side["sample"] == sid
            assert len(side["sigma"]) == 2
            assert len(side["per_term"]) == 2
            for term in side["per_term"]:
                assert term["energy"] >= 0.0 and term["solo_loss"] >= 0.0
            assert side["loss"]["recon"] >= 0.0
            assert set(side["renders"]) == set(side["files"])

    def test_identity_override_reproduces_decompose_sum(
            self, work, tied_model, halves_ds, decomp_dir):
        # the decompose sidecar holds the solver's own sigma and doubles
        # as a sigma file, so feeding it back must rebuild the sum image
        out = work / "ident.pgm"
        assert run(["synth", "--model", str(tied_model), "--data", str(halves_ds),
                    "--sigma-file", str(decomp_dir / "sample0000.json"),
                    "--out", str(out)]) == 0
        assert out.read_bytes() == (decomp_dir / "sample0000_sum.pgm").read_bytes()
        side = json.loads(out.with_suffix(".json").read_text())
        dside = json.loads((decomp_dir / "sample0000.json").read_text())
        assert side["sigma"] == pytest.approx(dside["sigma"], abs=0)

    def test_zero_sigma_renders_the_dataset_mean(self, work, tied_model, halves_ds):
        out = work / "zero.pgm"
        assert run(["synth", "--model", str(tied_model), "--data", str(halves_ds),
                    "--sample", "0", "--sigma=0,0", "--out", str(out)]) == 0
        ds = load_dataset(halves_ds)
        expected, scale, offset = render_gray(ds, np.zeros(ds.d))
        got = load_pgm(out).pixels.reshape(-1)
        assert np.array_equal(got, np.asarray(expected).reshape(-1))
        side = json.loads(out.with_suffix(".json").read_text())
        assert side["scale"] == pytest.approx(scale)
        assert side["offset"] == pytest.approx(offset)

    def test_sparse_sigma_equals_explicit_full_vector(
            self, work, tied_model, halves_ds):
        ident = json.loads((work / "ident.json").read_text())
        s0, s1 = ident["sigma"]
        sparse, full = work / "sparse.pgm", work / "full.pgm"
        assert run(["synth", "--model", str(tied_model), "--data", str(halves_ds),
                    "--sample", "0", f"--sigma=1={2 * s1!r}",
                    "--out", str(sparse)]) == 0
        assert run(["synth", "--model", str(tied_model), "--data", str(halves_ds),
                    "--sample", "0", f"--sigma={s0!r},{2 * s1!r}",
                    "--out", str(full)]) == 0
        assert sparse.read_bytes() == full.read_bytes()

    def test_sigma_file_round_trip_is_pixel_identical(
            self, work, tied_model, halves_ds):
        out = work / "fromfile.pgm"
        assert run(["synth", "--model", str(tied_model), "--data", str(halves_ds),
                    "--sigma-file", str(work / "ident.json"),
                    "--out", str(out)]) == 0
        assert out.read_bytes() == (work / "ident.pgm").read_bytes()

    @pytest.mark.parametrize("extra", [
        ["--sample", "0", "--sigma=-1,0"],            # negative scale
        ["--sample", "0", "--sigma=0.5"],             # wrong length
        ["--sample", "0", "--sigma=nan,0"],           # non-finite
        ["--sample", "0", "--sigma=0,0,bogus"],       # unparseable entry
        ["--sample", "999", "--sigma=1,1"],           # sample out of range
        ["--sample", "-1", "--sigma=1,1"],            # negative sample
        ["--sample", "0"],                            # sigma is required
        [],                                           # no sample anywhere
    ])
    def test_sigma_argument_validation(self, work, tied_model, halves_ds, extra):
        assert run(["synth", "--model", str(tied_model), "--data", str(halves_ds),
                    "--out", str(work / "rej.pgm")] + extra) == 2

    def test_sigma_and_sigma_file_are_mutually_exclusive(
            self, work, tied_model, halves_ds):
        assert run(["synth", "--model", str(tied_model), "--data", str(halves_ds),
                    "--sample", "0", "--sigma=1,1",
                    "--sigma-file", str(work / "ident.json"),
                    "--out", str(work / "rej.pgm")]) == 2

    @pytest.mark.parametrize("payload", [
        {"sample": True, "sigma": [1.0, 1.0]},        # bool is not a sample id
        {"sample": 0, "sigma": "nope"},               # sigma must be a list
        {"sample": 0},                                # sigma missing
    ])
    def test_sigma_file_validation(self, work, tied_model, halves_ds, payload,
                                   tmp_path):
        f = tmp_path / "edit.json"
        f.write_text(json.dumps(payload))
        assert run(["synth", "--model", str(tied_model), "--data", str(halves_ds),
                    "--sigma-file", str(f), "--out", str(work / "rej.pgm")]) == 2

    def test_synth_needs_an_image_dataset(self, work, tied_model, lowrank_ds):
        assert run(["synth", "--model", str(tied_model), "--data", str(lowrank_ds),
                    "--sample", "0", "--out", str(work / "rej.pgm")]) == 2

    def test_decompose_rejects_bad_sample_lists(self, work, tied_model, halves_ds):
        base = ["decompose", "--model", str(tied_model), "--data", str(halves_ds),
                "--outdir", str(work / "rejdir")]
        assert run(base + ["--samples", "0,abc"]) == 2
        assert run(base + ["--samples", "99"]) == 2

    def test_model_dataset_dimension_mismatch(self, work, tied_model):
        small = work / "d8.json"
        assert run(["gen-data", "--synth", "d=8,n=10,rank=1,noise=0,seed=0",
                    "--out", str(small)]) == 0
        assert run(["decompose", "--model", str(tied_model), "--data", str(small),
                    "--samples", "0", "--outdir", str(work / "mm")]) == 2


# --------------------------------------------------------------- eval-svd ---

class TestEvalSvd:
    def test_pass_path_prints_alignment_and_exits_0(
            self, tied_model, lowrank_ds, capsys):
        assert run(["eval-svd", "--model", str(tied_model),
                    "--data", str(lowrank_ds), "--min-cos", "0.0"]) == 0
        out = capsys.readouterr().out
        assert "principal angles (deg):" in out
        assert "-> PASS" in out
        assert out.count("matched_direction=") == 2

    def test_below_threshold_exits_1(self, tied_model, lowrank_ds, capsys):
        assert run(["eval-svd", "--model", str(tied_model),
                    "--data", str(lowrank_ds), "--min-cos", "0.999999999"]) == 1
        assert "-> FAIL" in capsys.readouterr().out

    def test_rejects_non_rank1_models(self, mlp_init_model, halves_ds):
        assert run(["eval-svd", "--model", str(mlp_init_model),
                    "--data", str(halves_ds)]) == 2


# ------------------------------------------------------------------ serve ---

class TestServe:
    def test_busy_port_exits_2(self, tied_model, halves_ds):
        blocker = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        try:
            blocker.bind(("127.0.0.1", 0))
            blocker.listen(1)
            port = blocker.getsockname()[1]
            assert run(["serve", "--model", str(tied_model),
                        "--data", str(halves_ds), "--port", str(port)]) == 2
        finally:
            blocker.close()

    def test_missing_frontend_dir_exits_2(self, tied_model, halves_ds, tmp_path):
        assert run(["serve", "--model", str(tied_model), "--data", str(halves_ds),
                    "--port", "8123",
                    "--frontend", str(tmp_path / "absent")]) == 2


# ------------------------------------------------------------------- misc ---

class TestParser:
    def test_unknown_subcommand_is_a_usage_error(self):
        assert run(["frobnicate"]) == 2

    def test_missing_subcommand_is_a_usage_error(self):
        assert run([]) == 2

    def test_nonexistent_files_exit_2(self, tmp_path):
        ghost = str(tmp_path / "ghost.json")
        assert run(["decompose", "--model", ghost, "--data", ghost,
                    "--samples", "0", "--outdir", str(tmp_path / "o")]) == 2
