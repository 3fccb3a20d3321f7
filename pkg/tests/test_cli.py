import pathlib

import pytest

from tpnet.cli import main


class TestCount:
    def test_count_prints_published_total(self, capsys):
        assert main(["count", "--variant", "3c-dct"]) == 0
        out = capsys.readouterr().out
        assert "total parameters: 199898" in out
        assert "layer,params,macs" in out
        assert "fast-transform convention" in out

    def test_count_with_overrides(self, capsys):
        assert main(["count", "--variant", "1c-dct", "--channels", "2"]) == 0
        assert "total parameters: 175706" in capsys.readouterr().out

    def test_unknown_variant_fails(self):
        with pytest.raises(ValueError):
            main(["count", "--variant", "bogus"])


class TestArgParsing:
    def test_unknown_subcommand_exits_nonzero(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(["frobnicate"])
        assert excinfo.value.code != 0
        assert "usage" in capsys.readouterr().err.lower()

    def test_unknown_flag_exits_nonzero(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["count", "--bogus-flag"])
        assert excinfo.value.code != 0


class TestTrainEval:
    def test_train_smoke_writes_log_and_checkpoint(self, synthetic_dataset_dir,
                                                   tmp_path, capsys):
        out_dir = tmp_path / "run"
        code = main(["train", "--variant", "1c-ht", "--subset", "64",
                     "--epochs", "1", "--batch-size", "32",
                     "--data-dir", str(synthetic_dataset_dir),
                     "--out-dir", str(out_dir), "--seed", "1"])
        assert code == 0
        assert (out_dir / "metrics.csv").is_file()
        assert (out_dir / "best.ckpt").is_file()
        header = (out_dir / "metrics.csv").read_text().splitlines()[0]
        assert header == "epoch,lr,train_loss,train_acc,test_loss,test_acc,seconds"

        code = main(["eval", "--variant", "1c-ht",
                     "--checkpoint", str(out_dir / "best.ckpt"),
                     "--data-dir", str(synthetic_dataset_dir)])
        assert code == 0
        assert "test accuracy" in capsys.readouterr().out

    def test_config_file_with_flag_override(self, synthetic_dataset_dir,
                                            tmp_path, capsys):
        config = tmp_path / "run.cfg"
        config.write_text(
            "variant=1c-dct\n"
            "epochs=3  # overridden below\n"
            "subset=64\n"
            f"data-dir={synthetic_dataset_dir}\n"
            f"out-dir={tmp_path / 'cfg-run'}\n"
            "batch-size=32\n")
        code = main(["train", "--config", str(config), "--epochs", "1"])
        assert code == 0
        rows = (tmp_path / "cfg-run" / "metrics.csv").read_text().splitlines()
        assert len(rows) == 2  # header + exactly one epoch: flag beat the file

    def test_unknown_config_key_rejected(self, tmp_path):
        config = tmp_path / "bad.cfg"
        config.write_text("no-such-option=1\n")
        with pytest.raises(SystemExit):
            main(["train", "--config", str(config)])


class TestBench:
    def test_bench_reports_timings(self, capsys):
        assert main(["bench", "--variants", "resnet20,1c-ht",
                     "--batch-size", "4", "--repeats", "1", "--warmup", "0"]) == 0
        out = capsys.readouterr().out
        assert "resnet20" in out and "1c-ht" in out and "ms / batch" in out
