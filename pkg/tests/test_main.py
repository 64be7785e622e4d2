"""Command line behaviour, with the runner mocked out where the numbers do not matter"""
from pathlib import Path

import pytest
from pytest_mock import MockerFixture

from toric_quench import __version__
from toric_quench.config import THREADS_ENV_VAR
from toric_quench.errors import NumericalInconsistencyError
from toric_quench.main import cli
from toric_quench.main import execute
from toric_quench.main import main
from toric_quench.runner import RunResult

CONFIG = """\
experiment = QuenchClean
n_sites    = 8
t_list     = 0, 0.5
d_list     = 1, 2
"""


@pytest.fixture
def config_file(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> Path:
    monkeypatch.delenv(THREADS_ENV_VAR, raising=False)
    path = tmp_path / "clean.conf"
    path.write_text(CONFIG)
    return path


def test_run_succeeds(config_file: Path, tmp_path: Path) -> None:
    out_dir = tmp_path / "results"
    assert main(["-q", "run", str(config_file), "--out-dir", str(out_dir), "--seed", "3"]) == 0
    assert (out_dir / "correlation.csv").exists()
    assert (out_dir / "manifest.json").exists()


def test_config_error_exits_2(config_file: Path, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    code = main(["run", str(config_file), "--set", "n_sites=one", "--out-dir", str(tmp_path / "results")])
    assert code == 2
    err = capsys.readouterr().err
    assert err.startswith("toric-quench: error: config key 'n_sites' (--set)")
    assert len(err.strip().splitlines()) == 1


def test_numerical_error_exits_2(
    config_file: Path, tmp_path: Path, mocker: MockerFixture, capsys: pytest.CaptureFixture[str]
) -> None:
    mocker.patch("toric_quench.main.run", side_effect=NumericalInconsistencyError("C^xx", 1.5, 1.0))
    assert main(["run", str(config_file), "--out-dir", str(tmp_path / "results")]) == 2
    assert "C^xx" in capsys.readouterr().err


def test_failed_check_exits_1(config_file: Path, tmp_path: Path, mocker: MockerFixture) -> None:
    def failing(config: object, mapper: object = map) -> RunResult:
        result = RunResult(config)  # type: ignore[arg-type]
        result.passed = False
        return result

    mocker.patch("toric_quench.main.run", side_effect=failing)
    assert main(["run", str(config_file), "--out-dir", str(tmp_path / "results")]) == 1


def test_threads_use_a_process_pool(config_file: Path, tmp_path: Path, mocker: MockerFixture) -> None:
    pool_class = mocker.patch("toric_quench.main.multiprocessing.Pool")
    run = mocker.patch("toric_quench.main.run")
    run.return_value.passed = True
    assert main(["run", str(config_file), "--threads", "3", "--out-dir", str(tmp_path / "results")]) == 0
    pool_class.assert_called_once_with(3)
    pool = pool_class.return_value.__enter__.return_value
    config = run.call_args.args[0]
    run.assert_called_once_with(config, pool.imap)
    assert config.origins["threads"] == "flags"


def test_single_thread_runs_in_process(config_file: Path, tmp_path: Path, mocker: MockerFixture) -> None:
    pool_class = mocker.patch("toric_quench.main.multiprocessing.Pool")
    run = mocker.patch("toric_quench.main.run")
    run.return_value.passed = True
    assert main(["run", str(config_file), "--out-dir", str(tmp_path / "results")]) == 0
    pool_class.assert_not_called()
    assert execute(run.call_args.args[0]) is run.return_value


def test_threads_from_environment(
    config_file: Path, tmp_path: Path, mocker: MockerFixture, monkeypatch: pytest.MonkeyPatch
) -> None:
    monkeypatch.setenv(THREADS_ENV_VAR, "2")
    pool_class = mocker.patch("toric_quench.main.multiprocessing.Pool")
    run = mocker.patch("toric_quench.main.run")
    run.return_value.passed = True
    assert main(["run", str(config_file), "--out-dir", str(tmp_path / "results")]) == 0
    pool_class.assert_called_once_with(2)


def test_version(capsys: pytest.CaptureFixture[str]) -> None:
    with pytest.raises(SystemExit) as exc_info:
        main(["--version"])
    assert exc_info.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_verbosity_flags_conflict() -> None:
    with pytest.raises(SystemExit) as exc_info:
        main(["-v", "-q", "run", "x.conf"])
    assert exc_info.value.code == 2


def test_cli_exits_with_status(config_file: Path, tmp_path: Path) -> None:
    with pytest.raises(SystemExit) as exc_info:
        cli(["-q", "run", str(config_file), "--set", "realizations=0", "--out-dir", str(tmp_path / "results")])
    assert exc_info.value.code == 2
