"""Tests for settings and logging setup."""

import logging

import pytest

from marginbv.cli import EXIT_CONFIG, main
from marginbv.config import Settings
from marginbv.errors import ConfigError
from marginbv.utils.logging_config import get_logger, setup_logging

ENV = ("MARGINBV_SEED", "MARGINBV_LOG_LEVEL", "MARGINBV_N_JOBS", "MARGINBV_LOG_DIR")


@pytest.fixture
def clean_env(monkeypatch):
    for name in ENV:
        monkeypatch.delenv(name, raising=False)
    return monkeypatch


class TestSettings:
    def test_defaults(self, clean_env):
        settings = Settings.from_env()
        assert (settings.seed, settings.log_level, settings.n_jobs, settings.log_dir) == (0, "INFO", 1, "logs")

    def test_reads_environment(self, clean_env):
        clean_env.setenv("MARGINBV_SEED", "42")
        clean_env.setenv("MARGINBV_LOG_LEVEL", "debug")
        clean_env.setenv("MARGINBV_N_JOBS", "4")
        settings = Settings.from_env()
        assert settings.seed == 42
        assert settings.log_level == "DEBUG"
        assert settings.n_jobs == 4

    @pytest.mark.parametrize("name,value", [("MARGINBV_SEED", "abc"), ("MARGINBV_N_JOBS", "0"), ("MARGINBV_LOG_LEVEL", "loud")])
    def test_invalid_values(self, clean_env, name, value):
        clean_env.setenv(name, value)
        with pytest.raises(ConfigError):
            Settings.from_env()

    def test_cli_reports_bad_environment(self, clean_env):
        clean_env.setenv("MARGINBV_N_JOBS", "-2")
        assert main(["schema"]) == EXIT_CONFIG


class TestLogging:
    def test_component_loggers_share_the_package_root(self):
        assert get_logger("decomp").name == "marginbv.decomp"

    def test_setup_replaces_handlers(self):
        setup_logging("WARNING")
        root = setup_logging("INFO")
        assert len(root.handlers) == 1
        assert root.handlers[0].level == logging.INFO

    def test_file_logging(self, tmp_path):
        root = setup_logging("ERROR", log_to_file=True, log_dir=str(tmp_path))
        get_logger("test").debug("recorded in the file only")
        for handler in root.handlers:
            handler.flush()
        files = list(tmp_path.glob("marginbv_*.log"))
        assert len(files) == 1
        assert "recorded in the file only" in files[0].read_text()
        setup_logging("INFO")

    def test_unknown_level(self):
        with pytest.raises(ValueError):
            setup_logging("LOUD")
