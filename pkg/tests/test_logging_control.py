import logging

import pytest

from xz3r0_utils import configure_logging, get_logger


@pytest.fixture(autouse=True)
def _restore_logging(monkeypatch):
    yield
    monkeypatch.delenv("XZ3R0_LOG_LEVEL", raising=False)
    monkeypatch.delenv("XZ3R0_LOG_MODULE_LEVELS", raising=False)
    configure_logging(force=True)


def test_level_override_applies_to_every_module():
    configure_logging(force=True, level="DEBUG")
    assert get_logger("xpano.resampler").level == logging.DEBUG
    assert get_logger("xnode.xpanoc2e").level == logging.DEBUG
    assert logging.getLogger().level == logging.DEBUG


def test_module_table_defaults_to_info():
    configure_logging(force=True)
    assert get_logger("xpano.metrics").level == logging.INFO


def test_environment_module_overrides(monkeypatch):
    monkeypatch.setenv(
        "XZ3R0_LOG_MODULE_LEVELS", "xpano.cli=WARNING, broken ,=DEBUG"
    )
    configure_logging(force=True)
    assert get_logger("xpano.cli").level == logging.WARNING
    assert get_logger("xpano.fusion").level == logging.INFO


def test_invalid_environment_level_falls_back_to_info(monkeypatch):
    monkeypatch.setenv("XZ3R0_LOG_LEVEL", "loud")
    configure_logging(force=True)
    assert logging.getLogger().level == logging.INFO


def test_configure_is_idempotent_without_force():
    configure_logging(force=True, level="ERROR")
    configure_logging(level="DEBUG")
    assert get_logger("xpano.padding").level == logging.ERROR
