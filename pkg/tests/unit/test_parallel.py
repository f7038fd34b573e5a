#!/usr/bin/env python3
"""
Unit tests for per-cube parallel evaluation and environment settings
"""

import logging

import pytest

from projects.hardylab.core import parallel
from projects.hardylab.core.environment_utils import (
    configure_logging,
    get_environment_info,
    get_log_level,
    get_output_root,
    get_thread_count,
    is_development,
)
from projects.hardylab.core.errors import EmptyCube
from projects.hardylab.core.parallel import CubeProcessor, configure_processor, get_cube_processor


@pytest.fixture
def reset_processor():
    yield
    with parallel._processor_lock:
        if parallel._processor is not None:
            parallel._processor.shutdown()
        parallel._processor = None


class TestCubeProcessor:
    """Test ordered mapping over cubes"""

    def test_inline_when_single_worker(self):
        processor = CubeProcessor(1)
        assert processor.executor is None
        assert processor.map_cubes(lambda x: x * x, range(5)) == [0, 1, 4, 9, 16]

    def test_threaded_preserves_order(self):
        processor = CubeProcessor(4)
        try:
            assert processor.map_cubes(lambda x: -x, range(50)) == [-x for x in range(50)]
        finally:
            processor.shutdown()
        assert processor.executor is None

    def test_empty_input(self):
        assert CubeProcessor(2).map_cubes(str, []) == []

    def test_domain_errors_propagate(self):
        processor = CubeProcessor(2)

        def fail(_):
            raise EmptyCube("no cells")

        try:
            with pytest.raises(EmptyCube):
                processor.map_cubes(fail, [1, 2])
        finally:
            processor.shutdown()

    def test_worker_floor(self):
        assert CubeProcessor(0).max_workers == 1

    def test_configure_replaces_shared(self, reset_processor):
        first = configure_processor(3)
        assert first.max_workers == 3
        assert get_cube_processor() is first
        second = configure_processor(1)
        assert second is not first
        assert first.executor is None

    def test_shared_from_environment(self, reset_processor, monkeypatch):
        monkeypatch.setenv("HARDYLAB_THREADS", "2")
        with parallel._processor_lock:
            parallel._processor = None
        assert get_cube_processor().max_workers == 2


class TestEnvironment:
    """Test environment-derived settings"""

    def test_thread_override_wins(self, monkeypatch):
        monkeypatch.setenv("HARDYLAB_THREADS", "8")
        assert get_thread_count(3) == 3
        assert get_thread_count() == 8

    def test_bad_thread_value(self, monkeypatch, caplog):
        monkeypatch.setenv("HARDYLAB_THREADS", "many")
        with caplog.at_level(logging.WARNING):
            assert get_thread_count() == 1
        assert "HARDYLAB_THREADS" in caplog.text

    def test_output_root(self, monkeypatch):
        monkeypatch.delenv("HARDYLAB_OUTPUT_DIR", raising=False)
        assert get_output_root() == "runs"
        monkeypatch.setenv("HARDYLAB_OUTPUT_DIR", "/tmp/elsewhere")
        assert get_output_root() == "/tmp/elsewhere"
        assert get_output_root("mine") == "mine"

    def test_log_level(self, monkeypatch):
        monkeypatch.delenv("HARDYLAB_LOG_LEVEL", raising=False)
        monkeypatch.setenv("ENVIRONMENT", "development")
        assert is_development()
        assert get_log_level() == "DEBUG"
        monkeypatch.setenv("ENVIRONMENT", "production")
        assert get_log_level() == "INFO"
        monkeypatch.setenv("HARDYLAB_LOG_LEVEL", "warning")
        assert get_log_level() == "WARNING"

    def test_configure_logging(self):
        configure_logging("error")
        assert logging.getLogger().level == logging.ERROR
        configure_logging("INFO")

    def test_environment_info(self, monkeypatch):
        monkeypatch.setenv("ENVIRONMENT", "testing")
        info = get_environment_info()
        assert info["environment"] == "testing"
        assert not info["is_production"]
        assert set(info) == {"environment", "is_development", "is_production", "threads", "log_level"}
