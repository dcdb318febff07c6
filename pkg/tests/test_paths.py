"""Tests for navstress.paths: environment-driven output root and worker count."""

from pathlib import Path

import pytest

from navstress.paths import default_out_root, default_workers


class TestDefaultOutRoot:
    def test_override(self, monkeypatch, tmp_path):
        monkeypatch.setenv("NAVSTRESS_OUT", str(tmp_path))
        assert default_out_root() == tmp_path

    def test_xdg_state_home(self, monkeypatch, tmp_path):
        monkeypatch.delenv("NAVSTRESS_OUT", raising=False)
        monkeypatch.setenv("XDG_STATE_HOME", str(tmp_path))
        assert default_out_root() == tmp_path / "navstress" / "runs"

    def test_home_fallback(self, monkeypatch, tmp_path):
        monkeypatch.delenv("NAVSTRESS_OUT", raising=False)
        monkeypatch.delenv("XDG_STATE_HOME", raising=False)
        monkeypatch.setattr(Path, "home", classmethod(lambda cls: tmp_path))
        assert default_out_root() == tmp_path / ".local" / "state" / "navstress" / "runs"


class TestDefaultWorkers:
    def test_unset(self, monkeypatch):
        monkeypatch.delenv("NAVSTRESS_WORKERS", raising=False)
        assert default_workers() == 1

    def test_set(self, monkeypatch):
        monkeypatch.setenv("NAVSTRESS_WORKERS", " 4 ")
        assert default_workers() == 4

    @pytest.mark.parametrize("raw", ["0", "-2", "many"])
    def test_invalid(self, monkeypatch, raw):
        monkeypatch.setenv("NAVSTRESS_WORKERS", raw)
        with pytest.raises(ValueError):
            default_workers()
