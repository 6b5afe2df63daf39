import logging
import os
import threading
import time

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import pd_forms
from critline import cache
from critline import epstein as ep
from critline.errors import CacheError
from critline.forms import GramForm, dual

Q = GramForm.positive([[1.0, 0.3], [0.3, 1.7]])


class TestFormat:
    @given(pd_forms(), st.floats(0.5, 40))
    def test_round_trip(self, F, X):
        vl = ep.enumerate_values(F, X)
        back = cache.parse_values(cache.format_values(vl), expect_digest=F.digest)
        assert back.form_digest == vl.form_digest and back.cutoff == vl.cutoff
        assert np.array_equal(back.lambdas, vl.lambdas)
        assert np.array_equal(back.mults, vl.mults)

    def test_header(self):
        text = cache.format_values(ep.enumerate_values(GramForm.identity(2), 5))
        lines = text.splitlines()
        assert lines[0] == f"EPSVL1 {GramForm.identity(2).digest} 5.0 4"
        assert lines[1:5] == ["1 4", "2 4", "4 4", "5 8"]
        assert lines[5].startswith("#sha256 ")

    def test_empty_list(self):
        vl = ep.enumerate_values(GramForm.identity(2), 0.5)
        assert len(cache.parse_values(cache.format_values(vl))) == 0

    def test_seventeen_digits(self):
        vl = ep.enumerate_values(Q, 30)
        back = cache.parse_values(cache.format_values(vl))
        assert back.lambdas.tobytes() == vl.lambdas.tobytes()

    @pytest.mark.parametrize("pos", [0, 10, 25, -20])
    def test_any_corrupted_byte_is_detected(self, pos):
        text = cache.format_values(ep.enumerate_values(Q, 20))
        i = pos % len(text)
        bad = text[:i] + ("0" if text[i] != "0" else "1") + text[i + 1:]
        with pytest.raises(CacheError):
            cache.parse_values(bad, expect_digest=Q.digest)

    def test_missing_footer(self):
        text = cache.format_values(ep.enumerate_values(Q, 5))
        with pytest.raises(CacheError):
            cache.parse_values(text[: text.index("#sha256")])

    def test_wrong_digest(self):
        text = cache.format_values(ep.enumerate_values(Q, 5))
        with pytest.raises(CacheError, match="digest"):
            cache.parse_values(text, expect_digest=GramForm.identity(2).digest)


class TestStore:
    def test_save_load(self, tmp_path):
        vl = ep.enumerate_values(Q, 25)
        cache.save_values(tmp_path, Q, vl)
        back = cache.load_values(tmp_path, Q)
        assert back.entries() == vl.entries()
        assert cache.load_form(tmp_path, Q.digest) == Q

    def test_absent_is_none(self, tmp_path):
        assert cache.load_values(tmp_path, Q) is None

    def test_foreign_list_rejected(self, tmp_path):
        with pytest.raises(CacheError):
            cache.save_values(tmp_path, Q, ep.enumerate_values(GramForm.identity(2), 5))

    def test_dir_precedence(self, tmp_path, monkeypatch):
        monkeypatch.setenv(cache.ENV_VAR, str(tmp_path / "env"))
        assert cache.cache_dir() == tmp_path / "env"
        assert cache.cache_dir(tmp_path / "flag") == tmp_path / "flag"
        assert (tmp_path / "flag").is_dir()

    def test_no_leftover_temp_files(self, tmp_path):
        cache.ensure_values(tmp_path, Q, 30)
        assert sorted(p.suffix for p in tmp_path.iterdir()) == [".epsvl", ".form"]


class TestManage:
    def test_idempotent(self, tmp_path):
        first = cache.cache_manage(tmp_path, Q, 40)
        second = cache.cache_manage(tmp_path, Q, 40)
        assert first["status"] == "built" and second["status"] == "up to date"
        assert {k: v for k, v in first.items() if k != "status"} == {
            k: v for k, v in second.items() if k != "status"}

    def test_extend_grows(self, tmp_path):
        a = cache.cache_manage(tmp_path, Q, 10)
        b = cache.cache_manage(tmp_path, Q, 20)
        assert b["status"] == "extended"
        assert b["entries"] > a["entries"] and b["dual_entries"] > a["dual_entries"]

    def test_smaller_target_is_up_to_date(self, tmp_path):
        cache.cache_manage(tmp_path, Q, 20)
        assert cache.cache_manage(tmp_path, Q, 10)["status"] == "up to date"

    def test_dual_covers_afe(self, tmp_path):
        small = GramForm.positive([[0.25, 0.0], [0.0, 0.5]])
        rep = cache.cache_manage(tmp_path, small, 10)
        t = 10 * np.pi / np.sqrt(0.125)  # height where X(t) = 10
        assert rep["dual_X"] >= 10
        assert rep["dual_X"] >= ep.afe_dual_cutoff(small, t) * (1 - 1e-12)
        assert rep["dual"] == dual(small).digest

    def test_cached_equals_fresh(self, tmp_path):
        cache.cache_manage(tmp_path, Q, 60)
        assert cache.values_for(tmp_path, Q, 60).entries() == ep.enumerate_values(Q, 60).entries()

    def test_corruption_surfaces(self, tmp_path):
        cache.cache_manage(tmp_path, Q, 20)
        path = cache.values_path(tmp_path, Q.digest)
        raw = bytearray(path.read_bytes())
        raw[len(raw) // 2] ^= 1
        path.write_bytes(bytes(raw))
        with pytest.raises(CacheError):
            cache.cache_manage(tmp_path, Q, 20)


class TestLock:
    def test_held_lock_conflicts(self, tmp_path):
        (tmp_path / f"{Q.digest}.lock").write_text("1\n")
        with pytest.raises(CacheError, match="held"):
            cache.ensure_values(tmp_path, Q, 10)

    def test_stale_lock_reclaimed(self, tmp_path, caplog):
        lock = tmp_path / f"{Q.digest}.lock"
        lock.write_text("1\n")
        old = time.time() - 2 * cache.STALE_LOCK_SECONDS
        os.utime(lock, (old, old))
        with caplog.at_level(logging.WARNING, logger="critline.cache"):
            _, status = cache.ensure_values(tmp_path, Q, 10)
        assert status == "built"
        assert "stale" in caplog.text
        assert not lock.exists()

    def test_lock_released_after_error(self, tmp_path):
        with pytest.raises(RuntimeError):
            with cache.locked(tmp_path, "abc"):
                raise RuntimeError("boom")
        assert not (tmp_path / "abc.lock").exists()

    def test_concurrent_builders(self, tmp_path):
        results, errors = [], []

        def build():
            try:
                results.append(cache.ensure_values(tmp_path, Q, 200)[0].entries())
            except CacheError as exc:
                errors.append(exc)

        workers = [threading.Thread(target=build) for _ in range(4)]
        for w in workers:
            w.start()
        for w in workers:
            w.join()
        # losers either see the lock or the finished file; nobody reads a torn file
        assert results and all(r == results[0] for r in results)
        assert all("held" in str(e) for e in errors)
        assert cache.load_values(tmp_path, Q).entries() == results[0]
