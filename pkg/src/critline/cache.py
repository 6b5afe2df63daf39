"""On-disk cache of value lists (the EPSVL1 text format).

Layout of ``<dir>/<digest>.epsvl``::

    EPSVL1 <form_digest> <X> <entry_count>
    <lambda> <a>            (one line per entry, lambda to 17 significant digits)
    ...
    #sha256 <hex digest of all preceding bytes>

The form itself is stored next to it as ``<digest>.form`` so a cache
directory is self-describing. Writes go through a temporary file and
``os.replace``; concurrent builders are excluded by an ``O_EXCL`` lock file.
"""

from __future__ import annotations

import hashlib
import logging
import os
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from critline.epstein import ValueList, enumerate_values
from critline.errors import CacheError
from critline.forms import GramForm, discriminant, dual, parse_text

log = logging.getLogger(__name__)

MAGIC = "EPSVL1"
ENV_VAR = "CRITLINE_CACHE_DIR"
STALE_LOCK_SECONDS = 3600.0


def cache_dir(explicit: str | os.PathLike | None = None) -> Path:
    """--cache-dir wins over $CRITLINE_CACHE_DIR; the fallback is ~/.cache/critline."""
    if explicit:
        path = Path(explicit)
    elif os.environ.get(ENV_VAR):
        path = Path(os.environ[ENV_VAR])
    else:
        path = Path.home() / ".cache" / "critline"
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CacheError(f"cannot create cache directory {path}: {exc}") from exc
    return path


def values_path(directory: Path, digest: str) -> Path:
    return Path(directory) / f"{digest}.epsvl"


def format_values(vl: ValueList) -> str:
    body = [f"{MAGIC} {vl.form_digest} {vl.cutoff!r} {len(vl)}\n"]
    body.extend(f"{lam:.17g} {a}\n" for lam, a in vl.entries())
    text = "".join(body)
    return text + f"#sha256 {hashlib.sha256(text.encode()).hexdigest()}\n"


def parse_values(text: str, expect_digest: str | None = None) -> ValueList:
    """Inverse of :func:`format_values`; any inconsistency raises CacheError."""
    body, sep, footer = text.rpartition("#sha256 ")
    if not sep:
        raise CacheError("value-list file has no checksum footer")
    want = footer.strip()
    got = hashlib.sha256(body.encode()).hexdigest()
    if want != got:
        raise CacheError(f"value-list checksum mismatch: file says {want[:16]}..., content hashes to {got[:16]}...")
    lines = body.splitlines()
    head = lines[0].split() if lines else []
    if len(head) != 4 or head[0] != MAGIC:
        raise CacheError("bad value-list header")
    digest, cutoff, count = head[1], float(head[2]), int(head[3])
    if expect_digest is not None and digest != expect_digest:
        raise CacheError(f"form digest mismatch: file has {digest}, expected {expect_digest}")
    if len(lines) - 1 != count:
        raise CacheError(f"header announces {count} entries, found {len(lines) - 1}")
    if count:
        table = np.loadtxt(lines[1:], ndmin=2)
        lam, mult = table[:, 0], table[:, 1].astype(np.int64)
    else:
        lam, mult = np.zeros(0), np.zeros(0, dtype=np.int64)
    try:
        return ValueList(digest, cutoff, lam, mult)
    except ValueError as exc:
        raise CacheError(f"malformed value list: {exc}") from exc


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(f".{path.name}.{os.getpid()}.tmp")
    try:
        tmp.write_text(text)
        os.replace(tmp, path)
    except OSError as exc:
        tmp.unlink(missing_ok=True)
        raise CacheError(f"cannot write {path}: {exc}") from exc


def load_values(directory: Path, Q: GramForm) -> ValueList | None:
    """Cached value list of Q, or None when nothing is cached yet."""
    path = values_path(directory, Q.digest)
    if not path.exists():
        return None
    try:
        text = path.read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise CacheError(f"cannot read {path}: {exc}") from exc
    return parse_values(text, expect_digest=Q.digest)


def save_values(directory: Path, Q: GramForm, vl: ValueList) -> Path:
    if vl.form_digest != Q.digest:
        raise CacheError("value list belongs to a different form")
    directory = Path(directory)
    form_file = directory / f"{Q.digest}.form"
    if not form_file.exists():
        _atomic_write(form_file, Q.to_text())
    path = values_path(directory, Q.digest)
    _atomic_write(path, format_values(vl))
    return path


def load_form(directory: Path, digest: str) -> GramForm:
    path = Path(directory) / f"{digest}.form"
    try:
        Q = parse_text(path.read_text(), definite="positive_definite")
    except OSError as exc:
        raise CacheError(f"cannot read {path}: {exc}") from exc
    if Q.digest != digest:
        raise CacheError(f"{path.name} does not hash to its file name")
    return Q


@contextmanager
def locked(directory: Path, digest: str):
    """Exclusive build lock; a lock older than an hour is presumed dead."""
    path = Path(directory) / f"{digest}.lock"
    for _ in range(2):
        try:
            fd = os.open(path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
            break
        except FileExistsError:
            try:
                age = time.time() - path.stat().st_mtime
            except FileNotFoundError:
                continue
            if age < STALE_LOCK_SECONDS:
                raise CacheError(f"{path} is held by another builder") from None
            log.warning("reclaiming stale cache lock %s (%.0f s old)", path, age)
            path.unlink(missing_ok=True)
    else:
        raise CacheError(f"could not acquire {path}")
    try:
        os.write(fd, f"{os.getpid()}\n".encode())
        os.close(fd)
        yield
    finally:
        path.unlink(missing_ok=True)


def ensure_values(directory: Path, Q: GramForm, X: float) -> tuple[ValueList, str]:
    """Value list of Q reaching at least X, building or extending the cache.

    Returns the list and one of "built", "extended", "up to date".
    """
    cached = load_values(directory, Q)
    if cached is not None and cached.cutoff >= X:
        return cached, "up to date"
    with locked(directory, Q.digest):
        cached = load_values(directory, Q)
        if cached is not None and cached.cutoff >= X:
            return cached, "up to date"
        vl = enumerate_values(Q, X)
        save_values(directory, Q, vl)
    return vl, ("built" if cached is None else "extended")


def dual_reach(Q: GramForm, X: float) -> float:
    """Cutoff for dual(Q) that serves both the theta path (X) and the AFE (X/D)."""
    return X * max(1.0, 1.0 / discriminant(Q))


def cache_manage(directory: Path, Q: GramForm, X: float) -> dict:
    """Bring the cached value lists of Q and dual(Q) up to X; idempotent."""
    Q = Q.classify()
    Qd = dual(Q)
    vl, status = ensure_values(directory, Q, X)
    dvl, dstatus = ensure_values(directory, Qd, dual_reach(Q, X))
    return {
        "form": Q.digest,
        "dual": Qd.digest,
        "X": vl.cutoff,
        "entries": len(vl),
        "points": vl.total,
        "dual_X": dvl.cutoff,
        "dual_entries": len(dvl),
        "status": status if status == dstatus or Qd.digest == Q.digest else f"{status}/{dstatus}",
    }


def values_for(directory: Path | None, Q: GramForm, X: float) -> ValueList:
    """Value list up to X, through the cache when a directory is given."""
    if directory is None:
        return enumerate_values(Q, X)
    return ensure_values(directory, Q, X)[0]
