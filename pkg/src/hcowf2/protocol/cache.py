"""Receiver-side cache of function descriptions keyed by signature."""

from __future__ import annotations

import logging
import threading
from collections import OrderedDict
from pathlib import Path
from typing import Callable, Optional

from ..errors import Hcowf2Error, SignatureMismatch
from ..oneway import FunctionDescription
from .encoding import FILE_SUFFIX, Signature, fd_signature, load_fd, save_fd

log = logging.getLogger(__name__)


class FdCache:
    """Content-addressed LRU cache.

    Every entry re-hashes to its key; inserts check this.  With a
    ``directory``, entries are also persisted as ``<hex signature>.hcw2``
    and misses fall back to the directory (so eviction only drops the
    in-memory copy).
    """

    def __init__(self, capacity: int = 256, directory: str | Path | None = None):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.directory = Path(directory) if directory is not None else None
        if self.directory is not None:
            self.directory.mkdir(parents=True, exist_ok=True)
        self._entries: OrderedDict[Signature, FunctionDescription] = OrderedDict()
        self._lock = threading.RLock()

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, sig: Signature) -> bool:
        return self.get(sig) is not None

    def keys(self) -> list[Signature]:
        with self._lock:
            return list(self._entries)

    def get(self, sig: Signature) -> Optional[FunctionDescription]:
        with self._lock:
            fd = self._entries.get(sig)
            if fd is not None:
                self._entries.move_to_end(sig)
                return fd
        fd = self._load(sig)
        if fd is not None:
            with self._lock:
                self._store(sig, fd)
        return fd

    def insert(self, sig: Signature, fd: FunctionDescription) -> None:
        if fd_signature(fd) != sig:
            raise SignatureMismatch(f"description does not hash to {sig.hex()}")
        with self._lock:
            self._store(sig, fd)
        if self.directory is not None:
            path = self._path(sig)
            if not path.exists():
                tmp = path.with_name(f"{path.name}.{threading.get_ident()}.tmp")
                save_fd(fd, tmp)
                tmp.replace(path)

    def put(self, fd: FunctionDescription) -> Signature:
        sig = fd_signature(fd)
        self.insert(sig, fd)
        return sig

    def get_or_insert(self, sig: Signature, fetch: Callable[[], FunctionDescription]) -> FunctionDescription:
        """Return the cached entry, or call ``fetch`` and insert its result.

        ``fetch`` runs without the lock held; two sessions racing on one key
        both insert, which is harmless because values are content-addressed.
        """
        fd = self.get(sig)
        if fd is None:
            fd = fetch()
            self.insert(sig, fd)
        return fd

    def _store(self, sig: Signature, fd: FunctionDescription) -> None:
        self._entries[sig] = fd
        self._entries.move_to_end(sig)
        while len(self._entries) > self.capacity:
            evicted, _ = self._entries.popitem(last=False)
            log.debug("evicted %s", evicted.hex())

    def _path(self, sig: Signature) -> Path:
        return self.directory / f"{sig.hex()}{FILE_SUFFIX}"

    def _load(self, sig: Signature) -> Optional[FunctionDescription]:
        if self.directory is None:
            return None
        path = self._path(sig)
        if not path.exists():
            return None
        try:
            fd = load_fd(path)
        except Hcowf2Error as exc:
            log.warning("ignoring unreadable cache file %s: %s", path, exc)
            return None
        if fd_signature(fd) != sig:
            log.warning("ignoring cache file %s: content does not match its name", path)
            return None
        return fd
