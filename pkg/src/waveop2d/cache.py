"""
Content-addressed result cache: little-endian complex blobs with a JSON manifest.

Layout: <root>/<namespace>/<key>.bin and <key>.json. Every subcommand writes under its
own namespace; files are written to a temporary name and renamed into place.
"""

import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from loguru import logger

from waveop2d.concurrency import parallel_map
from waveop2d.config import RunConfig
from waveop2d.core.birman_schwinger import BSMatrix, assemble_m0, invert_m0, invert_on_grid
from waveop2d.core.free_ops import EnergyGrid
from waveop2d.core.potential import SupportQuadrature
from waveop2d.exceptions import CacheException

BLOB_DTYPE = "<c16"

Artifact = Tuple[np.ndarray, Dict[str, Any]]


def _checksum(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class ResultCache:
    """One namespace of the on-disk cache"""

    def __init__(self, root: Path, namespace: str, version: str):
        self.root = Path(root)
        self.namespace = namespace
        self.version = version
        self.directory = self.root / namespace
        try:
            self.directory.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise CacheException(f"Cache directory {self.directory} is not writable: {e}",
                                 code="NOT_WRITABLE")
        self.hits = 0
        self.misses = 0

    def entry_key(self, *parts: str) -> str:
        """SHA-256 over the parts and the code version tag"""
        blob = "\x1f".join([self.version, *parts])
        return hashlib.sha256(blob.encode()).hexdigest()

    def _paths(self, key: str) -> Tuple[Path, Path]:
        return self.directory / f"{key}.bin", self.directory / f"{key}.json"

    def load(self, key: str) -> Optional[Artifact]:
        """Cached array and its metadata, None on a miss or a failed checksum"""
        blob_path, manifest_path = self._paths(key)
        if not blob_path.exists() or not manifest_path.exists():
            return None
        try:
            manifest = json.loads(manifest_path.read_text())
            data = blob_path.read_bytes()
        except (OSError, json.JSONDecodeError) as e:
            logger.warning(f"Unreadable cache entry {key[:12]} ({e}); recomputing")
            return None
        if manifest.get("key") != key or manifest.get("checksum") != _checksum(data):
            logger.warning(f"Cache checksum mismatch for {key[:12]}; recomputing")
            return None
        array = np.frombuffer(data, dtype=BLOB_DTYPE).reshape(manifest["shape"]).copy()
        return array, manifest.get("meta", {})

    def store(self, key: str, array: np.ndarray, meta: Optional[Dict[str, Any]] = None) -> None:
        blob_path, manifest_path = self._paths(key)
        data = np.ascontiguousarray(array, dtype=BLOB_DTYPE).tobytes()
        manifest = {
            "key": key,
            "shape": list(np.shape(array)),
            "dtype": BLOB_DTYPE,
            "checksum": _checksum(data),
            "version": self.version,
            "meta": meta or {},
        }
        self._atomic_write(blob_path, data)
        self._atomic_write(manifest_path, json.dumps(manifest, sort_keys=True).encode())

    def _atomic_write(self, path: Path, data: bytes) -> None:
        fd, tmp = tempfile.mkstemp(dir=self.directory, prefix=f".{path.name}.")
        try:
            with os.fdopen(fd, "wb") as handle:
                handle.write(data)
            os.replace(tmp, path)
        except OSError as e:
            Path(tmp).unlink(missing_ok=True)
            raise CacheException(f"Cache write failed for {path.name}: {e}", code="WRITE")

    def get_or_compute(self, key: str, producer: Callable[[], Artifact]) -> Artifact:
        """Return the cached artifact, or compute, store and return it."""
        cached = self.load(key)
        if cached is not None:
            self.hits += 1
            logger.debug(f"Cache hit {self.namespace}/{key[:12]}")
            return cached
        self.misses += 1
        array, meta = producer()
        self.store(key, array, meta)
        return array, meta


def cached_inverses(
    cache: ResultCache,
    config: RunConfig,
    quad: SupportQuadrature,
    egrid: EnergyGrid,
    threads: Optional[int] = None,
) -> List[BSMatrix]:
    """M0(lambda + i0)^-1 on the energy grid, read from or written to the cache per energy."""
    if quad.is_empty:
        return invert_on_grid(quad, egrid, config.energy.tol_sing, threads)
    base = config.section_hash("grid", "potential", "energy")

    def one(lam: float) -> BSMatrix:
        key = cache.entry_key("m0_inverse", base, repr(float(lam)))

        def produce() -> Artifact:
            inverse = invert_m0(assemble_m0(lam, quad), config.energy.tol_sing)
            logger.info(f"Inverted M0 at lambda={lam:.6g} (cache miss)")
            return inverse.matrix, {"energy": inverse.energy, "condition": inverse.condition,
                                    "sigma_min": inverse.sigma_min}

        matrix, meta = cache.get_or_compute(key, produce)
        if matrix.shape != (quad.size, quad.size):
            raise CacheException("Cached inverse does not match the support", code="SHAPE",
                                 context={"shape": matrix.shape, "n_s": quad.size})
        return BSMatrix(float(lam), matrix, quad, meta.get("condition"), meta.get("sigma_min"),
                        inverted=True)

    inverses = parallel_map(one, egrid.energies, threads)
    logger.info(f"M0 inverses from cache {cache.namespace}: {cache.hits} hits, "
                f"{cache.misses} misses")
    return inverses
