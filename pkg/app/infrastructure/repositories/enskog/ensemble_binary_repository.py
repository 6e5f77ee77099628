# app/infrastructure/repositories/enskog/ensemble_binary_repository.py
"""
ENSK1 ensemble file format.

    b"ENSK1" | uint32 LE header length | UTF-8 JSON header | column blocks

The header records kind, member_count, time_horizon, seed_lineage and an ordered
list of columns {name, dtype, shape}. Columns are raw little-endian float64 / int64
arrays written back to back in header order.

states_at_time columns:  position (M,3), velocity (M,3), last_event_time (M,)
frozen_paths columns:    initial_position (M,3), initial_velocity (M,3),
                         event_count (M,), event_time (E,), event_velocity (E,3)
"""

import json
import logging
import struct
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np

from app.core.exceptions.exceptions import RepositoryException
from app.domains.enskog.measures.entities.measures import (
    Ensemble,
    EnsembleKind,
    ParticlePath,
    ParticleState,
)
from app.domains.enskog.measures.repositories.ensemble_repository import (
    IEnsembleRepository,
    PathLike,
)

logger = logging.getLogger(__name__)

MAGIC = b"ENSK1"
_DTYPES = {"float64": np.dtype("<f8"), "int64": np.dtype("<i8")}


class EnsembleBinaryRepository(IEnsembleRepository):
    """
    Concrete implementation of IEnsembleRepository on ENSK1 files.
    Translates between Ensemble entities and named column arrays.
    """

    # --- Helper functions for entity <-> column conversion ---
    def _state_columns(self, ensemble: Ensemble) -> Dict[str, np.ndarray]:
        return {
            "position": np.array([m.position for m in ensemble.members]),
            "velocity": np.array([m.velocity for m in ensemble.members]),
            "last_event_time": np.array([m.last_event_time for m in ensemble.members], dtype=np.float64),
        }

    def _path_columns(self, ensemble: Ensemble) -> Dict[str, np.ndarray]:
        members = ensemble.members
        return {
            "initial_position": np.array([p.initial.position for p in members]),
            "initial_velocity": np.array([p.initial.velocity for p in members]),
            "event_count": np.array([p.event_count for p in members], dtype=np.int64),
            "event_time": np.concatenate([p.event_times for p in members]),
            "event_velocity": np.concatenate([p.event_velocities for p in members]).reshape(-1, 3),
        }

    def _to_states(self, columns: Dict[str, np.ndarray]) -> Tuple[ParticleState, ...]:
        return tuple(
            ParticleState(position=x, velocity=z, last_event_time=float(t))
            for x, z, t in zip(columns["position"], columns["velocity"], columns["last_event_time"])
        )

    def _to_paths(self, columns: Dict[str, np.ndarray]) -> Tuple[ParticlePath, ...]:
        bounds = np.concatenate([[0], np.cumsum(columns["event_count"])])
        paths = []
        for i, (x0, z0) in enumerate(zip(columns["initial_position"], columns["initial_velocity"])):
            lo, hi = int(bounds[i]), int(bounds[i + 1])
            paths.append(
                ParticlePath(
                    initial=ParticleState(position=x0, velocity=z0),
                    event_times=columns["event_time"][lo:hi],
                    event_velocities=columns["event_velocity"][lo:hi],
                )
            )
        return tuple(paths)

    # --- Repository contract ---
    def save(self, ensemble: Ensemble, path: PathLike) -> Path:
        path = Path(path)
        if ensemble.kind is EnsembleKind.FROZEN_PATHS:
            columns = self._path_columns(ensemble)
        else:
            columns = self._state_columns(ensemble)

        layout: List[dict] = []
        blocks: List[bytes] = []
        for name, values in columns.items():
            dtype_name = "int64" if np.issubdtype(values.dtype, np.integer) else "float64"
            array = np.ascontiguousarray(values, dtype=_DTYPES[dtype_name])
            layout.append({"name": name, "dtype": dtype_name, "shape": list(array.shape)})
            blocks.append(array.tobytes())

        header = json.dumps(
            {
                "kind": ensemble.kind.value,
                "member_count": len(ensemble),
                "time_horizon": ensemble.time_horizon,
                "seed_lineage": list(ensemble.seed_lineage),
                "columns": layout,
            },
            sort_keys=True,
            separators=(",", ":"),
        ).encode("utf-8")

        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with path.open("wb") as fh:
                fh.write(MAGIC)
                fh.write(struct.pack("<I", len(header)))
                fh.write(header)
                for block in blocks:
                    fh.write(block)
        except OSError as e:
            raise RepositoryException("write", "ensemble", {"path": str(path), "error": str(e)})
        logger.debug("wrote %s ensemble of %d members to %s", ensemble.kind.value, len(ensemble), path)
        return path

    def load(self, path: PathLike) -> Ensemble:
        path = Path(path)
        try:
            raw = path.read_bytes()
        except OSError as e:
            raise RepositoryException("read", "ensemble", {"path": str(path), "error": str(e)})

        def fail(reason: str) -> RepositoryException:
            return RepositoryException("read", "ensemble", {"path": str(path), "error": reason})

        if raw[: len(MAGIC)] != MAGIC:
            raise fail("not an ENSK1 file")

        offset = len(MAGIC)
        if len(raw) < offset + 4:
            raise fail("truncated header length")
        (header_length,) = struct.unpack_from("<I", raw, offset)
        offset += 4
        if len(raw) < offset + header_length:
            raise fail("truncated header")
        try:
            header = json.loads(raw[offset: offset + header_length].decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise fail(f"bad header: {e}")
        offset += header_length

        try:
            columns: Dict[str, np.ndarray] = {}
            for column in header["columns"]:
                dtype = _DTYPES[column["dtype"]]
                shape = tuple(int(d) for d in column["shape"])
                count = int(np.prod(shape)) if shape else 1
                size = count * dtype.itemsize
                if count < 0 or len(raw) < offset + size:
                    raise fail(f"truncated column {column['name']}")
                if count == 0:
                    columns[column["name"]] = np.empty(shape, dtype=dtype)
                else:
                    columns[column["name"]] = np.frombuffer(raw, dtype=dtype, count=count, offset=offset).reshape(shape)
                offset += size
            if offset != len(raw):
                raise fail("trailing bytes")

            kind = EnsembleKind(header["kind"])
            members = self._to_paths(columns) if kind is EnsembleKind.FROZEN_PATHS else self._to_states(columns)
            if len(members) != header["member_count"]:
                raise fail("member count mismatch")
            return Ensemble(
                kind=kind,
                members=members,
                time_horizon=float(header["time_horizon"]),
                seed_lineage=tuple(header["seed_lineage"]),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise fail(f"malformed content: {e!r}")

    def exists(self, path: PathLike) -> bool:
        return Path(path).is_file()
