"""
Embedding store: a directory holding

    manifest.json   StoreManifest (version, count, dim, model_kind, checkpoint_hash, ids, labels)
    vectors.f32     count x dim little-endian float32 rows in manifest id order
"""

from dataclasses import dataclass
from pathlib import Path
from typing import FrozenSet, List, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from ..exceptions import (
    ArtifactMismatchError,
    DegenerateEmbeddingError,
    LengthMismatchError,
    MissingArtifactError,
    ShapeMismatchError,
)
from ..schemas.manifest import StoreManifest
from ..utils import atomic_write_bytes, atomic_write_text, get_logger

logger = get_logger(__name__)

MANIFEST_NAME = "manifest.json"
VECTORS_NAME = "vectors.f32"
NORM_TOLERANCE = 1e-5


@dataclass(frozen=True)
class EmbeddingSet:
    """Unit-norm embedding rows keyed by unique scenario ids, with optional label sets."""

    ids: np.ndarray
    vectors: np.ndarray
    label_sets: Optional[List[FrozenSet[str]]] = None

    def __post_init__(self):
        if self.vectors.ndim != 2:
            raise ShapeMismatchError("embedding matrix", "(N, dim)", self.vectors.shape)
        if len(self.ids) != self.vectors.shape[0]:
            raise LengthMismatchError(len(self.ids), self.vectors.shape[0])
        if self.label_sets is not None and len(self.label_sets) != len(self.ids):
            raise LengthMismatchError(len(self.ids), len(self.label_sets))
        if len(set(self.ids.tolist())) != len(self.ids):
            raise ArtifactMismatchError("Embedding ids are not unique")
        if len(self.ids):
            norms = np.linalg.norm(self.vectors.astype(np.float64), axis=1)
            if np.any(np.abs(norms - 1.0) > NORM_TOLERANCE):
                raise ShapeMismatchError("embedding row norms", 1.0, float(norms[np.argmax(np.abs(norms - 1.0))]))

    @classmethod
    def from_raw(
        cls,
        ids: Sequence[str],
        vectors: np.ndarray,
        label_sets: Optional[Sequence[Sequence[str]]] = None,
    ) -> "EmbeddingSet":
        """
        L2-normalize raw encoder outputs.

        Raises:
            DegenerateEmbeddingError: If a row has zero norm
        """
        vectors = np.asarray(vectors, dtype=np.float64)
        norms = np.linalg.norm(vectors, axis=1, keepdims=True)
        if np.any(norms == 0.0):
            raise DegenerateEmbeddingError("Zero-norm embedding cannot be normalized")
        labels = [frozenset(s) for s in label_sets] if label_sets is not None else None
        return cls(np.array(list(ids), dtype=str), (vectors / norms).astype(np.float32), labels)

    def __len__(self) -> int:
        return int(self.vectors.shape[0])

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def subset(self, index: Sequence[int]) -> "EmbeddingSet":
        index = np.asarray(index, dtype=np.int64)
        labels = [self.label_sets[i] for i in index] if self.label_sets is not None else None
        return EmbeddingSet(self.ids[index], self.vectors[index], labels)

    def select_ids(self, ids: Sequence[str]) -> "EmbeddingSet":
        position = {sid: k for k, sid in enumerate(self.ids.tolist())}
        missing = [sid for sid in ids if sid not in position]
        if missing:
            raise MissingArtifactError("embedding", ", ".join(missing[:5]))
        return self.subset([position[sid] for sid in ids])


class EmbeddingStore:
    @staticmethod
    def write(directory: Path, embeddings: EmbeddingSet, model_kind: str, checkpoint_hash: str) -> StoreManifest:
        directory = Path(directory)
        manifest = StoreManifest(
            count=len(embeddings),
            dim=embeddings.dim,
            model_kind=model_kind,
            checkpoint_hash=checkpoint_hash,
            ids=embeddings.ids.tolist(),
            labels=[sorted(s) for s in embeddings.label_sets] if embeddings.label_sets is not None else None,
        )
        atomic_write_bytes(directory / VECTORS_NAME, embeddings.vectors.astype("<f4").tobytes())
        atomic_write_text(directory / MANIFEST_NAME, manifest.model_dump_json(indent=2) + "\n")
        logger.info(f"Wrote {manifest.count} embeddings ({manifest.dim}-d, {model_kind}) to {directory}")
        return manifest

    @staticmethod
    def read(directory: Path) -> tuple[StoreManifest, EmbeddingSet]:
        """
        Raises:
            MissingArtifactError: If the manifest or vector file is absent
            ArtifactMismatchError: If the files disagree with each other
        """
        directory = Path(directory)
        manifest_path, vectors_path = directory / MANIFEST_NAME, directory / VECTORS_NAME
        for path in (manifest_path, vectors_path):
            if not path.is_file():
                raise MissingArtifactError("embedding store", str(path), "run `pyscenegraph embed` first")
        try:
            manifest = StoreManifest.model_validate_json(manifest_path.read_text(encoding="utf-8"))
        except ValidationError as e:
            raise ArtifactMismatchError(f"Invalid store manifest {manifest_path}: {e}") from e

        blob = vectors_path.read_bytes()
        if len(blob) != manifest.byte_length:
            raise ArtifactMismatchError(
                f"{vectors_path} holds {len(blob)} bytes, manifest expects {manifest.byte_length}"
            )
        vectors = np.frombuffer(blob, dtype="<f4").reshape(manifest.count, manifest.dim).astype(np.float32)
        labels = [frozenset(s) for s in manifest.labels] if manifest.labels is not None else None
        return manifest, EmbeddingSet(np.array(manifest.ids, dtype=str), vectors, labels)
