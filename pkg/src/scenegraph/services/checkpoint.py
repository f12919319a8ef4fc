"""
Checkpoint container.

A checkpoint is a ``torch.save`` dict:

    {"format_version": int, "meta": CheckpointMeta as dict, "state": {name: state_dict}}

``name`` is one of ``encoder``, ``target``, ``predictor``, ``projector`` or ``classifier``.
Files are loaded with ``weights_only=True``.
"""

import hashlib
import io
import json
import pickle
from pathlib import Path
from typing import Dict, Optional, Tuple

import torch
from pydantic import ValidationError
from torch import nn

from ..config import PipelineSettings
from ..exceptions import ArtifactMismatchError, MissingArtifactError
from ..models import Classifier, HeteroEncoder
from ..schemas.manifest import CHECKPOINT_FORMAT_VERSION, CheckpointMeta
from ..utils import atomic_write_bytes, get_logger, short_digest
from .graph_builder import edge_dims

logger = get_logger(__name__)

StateDicts = Dict[str, Dict[str, torch.Tensor]]


def state_digest(meta: CheckpointMeta, states: StateDicts) -> str:
    """SHA-256 over the meta JSON and every tensor's bytes in key order."""
    h = hashlib.sha256(json.dumps(meta.model_dump(mode="json"), sort_keys=True).encode())
    for name in sorted(states):
        for key in sorted(states[name]):
            tensor = states[name][key].detach().cpu().contiguous()
            h.update(f"{name}.{key}:{tensor.dtype}:{tuple(tensor.shape)}".encode())
            h.update(tensor.numpy().tobytes())
    return h.hexdigest()


class CheckpointService:
    @staticmethod
    def encoder_path(settings: PipelineSettings, model_kind: str) -> Path:
        return settings.paths.checkpoint_dir / f"{model_kind}.pt"

    @staticmethod
    def classifier_path(settings: PipelineSettings, model_kind: str) -> Path:
        return settings.paths.checkpoint_dir / f"{model_kind}.classifier.pt"

    @staticmethod
    def build_meta(settings: PipelineSettings, model_kind: str, **extra) -> CheckpointMeta:
        builder = settings.builder
        return CheckpointMeta(
            format_version=CHECKPOINT_FORMAT_VERSION,
            model_kind=model_kind,
            obstacle_dim=builder.obstacle_feature_dim,
            road_dim=builder.road_feature_dim,
            edge_dims=edge_dims(),
            embedding_dim=settings.train.embedding_dim,
            predictor_hidden_dim=settings.train.predictor_hidden_dim,
            builder_digest=short_digest(builder),
            **extra,
        )

    @staticmethod
    def save(path: Path, meta: CheckpointMeta, modules: Dict[str, nn.Module]) -> str:
        states = {name: module.state_dict() for name, module in modules.items()}
        buffer = io.BytesIO()
        torch.save(
            {"format_version": meta.format_version, "meta": meta.model_dump(mode="json"), "state": states},
            buffer,
        )
        atomic_write_bytes(Path(path), buffer.getvalue())
        digest = state_digest(meta, states)
        logger.info(f"Saved {meta.model_kind} checkpoint to {path} ({digest[:12]})")
        return digest

    @staticmethod
    def load(path: Path) -> Tuple[CheckpointMeta, StateDicts]:
        """
        Raises:
            MissingArtifactError: If the file does not exist
            ArtifactMismatchError: If the file is not a checkpoint of a supported version
        """
        path = Path(path)
        if not path.is_file():
            raise MissingArtifactError("checkpoint", str(path), "run `pyscenegraph train` first")
        try:
            payload = torch.load(path, map_location="cpu", weights_only=True)
            meta = CheckpointMeta.model_validate(payload["meta"])
        except (KeyError, TypeError, EOFError, ValidationError, RuntimeError, pickle.UnpicklingError) as e:
            raise ArtifactMismatchError(f"Unreadable checkpoint '{path}': {e}") from e
        if payload.get("format_version") != CHECKPOINT_FORMAT_VERSION:
            raise ArtifactMismatchError(
                f"Checkpoint '{path}' has format version {payload.get('format_version')}, "
                f"expected {CHECKPOINT_FORMAT_VERSION}"
            )
        return meta, payload["state"]

    @staticmethod
    def check_compatible(meta: CheckpointMeta, settings: PipelineSettings, vocabulary: Optional[list] = None) -> None:
        """
        Raises:
            ArtifactMismatchError: On feature/embedding dimension or vocabulary drift
        """
        expected = CheckpointService.build_meta(settings, meta.model_kind)
        for field in ("obstacle_dim", "road_dim", "edge_dims", "embedding_dim", "builder_digest"):
            if getattr(meta, field) != getattr(expected, field):
                raise ArtifactMismatchError(
                    f"Checkpoint {field}={getattr(meta, field)} does not match configuration "
                    f"({getattr(expected, field)}); retrain or restore the original config"
                )
        if vocabulary is not None and meta.vocabulary is not None and list(meta.vocabulary) != list(vocabulary):
            raise ArtifactMismatchError("Classifier vocabulary does not match labels.vocabulary")

    @staticmethod
    def build_encoder(meta: CheckpointMeta, state: Optional[dict] = None) -> HeteroEncoder:
        encoder = HeteroEncoder(
            obstacle_dim=meta.obstacle_dim,
            road_dim=meta.road_dim,
            edge_dims=meta.edge_dims,
            embedding_dim=meta.embedding_dim,
        )
        if state is not None:
            encoder.load_state_dict(state)
        return encoder

    @staticmethod
    def load_encoder(path: Path, settings: PipelineSettings) -> Tuple[CheckpointMeta, HeteroEncoder, str]:
        """Online encoder in eval mode, its meta, and the checkpoint digest."""
        meta, states = CheckpointService.load(path)
        CheckpointService.check_compatible(meta, settings)
        encoder = CheckpointService.build_encoder(meta, states["encoder"])
        encoder.eval()
        return meta, encoder, state_digest(meta, states)

    @staticmethod
    def load_classifier(path: Path, settings: PipelineSettings) -> Tuple[CheckpointMeta, Classifier]:
        meta, states = CheckpointService.load(path)
        vocabulary = settings.labels.vocabulary
        CheckpointService.check_compatible(meta, settings, vocabulary)
        classifier = Classifier(meta.embedding_dim, settings.classifier.hidden_dim, len(vocabulary))
        classifier.load_state_dict(states["classifier"])
        classifier.eval()
        return meta, classifier
