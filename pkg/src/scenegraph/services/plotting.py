"""2-D PCA scatter of an embedding store, coloured by cluster or by label set."""

import io
from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from sklearn.decomposition import PCA  # noqa: E402

from ..exceptions import ConfigError, InsufficientDataError  # noqa: E402
from ..utils import atomic_write_bytes, get_logger  # noqa: E402
from .embedding_store import EmbeddingSet  # noqa: E402

logger = get_logger(__name__)

FORMATS = ("svg", "png")


def pca_project(embeddings: EmbeddingSet, seed: int = 0) -> np.ndarray:
    if len(embeddings) < 2:
        raise InsufficientDataError("PCA projection needs at least 2 embeddings")
    return PCA(n_components=2, random_state=seed).fit_transform(embeddings.vectors.astype(np.float64))


def _groups(embeddings: EmbeddingSet, assignment: Optional[Sequence[int]]) -> np.ndarray:
    if assignment is not None:
        return np.array(["noise" if a < 0 else f"cluster {a}" for a in assignment])
    if embeddings.label_sets is not None:
        return np.array(["+".join(sorted(s)) or "unlabeled" for s in embeddings.label_sets])
    return np.array(["all"] * len(embeddings))


def plot_embeddings(
    embeddings: EmbeddingSet,
    path: Path,
    assignment: Optional[Sequence[int]] = None,
    title: str = "",
    seed: int = 0,
) -> Path:
    """
    Write the scatter to ``path`` (.svg or .png).

    Raises:
        ConfigError: If the file extension is not a supported format
    """
    path = Path(path)
    fmt = path.suffix.lstrip(".").lower()
    if fmt not in FORMATS:
        raise ConfigError(f"Unsupported plot format '{path.suffix}', use one of {list(FORMATS)}")

    coords = pca_project(embeddings, seed)
    groups = _groups(embeddings, assignment)
    names = sorted(set(groups.tolist()), key=lambda g: (g == "noise", g))
    cmap = plt.get_cmap("tab10" if len(names) <= 10 else "tab20")

    fig, ax = plt.subplots(1, 1, figsize=(10, 8))
    try:
        for k, name in enumerate(names):
            mask = groups == name
            color = "lightgrey" if name == "noise" else cmap(k % cmap.N)
            ax.scatter(coords[mask, 0], coords[mask, 1], c=[color], s=12, alpha=0.7, label=f"{name} ({mask.sum()})")
        ax.set_xlabel("PC 1")
        ax.set_ylabel("PC 2")
        ax.set_title(title or f"{len(embeddings)} scenarios")
        ax.legend(bbox_to_anchor=(1.05, 1), loc="upper left", fontsize=8)
        ax.grid(True, alpha=0.3)
        fig.tight_layout()

        buffer = io.BytesIO()
        # Fixed metadata keeps output identical across runs
        metadata = {"Date": None} if fmt == "svg" else {"Software": None}
        fig.savefig(buffer, format=fmt, dpi=150, bbox_inches="tight", metadata=metadata)
    finally:
        plt.close(fig)

    atomic_write_bytes(path, buffer.getvalue())
    logger.info(f"Wrote embedding scatter to {path}")
    return path
