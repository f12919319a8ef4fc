"""
Evaluation of trained embeddings.

* embedding validity: a graph must sit closer to its own augmented view than to another graph
* downstream multi-label classifier with contain (superset) accuracy and per-sample AUPRC
* HDBSCAN clustering with primary labels, multilabel accuracy and silhouette on clustered points
* exact cosine k-nearest-neighbour queries over an embedding store
"""

from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, List, Optional, Sequence, Tuple, Union

import hdbscan
import numpy as np
import torch
from sklearn.metrics import average_precision_score, silhouette_score
from torch import nn

from ..config import ClassifierConfig, PipelineSettings
from ..exceptions import (
    ClusterMembershipError,
    DegenerateClusteringError,
    EmptyStoreError,
    EmptyVocabularyError,
    InsufficientDataError,
    LengthMismatchError,
    ShapeMismatchError,
)
from ..models import Classifier, HeteroEncoder, encode_graphs
from ..schemas.report import (
    ClassifierMetrics,
    ClusterReport,
    ClusterSummary,
    EvaluationReport,
    SweepRow,
    ValidityReport,
)
from ..utils import get_logger
from .augment import GraphAugmentor
from .embedding_store import EmbeddingSet
from .graph_builder import HeteroGraph
from .training import make_batches

logger = get_logger(__name__)

NOISE = -1
LabelSets = Sequence[FrozenSet[str]]
Embedder = Callable[[Sequence[HeteroGraph]], np.ndarray]


def _unit_rows(x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    return np.divide(x, norms, out=np.zeros_like(x), where=norms > 0)


def cosine_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise 1 - cos(a_i, b_i)."""
    return 1.0 - np.sum(_unit_rows(a) * _unit_rows(b), axis=1)


def _embedder(encoder: Union[HeteroEncoder, Embedder]) -> Embedder:
    if isinstance(encoder, nn.Module):
        return lambda graphs: encode_graphs(graphs, encoder)
    return encoder


# ---------------------------------------------------------------------------
# Embedding validity
# ---------------------------------------------------------------------------


def embedding_validity_rate(
    graphs: Sequence[HeteroGraph],
    encoder: Union[HeteroEncoder, Embedder],
    augmentor: Optional[GraphAugmentor],
    trials: int,
    rng: np.random.Generator,
) -> float:
    """
    Fraction of trials where d(G1, view(G1)) < d(G1, G2) in cosine distance.

    G1 is drawn uniformly, G2 uniformly among the other graphs. With ``augmentor=None`` the
    view is G1 itself. The inequality is strict, so a constant encoder scores 0.

    Raises:
        InsufficientDataError: Fewer than two graphs
    """
    n = len(graphs)
    if n < 2:
        raise InsufficientDataError(f"Embedding validity needs at least 2 graphs, got {n}")
    if trials <= 0:
        raise InsufficientDataError("Embedding validity needs at least one trial")

    embed = _embedder(encoder)
    base = np.asarray(embed(list(graphs)), dtype=np.float64)

    first = rng.integers(n, size=trials)
    second = rng.integers(n - 1, size=trials)
    second = second + (second >= first)

    if augmentor is None:
        views = base[first]
    else:
        views = np.asarray(embed([augmentor.sample_view(graphs[i], rng) for i in first]), dtype=np.float64)

    d_view = cosine_distance(base[first], views)
    d_other = cosine_distance(base[first], base[second])
    rate = float(np.mean(d_view < d_other))
    logger.debug(f"Embedding validity over {trials} trials: {rate:.4f}")
    return rate


# ---------------------------------------------------------------------------
# Downstream multi-label classifier
# ---------------------------------------------------------------------------


@dataclass
class ClassifierResult:
    classifier: Classifier
    vocabulary: List[str]
    epoch_losses: List[float] = field(default_factory=list)


def multi_hot(label_sets: LabelSets, vocabulary: Sequence[str]) -> np.ndarray:
    index = {label: k for k, label in enumerate(vocabulary)}
    y = np.zeros((len(label_sets), len(vocabulary)), dtype=np.float32)
    for row, labels in enumerate(label_sets):
        for label in labels:
            if label in index:
                y[row, index[label]] = 1.0
    return y


def train_classifier(
    train: EmbeddingSet,
    vocabulary: Sequence[str],
    config: Optional[ClassifierConfig] = None,
    seed: int = 0,
    label_sets: Optional[LabelSets] = None,
) -> ClassifierResult:
    """
    Fit dim -> hidden -> PReLU -> |vocabulary| logits with per-label binary cross-entropy.

    ``label_sets`` overrides the set's own labels (used by the shuffled-label control).

    Raises:
        EmptyVocabularyError: If ``vocabulary`` is empty
        InsufficientDataError: If there are no labeled embeddings
    """
    config = config or ClassifierConfig()
    if not vocabulary:
        raise EmptyVocabularyError()
    label_sets = label_sets if label_sets is not None else train.label_sets
    if label_sets is None or len(train) == 0:
        raise InsufficientDataError("Classifier training needs labeled embeddings")
    if len(label_sets) != len(train):
        raise LengthMismatchError(len(train), len(label_sets))

    torch.manual_seed(seed)
    classifier = Classifier(train.dim, config.hidden_dim, len(vocabulary))
    optimizer = torch.optim.AdamW(classifier.parameters(), lr=config.learning_rate, weight_decay=config.weight_decay)
    criterion = nn.BCEWithLogitsLoss()
    x = torch.from_numpy(train.vectors.astype(np.float32))
    y = torch.from_numpy(multi_hot(label_sets, vocabulary))

    result = ClassifierResult(classifier, list(vocabulary))
    classifier.train()
    for epoch in range(config.epochs):
        losses = []
        for index in make_batches(len(train), config.batch_size, np.random.default_rng([seed, epoch])):
            index = torch.from_numpy(index)
            optimizer.zero_grad()
            loss = criterion(classifier(x[index]), y[index])
            loss.backward()
            optimizer.step()
            losses.append(float(loss.detach()) * len(index))
        result.epoch_losses.append(sum(losses) / len(train))
    classifier.eval()
    logger.debug(f"Classifier trained for {config.epochs} epochs, final loss {result.epoch_losses[-1]:.5f}")
    return result


@torch.no_grad()
def predict_scores(classifier: Classifier, embeddings: Union[EmbeddingSet, np.ndarray]) -> np.ndarray:
    """Per-label sigmoid probabilities, one row per embedding."""
    vectors = embeddings.vectors if isinstance(embeddings, EmbeddingSet) else np.asarray(embeddings)
    was_training = classifier.training
    classifier.eval()
    try:
        logits = classifier(torch.from_numpy(vectors.astype(np.float32)))
    finally:
        classifier.train(was_training)
    return torch.sigmoid(logits).double().numpy()


def predict_label_sets(scores: np.ndarray, vocabulary: Sequence[str], threshold: float = 0.5) -> List[FrozenSet[str]]:
    if scores.ndim != 2 or scores.shape[1] != len(vocabulary):
        raise ShapeMismatchError("score matrix", ("N", len(vocabulary)), scores.shape)
    return [frozenset(vocabulary[k] for k in np.flatnonzero(row > threshold)) for row in scores]


def contain_accuracy(predicted: LabelSets, truth: LabelSets) -> float:
    """Share of samples whose predicted set is a superset of the true set."""
    if len(predicted) != len(truth):
        raise LengthMismatchError(len(predicted), len(truth))
    if not predicted:
        raise InsufficientDataError("Contain accuracy over zero samples")
    return float(np.mean([set(p) >= set(t) for p, t in zip(predicted, truth)]))


def sample_auprc(scores: np.ndarray, truth: LabelSets, vocabulary: Sequence[str]) -> float:
    """
    Mean over samples of the average precision of each row's label ranking.
    Samples with an empty true set are skipped.

    Raises:
        InsufficientDataError: If every true set is empty
    """
    if len(scores) != len(truth):
        raise LengthMismatchError(len(scores), len(truth))
    y = multi_hot(truth, vocabulary)
    rows = np.flatnonzero(y.sum(axis=1) > 0)
    if len(rows) == 0:
        raise InsufficientDataError("Sample AUPRC is undefined when every true label set is empty")
    return float(np.mean([average_precision_score(y[i], scores[i]) for i in rows]))


def evaluate_classifier(
    result: ClassifierResult, embeddings: EmbeddingSet, threshold: float = 0.5
) -> ClassifierMetrics:
    if embeddings.label_sets is None:
        raise InsufficientDataError("Classifier evaluation needs labeled embeddings")
    scores = predict_scores(result.classifier, embeddings)
    predicted = predict_label_sets(scores, result.vocabulary, threshold)
    try:
        auprc = sample_auprc(scores, embeddings.label_sets, result.vocabulary)
    except InsufficientDataError:
        auprc = None
    return ClassifierMetrics(
        contain_accuracy=contain_accuracy(predicted, embeddings.label_sets),
        sample_auprc=auprc,
        threshold=threshold,
        n_samples=len(embeddings),
    )


def majority_label_set(label_sets: LabelSets) -> FrozenSet[str]:
    """Most frequent label set; ties go to the lexicographically smallest sorted tuple."""
    if not label_sets:
        raise InsufficientDataError("Majority baseline needs at least one training sample")
    counts = Counter(frozenset(s) for s in label_sets)
    return min(counts, key=lambda s: (-counts[s], tuple(sorted(s))))


def majority_baseline(train_sets: LabelSets, test_sets: LabelSets) -> float:
    majority = majority_label_set(train_sets)
    return contain_accuracy([majority] * len(test_sets), test_sets)


# ---------------------------------------------------------------------------
# Clustering
# ---------------------------------------------------------------------------


def run_hdbscan(vectors: np.ndarray, mcs: int) -> np.ndarray:
    """
    HDBSCAN labels (-1 = noise) with default parameters apart from ``min_cluster_size``.

    Raises:
        InsufficientDataError: If N < mcs or mcs < 2
    """
    n = len(vectors)
    if mcs < 2:
        raise InsufficientDataError(f"min_cluster_size must be >= 2, got {mcs}")
    if n < mcs:
        raise InsufficientDataError(f"Cannot cluster {n} embeddings with min_cluster_size={mcs}")
    vectors = np.asarray(vectors, dtype=np.float64)
    if np.all(vectors == vectors[0]):
        return np.zeros(n, dtype=np.int64)
    return hdbscan.HDBSCAN(min_cluster_size=mcs).fit_predict(vectors).astype(np.int64)


def primary_labels(assignment: np.ndarray, label_sets: LabelSets) -> Dict[int, Optional[str]]:
    """Most frequent label over each cluster's members; ties broken by label order."""
    if len(assignment) != len(label_sets):
        raise LengthMismatchError(len(assignment), len(label_sets))
    primaries = {}
    for c in sorted(set(int(a) for a in assignment) - {NOISE}):
        counts = Counter(label for i in np.flatnonzero(assignment == c) for label in label_sets[i])
        primaries[c] = min(counts, key=lambda label: (-counts[label], label)) if counts else None
    return primaries


def multilabel_acc(
    assignment: np.ndarray, label_sets: LabelSets, primaries: Dict[int, Optional[str]]
) -> float:
    """
    Share of clustered samples whose label set contains their cluster's primary label.

    Raises:
        ClusterMembershipError: If a cluster in ``primaries`` has no members
        DegenerateClusteringError: If no sample is clustered
    """
    assignment = np.asarray(assignment)
    if len(assignment) != len(label_sets):
        raise LengthMismatchError(len(assignment), len(label_sets))
    for c in primaries:
        if not np.any(assignment == c):
            raise ClusterMembershipError(c)
    clustered = np.flatnonzero(assignment != NOISE)
    if len(clustered) == 0:
        raise DegenerateClusteringError("No sample was assigned to a cluster")
    hits = [primaries.get(int(assignment[i])) in label_sets[i] for i in clustered]
    return float(np.mean(hits))


def silhouette_clustered(vectors: np.ndarray, assignment: np.ndarray) -> float:
    """
    Mean Euclidean silhouette over clustered samples only.

    Raises:
        DegenerateClusteringError: Fewer than two clusters among clustered samples
    """
    assignment = np.asarray(assignment)
    mask = assignment != NOISE
    labels = assignment[mask]
    n_clusters = len(np.unique(labels))
    if n_clusters < 2:
        raise DegenerateClusteringError(f"Silhouette needs at least 2 clusters, got {n_clusters}")
    if n_clusters >= mask.sum():
        raise DegenerateClusteringError("Silhouette needs a cluster with at least 2 members")
    return float(silhouette_score(np.asarray(vectors, dtype=np.float64)[mask], labels, metric="euclidean"))


def representatives(embeddings: EmbeddingSet, assignment: np.ndarray, cluster_id: int, k: int) -> List[str]:
    """Up to ``k`` member ids nearest to the cluster centroid (ties by id)."""
    members = np.flatnonzero(assignment == cluster_id)
    vectors = embeddings.vectors[members].astype(np.float64)
    dist = np.linalg.norm(vectors - vectors.mean(axis=0), axis=1)
    order = np.lexsort((embeddings.ids[members], dist))
    return embeddings.ids[members][order][:k].tolist()


def cluster(
    embeddings: EmbeddingSet,
    mcs: int,
    label_sets: Optional[LabelSets] = None,
    n_representatives: int = 5,
) -> ClusterReport:
    """Cluster ``embeddings`` and fill in every metric the labels allow."""
    label_sets = label_sets if label_sets is not None else embeddings.label_sets
    assignment = run_hdbscan(embeddings.vectors, mcs)
    cluster_ids = sorted(set(assignment.tolist()) - {NOISE})
    primaries = primary_labels(assignment, label_sets) if label_sets is not None else {}

    accuracy = None
    if label_sets is not None and cluster_ids:
        accuracy = multilabel_acc(assignment, label_sets, primaries)
    try:
        silhouette, status = silhouette_clustered(embeddings.vectors, assignment), "ok"
    except DegenerateClusteringError as e:
        logger.debug(f"mcs={mcs}: {e.detail}")
        silhouette, status = None, "undefined"

    summaries = [
        ClusterSummary(
            cluster=c,
            size=int(np.sum(assignment == c)),
            primary_label=primaries.get(c),
            representatives=representatives(embeddings, assignment, c, n_representatives),
        )
        for c in cluster_ids
    ]
    report = ClusterReport(
        mcs=mcs,
        ids=embeddings.ids.tolist(),
        assignment=assignment.tolist(),
        num_clusters=len(cluster_ids),
        unclustered_ratio=float(np.mean(assignment == NOISE)),
        clusters=summaries,
        multilabel_acc=accuracy,
        silhouette=silhouette,
        silhouette_status=status,
    )
    logger.info(
        f"mcs={mcs}: {report.num_clusters} clusters, {report.unclustered_ratio:.1%} unclustered"
        + (f", accuracy {accuracy:.3f}" if accuracy is not None else "")
    )
    return report


def sweep(
    embeddings: EmbeddingSet,
    mcs_values: Sequence[int],
    label_sets: Optional[LabelSets] = None,
    n_representatives: int = 5,
) -> List[ClusterReport]:
    """One report per feasible mcs (values above N are skipped with a warning)."""
    feasible = sorted(set(m for m in mcs_values if m <= len(embeddings)))
    for m in sorted(set(mcs_values) - set(feasible)):
        logger.warning(f"Skipping min_cluster_size={m}: only {len(embeddings)} embeddings")
    if not feasible:
        raise InsufficientDataError(f"No min_cluster_size in {list(mcs_values)} fits {len(embeddings)} embeddings")
    return [cluster(embeddings, m, label_sets, n_representatives) for m in feasible]


def sweep_rows(reports: Sequence[ClusterReport]) -> List[SweepRow]:
    return [
        SweepRow(
            mcs=r.mcs,
            num_clusters=r.num_clusters,
            unclustered_ratio=r.unclustered_ratio,
            multilabel_acc=r.multilabel_acc,
            silhouette=r.silhouette,
            silhouette_status=r.silhouette_status,
        )
        for r in reports
    ]


def best_mcs(reports: Sequence[ClusterReport]) -> Optional[int]:
    scored = [r for r in reports if r.multilabel_acc is not None]
    if not scored:
        return None
    return min(scored, key=lambda r: (-r.multilabel_acc, r.mcs)).mcs


# ---------------------------------------------------------------------------
# Similarity search
# ---------------------------------------------------------------------------


def knn_query(store: EmbeddingSet, query: np.ndarray, k: int) -> List[Tuple[str, float]]:
    """
    Exact ``k`` nearest ids by cosine distance, ascending, ties broken by id.

    Raises:
        EmptyStoreError: If the store holds no embeddings
    """
    if len(store) == 0:
        raise EmptyStoreError()
    if not 1 <= k <= len(store):
        raise InsufficientDataError(f"k must be in [1, {len(store)}], got {k}")
    query = np.asarray(query, dtype=np.float64).reshape(-1)
    if query.shape[0] != store.dim:
        raise ShapeMismatchError("query vector", store.dim, query.shape[0])

    similarity = _unit_rows(store.vectors) @ _unit_rows(query)[0]
    distance = np.clip(1.0 - similarity, 0.0, 2.0)
    order = np.lexsort((store.ids, distance))[:k]
    return [(str(store.ids[i]), float(distance[i])) for i in order]


# ---------------------------------------------------------------------------
# Full evaluation
# ---------------------------------------------------------------------------


@dataclass
class EvaluationOutcome:
    report: EvaluationReport
    cluster_reports: List[ClusterReport]
    classifier: ClassifierResult


class Evaluator:
    """Runs every evaluation for one trained encoder; sub-seeds derive from the global seed."""

    def __init__(self, settings: PipelineSettings, model_kind: str):
        self.settings = settings
        self.model_kind = model_kind

    def validity(self, graphs: Sequence[HeteroGraph], encoder: HeteroEncoder) -> ValidityReport:
        s = self.settings
        trials = s.evaluation.validity_trials
        augmentor = GraphAugmentor(s.augment, s.builder)
        seed = s.derive_seed("validity")
        rate = embedding_validity_rate(graphs, encoder, augmentor, trials, np.random.default_rng(seed))

        # Same draws against an untrained encoder of the same shape
        torch.manual_seed(s.derive_seed("random_encoder"))
        untrained = HeteroEncoder(**encoder.hparams)
        untrained.eval()
        baseline = embedding_validity_rate(graphs, untrained, augmentor, trials, np.random.default_rng(seed))
        logger.info(f"Embedding validity {rate:.4f} (untrained encoder {baseline:.4f})")
        return ValidityReport(rate=rate, trials=trials, random_encoder_rate=baseline)

    def shuffled_control(self, train: EmbeddingSet, test: EmbeddingSet) -> ClassifierMetrics:
        s = self.settings
        perm = np.random.default_rng(s.derive_seed("shuffle")).permutation(len(train))
        shuffled = [train.label_sets[i] for i in perm]
        result = train_classifier(train, s.labels.vocabulary, s.classifier, s.derive_seed("classifier"), shuffled)
        return evaluate_classifier(result, test, s.classifier.threshold)

    def run(
        self,
        encoder: HeteroEncoder,
        test_graphs: Sequence[HeteroGraph],
        embeddings: EmbeddingSet,
        train_ids: Sequence[str],
        test_ids: Sequence[str],
        holdout: Optional[EmbeddingSet] = None,
        mcs_values: Optional[Sequence[int]] = None,
    ) -> EvaluationOutcome:
        s = self.settings
        train, test = embeddings.select_ids(train_ids), embeddings.select_ids(test_ids)

        validity = self.validity(test_graphs, encoder)
        result = train_classifier(train, s.labels.vocabulary, s.classifier, s.derive_seed("classifier"))
        metrics = evaluate_classifier(result, test, s.classifier.threshold)
        logger.info(f"Classifier contain accuracy {metrics.contain_accuracy:.3f}")

        reports = sweep(
            embeddings,
            mcs_values or s.evaluation.mcs_values,
            n_representatives=s.evaluation.representatives_per_cluster,
        )
        report = EvaluationReport(
            model_kind=self.model_kind,
            seed=s.seed,
            validity=validity,
            classifier=metrics,
            majority_baseline=majority_baseline(train.label_sets, test.label_sets),
            shuffled_control=self.shuffled_control(train, test),
            holdout=evaluate_classifier(result, holdout, s.classifier.threshold) if holdout is not None else None,
            sweep=sweep_rows(reports),
            best_mcs=best_mcs(reports),
        )
        return EvaluationOutcome(report, reports, result)
