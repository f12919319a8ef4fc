from typing import TYPE_CHECKING, Any, Dict, Optional, Sequence

if TYPE_CHECKING:
    from scenegraph.schemas.error import ErrorResponse


class ScenegraphError(Exception):
    code: str = "error"
    exit_code: int = 1

    def __init__(self, detail: str, **context: Any):
        self.detail = detail
        self.context: Dict[str, Any] = {k: v for k, v in context.items() if v is not None}
        super().__init__(detail)

    def to_error_response(self) -> "ErrorResponse":
        from scenegraph.schemas.error import ErrorResponse

        return ErrorResponse(
            error=self.code,
            detail=self.detail,
            exit_code=self.exit_code,
            context=self.context,
        )


class ScenarioParseError(ScenegraphError):
    code = "scenario_parse_error"
    exit_code = 3

    def __init__(self, path: str, line: int, reason: str):
        super().__init__(f"{path}:{line}: {reason}", path=path, line=line)
        self.line = line


class ScenarioValidationError(ScenegraphError):
    code = "scenario_invalid"
    exit_code = 3

    def __init__(self, scenario_id: Optional[str], field: str, reason: str, line: Optional[int] = None):
        super().__init__(
            f"Scenario '{scenario_id}' field '{field}': {reason}",
            scenario_id=scenario_id,
            field=field,
            line=line,
        )
        self.scenario_id = scenario_id
        self.field = field


class UnknownFamilyError(ScenegraphError):
    code = "unknown_family"
    exit_code = 2

    def __init__(self, family: str, allowed: Sequence[str]):
        super().__init__(f"Unknown scenario family '{family}'; allowed: {list(allowed)}", family=family)


class GraphBuildError(ScenegraphError):
    code = "graph_build_error"
    exit_code = 3

    def __init__(self, scenario_id: str, reason: str):
        super().__init__(f"Cannot build graph for '{scenario_id}': {reason}", scenario_id=scenario_id)


class ShapeMismatchError(ScenegraphError):
    code = "shape_mismatch"

    def __init__(self, what: str, expected: Any, actual: Any):
        super().__init__(f"{what}: expected shape {expected}, got {actual}")


class DegenerateEmbeddingError(ScenegraphError):
    code = "degenerate_embedding"

    def __init__(self, detail: str = "Zero-norm embedding encountered (representation collapse)"):
        super().__init__(detail)


class NonFiniteLossError(ScenegraphError):
    code = "non_finite_loss"

    def __init__(self, step: int, batch_ids: Sequence[str], value: float):
        super().__init__(
            f"Non-finite loss {value} at step {step}",
            step=step,
            batch_ids=list(batch_ids),
        )
        self.step = step
        self.batch_ids = list(batch_ids)


class InsufficientDataError(ScenegraphError):
    code = "insufficient_data"
    exit_code = 2


class EmptyVocabularyError(ScenegraphError):
    code = "empty_vocabulary"
    exit_code = 2

    def __init__(self) -> None:
        super().__init__("Label vocabulary is empty")


class DegenerateClusteringError(ScenegraphError):
    code = "degenerate_clustering"


class ClusterMembershipError(ScenegraphError):
    code = "empty_cluster"

    def __init__(self, cluster: int):
        super().__init__(f"Cluster {cluster} has no members", cluster=cluster)


class LengthMismatchError(ScenegraphError):
    code = "length_mismatch"

    def __init__(self, left: int, right: int):
        super().__init__(f"Length mismatch: {left} != {right}")


class EmptyStoreError(ScenegraphError):
    code = "empty_store"
    exit_code = 2

    def __init__(self) -> None:
        super().__init__("Embedding store is empty")


class ConfigError(ScenegraphError):
    code = "config_error"
    exit_code = 2


class MissingArtifactError(ScenegraphError):
    code = "missing_artifact"
    exit_code = 4

    def __init__(self, kind: str, path: str, hint: Optional[str] = None):
        message = f"{kind} not found at '{path}'"
        if hint:
            message = f"{message} ({hint})"
        super().__init__(message, path=path)


class ArtifactMismatchError(ScenegraphError):
    code = "artifact_mismatch"
    exit_code = 4


class LockError(ScenegraphError):
    code = "locked"
    exit_code = 5

    def __init__(self, path: str):
        super().__init__(f"Output directory is locked by another command ({path})", path=path)
