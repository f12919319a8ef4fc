import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError

from ..exceptions import InsufficientDataError, ScenarioParseError, ScenarioValidationError
from ..schemas.scenario import STATE_FIELDS, Scenario
from ..utils import atomic_write_bytes, atomic_write_text, get_logger

logger = get_logger(__name__)

BINARY_MAGIC = b"SCNB"
BINARY_VERSION = 1


@dataclass(frozen=True)
class EgoSignature:
    """Summary statistics of the ego trajectory used to tell scenario families apart."""

    heading_change: float
    initial_speed: float
    terminal_speed: float
    mean_speed: float
    lateral_displacement: float
    mean_abs_curvature: float


def _validation_error(e: ValidationError, raw: dict, line: Optional[int] = None) -> ScenarioValidationError:
    err = e.errors()[0]
    field = ".".join(str(p) for p in err["loc"]) or err.get("ctx", {}).get("field", "<scenario>")
    reason = err.get("ctx", {}).get("reason", err["msg"])
    scenario_id = raw.get("scenario_id") if isinstance(raw, dict) else None
    return ScenarioValidationError(scenario_id, field, str(reason), line=line)


class ScenarioService:
    """Reading, writing and partitioning scenario files."""

    @staticmethod
    def parse_scenario(raw: dict, vocab: Optional[Sequence[str]] = None, line: Optional[int] = None) -> Scenario:
        """
        Validate one decoded scenario object.

        Raises:
            ScenarioValidationError: Naming scenario_id and the offending field
        """
        try:
            return Scenario.model_validate(raw, context={"vocab": list(vocab) if vocab is not None else None})
        except ValidationError as e:
            raise _validation_error(e, raw, line) from e

    @staticmethod
    def load_scenarios(path: Path, vocab: Optional[Sequence[str]] = None) -> List[Scenario]:
        """
        Load and validate a Scenario JSONL file.

        Args:
            path: JSONL file, one scenario object per line
            vocab: Label vocabulary labels must be drawn from (None skips the check)

        Returns:
            Validated scenarios in file order

        Raises:
            ScenarioParseError: Malformed JSON (with line number)
            ScenarioValidationError: Invariant violation (scenario_id and field)
        """
        path = Path(path)
        scenarios: List[Scenario] = []
        with open(path, "r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    raw = json.loads(line)
                except json.JSONDecodeError as e:
                    raise ScenarioParseError(str(path), line_no, e.msg) from e
                if not isinstance(raw, dict):
                    raise ScenarioParseError(str(path), line_no, "expected a JSON object")
                scenarios.append(ScenarioService.parse_scenario(raw, vocab, line_no))

        logger.debug(f"Loaded {len(scenarios)} scenarios from {path}")
        return scenarios

    @staticmethod
    def dumps(scenarios: Sequence[Scenario]) -> str:
        return "".join(s.model_dump_json() + "\n" for s in scenarios)

    @staticmethod
    def write_scenarios(path: Path, scenarios: Sequence[Scenario]) -> None:
        atomic_write_text(Path(path), ScenarioService.dumps(scenarios))
        logger.info(f"Wrote {len(scenarios)} scenarios to {path}")

    @staticmethod
    def write_scenarios_binary(path: Path, scenarios: Sequence[Scenario]) -> None:
        """
        Binary variant: ``SCNB`` magic, uint32 version, uint32 count, then per scenario a
        uint32-length-prefixed JSON header (states replaced by their counts) followed by all
        obstacle state rows as little-endian float64 ``[t, x, y, heading, vx, vy, length, width]``.
        """
        chunks = [BINARY_MAGIC, np.array([BINARY_VERSION, len(scenarios)], dtype="<u4").tobytes()]
        for s in scenarios:
            header = s.model_dump(mode="json")
            rows = []
            for obstacle in header["obstacles"]:
                rows.extend(obstacle["states"])
                obstacle["states"] = len(obstacle["states"])
            header_bytes = json.dumps(header, separators=(",", ":")).encode("utf-8")
            chunks.append(np.array([len(header_bytes)], dtype="<u4").tobytes())
            chunks.append(header_bytes)
            chunks.append(np.asarray(rows, dtype="<f8").reshape(-1, len(STATE_FIELDS)).tobytes())
        atomic_write_bytes(Path(path), b"".join(chunks))

    @staticmethod
    def load_scenarios_binary(path: Path, vocab: Optional[Sequence[str]] = None) -> List[Scenario]:
        blob = Path(path).read_bytes()
        if blob[:4] != BINARY_MAGIC:
            raise ScenarioParseError(str(path), 0, "not a binary scenario file")
        version, count = np.frombuffer(blob, dtype="<u4", count=2, offset=4)
        if version != BINARY_VERSION:
            raise ScenarioParseError(str(path), 0, f"unsupported binary version {version}")

        offset = 12
        scenarios: List[Scenario] = []
        for index in range(int(count)):
            (header_len,) = np.frombuffer(blob, dtype="<u4", count=1, offset=offset)
            offset += 4
            header = json.loads(blob[offset: offset + int(header_len)])
            offset += int(header_len)
            for obstacle in header["obstacles"]:
                n = int(obstacle["states"])
                rows = np.frombuffer(blob, dtype="<f8", count=n * len(STATE_FIELDS), offset=offset)
                offset += rows.nbytes
                obstacle["states"] = [[int(r[0]), *map(float, r[1:])] for r in rows.reshape(n, -1)]
            scenarios.append(ScenarioService.parse_scenario(header, vocab, index + 1))
        return scenarios

    @staticmethod
    def split(
        scenarios: Sequence[Scenario], train_ratio: float, seed: int
    ) -> Tuple[List[Scenario], List[Scenario]]:
        """
        Deterministic shuffled train/test partition of sizes floor(N * ratio) / remainder.
        """
        if not 0 < train_ratio < 1:
            raise InsufficientDataError(f"train_ratio must be in (0, 1), got {train_ratio}")
        order = np.random.default_rng(seed).permutation(len(scenarios))
        n_train = int(math.floor(len(scenarios) * train_ratio + 1e-9))
        train = [scenarios[i] for i in order[:n_train]]
        test = [scenarios[i] for i in order[n_train:]]
        return train, test

    @staticmethod
    def ego_signature(scenario: Scenario) -> EgoSignature:
        ego = scenario.ego
        if ego is None:
            raise InsufficientDataError(f"Scenario '{scenario.scenario_id}' has no ego obstacle")

        xy = np.array([[s.x, s.y] for s in ego.states])
        heading = np.unwrap(np.array([s.heading for s in ego.states]))
        speed = np.array([s.speed for s in ego.states])

        dh = np.diff(heading)
        ds = np.linalg.norm(np.diff(xy, axis=0), axis=1)
        moving = ds > 1e-3
        curvature = float(np.mean(np.abs(dh[moving]) / ds[moving])) if moving.any() else 0.0

        h0 = heading[0]
        rel = xy[-1] - xy[0]
        lateral = float(-math.sin(h0) * rel[0] + math.cos(h0) * rel[1])

        return EgoSignature(
            heading_change=float(heading[-1] - heading[0]),
            initial_speed=float(speed[0]),
            terminal_speed=float(speed[-1]),
            mean_speed=float(speed.mean()),
            lateral_displacement=lateral,
            mean_abs_curvature=curvature,
        )
