"""Online ID assignment with an embedding memory.

Per frame:
1. Drop detections scoring below the objectness threshold.
2. Score every detection against every remembered instance: the highest
   cosine similarity over that instance's stored embeddings.
3. Append one new-instance column per detection, valued at the tracking
   threshold and forbidden for every other row.
4. Maximize the summed score with the Hungarian solver. Rows won by an
   instance column inherit its id; rows won by their new-instance column
   get a fresh id.
5. Push the frame's (id, embedding) pairs as one bucket; the oldest bucket
   falls out once more than T are held.
"""

import logging
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from ..models.tracking import Detection, TrackedObject, TrackerConfig, TrackFrame, TrackOutput
from .assignment import FORBIDDEN, AssignmentMode, CostMatrix, solve_assignment
from .geometry import normalize_rows

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MemoryBucket:
    """The tracked embeddings of one past frame."""

    frame: int
    instance_ids: np.ndarray
    embeddings: np.ndarray  # unit rows


class MemoryQueue:
    """FIFO of per-frame embedding buckets, at most ``memory_length`` long.

    Also owns the id counter, which only ever grows.
    """

    def __init__(
        self,
        memory_length: int,
        next_id: int = 1,
        buckets: Iterable[MemoryBucket] = (),
        last_frame: int = 0,
        dim: Optional[int] = None,
    ) -> None:
        if memory_length < 1:
            raise ValueError("memory_length must be at least 1")
        self.memory_length = memory_length
        self.next_id = next_id
        self.last_frame = last_frame
        self.dim = dim
        self._buckets: deque[MemoryBucket] = deque(buckets)
        self._ids: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self._buckets)

    @property
    def buckets(self) -> tuple[MemoryBucket, ...]:
        return tuple(self._buckets)

    def copy(self) -> "MemoryQueue":
        clone = MemoryQueue(self.memory_length, self.next_id, self._buckets, self.last_frame, self.dim)
        clone._ids = self._ids
        return clone

    def allocate_id(self) -> int:
        new_id = self.next_id
        self.next_id += 1
        return new_id

    def push(self, frame: int, instance_ids: Sequence[int], embeddings: np.ndarray) -> None:
        """Append a bucket for ``frame``, evicting the oldest beyond the limit."""
        ids = np.asarray(instance_ids, dtype=np.int64)
        if len(set(ids.tolist())) != ids.size:
            raise ValueError(f"duplicate instance ids in frame {frame}")
        if ids.size:
            embeddings = normalize_rows(embeddings)
            if self.dim is None:
                self.dim = embeddings.shape[1]
            elif embeddings.shape[1] != self.dim:
                raise ValueError(f"embedding dimension {embeddings.shape[1]} != memory dimension {self.dim}")
        else:
            embeddings = np.zeros((0, self.dim or 0))
        self._buckets.append(MemoryBucket(frame, ids, embeddings))
        while len(self._buckets) > self.memory_length:
            evicted = self._buckets.popleft()
            logger.debug(f"Evicted memory bucket of frame {evicted.frame}")
        self.last_frame = frame
        self._ids = None

    def id_array(self) -> np.ndarray:
        """Remembered ids, ascending and unique; the column order of the similarity matrix."""
        if self._ids is None:
            filled = [b.instance_ids for b in self._buckets if b.instance_ids.size]
            self._ids = np.unique(np.concatenate(filled)) if filled else np.zeros(0, dtype=np.int64)
        return self._ids

    def instance_ids(self) -> list[int]:
        return self.id_array().tolist()

    def best_similarity(self, queries: np.ndarray) -> np.ndarray:
        """K x J: per query row, the highest cosine over each instance's stored embeddings.

        ``queries`` must be unit rows. Relies on ids being unique within a bucket.
        """
        ids = self.id_array()
        best = np.full((ids.size, len(queries)), -np.inf)
        for bucket in self._buckets:
            if bucket.instance_ids.size:
                rows = np.searchsorted(ids, bucket.instance_ids)
                best[rows] = np.maximum(best[rows], bucket.embeddings @ queries.T)
        return np.clip(best.T, -1.0, 1.0)


def _query_matrix(detections: Sequence[Detection], memory: MemoryQueue, config: TrackerConfig) -> np.ndarray:
    dims = {d.embedding.size for d in detections}
    if len(dims) > 1:
        raise ValueError(f"detections mix embedding dimensions {sorted(dims)}")
    dim = dims.pop()
    expected = config.embedding_dim or memory.dim
    if expected is not None and dim != expected:
        raise ValueError(f"embedding dimension {dim} != expected {expected}")
    return normalize_rows(np.stack([d.embedding for d in detections]))


def build_similarity_matrix(
    detections: Sequence[Detection], memory: MemoryQueue, config: TrackerConfig | None = None
) -> CostMatrix:
    """K x (J + K) maximize matrix: instance columns then new-instance columns."""
    config = config or TrackerConfig()
    k, j = len(detections), memory.id_array().size
    if k == 0:
        return CostMatrix(np.zeros((0, j)), AssignmentMode.MAXIMIZE)

    queries = _query_matrix(detections, memory, config)
    values = np.full((k, j + k), FORBIDDEN)
    if j:
        values[:, :j] = memory.best_similarity(queries)
    values[np.arange(k), j + np.arange(k)] = config.new_instance_threshold
    return CostMatrix(values, AssignmentMode.MAXIMIZE)


def associate(
    detections: Sequence[Detection], memory: MemoryQueue, config: TrackerConfig | None = None
) -> list[int]:
    """Instance id per detection; fresh ids are drawn from ``memory``'s counter."""
    config = config or TrackerConfig()
    if not detections:
        return []
    ids = memory.instance_ids()
    matrix = build_similarity_matrix(detections, memory, config)
    result = solve_assignment(matrix)
    assigned: list[int] = [0] * len(detections)
    for row, col in result.pairs:
        assigned[row] = ids[col] if col < len(ids) else memory.allocate_id()
    if result.unassigned_rows:
        raise RuntimeError(f"rows {result.unassigned_rows} left unassigned despite new-instance columns")
    return assigned


def step(
    frame: int,
    detections: Sequence[Detection],
    memory: MemoryQueue,
    config: TrackerConfig | None = None,
) -> tuple[TrackFrame, MemoryQueue]:
    """Track one frame without touching the given memory.

    Args:
        frame: 1-based frame index, later than the memory's last frame.
        detections: The frame's detections in any order.
        memory: Memory after the previous frame.
        config: Thresholds and memory length.

    Returns:
        The frame's tracked objects and the updated memory.
    """
    config = config or TrackerConfig()
    if frame <= memory.last_frame:
        raise ValueError(f"frame {frame} arrived after frame {memory.last_frame}")
    updated = memory.copy()
    # Skipped frames still age the memory.
    for skipped in range(updated.last_frame + 1, frame):
        updated.push(skipped, [], np.zeros((0, updated.dim or 0)))

    retained = [d for d in detections if d.score >= config.objectness_threshold]
    ids = associate(retained, updated, config)
    embeddings = np.stack([d.embedding for d in retained]) if retained else np.zeros((0, updated.dim or 0))
    updated.push(frame, ids, embeddings)
    assert len(updated) <= config.memory_length

    objects = [
        TrackedObject(instance_id=i, category_id=d.category_id, score=d.score, box=d.box)
        for i, d in zip(ids, retained)
    ]
    logger.debug(
        f"Frame {frame}: {len(detections)} detections, {len(retained)} retained, "
        f"{len(updated.instance_ids())} instances in memory"
    )
    return TrackFrame(frame=frame, objects=objects), updated


class EmbeddingTracker:
    """Stateful per-sequence tracker; one instance per sequence."""

    def __init__(self, config: TrackerConfig | None = None) -> None:
        self.config = config or TrackerConfig()
        self.memory = MemoryQueue(self.config.memory_length, dim=self.config.embedding_dim)

    def update(self, frame: int, detections: Sequence[Detection]) -> TrackFrame:
        output, self.memory = step(frame, detections, self.memory, self.config)
        return output


def run_sequence(
    stream: Mapping[int, Sequence[Detection]],
    config: TrackerConfig | None = None,
    num_frames: Optional[int] = None,
) -> TrackOutput:
    """Track frames 1..F in order.

    Args:
        stream: Detections keyed by 1-based frame; missing frames have none.
        config: Tracker settings; defaults to the MOT17 values.
        num_frames: Sequence length F. Defaults to the last frame with detections.

    Returns:
        One TrackFrame per frame, empty frames included.
    """
    config = config or TrackerConfig()
    last = max([0, *stream.keys()]) if num_frames is None else max(num_frames, *stream.keys(), 0)
    tracker = EmbeddingTracker(config)
    frames = [tracker.update(frame, stream.get(frame, [])) for frame in range(1, last + 1)]
    logger.info(
        f"Tracked {last} frames with T={config.memory_length}: "
        f"{tracker.memory.next_id - 1} ids issued"
    )
    return TrackOutput(frames=frames)
