"""embedtrack - embedding-based multi-object tracking.

Contrastive training losses, a memory-queue tracker that assigns ids by
cosine similarity, tracking metrics and a synthetic sequence generator.
"""

__version__ = "0.1.0"
