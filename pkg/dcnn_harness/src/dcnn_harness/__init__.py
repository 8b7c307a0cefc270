"""DenseNet-121 harness over figure-ground tile exports.

Trains an income classifier on the tile directory emitted by the figground
pipeline, visualizes class evidence with class activation maps, and clusters
within-class embeddings to surface typical footprint typologies.
"""

__version__ = "0.1.0"

from .cam import cam_map
from .cluster import cluster_embeddings, embed_and_cluster, embed_tiles
from .data import TileDataset, load_tile_image, load_tile_table
from .model import TrainProtocol, build_model, embed
from .train import evaluate, load_checkpoint, train_model

__all__ = [
    "TrainProtocol",
    "TileDataset",
    "build_model",
    "embed",
    "embed_tiles",
    "embed_and_cluster",
    "cluster_embeddings",
    "cam_map",
    "train_model",
    "evaluate",
    "load_checkpoint",
    "load_tile_table",
    "load_tile_image",
    "__version__",
]
