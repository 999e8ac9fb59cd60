"""Joint training of a document classifier and hyperbolic label embeddings."""

from .data import Dataset, Hierarchy, read_dataset, read_hierarchy, write_dataset, write_hierarchy
from .errors import CheckpointVersionError, DomainError, InvalidInputError, TrainingError
from .trainer import TrainConfig, TrainedModel, load_checkpoint, save_checkpoint, train

__version__ = "0.1.0"
