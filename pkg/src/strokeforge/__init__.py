"""strokeforge: raster digits to pen strokes, and sequence models over them."""

from .curriculum import CurriculumKind, CurriculumState, effective_dataset, initial_state, on_epoch_end
from .model import MdnOutput, ModelConfig, SequenceModel
from .pipeline import BinaryImage, GrayImage, convert_dataset, image_to_sequence
from .strokes import PenStep, StrokeSequence, read_dataset, write_dataset
from .training import TrainConfig, Trainer, evaluate_accuracy, evaluate_rmse, load_checkpoint

__version__ = "0.1.0"

__all__ = [
    "BinaryImage",
    "CurriculumKind",
    "CurriculumState",
    "GrayImage",
    "MdnOutput",
    "ModelConfig",
    "PenStep",
    "SequenceModel",
    "StrokeSequence",
    "TrainConfig",
    "Trainer",
    "convert_dataset",
    "effective_dataset",
    "evaluate_accuracy",
    "evaluate_rmse",
    "image_to_sequence",
    "initial_state",
    "load_checkpoint",
    "on_epoch_end",
    "read_dataset",
    "write_dataset",
    "__version__",
]
