"""Toy-scale one-stage detector harness for bitcanvas datasets.

Trains a compact detector on the exported image/label layout, emits
prediction files in the evaluator's line format, and scores them through the
`bcv eval` CLI.
"""

from .config import HarnessConfig, HarnessError
from .evalbridge import evaluate_predictions, map_at
from .predict import predict, predict_split
from .sweep import sweep_input_size
from .train import load_model, train

__version__ = "0.1.0"
