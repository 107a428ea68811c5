"""Adapter between SQuAD-format datasets and extractive QA models.

Reads a (possibly perturbed) dataset, runs a model over every question, and
writes the official ``{question_id: answer}`` predictions JSON that the
evaluation tooling accepts. Ships with an offline fallback model (TFIDF
sentence retrieval) so the round trip works without downloads; any
Hugging Face question-answering model can be plugged in by name.
"""

__version__ = "0.1.0"

from .adapter import BridgeConfig, predict_adapter

__all__ = ["BridgeConfig", "predict_adapter", "__version__"]
