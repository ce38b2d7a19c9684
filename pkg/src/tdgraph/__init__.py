"""Graph-structured recurrent region models for weakly-supervised video object detection."""

from .graph import GraphMode, build_graph, build_video_graph
from .model import Model, init_model
from .synth import SynthConfig, generate_dataset, generate_video
from .train import RunConfig, benchmark_config, evaluate_model, train_model

__all__ = ["GraphMode", "build_graph", "build_video_graph", "Model", "init_model", "SynthConfig",
           "generate_dataset", "generate_video", "RunConfig", "benchmark_config", "evaluate_model",
           "train_model"]
