"""Frame-graph action segmentation: graphs, embeddings, directed GCN, metrics."""

from vidgraph._core import (  # noqa: F401
    Edge,
    EdgeKind,
    ModelParams,
    VideoGraph,
    __version__,
    adjacency,
    build_graph,
    dgc_operators,
    edit_score,
    embed_semantic,
    embed_structure,
    f1_at,
    frame_accuracy,
    fuse_features,
    predict,
    prompt_fill,
    render_svg,
    segment_runs,
    train,
)

__all__ = [
    "Edge",
    "EdgeKind",
    "ModelParams",
    "VideoGraph",
    "__version__",
    "adjacency",
    "build_graph",
    "dgc_operators",
    "edit_score",
    "embed_semantic",
    "embed_structure",
    "f1_at",
    "frame_accuracy",
    "fuse_features",
    "predict",
    "prompt_fill",
    "render_svg",
    "segment_runs",
    "train",
]
