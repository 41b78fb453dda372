"""Object-based superpixels by seed oversampling and iterative IFT-driven seed removal."""

from .graph import Topology, neighbors
from .ift import ArcCost, ForestState, ForestStats, TreeStats, path_cost_fmax, run_ift, tree_mean_features
from .imgio import (
    Image,
    LabelMap,
    SaliencyMap,
    image_from_array,
    load_image,
    load_label_map,
    load_saliency,
    render_overlay,
    save_label_map,
    uniform_saliency,
)
from .metrics import GroundTruth, MetricsReport, boundary_recall, evaluate, under_segmentation_error
from .pipeline import SegmentationResult, SicleConfig, default_config, segment
from .removal import Criterion, RelevanceCriterion, Schedule, relevance, seeds_to_keep, select_survivors
from .seeding import Sampling, SamplingSpec, sample_grid, sample_random

__version__ = "0.1.0"
