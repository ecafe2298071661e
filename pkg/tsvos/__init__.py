import logging
from .Tsvos import Tsvos
from .core import Frame, Mask, VideoSample, LabelSet, Config, Provenance, Stream, Direction, Source, validate_video, binarize
from .errors import TsvosError, ShapeError, ConfigError, EmptyMemoryError, CoverageError, MixSourceError, EmptyMaskError, DivergenceError, ConflictError, LabelAuditError, SchemaError, CheckpointError, AggregateError
from .config import load_config, config_hash
from .model import ModelState, MemoryBank, init_state, encode_key, encode_value, memory_read, decode, segment_step, rollout, save_checkpoint, load_checkpoint
from .stcs import anchor_affinity, best_match, pcl_loss, consistency_keys, stcs_term
from .augment import AugmentedPair, make_pair, weak_augment, strong_augment, sda
from .pseudo import OracleTeacher, StreamPrediction, quadro_inference, merge_streams, pseudo_label_dataset, load_teacher
from .trainer import bootstrap_triplet, seg_loss, train_stage1, train_stage3, train_vanilla, train_fully_supervised, evaluate_model, run_pipeline, run_ablation, StageReport
from .data import SyntheticSpec, DatasetManifest, SubsampleStrategy, generate_synthetic, two_shot_subsample, load_dataset, save_labelset, read_manifest, write_manifest
from .metrics import jaccard, dice, boundary_f, hausdorff, evaluate_corpus, MetricReport, format_table
from .plots import plot_metric_table, plot_qualitative

logging.getLogger(__name__).addHandler(logging.NullHandler())
