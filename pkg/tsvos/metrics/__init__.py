from .jaccard import jaccard
from .dice import dice
from .boundary import boundary_pixels
from .boundary_f import boundary_f, default_tolerance
from .hausdorff import hausdorff
from .report import MetricReport, VideoMetrics, read_report, format_table
from .evaluate_corpus import evaluate_corpus, evaluate_video
