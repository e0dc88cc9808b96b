from .curves import LossCurveReport, SeriesSummary, loss_curve_report
from .losses import box_loss, ciou, cls_loss, dfl_loss
from .metrics import (
    Detection, EvalReport, GroundTruth, MatchResult, average_precision, evaluate, f1_score, ground_truth_from_labels,
    iou, iou_matrix, match_detections, mean_average_precision, read_detections, summary_metrics, write_detections,
)
from .stub import ConfModel, stub_detector

__all__ = [
    "LossCurveReport", "SeriesSummary", "loss_curve_report",
    "box_loss", "ciou", "cls_loss", "dfl_loss",
    "Detection", "EvalReport", "GroundTruth", "MatchResult", "average_precision", "evaluate", "f1_score",
    "ground_truth_from_labels", "iou", "iou_matrix", "match_detections", "mean_average_precision",
    "read_detections", "summary_metrics", "write_detections",
    "ConfModel", "stub_detector",
]
