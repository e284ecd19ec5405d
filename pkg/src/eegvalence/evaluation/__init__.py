"""Cross-validation protocols, metrics, the window sweep and rank statistics."""

from .cv import (CVResult, EvaluationError, FoldAssignment, FoldResult, cross_validate,
                 evaluate_split, loso_evaluate, stratified_kfold, subject_cv)
from .metrics import ConfusionCounts, MetricError, accuracy, f1_is_degenerate, f1_score
from .stats import (FriedmanResult, PosthocResult, StatsError, critical_difference,
                    friedman_test, ks_normality, nemenyi_q, posthoc_nemenyi)
from .sweep import SweepResult, analyze_sweep, compare_classifiers, window_sweep

posthoc_pairwise = posthoc_nemenyi
