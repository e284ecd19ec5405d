"""Per-subject RFE rankings, common feature sets and annealing-based subset search."""

from .annealing import AnnealingResult, AnnealingSchedule, anneal, loso_energy, sa_select
from .rfe import (CommonFeatureSet, FeatureRanking, SelectionError, aggregate_common_features,
                  rankings_from_json, rankings_to_json, rfe_rank)
