"""Comparison algorithms: genetic search, brute force, and Monte-Carlo over f_hat."""
from deckrec.baselines.brute import MAX_DECKS, brute_force_solve, rank_of, top_fraction_threshold
from deckrec.baselines.ga import (GaConfig, GaLog, ga_crossover, ga_mutate, ga_search,
                                  tournament_select)
from deckrec.baselines.mc import (Dataset, McConfig, McLog, PredictorHyperparams,
                                  WinRatePredictor, build_predictor_dataset, mc_solve,
                                  sample_decks, train_predictor)

__all__ = [
    "MAX_DECKS", "brute_force_solve", "rank_of", "top_fraction_threshold",
    "GaConfig", "GaLog", "ga_crossover", "ga_mutate", "ga_search", "tournament_select",
    "Dataset", "McConfig", "McLog", "PredictorHyperparams", "WinRatePredictor",
    "build_predictor_dataset", "mc_solve", "sample_decks", "train_predictor",
]
