from .base import (
    FAILURE_KINDS,
    NOT_PRESENT,
    PARSE_FAILURE,
    PROVIDER_ERROR,
    ZERO_ANSWER,
    Abstention,
    Disambiguator,
    Prediction,
    Result,
)
from .ppr import PersonalizedPageRank, PprParams, ppr_disambiguate, ppr_scores
from .trivial import expected_random_accuracy, first_sense, oracle_upper_bound, random_choice
from .word_expert import (
    TrainingConfig,
    WordExpertModel,
    WordExperts,
    predict_word_expert,
    train_word_expert,
)
