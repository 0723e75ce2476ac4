import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from special_functions.series import (
    SeriesEvaluator,
    eval_E,
    eval_E_asymptotic,
    eval_E_mellin_barnes,
    eval_series_function,
    log_E_real,
    series_evaluator,
)
from special_functions.kernel import KernelEvaluator, eval_K, kernel_evaluator, moment_check

__all__ = [
    "SeriesEvaluator", "eval_E", "eval_E_asymptotic", "eval_E_mellin_barnes", "eval_series_function",
    "log_E_real", "series_evaluator", "KernelEvaluator", "eval_K", "kernel_evaluator", "moment_check",
]
