"""Risk sharing among Lambda Value-at-Risk agents on finite probability spaces."""

from .lambda_fn import DistortionFunction, StepLambda, UtilityFunction
from .prob_core import EventSet, FiniteSpace, RandomVariable
from .risk_measures import MeasureSpec, evaluate

__version__ = "0.1.0"

__all__ = [
    "DistortionFunction",
    "EventSet",
    "FiniteSpace",
    "MeasureSpec",
    "RandomVariable",
    "StepLambda",
    "UtilityFunction",
    "evaluate",
]
