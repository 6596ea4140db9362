"""
Overtake Lab - overtaking duration model, maneuver extraction and collision-avoidance advice
"""

__version__ = "0.1.0"
__author__ = "Nullius"
__description__ = "Log-logistic overtaking-duration model with a two-lane traffic simulator"

from .core.factory import create_decision_engine, resolve_model

__all__ = ["create_decision_engine", "resolve_model"]
