"""Multiclass logistic regression trained over an emulated leveled HE scheme."""

from ._hemlr import *  # noqa: F401,F403
from ._hemlr import HemlrError, __doc__  # noqa: F401

__version__ = "0.1.0"
