"""Multilingual kNN-MT datastores: build, merge, search, map, evaluate."""

from knnmt._core import *  # noqa: F401,F403
from knnmt._core import __doc__  # noqa: F401
