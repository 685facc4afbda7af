"""Two-stage legal document retrieval: BM25 and dense first stage, pluggable
re-ranking, Exist@m / MRR@k evaluation, negative mining and loss experiments."""

from ._legalrank import *  # noqa: F401,F403
from ._legalrank import __version__  # noqa: F401
