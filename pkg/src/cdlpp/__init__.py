"""Discriminant locality preserving subspace learners and a face-recognition benchmark.

Learners: PCA, LDA, LPP, DLPP, CSLPP (DLPP with the between-class scatter
as denominator) and CDLPP (CSLPP plus an L2 collaboration term on the
projections). Samples are stored column-wise throughout.
"""

from .dataset import SampleMatrix, SplitPlan
from .subspace import LearnerConfig, ProjectionBasis, fit, project

__all__ = ["LearnerConfig", "ProjectionBasis", "SampleMatrix", "SplitPlan", "fit", "project"]
__version__ = "0.1.0"
