"""Learning separable topic models from anchor words."""

__version__ = "0.1.0"

from .errors import AnchorTMError, DomainError, SingularityError, StructuralError  # noqa: E402
from .matcore import RowScales, row_normalize, solve_linear  # noqa: E402
from .l1geom import HullAnswer, beta_robust_simplicial, gamma_l1, l1_distance_to_hull  # noqa: E402
from .synth import (Corpus, PriorSpec, TopicMatrix, WordMapping, generate_corpus,  # noqa: E402
                    make_separable_topic_matrix, merge_rare_words, sample_prior)
from .gram import GramEstimate, empirical_topic_covariance, frequency_filter, split_and_estimate_gram  # noqa: E402
from .anchors import AnchorSet, cluster_loners, find_anchors, neighborhood, robust_loners  # noqa: E402
from .recover import RecoveryResult, recover_from_anchors  # noqa: E402
from .dirichlet import DirichletParams, dirichlet_moment_matrix, gamma_lower_bound, recover_dirichlet  # noqa: E402
from .evaluate import MatchReport, match_columns, required_documents  # noqa: E402
