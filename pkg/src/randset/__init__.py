"""Shape-based similarity testing of random sets observed as binary images."""
from ._backend import BACKEND
from .descriptors import (ShapeDescriptor, TestingFunction, curvature_estimate, describe_component, describe_image,
                          disc_mask, occupancy, perimeter_area_ratio, testing_function)
from .errors import (DecodeError, InsufficientDataError, InvalidParameterError, RandsetError, ShapeError,
                     UnsupportedFormatError)
from .imagery import BinaryImage, Component, filter_components, label_components, load_image
from .ndist import depth_kernel, euclid_kernel, ndist_function, ndist_scalar
from .permtest import (PermutationConfig, TestOutcome, bootstrap_pooled_test, joint_similarity_test,
                       pairwise_matrix, permutation_pvalue, sample_components)

__version__ = "0.1.0"
