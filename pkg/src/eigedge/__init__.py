"""Edge detection with image-derived eigenfilters, classical baselines and Hough cell counting."""
from .classic import (CannyParams, GradientField, canny, gaussian_smooth, log_detect, log_kernel,
                      prewitt, prewitt_edges, sobel, sobel_edges)
from .dictedge import (DictConfig, EdgeStack, EigenfilterBank, FeaturelessImageError, PatchMatrix,
                       apply_filter_bank, build_filter_bank, center_stack, covariance, detect_edges,
                       extract_patches, fuse_pairwise_max)
from .eigen import EigenDecomposition, jacobi_eigen
from .estimators import (CannyEdgeDetector, CircleCounter, DictionaryEdgeDetector,
                         GradientEdgeDetector, LoGEdgeDetector)
from .houghcells import CellCountReport, Circle, HoughConfig, count_cells, find_circles, hough_accumulate
from .imgcore import convolve, load_image, normalize, save_image, threshold, to_grayscale

__version__ = "0.1.0"
