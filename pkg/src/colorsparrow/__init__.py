"""Global illuminant estimation from Random Sprays Retinex local estimates."""

from .baselines import gray_world, sdwgw, shades_of_gray
from .errors import EstimationError, ImageIOError
from .estimator import CsParams, estimate, local_change, local_changes, sample_grid
from .evaluation import (DatasetManifest, ErrorStats, Estimator, angular_error,
                         bench, evaluate, load_manifest, summarize)
from .image import (EPS, LinearImage, PixelMask, box_blur, diagonal_correct,
                    load_png, load_png16, save_png)
from .rsr import SprayParams, generate_spray, rsr_lightness, rsr_render

__version__ = "0.1.0"
