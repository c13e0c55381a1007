"""Spatial and temporal non-local filter based fusion of fine/coarse reflectance imagery."""
from .errors import ConfigError, FusionError, GeometryError, NumericError, RasterFormatError
from .evaluation import EvalReport, evaluate, r_squared, rmse
from .fusion import FusionConfig, FusionTask, Mode, predict_image, predict_pixel, predict_series
from .oracle import oracle_predict
from .raster import (
    RasterGrid,
    ReferencePair,
    downsample_boxavg,
    read_raster,
    upsample_cubic,
    write_raster,
)
from .regression import RegressionCoefficients, RegressionParams, coefficient_limits_check, fit_restricted
from .similarity import SimilarityParams, SimilarPixelSet, select_similar
from .synth import SceneSpec, SeriesFrame, generate_series
from .weights import PixelWeights, WeightParams, combine_and_normalize, individual_weight, whole_weight

__version__ = "0.1.0"
