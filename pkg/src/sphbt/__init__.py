"""Fast orthogonal discrete spherical Bessel transform and a 3D TDSE solver built on it."""

from . import dlop, dvr3d, radial, reference, tdse
from .dlop import *  # noqa: F401,F403
from .dvr3d import *  # noqa: F401,F403
from .errors import ConfigurationError, ConvergenceError, NumericError
from .radial import *  # noqa: F401,F403
from .tdse import *  # noqa: F401,F403

__version__ = "0.1.0"

__all__ = (
    dlop.__all__
    + radial.__all__
    + dvr3d.__all__
    + tdse.__all__
    + ["ConfigurationError", "ConvergenceError", "NumericError", "reference", "__version__"]
)
