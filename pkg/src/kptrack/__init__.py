"""kptrack: 3D keypoint tracking from dense-correspondence distance maps.

Per-frame observations are a distance map (per-pixel descriptor distance to a
reference) plus a depth map. Two trackers fuse them over time, a discrete
Bayes filter on the camera's pixel grid and a particle filter in 3D world
space, next to an unfiltered per-frame baseline. A synthetic scene simulator
produces observation bundles with exact ground truth.
"""

__version__ = "0.1.0"

from .geometry import CameraModel, PixelCoord, Pose  # noqa: F401
