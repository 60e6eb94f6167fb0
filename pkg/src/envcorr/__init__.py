"""Environmental-assisted correction of continuous-variable Gaussian channels."""

from .channel import ChannelParams, Detector, TapConfig
from .feedforward import FeedforwardPlan, Strategy
from .herald import HeraldNoYieldError, HeraldWindow
from .montecarlo import TrajectoryBatch
from .qkd import Attack, Detection, Direction, EffectiveChannel, KeyRateReport
from .states import GaussianState, SymplecticMap

__all__ = [
    "Attack",
    "ChannelParams",
    "Detection",
    "Detector",
    "Direction",
    "EffectiveChannel",
    "FeedforwardPlan",
    "GaussianState",
    "HeraldNoYieldError",
    "HeraldWindow",
    "KeyRateReport",
    "Strategy",
    "SymplecticMap",
    "TapConfig",
    "TrajectoryBatch",
]

__version__ = "0.1.0"
