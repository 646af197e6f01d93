"""Three-stage channel estimation for IRS-assisted ISAC MISO systems."""

from irs_isac.protocol import SystemConfig, Geometry, PilotPlan, build_plan
from irs_isac.channels import ChannelRealization, realize
from irs_isac.airsim import StageObservation

__all__ = [
    "SystemConfig",
    "Geometry",
    "PilotPlan",
    "build_plan",
    "ChannelRealization",
    "realize",
    "StageObservation",
]

__version__ = "0.1.0"
