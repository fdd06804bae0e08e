"""Multi-modal concurrent transmission: analysis and link simulation."""

__version__ = "0.1.0"

from . import capacity_outage, coding, frame_mapper, mimo_channel, modem, phy_link  # noqa: F401
