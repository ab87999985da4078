"""Click-anchored gaze capture, session service, and heatmap video rendering."""

from .heatmap import RenderConfig
from .model import GazePoint, GazeSession, read_session, write_session

__all__ = ["GazePoint", "GazeSession", "RenderConfig", "read_session", "write_session"]
