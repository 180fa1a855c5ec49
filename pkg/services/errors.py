class RoboPainterError(ValueError):
    """Base class for every domain error raised by the simulator packages"""
