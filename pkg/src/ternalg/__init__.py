"""ternalg package initialization."""

__all__: list[str] = []
__version__: str = "0.1.0"
