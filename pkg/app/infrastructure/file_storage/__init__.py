from .run_files import RunFileStorage, format_value

__all__ = ["RunFileStorage", "format_value"]
