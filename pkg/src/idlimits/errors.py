class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending entry (dotted path)."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class AllRunsDivergedError(RuntimeError):
    pass
