"""Exception types shared across the package."""


class BlowupError(FloatingPointError):
    """Particle coordinates left the finite range during time stepping.

    ``step`` is the 1-based index of the Euler-Maruyama step that produced
    the non-finite coordinate.
    """

    def __init__(self, step: int, detail: str = ""):
        self.step = step
        msg = f"non-finite particle coordinates after step {step}"
        if detail:
            msg = f"{msg}: {detail}"
        super().__init__(msg)


class UnsupportedLawError(ValueError):
    """The requested operation needs a density on a bounded box."""


class GridSizeError(ValueError):
    """A tensor-product grid would exceed the node-count guard."""


class ExperimentError(RuntimeError):
    """A replication inside an experiment driver failed; message carries the
    (scale, sample, run) indices of the failing cell."""
