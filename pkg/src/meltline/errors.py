"""Exception hierarchy shared by all pipeline stages."""


class MeltlineError(Exception):
    """Base class. ``code`` is the machine-readable name used by the CLI."""

    @property
    def code(self) -> str:
        return type(self).__name__


# ingest
class SchemaError(MeltlineError):
    pass


class MissingColumn(MeltlineError):
    def __init__(self, name: str):
        super().__init__(f"required column {name!r} not found in header")
        self.name = name


class EmptyFile(MeltlineError):
    pass


class EmptyFrame(MeltlineError):
    pass


class NonMonotonicTime(MeltlineError):
    pass


# segment
class TooFewRows(MeltlineError):
    pass


class MissingEnergySource(MeltlineError):
    pass


class MissingWeight(MeltlineError):
    pass


# cluster
class DegenerateSegment(MeltlineError):
    pass


class LengthMismatch(MeltlineError):
    pass


class TooFewProfiles(MeltlineError):
    pass


class AllIdentical(MeltlineError):
    pass


class SingleCluster(MeltlineError):
    """Silhouette is undefined for one cluster; the other metrics are attached."""

    def __init__(self, message: str, inertia: float | None = None, distortion: float | None = None):
        super().__init__(message)
        self.inertia = inertia
        self.distortion = distortion


# metrics / costing
class SeriesGap(MeltlineError):
    pass


class EmptyCluster(MeltlineError):
    pass


class ZeroWeightSum(MeltlineError):
    pass


# mcdm
class ZeroColumn(MeltlineError):
    pass


class MixedDirections(MeltlineError):
    pass


class NonPositiveEntry(MeltlineError):
    pass


class SingleAlternative(MeltlineError):
    pass


class ConstantColumn(MeltlineError):
    pass


# counterfactual
class NoBestCluster(MeltlineError):
    pass


class ZeroBaseline(MeltlineError):
    pass


# cli / artifacts
class ConfigError(MeltlineError):
    pass


class StaleArtifact(MeltlineError):
    pass


class MissingArtifact(MeltlineError):
    pass
