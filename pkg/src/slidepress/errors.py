"""Exception types shared across the toolkit."""


class SlidepressError(Exception):
    """Base class for every error raised by this package."""


# --- slide container / reading ---

class MissingFile(SlidepressError):
    pass


class MalformedContainer(SlidepressError):
    """Structurally invalid slide file (bad magic, IFD, required tag...)."""


class UnsupportedFeature(SlidepressError):
    """Valid container using a feature outside the supported subset."""


class RegionOutOfBounds(SlidepressError):
    pass


class MagnificationOutOfRange(SlidepressError):
    pass


class DecodeError(SlidepressError):
    """Tile payload present but undecodable."""


# --- encoding / output ---

class EncodeError(SlidepressError):
    pass


class IoError(SlidepressError):
    """Filesystem write/move failure while producing output."""


# --- snapshot ---

class LogoTooLarge(SlidepressError):
    pass


class InvalidImage(SlidepressError):
    pass


class UnknownNamePattern(SlidepressError):
    pass


# --- deep zoom ---

class NotAPyramid(SlidepressError):
    pass


# --- configuration ---

class ConfigError(SlidepressError):
    pass


class ParseError(ConfigError):
    pass


class MissingKey(ConfigError):
    pass


class UnknownKey(ConfigError):
    pass


# --- catalog / pipeline ---

class StoreError(SlidepressError):
    pass


class SpecimenNotFound(SlidepressError):
    pass


class CatalogUnavailable(SlidepressError):
    pass


class NameCollision(SlidepressError):
    pass


class LockHeld(SlidepressError):
    """Another batch already owns the pipeline lock."""
