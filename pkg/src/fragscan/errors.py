"""Exception types shared across the package."""


class FragscanError(Exception):
    """Base class for errors caused by bad inputs, files, or sizes."""


class NetParseError(FragscanError, ValueError):
    """Malformed or invalid network description text."""


class LayerSizeError(FragscanError, ValueError):
    """A layer cannot be applied to maps of the given size."""


class CropRangeError(FragscanError, IndexError):
    """A crop window falls outside its source plane."""


class WeightFileError(FragscanError, ValueError):
    """Weight data is malformed or does not match the network."""


class ImageFileError(FragscanError, ValueError):
    """Image file is malformed or uses an unsupported variant."""


class CoverageError(RuntimeError):
    """Reassembly could not account for every window position exactly once.

    Signals an internal bookkeeping bug rather than a user error, hence
    deliberately not a FragscanError.
    """
