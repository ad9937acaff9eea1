"""Dense sliding-window CNN scanning with convolution reuse across windows.

Two engines with identical contracts: :func:`scan_naive` evaluates every
window independently (the simple reference), while :func:`scan_fragment`
computes each convolution once over the whole image, splitting feature maps
into offset fragments at every max-pooling layer so that no window's data is
lost.  An analytical cost model (:mod:`fragscan.cost`) predicts the
operation counts of both strategies.
"""

from .cost import CostReport, LayerCost, flops_image, flops_patch, speedup_report
from .errors import (
    CoverageError,
    CropRangeError,
    FragscanError,
    ImageFileError,
    LayerSizeError,
    NetParseError,
    WeightFileError,
)
from .fragments import (
    MacCounter,
    conv_forward_extended,
    fc_forward_dense,
    iter_layer_states,
    pool_forward_fragment,
    reassemble,
    scan_fragment,
)
from .imageio import (
    load_posteriors,
    mirror_pad,
    read_pgm,
    save_posteriors,
    synthetic_slice,
    write_class_map,
    write_pgm,
)
from .netdef import (
    LayerSpec,
    LayerWeights,
    NetSpec,
    WeightSet,
    fragment_count,
    init_weights,
    load_net,
    load_weights,
    parse_net,
    save_weights,
    serialize_net,
    weight_shapes,
)
from .patch import (
    DenseOutput,
    conv_forward_patch,
    fc_forward,
    forward_patch,
    iter_patch_maps,
    maxpool_forward_patch,
    scan_naive,
)
from .planes import (
    Fragment,
    FragmentLayerState,
    PlanesDiff,
    crop,
    float_dtype,
    planes_equal,
    precision,
    set_precision,
)
from .rng import XorShift64Star

__version__ = "0.1.0"

__all__ = [
    "CostReport",
    "CoverageError",
    "CropRangeError",
    "DenseOutput",
    "Fragment",
    "FragmentLayerState",
    "FragscanError",
    "ImageFileError",
    "LayerCost",
    "LayerSizeError",
    "LayerSpec",
    "LayerWeights",
    "MacCounter",
    "NetParseError",
    "NetSpec",
    "PlanesDiff",
    "WeightFileError",
    "WeightSet",
    "XorShift64Star",
    "conv_forward_extended",
    "conv_forward_patch",
    "crop",
    "fc_forward",
    "fc_forward_dense",
    "float_dtype",
    "flops_image",
    "flops_patch",
    "forward_patch",
    "fragment_count",
    "init_weights",
    "iter_layer_states",
    "iter_patch_maps",
    "load_net",
    "load_posteriors",
    "load_weights",
    "maxpool_forward_patch",
    "mirror_pad",
    "parse_net",
    "planes_equal",
    "pool_forward_fragment",
    "precision",
    "read_pgm",
    "reassemble",
    "save_posteriors",
    "save_weights",
    "scan_fragment",
    "scan_naive",
    "serialize_net",
    "set_precision",
    "speedup_report",
    "synthetic_slice",
    "weight_shapes",
    "write_class_map",
    "write_pgm",
]
