import numpy as np
import pytest
from hypothesis import strategies as st

import fragscan as fs

DESK_NET_TEXT = """\
input 1 16
conv 4 3
maxpool 2
conv 6 2
maxpool 3
fc 10
fc 3
"""

TABLE1_NET_TEXT = """\
# 11-layer segmentation architecture
input 1 95
conv 48 4
maxpool 2
conv 48 5
maxpool 2
conv 48 4
maxpool 2
conv 48 4
maxpool 2
fc 200
fc 2
"""


@pytest.fixture(scope="session")
def desk_net():
    return fs.parse_net(DESK_NET_TEXT)


@pytest.fixture(scope="session")
def table1_net():
    return fs.parse_net(TABLE1_NET_TEXT)


@pytest.fixture(scope="session")
def desk_weights(desk_net):
    return fs.init_weights(desk_net, 0)


@pytest.fixture(autouse=True)
def _reset_precision():
    yield
    fs.set_precision("f32")


def rand_maps(shape, seed=0, low=-1.0, high=1.0):
    rng = np.random.default_rng(seed)
    return (low + (high - low) * rng.random(shape)).astype(np.float32)


def rand_image(net, width, height=None, seed=0):
    height = width if height is None else height
    return rand_maps((net.input_channels, height, width), seed, 0.0, 1.0)


@st.composite
def spatial_stacks(draw, max_pools=3):
    """Conv/pool stacks built backwards from the classifier window, so every
    drawn stack satisfies the size recurrences. Returns (lines, window)."""
    n_convs = draw(st.integers(min_value=1, max_value=3))
    n_pools = draw(st.integers(min_value=0, max_value=max_pools))
    order = draw(st.permutations(["conv"] * n_convs + ["maxpool"] * n_pools))
    size = draw(st.integers(min_value=1, max_value=3))
    reversed_lines = []
    for kind in reversed(list(order)):
        if kind == "conv":
            k = draw(st.integers(min_value=1, max_value=3))
            maps = draw(st.integers(min_value=1, max_value=3))
            reversed_lines.append(f"conv {maps} {k}")
            size = size + (k - 1)
        else:
            k = draw(st.sampled_from([2, 3]))
            reversed_lines.append(f"maxpool {k}")
            size = size * k
    return list(reversed(reversed_lines)), size


@st.composite
def net_texts(draw, max_pools=3):
    lines, window = draw(spatial_stacks(max_pools=max_pools))
    channels = draw(st.integers(min_value=1, max_value=2))
    fc_sizes = draw(st.lists(st.integers(min_value=2, max_value=4), min_size=1, max_size=2))
    hidden = draw(st.sampled_from(["identity", "tanh", "relu"]))
    output = draw(st.sampled_from(["identity", "softmax"]))
    parts = [f"input {channels} {window}"]
    parts.extend(lines)
    parts.extend(f"fc {n}" for n in fc_sizes)
    parts.append(f"activation {hidden} {output}")
    return "\n".join(parts) + "\n"
