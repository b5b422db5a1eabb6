"""Parsing and verification of compact network architecture strings.

Grammar, tokens joined by '-':

  kNcsS[Act]   e.g. "7n3s1ReLU": k x k convolution, c filters, stride s,
               optional activation tag ("ReLU", "LReLU", "tanh", ...)
  Rk           residual block: two 3x3 stride-1 convolutions, k filters each
  upk          2x bilinear upsample, then 3x3 stride-1 convolution, k filters
  downk        3x3 stride-2 convolution, k filters, LeakyReLU slope 0.2

Convolutions pad by floor((kernel - 1)/2), so stride-1 layers with odd
kernels preserve spatial size and stride-2 layers halve even inputs
exactly (even kernels at stride 1 shrink the map by one, as in 70x70
patch discriminators). The receptive-field computation uses the standard
recursion rf += (k - 1) * prod(previous strides) and is
padding-independent.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ArchParseError

CONV = "conv"
UPSAMPLE_CONV = "upsample-conv"

_CONV_RE = re.compile(r"^(\d+)n(\d+)s(\d+)([A-Za-z][A-Za-z0-9.]*)?$")
_RES_RE = re.compile(r"^R(\d+)$")
_UP_RE = re.compile(r"^up(\d+)$")
_DOWN_RE = re.compile(r"^down(\d+)$")

# generator color path: three convs down to 64x64, six residual blocks,
# bilinear upsampling back to full resolution
COLOR_PATH = ("7n3s1ReLU-3n64s2ReLU-3n128s2ReLU-"
              "R256-R256-R256-R256-R256-R256-up512-up256")
# geometry path mirrors it with narrower upsampling stages
GEOMETRY_PATH = ("7n3s1ReLU-3n64s2ReLU-3n128s2ReLU-"
                 "R256-R256-R256-R256-R256-R256-up256-up128")
# UNet-style geometry predictor; up channels are doubled by skip concats
PREDICTOR = ("down64-down128-down256-down512-down512-down512-"
             "up1024-up1024-up1024-up512-up256-up128")
# 70x70-patch discriminator: 4x4 convs, strides 2,2,2,1 and a 1-channel head
DISCRIMINATOR = "4n64s2LReLU-4n128s2LReLU-4n256s2LReLU-4n512s1LReLU-4n1s1"


@dataclass(frozen=True)
class Layer:
    kind: str            # CONV or UPSAMPLE_CONV
    kernel: int
    stride: int
    padding: int
    channels: int
    activation: str = ""
    residual: bool = False   # True on both convs expanded from an R token

    def __post_init__(self):
        if self.kernel < 1 or self.stride < 1 or self.channels < 1:
            raise ArchParseError(
                f"layer with kernel {self.kernel}, stride {self.stride}, "
                f"channels {self.channels}")


@dataclass(frozen=True)
class ConvSpec:
    layers: tuple[Layer, ...]

    def __len__(self):
        return len(self.layers)


def parse_arch(spec):
    """Parse an architecture string into an ordered ConvSpec."""
    if not spec or not spec.strip():
        raise ArchParseError("empty architecture string")
    layers = []
    for token in spec.strip().split("-"):
        m = _CONV_RE.match(token)
        if m:
            k, c, s = int(m.group(1)), int(m.group(2)), int(m.group(3))
            act = m.group(4) or ""
            layers.append(Layer(CONV, k, s, (k - 1) // 2, c, act))
            continue
        m = _RES_RE.match(token)
        if m:
            c = int(m.group(1))
            for _ in range(2):
                layers.append(Layer(CONV, 3, 1, 1, c, "ReLU", residual=True))
            continue
        m = _UP_RE.match(token)
        if m:
            layers.append(Layer(UPSAMPLE_CONV, 3, 1, 1, int(m.group(1)), "ReLU"))
            continue
        m = _DOWN_RE.match(token)
        if m:
            layers.append(Layer(CONV, 3, 2, 1, int(m.group(1)), "LReLU0.2"))
            continue
        raise ArchParseError(f"unknown token {token!r} in {spec!r}")
    return ConvSpec(tuple(layers))


def spec_to_string(spec):
    """Inverse of parse_arch up to ConvSpec equality.

    Residual conv pairs re-collapse to R tokens and down layers to down
    tokens, so parse_arch(spec_to_string(s)) == s for any parsed s.
    """
    tokens = []
    i = 0
    layers = spec.layers
    while i < len(layers):
        ly = layers[i]
        if (ly.residual and i + 1 < len(layers) and layers[i + 1].residual
                and layers[i + 1].channels == ly.channels):
            tokens.append(f"R{ly.channels}")
            i += 2
            continue
        if ly.kind == UPSAMPLE_CONV:
            tokens.append(f"up{ly.channels}")
        elif (ly.kind == CONV and ly.kernel == 3 and ly.stride == 2
                and ly.activation == "LReLU0.2"):
            tokens.append(f"down{ly.channels}")
        else:
            tokens.append(f"{ly.kernel}n{ly.channels}s{ly.stride}{ly.activation}")
        i += 1
    return "-".join(tokens)


def shape_trace(spec, input_shape):
    """Per-layer output shapes (H, W, C) for an input (H, W, C).

    Convolution arithmetic: out = floor((in + 2*padding - kernel)/stride)+1;
    the upsample stage doubles H and W before its convolution.
    """
    h, w, _ = input_shape
    shapes = []
    for ly in spec.layers:
        if ly.kind == UPSAMPLE_CONV:
            h, w = 2 * h, 2 * w
        h = (h + 2 * ly.padding - ly.kernel) // ly.stride + 1
        w = (w + 2 * ly.padding - ly.kernel) // ly.stride + 1
        if h < 1 or w < 1:
            raise ArchParseError(
                f"non-positive spatial dim after layer {len(shapes)}: "
                f"{h}x{w}")
        shapes.append((h, w, ly.channels))
    return shapes


def receptive_field(spec):
    """Receptive field in input pixels of one output unit.

    Only defined for pure convolution stacks; upsampling layers make the
    input footprint resolution-dependent and are rejected.
    """
    rf = 1
    stride_prod = 1
    for ly in spec.layers:
        if ly.kind != CONV:
            raise ArchParseError(
                "receptive field undefined for specs with upsampling")
        rf += (ly.kernel - 1) * stride_prod
        stride_prod *= ly.stride
    return rf
