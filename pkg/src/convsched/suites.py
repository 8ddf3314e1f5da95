"""Built-in layer suites for five well-known CNNs.

Shapes are kept exactly as published, including a few oddities (AlexNet's
third layer listed with stride 2, one Inception row with 798 input maps).
Nominal input extents are stored verbatim; the model works off the derived
effective window, which stays within kernel-sized padding slack of the
tabulated input everywhere.

Default precisions are 1 byte per pixel/weight/output with 4-byte partial
accumulations.
"""

from __future__ import annotations

from .layers import LayerShape, LayerSuite


def _sq(name: str, h: int, e: int, c: int, m: int, k: int, s: int) -> LayerShape:
    """Square feature maps and kernel, the common case."""
    return LayerShape(name=name, out_h=e, out_w=e, k_h=k, k_w=k,
                      stride=s, c_in=c, c_out=m, in_h=h, in_w=h)


def _rect(name: str, h: int, e: int, c: int, m: int,
          kh: int, kw: int, s: int) -> LayerShape:
    return LayerShape(name=name, out_h=e, out_w=e, k_h=kh, k_w=kw,
                      stride=s, c_in=c, c_out=m, in_h=h, in_w=h)


def _alexnet() -> LayerSuite:
    rows = [
        (1, 224, 55, 3, 96, 11, 4),
        (2, 55, 27, 96, 256, 5, 2),
        (3, 27, 13, 256, 384, 3, 2),  # listed with stride 2, kept verbatim
        (4, 13, 13, 384, 384, 3, 1),
        (5, 13, 13, 384, 256, 3, 1),
    ]
    return LayerSuite("alexnet", tuple(
        _sq(f"AlexNet-{i}", h, e, c, m, k, s) for i, h, e, c, m, k, s in rows))


def _zfnet() -> LayerSuite:
    rows = [
        (1, 224, 112, 3, 96, 7, 2),
        (3, 13, 13, 256, 384, 3, 1),
        (4, 13, 13, 384, 384, 3, 1),
        (5, 13, 13, 384, 256, 3, 1),
        (6, 6, 6, 256, 256, 3, 1),
    ]
    return LayerSuite("zfnet", tuple(
        _sq(f"ZFNet-{i}", h, e, c, m, k, s) for i, h, e, c, m, k, s in rows))


def _vgg() -> LayerSuite:
    rows = [
        (1, 224, 224, 3, 64),
        (2, 224, 224, 64, 64),
        (3, 112, 112, 64, 128),
        (4, 112, 112, 128, 128),
        (5, 56, 56, 128, 256),
        (6, 56, 56, 256, 256),
        (8, 28, 28, 512, 256),
        (9, 28, 28, 512, 512),
        (11, 14, 14, 512, 512),
    ]
    return LayerSuite("vgg", tuple(
        _sq(f"VGG-{i}", h, e, c, m, 3, 1) for i, h, e, c, m in rows))


def _inception() -> LayerSuite:
    # (block, h, e, c, m, kh, kw, s); branch rows flattened in table order.
    rows = [
        (0, 35, 35, 192, 64, 1, 1, 1),
        (0, 35, 35, 192, 48, 1, 1, 1),
        (0, 35, 35, 48, 64, 5, 5, 1),
        (0, 35, 35, 192, 64, 1, 1, 1),
        (0, 35, 35, 64, 96, 3, 3, 1),
        (0, 35, 35, 96, 96, 3, 3, 1),
        (0, 35, 35, 192, 32, 1, 1, 1),

        (1, 35, 35, 256, 64, 1, 1, 1),
        (1, 35, 35, 256, 48, 1, 1, 1),
        (1, 35, 35, 48, 64, 5, 5, 1),
        (1, 35, 35, 256, 64, 1, 1, 1),
        (1, 35, 35, 64, 96, 3, 3, 1),
        (1, 35, 35, 96, 96, 3, 3, 1),
        (1, 35, 35, 256, 64, 1, 1, 1),

        (2, 35, 35, 288, 64, 1, 1, 1),
        (2, 35, 35, 288, 48, 1, 1, 1),
        (2, 35, 35, 48, 64, 5, 5, 1),
        (2, 35, 35, 288, 64, 1, 1, 1),
        (2, 35, 35, 64, 96, 3, 3, 1),
        (2, 35, 35, 96, 96, 3, 3, 1),
        (2, 35, 35, 288, 64, 1, 1, 1),

        (3, 35, 17, 288, 384, 3, 3, 2),
        (3, 35, 35, 288, 64, 1, 1, 1),
        (3, 35, 35, 64, 96, 3, 3, 1),
        (3, 35, 17, 96, 96, 3, 3, 2),
        (3, 17, 17, 288, 64, 1, 1, 1),

        (4, 17, 17, 798, 192, 1, 1, 1),  # 798 as published
        (4, 17, 17, 768, 128, 1, 1, 1),
        (4, 17, 17, 128, 128, 1, 7, 1),
        (4, 17, 17, 128, 192, 7, 1, 1),
        (4, 17, 17, 768, 128, 1, 1, 1),
        (4, 17, 17, 128, 128, 7, 1, 1),
        (4, 17, 17, 128, 128, 1, 7, 1),
        (4, 17, 17, 128, 128, 7, 1, 1),
        (4, 17, 17, 128, 192, 1, 7, 1),
        (4, 17, 17, 768, 192, 1, 1, 1),
    ]
    layers = []
    counters: dict[int, int] = {}
    for block, h, e, c, m, kh, kw, s in rows:
        counters[block] = counters.get(block, 0) + 1
        name = f"Inception-{block}-{counters[block]}"
        layers.append(_rect(name, h, e, c, m, kh, kw, s))
    return LayerSuite("inception-v3", tuple(layers))


def _resnet() -> LayerSuite:
    layers = [_sq("ResNet-1", 224, 112, 3, 64, 7, 2)]
    blocks = [
        (2, 56, [(64, 64, 1), (64, 64, 3), (64, 256, 1)]),
        (3, 28, [(256, 128, 1), (128, 128, 3), (128, 512, 1)]),
        (4, 14, [(512, 256, 1), (256, 256, 3), (256, 1024, 1)]),
        (5, 7, [(1024, 512, 1), (512, 512, 3), (512, 2048, 1)]),
    ]
    for block, hw, convs in blocks:
        for i, (c, m, k) in enumerate(convs, start=1):
            layers.append(_sq(f"ResNet-{block}-{i}", hw, hw, c, m, k, 1))
    return LayerSuite("resnet", tuple(layers))


_BUILDERS = {
    "alexnet": _alexnet,
    "zfnet": _zfnet,
    "vgg": _vgg,
    "inception-v3": _inception,
    "resnet": _resnet,
}

BUILTIN_SUITE_NAMES: tuple[str, ...] = tuple(_BUILDERS)

_cache: dict[str, LayerSuite] = {}


def builtin_suite(name: str) -> LayerSuite:
    """Return a built-in suite by name; raises KeyError for unknown names."""
    key = name.lower()
    if key not in _BUILDERS:
        raise KeyError(
            f"unknown suite {name!r}; choose from {', '.join(BUILTIN_SUITE_NAMES)}"
        )
    if key not in _cache:
        _cache[key] = _BUILDERS[key]()
    return _cache[key]


def all_builtin_layers() -> tuple[LayerShape, ...]:
    out: list[LayerShape] = []
    for name in BUILTIN_SUITE_NAMES:
        out.extend(builtin_suite(name).layers)
    return tuple(out)


def find_builtin_layer(name: str) -> LayerShape:
    """Look a layer up by name across every built-in suite."""
    want = name.lower()
    for suite_name in BUILTIN_SUITE_NAMES:
        for layer in builtin_suite(suite_name):
            if layer.name.lower() == want:
                return layer
    raise KeyError(f"no built-in layer named {name!r}")
