#!/usr/bin/env python3
"""Regenerate the bundled DNN descriptors in data/descriptors/.

MAC counts come from the public layer shapes of each network. Tensor sizes
are float32, in MB (1e6 bytes), with a 2% framing overhead folded in so the
descriptor's output_mb is what actually goes over the uplink.
"""
import json
import pathlib

OVERHEAD = 1.02
OUT = pathlib.Path(__file__).resolve().parent.parent / "data" / "descriptors"


def mb(elements, bytes_per=4):
    return round(elements * bytes_per * OVERHEAD / 1e6, 6)


def gmac(n):
    return round(n / 1e9, 9)


class Builder:
    def __init__(self, name, h, w, c, input_bytes=4):
        self.name = name
        self.h, self.w, self.c = h, w, c
        self.input_mb = mb(h * w * c, input_bytes)
        self.units = []

    def _push(self, name, kind, macs, elements):
        self.units.append({"name": name, "kind": kind, "gmacs": gmac(macs),
                           "output_mb": mb(elements)})

    def conv(self, name, out_c, k, stride=1, act=None):
        pad_h = self.h // stride
        pad_w = self.w // stride
        macs = pad_h * pad_w * out_c * self.c * k * k
        self.h, self.w, self.c = pad_h, pad_w, out_c
        self._push(name, "conv", macs, self.h * self.w * self.c)
        if act:
            self.act(act)

    def act(self, name):
        n = self.h * self.w * self.c
        self._push(name, "act", n, n)

    def pool(self, name, k=2, stride=2):
        self.h //= stride
        self.w //= stride
        n = self.h * self.w * self.c
        self._push(name, "other", n * k * k, n)

    def fc(self, name, out, act=None):
        macs = self.h * self.w * self.c * out
        self.h, self.w, self.c = 1, 1, out
        self._push(name, "fc", macs, out)
        if act:
            self.act(act)

    def block(self, name, kind, macs, out_shape):
        self.h, self.w, self.c = out_shape
        self._push(name, kind, macs, self.h * self.w * self.c)

    def dump(self, filename):
        doc = {"name": self.name, "input_size_mb": self.input_mb,
               "units": self.units}
        (OUT / filename).write_text(json.dumps(doc, indent=2) + "\n")


def vgg16():
    b = Builder("vgg16", 224, 224, 3)
    cfg = [(1, [64, 64]), (2, [128, 128]), (3, [256, 256, 256]),
           (4, [512, 512, 512]), (5, [512, 512, 512])]
    for stage, chans in cfg:
        for i, ch in enumerate(chans, start=1):
            b.conv(f"conv{stage}_{i}", ch, 3, act=f"relu{stage}_{i}")
        b.pool(f"pool{stage}")
    b.fc("fc1", 4096, act="relu_fc1")
    b.fc("fc2", 4096, act="relu_fc2")
    b.fc("fc3", 1000)
    b.act("softmax")
    b.dump("vgg16.json")


def yolo():
    # Tiny YOLOv2 (VOC), 416x416 input. Batch-norm is folded into the
    # convolution; each convolution is followed by a leaky ReLU.
    b = Builder("yolo", 416, 416, 3)
    chans = [16, 32, 64, 128, 256, 512]
    for i, ch in enumerate(chans, start=1):
        b.conv(f"conv{i}", ch, 3, act=f"leaky{i}")
        if i < 6:
            b.pool(f"maxpool{i}")
        else:
            b.pool(f"maxpool{i}", k=2, stride=1)
    b.conv("conv7", 1024, 3, act="leaky7")
    b.conv("conv8", 1024, 3, act="leaky8")
    b.conv("conv9", 125, 1)
    n = b.h * b.w * b.c
    b._push("region", "other", n * 4, n)
    b.dump("yolo.json")


def resnet50():
    # Residual blocks are atomic units; a block's MACs aggregate its three
    # convolutions plus the projection shortcut where present.
    b = Builder("resnet50", 224, 224, 3)
    b.conv("conv1", 64, 7, stride=2, act="relu1")
    b.pool("maxpool", k=3, stride=2)
    in_c = 64
    stages = [(64, 3, 1), (128, 4, 2), (256, 6, 2), (512, 3, 2)]
    for s, (width, blocks, stride) in enumerate(stages, start=2):
        for i in range(blocks):
            st = stride if i == 0 else 1
            h_in, w_in = b.h, b.w
            h, w = h_in // st, w_in // st
            out_c = width * 4
            macs = h_in * w_in * width * in_c          # 1x1 reduce
            macs += h * w * width * width * 9          # 3x3
            macs += h * w * out_c * width              # 1x1 expand
            if i == 0:
                macs += h * w * out_c * in_c           # projection
            b.block(f"res{s}{chr(ord('a') + i)}", "conv", macs, (h, w, out_c))
            in_c = out_c
    n = b.c
    b.units.append({"name": "avgpool", "kind": "other",
                    "gmacs": gmac(b.h * b.w * b.c), "output_mb": mb(n)})
    b.h, b.w = 1, 1
    b.fc("fc1000", 1000)
    b.act("softmax")
    b.dump("resnet50.json")


def toynet():
    doc = {"name": "toynet", "input_size_mb": 1.5, "units": [
        {"name": "conv", "kind": "conv", "gmacs": 2.0, "output_mb": 1.0},
        {"name": "act", "kind": "act", "gmacs": 0.001, "output_mb": 1.0},
        {"name": "fc", "kind": "fc", "gmacs": 0.5, "output_mb": 0.01},
    ]}
    (OUT / "toynet.json").write_text(json.dumps(doc, indent=2) + "\n")


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    vgg16()
    yolo()
    resnet50()
    toynet()
