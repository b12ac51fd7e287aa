#!/usr/bin/env python3
"""Export VGG-19 features[0:16] (through block3_conv3 + ReLU) as an arepas archive.

Usage:
    export_vgg19_features.py OUT.ckpt [--state-dict vgg19.pth]

Without --state-dict the ImageNet weights are fetched through torchvision.
The output is what `recon.perceptual_weights` in the experiment config expects.
"""

import argparse
import json
import struct

import torch

MAGIC = b"AREPASCK"
FORMAT_VERSION = 1
LAST_LAYER = 15
DTYPES = {torch.float32: "float32", torch.float64: "float64", torch.int64: "int64", torch.uint8: "uint8"}


def load_features(state_dict_path):
    import torchvision

    if state_dict_path:
        model = torchvision.models.vgg19()
        model.load_state_dict(torch.load(state_dict_path, map_location="cpu"))
    else:
        model = torchvision.models.vgg19(weights=torchvision.models.VGG19_Weights.IMAGENET1K_V1)
    return model.features[: LAST_LAYER + 1]


def encode(kind, tensors, metadata):
    entries, payload = [], bytearray()
    for name, t in tensors:
        t = t.detach().cpu().contiguous()
        raw = t.numpy().tobytes()
        entries.append({"dtype": DTYPES[t.dtype], "name": name, "nbytes": len(raw),
                        "offset": len(payload), "shape": list(t.shape)})
        payload += raw
    header = json.dumps({"kind": kind, "metadata": metadata, "tensors": entries},
                        sort_keys=True, separators=(",", ":")).encode()
    return MAGIC + struct.pack("<IQ", FORMAT_VERSION, len(header)) + header + bytes(payload)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("output")
    parser.add_argument("--state-dict", help="local torchvision vgg19 state dict (.pth)")
    args = parser.parse_args()

    features = load_features(args.state_dict)
    tensors = []
    for idx, layer in enumerate(features):
        if isinstance(layer, torch.nn.Conv2d):
            tensors.append((f"trunk.{idx}.weight", layer.weight.float()))
            tensors.append((f"trunk.{idx}.bias", layer.bias.float()))
    with open(args.output, "wb") as f:
        f.write(encode("vgg19_block3", tensors, {"source": "torchvision vgg19", "layers": LAST_LAYER + 1}))
    print(f"wrote {len(tensors)} tensors to {args.output}")


if __name__ == "__main__":
    main()
