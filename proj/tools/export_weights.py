#!/usr/bin/env python3
"""Write torchvision backbone weights in the layout cxrscreen loads.

Each model is saved as <out>/<name>.pt holding a plain dict of tensors
(libtorch's pickle loader cannot read OrderedDict). Typical use:

    python3 tools/export_weights.py --out weights            # ImageNet weights
    python3 tools/export_weights.py --out weights --chexnet ~/chexnet.pth.tar

--random skips the download and writes freshly initialised models, and
--reference additionally stores a fixed input and the matching pre-head
features so the C++ definitions can be checked against torchvision.
"""

import argparse
import pathlib
import sys

import torch
import torchvision

MODELS = {
    "squeezenet1_1": ("squeezenet1_1", 227),
    "mobilenet_v2": ("mobilenet_v2", 224),
    "resnet18": ("resnet18", 224),
    "resnet101": ("resnet101", 224),
    "inception_v3": ("inception_v3", 299),
    "densenet121": ("densenet121", 224),
    "densenet201": ("densenet201", 224),
    "vgg19": ("vgg19", 224),
}


def build(name, random):
    ctor = getattr(torchvision.models, MODELS[name][0])
    kwargs = {"weights": None if random else "DEFAULT"}
    if name == "inception_v3":
        kwargs.update(aux_logits=False, init_weights=True)
        if not random:
            # pretrained weights include the auxiliary head; load then drop it
            kwargs["aux_logits"] = True
    model = ctor(**kwargs)
    if name == "inception_v3":
        model.aux_logits = False
        model.AuxLogits = None
    return model.eval()


def strip_head(name, model):
    identity = torch.nn.Identity()
    if name.startswith("resnet") or name == "inception_v3":
        model.fc = identity
    elif name.startswith("densenet"):
        model.classifier = identity
    elif name == "mobilenet_v2":
        model.classifier = identity
    elif name == "vgg19":
        model.classifier[6] = identity
    elif name == "squeezenet1_1":
        return model.features
    return model


def save_state(model, path):
    torch.save({k: v for k, v in model.state_dict().items()}, path)


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--out", required=True, type=pathlib.Path)
    parser.add_argument("--models", nargs="*", default=sorted(MODELS), choices=sorted(MODELS))
    parser.add_argument("--random", action="store_true", help="untrained weights, no download")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--reference", action="store_true", help="also write <name>.ref.pt")
    parser.add_argument("--chexnet", type=pathlib.Path, help="CheXNet checkpoint to convert to chexnet.pt")
    args = parser.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    for name in args.models:
        torch.manual_seed(args.seed)
        model = build(name, args.random)
        save_state(model, args.out / f"{name}.pt")
        if args.reference:
            side = MODELS[name][1]
            generator = torch.Generator().manual_seed(args.seed + 1)
            x = torch.randn(2, 3, side, side, generator=generator)
            with torch.no_grad():
                y = strip_head(name, model)(x)
            torch.save({"input": x, "features": y}, args.out / f"{name}.ref.pt")
        print(f"wrote {args.out / (name + '.pt')}", file=sys.stderr)

    if args.chexnet:
        blob = torch.load(args.chexnet, map_location="cpu", weights_only=False)
        state = blob.get("state_dict", blob)
        torch.save({k: v for k, v in state.items() if torch.is_tensor(v)}, args.out / "chexnet.pt")
        print(f"wrote {args.out / 'chexnet.pt'}", file=sys.stderr)


if __name__ == "__main__":
    main()
