"""Pull activations out of a torchvision classifier.

Runs a folder of images through a named model, captures one layer's
activations, and writes them in the NPY/JSON interchange the semrsm
package reads: {prefix}.npy for the tensor, {prefix}.json for sample
and group ids, and optionally {prefix}.probs.npy with softmax rows.

The layer defaults to the input of the model's final linear head — the
last hidden layer for the common classifier layouts. Any module listed
by ``model.named_modules()`` can be requested by name instead.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import torch
from PIL import Image
from torchvision import models
from torchvision import transforms as T

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".webp"}

# used when no pretrained weights (and hence no bundled preprocessor)
# are requested: the standard ImageNet evaluation pipeline
FALLBACK_TRANSFORM = T.Compose([
    T.Resize(256),
    T.CenterCrop(224),
    T.ToTensor(),
    T.Normalize(mean=[0.485, 0.456, 0.406], std=[0.229, 0.224, 0.225]),
])


def list_images(image_dir: Path) -> list[Path]:
    paths = sorted(p for p in Path(image_dir).rglob("*")
                   if p.suffix.lower() in IMAGE_SUFFIXES)
    if not paths:
        raise FileNotFoundError(f"no images under {image_dir}")
    return paths


def build_model(model_name: str, weights: str | None):
    """Instantiate a torchvision model plus its preprocessing transform."""
    if weights is None:
        model = models.get_model(model_name, weights=None)
        return model.eval(), FALLBACK_TRANSFORM
    enum = models.get_model_weights(model_name)
    resolved = getattr(enum, weights) if weights != "DEFAULT" else enum.DEFAULT
    model = models.get_model(model_name, weights=resolved)
    return model.eval(), resolved.transforms()


def _last_linear_name(model) -> str:
    name = None
    for mod_name, mod in model.named_modules():
        if isinstance(mod, torch.nn.Linear):
            name = mod_name
    if name is None:
        raise ValueError(f"{type(model).__name__} has no linear head; "
                         "pass an explicit layer name")
    return name


def extract(model_name: str, image_dir, out_prefix, layer_name: str | None = None,
            weights: str | None = "DEFAULT", probs: bool = False,
            batch_size: int = 16) -> dict:
    """Run the images through the model and write the interchange files.

    Returns a summary dict (also what the CLI echoes): tensor shapes,
    the resolved layer, and the output paths.
    """
    model, preprocess = build_model(model_name, weights)
    modules = dict(model.named_modules())

    # hook either a named module's output, or the *input* of the final
    # linear layer (i.e. the last hidden representation)
    captured: list[torch.Tensor] = []
    if layer_name is None:
        target = _last_linear_name(model)

        def hook(_mod, inputs, _out):
            captured.append(inputs[0].detach())
    else:
        target = layer_name
        if target not in modules:
            sample = [n for n in modules if n][:10]
            raise ValueError(f"unknown layer {target!r} for {model_name}; "
                             f"named_modules() starts with {sample}")

        def hook(_mod, _inputs, out):
            captured.append(out.detach())

    handle = modules[target].register_forward_hook(hook)

    paths = list_images(Path(image_dir))
    reps, logits = [], []
    with torch.no_grad():
        for start in range(0, len(paths), batch_size):
            chunk = paths[start:start + batch_size]
            batch = torch.stack(
                [preprocess(Image.open(p).convert("RGB")) for p in chunk])
            out = model(batch)
            reps.append(captured.pop().cpu())
            if probs:
                logits.append(out.detach().cpu())
    handle.remove()

    tensor = torch.cat(reps).numpy().astype(np.float32)
    out_prefix = Path(out_prefix)
    out_prefix.parent.mkdir(parents=True, exist_ok=True)
    np.save(out_prefix.with_suffix(".npy"), tensor)

    meta = {
        "sample_ids": [p.name for p in paths],
        "group_ids": [p.parent.name for p in paths],
    }
    out_prefix.with_suffix(".json").write_text(json.dumps(meta, indent=2) + "\n")

    summary = {
        "model": model_name,
        "layer": target,
        "n": len(paths),
        "shape": list(tensor.shape),
        "out": str(out_prefix.with_suffix(".npy")),
        "probs_shape": None,
    }
    if probs:
        prob_rows = torch.softmax(torch.cat(logits), dim=1).numpy().astype(np.float32)
        probs_path = out_prefix.parent / (out_prefix.name + ".probs.npy")
        np.save(probs_path, prob_rows)
        summary["probs_shape"] = list(prob_rows.shape)
        summary["probs_out"] = str(probs_path)
    return summary


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="semrsm-extract",
        description="dump classifier activations in semrsm's NPY/JSON interchange")
    parser.add_argument("--model", required=True, help="torchvision model name")
    parser.add_argument("--images", required=True, help="directory of images")
    parser.add_argument("--out", required=True, help="output path prefix")
    parser.add_argument("--layer", default=None,
                        help="module name to capture (default: last hidden layer)")
    parser.add_argument("--weights", default="DEFAULT",
                        help="weights enum name, or 'none' for random init")
    parser.add_argument("--probs", action="store_true",
                        help="also write softmax probabilities")
    parser.add_argument("--batch-size", type=int, default=16)
    args = parser.parse_args(argv)
    weights = None if args.weights.lower() == "none" else args.weights
    try:
        summary = extract(args.model, args.images, args.out,
                          layer_name=args.layer, weights=weights,
                          probs=args.probs, batch_size=args.batch_size)
    except (ValueError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(summary), flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
