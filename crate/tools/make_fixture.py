"""Builds the bundled test fixtures for the core crate.

Writes
  crates/core/fixtures/images/*.png   four 96x96 RGB images (32x32 sources upscaled x3, bilinear)
  crates/core/fixtures/model.sfrw     a small pre-trained Table-I autoencoder

The training data are random crops of the sample photographs shipped with
scikit-image, prepared the same way as CIFAR-10 inputs (32x32, then bilinear
upscale to 96x96). This is a fixture generator, not the full trainer: it uses
the MSE term only (no classification head) and a short schedule.

Usage: python3 tools/make_fixture.py [--steps N] [--seed S]
"""

import argparse
import os
import struct

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F
from PIL import Image
import skimage.data as skd

ROOT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "crates", "core", "fixtures")

TRAIN_SOURCES = ["astronaut", "chelsea", "coffee", "rocket", "immunohistochemistry",
                 "colorwheel", "retina", "hubble_deep_field"]
MINI_SET = [("astronaut", (30, 170, 200)), ("chelsea", (40, 120, 220)),
            ("coffee", (60, 170, 260)), ("rocket", (120, 240, 260))]


def to_96(patch):
    """uint8 HxWx3 patch -> float32 3x96x96 via 32x32 area downsample + bilinear x3."""
    small = Image.fromarray(patch).resize((32, 32), Image.BOX)
    t = torch.from_numpy(np.asarray(small, dtype=np.float32) / 255.0).permute(2, 0, 1)[None]
    up = F.interpolate(t, size=(96, 96), mode="bilinear", align_corners=False)
    return up[0].clamp(0, 1)


def random_crops(rng, count):
    photos = [getattr(skd, n)() for n in TRAIN_SOURCES]
    out = []
    for _ in range(count):
        p = photos[rng.integers(len(photos))]
        h, w, _ = p.shape
        s = int(rng.integers(48, min(h, w, 320)))
        y = int(rng.integers(0, h - s + 1))
        x = int(rng.integers(0, w - s + 1))
        crop = p[y:y + s, x:x + s]
        if rng.random() < 0.5:
            crop = crop[:, ::-1]
        out.append(to_96(np.ascontiguousarray(crop)))
    return torch.stack(out)


class Codec(nn.Module):
    def __init__(self):
        super().__init__()
        self.enc = nn.ModuleList([
            nn.Conv2d(3, 16, 2, 1), nn.Conv2d(16, 16, 3, 2), nn.Conv2d(16, 16, 3, 2)])
        self.dec = nn.ModuleList([
            nn.ConvTranspose2d(16, 16, 3, 2), nn.ConvTranspose2d(16, 16, 3, 2),
            nn.ConvTranspose2d(16, 3, 2, 1)])

    def encode(self, x):
        for layer in self.enc:
            x = F.relu(layer(x))
        return x

    def decode(self, z):
        for i, layer in enumerate(self.dec):
            z = layer(z)
            z = torch.sigmoid(z) if i == len(self.dec) - 1 else F.relu(z)
        return z

    def forward(self, x):
        return self.decode(self.encode(x))


def export(model, clip_min, clip_max, sigma_s, path):
    layers = [(0, l) for l in model.enc] + [(1, l) for l in model.dec]
    buf = bytearray(b"SFRW")
    buf += struct.pack("<II", 1, len(layers))
    for kind, l in layers:
        w = l.weight.detach().cpu().numpy().astype("<f4")
        if kind == 1:
            w = np.ascontiguousarray(w.transpose(1, 0, 2, 3))  # (in,out,..) -> (out,in,..)
        out_ch, in_ch, kh, kw = w.shape
        buf += struct.pack("<B5I", kind, in_ch, out_ch, kh, kw, l.stride[0])
        buf += w.tobytes()
        buf += l.bias.detach().cpu().numpy().astype("<f4").tobytes()
    buf += struct.pack("<3f", clip_min, clip_max, sigma_s)
    tmp = path + ".tmp"
    with open(tmp, "wb") as f:
        f.write(buf)
    os.replace(tmp, path)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=3000)
    ap.add_argument("--batch", type=int, default=32)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    torch.manual_seed(args.seed)
    rng = np.random.default_rng(args.seed)
    torch.set_num_threads(1)

    os.makedirs(os.path.join(ROOT, "images"), exist_ok=True)
    for i, (name, (y, x, s)) in enumerate(MINI_SET):
        p = getattr(skd, name)()[y:y + s, x:x + s]
        img = (to_96(np.ascontiguousarray(p)).permute(1, 2, 0).numpy() * 255.0).round().astype(np.uint8)
        Image.fromarray(img).save(os.path.join(ROOT, "images", f"{i}_{name}.png"))

    train = random_crops(rng, 4000)
    held = random_crops(np.random.default_rng(args.seed + 1), 256)
    model = Codec()
    opt = torch.optim.Adam(model.parameters(), lr=1e-3)
    for step in range(args.steps):
        idx = torch.from_numpy(rng.integers(0, len(train), args.batch))
        x = train[idx]
        loss = 1.5 * F.mse_loss(model(x), x)
        opt.zero_grad()
        loss.backward()
        opt.step()
        if step % 250 == 0:
            print(f"step {step} loss {loss.item():.6f}", flush=True)

    with torch.no_grad():
        z = torch.cat([model.encode(train[i:i + 256]) for i in range(0, 1024, 256)]).flatten().numpy()
        clip_min = float(np.percentile(z, 0.1))
        clip_max = float(np.percentile(z, 99.9))
        rec = model(held)
        sigma_s = float(torch.sqrt(F.mse_loss(rec, held)).item())
    print(f"clip=[{clip_min:.5f}, {clip_max:.5f}] sigma_s={sigma_s:.5f}")
    export(model, clip_min, clip_max, sigma_s, os.path.join(ROOT, "model.sfrw"))


if __name__ == "__main__":
    main()
