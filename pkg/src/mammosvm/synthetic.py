"""Seeded synthetic image fixture for end-to-end runs without real data.

Each image is a bright disc on a dark background so background cropping
finds one obvious foreground component. Inside the disc a sinusoidal
grating carries the class signal: benign discs get a low-frequency,
low-amplitude grating and malignant discs a high-frequency,
high-amplitude one, so texture features separate the classes linearly
by a wide margin while per-image jitter (phase, orientation, frequency,
pixel noise) keeps samples distinct.

Manifest geometry follows the dataset conventions, including the
bottom-left y origin for ROI centers.
"""
import math
from dataclasses import dataclass

import numpy as np

from .dataset import (
    Abnormality,
    GrayImage,
    Label,
    Roi,
    SampleRecord,
    Tissue,
    save_pgm,
    write_manifest,
)


@dataclass(frozen=True)
class FixtureSpec:
    size: int = 112
    disc_radius: int = 40
    roi_radius: int = 24
    per_class: int = 60
    seed: int = 7
    background: float = 10.0
    foreground: float = 150.0
    benign_freq: float = 0.10
    malignant_freq: float = 0.26
    benign_amp: float = 34.0
    malignant_amp: float = 46.0

    def __post_init__(self):
        if self.per_class < 1:
            raise ValueError("per_class must be at least 1")
        if not 0 < 2 * self.roi_radius <= self.disc_radius * math.sqrt(2.0):
            raise ValueError("roi must fit inside the disc")
        if self.disc_radius * 2 >= self.size:
            raise ValueError("disc must fit inside the image")


_TISSUE_CYCLE = (Tissue.FATTY, Tissue.FATTY_GLANDULAR, Tissue.DENSE_GLANDULAR)
_ABNORM_CYCLE = {
    Label.BENIGN: (Abnormality.CIRC, Abnormality.MISC, Abnormality.ASYM),
    Label.MALIGNANT: (Abnormality.SPIC, Abnormality.ARCH, Abnormality.MISC),
}


def _render(spec: FixtureSpec, label: Label, rng) -> GrayImage:
    n = spec.size
    center = n // 2
    yy, xx = np.mgrid[0:n, 0:n]
    disc = (xx - center) ** 2 + (yy - center) ** 2 <= spec.disc_radius**2

    if label is Label.BENIGN:
        freq, amp = spec.benign_freq, spec.benign_amp
    else:
        freq, amp = spec.malignant_freq, spec.malignant_amp
    freq *= 1.0 + rng.normal(0.0, 0.03)
    theta = rng.normal(0.0, 0.12)
    phase = rng.uniform(0.0, 2.0 * math.pi)
    axis = xx * math.cos(theta) + yy * math.sin(theta)
    grating = amp * np.sin(2.0 * math.pi * freq * axis + phase)

    img = spec.background + rng.normal(0.0, 2.5, size=(n, n))
    img[disc] = spec.foreground + grating[disc] + rng.normal(0.0, 2.0, size=int(disc.sum()))
    return GrayImage(np.clip(np.rint(img), 0, 255).astype(np.uint8))


def generate_fixture(spec: FixtureSpec = FixtureSpec()):
    """Deterministic list of (record, image), classes interleaved B,M,B,M,…"""
    rng = np.random.default_rng(spec.seed)
    center = spec.size // 2
    # manifest y counts from the bottom-left corner
    roi = Roi(center, spec.size - 1 - center, spec.roi_radius)
    out = []
    for i in range(2 * spec.per_class):
        label = Label.BENIGN if i % 2 == 0 else Label.MALIGNANT
        record = SampleRecord(
            id=f"syn{i:03d}",
            tissue=_TISSUE_CYCLE[i % 3],
            abnormality=_ABNORM_CYCLE[label][(i // 2) % 3],
            label=label,
            roi=roi,
        )
        out.append((record, _render(spec, label, rng)))
    return out


def write_fixture(directory, spec: FixtureSpec = FixtureSpec()):
    """Write <id>.pgm per sample plus manifest.txt; returns the manifest path."""
    samples = generate_fixture(spec)
    for record, image in samples:
        save_pgm(directory / f"{record.id}.pgm", image)
    manifest_path = directory / "manifest.txt"
    write_manifest(manifest_path, [record for record, _ in samples])
    return manifest_path
