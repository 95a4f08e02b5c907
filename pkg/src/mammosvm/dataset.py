"""Dataset layer: grayscale images, manifest records, train/test splits.

Images are 8-bit grayscale rasters read from binary PGM (P5). Records come
from a whitespace-delimited manifest in the MIAS style:

    id  tissue(F/G/D)  abnormality  [severity(B/M)  [x y radius]]

NORM lines carry no severity and no geometry. Abnormal lines carry both.
"""
import random
from dataclasses import dataclass
from enum import Enum

import numpy as np


class PgmError(ValueError):
    """Malformed PGM input."""


class ManifestError(ValueError):
    """Malformed manifest line; message carries the 1-based line number."""


class SplitError(ValueError):
    """Split cannot be formed (e.g. a class is empty)."""


class Tissue(Enum):
    FATTY = "F"
    FATTY_GLANDULAR = "G"
    DENSE_GLANDULAR = "D"


class Abnormality(Enum):
    CALC = "CALC"
    CIRC = "CIRC"
    SPIC = "SPIC"
    MISC = "MISC"
    ARCH = "ARCH"
    ASYM = "ASYM"
    NORM = "NORM"


class Label(Enum):
    BENIGN = "B"
    MALIGNANT = "M"
    NONE = "NONE"


@dataclass(frozen=True)
class GrayImage:
    """Rectangular 8-bit grayscale raster.

    pixels is a read-only 2-D uint8 array of shape (height, width), row
    major. Row 0 is the top of the image.
    """

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError("image must be a non-empty 2-D array")
        if arr.dtype != np.uint8:
            if np.any((arr < 0) | (arr > 255)):
                raise ValueError("intensities must lie in [0, 255]")
            arr = arr.astype(np.uint8)
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "pixels", arr)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class Roi:
    """Abnormality geometry; center uses the MIAS bottom-left origin."""

    center_x: int
    center_y: int
    radius: int

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("roi radius must be positive")


@dataclass(frozen=True)
class SampleRecord:
    id: str
    tissue: Tissue
    abnormality: Abnormality
    label: Label
    roi: Roi | None = None

    def __post_init__(self):
        normal = self.abnormality is Abnormality.NORM
        if normal != (self.label is Label.NONE and self.roi is None):
            raise ValueError(
                "NORM records must carry no label and no roi; abnormal records must"
            )


@dataclass(frozen=True)
class SplitSpec:
    seed: int
    train_fraction: float
    stratified: bool = True

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")


def parse_pgm(data: bytes) -> GrayImage:
    """Decode a binary PGM (P5, maxval <= 255) exactly, no rescaling.

    Comment lines (# ... newline) are permitted anywhere in the header.
    """
    pos = 0
    n = len(data)

    def next_token() -> bytes:
        nonlocal pos
        while pos < n:
            c = data[pos : pos + 1]
            if c == b"#":
                while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                    pos += 1
            elif c.isspace():
                pos += 1
            else:
                break
        start = pos
        while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise PgmError("truncated header")
        return data[start:pos]

    magic = next_token()
    if magic != b"P5":
        raise PgmError(f"unsupported magic {magic!r}; only binary PGM (P5) is accepted")

    fields = []
    for name in ("width", "height", "maxval"):
        tok = next_token()
        try:
            value = int(tok)
        except ValueError:
            raise PgmError(f"non-numeric {name} field {tok!r}") from None
        fields.append(value)
    width, height, maxval = fields
    if width <= 0 or height <= 0:
        raise PgmError("dimensions must be positive")
    if maxval > 255:
        raise PgmError(f"maxval {maxval} exceeds 255; deeper images are rejected")
    if maxval <= 0:
        raise PgmError("maxval must be positive")

    pos += 1  # single whitespace byte separates header from raster
    raster = data[pos : pos + width * height]
    if len(raster) < width * height:
        raise PgmError(
            f"truncated pixel data: expected {width * height} bytes, got {len(raster)}"
        )
    pixels = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
    return GrayImage(pixels)


def encode_pgm(img: GrayImage) -> bytes:
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.pixels.tobytes()


def load_pgm(path) -> GrayImage:
    with open(path, "rb") as fh:
        return parse_pgm(fh.read())


def save_pgm(path, img: GrayImage) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_pgm(img))


_TISSUE_CODES = {t.value: t for t in Tissue}
_ABNORMALITY_CODES = {a.value: a for a in Abnormality}
_SEVERITY_CODES = {"B": Label.BENIGN, "M": Label.MALIGNANT}


def parse_manifest(text: str) -> list[SampleRecord]:
    """Parse manifest text into records; raises ManifestError with line numbers.

    Images with several abnormality lines yield one record per line, all
    sharing the image id.
    """
    records = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()

        def fail(msg: str):
            raise ManifestError(f"line {lineno}: {msg}")

        if len(parts) < 3:
            fail(f"expected at least 'id tissue abnormality', got {line!r}")
        rec_id, tissue_code, abnorm_code = parts[0], parts[1], parts[2]
        tissue = _TISSUE_CODES.get(tissue_code)
        if tissue is None:
            fail(f"unknown tissue code {tissue_code!r}")
        abnormality = _ABNORMALITY_CODES.get(abnorm_code)
        if abnormality is None:
            fail(f"unknown abnormality code {abnorm_code!r}")

        if abnormality is Abnormality.NORM:
            if len(parts) > 3:
                fail("NORM records take no severity or geometry")
            records.append(SampleRecord(rec_id, tissue, abnormality, Label.NONE))
            continue

        if len(parts) < 4:
            fail("abnormal record is missing its severity code")
        label = _SEVERITY_CODES.get(parts[3])
        if label is None:
            fail(f"unknown severity code {parts[3]!r}")
        if len(parts) < 7:
            fail("missing roi coordinates (x y radius)")
        if len(parts) > 7:
            fail(f"trailing fields {parts[7:]!r}")
        try:
            x, y, radius = (int(p) for p in parts[4:7])
        except ValueError:
            fail(f"non-integer roi fields {parts[4:7]!r}")
        try:
            roi = Roi(x, y, radius)
        except ValueError as exc:
            fail(str(exc))
        records.append(SampleRecord(rec_id, tissue, abnormality, label, roi))
    return records


def format_record(rec: SampleRecord) -> str:
    """Render a record back to its manifest line form."""
    parts = [rec.id, rec.tissue.value, rec.abnormality.value]
    if rec.label is not Label.NONE:
        parts.append(rec.label.value)
    if rec.roi is not None:
        parts += [str(rec.roi.center_x), str(rec.roi.center_y), str(rec.roi.radius)]
    return " ".join(parts)


def write_manifest(path, records) -> None:
    with open(path, "w", encoding="ascii") as fh:
        for rec in records:
            fh.write(format_record(rec) + "\n")


def split(records, spec: SplitSpec):
    """Deterministic train/test partition of the labeled records.

    NORM records are dropped (classification is benign vs malignant only).
    Stratified mode shuffles and cuts each class separately, which keeps
    per-class proportions within one sample of the requested fraction.
    """
    labeled = [r for r in records if r.label is not Label.NONE]
    by_class = {Label.BENIGN: [], Label.MALIGNANT: []}
    for rec in labeled:
        by_class[rec.label].append(rec)
    for cls, recs in by_class.items():
        if not recs:
            raise SplitError(f"empty class after filtering: no {cls.value} records")

    rng = random.Random(spec.seed)

    def cut(items):
        items = list(items)
        rng.shuffle(items)
        n_train = int(len(items) * spec.train_fraction + 0.5)
        return items[:n_train], items[n_train:]

    if spec.stratified:
        train, test = [], []
        for cls in (Label.BENIGN, Label.MALIGNANT):
            tr, te = cut(by_class[cls])
            train += tr
            test += te
    else:
        train, test = cut(labeled)
    return train, test
