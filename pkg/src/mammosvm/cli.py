"""Batch command-line surface for the classification pipeline.

Every stage reads and writes plain files under a work directory, so any
stage can be re-run or inspected on its own; re-running a stage with
unchanged inputs produces byte-identical outputs (nothing here depends
on time or machine state, only on the seed).

Commands: synth, preprocess, extract, weights, kernel, train, predict,
evaluate, pipeline. Options resolve as: command-line flag, else
config-file entry (flat key=value lines), else built-in default.

Exit codes: 0 success, 1 validation error, 2 runtime error (I/O,
non-convergence).
"""
import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import dataset, features, kernel, metrics, preprocess, svm, synthetic, weighting
from .dataset import Label, SplitSpec
from .kernel import KernelMode

log = logging.getLogger("mammosvm")

ROI_DIR = "roi"
PREPROCESS_LOG = "preprocess.log"
TRAIN_SPLIT = "train_split.txt"
TEST_SPLIT = "test_split.txt"
SPLIT_LOG = "split.log"
TRAIN_FEATURES = "train_features.csv"
TEST_FEATURES = "test_features.csv"
NORM_STATS = "norm_stats.txt"
WEIGHTS = "weights.txt"
TRAIN_KERNEL = "train_kernel.txt"
TEST_KERNEL = "test_kernel.txt"
MODEL = "model.txt"
PREDICTIONS = "predictions.csv"
REPORT_TXT = "report.txt"
REPORT_CSV = "report.csv"

CLASSIFIERS = (
    "svm-linear",
    "svm-poly",
    "svm-rbf",
    "wfsvm-plain",
    "wfsvm-weighted-diagonal",
    "wfsvm-full-weighted",
)


def load_config(path) -> dict:
    """Flat key=value file; blank lines and #-comments are ignored."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="ascii").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
        out[key.strip()] = value.strip()
    return out


class Settings:
    """Option resolution: explicit flag > config entry > default."""

    def __init__(self, args, config):
        self.args = args
        self.config = config

    def get(self, key, default=None, cast=str):
        value = getattr(self.args, key, None)
        if value is not None:
            return value
        if key in self.config:
            raw = self.config[key]
            if cast is bool:
                return raw.lower() in ("1", "true", "yes", "on")
            return cast(raw)
        return default

    def path(self, key, default=None) -> Path:
        value = self.get(key, default)
        if value is None:
            flag = "--" + key.replace("_", "-")
            raise ValueError(f"missing required setting {key!r} (set {flag} or config)")
        return Path(value)

    @property
    def work(self) -> Path:
        return self.path("work_dir", "work")

    @property
    def seed(self) -> int:
        return self.get("seed", 0, int)


def keyed_labeled_records(records):
    """Pair labeled records with unique sample keys, in manifest order.

    An image with several abnormality lines repeats its id; the second
    and later records get an _1, _2, ... suffix so every sample maps to
    its own ROI file and feature row.
    """
    counts, used, out = {}, set(), []
    for rec in records:
        if rec.label is Label.NONE:
            continue
        n = counts.get(rec.id, 0)
        counts[rec.id] = n + 1
        key = rec.id if n == 0 else f"{rec.id}_{n}"
        if key in used:
            raise ValueError(f"derived sample key {key!r} collides with a record id")
        used.add(key)
        out.append((key, rec))
    return out


def _read_manifest(path) -> list:
    try:
        text = Path(path).read_text(encoding="ascii")
    except OSError as exc:
        raise OSError(f"cannot read manifest: {exc}") from None
    return dataset.parse_manifest(text)


def _groups(s: Settings) -> tuple:
    raw = s.get("groups", "statistical,texture,clinical")
    return features.check_groups(g.strip() for g in raw.split(",") if g.strip())


def _classifier(s: Settings) -> str:
    name = s.get("classifier", "svm-linear")
    if name not in CLASSIFIERS:
        raise ValueError(f"unknown classifier {name!r}; choose one of {', '.join(CLASSIFIERS)}")
    return name


def _train_config(s: Settings) -> svm.TrainConfig:
    return svm.TrainConfig(
        C=s.get("c", 1.0, float),
        tolerance=s.get("tolerance", 1e-3, float),
        max_passes=s.get("max_passes", 10_000, int),
        seed=s.seed,
    )


def _raw_spec(variant: str, s: Settings) -> svm.KernelSpec:
    if variant == "linear":
        return svm.KernelSpec.linear()
    if variant == "poly":
        return svm.KernelSpec.poly(
            degree=s.get("degree", 3, int),
            coef0=s.get("coef0", 0.0, float),
            gamma=s.get("gamma", 1.0, float),
        )
    return svm.KernelSpec.rbf(gamma=s.get("gamma", 1.0, float))


def _split_by_label(vectors):
    benign = [v for v in vectors if v.label is Label.BENIGN]
    malignant = [v for v in vectors if v.label is Label.MALIGNANT]
    return benign, malignant


def _fit_weights(train_vectors, s: Settings):
    benign, malignant = _split_by_label(train_vectors)
    deviations = weighting.estimate_deviation(benign, malignant)
    return weighting.solve_weights(deviations, s.get("weight_norm", "l1"))


def stage_synth(s: Settings) -> None:
    out_dir = s.path("out", s.work / "images")
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = synthetic.FixtureSpec(
        size=s.get("size", 112, int),
        disc_radius=s.get("disc_radius", 40, int),
        roi_radius=s.get("roi_radius", 24, int),
        per_class=s.get("per_class", 60, int),
        seed=s.seed if s.get("seed") is not None else 7,
    )
    manifest = synthetic.write_fixture(out_dir, spec)
    print(f"synth: {2 * spec.per_class} images and {manifest.name} -> {out_dir}")


def stage_preprocess(s: Settings) -> None:
    images_dir = s.path("images", s.work / "images")
    manifest = s.path("manifest", images_dir / "manifest.txt")
    window = s.get("median_window", 3, int)
    side = s.get("roi_side", 48, int)
    density = s.get("noise_density", 0.0, float)
    noise_seed = s.get("noise_seed", s.seed, int)
    threshold = None if s.get("otsu", False, bool) else s.get("threshold", None, int)
    roi_dir = s.work / ROI_DIR
    roi_dir.mkdir(parents=True, exist_ok=True)

    median = preprocess.MedianSpec(window)
    pairs = keyed_labeled_records(_read_manifest(manifest))
    log_lines = [
        f"median_window {window}",
        f"roi_side {side}",
        f"noise_density {density!r}",
        f"threshold {'otsu' if threshold is None else threshold}",
        f"records {len(pairs)}",
    ]
    for key, rec in pairs:
        image_path = images_dir / f"{rec.id}.pgm"
        try:
            img = dataset.load_pgm(image_path)
        except OSError as exc:
            raise OSError(f"record {key}: cannot read {image_path}: {exc}") from None
        if density > 0.0:
            img = preprocess.add_salt_pepper(img, density, noise_seed)
        filtered = preprocess.median_filter(img, median)
        crop = preprocess.crop_background(filtered, threshold)
        shifted = preprocess.shift_roi_record(rec, crop, src_height=filtered.height)
        roi = preprocess.extract_roi(crop.image, shifted, side)
        dataset.save_pgm(roi_dir / f"{key}.pgm", roi)
        log_lines.append(f"{key} crop_offset {crop.offset[0]} {crop.offset[1]}")
        log.info("preprocess %s: crop offset %s", key, crop.offset)
    (s.work / PREPROCESS_LOG).write_text("\n".join(log_lines) + "\n", encoding="ascii")
    print(f"preprocess: {len(pairs)} rois -> {roi_dir}")


def stage_extract(s: Settings) -> None:
    manifest = s.path("manifest", s.path("images", s.work / "images") / "manifest.txt")
    roi_dir = s.work / ROI_DIR
    groups = _groups(s)
    split_spec = SplitSpec(s.seed, s.get("train_fraction", 0.5, float), stratified=True)

    pairs = keyed_labeled_records(_read_manifest(manifest))
    keyed = [rec if key == rec.id else replace(rec, id=key) for key, rec in pairs]
    train_recs, test_recs = dataset.split(keyed, split_spec)
    dataset.write_manifest(s.work / TRAIN_SPLIT, train_recs)
    dataset.write_manifest(s.work / TEST_SPLIT, test_recs)

    def class_counts(records):
        benign = sum(1 for r in records if r.label is Label.BENIGN)
        return benign, len(records) - benign

    counts = class_counts(train_recs) + class_counts(test_recs)
    (s.work / SPLIT_LOG).write_text(
        f"seed {split_spec.seed}\n"
        f"train_fraction {split_spec.train_fraction!r}\n"
        f"stratified {str(split_spec.stratified).lower()}\n"
        "train_benign {0}\ntrain_malignant {1}\n"
        "test_benign {2}\ntest_malignant {3}\n".format(*counts),
        encoding="ascii",
    )

    def vectors_for(records):
        out = []
        for rec in records:
            roi_path = roi_dir / f"{rec.id}.pgm"
            try:
                img = dataset.load_pgm(roi_path)
            except OSError as exc:
                raise OSError(f"record {rec.id}: cannot read {roi_path}: {exc}") from None
            out.append(features.extract_features(rec, img, groups))
        return out

    train_vecs, stats = features.normalize(vectors_for(train_recs))
    test_vecs, _ = features.normalize(vectors_for(test_recs), stats)
    features.write_features_csv(s.work / TRAIN_FEATURES, train_vecs)
    features.write_features_csv(s.work / TEST_FEATURES, test_vecs)
    features.write_norm_stats(s.work / NORM_STATS, stats)
    log.info("extract: %d train / %d test, %d features", len(train_vecs), len(test_vecs),
             len(stats.schema))
    print(
        f"extract: {len(train_vecs)} train / {len(test_vecs)} test rows "
        f"({len(stats.schema)} features) -> {s.work}"
    )


def stage_weights(s: Settings) -> None:
    train_vecs = features.read_features_csv(s.work / TRAIN_FEATURES)
    w = _fit_weights(train_vecs, s)
    weighting.write_weights(s.work / WEIGHTS, train_vecs[0].schema, w)
    print(f"weights: {len(w)} feature weights -> {s.work / WEIGHTS}")


def _stored_weights(s: Settings, mode: KernelMode):
    if mode is KernelMode.PLAIN:
        return None
    _, w = weighting.read_weights(s.work / WEIGHTS)
    return w


def stage_kernel(s: Settings) -> None:
    mode = KernelMode(s.get("kernel_mode", "plain"))
    train_vecs = features.read_features_csv(s.work / TRAIN_FEATURES)
    test_vecs = features.read_features_csv(s.work / TEST_FEATURES)
    matrix = kernel.build_train_matrix(train_vecs, mode, _stored_weights(s, mode))
    rows = kernel.build_test_rows(test_vecs, train_vecs)
    (s.work / TRAIN_KERNEL).write_text(kernel.write_precomputed(matrix), encoding="ascii")
    (s.work / TEST_KERNEL).write_text(kernel.write_test_rows(rows), encoding="ascii")
    print(f"kernel: {matrix.size}x{matrix.size} {mode.value} matrix + "
          f"{len(rows)} test rows -> {s.work}")


def stage_train(s: Settings) -> None:
    name = _classifier(s)
    family, _, variant = name.partition("-")
    config = _train_config(s)
    stats_path = s.work / NORM_STATS
    stats = features.read_norm_stats(stats_path) if stats_path.exists() else None

    if family == "svm":
        train_vecs = features.read_features_csv(s.work / TRAIN_FEATURES)
        model = svm.train(train_vecs, config, _raw_spec(variant, s), norm_stats=stats)
    else:
        mode = KernelMode(variant)
        matrix = kernel.read_train_matrix(
            (s.work / TRAIN_KERNEL).read_text(encoding="ascii"),
            mode,
            _stored_weights(s, mode),
        )
        model = svm.train(matrix, config, norm_stats=stats)
    (s.work / MODEL).write_text(svm.save_model(model), encoding="ascii")
    log.info("train: %s, %d support vectors, bias %.6g", name, model.support_count,
             model.bias)
    print(f"train: {name}, {model.support_count} support vectors -> {s.work / MODEL}")


def _predictions(model, test_vecs, s: Settings):
    """(id, truth, Prediction) triples for the test split."""
    if model.kernel.kind is svm.KernelKind.PRECOMPUTED:
        rows = kernel.read_test_rows((s.work / TEST_KERNEL).read_text(encoding="ascii"))
        if len(rows) != len(test_vecs):
            raise ValueError(
                f"{TEST_KERNEL} has {len(rows)} rows but {TEST_FEATURES} has "
                f"{len(test_vecs)}; re-run the kernel stage"
            )
        queries = rows
    else:
        if model.schema is not None:
            test_vecs = features.select_features(test_vecs, model.schema)
        queries = test_vecs
    return [
        (v.id, v.label, svm.predict(model, q)) for v, q in zip(test_vecs, queries)
    ]


def stage_predict(s: Settings) -> None:
    model = svm.load_model((s.work / MODEL).read_text(encoding="ascii"))
    test_vecs = features.read_features_csv(s.work / TEST_FEATURES)
    triples = _predictions(model, test_vecs, s)
    lines = ["id,predicted,decision"]
    lines += [f"{sid},{p.label.value},{p.decision_value!r}" for sid, _, p in triples]
    (s.work / PREDICTIONS).write_text("\n".join(lines) + "\n", encoding="ascii")
    print(f"predict: {len(triples)} samples -> {s.work / PREDICTIONS}")


def _grid_cell(train_vecs, test_vecs, groups, name, s: Settings):
    """Train/score one (feature set, classifier) cell in memory."""
    schema = features.group_schema(groups)
    tr = features.select_features(train_vecs, schema)
    te = features.select_features(test_vecs, schema)
    config = _train_config(s)
    family, _, variant = name.partition("-")
    if family == "svm":
        model = svm.train(tr, config, _raw_spec(variant, s))
        preds = [svm.predict(model, v) for v in te]
    else:
        mode = KernelMode(variant)
        w = None if mode is KernelMode.PLAIN else _fit_weights(tr, s)
        model = svm.train(kernel.build_train_matrix(tr, mode, w), config)
        preds = [svm.predict(model, row) for row in kernel.build_test_rows(te, tr)]
    cm = metrics.from_pairs((v.label, p.label) for v, p in zip(te, preds))
    return metrics.ReportRow("+".join(groups), name, metrics.report(cm, model))


def _write_report(rows, s: Settings) -> None:
    table = metrics.render_table(rows)
    (s.work / REPORT_TXT).write_text(table, encoding="ascii")
    (s.work / REPORT_CSV).write_text(metrics.render_csv(rows), encoding="ascii")
    sys.stdout.write(table)


def stage_evaluate(s: Settings) -> None:
    feature_sets = [
        features.check_groups(g.strip() for g in chunk.split(",") if g.strip())
        for chunk in s.get(
            "feature_sets", "statistical;texture;statistical,texture,clinical"
        ).split(";")
        if chunk.strip()
    ]
    names = [c.strip() for c in s.get(
        "classifiers", "svm-linear;wfsvm-plain;wfsvm-weighted-diagonal"
    ).split(";") if c.strip()]
    for name in names:
        if name not in CLASSIFIERS:
            raise ValueError(f"unknown classifier {name!r} in grid")
    if not feature_sets or not names:
        raise ValueError("the evaluation grid must name at least one cell")

    train_vecs = features.read_features_csv(s.work / TRAIN_FEATURES)
    test_vecs = features.read_features_csv(s.work / TEST_FEATURES)
    rows = []
    for groups in feature_sets:
        for name in names:
            log.info("evaluate: %s x %s", "+".join(groups), name)
            rows.append(_grid_cell(train_vecs, test_vecs, groups, name, s))
    _write_report(rows, s)


def stage_pipeline(s: Settings) -> None:
    name = _classifier(s)
    stage_preprocess(s)
    stage_extract(s)
    family, _, variant = name.partition("-")
    if family == "wfsvm":
        if KernelMode(variant) is not KernelMode.PLAIN:
            stage_weights(s)
        setattr(s.args, "kernel_mode", variant)
        stage_kernel(s)
    stage_train(s)
    stage_predict(s)

    model = svm.load_model((s.work / MODEL).read_text(encoding="ascii"))
    test_vecs = features.read_features_csv(s.work / TEST_FEATURES)
    triples = _predictions(model, test_vecs, s)
    cm = metrics.from_pairs((truth, p.label) for _, truth, p in triples)
    row = metrics.ReportRow("+".join(_groups(s)), name, metrics.report(cm, model))
    _write_report([row], s)


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; this surface defines that as 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mammosvm", description=__doc__.split("\n\n")[0])
    parser.add_argument("--config", help="flat key=value settings file")
    parser.add_argument("--seed", type=int, help="RNG seed for splits and training")
    parser.add_argument("--work-dir", help="stage artifact directory (default: work)")
    parser.add_argument("--verbose", action="store_true", help="log stage progress")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def cmd(name, help_text, handler):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(handler=handler)
        return p

    p = cmd("synth", "write the bundled synthetic image fixture", stage_synth)
    p.add_argument("--out", help="output directory (default: WORK/images)")
    p.add_argument("--per-class", type=int, help="images per class (default 60)")
    p.add_argument("--size", type=int, help="image side in pixels (default 112)")
    p.add_argument("--disc-radius", type=int, help="foreground disc radius (default 40)")
    p.add_argument("--roi-radius", type=int, help="manifest roi radius (default 24)")

    p = cmd("preprocess", "denoise, crop background, cut ROIs", stage_preprocess)
    p.add_argument("--images", help="source image directory")
    p.add_argument("--manifest", help="manifest file (default: IMAGES/manifest.txt)")
    p.add_argument("--median-window", type=int, help="median filter window (default 3)")
    p.add_argument("--roi-side", type=int, help="square ROI side (default 48)")
    p.add_argument("--noise-density", type=float,
                   help="salt-and-pepper fraction injected before denoising (default 0)")
    p.add_argument("--noise-seed", type=int, help="noise RNG seed (default: --seed)")
    seg = p.add_mutually_exclusive_group()
    seg.add_argument("--otsu", action="store_true", default=None,
                     help="binarize at Otsu's threshold (default behaviour)")
    seg.add_argument("--threshold", type=int, help="explicit binarization threshold")

    p = cmd("extract", "split and compute normalized feature CSVs", stage_extract)
    p.add_argument("--images", help=argparse.SUPPRESS)
    p.add_argument("--manifest", help="manifest file (default: IMAGES/manifest.txt)")
    p.add_argument("--groups", help="comma list of statistical,texture,clinical")
    p.add_argument("--train-fraction", type=float, help="train share (default 0.5)")

    p = cmd("weights", "fit deviation-based feature weights", stage_weights)
    p.add_argument("--weight-norm", help="l1 (sum 1, default) or l2 (unit norm)")

    p = cmd("kernel", "write precomputed train/test kernel files", stage_kernel)
    p.add_argument("--kernel-mode", help="plain, weighted-diagonal, or full-weighted")

    train_flags = cmd("train", "train an SVM / WFSVM model", stage_train)
    predict_flags = cmd("predict", "score the test split with a model", stage_predict)
    evaluate_flags = cmd("evaluate", "run the experimental grid", stage_evaluate)
    pipeline_flags = cmd("pipeline", "run every stage end to end", stage_pipeline)

    for p in (train_flags, pipeline_flags):
        p.add_argument("--classifier", help="svm-linear|svm-poly|svm-rbf|"
                                            "wfsvm-plain|wfsvm-weighted-diagonal|"
                                            "wfsvm-full-weighted")
        p.add_argument("--c", type=float, help="soft-margin penalty (default 1.0)")
        p.add_argument("--tolerance", type=float, help="KKT tolerance (default 1e-3)")
        p.add_argument("--max-passes", type=int, help="SMO iteration cap (default 10000)")
        p.add_argument("--degree", type=int, help="poly kernel degree (default 3)")
        p.add_argument("--coef0", type=float, help="poly kernel constant (default 0)")
        p.add_argument("--gamma", type=float, help="poly/rbf gamma (default 1.0)")

    for p in (evaluate_flags, pipeline_flags):
        p.add_argument("--weight-norm", help="l1 (default) or l2")
    evaluate_flags.add_argument(
        "--feature-sets", help="semicolon list of comma group lists"
    )
    evaluate_flags.add_argument("--classifiers", help="semicolon list of classifiers")
    evaluate_flags.add_argument("--c", type=float, help="soft-margin penalty")
    evaluate_flags.add_argument("--tolerance", type=float, help="KKT tolerance")
    evaluate_flags.add_argument("--max-passes", type=int, help="SMO iteration cap")
    evaluate_flags.add_argument("--degree", type=int, help=argparse.SUPPRESS)
    evaluate_flags.add_argument("--coef0", type=float, help=argparse.SUPPRESS)
    evaluate_flags.add_argument("--gamma", type=float, help=argparse.SUPPRESS)

    for p in (pipeline_flags,):
        p.add_argument("--images", help="source image directory")
        p.add_argument("--manifest", help="manifest file")
        p.add_argument("--median-window", type=int, help="median filter window")
        p.add_argument("--roi-side", type=int, help="square ROI side")
        p.add_argument("--groups", help="comma list of feature groups")
        p.add_argument("--train-fraction", type=float, help="train share")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(message)s",
    )
    try:
        config = load_config(args.config) if args.config else {}
        settings = Settings(args, config)
        settings.work.mkdir(parents=True, exist_ok=True)
        args.handler(settings)
    except ValueError as exc:
        print(f"mammosvm: error: {exc}", file=sys.stderr)
        return 1
    except (RuntimeError, OSError) as exc:
        print(f"mammosvm: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
