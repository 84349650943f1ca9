"""Subcommand pipeline driver: synth, decompose, features, train, classify, evaluate, spectrum.

Every subcommand reads and writes the documented plain-text formats, writes
files atomically, and is deterministic given identical inputs and seeds.
Failures print a single machine-parseable line ``error: <category>: <message>``
and exit with a category-specific code: 2 usage, 3 missing file, 4 bad format
or insufficient data, 5 domain error, 6 numerical error.
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import classifier as clf
from . import discriminant, features, signal_io, synthgen, wavelet
from .errors import (DataFormatError, DomainError, EcghfError,
                     InsufficientDataError, NumericalError)
from .spectral import dft

EXIT_USAGE = 2
EXIT_MISSING_FILE = 3
EXIT_FORMAT = 4
EXIT_DOMAIN = 5
EXIT_NUMERICAL = 6


@dataclass
class PipelineConfig:
    """Defaults shared by the pipeline stages; overridable per flag."""

    bank: str = "dmey"
    levels: int = 4
    duration_s: float = 8.0
    fragment_count: int = 2
    feature_mode: str = "standard21"   # or "extended"
    priors_mode: str = "sample"        # or "equal"
    extension_mode: str = "symmetric"

    def __post_init__(self):
        if not 1 <= self.levels <= 8:
            raise DomainError(f"levels must be in [1, 8], got {self.levels}")
        if self.feature_mode not in ("standard21", "extended"):
            raise DomainError(f"unknown feature mode {self.feature_mode!r}")
        if self.priors_mode not in ("sample", "equal"):
            raise DomainError(f"unknown priors mode {self.priors_mode!r}")


def load_config(path) -> dict:
    """Flat key=value config text; '#' starts a comment."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise DataFormatError(f"config line {lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out


def _parse_bands(text: str):
    """'center:amp:bandwidth[;...]' -> tuple of float triples."""
    bands = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(":")
        if len(parts) != 3:
            raise DataFormatError(f"bad band spec {chunk!r}, expected center:amp:bandwidth")
        bands.append(tuple(float(p) for p in parts))
    return tuple(bands)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ecghf",
        description="High-frequency wavelet features and linear classification "
                    "of multi-lead ECG records.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a labelled synthetic population")
    p.add_argument("--config", help="key=value file overriding the generator defaults")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("decompose", help="write per-lead wavelet components of a record")
    p.add_argument("record")
    p.add_argument("--bank", default="dmey")
    p.add_argument("--levels", type=int, default=4)
    p.add_argument("--mode", default="symmetric", choices=wavelet.MODES)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("features", help="extract per-fragment feature vectors")
    p.add_argument("records", nargs="+")
    p.add_argument("--bank", default="dmey")
    p.add_argument("--mode", default="symmetric", choices=wavelet.MODES)
    p.add_argument("--duration-s", type=float, default=8.0)
    p.add_argument("--count", type=int, default=2)
    p.add_argument("--extended", action="store_true",
                   help="append the extended statistics columns")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", help="fit reduction and classifier from a feature table")
    p.add_argument("features")
    p.add_argument("--out", required=True)
    p.add_argument("--priors", default="sample", choices=("sample", "equal"))
    p.add_argument("--dimensions", default="auto",
                   help="reduced dimension, or 'auto' for the 85%% information rule")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("classify", help="label feature rows and aggregate per patient")
    p.add_argument("model")
    p.add_argument("features")
    p.add_argument("--out", required=True, help="per-fragment decisions CSV")
    p.add_argument("--patients", help="per-patient summary CSV")
    p.add_argument("--per-lead-mean", action="store_true",
                   help="collapse fragments to one mean per lead before aggregating")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("evaluate", help="misclassification report and score histograms")
    p.add_argument("model")
    p.add_argument("features")
    p.add_argument("--out", required=True)
    p.add_argument("--bins", type=int, default=20)
    p.add_argument("--svg", help="also render the histograms to an SVG file")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("spectrum", help="power spectrum of one channel or lead")
    p.add_argument("record")
    p.add_argument("--channel", choices=signal_io.CHANNEL_NAMES)
    p.add_argument("--lead", choices=signal_io.LEAD_ORDER)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_spectrum)
    return parser


def cmd_synth(args) -> int:
    cfg = load_config(args.config) if args.config else {}
    shared = dict(
        rate=int(cfg.get("rate", 1028)),
        duration_s=float(cfg.get("duration_s", 30.0)),
        heart_rate_bpm=float(cfg.get("heart_rate_bpm", 60.0)),
        noise_sigma=float(cfg.get("noise_sigma", 0.01)),
        amp_jitter=float(cfg.get("amp_jitter", 0.1)),
    )
    spec1 = synthgen.SynthSpec(
        hf_bands=_parse_bands(cfg.get("class1_hf_bands", "300:0.01:80")),
        seed=int(cfg.get("seed_class1", 101)), **shared)
    spec2 = synthgen.SynthSpec(
        hf_bands=_parse_bands(cfg.get("class2_hf_bands", "300:0.1:80")),
        seed=int(cfg.get("seed_class2", 201)), **shared)
    n1 = int(cfg.get("subjects_class1", 4))
    n2 = int(cfg.get("subjects_class2", 5))
    records = synthgen.generate_population(spec1, spec2, (n1, n2))
    os.makedirs(args.out_dir, exist_ok=True)
    manifest = ["subject_id,label,path"]
    for record in records:
        path = os.path.join(args.out_dir, f"{record.subject_id}.csv")
        signal_io.write_record(record, path)
        manifest.append(f"{record.subject_id},{record.group_label},{path}")
    signal_io.atomic_write_text(os.path.join(args.out_dir, "population.csv"),
                                "\n".join(manifest) + "\n")
    print(f"wrote {len(records)} records to {args.out_dir}")
    return 0


def cmd_decompose(args) -> int:
    bank = wavelet.load_bank(args.bank)
    record = signal_io.load_record(args.record)
    leads = signal_io.derive_leads(record)
    os.makedirs(args.out_dir, exist_ok=True)
    stem = record.subject_id
    manifest = ["lead,band,coefficient_length,original_length,mode,bank"]
    for lead in signal_io.LEAD_ORDER:
        tree = wavelet.wavedec(leads.leads[lead], args.levels, bank, args.mode)
        bands = tree.band_names()
        components = {band: wavelet.reconstruct_component(tree, band, bank)
                      for band in bands}
        for band in bands:
            coeffs = (tree.approximation if band.startswith("A")
                      else tree.details[int(band[1:]) - 1])
            manifest.append(f"{lead},{band},{len(coeffs)},{tree.original_length},"
                            f"{tree.mode},{bank.name}")
        lines = ["sample," + ",".join(f"rec{b.lower()}" for b in bands)]
        for i in range(tree.original_length):
            lines.append(str(i) + "," +
                         ",".join(repr(float(components[b][i])) for b in bands))
        signal_io.atomic_write_text(
            os.path.join(args.out_dir, f"{stem}_{lead}_components.csv"),
            "\n".join(lines) + "\n")
    signal_io.atomic_write_text(os.path.join(args.out_dir, f"{stem}_coefficients.csv"),
                                "\n".join(manifest) + "\n")
    print(f"wrote {len(signal_io.LEAD_ORDER)} component files to {args.out_dir}")
    return 0


def cmd_features(args) -> int:
    bank = wavelet.load_bank(args.bank)
    vectors = []
    extras = [] if args.extended else None
    for path in args.records:
        record = signal_io.load_record(path)
        leads = signal_io.derive_leads(record)
        fragments = signal_io.extract_fragments(leads, args.duration_s, args.count)
        for fragment in fragments:
            if args.extended:
                fv, extra = features.fragment_features(fragment, bank, args.mode,
                                                       extended=True)
                extras.append(extra)
            else:
                fv = features.fragment_features(fragment, bank, args.mode)
            vectors.append(fv)
    metadata = {"bank": bank.name, "mode": args.mode, "levels": 4,
                "duration_s": args.duration_s, "fragment_count": args.count,
                "feature_mode": "extended" if args.extended else "standard21"}
    features.write_feature_table(args.out, vectors, extras, metadata)
    print(f"wrote {len(vectors)} feature rows to {args.out}")
    return 0


def _labelled_matrix(vectors):
    labelled = [fv for fv in vectors if fv.group_label != "unlabeled"]
    if len(labelled) != len(vectors):
        raise DomainError(
            f"{len(vectors) - len(labelled)} feature rows are unlabeled")
    X = np.array([fv.values for fv in labelled])
    labels = [fv.group_label for fv in labelled]
    return X, labels


def cmd_train(args) -> int:
    vectors, table_meta = features.read_feature_table(args.features)
    X, labels = _labelled_matrix(vectors)
    scatter = discriminant.fit_scatter_arrays(X, labels)
    m = "auto" if args.dimensions == "auto" else int(args.dimensions)
    reduction = discriminant.reduce(scatter, m)
    Z = discriminant.project(reduction, X)
    priors = (0.5, 0.5) if args.priors == "equal" else None
    model = clf.train(Z, labels, priors=priors, reduction=reduction)
    metadata = {k: table_meta[k] for k in
                ("bank", "mode", "levels", "duration_s", "fragment_count")
                if k in table_meta}
    metadata["training_counts"] = {label: labels.count(label)
                                   for label in scatter.class_labels}
    clf.save_model(args.out, model, metadata)
    print(f"trained m={reduction.retained} model "
          f"(saved information {reduction.saved_information:.2f}%) -> {args.out}")
    return 0


def cmd_classify(args) -> int:
    model, _ = clf.load_model(args.model)
    vectors, _ = features.read_feature_table(args.features)
    decisions = []
    for fv in vectors:
        z = np.atleast_1d(fv.values @ model.reduction.projection)
        decisions.append(clf.classify(model, z, lead_name=fv.lead_name,
                                      subject_id=fv.subject_id,
                                      fragment_index=fv.fragment_index))
    lines = ["subject_id,lead,fragment_index,z,h,label"]
    for d in decisions:
        lines.append(f"{d.subject_id},{d.lead_name},{d.fragment_index},"
                     f"{d.z!r},{d.h!r},{d.label}")
    signal_io.atomic_write_text(args.out, "\n".join(lines) + "\n")
    if args.patients:
        by_subject: dict = {}
        for d in decisions:
            by_subject.setdefault(d.subject_id, []).append(d)
        rows = ["subject_id,mean_h,label,decisions,problem_leads"]
        for subject in sorted(by_subject):
            ds = by_subject[subject]
            if args.per_lead_mean:
                collapsed = []
                by_lead: dict = {}
                for d in ds:
                    by_lead.setdefault(d.lead_name, []).append(d)
                for lead, group in by_lead.items():
                    mean_h = float(np.mean([g.h for g in group]))
                    mean_z = float(np.mean([g.z for g in group]))
                    collapsed.append(clf.Decision(lead_name=lead, z=mean_z, h=mean_h,
                                                  label=group[0].label,
                                                  subject_id=subject))
                ds = collapsed
            summary = clf.aggregate_patient(ds)
            rows.append(f"{subject},{summary.mean_h!r},{summary.label},{len(ds)},"
                        + ";".join(summary.problem_leads))
        signal_io.atomic_write_text(args.patients, "\n".join(rows) + "\n")
    print(f"classified {len(decisions)} fragments -> {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    model, _ = clf.load_model(args.model)
    vectors, _ = features.read_feature_table(args.features)
    X, labels = _labelled_matrix(vectors)
    Z = discriminant.project(model.reduction, X)
    report = clf.evaluate(model, Z, labels, bins=args.bins)
    lines = [
        f"# threshold={report.threshold!r}",
        f"# count_class1={report.counts[0]}",
        f"# count_class2={report.counts[1]}",
        f"# misclassified_class1={report.misclassified[0]}",
        f"# misclassified_class2={report.misclassified[1]}",
        f"# rate_class1={report.rates[0]!r}",
        f"# rate_class2={report.rates[1]!r}",
        "bin_low,bin_high,count_class1,count_class2",
    ]
    for i in range(len(report.histogram_class1)):
        lines.append(f"{report.bin_edges[i]!r},{report.bin_edges[i + 1]!r},"
                     f"{report.histogram_class1[i]},{report.histogram_class2[i]}")
    signal_io.atomic_write_text(args.out, "\n".join(lines) + "\n")
    if args.svg:
        signal_io.atomic_write_text(args.svg, _histogram_svg(report))
    print(f"misclassification: class1 {report.misclassified[0]}/{report.counts[0]}, "
          f"class2 {report.misclassified[1]}/{report.counts[1]} -> {args.out}")
    return 0


def cmd_spectrum(args) -> int:
    if bool(args.channel) == bool(args.lead):
        raise DomainError("pass exactly one of --channel or --lead")
    record = signal_io.load_record(args.record)
    if args.channel:
        series = record.channels[args.channel]
    else:
        series = signal_io.derive_leads(record).leads[args.lead]
    spectrum = dft(series, record.sampling_rate)
    n = len(spectrum)
    lines = ["k,freq_hz,power"]
    freqs = spectrum.frequencies_hz()
    for k in range(n // 2 + 1):
        lines.append(f"{k},{freqs[k]!r},{spectrum.power[k]!r}")
    signal_io.atomic_write_text(args.out, "\n".join(lines) + "\n")
    print(f"wrote {n // 2 + 1} spectrum bins to {args.out}")
    return 0


def _histogram_svg(report, width: int = 640, height: int = 420) -> str:
    """Minimal two-panel histogram rendering with the threshold line."""
    margin, panel_h = 40, (height - 3 * 40) // 2
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>']
    edges = report.bin_edges
    if len(edges) >= 2:
        lo, hi = float(edges[0]), float(edges[-1])
        span = hi - lo or 1.0
        for panel, (hist, title) in enumerate(
                [(report.histogram_class1, "class 1 (healthy)"),
                 (report.histogram_class2, "class 2 (sick)")]):
            top = margin + panel * (panel_h + margin)
            peak = max(int(hist.max()), 1)
            parts.append(f'<text x="{margin}" y="{top - 8}" font-size="13" '
                         f'font-family="sans-serif">{title}</text>')
            parts.append(f'<line x1="{margin}" y1="{top + panel_h}" x2="{width - margin}" '
                         f'y2="{top + panel_h}" stroke="black"/>')
            for i, count in enumerate(hist):
                x0 = margin + (float(edges[i]) - lo) / span * (width - 2 * margin)
                x1 = margin + (float(edges[i + 1]) - lo) / span * (width - 2 * margin)
                bar = int(count) / peak * (panel_h - 10)
                parts.append(f'<rect x="{x0:.2f}" y="{top + panel_h - bar:.2f}" '
                             f'width="{max(x1 - x0 - 1, 1):.2f}" height="{bar:.2f}" '
                             f'fill="#4477aa"/>')
            if report.threshold is not None and lo <= report.threshold <= hi:
                xt = margin + (report.threshold - lo) / span * (width - 2 * margin)
                parts.append(f'<line x1="{xt:.2f}" y1="{top}" x2="{xt:.2f}" '
                             f'y2="{top + panel_h}" stroke="#cc3311" '
                             f'stroke-dasharray="6,3"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: missing-file: {exc}", file=sys.stderr)
        return EXIT_MISSING_FILE
    except (DataFormatError, InsufficientDataError) as exc:
        print(f"error: data-format: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except NumericalError as exc:
        print(f"error: numerical: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (DomainError, EcghfError) as exc:
        print(f"error: domain: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
