"""Metrics and the cross-domain experiment harness."""

from dataclasses import dataclass, field, replace

import numpy as np

from .filters import BihpfConfig, FreqHpfSpec, LogFilterSpec, bihpf_pipeline
from .netlite import ConvNet, train_classifier
from .numerics import to_grayscale

SWEEP_KINDS = ("cutoff-hpf", "cutoff-lpf", "sigma", "ablation-LF", "rgb-vs-gray")


def accuracy(preds, labels):
    """Fraction correct at threshold 0.5. A score of exactly 0.5 counts as real."""
    preds = np.asarray(preds, dtype=np.float64)
    labels = np.asarray(labels)
    if preds.size == 0:
        raise ValueError("accuracy of an empty prediction set")
    if preds.shape != labels.shape:
        raise ValueError("preds and labels differ in length")
    return float(np.mean((preds > 0.5).astype(int) == labels))


def average_precision(scores, labels):
    """Exact all-threshold AP.

    Every distinct score is a threshold; AP sums precision at each threshold
    weighted by the recall it adds. Tied items form one threshold step, so the
    result does not depend on input order (constant scores give the positive
    prevalence). With distinct scores this is the mean precision at the rank
    of each positive.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels differ in length")
    n_pos = int(np.sum(labels == 1))
    if n_pos == 0:
        raise ValueError("average precision needs at least one positive")
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    tp = np.cumsum(labels[order] == 1)
    # last index of each run of equal scores
    ends = np.r_[np.flatnonzero(s[1:] != s[:-1]), len(s) - 1]
    tp_at = tp[ends]
    gained = np.diff(np.r_[0, tp_at])
    return float(np.sum(gained * tp_at / (ends + 1)) / n_pos)


@dataclass
class EvalResult:
    """Accuracy/AP overall and per test domain.

    ``groups`` holds the Test-/Cross-/All- aggregates: 'test' covers domains
    seen in training, 'cross' the rest, 'all' everything. Group metrics are
    means of the per-domain rows; an empty group is absent.
    """

    accuracy: float
    average_precision: float
    rows: dict  # domain -> (acc, ap)
    groups: dict = field(default_factory=dict)  # 'test'|'cross'|'all' -> (acc, ap)

    def cross_accuracy(self):
        return self.groups["cross"][0]


@dataclass
class SweepResult:
    kind: str
    values: list
    results: list


@dataclass(frozen=True)
class HarnessConfig:
    """Feature extraction plus classifier training settings for one run.

    ``features`` is 'bihpf' (filtered spectrum) or 'pixels' (raw image).
    """

    features: str = "bihpf"
    bihpf: BihpfConfig = field(default_factory=BihpfConfig)
    epochs: int = 20
    batch_size: int = 16
    lr: float = 1e-3
    seed: int = 0


def extract_features(images, cfg):
    """Stack classifier inputs (N, C, h, w) for a batch of RGB images."""
    out = []
    for img in images:
        if cfg.features == "pixels":
            x = to_grayscale(img)[None] if cfg.bihpf.grayscale else np.moveaxis(img, -1, 0)
            out.append(x - 0.5)
        elif cfg.features == "bihpf":
            out.append(bihpf_pipeline(img, cfg.bihpf))
        else:
            raise ValueError(f"unknown feature mode {cfg.features!r}")
    return np.stack(out)


def evaluate(model, feats, test, domain_key, train_domains):
    probs = model.predict(feats)
    tags = np.array(test.domain_tags(domain_key))
    rows = {}
    for d in dict.fromkeys(tags):
        sel = tags == d
        lab = test.labels[sel]
        ap = average_precision(probs[sel], lab) if np.any(lab == 1) else float("nan")
        rows[str(d)] = (accuracy(probs[sel], lab), ap)
    groups = {}
    seen = [d for d in rows if d in train_domains]
    unseen = [d for d in rows if d not in train_domains]
    for name, members in (("test", seen), ("cross", unseen), ("all", list(rows))):
        if members:
            groups[name] = (
                float(np.mean([rows[d][0] for d in members])),
                float(np.mean([rows[d][1] for d in members])),
            )
    overall_ap = average_precision(probs, test.labels) if np.any(test.labels == 1) else float("nan")
    return EvalResult(accuracy(probs, test.labels), overall_ap, rows, groups), probs


def train_on(train, cfg):
    feats = extract_features(train.images, cfg)
    model = ConvNet(feats.shape[1], feats.shape[2], feats.shape[3], seed=cfg.seed)
    curve = train_classifier(
        model, feats, train.labels, epochs=cfg.epochs, batch_size=cfg.batch_size, lr=cfg.lr, seed=cfg.seed
    )
    return model, curve


def run_cross_domain(cfg, train, test, domain_key="category"):
    """Train on ``train`` features, evaluate per domain of ``test``."""
    if test is None or len(test) == 0:
        raise ValueError("experiment has no test domains")
    model, _ = train_on(train, cfg)
    train_domains = set(train.domain_tags(domain_key))
    result, _ = evaluate(model, extract_features(test.images, cfg), test, domain_key, train_domains)
    return result


def sweep_config(kind, value, base):
    """HarnessConfig for one sweep point."""
    b = base.bihpf
    if kind == "cutoff-hpf":
        return replace(base, bihpf=replace(b, hpf=FreqHpfSpec(float(value), "high"), enable_freq_hpf=True))
    if kind == "cutoff-lpf":
        return replace(base, bihpf=replace(b, hpf=FreqHpfSpec(float(value), "low"), enable_freq_hpf=True))
    if kind == "sigma":
        return replace(base, bihpf=replace(b, log=LogFilterSpec(float(value)), enable_pixel_hpf=True))
    if kind == "ablation-LF":
        # value is one of 'none', 'L', 'F', 'LF'
        value = str(value)
        return replace(
            base, bihpf=replace(b, enable_pixel_hpf="L" in value, enable_freq_hpf="F" in value)
        )
    if kind == "rgb-vs-gray":
        return replace(base, bihpf=replace(b, grayscale=str(value) == "gray"))
    raise ValueError(f"unknown sweep kind {kind!r}")


def run_sweep(kind, values, train, test, base=None, domain_key="category"):
    """One full train/eval run per parameter value."""
    if kind not in SWEEP_KINDS:
        raise ValueError(f"unknown sweep kind {kind!r}")
    values = list(values)
    if not values:
        raise ValueError("sweep needs at least one value")
    base = base or HarnessConfig()
    results = [run_cross_domain(sweep_config(kind, v, base), train, test, domain_key) for v in values]
    return SweepResult(kind, values, results)


def format_csv(result):
    lines = ["domain,acc,ap"]
    for d, (acc, ap) in result.rows.items():
        lines.append(f"{d},{acc:.6f},{ap:.6f}")
    for g, (acc, ap) in result.groups.items():
        lines.append(f"[{g}],{acc:.6f},{ap:.6f}")
    return "\n".join(lines) + "\n"


def format_sweep_csv(sweep):
    lines = ["param,domain,acc,ap"]
    for v, res in zip(sweep.values, sweep.results):
        for d, (acc, ap) in res.rows.items():
            lines.append(f"{v},{d},{acc:.6f},{ap:.6f}")
        for g, (acc, ap) in res.groups.items():
            lines.append(f"{v},[{g}],{acc:.6f},{ap:.6f}")
    return "\n".join(lines) + "\n"
