"""Cross-validation, sweeps, exports and timing for the learners.

Subspace methods are evaluated by projecting train and test columns and
classifying with 1-NN; ``lrc`` and ``crc`` classify raw features directly.
Accuracy is per-fold micro-accuracy, summarized by the mean and the
population standard deviation over folds.
"""

from __future__ import annotations

import csv
import dataclasses
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .. import classify, dataset, features, subspace
from ..graph import class_means
from ..subspace import InsufficientEigenpairsError, LearnerConfig
from . import synthetic

SUBSPACE_METHODS = tuple(subspace.LEARNERS)
REGRESSION_METHODS = ("lrc", "crc")
METHODS = SUBSPACE_METHODS + REGRESSION_METHODS
LARGE_DATASET = 1500


class ExperimentError(RuntimeError):
    """A module error annotated with the method and fold it came from."""


@dataclass
class ExperimentSpec:
    """Everything needed to reproduce one experiment.

    ``source`` is ``"synthetic"``, ``"csv"`` or ``"images"``; ``path`` points
    at the CSV file or image root. ``protocol`` is ``"kfold:k"``, ``"loo"``
    or ``"first:n"``. ``learners`` maps a method name to its LearnerConfig
    (missing methods use ``default_learner``).
    """

    methods: tuple[str, ...] = ("cdlpp",)
    protocol: str = "kfold:2"
    source: str = "synthetic"
    path: str | None = None
    synthetic: dict = field(default_factory=dict)
    features: str = "raw"
    lbp_grid: tuple[int, int] = (8, 8)
    image_shape: tuple[int, int] | None = None
    default_learner: LearnerConfig = field(default_factory=LearnerConfig)
    learners: dict = field(default_factory=dict)
    dims: tuple[int, ...] = ()
    betas: tuple[float, ...] = ()
    crc_lambda: float | None = None
    out_dir: str | None = None
    seed: int = 0
    n_jobs: int = 1
    data: dataset.SampleMatrix | None = field(default=None, repr=False)

    def __post_init__(self):
        self.methods = tuple(self.methods)
        if not self.methods:
            raise ValueError("method list is empty")
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}; expected one of {METHODS}")
        for name in ("dims", "betas"):
            vals = tuple(getattr(self, name))
            if any(b <= a for a, b in zip(vals, vals[1:])):
                raise ValueError(f"{name} must be strictly increasing, got {vals}")
            setattr(self, name, vals)
        if any(b < 0 for b in self.betas):
            raise ValueError("beta values must be nonnegative")
        parse_protocol(self.protocol)

    def learner(self, method: str) -> LearnerConfig:
        return self.learners.get(method, self.default_learner)


@dataclass
class MethodResult:
    method: str
    fold_accuracies: np.ndarray
    d: int | None
    train_seconds: float
    predictions: list = field(default_factory=list, repr=False)
    test_indices: list = field(default_factory=list, repr=False)

    @property
    def mean(self) -> float:
        return float(np.mean(self.fold_accuracies))

    @property
    def std(self) -> float:
        return float(np.std(self.fold_accuracies))

    @property
    def n_folds(self) -> int:
        return len(self.fold_accuracies)


@dataclass
class ExperimentReport:
    protocol: str
    n_folds: int
    results: list = field(default_factory=list)
    curve: list = field(default_factory=list)

    def result(self, method: str) -> MethodResult:
        for r in self.results:
            if r.method == method:
                return r
        raise KeyError(method)


# ---------------------------------------------------------------- data

def parse_protocol(protocol: str):
    kind, _, arg = protocol.partition(":")
    if kind == "kfold" and arg.isdigit() and int(arg) >= 2:
        return kind, int(arg)
    if kind in ("loo", "leave-one-out") and not arg:
        return "loo", None
    if kind == "first" and arg.isdigit() and int(arg) >= 1:
        return kind, int(arg)
    raise ValueError(f"invalid protocol {protocol!r}; use kfold:k, loo or first:n")


def make_split(ds: dataset.SampleMatrix, protocol: str) -> dataset.SplitPlan:
    kind, arg = parse_protocol(protocol)
    if kind == "kfold":
        return dataset.kfold_split(ds, arg)
    if kind == "loo":
        return dataset.leave_one_out_split(ds)
    return dataset.first_n_per_class_split(ds, arg)


def load_data(spec: ExperimentSpec) -> dataset.SampleMatrix:
    """Load (or generate) the dataset and apply the feature transform."""
    if spec.data is not None:
        ds = spec.data
    elif spec.source == "synthetic":
        params = {"seed": spec.seed, **spec.synthetic}
        kind = params.pop("generator", "gaussian")
        if kind not in synthetic.GENERATORS:
            raise ValueError(f"unknown synthetic generator {kind!r}; "
                             f"expected one of {tuple(synthetic.GENERATORS)}")
        ds = synthetic.GENERATORS[kind](**params)
    elif spec.source == "csv":
        ds = dataset.load_matrix_file(spec.path)
    elif spec.source == "images":
        ds = dataset.load_image_dir(spec.path)
    else:
        raise ValueError(f"unknown data source {spec.source!r}")
    if spec.features == "lbp":
        shape = ds.image_shape or spec.image_shape
        if shape is None:
            raise ValueError("LBP features need image data or an image_shape setting")
        ds = ds.with_data(features.lbp_features(ds.data, shape, features.LbpConfig(*spec.lbp_grid)))
    elif spec.features != "raw":
        raise ValueError(f"unknown feature choice {spec.features!r}")
    return ds


def default_beta(n_samples: int) -> float:
    """0.1 for small collections, 1 for large ones (more than 1500 samples)."""
    return 1.0 if n_samples > LARGE_DATASET else 0.1


# ---------------------------------------------------------------- folds

def _fit_fold(method, X, y, cfg):
    t0 = time.perf_counter()
    basis = subspace.fit(method, X, y, cfg)
    return basis, time.perf_counter() - t0


def _regression_predict(method, Xtr, ytr, Xte, crc_lambda):
    t0 = time.perf_counter()
    gallery = classify.GalleryModel(Xtr, ytr, crc_lambda)
    elapsed = time.perf_counter() - t0
    rule = classify.lrc_classify if method == "lrc" else classify.crc_classify
    return np.array([rule(gallery, q) for q in Xte.T]), elapsed


def _nn_predict(basis, Xtr, ytr, Xte):
    gallery = classify.GalleryModel(subspace.project(basis, Xtr), ytr)
    return classify.nn_classify_many(gallery, subspace.project(basis, Xte))


def _run_folds(func, plan, n_jobs):
    folds = list(enumerate(plan))
    if n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            # map keeps fold order
            return list(pool.map(lambda f: func(*f), folds))
    return [func(i, fold) for i, fold in folds]


def evaluate_method(ds, plan, method, cfg, crc_lambda=None, n_jobs=1) -> MethodResult:
    X, y = ds.data, ds.labels

    def one(i, fold):
        train, test = fold
        try:
            if method in REGRESSION_METHODS:
                pred, secs = _regression_predict(method, X[:, train], y[train], X[:, test],
                                                 crc_lambda)
                d = None
            else:
                basis, secs = _fit_fold(method, X[:, train], y[train], cfg)
                pred = _nn_predict(basis, X[:, train], y[train], X[:, test])
                d = basis.d
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise ExperimentError(f"{method}, fold {i + 1}/{len(plan)}: {exc}") from exc
        acc = np.count_nonzero(pred == y[test]) / test.size
        return acc, secs, d, pred, test

    out = _run_folds(one, plan, n_jobs)
    return MethodResult(method, np.array([o[0] for o in out]), out[0][2],
                        float(sum(o[1] for o in out)), [o[3] for o in out],
                        [o[4] for o in out])


def run_cv(spec: ExperimentSpec, ds=None) -> ExperimentReport:
    ds = ds if ds is not None else load_data(spec)
    plan = make_split(ds, spec.protocol)
    report = ExperimentReport(spec.protocol, len(plan))
    for m in spec.methods:
        report.results.append(
            evaluate_method(ds, plan, m, spec.learner(m), spec.crc_lambda, spec.n_jobs))
    return report


def run_dim_sweep(spec: ExperimentSpec, ds=None) -> ExperimentReport:
    """Accuracy per (method, d); unattainable dimensions are marked, not fatal.

    Each fold fits once at the largest requested dimension (or the largest
    attainable one) and evaluates prefixes of the sorted basis.
    """
    ds = ds if ds is not None else load_data(spec)
    plan = make_split(ds, spec.protocol)
    if not spec.dims:
        raise ValueError("dimension sweep needs a non-empty dims list")
    report = ExperimentReport(spec.protocol, len(plan))
    X, y = ds.data, ds.labels
    target = max(spec.dims)
    for m in spec.methods:
        if m in REGRESSION_METHODS:
            report.curve += [{"method": m, "d": d, "accuracy": None, "status": "n/a"}
                             for d in spec.dims]
            continue
        cfg = spec.learner(m).replace(d=target)
        acc = np.full((len(plan), len(spec.dims)), np.nan)
        for i, (train, test) in enumerate(plan):
            try:
                try:
                    basis = subspace.fit(m, X[:, train], y[train], cfg)
                except InsufficientEigenpairsError as exc:
                    if exc.available < 1:
                        continue
                    basis = subspace.fit(m, X[:, train], y[train], cfg.replace(d=exc.available))
            except (ValueError, np.linalg.LinAlgError) as exc:
                raise ExperimentError(f"{m}, fold {i + 1}/{len(plan)}: {exc}") from exc
            for j, d in enumerate(spec.dims):
                if d <= basis.d:
                    pred = _nn_predict(basis.truncate(d), X[:, train], y[train], X[:, test])
                    acc[i, j] = np.count_nonzero(pred == y[test]) / test.size
        rows = []
        for j, d in enumerate(spec.dims):
            col = acc[:, j]
            if np.all(np.isfinite(col)):
                rows.append({"method": m, "d": d, "accuracy": float(col.mean()), "status": "ok"})
            else:
                rows.append({"method": m, "d": d, "accuracy": None, "status": "unattainable"})
        valid = [r["accuracy"] for r in rows if r["accuracy"] is not None]
        for r in rows:
            r["is_max"] = bool(valid) and r["accuracy"] == max(valid)
        report.curve += rows
    return report


def run_beta_sweep(spec: ExperimentSpec, ds=None) -> ExperimentReport:
    """CDLPP accuracy for each beta (default policy when the list is empty)."""
    ds = ds if ds is not None else load_data(spec)
    plan = make_split(ds, spec.protocol)
    betas = spec.betas or (default_beta(ds.n),)
    report = ExperimentReport(spec.protocol, len(plan))
    base = spec.learner("cdlpp")
    for b in betas:
        res = evaluate_method(ds, plan, "cdlpp", base.replace(beta=float(b)), n_jobs=spec.n_jobs)
        res = dataclasses.replace(res, method=f"cdlpp(beta={b:g})")
        report.results.append(res)
        report.curve.append({"beta": float(b), "accuracy": res.mean, "std": res.std})
    return report


def timing_report(report: ExperimentReport) -> list[dict]:
    """Per-method training seconds summed over folds, in the order listed by the experiment."""
    return [{"method": r.method, "seconds": r.train_seconds, "folds": r.n_folds}
            for r in report.results]


# ---------------------------------------------------------------- exports

def export_class_scatter(spec: ExperimentSpec, method: str, ds=None, out_dir=None) -> list[dict]:
    """Class centres projected on the first two bases of ``method``.

    The learner is fitted on the whole dataset. Rows are
    ``{"class_id", "y1", "y2"}`` in class-id order.
    """
    if method not in SUBSPACE_METHODS:
        raise ValueError(f"class scatter needs a subspace method, got {method!r}")
    ds = ds if ds is not None else load_data(spec)
    cfg = spec.learner(method)
    basis = subspace.fit(method, ds.data, ds.labels, cfg.replace(d=cfg.d or 2))
    if basis.d < 2:
        raise ValueError(f"{method} learned {basis.d} direction(s); class scatter needs d >= 2")
    U, _ = class_means(ds.data, ds.labels)
    Y = subspace.project(basis, U)[:2]
    rows = [{"class_id": c + 1, "y1": float(Y[0, c]), "y2": float(Y[1, c])}
            for c in range(U.shape[1])]
    out_dir = out_dir or spec.out_dir
    if out_dir:
        write_csv(Path(out_dir) / f"class_scatter_{method}.csv", rows, ["class_id", "y1", "y2"])
    return rows


def min_center_distance(rows) -> float:
    """Smallest pairwise distance between projected class centres."""
    P = np.array([[r["y1"], r["y2"]] for r in rows])
    diff = P[:, None, :] - P[None, :, :]
    dist = np.sqrt((diff ** 2).sum(-1))
    return float(dist[np.triu_indices(len(P), 1)].min())


def rescale_255(v) -> np.ndarray:
    """Affine map of ``v`` onto 0..255 (min -> 0, max -> 255), as uint8."""
    v = np.asarray(v, dtype=float)
    lo, hi = v.min(), v.max()
    if hi == lo:
        return np.zeros(v.shape, dtype=np.uint8)
    return np.rint((v - lo) * (255.0 / (hi - lo))).astype(np.uint8)


def gini_index(v) -> float:
    """Gini sparsity of ``|v|``: 0 for a flat profile, ``1 - 1/N`` for one spike.

    Uses the sorted-magnitude form ``1 - 2 sum_k (c_k / ||c||_1) (N - k + 1/2) / N``
    with ``c`` sorted ascending and ``k = 1..N``.
    """
    c = np.sort(np.abs(np.asarray(v, dtype=float)).ravel())
    total = c.sum()
    if total == 0:
        return 0.0
    N = c.size
    k = np.arange(1, N + 1)
    return float(1.0 - 2.0 * np.sum((c / total) * (N - k + 0.5) / N))


def export_bases(basis: subspace.ProjectionBasis, image_shape, k=5, out_dir=None, prefix="basis"):
    """Reshape the first ``k`` effective bases to images and tabulate ``|w|``.

    Returns ``(images, abs_values)``: a list of uint8 arrays rescaled to
    0..255 and an ``l x k`` array of magnitudes. With ``out_dir`` the images
    are written as PNG and the magnitudes as CSV (one row per pixel).
    """
    h, w = image_shape
    E = basis.effective
    if E.shape[0] != h * w:
        raise ValueError(f"basis has input dimension {E.shape[0]}, image shape {h}x{w} "
                         f"needs {h * w}")
    k = min(k, E.shape[1])
    images = [rescale_255(E[:, j]).reshape(h, w) for j in range(k)]
    mags = np.abs(E[:, :k])
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for j, img in enumerate(images, start=1):
            Image.fromarray(img).save(out / f"{prefix}_{j}.png")
        header = ["pixel"] + [f"abs_w{j}" for j in range(1, k + 1)]
        rows = [dict(zip(header, [i] + [f"{v:.17g}" for v in mags[i]])) for i in range(h * w)]
        write_csv(out / f"{prefix}_abs.csv", rows, header)
    return images, mags


# ---------------------------------------------------------------- output

def write_csv(path, rows, header):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        wr = csv.DictWriter(fh, fieldnames=header, extrasaction="ignore", lineterminator="\n")
        wr.writeheader()
        for r in rows:
            wr.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in header})


def summary_table(report: ExperimentReport) -> str:
    """Text table with ``mean% +- std%`` per method, as in a results table."""
    lines = [f"Protocol: {report.protocol} ({report.n_folds} folds)",
             f"{'Method':<18}{'Recognition rate':>22}{'Dim':>6}{'Train s':>10}"]
    for r in report.results:
        rate = f"{100 * r.mean:.2f}% +- {100 * r.std:.2f}%"
        dim = "-" if r.d is None else str(r.d)
        lines.append(f"{r.method:<18}{rate:>22}{dim:>6}{r.train_seconds:>10.4f}")
    return "\n".join(lines) + "\n"
