import numpy as np
import pytest
from PIL import Image

from cdlpp import subspace
from cdlpp.dataset import SampleMatrix
from cdlpp.harness import experiment as E
from cdlpp.harness.synthetic import class_grid, gaussian_classes, simplex_means
from cdlpp.subspace import LearnerConfig


@pytest.fixture(scope="module")
def five():
    return gaussian_classes(5, 20, 4, 46, sigma=0.05, offset=0.5, seed=0)


def separated():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(6, 10)) * 0.01 + 1.0
    b = rng.normal(size=(6, 10)) * 0.01
    b[0] += 100.0
    return SampleMatrix(np.c_[a, b], np.repeat([1, 2], 10))


# ------------------------------------------------------------- synthetic data

def test_simplex_equidistant():
    M = simplex_means(5, 6, 3.0)
    D = np.linalg.norm(M[:, :, None] - M[:, None, :], axis=0)
    np.testing.assert_allclose(D[~np.eye(5, dtype=bool)], 3.0, rtol=1e-12)
    with pytest.raises(ValueError):
        simplex_means(5, 3, 1.0)


def test_gaussian_classes_layout():
    ds = gaussian_classes(3, 4, 2, 5, seed=1)
    assert (ds.l, ds.n, ds.p) == (7, 12, 3)
    np.testing.assert_array_equal(ds.labels, np.repeat([1, 2, 3], 4))
    assert np.array_equal(gaussian_classes(3, 4, 2, 5, seed=1).data, ds.data)
    with pytest.raises(ValueError, match="means"):
        gaussian_classes(3, 4, 2, 5, means=np.zeros((3, 3)))


def test_class_grid_layout():
    ds = class_grid()
    assert (ds.p, ds.n, ds.l) == (15, 165, 50)


# ------------------------------------------------------------- experiment spec

def test_spec_validation():
    with pytest.raises(ValueError, match="empty"):
        E.ExperimentSpec(methods=())
    with pytest.raises(ValueError, match="unknown method"):
        E.ExperimentSpec(methods=("src",))
    with pytest.raises(ValueError, match="strictly increasing"):
        E.ExperimentSpec(dims=(2, 2))
    with pytest.raises(ValueError, match="nonnegative"):
        E.ExperimentSpec(betas=(-1.0, 0.0))
    with pytest.raises(ValueError, match="protocol"):
        E.ExperimentSpec(protocol="kfold:1")


@pytest.mark.parametrize("proto, expected", [("kfold:5", ("kfold", 5)), ("loo", ("loo", None)),
                                             ("first:3", ("first", 3))])
def test_parse_protocol(proto, expected):
    assert E.parse_protocol(proto) == expected


def test_default_beta():
    assert E.default_beta(400) == 0.1
    assert E.default_beta(1500) == 0.1
    assert E.default_beta(1501) == 1.0


# ------------------------------------------------------------- cross-validation

@pytest.mark.parametrize("method", E.METHODS)
def test_trivially_separated(method):
    # knn_k=3 keeps the unsupervised LPP graph inside each 5-sample training cluster
    spec = E.ExperimentSpec(methods=(method,), learners={"lda": LearnerConfig(d=1)},
                            default_learner=LearnerConfig(d=1, knn_k=3), data=separated())
    report = E.run_cv(spec)
    r = report.result(method)
    assert r.mean == 1.0 and r.std == 0.0
    assert len(report.results) == 1


def test_report_invariants(five):
    spec = E.ExperimentSpec(methods=("pca", "dlpp", "cdlpp", "crc"), protocol="kfold:4", data=five)
    report = E.run_cv(spec)
    assert report.n_folds == 4
    for r in report.results:
        assert r.n_folds == 4
        assert 0 <= r.mean <= 1 and r.std >= 0
        # independent tally of stored predictions
        tallies = [np.count_nonzero(p == five.labels[t]) / t.size
                   for p, t in zip(r.predictions, r.test_indices)]
        assert tallies == list(r.fold_accuracies)
        m, s = np.mean(tallies), np.sqrt(np.mean((np.array(tallies) - np.mean(tallies)) ** 2))
        assert abs((r.mean - r.std) - (m - s)) <= 1e-12
        assert abs((r.mean + r.std) - (m + s)) <= 1e-12
    again = E.run_cv(spec)
    for a, b in zip(report.results, again.results):
        assert np.array_equal(a.fold_accuracies, b.fold_accuracies)


def test_parallel_folds_match_serial(five):
    s1 = E.ExperimentSpec(methods=("cdlpp",), protocol="kfold:5", data=five)
    s4 = E.ExperimentSpec(methods=("cdlpp",), protocol="kfold:5", data=five, n_jobs=4)
    a, b = E.run_cv(s1).results[0], E.run_cv(s4).results[0]
    assert np.array_equal(a.fold_accuracies, b.fold_accuracies)
    assert all(np.array_equal(x, y) for x, y in zip(a.predictions, b.predictions))


def test_fold_counts():
    ds = gaussian_classes(3, 4, 2, 3, sigma=0.1, offset=1.0, seed=2)
    for proto, k in (("loo", 12), ("first:2", 1), ("kfold:2", 2)):
        spec = E.ExperimentSpec(methods=("lrc",), protocol=proto, data=ds)
        assert E.run_cv(spec).n_folds == k


def test_errors_are_annotated():
    ds = gaussian_classes(3, 4, 2, 3, sigma=0.1, offset=1.0, seed=2)
    spec = E.ExperimentSpec(methods=("lda",), default_learner=LearnerConfig(d=5), data=ds)
    with pytest.raises(E.ExperimentError, match=r"lda, fold 1/2"):
        E.run_cv(spec)


def test_summary_table(five):
    report = E.run_cv(E.ExperimentSpec(methods=("cdlpp",), data=five))
    text = E.summary_table(report)
    assert "Recognition rate" in text and "% +- " in text


# ------------------------------------------------------------- sweeps

def test_dim_sweep_rows(five):
    spec = E.ExperimentSpec(methods=("lda", "cdlpp", "lrc"), dims=(1, 2, 4, 5), data=five)
    curve = E.run_dim_sweep(spec).curve
    assert [(r["method"], r["d"]) for r in curve] == [(m, d) for m in spec.methods for d in spec.dims]
    status = {(r["method"], r["d"]): r["status"] for r in curve}
    assert status[("lda", 5)] == "unattainable"
    assert status[("lrc", 1)] == "n/a"
    acc = {r["d"]: r["accuracy"] for r in curve if r["method"] == "cdlpp"}
    assert acc[4] >= acc[1]
    assert sum(r["is_max"] for r in curve if r["method"] == "cdlpp") >= 1


def test_dim_sweep_matches_direct_fit(five):
    spec = E.ExperimentSpec(methods=("cdlpp",), dims=(2,), data=five)
    swept = E.run_dim_sweep(spec).curve[0]["accuracy"]
    direct = E.run_cv(E.ExperimentSpec(methods=("cdlpp",), data=five,
                                       default_learner=LearnerConfig(d=2))).results[0].mean
    assert swept == direct


def test_beta_zero_equals_cslpp(five):
    sweep = E.run_beta_sweep(E.ExperimentSpec(methods=("cdlpp",), betas=(0.0,), data=five))
    cs = E.run_cv(E.ExperimentSpec(methods=("cslpp",), data=five)).results[0]
    assert sweep.curve[0]["accuracy"] == cs.mean
    assert sweep.results[0].method == "cdlpp(beta=0)"


def test_beta_default_policy(five):
    sweep = E.run_beta_sweep(E.ExperimentSpec(methods=("cdlpp",), data=five))
    assert [r["beta"] for r in sweep.curve] == [0.1]


# ------------------------------------------------------------- exports

def test_class_scatter_rows(five, tmp_path):
    spec = E.ExperimentSpec(methods=("cdlpp",), data=five, out_dir=str(tmp_path))
    rows = E.export_class_scatter(spec, "cdlpp")
    assert [r["class_id"] for r in rows] == [1, 2, 3, 4, 5]
    text = (tmp_path / "class_scatter_cdlpp.csv").read_text().splitlines()
    assert text[0] == "class_id,y1,y2" and len(text) == 6


def test_class_scatter_identical_means():
    rng = np.random.default_rng(0)
    base = rng.normal(size=(5, 6)) + 2
    c3 = rng.normal(size=(5, 6)) + 4
    X = np.c_[base, base[:, ::-1], c3]
    ds = SampleMatrix(X, np.repeat([1, 2, 3], 6))
    rows = E.export_class_scatter(E.ExperimentSpec(data=ds), "pca")
    assert abs(rows[0]["y1"] - rows[1]["y1"]) <= 1e-12
    assert abs(rows[0]["y2"] - rows[1]["y2"]) <= 1e-12


def test_class_scatter_errors(five):
    spec = E.ExperimentSpec(data=five)
    with pytest.raises(ValueError, match="subspace method"):
        E.export_class_scatter(spec, "crc")
    two = SampleMatrix(five.data[:, :40], five.labels[:40])
    with pytest.raises(ValueError, match="d >= 2"):
        E.export_class_scatter(E.ExperimentSpec(data=two, default_learner=LearnerConfig(d=1)), "lda")


def test_rescale_and_coordinate_basis(tmp_path):
    v = np.array([-2.0, 0.0, 3.0])
    r = E.rescale_255(v)
    assert r[0] == 0 and r[2] == 255
    assert np.all(E.rescale_255(np.ones(3)) == 0)
    b = subspace.ProjectionBasis(np.eye(12)[:, :1], np.ones(1))
    images, mags = E.export_bases(b, (3, 4), k=5, out_dir=tmp_path)
    assert len(images) == 1
    img = images[0]
    assert img[0, 0] == 255 and np.count_nonzero(img) == 1
    saved = np.asarray(Image.open(tmp_path / "basis_1.png"))
    assert np.array_equal(saved, img)
    lines = (tmp_path / "basis_abs.csv").read_text().splitlines()
    assert lines[0] == "pixel,abs_w1" and len(lines) == 13
    with pytest.raises(ValueError, match="image shape"):
        E.export_bases(b, (4, 4))


def test_gini_index():
    assert E.gini_index(np.ones(10)) == pytest.approx(0.0, abs=1e-15)
    spike = np.zeros(10)
    spike[3] = -5
    assert E.gini_index(spike) == pytest.approx(0.9)
    assert E.gini_index(np.zeros(4)) == 0.0
    # scale invariant, more concentrated -> larger
    v = np.array([1.0, 2.0, 3.0, 10.0])
    assert E.gini_index(3 * v) == pytest.approx(E.gini_index(v))
    assert E.gini_index([1, 1, 1, 10]) > E.gini_index([1, 2, 3, 4])


def test_cdlpp_first_base_sparser_than_dlpp():
    # 8x8 "images": 4 informative pixels, 60 noise pixels, 10 samples per class
    ds = gaussian_classes(5, 10, 4, 60, sigma=0.05, offset=0.5, seed=0)
    c = subspace.fit_cdlpp(ds.data, ds.labels, LearnerConfig(beta=1.0))
    d = subspace.fit_dlpp(ds.data, ds.labels)
    _, mc = E.export_bases(c, (8, 8), k=1)
    _, md = E.export_bases(d, (8, 8), k=1)
    assert E.gini_index(mc[:, 0]) > E.gini_index(md[:, 0])


# ------------------------------------------------------------- timing

def test_timing_report(five):
    spec = E.ExperimentSpec(methods=("lrc", "cdlpp", "pca"), data=five)
    rows = E.timing_report(E.run_cv(spec))
    assert [r["method"] for r in rows] == ["lrc", "cdlpp", "pca"]
    assert all(r["seconds"] >= 0 and r["folds"] == 2 for r in rows)


# ------------------------------------------------------------- data loading

def test_load_data_sources(tmp_path, image_tree):
    f = tmp_path / "d.csv"
    f.write_text("1,2,1\n3,4,1\n5,6,2\n7,8,2\n")
    assert E.load_data(E.ExperimentSpec(source="csv", path=str(f))).n == 4
    root = image_tree({"a": 2, "b": 2}, size=(10, 10))
    ds = E.load_data(E.ExperimentSpec(source="images", path=str(root), features="lbp", lbp_grid=(2, 2)))
    assert ds.l == 4 * 256 and ds.image_shape is None
    syn = E.load_data(E.ExperimentSpec(synthetic={"generator": "grid", "per_class": 3}))
    assert syn.p == 15
    with pytest.raises(ValueError, match="generator"):
        E.load_data(E.ExperimentSpec(synthetic={"generator": "moons"}))
    with pytest.raises(ValueError, match="image_shape"):
        E.load_data(E.ExperimentSpec(source="csv", path=str(f), features="lbp"))
    with pytest.raises(ValueError, match="source"):
        E.load_data(E.ExperimentSpec(source="hdf5"))


def test_cdlpp_not_faster_than_cslpp():
    # same pipeline plus the beta term; medians absorb scheduler noise
    ds = gaussian_classes(10, 20, 9, 191, sigma=0.05, offset=0.5, seed=1)
    spec = {m: E.ExperimentSpec(methods=(m,), protocol="kfold:5", data=ds) for m in ("cslpp", "cdlpp")}
    secs = {m: [] for m in spec}
    for _ in range(7):
        for m, s in spec.items():
            secs[m].append(E.run_cv(s).results[0].train_seconds)
    cs, cd = np.median(secs["cslpp"]), np.median(secs["cdlpp"])
    assert cd >= 0.9 * cs
